"""
Contêiner binário SLNP para parâmetros das NPPs

b"SLNP", uint16 versão, uint32 componentes; por componente: nome (uint16 + UTF-8),
uint32 blocos; por bloco: nome (uint16 + UTF-8), uint8 ndim, ndim × uint32 dimensões,
dados float32. Inteiros e floats em little-endian.
"""

import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import BinaryIO, Dict, Generator, Union

import numpy as np

from ..utils.errors import DatasetError
from ..utils.logger import setup_logger

logger = setup_logger()

MAGIC = b"SLNP"
VERSION = 1

Components = Dict[str, Dict[str, np.ndarray]]


@contextmanager
def atomic_write(path: Union[str, Path]) -> Generator[BinaryIO, None, None]:
    """Escreve em arquivo temporário no mesmo diretório e renomeia ao final"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, 'wb') as handle:
            yield handle
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(temp, path)
    except BaseException:
        if os.path.exists(temp):
            os.unlink(temp)
        raise


def _name(text: str) -> bytes:
    raw = text.encode('utf-8')
    return struct.pack('<H', len(raw)) + raw


def encode_checkpoint(components: Components) -> bytes:
    chunks = [MAGIC, struct.pack('<HI', VERSION, len(components))]
    for component in sorted(components):
        blocks = components[component]
        chunks.append(_name(component))
        chunks.append(struct.pack('<I', len(blocks)))
        for block in sorted(blocks):
            value = np.asarray(blocks[block])
            chunks.append(_name(block))
            chunks.append(struct.pack('<B', value.ndim))
            chunks.append(struct.pack(f'<{value.ndim}I', *value.shape))
            chunks.append(value.astype('<f4').tobytes())
    return b"".join(chunks)


def save_checkpoint(path: Union[str, Path], components: Components) -> None:
    with atomic_write(path) as handle:
        handle.write(encode_checkpoint(components))
    logger.debug(f"✅ Checkpoint salvo: {path}")


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.offset = 0
        self.source = source

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise DatasetError(f"{self.source}: checkpoint truncado no byte {self.offset} "
                               f"(faltam {self.offset + size - len(self.data)} bytes)")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def name(self) -> str:
        (length,) = self.unpack('<H')
        return self.take(length).decode('utf-8')


def decode_checkpoint(data: bytes, source: str = "<bytes>") -> Components:
    reader = _Reader(data, source)
    if reader.take(4) != MAGIC:
        raise DatasetError(f"{source}: assinatura inválida (esperado SLNP)")
    version, count = reader.unpack('<HI')
    if version != VERSION:
        raise DatasetError(f"{source}: versão {version} não suportada")
    components: Components = {}
    for _ in range(count):
        component = reader.name()
        (blocks,) = reader.unpack('<I')
        components[component] = {}
        for _ in range(blocks):
            block = reader.name()
            (ndim,) = reader.unpack('<B')
            shape = reader.unpack(f'<{ndim}I')
            size = int(np.prod(shape)) if ndim else 1
            payload = reader.take(4 * size)
            components[component][block] = np.frombuffer(payload, dtype='<f4').astype(np.float64).reshape(shape)
    if reader.offset != len(data):
        raise DatasetError(f"{source}: {len(data) - reader.offset} bytes sobrando após o último bloco")
    return components


def load_checkpoint(path: Union[str, Path]) -> Components:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"checkpoint não encontrado: {path}")
    return decode_checkpoint(path.read_bytes(), str(path))
