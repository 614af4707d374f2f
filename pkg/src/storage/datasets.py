"""Leitura de arquivos IDX (MNIST) e conjuntos sintéticos em JSON-lines"""

import gzip
import json
import struct
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple, Union

import numpy as np

from .checkpoint import atomic_write
from ..utils.errors import DatasetError

IMAGES_MAGIC = 2051
LABELS_MAGIC = 2049
SCHEMA_VERSION = 1


def _read_bytes(path: Path) -> bytes:
    if not path.exists():
        raise DatasetError(f"arquivo não encontrado: {path}")
    if path.suffix == '.gz':
        with gzip.open(path, 'rb') as handle:
            return handle.read()
    return path.read_bytes()


def read_idx(path: Union[str, Path], expected_magic: int) -> np.ndarray:
    """
    Lê um arquivo IDX big-endian de bytes sem sinal

    Args:
        path: Arquivo (.gz aceito)
        expected_magic: 2051 para imagens, 2049 para rótulos

    Returns:
        Array uint8 com o formato declarado no cabeçalho
    """
    path = Path(path)
    data = _read_bytes(path)
    if len(data) < 4:
        raise DatasetError(f"{path}: arquivo truncado no byte {len(data)} (cabeçalho incompleto)")
    (magic,) = struct.unpack('>I', data[:4])
    if magic != expected_magic:
        raise DatasetError(f"{path}: número mágico {magic}, esperado {expected_magic}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise DatasetError(f"{path}: arquivo truncado no byte {len(data)} (cabeçalho de {header} bytes)")
    shape = struct.unpack(f'>{ndim}I', data[4:header])
    expected = header + int(np.prod(shape))
    if len(data) < expected:
        raise DatasetError(f"{path}: arquivo truncado no byte {len(data)} (esperado {expected} bytes)")
    return np.frombuffer(data, dtype=np.uint8, count=int(np.prod(shape)), offset=header).reshape(shape)


def write_jsonl(path: Union[str, Path], kind: str, records: Iterable[Dict[str, Any]], **meta: Any) -> None:
    """Primeira linha é o cabeçalho {"schema_version", "kind", ...}; depois um registro por linha"""
    header = {'schema_version': SCHEMA_VERSION, 'kind': kind, **meta}
    lines = [json.dumps(header, sort_keys=False)] + [json.dumps(r, sort_keys=False) for r in records]
    with atomic_write(path) as handle:
        handle.write(("\n".join(lines) + "\n").encode('utf-8'))


def read_jsonl(path: Union[str, Path], kind: str) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    path = Path(path)
    lines = [line for line in _read_bytes(path).decode('utf-8').splitlines() if line.strip()]
    if not lines:
        raise DatasetError(f"{path}: arquivo vazio")
    try:
        header = json.loads(lines[0])
        records = [json.loads(line) for line in lines[1:]]
    except json.JSONDecodeError as e:
        raise DatasetError(f"{path}: JSON inválido ({e})") from None
    if header.get('schema_version') != SCHEMA_VERSION:
        raise DatasetError(f"{path}: schema_version {header.get('schema_version')} não suportada")
    if header.get('kind') != kind:
        raise DatasetError(f"{path}: conjunto do tipo {header.get('kind')}, esperado {kind}")
    return header, records
