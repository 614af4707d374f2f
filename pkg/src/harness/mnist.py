"""
MNIST-Addition: leitura dos arquivos IDX, pares de imagens, pixels ausentes e redução de resolução
"""

from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from decouple import config as env_config

from ..models.samples import AdditionExample, BatchExample, LabeledImage, Tensor
from ..storage.datasets import IMAGES_MAGIC, LABELS_MAGIC, read_idx
from ..utils.errors import DatasetError, UsageError
from ..utils.logger import setup_logger

logger = setup_logger()

SPLITS = {
    'train': ('train-images-idx3-ubyte', 'train-labels-idx1-ubyte'),
    'test': ('t10k-images-idx3-ubyte', 't10k-labels-idx1-ubyte'),
}
ADDITION_QUERY = ":- not addition(i1,i2,{label})."


def load_idx(images_path: Union[str, Path], labels_path: Union[str, Path]) -> List[LabeledImage]:
    """
    Lê um par de arquivos IDX de imagens e rótulos

    Args:
        images_path: Arquivo de imagens (mágico 2051)
        labels_path: Arquivo de rótulos (mágico 2049)

    Returns:
        Imagens com pixels em [0,1]
    """
    images = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC)
    if images.ndim != 3:
        raise DatasetError(f"{images_path}: esperado tensor de 3 dimensões, lido {images.ndim}")
    if images.shape[0] != labels.shape[0]:
        raise DatasetError(f"{images.shape[0]} imagens e {labels.shape[0]} rótulos")
    pixels = images.astype(np.float64) / 255.0
    return [LabeledImage(Tensor(pixels[i]), int(labels[i])) for i in range(images.shape[0])]


def mnist_directory(configured: Optional[str] = None) -> Path:
    """Diretório dos arquivos IDX: configuração do treino ou variável SLASH_MNIST_DIR"""
    directory = configured or env_config('SLASH_MNIST_DIR', default='')
    if not directory:
        raise UsageError("diretório do MNIST não informado (dataset.mnist_dir ou SLASH_MNIST_DIR)")
    return Path(directory)


def _split_file(directory: Path, name: str) -> Path:
    for candidate in (directory / name, directory / f"{name}.gz"):
        if candidate.exists():
            return candidate
    raise DatasetError(f"arquivo {name} não encontrado em {directory}")


def load_split(directory: Union[str, Path], split: str, limit: Optional[int] = None) -> List[LabeledImage]:
    if split not in SPLITS:
        raise UsageError(f"partição desconhecida: {split}")
    directory = Path(directory)
    images_name, labels_name = SPLITS[split]
    images = load_idx(_split_file(directory, images_name), _split_file(directory, labels_name))
    logger.info(f"✅ MNIST {split}: {len(images)} imagens")
    return images[:limit] if limit is not None else images


def make_addition_pairs(images: Sequence[LabeledImage], seed: int) -> List[AdditionExample]:
    """Pareamento disjunto de imagens consecutivas após embaralhar com a semente: ⌊N/2⌋ exemplos"""
    order = np.random.default_rng(seed).permutation(len(images))
    pairs = []
    for k in range(len(images) // 2):
        first, second = images[order[2 * k]], images[order[2 * k + 1]]
        pairs.append(AdditionExample(first, second, first.label + second.label))
    return pairs


def mask_image(image: LabeledImage, fraction: float, rng: np.random.Generator) -> LabeledImage:
    """Remove exatamente round(fraction × pixels) pixels escolhidos uniformemente"""
    if not 0.0 <= fraction < 1.0:
        raise UsageError(f"fração de pixels ausentes fora de [0,1): {fraction}")
    values = image.pixels.values
    size = values.size
    mask = np.ones(size, dtype=bool) if image.pixels.mask is None else image.pixels.mask.reshape(-1).copy()
    hidden = rng.choice(size, size=int(round(fraction * size)), replace=False)
    mask[hidden] = False
    return LabeledImage(Tensor(values, mask.reshape(values.shape)), image.label, image.classes)


def apply_missing(example: AdditionExample, fraction: float, seed: int) -> AdditionExample:
    rng = np.random.default_rng(seed)
    first = mask_image(example.first, fraction, rng)
    second = mask_image(example.second, fraction, rng)
    return AdditionExample(first, second, example.label)


def mask_images(images: Sequence[LabeledImage], fraction: float, seed: int) -> List[LabeledImage]:
    rng = np.random.default_rng(seed)
    return [mask_image(image, fraction, rng) for image in images]


def _pool(values: np.ndarray, factor: int) -> np.ndarray:
    h, w = values.shape
    return values.reshape(h // factor, factor, w // factor, factor)


def downscale(image: LabeledImage, size: int) -> LabeledImage:
    """
    Pooling médio 28×28 -> 14×14 (fator 2) ou 8×8 (recorte central 24×24, fator 3)

    Com máscara, cada bloco usa só os pixels observados; blocos sem nenhum ficam ausentes.
    Os experimentos mascaram depois da redução (prepare_test_images, addition_dataset).
    """
    values = image.pixels.values
    if values.shape != (28, 28):
        raise DatasetError(f"redução espera imagens 28×28, recebeu {values.shape}")
    if size == 14:
        factor, crop = 2, slice(0, 28)
    elif size == 8:
        factor, crop = 3, slice(2, 26)
    else:
        raise UsageError(f"resolução reduzida não suportada: {size}")
    values = values[crop, crop]
    if image.pixels.mask is None:
        return LabeledImage(Tensor(_pool(values, factor).mean(axis=(1, 3))), image.label, image.classes)
    mask = image.pixels.mask[crop, crop]
    counts = _pool(mask.astype(np.float64), factor).sum(axis=(1, 3))
    sums = _pool(np.where(mask, values, 0.0), factor).sum(axis=(1, 3))
    observed = counts > 0
    pooled = np.divide(sums, counts, out=np.zeros_like(sums), where=observed)
    return LabeledImage(Tensor(pooled, observed), image.label, image.classes)


def to_batch_example(example: AdditionExample) -> BatchExample:
    return BatchExample(
        bindings={'i1': example.first.pixels, 'i2': example.second.pixels},
        query=ADDITION_QUERY.format(label=example.label),
    )


def prepare_images(images: Sequence[LabeledImage], size: Optional[int]) -> List[LabeledImage]:
    return list(images) if size is None else [downscale(image, size) for image in images]


def prepare_test_images(images: Sequence[LabeledImage], size: Optional[int], missing: float,
                        seed: int) -> List[LabeledImage]:
    """Reduz a resolução e só depois remove round(missing × pixels) da entrada final da NPP"""
    images = prepare_images(images, size)
    return mask_images(images, missing, seed) if missing > 0.0 else images


def addition_dataset(images: Sequence[LabeledImage], seed: int, missing: float = 0.0) -> Tuple[
        List[AdditionExample], List[BatchExample]]:
    """Pares, máscaras opcionais e exemplos de treino"""
    pairs = make_addition_pairs(images, seed)
    if missing > 0.0:
        pairs = [apply_missing(pair, missing, seed + k) for k, pair in enumerate(pairs)]
    return pairs, [to_batch_example(pair) for pair in pairs]
