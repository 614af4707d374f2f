"""Configuração de treino (arquivo JSON) validada com pydantic"""

import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .flavors import NppFlavor
from ..utils.errors import UsageError


class NppBinding(BaseModel):
    """Implementação registrada para uma NPP do programa"""
    model_config = ConfigDict(extra='forbid')

    flavor: NppFlavor
    input_shape: List[int] = Field(min_length=1, max_length=2)   # [H, W] ou [D]
    hidden: List[int] = Field(default_factory=lambda: [128])
    latent_shape: Optional[List[int]] = Field(default=None, min_length=1, max_length=2)
    encoder: Optional[str] = None          # grupo de encoder compartilhado (padrão: o nome da NPP)
    pieces: List[int] = Field(default_factory=lambda: [4])
    components: Optional[int] = Field(default=None, ge=1)
    leaf: Literal['gaussian', 'categorical'] = 'gaussian'
    states: int = Field(default=2, ge=2)
    learning_rate: Optional[float] = Field(default=None, gt=0)

    @field_validator('input_shape', 'hidden', 'pieces')
    @classmethod
    def _positive(cls, value: List[int]) -> List[int]:
        if any(v < 1 for v in value):
            raise ValueError("dimensões precisam ser positivas")
        return value

    @model_validator(mode='after')
    def _latent_for_joint(self) -> "NppBinding":
        if self.flavor is NppFlavor.NN_PC and self.latent_shape is None:
            raise ValueError("NPP nn+pc precisa de latent_shape")
        return self


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    learning_rate: float = Field(default=0.005, gt=0)
    beta1: float = Field(default=0.9, gt=0, lt=1)
    beta2: float = Field(default=0.999, gt=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)


class ScheduleConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    period: int = Field(default=1, ge=1)     # lotes por fase na descida coordenada
    weighting: Literal['unit', 'likelihood'] = 'unit'


class DatasetConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    kind: Literal['mnist_addition', 'attribute_world']
    mnist_dir: Optional[str] = None
    train_limit: Optional[int] = Field(default=None, ge=2)
    test_limit: Optional[int] = Field(default=None, ge=1)
    downscale: Optional[Literal[14, 8]] = None
    missing: float = Field(default=0.0, ge=0, lt=1)
    count: int = Field(default=5000, ge=1)
    test_count: int = Field(default=500, ge=1)
    noise: float = Field(default=0.1, ge=0)
    feature_dim: int = Field(default=32, ge=1)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    program_path: str
    npp_bindings: Dict[str, NppBinding]
    dataset: DatasetConfig
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    batch_size: int = Field(default=100, ge=1)
    epochs: int = Field(default=1, ge=1)
    seed: Optional[int] = None
    output_dir: str = "runs/default"

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TrainConfig":
        """
        Lê e valida o arquivo JSON

        Raises:
            UsageError: arquivo ausente, JSON inválido ou esquema violado
        """
        path = Path(path)
        if not path.exists():
            raise UsageError(f"arquivo de configuração não encontrado: {path}")
        try:
            data = json.loads(path.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise UsageError(f"{path}: JSON inválido ({e})") from None
        try:
            config = cls.model_validate(data)
        except ValidationError as e:
            raise UsageError(f"{path}: configuração inválida: {e}") from None
        program = Path(config.program_path)
        if not program.is_absolute():
            config.program_path = str(path.parent / program)
        return config
