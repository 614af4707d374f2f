"""Utilitários do sistema"""

from .config import load_config, resolve_path, default_seed
from .logger import setup_logger
from .validators import validate_probability_vector, validate_mask

__all__ = ['load_config', 'resolve_path', 'default_seed', 'setup_logger',
           'validate_probability_vector', 'validate_mask']
