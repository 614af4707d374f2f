import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

from .config import load_config, resolve_path

DEFAULT_NAME = "slash"


def setup_logger(name: str = DEFAULT_NAME, level: Optional[str] = None) -> logging.Logger:
    """
    Configura e retorna o logger do sistema

    Args:
        name: Nome do logger
        level: Nível que substitui o do arquivo de configuração (ex.: vindo do --verbose)

    Returns:
        Logger configurado
    """
    config = load_config()
    log_config = config['logging']

    # Criar diretório de logs se não existir
    log_file = resolve_path(log_config['file'])
    os.makedirs(os.path.dirname(log_file), exist_ok=True)

    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, (level or log_config['level']).upper()))
    logger.propagate = False

    # Remover handlers existentes
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()

    # Handler para arquivo com rotação
    file_handler = RotatingFileHandler(
        log_file,
        maxBytes=log_config.get('max_bytes', 10485760),  # 10MB
        backupCount=log_config.get('backup_count', 5),
        encoding='utf-8'
    )

    # Console vai para stderr: stdout fica reservado às saídas estruturadas
    console_handler = logging.StreamHandler()

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    file_handler.setFormatter(formatter)
    console_handler.setFormatter(formatter)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)

    return logger


def set_verbosity(level: str, name: str = DEFAULT_NAME) -> None:
    """Ajusta o nível do logger já configurado"""
    logging.getLogger(name).setLevel(getattr(logging, level.upper()))
