"""Persistência: checkpoints SLNP, arquivos IDX e JSON-lines"""

from .checkpoint import load_checkpoint, save_checkpoint
from .datasets import read_idx, read_jsonl, write_jsonl

__all__ = ['load_checkpoint', 'save_checkpoint', 'read_idx', 'read_jsonl', 'write_jsonl']
