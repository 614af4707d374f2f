"""Frontend: gramática canônica, análise e validação"""

from .parser import parse_program, parse_query, validate_program

__all__ = ['parse_program', 'parse_query', 'validate_program']
