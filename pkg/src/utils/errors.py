"""Hierarquia de erros do SLASH; cada família carrega o código de saída da CLI"""

from typing import Iterable, Optional, Sequence, Tuple


class SlashError(Exception):
    """Erro base"""
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self.__str__())

    def __str__(self) -> str:
        if self.line is not None:
            return f"{self.line}:{self.column}: {self.message}"
        return self.message


class UsageError(SlashError):
    exit_code = 1


# --- erros de programa / semântica (saída 2) ---

class ProgramError(SlashError):
    exit_code = 2


class SlashSyntaxError(ProgramError):
    """Erro de sintaxe com posição e conjunto de tokens esperados"""

    def __init__(self, message: str, line: int, column: int, expected: Iterable[str] = ()):
        self.expected = frozenset(expected)
        if self.expected:
            message = f"{message} (esperado: {', '.join(sorted(self.expected))})"
        super().__init__(message, line, column)


class SafetyError(ProgramError):
    pass


class NppInHeadError(ProgramError):
    pass


class DuplicateNppError(ProgramError):
    pass


class ArityError(ProgramError):
    pass


class UndeclaredNppError(ProgramError):
    pass


class UnsupportedFlavorError(ProgramError):
    pass


class GroundingError(ProgramError):
    pass


class NonStratifiedError(ProgramError):
    def __init__(self, message: str, cycle: Sequence[Tuple[str, str]] = ()):
        self.cycle = list(cycle)
        super().__init__(message)


class ModelExplosionError(ProgramError):
    pass


class DatasetError(ProgramError):
    pass


# --- erros numéricos (saída 3) ---

class NumericError(SlashError):
    exit_code = 3


class ZeroQueryProbabilityError(NumericError):
    pass


class NonFiniteError(NumericError):
    pass


class ShapeError(NumericError):
    pass
