from enum import Enum
from typing import FrozenSet


class NppFlavor(str, Enum):
    """Composição de uma NPP: rede neural, circuito probabilístico ou ambos"""
    NN = "nn"
    PC = "pc"
    NN_PC = "nn+pc"

    @property
    def generative(self) -> bool:
        return self is not NppFlavor.NN

    @property
    def supported_queries(self) -> FrozenSet["QueryFlavor"]:
        if self is NppFlavor.NN:
            return frozenset({QueryFlavor.CONDITIONAL})
        return frozenset(QueryFlavor)


class QueryFlavor(str, Enum):
    """Distribuição pedida a uma NPP, codificada pelos marcadores +/- da consulta"""
    CONDITIONAL = "conditional"  # h(+X,-C) -> P(C|X)
    LIKELIHOOD = "likelihood"    # h(-X,+C) -> P(X|C)
    JOINT = "joint"              # h(-X,-C) -> P(X,C)
    PRIOR = "prior"              # h(-C)    -> P(C)

    @classmethod
    def from_markers(cls, x_marker: str, c_marker: str) -> "QueryFlavor":
        """Mapeia o par (marcador de X, marcador de C); '' indica X ausente"""
        table = {
            ('+', '-'): cls.CONDITIONAL,
            ('-', '+'): cls.LIKELIHOOD,
            ('-', '-'): cls.JOINT,
            ('', '-'): cls.PRIOR,
        }
        try:
            return table[(x_marker, c_marker)]
        except KeyError:
            raise ValueError(f"combinação de marcadores não suportada: X={x_marker or '∅'}, C={c_marker}")

    @property
    def normalized(self) -> bool:
        """Saídas que formam distribuição sobre os resultados"""
        return self in (QueryFlavor.CONDITIONAL, QueryFlavor.PRIOR)
