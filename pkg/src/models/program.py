"""Árvore sintática de programas e consultas SLASH"""

from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Tuple, Union

from .flavors import QueryFlavor

Position = Optional[Tuple[int, int]]


@dataclass(frozen=True)
class Symbol:
    name: str
    kind = "constant-symbol"

    def variables(self) -> FrozenSet[str]:
        return frozenset()

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Integer:
    value: int
    kind = "integer"

    def variables(self) -> FrozenSet[str]:
        return frozenset()

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Variable:
    name: str
    kind = "variable"

    def variables(self) -> FrozenSet[str]:
        return frozenset({self.name})

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-' ou '*'
    left: "Term"
    right: "Term"
    kind = "arithmetic-expression"

    def variables(self) -> FrozenSet[str]:
        return self.left.variables() | self.right.variables()

    def __str__(self) -> str:
        return f"{_operand(self.left)}{self.op}{_operand(self.right)}"


Term = Union[Symbol, Integer, Variable, BinOp]


def _operand(term: Term) -> str:
    return f"({term})" if isinstance(term, BinOp) else str(term)


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: Tuple[Term, ...] = ()
    outcome: Optional[Term] = None  # presente só em literais aritméticos de NPP h(x)=v

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def signature(self) -> Tuple[str, int, bool]:
        return self.predicate, self.arity, self.outcome is not None

    def variables(self) -> FrozenSet[str]:
        names = frozenset().union(*(a.variables() for a in self.args))
        if self.outcome is not None:
            names |= self.outcome.variables()
        return names

    def __str__(self) -> str:
        text = self.predicate
        if self.args:
            text += "(" + ",".join(str(a) for a in self.args) + ")"
        if self.outcome is not None:
            text += f"={self.outcome}"
        return text


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False

    def variables(self) -> FrozenSet[str]:
        return self.atom.variables()

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negated else str(self.atom)


@dataclass(frozen=True)
class Comparison:
    """Literal aritmético embutido: = != < <= > >="""
    op: str
    left: Term
    right: Term

    def variables(self) -> FrozenSet[str]:
        return self.left.variables() | self.right.variables()

    def __str__(self) -> str:
        left = str(self.left)
        if isinstance(_leftmost(self.left), Symbol):
            # o lado esquerdo não pode começar por constante (seria lido como átomo)
            left = f"({left})"
        return f"{left} {self.op} {self.right}"


def _leftmost(term: Term) -> Term:
    while isinstance(term, BinOp):
        term = term.left
    return term


BodyElement = Union[Literal, Comparison]


def bound_variables(body: Tuple[BodyElement, ...]) -> FrozenSet[str]:
    """
    Variáveis ligadas por um corpo: as de literais positivos, mais as atribuídas
    por igualdades V = expr cujo outro lado já está ligado (até o ponto fixo)
    """
    bound = set()
    for element in body:
        if isinstance(element, Literal) and not element.negated:
            bound |= element.variables()
    changed = True
    while changed:
        changed = False
        for element in body:
            if not isinstance(element, Comparison) or element.op != "=":
                continue
            for target, source in ((element.left, element.right), (element.right, element.left)):
                if isinstance(target, Variable) and target.name not in bound \
                        and source.variables() <= bound:
                    bound.add(target.name)
                    changed = True
    return frozenset(bound)


def unsafe_variables(head: Optional[Atom], body: Tuple[BodyElement, ...]) -> FrozenSet[str]:
    """Variáveis da cabeça, de literais negados ou de comparações que o corpo não liga"""
    needed = set(head.variables()) if head is not None else set()
    for element in body:
        if isinstance(element, Comparison) or element.negated:
            needed |= element.variables()
    return frozenset(needed - bound_variables(body))


def _body_source(body: Tuple[BodyElement, ...]) -> str:
    return ", ".join(str(b) for b in body)


@dataclass(frozen=True)
class RuleAst:
    head: Optional[Atom]
    body: Tuple[BodyElement, ...] = ()
    position: Position = field(default=None, compare=False, repr=False)

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    @property
    def is_fact(self) -> bool:
        return self.head is not None and not self.body

    def __str__(self) -> str:
        if self.head is None:
            return f":- {_body_source(self.body)}."
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {_body_source(self.body)}."


@dataclass(frozen=True)
class NppDeclAst:
    name: str
    args: Tuple[Term, ...]
    outcomes: Tuple[Term, ...]
    body: Tuple[BodyElement, ...] = ()
    binding: str = ""
    position: Position = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.binding:
            object.__setattr__(self, "binding", self.name)

    @property
    def atom(self) -> Atom:
        return Atom(self.name, self.args)

    def __str__(self) -> str:
        text = f"npp({self.atom},[{','.join(str(v) for v in self.outcomes)}]"
        if self.binding != self.name:
            text += f",{self.binding}"
        text += ")"
        if self.body:
            text += f" :- {_body_source(self.body)}"
        return text + "."


@dataclass(frozen=True)
class MarkedArg:
    marker: str  # '+' dado, '-' consultado
    term: Term

    def __str__(self) -> str:
        return f"{self.marker}{self.term}"


@dataclass(frozen=True)
class FlavoredAtom:
    npp: str
    args: Tuple[MarkedArg, ...]
    flavor: QueryFlavor = QueryFlavor.CONDITIONAL
    position: Position = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return f"{self.npp}({','.join(str(a) for a in self.args)})."


@dataclass(frozen=True)
class QueryAst:
    constraints: Tuple[RuleAst, ...] = ()
    flavored: Tuple[FlavoredAtom, ...] = ()

    def flavor_for(self, npp: str) -> QueryFlavor:
        for atom in self.flavored:
            if atom.npp == npp:
                return atom.flavor
        return QueryFlavor.CONDITIONAL

    def to_source(self) -> str:
        lines = [str(c) for c in self.constraints] + [str(f) for f in self.flavored]
        return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class ProgramAst:
    """Π = Π^asp ∪ Π^npp"""
    rules: Tuple[RuleAst, ...] = ()
    npps: Tuple[NppDeclAst, ...] = ()

    def npp(self, name: str) -> Optional[NppDeclAst]:
        for decl in self.npps:
            if decl.name == name:
                return decl
        return None

    @property
    def npp_names(self) -> FrozenSet[str]:
        return frozenset(d.name for d in self.npps)

    def to_source(self) -> str:
        """Forma canônica; reanalisá-la reproduz a mesma árvore"""
        lines = [str(d) for d in self.npps] + [str(r) for r in self.rules]
        return "\n".join(lines) + ("\n" if lines else "")
