from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

Constant = Union[int, str]
NppKey = Tuple[str, Tuple[Constant, ...]]  # (nome da NPP, argumentos da instância)


def format_constant(value: Constant) -> str:
    return str(value)


@dataclass(frozen=True)
class GroundAtom:
    """Átomo sem variáveis; outcome presente apenas nos átomos c=v de r^npp"""
    predicate: str
    args: Tuple[Constant, ...] = ()
    outcome: Optional[Constant] = None

    @property
    def npp_key(self) -> NppKey:
        return self.predicate, self.args

    def __str__(self) -> str:
        text = self.predicate
        if self.args:
            text += "(" + ",".join(format_constant(a) for a in self.args) + ")"
        if self.outcome is not None:
            text += f"={format_constant(self.outcome)}"
        return text


@dataclass(frozen=True)
class GroundRule:
    """Regra normal ou restrição (head None) sobre ids de átomos"""
    head: Optional[int]
    positive: Tuple[int, ...] = ()
    negative: Tuple[int, ...] = ()

    @property
    def is_constraint(self) -> bool:
        return self.head is None


@dataclass(frozen=True)
class ChoiceRule:
    """1{h(x)=v1;...;h(x)=vn}1: alternativas na ordem dos resultados declarados"""
    key: NppKey
    alternatives: Tuple[int, ...]
    binding: str = ""

    @property
    def size(self) -> int:
        return len(self.alternatives)


@dataclass
class HerbrandStats:
    atoms: int = 0
    rules: int = 0
    choices: int = 0

    def to_dict(self) -> dict:
        return {'atoms': self.atoms, 'rules': self.rules, 'choices': self.choices}


@dataclass
class GroundProgram:
    atoms: List[GroundAtom] = field(default_factory=list)
    rules: List[GroundRule] = field(default_factory=list)
    choices: List[ChoiceRule] = field(default_factory=list)
    atom_ids: Dict[GroundAtom, int] = field(default_factory=dict)
    npp_instances: Dict[int, NppKey] = field(default_factory=dict)  # índice da escolha -> instância

    @property
    def r_npp(self) -> FrozenSet[GroundAtom]:
        return frozenset(self.atoms[i] for c in self.choices for i in c.alternatives)

    @property
    def choice_atom_ids(self) -> FrozenSet[int]:
        return frozenset(i for c in self.choices for i in c.alternatives)

    def intern(self, atom: GroundAtom) -> int:
        """Id denso por ordem de primeira aparição"""
        atom_id = self.atom_ids.get(atom)
        if atom_id is None:
            atom_id = len(self.atoms)
            self.atoms.append(atom)
            self.atom_ids[atom] = atom_id
        return atom_id

    def lookup(self, atom: GroundAtom) -> Optional[int]:
        return self.atom_ids.get(atom)

    def choice_index(self, key: NppKey) -> Optional[int]:
        for index, choice in enumerate(self.choices):
            if choice.key == key:
                return index
        return None

    def format_rule(self, rule: GroundRule) -> str:
        body = [str(self.atoms[i]) for i in rule.positive] + [f"not {self.atoms[i]}" for i in rule.negative]
        if rule.head is None:
            return f":- {', '.join(body)}."
        if not body:
            return f"{self.atoms[rule.head]}."
        return f"{self.atoms[rule.head]} :- {', '.join(body)}."

    def format_choice(self, choice: ChoiceRule) -> str:
        return "1{" + ";".join(str(self.atoms[i]) for i in choice.alternatives) + "}1."

    def dump(self) -> str:
        """Texto linha a linha (escolhas primeiro, depois regras) para depuração e testes dourados"""
        lines = [self.format_choice(c) for c in self.choices] + [self.format_rule(r) for r in self.rules]
        return "\n".join(lines) + ("\n" if lines else "")
