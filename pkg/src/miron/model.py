"""Declarative behavior model: rules over condition atoms and action atoms.

This is the symbolic form a designer writes (via the textual model format)
before it is lowered to weight matrices.  Every atom has a stable string key
used for dictionary indexing and for the reference interpreter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .mirons import MironDefinition

# value expressions are concatenations of literal and variable parts,
# e.g. "visitor:" + $visitorName -> (("lit", "visitor:"), ("var", "visitorName"))
ValueExpr = tuple[tuple[str, str], ...]


def render_expr(expr: ValueExpr) -> str:
    parts = []
    for kind, value in expr:
        parts.append('"%s"' % value if kind == "lit" else "$" + value)
    return "+".join(parts)


def literal_expr(value: str) -> ValueExpr:
    return (("lit", value),)


# --- condition atoms ----------------------------------------------------------

@dataclass(frozen=True)
class MironPerceived:
    miron: str
    channel: str = "outer"

    @property
    def key(self) -> str:
        return f"mi:{self.channel}:{self.miron}"


@dataclass(frozen=True)
class MironCompleted:
    name: str

    @property
    def key(self) -> str:
        return f"af:{self.name}"


@dataclass(frozen=True)
class VariableState:
    variable: str
    state: str  # filled | empty | changed | unchanged

    @property
    def key(self) -> str:
        return f"ne:{self.variable}:{self.state}"


@dataclass(frozen=True)
class InternalState:
    state: str
    # True tests the activated line, False the inhibited line.  None encodes
    # the untestable reset state: representable so validation can reject it.
    value: bool | None

    @property
    def key(self) -> str:
        if self.value is None:
            return f"wm:{self.state}:reset"
        return f"wm:{self.state}:" + ("activated" if self.value else "inhibited")


ConditionAtom = Union[MironPerceived, MironCompleted, VariableState, InternalState]

VARIABLE_STATES = ("filled", "empty", "changed", "unchanged")
WM_LINES = (True, False)


# --- action atoms --------------------------------------------------------------

@dataclass(frozen=True)
class ProduceMiron:
    miron: str
    channel: str  # inner | outer
    criterion_mode: str = "seeded_random"
    criterion_index: int | None = None

    @property
    def key(self) -> str:
        suffix = f":{self.criterion_index}" if self.criterion_mode == "indexed" else ""
        return f"produce:{self.channel}:{self.miron}{suffix}"


@dataclass(frozen=True)
class SetState:
    state: str
    value: str  # true | false | reset

    @property
    def key(self) -> str:
        return f"set:{self.state}:{self.value}"


@dataclass(frozen=True)
class WriteVariable:
    variable: str
    expression: ValueExpr

    @property
    def key(self) -> str:
        return f"write:{self.variable}:{render_expr(self.expression)}"


@dataclass(frozen=True)
class InvokeInternal:
    action: str
    args: tuple[tuple[str, ValueExpr], ...] = ()

    @property
    def key(self) -> str:
        rendered = ",".join(f"{name}={render_expr(expr)}" for name, expr in self.args)
        return f"invoke:{self.action}" + (f":{rendered}" if rendered else "")


ActionAtom = Union[ProduceMiron, SetState, WriteVariable, InvokeInternal]


# --- rules ----------------------------------------------------------------------

@dataclass(frozen=True)
class Branch:
    atoms: tuple[ConditionAtom, ...] = ()
    from_rules: tuple[int, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.atoms) + len(self.from_rules)


@dataclass(frozen=True)
class RuleDecl:
    rule_id: int
    name: str
    branches: tuple[Branch, ...] = ()
    actions: tuple[ActionAtom, ...] = ()
    inhibits: tuple[int, ...] = ()


@dataclass
class BehaviorModel:
    mirons: list[MironDefinition] = field(default_factory=list)
    rules: list[RuleDecl] = field(default_factory=list)

    def rule_by_id(self, rule_id: int) -> RuleDecl:
        for rule in self.rules:
            if rule.rule_id == rule_id:
                return rule
        raise KeyError(rule_id)

    def successors(self, rule_id: int) -> list[int]:
        """Rules reachable by chaining: those with a branch fed by rule_id."""
        out = []
        for rule in self.rules:
            if any(rule_id in branch.from_rules for branch in rule.branches):
                out.append(rule.rule_id)
        return out

    def miron_names(self) -> set[str]:
        return {m.name for m in self.mirons}
