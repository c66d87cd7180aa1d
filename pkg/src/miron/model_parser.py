"""Parser for the textual behavior-model format.

A model document is a sequence of `miron` and `rule` blocks:

    miron say_Hello {
      modality: speech
      direction: outer
      template: "<Hi|Hello|Good {Morning:phaseOfDay}>"
      slot phaseOfDay: "(morning|afternoon|evening|night)"
      data speechAct = "greetings"
    }

    rule greet_back {
      when perceived say_Hello outer and variable politeForm is filled and state greetingsExpected is true
      then set greetingsExpected false and produce say_Hello outer
    }

Each `when` line is one branch (branches OR together); atoms on a line AND
together.  Rule ids are assigned in declaration order starting at 100.
The full grammar lives in docs/model_format.md.
"""
from __future__ import annotations

import re

from .errors import DuplicateMironName, ModelSyntaxError, UnknownReference
from .mirons import MironDefinition, SlotDecl, make_definition
from .model import (
    BehaviorModel,
    Branch,
    InternalState,
    InvokeInternal,
    MironCompleted,
    MironPerceived,
    ProduceMiron,
    RuleDecl,
    SetState,
    ValueExpr,
    VariableState,
    WriteVariable,
)

FIRST_RULE_ID = 100

# events the runtime emits without a declaration: unrecognized input and
# session startup; rules may test them like any perceived miron
RESERVED_INTENTS = ("no_match", "session_start")

_TOKEN_RE = re.compile(r'"([^"]*)"|([:=,+{}])|([^\s"=:,+{}]+)')

_STR = "str"
_WORD = "word"


def _tokenize(line: str, lineno: int) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    for m in _TOKEN_RE.finditer(line):
        between = line[pos : m.start()].strip()
        if between:
            raise ModelSyntaxError(lineno, f"cannot read {between!r}")
        pos = m.end()
        if m.group(1) is not None:
            tokens.append((_STR, m.group(1)))
        elif m.group(2) is not None:
            tokens.append((_WORD, m.group(2)))
        else:
            tokens.append((_WORD, m.group(3)))
    if line[pos:].strip():
        raise ModelSyntaxError(lineno, f"cannot read {line[pos:].strip()!r}")
    return tokens


def _strip_comment(line: str) -> str:
    out = []
    in_string = False
    for ch in line:
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            break
        out.append(ch)
    return "".join(out)


class _Cursor:
    def __init__(self, tokens: list[tuple[str, str]], lineno: int):
        self.tokens = tokens
        self.i = 0
        self.lineno = lineno

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self, expect_kind: str | None = None) -> tuple[str, str]:
        if self.done():
            raise ModelSyntaxError(self.lineno, "unexpected end of line")
        kind, value = self.tokens[self.i]
        self.i += 1
        if expect_kind and kind != expect_kind:
            raise ModelSyntaxError(self.lineno, f"expected {expect_kind}, got {value!r}")
        return kind, value

    def expect_word(self, *choices: str) -> str:
        kind, value = self.next(_WORD)
        if choices and value not in choices:
            raise ModelSyntaxError(
                self.lineno, f"expected one of {'/'.join(choices)}, got {value!r}"
            )
        return value

    def take_word(self, *choices: str) -> str | None:
        nxt = self.peek()
        if nxt and nxt[0] == _WORD and nxt[1] in choices:
            self.i += 1
            return nxt[1]
        return None


def parse_model(source: str) -> BehaviorModel:
    """Parse a model document into mirons plus symbolic rules."""
    mirons: list[MironDefinition] = []
    raw_rules: list[dict] = []
    lines = source.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        stripped = _strip_comment(lines[i]).strip()
        i += 1
        if not stripped:
            continue
        tokens = _tokenize(stripped, lineno)
        cur = _Cursor(tokens, lineno)
        keyword = cur.expect_word("miron", "rule")
        _, name = cur.next(_WORD)
        cur.expect_word("{")
        if not cur.done():
            raise ModelSyntaxError(lineno, "block header must end with '{'")
        body, i = _collect_block(lines, i, lineno)
        if keyword == "miron":
            if name in RESERVED_INTENTS:
                raise ModelSyntaxError(lineno, f"'{name}' is a reserved intent name")
            if any(m.name == name for m in mirons):
                raise DuplicateMironName(name)
            mirons.append(_parse_miron_block(name, body))
        else:
            raw_rules.append({"name": name, "lineno": lineno, "body": body})

    if len({r["name"] for r in raw_rules}) != len(raw_rules):
        seen = set()
        for r in raw_rules:
            if r["name"] in seen:
                raise ModelSyntaxError(r["lineno"], f"rule '{r['name']}' declared twice")
            seen.add(r["name"])

    rule_ids = {r["name"]: FIRST_RULE_ID + i for i, r in enumerate(raw_rules)}
    known_mirons = {m.name for m in mirons} | set(RESERVED_INTENTS)
    rules = [
        _parse_rule_block(raw, rule_ids, known_mirons)
        for raw in raw_rules
    ]
    return BehaviorModel(mirons=mirons, rules=rules)


def _collect_block(lines: list[str], i: int, open_line: int) -> tuple[list[tuple[int, str]], int]:
    body = []
    while i < len(lines):
        lineno = i + 1
        stripped = _strip_comment(lines[i]).strip()
        i += 1
        if stripped == "}":
            return body, i
        if stripped:
            body.append((lineno, stripped))
    raise ModelSyntaxError(open_line, "unterminated block, missing '}'")


def _parse_miron_block(name: str, body: list[tuple[int, str]]) -> MironDefinition:
    modality = "speech"
    direction = "outer"
    template_sources: list[str] = []
    slots: list[SlotDecl] = []
    data: dict[str, str] = {}
    for lineno, line in body:
        cur = _Cursor(_tokenize(line, lineno), lineno)
        head = cur.expect_word("modality", "direction", "template", "slot", "data")
        if head == "modality":
            cur.expect_word(":")
            modality = cur.next(_WORD)[1]
        elif head == "direction":
            cur.expect_word(":")
            direction = cur.expect_word("inner", "outer")
        elif head == "template":
            cur.expect_word(":")
            template_sources.append(cur.next(_STR)[1])
        elif head == "slot":
            slot_name = cur.next(_WORD)[1]
            pattern = None
            if cur.take_word(":"):
                pattern = cur.next(_STR)[1]
            slots.append(SlotDecl(slot_name, pattern))
        else:  # data
            key = cur.next(_WORD)[1]
            cur.expect_word("=")
            data[key] = cur.next(_STR)[1]
        if not cur.done():
            raise ModelSyntaxError(lineno, f"trailing tokens after {head} entry")
    try:
        return make_definition(
            name, template_sources, slots=slots, data_slots=data,
            modality=modality, direction=direction,
        )
    except Exception as exc:
        lineno = body[0][0] if body else 0
        raise ModelSyntaxError(lineno, f"in miron '{name}': {exc}") from exc


def _parse_rule_block(raw: dict, rule_ids: dict[str, int], known_mirons: set[str]) -> RuleDecl:
    branches: list[Branch] = []
    actions: list = []
    inhibits: list[int] = []
    for lineno, line in raw["body"]:
        cur = _Cursor(_tokenize(line, lineno), lineno)
        head = cur.expect_word("when", "then", "inhibits")
        if head == "when":
            branches.append(_parse_branch(cur, rule_ids, known_mirons))
        elif head == "then":
            actions.extend(_parse_actions(cur, known_mirons))
        else:
            while True:
                target = cur.next(_WORD)[1]
                if target not in rule_ids:
                    raise UnknownReference(target, lineno)
                inhibits.append(rule_ids[target])
                if not cur.take_word(","):
                    break
        if not cur.done():
            raise ModelSyntaxError(lineno, "trailing tokens")
    return RuleDecl(
        rule_id=rule_ids[raw["name"]],
        name=raw["name"],
        branches=tuple(branches),
        actions=tuple(actions),
        inhibits=tuple(inhibits),
    )


def _parse_branch(cur: _Cursor, rule_ids: dict[str, int], known_mirons: set[str]) -> Branch:
    atoms = []
    from_rules = []
    while True:
        head = cur.expect_word("perceived", "completed", "variable", "state", "after")
        if head == "perceived":
            miron = cur.next(_WORD)[1]
            if miron not in known_mirons:
                raise UnknownReference(miron, cur.lineno)
            channel = cur.take_word("inner", "outer") or "outer"
            atoms.append(MironPerceived(miron, channel))
        elif head == "completed":
            atoms.append(MironCompleted(cur.next(_WORD)[1]))
        elif head == "variable":
            variable = cur.next(_WORD)[1]
            cur.expect_word("is")
            state = cur.expect_word("filled", "empty", "changed", "unchanged")
            atoms.append(VariableState(variable, state))
        elif head == "state":
            state = cur.next(_WORD)[1]
            cur.expect_word("is")
            value = cur.expect_word("true", "false", "reset")
            # a reset test is representable but never valid; validation rejects it
            atoms.append(InternalState(state, {"true": True, "false": False, "reset": None}[value]))
        else:  # after
            target = cur.next(_WORD)[1]
            if target not in rule_ids:
                raise UnknownReference(target, cur.lineno)
            from_rules.append(rule_ids[target])
        if not cur.take_word("and"):
            break
    return Branch(atoms=tuple(atoms), from_rules=tuple(from_rules))


def _parse_actions(cur: _Cursor, known_mirons: set[str]) -> list:
    actions = []
    while True:
        head = cur.expect_word("produce", "set", "write", "invoke")
        if head == "produce":
            miron = cur.next(_WORD)[1]
            if miron not in known_mirons:
                raise UnknownReference(miron, cur.lineno)
            channel = cur.take_word("inner", "outer") or "outer"
            mode, index = "seeded_random", None
            if cur.take_word("index"):
                mode, index = "indexed", int(cur.next(_WORD)[1])
            actions.append(ProduceMiron(miron, channel, mode, index))
        elif head == "set":
            state = cur.next(_WORD)[1]
            value = cur.expect_word("true", "false", "reset")
            actions.append(SetState(state, value))
        elif head == "write":
            variable = cur.next(_WORD)[1]
            cur.expect_word("=")
            actions.append(WriteVariable(variable, _parse_expr(cur)))
        else:  # invoke
            name = cur.next(_WORD)[1]
            args = []
            if cur.take_word("with"):
                while True:
                    arg = cur.next(_WORD)[1]
                    cur.expect_word("=")
                    args.append((arg, _parse_expr(cur)))
                    if not cur.take_word(","):
                        break
            actions.append(InvokeInternal(name, tuple(args)))
        if not cur.take_word("and"):
            break
    return actions


def _parse_expr(cur: _Cursor) -> ValueExpr:
    parts = []
    while True:
        kind, value = cur.next()
        if kind == _STR:
            parts.append(("lit", value))
        elif value.startswith("$") and len(value) > 1:
            parts.append(("var", value[1:]))
        else:
            raise ModelSyntaxError(cur.lineno, f"expected string or $variable, got {value!r}")
        if not cur.take_word("+"):
            break
    return tuple(parts)
