"""Template micro-DSL: parsing, enumeration and regex lowering.

A template is readable text annotated with three bracket kinds:

    ( ... )          optional part (nestable)
    < a | b | c >    grammar field: alternative sub-phrases
    {Surface:slot}   slot reference; bare {slot} uses the slot name as surface

The same tree drives both directions: enumeration of surface strings for
generation, and a regular expression for recognition.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence, Union

from .errors import EmptyAlternative, TemplateError, UnbalancedBracket, UnknownSlot

# Fragment emitted for a slot with no binding; expansions containing it are suppressed.
MISSING = object()

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# No space is inserted before a fragment starting with one of these, so
# "what time is it(, please)?" expands to "what time is it, please?".
_NO_SPACE_BEFORE = ",.;:!?"


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class OptionalPart:
    children: tuple["TemplateNode", ...]


@dataclass(frozen=True)
class GrammarField:
    alternatives: tuple[tuple["TemplateNode", ...], ...]


@dataclass(frozen=True)
class SlotRef:
    slot_name: str
    surface_hint: str


TemplateNode = Union[Literal, OptionalPart, GrammarField, SlotRef]


@dataclass(frozen=True)
class Template:
    source: str
    nodes: tuple[TemplateNode, ...]


def parse_template(source: str, declared_slots: set[str]) -> Template:
    """Parse template source against the owning definition's slot names."""
    if not source or not source.strip():
        raise TemplateError("template source is empty")
    parser = _Parser(source, declared_slots)
    nodes = parser.parse_sequence(stop=frozenset())
    if parser.i < len(source):
        raise UnbalancedBracket(parser.i, f"unexpected '{source[parser.i]}'")
    if not nodes:
        raise EmptyAlternative(0)
    return Template(source=source, nodes=tuple(nodes))


class _Parser:
    """Recursive-descent parser; delimiters are consumed by their openers."""

    def __init__(self, source: str, declared_slots: set[str]):
        self.src = source
        self.slots = declared_slots
        self.i = 0

    def parse_sequence(self, stop: frozenset[str]) -> list[TemplateNode]:
        nodes: list[TemplateNode] = []
        buf: list[str] = []

        def flush():
            text = "".join(buf).strip()
            buf.clear()
            if text:
                nodes.append(Literal(text))

        while self.i < len(self.src):
            ch = self.src[self.i]
            if ch in stop:
                break
            if ch == "(":
                flush()
                nodes.append(self._parse_optional())
            elif ch == "<":
                flush()
                nodes.append(self._parse_field())
            elif ch == "{":
                flush()
                nodes.append(self._parse_slot())
            elif ch in ")>}":
                raise UnbalancedBracket(self.i, f"unexpected '{ch}'")
            else:
                buf.append(ch)
                self.i += 1
        flush()
        return nodes

    def _parse_optional(self) -> OptionalPart:
        start = self.i
        self.i += 1  # '('
        children = self.parse_sequence(stop=frozenset(")"))
        if self.i >= len(self.src):
            raise UnbalancedBracket(start, "missing ')'")
        self.i += 1  # ')'
        if not children:
            raise EmptyAlternative(start)
        return OptionalPart(tuple(children))

    def _parse_field(self) -> GrammarField:
        start = self.i
        self.i += 1  # '<'
        alternatives: list[tuple[TemplateNode, ...]] = []
        while True:
            alt_start = self.i
            nodes = self.parse_sequence(stop=frozenset("|>"))
            if self.i >= len(self.src):
                raise UnbalancedBracket(start, "missing '>'")
            if not nodes:
                raise EmptyAlternative(alt_start)
            alternatives.append(tuple(nodes))
            if self.src[self.i] == "|":
                self.i += 1
                continue
            self.i += 1  # '>'
            return GrammarField(tuple(alternatives))

    def _parse_slot(self) -> SlotRef:
        start = self.i
        end = self.src.find("}", start)
        if end < 0:
            raise UnbalancedBracket(start, "missing '}'")
        body = self.src[start + 1 : end]
        self.i = end + 1
        if not body.strip():
            raise EmptyAlternative(start)
        if ":" in body:
            surface, _, name = body.rpartition(":")
            surface = surface.strip()
        else:
            surface, name = "", body
        name = name.strip()
        if not _IDENT_RE.match(name):
            raise TemplateError(f"bad slot name {name!r} at position {start}")
        if name not in self.slots:
            raise UnknownSlot(name)
        return SlotRef(slot_name=name, surface_hint=surface or name)


def render_template(nodes: Sequence[TemplateNode]) -> str:
    """Render a tree back to canonical source text (inverse of parsing)."""
    out: list[str] = []
    for node in nodes:
        if isinstance(node, Literal):
            if out:
                out.append(" ")
            out.append(node.text)
        elif isinstance(node, OptionalPart):
            out.append("(" + render_template(node.children) + ")")
        elif isinstance(node, GrammarField):
            out.append("<" + "|".join(render_template(a) for a in node.alternatives) + ">")
        elif isinstance(node, SlotRef):
            out.append("{%s:%s}" % (node.surface_hint, node.slot_name))
        else:  # pragma: no cover
            raise TypeError(node)
    return "".join(out)


def join_fragments(fragments: Sequence[str]) -> str:
    """Assemble surface fragments with single spaces, gluing punctuation."""
    out: list[str] = []
    for frag in fragments:
        if not frag:
            continue
        if out and frag[0] not in _NO_SPACE_BEFORE:
            out.append(" ")
        out.append(frag)
    return "".join(out)


def combination_count(nodes: Sequence[TemplateNode]) -> int:
    """Raw number of expansion combinations, before suppression and dedup."""
    total = 1
    for node in nodes:
        if isinstance(node, (Literal, SlotRef)):
            n = 1
        elif isinstance(node, OptionalPart):
            n = combination_count(node.children) + 1
        elif isinstance(node, GrammarField):
            n = sum(combination_count(a) for a in node.alternatives)
        else:  # pragma: no cover
            raise TypeError(node)
        total *= n
    return total


def iter_variants(
    nodes: Sequence[TemplateNode], bindings: Mapping[str, str]
) -> Iterator[tuple]:
    """Yield every expansion as a tuple of fragments, in canonical order.

    Order is leftmost-major: grammar-field alternatives in declared order,
    optional parts present before absent.  Unbound or empty slots yield the
    MISSING sentinel so callers can suppress those expansions.
    """
    per_node: list[list[tuple]] = []
    for node in nodes:
        if isinstance(node, Literal):
            per_node.append([(node.text,)])
        elif isinstance(node, SlotRef):
            value = bindings.get(node.slot_name)
            per_node.append([(value,) if value else (MISSING,)])
        elif isinstance(node, OptionalPart):
            variants = list(iter_variants(node.children, bindings))
            variants.append(())
            per_node.append(variants)
        elif isinstance(node, GrammarField):
            variants = []
            for alt in node.alternatives:
                variants.extend(iter_variants(alt, bindings))
            per_node.append(variants)
        else:  # pragma: no cover
            raise TypeError(node)
    for combo in itertools.product(*per_node):
        flat: tuple = ()
        for part in combo:
            flat += part
        yield flat


# --- regex lowering ---------------------------------------------------------

_WORD = "w"
_PUNCT = "p"
_START = "s"  # "nothing emitted yet": all earlier nodes were absent optionals


def _category(ch: str) -> str:
    return _WORD if re.match(r"\w", ch) else _PUNCT


def _gap(prev_lasts: set[str], firsts: set[str]) -> str:
    if prev_lasts == {_START}:
        return ""
    if _START in prev_lasts:
        return r"\s*"
    if prev_lasts == {_WORD} and firsts == {_WORD}:
        return r"\s+"
    return r"\s*"


class GroupNamer:
    """Unique regex group names; remembers which slot each group captures."""

    def __init__(self):
        self.group_to_slot: dict[str, str] = {}

    def declare(self, slot_name: str) -> str:
        group = f"g{len(self.group_to_slot)}"
        self.group_to_slot[group] = slot_name
        return group


def first_literal_tokens(node: TemplateNode) -> set[str]:
    """Literal tokens that can open this node's surface text."""
    if isinstance(node, Literal):
        return {node.text.split()[0]}
    if isinstance(node, SlotRef):
        return set()
    if isinstance(node, OptionalPart):
        return _seq_first_tokens(node.children)
    if isinstance(node, GrammarField):
        out: set[str] = set()
        for alt in node.alternatives:
            out |= _seq_first_tokens(alt)
        return out
    raise TypeError(node)  # pragma: no cover


def _seq_first_tokens(nodes: Sequence[TemplateNode]) -> set[str]:
    out: set[str] = set()
    for node in nodes:
        out |= first_literal_tokens(node)
        if not _nullable(node):
            break
    return out


def _nullable(node: TemplateNode) -> bool:
    if isinstance(node, OptionalPart):
        return True
    if isinstance(node, GrammarField):
        return any(all(_nullable(n) for n in alt) for alt in node.alternatives)
    return False


def compile_sequence(
    nodes: Sequence[TemplateNode],
    slot_patterns: Mapping[str, str],
    namer: GroupNamer,
    follow_after: frozenset[str] = frozenset(),
) -> tuple[str, set[str], set[str]]:
    """Lower a node sequence to (pattern, first-char set, last-char set).

    Word-to-word node boundaries demand whitespace; boundaries touching
    punctuation allow it to be absent, mirroring join_fragments glue.
    Optional parts wrap their leading gap inside the group so their absence
    never strands a mandatory separator.  `follow_after` carries the literal
    tokens that may follow this whole sequence; default slot captures are
    fenced by the follow tokens at their position, so a slot never swallows
    the literal that should terminate it.
    """
    parts: list[str] = []
    prev_lasts: set[str] = {_START}
    seq_firsts: set[str] = set()
    saw_mandatory = False
    for i, node in enumerate(nodes):
        follow = _follow_tokens(nodes, i + 1, follow_after)
        frag, firsts, lasts, is_optional = _compile_node(node, slot_patterns, namer, follow)
        gap = _gap(prev_lasts, firsts)
        if is_optional:
            parts.append(f"(?:{gap}{frag})?")
            prev_lasts = prev_lasts | lasts
        else:
            parts.append(gap + frag)
            prev_lasts = lasts
        if not saw_mandatory:
            seq_firsts |= firsts
            saw_mandatory = not is_optional
    return "".join(parts), seq_firsts, prev_lasts


def _follow_tokens(
    nodes: Sequence[TemplateNode], start: int, follow_after: frozenset[str]
) -> frozenset[str]:
    out: set[str] = set()
    for node in nodes[start:]:
        out |= first_literal_tokens(node)
        if not _nullable(node):
            return frozenset(out)
    return frozenset(out) | follow_after


def _default_slot_pattern(group: str, follow: frozenset[str]) -> str:
    """Lazy non-empty token run that stops at the next literal."""
    if follow:
        alts = "|".join(re.escape(tok) for tok in sorted(follow))
        token = rf"(?:(?!(?:{alts})(?:\s|$))\S+)"
    else:
        token = r"\S+"
    return rf"(?P<{group}>{token}(?:\s+{token})*?)"


def _compile_node(
    node: TemplateNode,
    slot_patterns: Mapping[str, str],
    namer: GroupNamer,
    follow: frozenset[str],
) -> tuple[str, set[str], set[str], bool]:
    if isinstance(node, Literal):
        tokens = node.text.split()
        frag = r"\s+".join(re.escape(tok) for tok in tokens)
        return frag, {_category(node.text[0])}, {_category(node.text[-1])}, False
    if isinstance(node, SlotRef):
        group = namer.declare(node.slot_name)
        explicit = slot_patterns.get(node.slot_name)
        if explicit:
            frag = f"(?P<{group}>(?:{explicit}))"
        else:
            frag = _default_slot_pattern(group, follow)
        return frag, {_WORD}, {_WORD}, False
    if isinstance(node, OptionalPart):
        pattern, firsts, lasts = compile_sequence(node.children, slot_patterns, namer, follow)
        return pattern, firsts, lasts, True
    if isinstance(node, GrammarField):
        alt_frags = []
        firsts: set[str] = set()
        lasts: set[str] = set()
        for alt in node.alternatives:
            frag, f, l = compile_sequence(alt, slot_patterns, namer, follow)
            alt_frags.append(frag)
            firsts |= f
            lasts |= l
        # a field with a fully-optional alternative may expand to nothing;
        # flag it optional so neighbor gaps are not stranded
        return "(?:" + "|".join(alt_frags) + ")", firsts, lasts, _nullable(node)
    raise TypeError(node)  # pragma: no cover
