"""Miron definitions: one structure drives both recognition and production.

A miron pairs an intent name with templates.  Compiled one way the templates
become a recognizer extracting the intent and slot values from an utterance;
walked the other way they enumerate every surface string the intent can take.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import templates as tpl
from .errors import (
    ExpansionExplosion,
    NoCompleteUtterance,
    PatternTooLarge,
    TemplateError,
)

DEFAULT_EXPANSION_CAP = 10_000
DEFAULT_PATTERN_BOUND = 100_000

# Simple alternations like (morning|afternoon|evening|night) enumerate cleanly.
_LITERAL_ALTERNATION_RE = re.compile(r"\(?([\w ]+(?:\|[\w ]+)+)\)?\Z")


@dataclass(frozen=True)
class SlotDecl:
    name: str
    pattern: str | None = None  # regex fragment overriding the default capture


@dataclass(frozen=True)
class MironDefinition:
    name: str
    modality: str = "speech"
    direction: str = "outer"  # "outer" faces the user, "inner" is system-only
    templates: tuple[tpl.Template, ...] = ()
    slots: tuple[SlotDecl, ...] = ()
    data_slots: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.direction not in ("inner", "outer"):
            raise ValueError(f"bad direction {self.direction!r}")
        if not self.templates:
            # a template-less miron recognizes and produces its own name
            synthesized = tpl.Template(source=self.name, nodes=(tpl.Literal(self.name),))
            object.__setattr__(self, "templates", (synthesized,))

    @property
    def slot_names(self) -> set[str]:
        return {s.name for s in self.slots}

    @property
    def slot_patterns(self) -> dict[str, str]:
        return {s.name: s.pattern for s in self.slots if s.pattern}


def make_definition(
    name: str,
    template_sources: Sequence[str],
    slots: Sequence[SlotDecl] = (),
    data_slots: Mapping[str, str] | None = None,
    modality: str = "speech",
    direction: str = "outer",
) -> MironDefinition:
    """Parse template sources and assemble a definition."""
    declared = {s.name for s in slots}
    parsed = tuple(tpl.parse_template(src, declared) for src in template_sources)
    return MironDefinition(
        name=name,
        modality=modality,
        direction=direction,
        templates=parsed,
        slots=tuple(slots),
        data_slots=dict(data_slots or {}),
    )


@dataclass(frozen=True)
class RecognitionResult:
    intent: str
    slots: Mapping[str, str]
    matched_span: tuple[int, int]
    miron_modality: str
    data_slots: Mapping[str, str]


@dataclass(frozen=True)
class ProductionCriterion:
    mode: str = "seeded_random"  # uniform_random | seeded_random | indexed
    index: int | None = None
    rng_seed: int | None = None

    def __post_init__(self):
        if self.mode not in ("uniform_random", "seeded_random", "indexed"):
            raise ValueError(f"bad production mode {self.mode!r}")
        if self.mode == "indexed" and self.index is None:
            raise ValueError("indexed production needs an index")


def normalize(utterance: str) -> str:
    """Collapse whitespace runs and strip; matching is done on this form."""
    return " ".join(utterance.split())


class Recognizer:
    """Anchored, case-insensitive matcher compiled from one definition."""

    def __init__(self, definition: MironDefinition, pattern_bound: int = DEFAULT_PATTERN_BOUND):
        self.definition = definition
        self._matchers: list[tuple[re.Pattern, dict[str, str]]] = []
        total = 0
        for template in definition.templates:
            namer = tpl.GroupNamer()
            body, _, _ = tpl.compile_sequence(template.nodes, definition.slot_patterns, namer)
            pattern = r"\s*" + body + r"\s*"
            total += len(pattern)
            if total > pattern_bound:
                raise PatternTooLarge(total, pattern_bound)
            self._matchers.append((re.compile(pattern, re.IGNORECASE), namer.group_to_slot))

    def match(self, utterance: str) -> RecognitionResult | None:
        text = normalize(utterance)
        if not text:
            return None
        for matcher, group_to_slot in self._matchers:
            m = matcher.fullmatch(text)
            if m is None:
                continue
            slots = {}
            for group, slot_name in group_to_slot.items():
                value = m.group(group)
                if value is not None:
                    slots[slot_name] = value
            return RecognitionResult(
                intent=self.definition.name,
                slots=slots,
                matched_span=m.span(),
                miron_modality=self.definition.modality,
                data_slots=dict(self.definition.data_slots),
            )
        return None


def compile_recognizer(
    definition: MironDefinition, pattern_bound: int = DEFAULT_PATTERN_BOUND
) -> Recognizer:
    return Recognizer(definition, pattern_bound)


class RecognizerSet:
    """Compiled recognizers for a definition list, in definition order."""

    def __init__(self, definitions: Iterable[MironDefinition], pattern_bound: int = DEFAULT_PATTERN_BOUND):
        self.definitions = list(definitions)
        self._recognizers = [Recognizer(d, pattern_bound) for d in self.definitions]

    def recognize(self, utterance: str, channel: str = "outer", modality: str | None = None) -> list[RecognitionResult]:
        """All full-string matches, in definition order.

        The outer channel sees only outward-facing definitions; the inner
        channel sees the whole vocabulary, so the system can say anything to
        itself that a user could say to it.
        """
        results = []
        for recognizer in self._recognizers:
            d = recognizer.definition
            if channel == "outer" and d.direction != "outer":
                continue
            if modality is not None and d.modality != modality:
                continue
            result = recognizer.match(utterance)
            if result is not None:
                results.append(result)
        return results


def recognize(
    utterance: str,
    definitions: Iterable[MironDefinition],
    channel: str = "outer",
    modality: str | None = None,
) -> list[RecognitionResult]:
    """One-shot convenience over RecognizerSet (compiles on every call)."""
    return RecognizerSet(definitions).recognize(utterance, channel, modality)


def expand(
    definition: MironDefinition,
    bindings: Mapping[str, str] | None = None,
    cap: int = DEFAULT_EXPANSION_CAP,
) -> list[str]:
    """Every complete surface string of the definition, deduplicated.

    Expansions touching an unbound or empty slot are suppressed.  Order is
    template order, then leftmost-major combination order within a template.
    """
    bindings = dict(bindings or {})
    unknown = set(bindings) - definition.slot_names
    if unknown:
        raise TemplateError(f"bindings for undeclared slots: {sorted(unknown)}")
    raw = sum(tpl.combination_count(t.nodes) for t in definition.templates)
    if raw > cap:
        raise ExpansionExplosion(raw, cap)
    seen: dict[str, None] = {}
    for template in definition.templates:
        for variant in tpl.iter_variants(template.nodes, bindings):
            if any(fragment is tpl.MISSING for fragment in variant):
                continue
            text = tpl.join_fragments(variant)
            if text and text not in seen:
                seen[text] = None
    return list(seen)


def produce(
    definition: MironDefinition,
    bindings: Mapping[str, str] | None = None,
    criterion: ProductionCriterion = ProductionCriterion(),
    cap: int = DEFAULT_EXPANSION_CAP,
) -> str:
    """Select one complete expansion according to the criterion."""
    options = expand(definition, bindings, cap)
    if not options:
        raise NoCompleteUtterance(definition.name)
    if criterion.mode == "indexed":
        if not 0 <= criterion.index < len(options):
            raise IndexError(
                f"production index {criterion.index} out of range for {len(options)} expansions"
            )
        return options[criterion.index]
    if criterion.mode == "seeded_random":
        rng = random.Random(criterion.rng_seed)
        return rng.choice(options)
    return random.choice(options)


def representative_values(definition: MironDefinition, slot_name: str) -> list[str]:
    """Sample values for a slot: pattern alternatives, else surface hints."""
    decl = next((s for s in definition.slots if s.name == slot_name), None)
    if decl and decl.pattern:
        m = _LITERAL_ALTERNATION_RE.match(decl.pattern)
        if m:
            return [alt.strip() for alt in m.group(1).split("|")]
    hints: dict[str, None] = {}
    for template in definition.templates:
        for ref in _walk_slot_refs(template.nodes):
            if ref.slot_name == slot_name and ref.surface_hint:
                hints.setdefault(ref.surface_hint)
    return list(hints) or [slot_name]


def _walk_slot_refs(nodes) -> Iterable[tpl.SlotRef]:
    for node in nodes:
        if isinstance(node, tpl.SlotRef):
            yield node
        elif isinstance(node, tpl.OptionalPart):
            yield from _walk_slot_refs(node.children)
        elif isinstance(node, tpl.GrammarField):
            for alt in node.alternatives:
                yield from _walk_slot_refs(alt)


def export_training_data(
    definitions: Iterable[MironDefinition], cap: int = DEFAULT_EXPANSION_CAP
) -> list[tuple[str, str, dict[str, str]]]:
    """Flatten expansions over representative slot values as labeled samples.

    Feeds statistical intent-classifier training outside this package; the
    sample count per definition equals its deduplicated expansion count over
    all representative binding combinations.
    """
    samples: list[tuple[str, str, dict[str, str]]] = []
    for definition in definitions:
        slot_values = {name: representative_values(definition, name) for name in sorted(definition.slot_names)}
        names = list(slot_values)
        combos: list[dict[str, str]] = [{}]
        for name in names:
            combos = [dict(c, **{name: v}) for c in combos for v in slot_values[name]]
            if len(combos) > cap:
                raise ExpansionExplosion(len(combos), cap)
        seen: set[str] = set()
        for binding in combos:
            for sentence in expand(definition, binding, cap):
                if sentence in seen:
                    continue
                seen.add(sentence)
                used = _slots_used(definition, sentence, binding)
                samples.append((sentence, definition.name, used))
    return samples


def _slots_used(definition: MironDefinition, sentence: str, binding: dict[str, str]) -> dict[str, str]:
    result = compile_recognizer(definition).match(sentence)
    if result is None:  # pragma: no cover - expansions always recognize
        return dict(binding)
    return dict(result.slots)
