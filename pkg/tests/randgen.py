"""Random template/binding generators shared by property and acceptance tests.

Literal words and slot values come from disjoint vocabularies and each slot
carries a finite value pattern (the same device the hello fixture uses for
phaseOfDay), so every expansion has exactly one consistent slot extraction.
"""
import random

from miron.mirons import SlotDecl, make_definition
from miron.templates import (
    GrammarField,
    Literal,
    OptionalPart,
    SlotRef,
    combination_count,
    render_template,
)

LITERAL_WORDS = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot",
    "golf", "hotel", "india", "juliet", "kilo", "lima",
]

SLOT_VOCAB = {
    "city": ["paris", "lyon", "tokyo", "oslo"],
    "person": ["amira", "boris", "chen", "dara"],
    "topic": ["trains", "weather", "badges", "coffee"],
    "item": ["umbrella", "laptop", "ticket", "keycard"],
    "count": ["one", "two", "nine", "forty"],
    "color": ["crimson", "teal", "umber", "sable"],
}

SLOT_DECLS = {name: SlotDecl(name, "(" + "|".join(words) + ")") for name, words in SLOT_VOCAB.items()}


def random_nodes(rng: random.Random, depth: int, fanout: int = 3, slot_pool=None):
    """A node sequence of depth <= `depth`; every slot name is recorded."""
    if slot_pool is None:
        slot_pool = set()
    n = rng.randint(1, fanout)
    nodes = []
    for _ in range(n):
        kinds = ["literal", "literal", "slot"]
        if depth > 0:
            kinds += ["optional", "field"]
        kind = rng.choice(kinds)
        if kind == "literal":
            nodes.append(Literal(rng.choice(LITERAL_WORDS)))
        elif kind == "slot":
            name = rng.choice(sorted(SLOT_VOCAB))
            slot_pool.add(name)
            nodes.append(SlotRef(name, surface_hint=rng.choice(SLOT_VOCAB[name])))
        elif kind == "optional":
            nodes.append(OptionalPart(tuple(random_nodes(rng, depth - 1, fanout, slot_pool))))
        else:
            alts = tuple(
                tuple(random_nodes(rng, depth - 1, fanout, slot_pool))
                for _ in range(rng.randint(1, fanout))
            )
            nodes.append(GrammarField(alts))
    return _merge_adjacent_literals(nodes)


def _merge_adjacent_literals(nodes):
    """Canonical form: "a" "b" and "a b" parse identically, so merge them."""
    merged = []
    for node in nodes:
        if isinstance(node, Literal) and merged and isinstance(merged[-1], Literal):
            merged[-1] = Literal(merged[-1].text + " " + node.text)
        else:
            merged.append(node)
    return merged


def random_definition(
    rng: random.Random, name: str, depth: int = 4, n_templates: int = 1, max_combinations: int = 2000
):
    slot_pool: set = set()
    sources = []
    for _ in range(n_templates):
        while True:
            nodes = random_nodes(rng, depth, slot_pool=slot_pool)
            if combination_count(nodes) <= max_combinations:
                break
        sources.append(render_template(nodes))
    slots = [SLOT_DECLS[s] for s in sorted(slot_pool)]
    return make_definition(name, sources, slots=slots)


def random_bindings(rng: random.Random, definition) -> dict:
    """A complete binding for every declared slot, from that slot's vocab."""
    return {s.name: rng.choice(SLOT_VOCAB[s.name]) for s in definition.slots}
