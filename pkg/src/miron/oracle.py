"""Reference interpreter: runs a behavior model symbolically, one step.

Evaluates branches as boolean conjunctions over atoms and predecessor rules,
combines branches disjunctively, lets any firing branch of an inhibiting rule
suppress its targets, and delegates successor selection to a tie chooser.
Used to cross-check the lowered matrix engine; shares no code with it.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable

from .model import BehaviorModel

# (pred rule id, sorted candidate (rule id, branch index) pairs) -> chosen pair
TieChooser = Callable[[int, list[tuple[int, int]]], tuple[int, int]]


@dataclass
class RngTieChooser:
    """Uniform-noise argmax over candidates, matching the engine's draws.

    Draws one uniform per candidate in ascending order and keeps the first
    maximum, so an engine seeded identically makes the same choice whenever
    both sides agree on the candidate set.
    """

    rng: random.Random
    eta_max: float = 1e-6

    def __call__(self, pred: int, candidates: list[tuple[int, int]]) -> tuple[int, int]:
        best, best_noise = None, -1.0
        for cand in candidates:
            noise = self.rng.random() * self.eta_max
            if noise > best_noise:
                best, best_noise = cand, noise
        assert best is not None
        return best


def oracle_step(
    model: BehaviorModel,
    facts: Iterable[str],
    active_rules: Iterable[int],
    tie_chooser: TieChooser,
) -> tuple[set[int], set[str]]:
    """One symbolic step: (facts, active rules) -> (next active rules, action keys)."""
    fact_set = set(facts)
    active = set(active_rules)

    satisfied: set[tuple[int, int]] = set()
    for rule in model.rules:
        for b, branch in enumerate(rule.branches):
            if all(atom.key in fact_set for atom in branch.atoms) and all(
                pred in active for pred in branch.from_rules
            ):
                satisfied.add((rule.rule_id, b))

    # per active predecessor, exactly one satisfied successor branch wins
    won: set[tuple[int, int]] = set()
    for pred in sorted(active):
        candidates = sorted(
            (rule_id, b)
            for (rule_id, b) in satisfied
            if pred in model.rule_by_id(rule_id).branches[b].from_rules
        )
        if candidates:
            won.add(tie_chooser(pred, candidates))

    selected = {
        (rule_id, b)
        for (rule_id, b) in satisfied
        if not model.rule_by_id(rule_id).branches[b].from_rules or (rule_id, b) in won
    }

    suppressed: set[int] = set()
    for rule in model.rules:
        if any((rule.rule_id, b) in selected for b in range(len(rule.branches))):
            suppressed.update(rule.inhibits)

    next_active = {
        rule.rule_id
        for rule in model.rules
        if rule.rule_id not in suppressed
        and any((rule.rule_id, b) in selected for b in range(len(rule.branches)))
    }
    actions = {
        atom.key for rule in model.rules if rule.rule_id in next_active for atom in rule.actions
    }
    return next_active, actions
