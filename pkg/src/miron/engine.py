"""Recurrent rule network: AND layer, winner-takes-all preselection, OR layer
with inhibition, action fan-out.

One synchronous step maps a binary condition vector and the active-rule vector
to the next active-rule vector and an action vector.  Branch weights are laid
out so a cell's inputs sum to exactly 1 when every conjunct holds; the firing
threshold sits at 1 - epsilon, with epsilon absorbing float summation error.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ArtifactError, DimensionMismatch
from .model import ActionAtom, ConditionAtom

# a branch of arity n contributes weights 1/n; soundness of the AND needs
# 1 - 1/n < theta, i.e. n <= 1/(2*epsilon) with the default epsilon
MAX_BRANCH_ARITY = 500


@dataclass(frozen=True)
class EngineParams:
    epsilon: float = 0.001
    eta_max: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon < 0.01:
            raise ValueError(f"epsilon {self.epsilon} outside (0, 0.01)")
        if not 0 < self.eta_max < self.epsilon / 10:
            raise ValueError(f"eta_max {self.eta_max} must sit well below epsilon")

    @property
    def theta(self) -> float:
        return 1.0 - self.epsilon


def rho(x: float) -> float:
    """Heaviside step, 0 at the origin."""
    return 0.0 if x <= 0 else 1.0


def f_step(x: float, theta: float) -> float:
    return rho(x - theta)


def sigma(x: float) -> float:
    """Ramp: identity on positives, 0 elsewhere."""
    return rho(x) * x


def scalar_nonlinearities(x: float, params: EngineParams = EngineParams()) -> dict:
    return {"rho": rho(x), "f": f_step(x, params.theta), "sigma": sigma(x)}


@dataclass(frozen=True)
class WeightSet:
    """Sparse triplet weights; rational AND weights keep row sums exactly 1."""

    n_conditions: int
    n_and: int
    n_rules: int
    n_actions: int
    w_cond: tuple[tuple[int, int, Fraction], ...]  # (and_cell, condition, weight)
    w_rule: tuple[tuple[int, int, Fraction], ...]  # (and_cell, rule, weight)
    w_or: tuple[tuple[int, int, int], ...]         # (rule, and_cell, +1|-1)
    w_act: tuple[tuple[int, int, int], ...]        # (action, rule, 1)

    def validate(self) -> None:
        row_sums: dict[int, Fraction] = {}
        seen: set[tuple[str, int, int]] = set()
        for k, n, w in self.w_cond:
            if not (0 <= k < self.n_and and 0 <= n < self.n_conditions):
                raise ArtifactError(f"w_cond entry ({k},{n}) out of range")
            if w <= 0:
                raise ArtifactError(f"w_cond[{k},{n}] = {w} not positive")
            if ("c", k, n) in seen:
                raise ArtifactError(f"duplicate w_cond entry ({k},{n})")
            seen.add(("c", k, n))
            row_sums[k] = row_sums.get(k, Fraction(0)) + w
        for k, m, w in self.w_rule:
            if not (0 <= k < self.n_and and 0 <= m < self.n_rules):
                raise ArtifactError(f"w_rule entry ({k},{m}) out of range")
            if w <= 0:
                raise ArtifactError(f"w_rule[{k},{m}] = {w} not positive")
            if ("r", k, m) in seen:
                raise ArtifactError(f"duplicate w_rule entry ({k},{m})")
            seen.add(("r", k, m))
            row_sums[k] = row_sums.get(k, Fraction(0)) + w
        for k in range(self.n_and):
            if row_sums.get(k, Fraction(0)) != 1:
                raise ArtifactError(f"AND row {k} sums to {row_sums.get(k, 0)}, expected 1")
        for m, k, w in self.w_or:
            if w not in (1, -1):
                raise ArtifactError(f"w_or[{m},{k}] = {w} not in {{+1,-1}}")
            if not (0 <= m < self.n_rules and 0 <= k < self.n_and):
                raise ArtifactError(f"w_or entry ({m},{k}) out of range")
        for q, m, w in self.w_act:
            if w != 1:
                raise ArtifactError(f"w_act[{q},{m}] = {w} not 1")
            if not (0 <= q < self.n_actions and 0 <= m < self.n_rules):
                raise ArtifactError(f"w_act entry ({q},{m}) out of range")


@dataclass(frozen=True)
class AndCellEntry:
    rule_id: int
    branch_index: int


@dataclass(frozen=True)
class RuleEntry:
    rule_id: int
    name: str
    or_index: int
    and_cells: tuple[int, ...]


@dataclass(frozen=True)
class Dictionary:
    """Bidirectional name/index tables tying the matrices to the model.

    Index assignment is canonical: conditions and actions by sorted key,
    rules by id, AND cells by (rule id, branch index); re-emitting artifacts
    is therefore byte-stable.
    """

    conditions: tuple[ConditionAtom, ...]
    actions: tuple[ActionAtom, ...]
    rules: tuple[RuleEntry, ...]
    and_cells: tuple[AndCellEntry, ...]
    condition_index: dict[str, int] = field(init=False, repr=False, compare=False)
    action_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cond_keys = [a.key for a in self.conditions]
        act_keys = [a.key for a in self.actions]
        if sorted(cond_keys) != cond_keys or len(set(cond_keys)) != len(cond_keys):
            raise ArtifactError("condition keys must be unique and sorted")
        if sorted(act_keys) != act_keys or len(set(act_keys)) != len(act_keys):
            raise ArtifactError("action keys must be unique and sorted")
        ids = [r.rule_id for r in self.rules]
        if sorted(ids) != ids or len(set(ids)) != len(ids):
            raise ArtifactError("rule ids must be unique and sorted")
        cells = [(c.rule_id, c.branch_index) for c in self.and_cells]
        if sorted(cells) != cells or len(set(cells)) != len(cells):
            raise ArtifactError("AND cells must be unique and sorted")
        object.__setattr__(self, "condition_index", {k: i for i, k in enumerate(cond_keys)})
        object.__setattr__(self, "action_index", {k: i for i, k in enumerate(act_keys)})

    @property
    def n_conditions(self) -> int:
        return len(self.conditions)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    @property
    def n_and(self) -> int:
        return len(self.and_cells)

    def rule_by_or_index(self, m: int) -> RuleEntry:
        return self.rules[m]

    def rule_entry(self, rule_id: int) -> RuleEntry:
        for rule in self.rules:
            if rule.rule_id == rule_id:
                return rule
        raise KeyError(rule_id)

    def active_rule_ids(self, r: np.ndarray) -> list[int]:
        return [self.rules[m].rule_id for m in np.flatnonzero(r > 0.5)]

    def condition_names(self, c: np.ndarray) -> list[str]:
        return [self.conditions[n].key for n in np.flatnonzero(c > 0.5)]

    def action_names(self, a: np.ndarray) -> list[str]:
        return [self.actions[q].key for q in np.flatnonzero(a > 0.5)]


@dataclass
class RuleState:
    """Active-rule vector plus the per-step scratch layers."""

    r: np.ndarray
    r_and: np.ndarray
    r_wta: np.ndarray

    @classmethod
    def zeros(cls, n_rules: int, n_and: int) -> "RuleState":
        return cls(np.zeros(n_rules), np.zeros(n_and), np.zeros(n_and))


@dataclass(frozen=True)
class StepResult:
    r_and: np.ndarray
    r_wta: np.ndarray
    r_next: np.ndarray
    actions: np.ndarray
    wta_choices: dict[int, int]  # OR index of predecessor -> winning AND cell


class Stepper:
    """Compiled numeric form of one weight set; owns no session state.

    A stepper instance is single-threaded; the weight arrays are read-only
    and can back any number of steppers.
    """

    def __init__(self, weights: WeightSet, params: EngineParams):
        weights.validate()
        self.weights = weights
        self.params = params
        K, N, M, Q = weights.n_and, weights.n_conditions, weights.n_rules, weights.n_actions
        self.Wc = np.zeros((K, N))
        for k, n, w in weights.w_cond:
            self.Wc[k, n] = float(w)
        self.Wr = np.zeros((K, M))
        for k, m, w in weights.w_rule:
            self.Wr[k, m] = float(w)
        self.Wor_pos = np.zeros((M, K))
        self.Wor_neg = np.zeros((M, K))
        for m, k, w in weights.w_or:
            if w > 0:
                self.Wor_pos[m, k] = 1.0
            else:
                self.Wor_neg[m, k] = 1.0
        self.Wact = np.zeros((Q, M))
        for q, m, w in weights.w_act:
            self.Wact[q, m] = 1.0
        # candidate AND cells per predecessor column, ascending
        self.successor_cells: dict[int, list[int]] = {}
        for k, m, _ in weights.w_rule:
            self.successor_cells.setdefault(int(m), []).append(int(k))
        for cells in self.successor_cells.values():
            cells.sort()

    def _check_dims(self, c: np.ndarray, r: np.ndarray) -> None:
        if c.shape != (self.weights.n_conditions,):
            raise DimensionMismatch(
                f"condition vector has shape {c.shape}, expected ({self.weights.n_conditions},)"
            )
        if r.shape != (self.weights.n_rules,):
            raise DimensionMismatch(
                f"rule vector has shape {r.shape}, expected ({self.weights.n_rules},)"
            )

    def and_layer(self, c: np.ndarray, r: np.ndarray) -> np.ndarray:
        self._check_dims(c, r)
        raw = self.Wc @ c + self.Wr @ r
        return (raw > self.params.theta).astype(float)

    def wta_preselect(
        self, r_and: np.ndarray, r: np.ndarray, c: np.ndarray, rng: random.Random
    ) -> tuple[np.ndarray, dict[int, int]]:
        """Per active predecessor, exactly one satisfied successor cell wins.

        Noise is drawn only for candidate entries (elsewhere it multiplies
        zero), in ascending (column, cell) order so runs are reproducible.
        A cell whose branch has no predecessor links passes on its condition
        drive alone.
        """
        wins = np.zeros(self.weights.n_and)
        choices: dict[int, int] = {}
        for m in np.flatnonzero(r > 0.5):
            candidates = [k for k in self.successor_cells.get(int(m), []) if r_and[k] > 0.5]
            if not candidates:
                continue
            best_k, best_noise = -1, -1.0
            for k in candidates:
                noise = rng.random() * self.params.eta_max
                if noise > best_noise:
                    best_k, best_noise = k, noise
            wins[best_k] += 1.0
            choices[int(m)] = best_k
        raw = wins + self.Wc @ c
        # gate by r_and: a cell whose conjunction failed can never pass
        return ((raw > self.params.theta) & (r_and > 0.5)).astype(float), choices

    def or_layer(self, r_wta: np.ndarray) -> np.ndarray:
        pos = self.Wor_pos @ r_wta
        neg = self.Wor_neg @ r_wta
        # any firing inhibitory branch takes the lead regardless of support
        value = np.where(neg > 0, 0.0, pos)
        return (value > self.params.theta).astype(float)

    def action_layer(self, r_next: np.ndarray) -> np.ndarray:
        return (self.Wact @ r_next > self.params.theta).astype(float)

    def step(self, c: np.ndarray, r: np.ndarray, rng: random.Random) -> StepResult:
        r_and = self.and_layer(c, r)
        r_wta, choices = self.wta_preselect(r_and, r, c, rng)
        r_next = self.or_layer(r_wta)
        actions = self.action_layer(r_next)
        return StepResult(r_and=r_and, r_wta=r_wta, r_next=r_next, actions=actions, wta_choices=choices)


def engine_step(
    c: np.ndarray, state: RuleState, stepper: Stepper, rng: random.Random
) -> tuple[np.ndarray, np.ndarray]:
    """Advance `state` by one synchronous step; returns (r_next, actions)."""
    result = stepper.step(c, state.r, rng)
    state.r_and = result.r_and
    state.r_wta = result.r_wta
    state.r = result.r_next
    return result.r_next, result.actions


def condition_vector(dictionary: Dictionary, facts: Sequence[str]) -> np.ndarray:
    """Binary condition vector with the named lines high."""
    c = np.zeros(dictionary.n_conditions)
    for key in facts:
        idx = dictionary.condition_index.get(key)
        if idx is not None:
            c[idx] = 1.0
    return c
