"""Random behavior-model generator for the engine/oracle equivalence suite."""
import random

from miron.mirons import make_definition
from miron.model import (
    BehaviorModel,
    Branch,
    InternalState,
    InvokeInternal,
    MironCompleted,
    MironPerceived,
    ProduceMiron,
    RuleDecl,
    SetState,
    VariableState,
    WriteVariable,
    literal_expr,
)

MIRONS = ["alpha", "beta", "gamma", "delta", "epsilon_m"]
VARIABLES = ["visitor", "company", "contact"]
STATES = ["greeting", "busy", "waiting"]
INTERNALS = ["clock", "lookup"]


def random_condition_atom(rng: random.Random):
    kind = rng.randrange(4)
    if kind == 0:
        return MironPerceived(rng.choice(MIRONS), rng.choice(["inner", "outer"]))
    if kind == 1:
        return MironCompleted(rng.choice(MIRONS + INTERNALS))
    if kind == 2:
        return VariableState(rng.choice(VARIABLES), rng.choice(["filled", "empty", "changed", "unchanged"]))
    return InternalState(rng.choice(STATES), rng.random() < 0.5)


def random_action_atom(rng: random.Random):
    kind = rng.randrange(4)
    if kind == 0:
        return ProduceMiron(rng.choice(MIRONS), rng.choice(["inner", "outer"]))
    if kind == 1:
        return SetState(rng.choice(STATES), rng.choice(["true", "false", "reset"]))
    if kind == 2:
        return WriteVariable(rng.choice(VARIABLES), literal_expr(rng.choice(["x", "y", "z"])))
    return InvokeInternal(rng.choice(INTERNALS))


def random_model(rng: random.Random, max_rules: int = 20, max_branches: int = 4) -> BehaviorModel:
    mirons = [make_definition(name, [name.replace("_", " ")]) for name in MIRONS]
    n_rules = rng.randint(2, max_rules)
    rule_ids = [100 + i for i in range(n_rules)]
    rules = []
    for i, rule_id in enumerate(rule_ids):
        branches = []
        for _ in range(rng.randint(1, max_branches)):
            atoms = tuple(random_condition_atom(rng) for _ in range(rng.randint(0, 3)))
            preds = tuple(
                sorted(rng.sample(rule_ids, rng.randint(1, min(2, n_rules))))
                if rng.random() < 0.5
                else ()
            )
            if not atoms and not preds:
                atoms = (random_condition_atom(rng),)
            branches.append(Branch(atoms=atoms, from_rules=preds))
        actions = tuple(random_action_atom(rng) for _ in range(rng.randint(1, 3)))
        inhibits = tuple(
            sorted(rng.sample(rule_ids, 1)) if rng.random() < 0.3 else ()
        )
        rules.append(
            RuleDecl(rule_id=rule_id, name=f"r{rule_id}", branches=tuple(branches), actions=actions, inhibits=inhibits)
        )
    return BehaviorModel(mirons=mirons, rules=rules)


def random_fact_trace(rng: random.Random, condition_keys, steps: int):
    """Per step, a random subset of condition lines goes high."""
    trace = []
    keys = list(condition_keys)
    for _ in range(steps):
        n = rng.randint(0, max(1, len(keys) // 4))
        trace.append(sorted(rng.sample(keys, min(n, len(keys)))))
    return trace
