"""Lowering of behavior models to weight matrices plus artifact files.

Compilation emits three JSON documents: miron definitions, rule weights with
engine parameters, and the dictionary binding names to matrix indices.  The
files are canonically serialized (sorted keys, LF, trailing newline) so a
load/emit cycle is byte-identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .engine import (
    MAX_BRANCH_ARITY,
    AndCellEntry,
    Dictionary,
    EngineParams,
    RuleEntry,
    WeightSet,
)
from .errors import (
    ArityOverflow,
    ArtifactError,
    SchemaVersionMismatch,
    UnknownReference,
)
from .mirons import MironDefinition, SlotDecl, make_definition
from .model import (
    BehaviorModel,
    InternalState,
    InvokeInternal,
    MironCompleted,
    MironPerceived,
    ProduceMiron,
    SetState,
    VariableState,
    WriteVariable,
    VARIABLE_STATES,
)
from .model_parser import RESERVED_INTENTS, parse_model

SCHEMA_VERSION = "1"

MIRON_FILE = "mirons.json"
RULE_FILE = "rules.json"
DICTIONARY_FILE = "dictionary.json"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    rule_id: int | None = None

    def __str__(self):
        subject = f" (rule {self.rule_id})" if self.rule_id is not None else ""
        return f"{self.severity}: [{self.code}]{subject} {self.message}"


@dataclass
class CompiledArtifacts:
    definitions: list[MironDefinition]
    weights: WeightSet
    dictionary: Dictionary
    params: EngineParams


def validate_model(model: BehaviorModel) -> list[Diagnostic]:
    """Static checks; errors block lowering, warnings flag design smells.

    Reachability is a conservative fixpoint over which condition lines the
    model itself can drive; scenario setup or internal-action handlers can
    drive more, which is why reachability findings are warnings.
    """
    diags: list[Diagnostic] = []
    miron_names = {m.name for m in model.mirons}
    known = miron_names | set(RESERVED_INTENTS)
    rule_ids = {r.rule_id for r in model.rules}

    declared_vars: set[str] = set()
    for m in model.mirons:
        declared_vars |= m.slot_names | set(m.data_slots)
    write_targets = set()
    invoked = set()
    wm_set_true, wm_set_false = set(), set()
    inner_produced, outer_produced = set(), set()
    for rule in model.rules:
        for atom in rule.actions:
            if isinstance(atom, WriteVariable):
                write_targets.add(atom.variable)
            elif isinstance(atom, InvokeInternal):
                invoked.add(atom.action)
            elif isinstance(atom, SetState):
                (wm_set_true if atom.value == "true" else wm_set_false).add(atom.state)
            elif isinstance(atom, ProduceMiron):
                (inner_produced if atom.channel == "inner" else outer_produced).add(atom.miron)
    has_invokes = bool(invoked)
    writable = declared_vars | write_targets

    for rule in model.rules:
        if not rule.branches:
            diags.append(Diagnostic("error", "no-branches", f"rule '{rule.name}' has no branches", rule.rule_id))
        for branch in rule.branches:
            if branch.arity == 0:
                diags.append(Diagnostic("error", "empty-branch", f"rule '{rule.name}' has an empty branch", rule.rule_id))
            if branch.arity > MAX_BRANCH_ARITY:
                diags.append(
                    Diagnostic(
                        "error",
                        "arity-overflow",
                        f"rule '{rule.name}' branch arity {branch.arity} exceeds {MAX_BRANCH_ARITY}",
                        rule.rule_id,
                    )
                )
            for atom in branch.atoms:
                if isinstance(atom, InternalState) and atom.value is None:
                    diags.append(
                        Diagnostic(
                            "error",
                            "reset-test",
                            f"rule '{rule.name}' tests reset state of '{atom.state}'; "
                            "a reset memory is removed and cannot be tested",
                            rule.rule_id,
                        )
                    )
                if isinstance(atom, MironPerceived) and atom.miron not in known:
                    diags.append(
                        Diagnostic("error", "unknown-miron", f"rule '{rule.name}' perceives unknown miron '{atom.miron}'", rule.rule_id)
                    )
            for pred in branch.from_rules:
                if pred not in rule_ids:
                    diags.append(
                        Diagnostic("error", "unknown-rule", f"rule '{rule.name}' chains from unknown rule id {pred}", rule.rule_id)
                    )
        for target in rule.inhibits:
            if target not in rule_ids:
                diags.append(
                    Diagnostic("error", "unknown-rule", f"rule '{rule.name}' inhibits unknown rule id {target}", rule.rule_id)
                )

    implicit = set()
    for rule in model.rules:
        for branch in rule.branches:
            for atom in branch.atoms:
                if isinstance(atom, VariableState) and atom.variable not in writable:
                    implicit.add(atom.variable)
    if implicit:
        note = "; internal-action handlers may fill them" if has_invokes else ""
        diags.append(
            Diagnostic(
                "warning",
                "implicit-variables",
                "variables tested but never written by the model: "
                + ", ".join(sorted(implicit))
                + note,
            )
        )

    def line_reachable(key: str) -> bool:
        kind = key.split(":", 1)[0]
        if kind == "mi":
            _, channel, name = key.split(":", 2)
            if channel == "outer":
                direction_outer = {m.name for m in model.mirons if m.direction == "outer"}
                return name in direction_outer or name in RESERVED_INTENTS
            return name in inner_produced or (name == "no_match" and bool(inner_produced))
        if kind == "af":
            name = key.split(":", 1)[1]
            return name in outer_produced or name in invoked
        if kind == "ne":
            variable = key.split(":")[1]
            return variable in writable or has_invokes
        if kind == "wm":
            _, state, line = key.split(":")
            return state in wm_set_true if line == "activated" else state in wm_set_false
        return False

    reachable_rules: set[int] = set()
    changed = True
    while changed:
        changed = False
        for rule in model.rules:
            if rule.rule_id in reachable_rules:
                continue
            for branch in rule.branches:
                if all(line_reachable(a.key) for a in branch.atoms if not _is_reset(a)) and all(
                    p in reachable_rules for p in branch.from_rules
                ):
                    reachable_rules.add(rule.rule_id)
                    changed = True
                    break
    for rule in model.rules:
        if rule.branches and rule.rule_id not in reachable_rules:
            diags.append(
                Diagnostic(
                    "warning",
                    "unreachable-rule",
                    f"no branch of rule '{rule.name}' can ever fire with the facts this model produces",
                    rule.rule_id,
                )
            )
    for rule in model.rules:
        succ = model.successors(rule.rule_id)
        if succ and all(s not in reachable_rules for s in succ):
            diags.append(
                Diagnostic(
                    "warning",
                    "dead-fanout",
                    f"rule '{rule.name}' chains onward but no successor is satisfiable",
                    rule.rule_id,
                )
            )
    return diags


def _is_reset(atom) -> bool:
    return isinstance(atom, InternalState) and atom.value is None


def lower_model(model: BehaviorModel, params: EngineParams = EngineParams()) -> tuple[WeightSet, Dictionary]:
    """Assign dictionary indices and build the sparse weight matrices.

    Branch weights are exact rationals 1/arity so each AND row sums to 1.
    Condition lines are created eagerly: both channels for every miron, all
    four entity states per known variable, both lines per memory state, and
    a completion line per produced miron or invoked action.
    """
    errors = [d for d in validate_model(model) if d.severity == "error"]
    if errors:
        raise ArtifactError("model has validation errors: " + "; ".join(map(str, errors)))

    condition_atoms: dict[str, object] = {}

    def intern(atom) -> None:
        condition_atoms.setdefault(atom.key, atom)

    for name in [m.name for m in model.mirons] + list(RESERVED_INTENTS):
        intern(MironPerceived(name, "outer"))
        intern(MironPerceived(name, "inner"))

    variables: set[str] = set()
    wm_states: set[str] = set()
    completed: set[str] = set()
    for m in model.mirons:
        variables |= m.slot_names | set(m.data_slots)
    for rule in model.rules:
        for branch in rule.branches:
            for atom in branch.atoms:
                if isinstance(atom, VariableState):
                    variables.add(atom.variable)
                elif isinstance(atom, InternalState):
                    wm_states.add(atom.state)
                elif isinstance(atom, MironCompleted):
                    completed.add(atom.name)
        for atom in rule.actions:
            if isinstance(atom, WriteVariable):
                variables.add(atom.variable)
            elif isinstance(atom, SetState):
                wm_states.add(atom.state)
            elif isinstance(atom, InvokeInternal):
                completed.add(atom.action)
            elif isinstance(atom, ProduceMiron):
                completed.add(atom.miron)
    for variable in variables:
        for state in VARIABLE_STATES:
            intern(VariableState(variable, state))
    for state in wm_states:
        intern(InternalState(state, True))
        intern(InternalState(state, False))
    for name in completed:
        intern(MironCompleted(name))

    conditions = tuple(condition_atoms[k] for k in sorted(condition_atoms))
    cond_index = {k: i for i, k in enumerate(sorted(condition_atoms))}

    action_atoms: dict[str, object] = {}
    for rule in model.rules:
        for atom in rule.actions:
            action_atoms.setdefault(atom.key, atom)
    actions = tuple(action_atoms[k] for k in sorted(action_atoms))
    act_index = {k: i for i, k in enumerate(sorted(action_atoms))}

    rules_sorted = sorted(model.rules, key=lambda r: r.rule_id)
    or_index = {rule.rule_id: m for m, rule in enumerate(rules_sorted)}

    and_cells: list[AndCellEntry] = []
    cell_index: dict[tuple[int, int], int] = {}
    for rule in rules_sorted:
        for b in range(len(rule.branches)):
            cell_index[(rule.rule_id, b)] = len(and_cells)
            and_cells.append(AndCellEntry(rule.rule_id, b))

    w_cond, w_rule, w_or, w_act = [], [], [], []
    for rule in rules_sorted:
        m = or_index[rule.rule_id]
        for b, branch in enumerate(rule.branches):
            k = cell_index[(rule.rule_id, b)]
            # a repeated conjunct is the same input line; weights split over
            # the distinct ones so the all-on sum stays exactly 1
            atom_keys = sorted({atom.key for atom in branch.atoms})
            preds = sorted(set(branch.from_rules))
            arity = len(atom_keys) + len(preds)
            if arity > MAX_BRANCH_ARITY:
                raise ArityOverflow(rule.name, arity, MAX_BRANCH_ARITY)
            share = Fraction(1, arity)
            for key in atom_keys:
                w_cond.append((k, cond_index[key], share))
            for pred in preds:
                w_rule.append((k, or_index[pred], share))
            w_or.append((m, k, 1))
        for target in rule.inhibits:
            target_m = or_index[target]
            for b in range(len(rule.branches)):
                w_or.append((target_m, cell_index[(rule.rule_id, b)], -1))
        for atom in rule.actions:
            w_act.append((act_index[atom.key], m, 1))

    weights = WeightSet(
        n_conditions=len(conditions),
        n_and=len(and_cells),
        n_rules=len(rules_sorted),
        n_actions=len(actions),
        w_cond=tuple(sorted(w_cond)),
        w_rule=tuple(sorted(w_rule)),
        w_or=tuple(sorted(set(w_or))),
        w_act=tuple(sorted(set(w_act))),
    )
    weights.validate()
    rule_entries = tuple(
        RuleEntry(
            rule_id=rule.rule_id,
            name=rule.name,
            or_index=or_index[rule.rule_id],
            and_cells=tuple(
                cell_index[(rule.rule_id, b)] for b in range(len(rule.branches))
            ),
        )
        for rule in rules_sorted
    )
    dictionary = Dictionary(
        conditions=conditions,
        actions=actions,
        rules=rule_entries,
        and_cells=tuple(and_cells),
    )
    return weights, dictionary


def compile_model(source_or_model, params: EngineParams = EngineParams()) -> CompiledArtifacts:
    model = source_or_model if isinstance(source_or_model, BehaviorModel) else parse_model(source_or_model)
    weights, dictionary = lower_model(model, params)
    return CompiledArtifacts(
        definitions=list(model.mirons), weights=weights, dictionary=dictionary, params=params
    )


# --- serialization ------------------------------------------------------------

def _canonical_json(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _condition_to_json(atom) -> dict:
    if isinstance(atom, MironPerceived):
        return {"kind": "miron_perceived", "miron": atom.miron, "channel": atom.channel}
    if isinstance(atom, MironCompleted):
        return {"kind": "completed", "name": atom.name}
    if isinstance(atom, VariableState):
        return {"kind": "variable_state", "variable": atom.variable, "state": atom.state}
    if isinstance(atom, InternalState):
        return {"kind": "internal_state", "state": atom.state, "value": bool(atom.value)}
    raise TypeError(atom)


def _condition_from_json(obj) -> object:
    kind = obj["kind"]
    if kind == "miron_perceived":
        return MironPerceived(obj["miron"], obj["channel"])
    if kind == "completed":
        return MironCompleted(obj["name"])
    if kind == "variable_state":
        return VariableState(obj["variable"], obj["state"])
    if kind == "internal_state":
        return InternalState(obj["state"], obj["value"])
    raise ArtifactError(f"unknown condition kind {kind!r}")


def _action_to_json(atom) -> dict:
    if isinstance(atom, ProduceMiron):
        return {
            "kind": "produce",
            "miron": atom.miron,
            "channel": atom.channel,
            "criterion_mode": atom.criterion_mode,
            "criterion_index": atom.criterion_index,
        }
    if isinstance(atom, SetState):
        return {"kind": "set_state", "state": atom.state, "value": atom.value}
    if isinstance(atom, WriteVariable):
        return {"kind": "write", "variable": atom.variable, "expression": [list(p) for p in atom.expression]}
    if isinstance(atom, InvokeInternal):
        return {
            "kind": "invoke",
            "action": atom.action,
            "args": [[name, [list(p) for p in expr]] for name, expr in atom.args],
        }
    raise TypeError(atom)


def _action_from_json(obj) -> object:
    kind = obj["kind"]
    if kind == "produce":
        return ProduceMiron(obj["miron"], obj["channel"], obj["criterion_mode"], obj["criterion_index"])
    if kind == "set_state":
        return SetState(obj["state"], obj["value"])
    if kind == "write":
        return WriteVariable(obj["variable"], tuple(tuple(p) for p in obj["expression"]))
    if kind == "invoke":
        return InvokeInternal(
            obj["action"], tuple((name, tuple(tuple(p) for p in expr)) for name, expr in obj["args"])
        )
    raise ArtifactError(f"unknown action kind {kind!r}")


def emit_artifacts(artifacts: CompiledArtifacts, directory) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    mirons_doc = {
        "schema_version": SCHEMA_VERSION,
        "mirons": [
            {
                "name": d.name,
                "modality": d.modality,
                "direction": d.direction,
                "templates": [t.source for t in d.templates],
                "slots": [{"name": s.name, "pattern": s.pattern} for s in d.slots],
                "data_slots": dict(d.data_slots),
            }
            for d in artifacts.definitions
        ],
    }
    w = artifacts.weights
    rules_doc = {
        "schema_version": SCHEMA_VERSION,
        "params": {
            "epsilon": artifacts.params.epsilon,
            "eta_max": artifacts.params.eta_max,
            "rng_seed": artifacts.params.rng_seed,
        },
        "dims": {
            "n_conditions": w.n_conditions,
            "n_and": w.n_and,
            "n_rules": w.n_rules,
            "n_actions": w.n_actions,
        },
        "w_cond": [[k, n, str(x)] for k, n, x in w.w_cond],
        "w_rule": [[k, m, str(x)] for k, m, x in w.w_rule],
        "w_or": [[m, k, x] for m, k, x in w.w_or],
        "w_act": [[q, m, x] for q, m, x in w.w_act],
    }
    d = artifacts.dictionary
    dictionary_doc = {
        "schema_version": SCHEMA_VERSION,
        "conditions": [_condition_to_json(a) for a in d.conditions],
        "actions": [_action_to_json(a) for a in d.actions],
        "rules": [
            {"id": r.rule_id, "name": r.name, "or_index": r.or_index, "and_cells": list(r.and_cells)}
            for r in d.rules
        ],
        "and_cells": [{"rule_id": c.rule_id, "branch_index": c.branch_index} for c in d.and_cells],
    }
    paths = {}
    for filename, doc in [
        (MIRON_FILE, mirons_doc),
        (RULE_FILE, rules_doc),
        (DICTIONARY_FILE, dictionary_doc),
    ]:
        path = directory / filename
        path.write_bytes(_canonical_json(doc))
        paths[filename] = path
    return paths


def _read_doc(directory: Path, filename: str) -> dict:
    path = directory / filename
    if not path.exists():
        raise ArtifactError(f"missing artifact file {path}")
    doc = json.loads(path.read_text("utf-8"))
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(str(version), SCHEMA_VERSION)
    return doc


def load_artifacts(directory) -> CompiledArtifacts:
    """Read and cross-validate the three artifact files."""
    directory = Path(directory)
    mirons_doc = _read_doc(directory, MIRON_FILE)
    rules_doc = _read_doc(directory, RULE_FILE)
    dictionary_doc = _read_doc(directory, DICTIONARY_FILE)

    definitions = []
    for entry in mirons_doc["mirons"]:
        definitions.append(
            make_definition(
                entry["name"],
                entry["templates"],
                slots=[SlotDecl(s["name"], s.get("pattern")) for s in entry["slots"]],
                data_slots=entry["data_slots"],
                modality=entry["modality"],
                direction=entry["direction"],
            )
        )

    dims = rules_doc["dims"]
    try:
        weights = WeightSet(
            n_conditions=dims["n_conditions"],
            n_and=dims["n_and"],
            n_rules=dims["n_rules"],
            n_actions=dims["n_actions"],
            w_cond=tuple((k, n, Fraction(x)) for k, n, x in rules_doc["w_cond"]),
            w_rule=tuple((k, m, Fraction(x)) for k, m, x in rules_doc["w_rule"]),
            w_or=tuple((m, k, x) for m, k, x in rules_doc["w_or"]),
            w_act=tuple((q, m, x) for q, m, x in rules_doc["w_act"]),
        )
        weights.validate()
    except (ValueError, ZeroDivisionError) as exc:
        raise ArtifactError(f"bad weight entry: {exc}") from exc

    dictionary = Dictionary(
        conditions=tuple(_condition_from_json(o) for o in dictionary_doc["conditions"]),
        actions=tuple(_action_from_json(o) for o in dictionary_doc["actions"]),
        rules=tuple(
            RuleEntry(r["id"], r["name"], r["or_index"], tuple(r["and_cells"]))
            for r in dictionary_doc["rules"]
        ),
        and_cells=tuple(
            AndCellEntry(c["rule_id"], c["branch_index"]) for c in dictionary_doc["and_cells"]
        ),
    )
    if (
        dictionary.n_conditions != weights.n_conditions
        or dictionary.n_and != weights.n_and
        or dictionary.n_rules != weights.n_rules
        or dictionary.n_actions != weights.n_actions
    ):
        raise ArtifactError("dictionary and weight dimensions disagree")

    params_doc = rules_doc["params"]
    params = EngineParams(
        epsilon=params_doc["epsilon"],
        eta_max=params_doc["eta_max"],
        rng_seed=params_doc["rng_seed"],
    )
    known = {m.name for m in definitions}
    for atom in dictionary.actions:
        if isinstance(atom, ProduceMiron) and atom.miron not in known:
            raise UnknownReference(atom.miron)
    return CompiledArtifacts(
        definitions=definitions, weights=weights, dictionary=dictionary, params=params
    )
