"""Session runtime: events in, engine steps to quiescence, actions out.

A tick drains the event queue, raises the matching condition lines for
exactly one engine step, executes the actions of the rules that fired, and
repeats until nothing is pending.  Inner productions are fed back through
recognition as if a user had said them, which is what lets a model ask
itself questions.
"""
from __future__ import annotations

import datetime
import json
import random
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .compiler import CompiledArtifacts
from .config import RunConfig
from .engine import Dictionary, RuleState, Stepper
from .errors import (
    ArtifactMismatch,
    DuplicateRegistration,
    IterationLimitExceeded,
    MironError,
)
from .mirons import ProductionCriterion, RecognitionResult, RecognizerSet, produce
from .model import (
    InvokeInternal,
    ProduceMiron,
    SetState,
    ValueExpr,
    WriteVariable,
)

NO_MATCH = "no_match"
SESSION_START = "session_start"
FAILURE_VARIABLE = "lastFailedAction"


class WorkingMemoryStore:
    """Boolean states with separate activated/inhibited lines.

    Reset removes the state entirely; a reset state drives neither line, so
    it cannot be tested.
    """

    def __init__(self):
        self._states: dict[str, bool] = {}

    def set(self, name: str, value: str) -> None:
        if value == "reset":
            self._states.pop(name, None)
        else:
            self._states[name] = value == "true"

    def lines(self) -> dict[str, bool]:
        return dict(self._states)

    def as_dict(self) -> dict[str, str]:
        return {name: ("activated" if v else "inhibited") for name, v in sorted(self._states.items())}


class NamedEntityStore:
    """Variables with change tracking against the previous engine step."""

    def __init__(self):
        self._values: dict[str, str | None] = {}
        self._prev: dict[str, str | None] = {}

    def write(self, name: str, value: str | None) -> None:
        self._values[name] = value if value else None

    def get(self, name: str) -> str | None:
        return self._values.get(name)

    def known(self) -> list[str]:
        return sorted(self._values)

    def advance(self) -> None:
        """Step boundary: current values become the comparison baseline."""
        self._prev = dict(self._values)

    def state_lines(self, name: str) -> list[str]:
        if name not in self._values:
            return []
        value = self._values[name]
        return [
            "filled" if value is not None else "empty",
            "changed" if value != self._prev.get(name) else "unchanged",
        ]

    def as_dict(self) -> dict[str, str | None]:
        return dict(sorted(self._values.items()))


# --- events ---------------------------------------------------------------------

@dataclass(frozen=True)
class Event:
    kind: str  # session_start | outer_miron | inner_miron | no_match | action_completed | failure
    intent: str | None = None
    channel: str = "outer"
    result: RecognitionResult | None = None
    detail: str = ""

    def condition_keys(self) -> list[str]:
        if self.kind == "session_start":
            return [f"mi:outer:{SESSION_START}"]
        if self.kind in ("outer_miron", "inner_miron"):
            return [f"mi:{self.channel}:{self.intent}"]
        if self.kind == "no_match":
            return [f"mi:{self.channel}:{NO_MATCH}"]
        if self.kind == "action_completed":
            return [f"af:{self.intent}"]
        return []  # failure events surface through the failure variable


@dataclass(frozen=True)
class EmittedOutput:
    text: str
    intent: str
    modality: str
    step: int


@dataclass(frozen=True)
class StateSnapshot:
    step: int
    active_rules: tuple[str, ...]
    working_memory: dict[str, str]
    variables: dict[str, str | None]
    last_conditions: tuple[str, ...]
    last_actions: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "active_rules": list(self.active_rules),
            "working_memory": dict(self.working_memory),
            "variables": dict(self.variables),
            "last_conditions": list(self.last_conditions),
            "last_actions": list(self.last_actions),
        }


# --- internal actions -------------------------------------------------------------

@dataclass
class HandlerContext:
    """What a handler may see and do: read variables, read config, log."""

    ne: NamedEntityStore
    config: RunConfig
    log: Callable[[dict], None]


Handler = Callable[[dict, HandlerContext], dict]


class InternalActionRegistry:
    def __init__(self):
        self._handlers: dict[str, Handler] = {}

    def register(self, name: str, handler: Handler) -> None:
        if name in self._handlers:
            raise DuplicateRegistration(name)
        self._handlers[name] = handler

    def get(self, name: str) -> Handler | None:
        return self._handlers.get(name)

    def names(self) -> list[str]:
        return sorted(self._handlers)


def clock_handler(args: dict, ctx: HandlerContext) -> dict:
    """Fills currentTime; nondeterministic unless the config pins a time."""
    time = ctx.config.clock_time or datetime.datetime.now().strftime("%H:%M")
    return {"currentTime": time}


def kv_query_handler(args: dict, ctx: HandlerContext) -> dict:
    """Key lookup in the configured JSON fixture, standing in for a database.

    A hit writes the entry's fields plus kvResult=key; a miss writes
    kvMiss=key so rules can branch on either variable changing.
    """
    key = args.get("key", "")
    path = ctx.config.resolve(ctx.config.kv_file)
    table = {}
    if path is not None and path.exists():
        table = json.loads(path.read_text("utf-8"))
    entry = table.get(key)
    if entry is None:
        return {"kvMiss": key}
    writes = {str(k): str(v) for k, v in entry.items()}
    writes["kvResult"] = key
    return writes


def send_message_handler(args: dict, ctx: HandlerContext) -> dict:
    """Records an outbound message; stands in for telephony or email."""
    to = args.get("to", "")
    text = args.get("text", "")
    ctx.log({"kind": "outbound_message", "to": to, "text": text})
    return {"messageSent": to or "unknown"}


def default_registry() -> InternalActionRegistry:
    registry = InternalActionRegistry()
    registry.register("clock", clock_handler)
    registry.register("kv_query", kv_query_handler)
    registry.register("send_message", send_message_handler)
    return registry


# --- session -------------------------------------------------------------------

class Session:
    """One conversation: stores, queue, transcript and the stepped network."""

    def __init__(
        self,
        artifacts: CompiledArtifacts,
        registry: InternalActionRegistry | None = None,
        seed: int | None = None,
        config: RunConfig | None = None,
    ):
        self.config = config or RunConfig()
        self.artifacts = artifacts
        self.dictionary: Dictionary = artifacts.dictionary
        if (
            self.dictionary.n_conditions != artifacts.weights.n_conditions
            or self.dictionary.n_rules != artifacts.weights.n_rules
            or self.dictionary.n_and != artifacts.weights.n_and
            or self.dictionary.n_actions != artifacts.weights.n_actions
        ):
            raise ArtifactMismatch("dictionary and weight matrices disagree on dimensions")
        self.stepper = Stepper(artifacts.weights, artifacts.params)
        self.recognizers = RecognizerSet(artifacts.definitions)
        self.definitions = {d.name: d for d in artifacts.definitions}
        self.registry = registry or default_registry()
        self.rng = random.Random(self.config.seed if seed is None else seed)
        self.rule_state = RuleState.zeros(artifacts.weights.n_rules, artifacts.weights.n_and)
        self.wm = WorkingMemoryStore()
        self.ne = NamedEntityStore()
        self.queue: list[Event] = []
        self.transcript: list[dict] = []
        self.step_counter = 0
        self._seq = 0
        self._last_conditions: tuple[str, ...] = ()
        self._last_actions: tuple[str, ...] = ()
        self.observers: list[Callable[[dict], None]] = []
        self.queue.append(Event(kind="session_start"))

    # -- logging ------------------------------------------------------------

    def _record(self, direction: str, payload: dict) -> None:
        self._seq += 1
        self.transcript.append(
            {"step": self.step_counter, "seq": self._seq, "dir": direction, "payload": payload}
        )

    def _notify(self, kind: str, detail: dict) -> None:
        for observer in self.observers:
            observer({"kind": kind, "step": self.step_counter, **detail})

    def transcript_jsonl(self) -> str:
        return "\n".join(json.dumps(r, sort_keys=True, ensure_ascii=False) for r in self.transcript)

    # -- input ----------------------------------------------------------------

    def ingest_utterance(self, text: str, modality: str = "speech") -> list[RecognitionResult]:
        """Recognize user input and queue the resulting perception events."""
        results = self.recognizers.recognize(text, channel="outer", modality=modality)
        self._record("in", {"text": text, "modality": modality, "intents": [r.intent for r in results]})
        if not results:
            self.queue.append(Event(kind="no_match", channel="outer", detail=text))
            return []
        for result in results:
            self._apply_recognition(result)
            self.queue.append(Event(kind="outer_miron", intent=result.intent, channel="outer", result=result))
        return results

    def _apply_recognition(self, result: RecognitionResult) -> None:
        for name, value in result.slots.items():
            self.ne.write(name, value)
        for name, value in result.data_slots.items():
            self.ne.write(name, value)

    # -- stepping ----------------------------------------------------------------

    def _build_conditions(self, events: list[Event]) -> np.ndarray:
        c = np.zeros(self.dictionary.n_conditions)
        index = self.dictionary.condition_index

        def raise_line(key: str) -> None:
            n = index.get(key)
            if n is not None:
                c[n] = 1.0

        for event in events:
            for key in event.condition_keys():
                raise_line(key)
        for name, active in self.wm.lines().items():
            raise_line(f"wm:{name}:" + ("activated" if active else "inhibited"))
        for name in self.ne.known():
            for state in self.ne.state_lines(name):
                raise_line(f"ne:{name}:{state}")
        return c

    def tick(self) -> list[EmittedOutput]:
        """Run engine steps until quiescence; returns utterances emitted."""
        outputs: list[EmittedOutput] = []
        iterations = 0
        wrote = False
        while self.queue or self.rule_state.r.any() or wrote:
            if iterations >= self.config.max_iterations:
                raise IterationLimitExceeded(self.config.max_iterations, self.transcript[-20:])
            iterations += 1
            events, self.queue = self.queue, []
            c = self._build_conditions(events)
            result = self.stepper.step(c, self.rule_state.r, self.rng)
            self.rule_state.r_and = result.r_and
            self.rule_state.r_wta = result.r_wta
            self.rule_state.r = result.r_next
            self.step_counter += 1
            self._last_conditions = tuple(self.dictionary.condition_names(c))
            self._last_actions = tuple(self.dictionary.action_names(result.actions))
            active = self.dictionary.active_rule_ids(result.r_next)
            if active or self._last_actions:
                names = [self.dictionary.rule_entry(i).name for i in active]
                self._record("action", {"kind": "rules", "active": names})
                self._notify("rules", {"active": names, "actions": list(self._last_actions)})
            # change tracking baseline moves before this step's writes land
            self.ne.advance()
            wrote = False
            for q in np.flatnonzero(result.actions > 0.5):
                if self._execute(self.dictionary.actions[int(q)], outputs):
                    wrote = True
        return outputs

    # -- actions -------------------------------------------------------------------

    def _evaluate(self, expr: ValueExpr) -> str:
        parts = []
        for kind, value in expr:
            if kind == "lit":
                parts.append(value)
            else:
                parts.append(self.ne.get(value) or "")
        return "".join(parts)

    def _execute(self, atom, outputs: list[EmittedOutput]) -> bool:
        """Run one action atom; returns True if it wrote session state."""
        if isinstance(atom, ProduceMiron):
            self._produce(atom, outputs)
            return False
        if isinstance(atom, SetState):
            self.wm.set(atom.state, atom.value)
            self._record("action", {"kind": "set_state", "state": atom.state, "value": atom.value})
            return True
        if isinstance(atom, WriteVariable):
            value = self._evaluate(atom.expression)
            self.ne.write(atom.variable, value)
            self._record("action", {"kind": "write", "variable": atom.variable, "value": value})
            return True
        if isinstance(atom, InvokeInternal):
            return self._invoke(atom)
        raise TypeError(atom)  # pragma: no cover

    def _produce(self, atom: ProduceMiron, outputs: list[EmittedOutput]) -> None:
        definition = self.definitions.get(atom.miron)
        if definition is None:
            self._fail(atom.miron, f"unknown miron '{atom.miron}'")
            return
        bindings = {
            s.name: self.ne.get(s.name) for s in definition.slots if self.ne.get(s.name) is not None
        }
        if atom.criterion_mode == "indexed":
            criterion = ProductionCriterion("indexed", index=atom.criterion_index)
        else:
            criterion = ProductionCriterion("seeded_random", rng_seed=self.rng.getrandbits(32))
        try:
            text = produce(definition, bindings, criterion)
        except (MironError, IndexError) as exc:
            self._fail(atom.miron, str(exc))
            return
        if atom.channel == "outer":
            outputs.append(EmittedOutput(text, atom.miron, definition.modality, self.step_counter))
            self._record("out", {"text": text, "intent": atom.miron, "modality": definition.modality})
            self._notify("utterance", {"text": text, "intent": atom.miron})
            self.queue.append(Event(kind="action_completed", intent=atom.miron))
        else:
            # inner speech: hear yourself exactly as a user would be heard
            self._record("inner", {"text": text, "intent": atom.miron})
            self._notify("inner_speech", {"text": text, "intent": atom.miron})
            results = self.recognizers.recognize(text, channel="inner")
            if not results:
                self.queue.append(Event(kind="no_match", channel="inner", detail=text))
            for result in results:
                self._apply_recognition(result)
                self.queue.append(
                    Event(kind="inner_miron", intent=result.intent, channel="inner", result=result)
                )

    def _invoke(self, atom: InvokeInternal) -> bool:
        handler = self.registry.get(atom.action)
        if handler is None:
            self._fail(atom.action, f"no handler registered for '{atom.action}'")
            return True
        args = {name: self._evaluate(expr) for name, expr in atom.args}
        ctx = HandlerContext(
            ne=self.ne,
            config=self.config,
            log=lambda payload: self._record("action", payload),
        )
        try:
            writes = handler(args, ctx) or {}
        except Exception as exc:
            self._fail(atom.action, f"handler raised: {exc}")
            return True
        for name, value in writes.items():
            self.ne.write(name, value)
        self._record("action", {"kind": "invoke", "action": atom.action, "args": args, "writes": dict(writes)})
        self.queue.append(Event(kind="action_completed", intent=atom.action))
        return bool(writes)

    def _fail(self, name: str, detail: str) -> None:
        self.ne.write(FAILURE_VARIABLE, name)
        self.queue.append(Event(kind="failure", intent=name, detail=detail))
        self._record("action", {"kind": "failure", "action": name, "detail": detail})
        self._notify("failure", {"action": name, "detail": detail})

    # -- observation ------------------------------------------------------------------

    def snapshot(self) -> StateSnapshot:
        active = self.dictionary.active_rule_ids(self.rule_state.r)
        return StateSnapshot(
            step=self.step_counter,
            active_rules=tuple(self.dictionary.rule_entry(i).name for i in active),
            working_memory=self.wm.as_dict(),
            variables=self.ne.as_dict(),
            last_conditions=self._last_conditions,
            last_actions=self._last_actions,
        )


def create_session(
    artifacts: CompiledArtifacts,
    registry: InternalActionRegistry | None = None,
    seed: int | None = None,
    config: RunConfig | None = None,
) -> Session:
    return Session(artifacts, registry=registry, seed=seed, config=config)
