"""Scripted dialog scenarios: a user model drives a session, checks land in a report.

The user side reuses the production machinery, so a scenario can speak
through the very same definitions the system recognizes with.  Scenario
files share the block syntax of the model format:

    scenario greet {
      seed: 42
      step produce say_Hello with phaseOfDay = "morning"
      step expect intent say_Hello
      assert state greetingsExpected is false
    }
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .compiler import CompiledArtifacts
from .config import RunConfig
from .errors import ModelSyntaxError, ScenarioError
from .mirons import ProductionCriterion, produce, recognize
from .model_parser import _Cursor, _strip_comment, _tokenize
from .runtime import InternalActionRegistry, Session, create_session


@dataclass(frozen=True)
class SayStep:
    text: str
    modality: str = "speech"


@dataclass(frozen=True)
class ProduceStep:
    miron: str
    bindings: tuple[tuple[str, str], ...] = ()
    index: int | None = None


@dataclass(frozen=True)
class ExpectStep:
    kind: str  # intent | text | quiet
    value: str = ""


@dataclass(frozen=True)
class Given:
    kind: str  # state | variable
    name: str
    value: str


@dataclass(frozen=True)
class Assertion:
    kind: str  # state | variable | transcript | outputs
    name: str = ""
    value: str = ""


@dataclass
class Scenario:
    name: str
    seed: int
    givens: tuple[Given, ...] = ()
    steps: tuple = ()
    assertions: tuple[Assertion, ...] = ()


@dataclass
class CheckResult:
    check: str
    ok: bool
    detail: str = ""


@dataclass
class Report:
    scenario: str
    checks: list[CheckResult] = field(default_factory=list)
    transcript: str = ""

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def lines(self) -> list[dict]:
        out = [
            {"scenario": self.scenario, "check": c.check, "ok": c.ok, "detail": c.detail}
            for c in self.checks
        ]
        out.append({"scenario": self.scenario, "passed": self.passed})
        return out


def load_scenario(source_or_path) -> Scenario:
    """Parse one scenario document (a path or literal text)."""
    text = source_or_path
    if isinstance(source_or_path, (str, Path)) and "\n" not in str(source_or_path):
        text = Path(source_or_path).read_text("utf-8")
    lines = str(text).splitlines()
    name = None
    seed = None
    givens: list[Given] = []
    steps: list = []
    assertions: list[Assertion] = []
    in_block = False
    for i, raw in enumerate(lines):
        lineno = i + 1
        line = _strip_comment(raw).strip()
        if not line:
            continue
        cur = _Cursor(_tokenize(line, lineno), lineno)
        if not in_block:
            cur.expect_word("scenario")
            name = cur.next()[1]
            cur.expect_word("{")
            in_block = True
            continue
        if line == "}":
            in_block = False
            continue
        head = cur.expect_word("seed", "given", "step", "assert")
        if head == "seed":
            cur.expect_word(":")
            seed = int(cur.next()[1])
        elif head == "given":
            kind = cur.expect_word("state", "variable")
            given_name = cur.next()[1]
            if kind == "state":
                cur.expect_word("is")
                givens.append(Given("state", given_name, cur.expect_word("true", "false")))
            else:
                cur.expect_word("=")
                givens.append(Given("variable", given_name, cur.next("str")[1]))
        elif head == "step":
            steps.append(_parse_step(cur))
        else:
            assertions.append(_parse_assertion(cur))
        if not cur.done():
            raise ModelSyntaxError(lineno, "trailing tokens")
    if name is None:
        raise ScenarioError("no scenario block found")
    if seed is None:
        raise ScenarioError(f"scenario '{name}' has no seed; runs must be reproducible")
    if not assertions:
        raise ScenarioError(f"scenario '{name}' asserts nothing")
    return Scenario(
        name=name, seed=seed, givens=tuple(givens), steps=tuple(steps), assertions=tuple(assertions)
    )


def _parse_step(cur: _Cursor):
    kind = cur.expect_word("say", "produce", "expect")
    if kind == "say":
        text = cur.next("str")[1]
        modality = "speech"
        if cur.take_word("modality"):
            modality = cur.next()[1]
        return SayStep(text, modality)
    if kind == "produce":
        miron = cur.next()[1]
        bindings = []
        index = None
        if cur.take_word("with"):
            while True:
                slot = cur.next()[1]
                cur.expect_word("=")
                bindings.append((slot, cur.next("str")[1]))
                if not cur.take_word(","):
                    break
        if cur.take_word("index"):
            index = int(cur.next()[1])
        return ProduceStep(miron, tuple(bindings), index)
    what = cur.expect_word("intent", "text", "quiet")
    if what == "quiet":
        return ExpectStep("quiet")
    return ExpectStep(what, cur.next()[1])


def _parse_assertion(cur: _Cursor) -> Assertion:
    kind = cur.expect_word("state", "variable", "transcript", "outputs")
    if kind == "state":
        name = cur.next()[1]
        cur.expect_word("is")
        return Assertion("state", name, cur.expect_word("true", "false", "reset"))
    if kind == "variable":
        name = cur.next()[1]
        cur.expect_word("is")
        nxt = cur.peek()
        if nxt and nxt[0] == "str":
            return Assertion("variable", name, cur.next("str")[1])
        return Assertion("variable", name, cur.expect_word("filled", "empty"))
    if kind == "transcript":
        cur.expect_word("contains")
        return Assertion("transcript", value=cur.next("str")[1])
    return Assertion("outputs", value=cur.next()[1])


def run_scenario(
    scenario: Scenario,
    artifacts: CompiledArtifacts,
    registry: InternalActionRegistry | None = None,
    config: RunConfig | None = None,
) -> Report:
    """Alternate user steps and ticks; evaluate expectations and assertions."""
    report = Report(scenario=scenario.name)
    session = create_session(artifacts, registry=registry, seed=scenario.seed, config=config)
    definitions = {d.name: d for d in artifacts.definitions}
    for step in scenario.steps:
        if isinstance(step, ProduceStep) and step.miron not in definitions:
            raise ScenarioError(f"scenario produces unknown miron '{step.miron}'")
    user_rng = random.Random(scenario.seed ^ 0x5EED)
    for given in scenario.givens:
        if given.kind == "state":
            session.wm.set(given.name, given.value)
        else:
            session.ne.write(given.name, given.value)
    all_outputs = []
    last_turn = list(session.tick())
    all_outputs.extend(last_turn)
    for step in scenario.steps:
        if isinstance(step, SayStep):
            session.ingest_utterance(step.text, step.modality)
            last_turn = list(session.tick())
            all_outputs.extend(last_turn)
        elif isinstance(step, ProduceStep):
            definition = definitions[step.miron]
            if step.index is not None:
                criterion = ProductionCriterion("indexed", index=step.index)
            else:
                criterion = ProductionCriterion("seeded_random", rng_seed=user_rng.getrandbits(32))
            text = produce(definition, dict(step.bindings), criterion)
            session.ingest_utterance(text, definition.modality)
            last_turn = list(session.tick())
            all_outputs.extend(last_turn)
        elif isinstance(step, ExpectStep):
            report.checks.append(_evaluate_expect(step, last_turn, artifacts))
        else:  # pragma: no cover
            raise TypeError(step)
    snapshot = session.snapshot()
    transcript = session.transcript_jsonl()
    for assertion in scenario.assertions:
        report.checks.append(_evaluate_assertion(assertion, snapshot, transcript, all_outputs))
    report.transcript = transcript
    return report


def _evaluate_expect(step: ExpectStep, outputs, artifacts) -> CheckResult:
    texts = [o.text for o in outputs]
    if step.kind == "quiet":
        return CheckResult("expect quiet", not outputs, f"outputs: {texts}")
    if step.kind == "text":
        return CheckResult(f"expect text {step.value!r}", step.value in texts, f"outputs: {texts}")
    recognized: set[str] = set()
    for text in texts:
        recognized |= {r.intent for r in recognize(text, artifacts.definitions, channel="outer")}
    return CheckResult(
        f"expect intent {step.value}", step.value in recognized, f"recognized: {sorted(recognized)}"
    )


def _evaluate_assertion(assertion: Assertion, snapshot, transcript: str, outputs) -> CheckResult:
    if assertion.kind == "state":
        wm = snapshot.working_memory
        actual = wm.get(assertion.name, "reset")
        expected = {"true": "activated", "false": "inhibited", "reset": "reset"}[assertion.value]
        return CheckResult(
            f"state {assertion.name} is {assertion.value}", actual == expected, f"actual: {actual}"
        )
    if assertion.kind == "variable":
        actual = snapshot.variables.get(assertion.name)
        if assertion.value == "filled":
            ok = actual is not None
        elif assertion.value == "empty":
            ok = actual is None
        else:
            ok = actual == assertion.value
        return CheckResult(
            f"variable {assertion.name} is {assertion.value}", ok, f"actual: {actual!r}"
        )
    if assertion.kind == "transcript":
        return CheckResult(
            f"transcript contains {assertion.value!r}", assertion.value in transcript, ""
        )
    expected_count = int(assertion.value)
    return CheckResult(
        f"outputs {assertion.value}", len(outputs) == expected_count, f"actual: {len(outputs)}"
    )
