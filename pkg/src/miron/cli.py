"""Command-line entry point: compile, run, serve, simulate.

Exit codes: 0 success; 1 failed compilation, failed scenario assertions or
runtime faults; 2 usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .compiler import (
    CompiledArtifacts,
    compile_model,
    emit_artifacts,
    load_artifacts,
    validate_model,
)
from .config import load_config
from .engine import EngineParams
from .errors import MironError
from .model_parser import parse_model
from .runtime import create_session
from .simulator import load_scenario, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miron", description="mirror-template dialog engine"
    )
    parser.add_argument("--config", help="config file (or set MIRON_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compile = sub.add_parser("compile", help="compile a model to artifact files")
    p_compile.add_argument("model", help="model source file")
    p_compile.add_argument("-o", "--out", required=True, help="output directory")

    p_run = sub.add_parser("run", help="interactive terminal dialog")
    p_run.add_argument("--artifacts", required=True, help="compiled artifact directory")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--verbose", action="store_true", help="show rule and inner-speech activity")

    p_serve = sub.add_parser("serve", help="serve sessions over WebSocket")
    p_serve.add_argument("--artifacts", required=True)
    p_serve.add_argument("--listen", default="127.0.0.1:8765", help="host:port")

    p_sim = sub.add_parser("simulate", help="run scenario files")
    p_sim.add_argument("scenarios", nargs="+", help="scenario files")
    p_sim.add_argument("--artifacts", required=True)
    return parser


def cmd_compile(args, config) -> int:
    source = Path(args.model).read_text("utf-8")
    try:
        model = parse_model(source)
    except MironError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    diagnostics = validate_model(model)
    for diag in diagnostics:
        print(str(diag), file=sys.stderr)
    if any(d.severity == "error" for d in diagnostics):
        return 1
    artifacts = compile_model(model, EngineParams(rng_seed=config.seed))
    paths = emit_artifacts(artifacts, args.out)
    for path in paths.values():
        print(path)
    return 0


def _load(args, config) -> CompiledArtifacts:
    return load_artifacts(args.artifacts)


def cmd_run(args, config) -> int:
    artifacts = _load(args, config)
    session = create_session(artifacts, seed=args.seed, config=config)
    if args.verbose:
        session.observers.append(
            lambda event: print(f"  [{event['kind']}] {json.dumps(event, default=str)}")
        )
    for output in session.tick():
        print(f"sys> {output.text}")
    print("(type :state for a snapshot, :quit to exit)")
    while True:
        try:
            line = input("you> ")
        except EOFError:
            return 0
        line = line.strip()
        if line == ":quit":
            return 0
        if line == ":state":
            print(json.dumps(session.snapshot().to_json(), indent=2, sort_keys=True))
            continue
        if not line:
            continue
        session.ingest_utterance(line)
        try:
            outputs = session.tick()
        except MironError as exc:
            print(f"engine fault: {exc}", file=sys.stderr)
            return 1
        for output in outputs:
            print(f"sys> {output.text}")


def cmd_serve(args, config) -> int:
    import uvicorn

    from .service import create_app

    artifacts = _load(args, config)
    model_id = Path(args.artifacts).resolve().name or "model"
    app = create_app({model_id: artifacts}, config)
    host, _, port = args.listen.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def cmd_simulate(args, config) -> int:
    artifacts = _load(args, config)
    all_passed = True
    for path in args.scenarios:
        scenario = load_scenario(path)
        report = run_scenario(scenario, artifacts, config=config)
        for line in report.lines():
            print(json.dumps(line, sort_keys=True))
        all_passed = all_passed and report.passed
    return 0 if all_passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: cannot load config: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "compile":
            return cmd_compile(args, config)
        if args.command == "run":
            return cmd_run(args, config)
        if args.command == "serve":
            return cmd_serve(args, config)
        return cmd_simulate(args, config)
    except MironError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
