#!/usr/bin/env python3
"""Compile the receptionist model and run its whole scenario suite."""
import json
import sys
from pathlib import Path

from miron import compile_model, load_scenario, run_scenario
from miron.config import RunConfig

ROOT = Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"


def main() -> int:
    artifacts = compile_model((MODELS / "receptionist.model").read_text())
    config = RunConfig(kv_file=str(MODELS / "visitors.json"), clock_time="14:30")
    failures = 0
    for path in sorted((MODELS / "scenarios").glob("*.scn")):
        report = run_scenario(load_scenario(path), artifacts, config=config)
        print(("PASS " if report.passed else "FAIL ") + report.scenario)
        if not report.passed:
            failures += 1
            for check in report.checks:
                if not check.ok:
                    print(f"  {check.check}: {check.detail}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
