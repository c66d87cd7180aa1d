#!/usr/bin/env python3
"""Measure winner-takes-all selection frequencies for fan-outs 2..8."""
import random
from fractions import Fraction

import numpy as np

from miron.engine import EngineParams, Stepper, WeightSet


def fanout_stepper(t: int) -> Stepper:
    weights = WeightSet(
        n_conditions=1,
        n_and=t + 1,
        n_rules=t + 1,
        n_actions=1,
        w_cond=((t, 0, Fraction(1)),),
        w_rule=tuple((k, 0, Fraction(1)) for k in range(t)),
        w_or=tuple((k + 1, k, 1) for k in range(t)) + ((0, t, 1),),
        w_act=((0, 0, 1),),
    )
    return Stepper(weights, EngineParams())


def main() -> None:
    trials = 20_000
    for t in range(2, 9):
        stepper = fanout_stepper(t)
        rng = random.Random(t)
        r = np.zeros(t + 1)
        r[0] = 1.0
        c = np.zeros(1)
        r_and = stepper.and_layer(c, r)
        counts = np.zeros(t)
        for _ in range(trials):
            r_wta, _ = stepper.wta_preselect(r_and, r, c, rng)
            counts += r_wta[:t]
        freqs = ", ".join(f"{f:.3f}" for f in counts / trials)
        print(f"t={t}: [{freqs}]  (uniform would be {1/t:.3f})")


if __name__ == "__main__":
    main()
