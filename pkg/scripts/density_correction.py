#!/usr/bin/env python3
"""Non-uniform density: exponent invariance and the H2 amplitude correction.

Fits the scaling slope for a step density on the unit square and compares the
empirical eps_c ratio against the uniform square with the analytic prediction.
"""

import argparse
import json

from percshift import GeneratorSpec, analytic_h2, fit_scaling, h2_corrected_prediction
from percshift.analysis import empirical_h2_ratio


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--w", type=float, default=0.8)
    ap.add_argument("--n", default="100,300,1000,3000")
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--ratio-n", type=int, default=2000)
    ap.add_argument("--ratio-trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()

    spec = GeneratorSpec("step_density", n=2, seed=a.seed, w=a.w)
    fit = fit_scaling(spec, [int(v) for v in a.n.split(",")], a.trials, threads=a.threads)
    predicted = h2_corrected_prediction(spec)
    ratio = empirical_h2_ratio(spec, a.ratio_n, a.ratio_trials, threads=a.threads)
    result = {
        "w": a.w,
        "h2": analytic_h2(spec),
        "slope": fit.slope,
        "predicted_ratio": predicted,
        "empirical_ratio": ratio,
        "relative_gap": ratio / predicted - 1,
    }
    print(json.dumps(result, indent=2))


if __name__ == "__main__":
    main()
