#!/usr/bin/env python3
"""Finite-size scaling of eps_c on hyperspheres S^d.

Writes one CSV per dimension (n, mean_eps_c, std_eps_c) plus a JSON summary,
ready for a log-log plot with error bars.
"""

import argparse
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from percshift import GeneratorSpec, fit_scaling


@dataclass
class ScalingConfig:
    dims: list = field(default_factory=lambda: [1, 2, 3])
    n_grid: list = field(default_factory=lambda: [100, 300, 1000, 3000])
    trials: int = 5
    seed: int = 7
    alpha: float = 0.5
    threads: int = 1
    out_dir: str = "results/scaling"


def run(cfg: ScalingConfig) -> dict:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"config": asdict(cfg), "fits": {}}
    for d in cfg.dims:
        t0 = time.time()
        spec = GeneratorSpec("hypersphere", n=2, seed=cfg.seed, d=d)
        fit = fit_scaling(spec, cfg.n_grid, cfg.trials, cfg.alpha, threads=cfg.threads)
        fit.to_csv(out / f"sphere_d{d}.csv")
        summary["fits"][d] = {
            "slope": fit.slope,
            "expected": -1.0 / d,
            "d_hat": fit.d_hat,
            "r_squared": fit.r_squared,
            "seconds": time.time() - t0,
        }
        d_hat = "n/a" if fit.d_hat is None else f"{fit.d_hat:.3f}"
        print(f"S^{d}: slope {fit.slope:+.4f} (expect {-1 / d:+.4f})  d_hat {d_hat}  "
              f"r2 {fit.r_squared:.4f}  [{time.time() - t0:.1f}s]")
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="1,2,3")
    ap.add_argument("--n", default="100,300,1000,3000")
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out-dir", default="results/scaling")
    a = ap.parse_args()
    run(ScalingConfig(
        dims=[int(v) for v in a.dims.split(",")],
        n_grid=[int(v) for v in a.n.split(",")],
        trials=a.trials,
        seed=a.seed,
        threads=a.threads,
        out_dir=a.out_dir,
    ))


if __name__ == "__main__":
    main()
