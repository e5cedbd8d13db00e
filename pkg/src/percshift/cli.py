"""Command-line entry point: ``percshift <subcommand> ...``.

Reports are JSON (with an embedded run manifest); curve and trace data can
additionally be written as CSV. Exit codes: 0 ok, 2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .analysis import (
    empirical_h2_ratio,
    fit_scaling,
    h2_corrected_prediction,
    invariance_check,
    percolation_shift,
)
from .generators import (
    TOY_CENTERS,
    TOY_SIGMA_REAL,
    RNG_ALGORITHM,
    GeneratorSpec,
    analytic_h2,
    generate,
    trial_rng,
)
from .metric import THREADS_ENV, PointMap, distance_spectrum, random_linear_map
from .percolation import RULES, critical_threshold, curve_on_grid, percolate, threshold_of_cloud
from .pointcloud import CloudPair, load_cloud, save_cloud
from .toposloss import DivergenceError, expand_demo, topo_loss

EXIT_DATA = 3

KIND_ALIASES = {
    "hypersphere": "hypersphere",
    "sphere": "hypersphere",
    "ball": "ball",
    "cube": "cube",
    "step": "step_density",
    "step_density": "step_density",
    "mixture": "gaussian_mixture",
    "gaussian_mixture": "gaussian_mixture",
}


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return v


def _centers(text: str) -> tuple:
    return tuple(tuple(_floats(c)) for c in text.split(";") if c.strip())


def _spec_from_args(args, n=None) -> GeneratorSpec:
    if getattr(args, "spec", None):
        with open(args.spec) as fh:
            data = json.load(fh)
        if n is not None:
            data["n"] = n
        if args.seed is not None:
            data["seed"] = args.seed
        return GeneratorSpec.from_dict(data)
    kind = KIND_ALIASES[args.kind]
    seed = args.seed if args.seed is not None else 0
    kw = dict(kind=kind, n=n if n is not None else args.n, seed=seed, ambient_pad=args.pad)
    if kind in ("hypersphere", "ball", "cube"):
        kw.update(d=args.d, radius=args.radius)
    elif kind == "step_density":
        kw.update(w=args.w)
    else:
        kw.update(
            centers=args.centers or TOY_CENTERS,
            sigma=args.sigma if args.sigma is not None else TOY_SIGMA_REAL,
            weights=tuple(args.weights) if args.weights else None,
        )
    return GeneratorSpec(**kw)


def _add_spec_args(p, with_n=True):
    p.add_argument("--kind", choices=sorted(KIND_ALIASES), default=None)
    p.add_argument("--spec", help="generator spec as a JSON file (overrides --kind etc.)")
    p.add_argument("--d", type=int, help="intrinsic dimension")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--w", type=float, help="step density: mass on the left half")
    p.add_argument("--sigma", type=float, help="mixture: per-mode standard deviation")
    p.add_argument("--centers", type=_centers, help='mixture centers "x,y;x,y;..."')
    p.add_argument("--weights", type=_floats)
    p.add_argument("--pad", type=int, default=0, help="extra zero ambient dimensions")
    if with_n:
        p.add_argument("--n", type=int, required=True)


def _common(p, seed=False, seed_required=False):
    p.add_argument("--out", default="-", help="JSON report path, '-' for stdout")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default ${THREADS_ENV} or 1)")
    if seed:
        p.add_argument("--seed", type=int, required=seed_required, default=None)


def _threshold_args(p):
    p.add_argument("--alpha", type=_fraction, default=0.5)
    p.add_argument("--rule", choices=RULES, default="strict-majority")


def _emit(args, report: dict, started: float, argv):
    report["manifest"] = {
        "command": " ".join(["percshift", *argv]),
        "parameters": {k: v for k, v in vars(args).items() if k != "func"},
        "rng": {"algorithm": RNG_ALGORITHM, "seed": getattr(args, "seed", None)},
        "tool_version": __version__,
        "wall_time": time.time() - started,
    }
    text = json.dumps(report, indent=2, default=_jsonable)
    dest = getattr(args, "report", None) or args.out
    if dest == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(dest, "w") as fh:
            fh.write(text + "\n")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def cmd_gen(args):
    spec = _spec_from_args(args)
    cloud = generate(spec)
    save_cloud(cloud, args.cloud_out, args.format)
    return {"path": args.cloud_out, "n": cloud.n, "dim": cloud.dim, "meta": cloud.meta}


def cmd_curve(args):
    cloud = load_cloud(args.input, args.format)
    curve = percolate(distance_spectrum(cloud, args.threads), cloud.n)
    est = critical_threshold(curve, args.alpha, args.rule)
    if args.grid:
        curve = curve_on_grid(curve, args.grid)
    if args.csv:
        curve.to_csv(args.csv)
    return {"n": cloud.n, "points": len(curve.epsilons), "csv": args.csv, "threshold": est.to_dict()}


def cmd_threshold(args):
    cloud = load_cloud(args.input, args.format)
    if cloud.n < 2:
        raise ValueError(f"insufficient points: need N >= 2, got {cloud.n}")
    return threshold_of_cloud(cloud, args.alpha, args.rule, threads=args.threads).to_dict()


def cmd_shift(args):
    real = load_cloud(args.real, args.format)
    model = load_cloud(args.model, args.format)
    pair = CloudPair(real, model)
    pair.require_matched()
    rep = percolation_shift(
        pair,
        alpha=args.alpha,
        resamples=args.resamples,
        subsample_fraction=args.subsample,
        seed=args.seed,
        confidence=args.confidence,
        rule=args.rule,
        threads=args.threads,
    )
    return rep.to_dict()


def cmd_fit_scaling(args):
    spec = _spec_from_args(args, n=min(args.n))
    fit = fit_scaling(spec, args.n, args.trials, args.alpha, args.rule, args.threads)
    if args.csv:
        fit.to_csv(args.csv)
    return {"spec": spec.to_dict(), **fit.to_dict()}


def cmd_h2(args):
    spec = _spec_from_args(args)
    out = {"spec": spec.to_dict(), "h2": analytic_h2(spec)}
    try:
        out["predicted_ratio"] = h2_corrected_prediction(spec, spec.n)
    except ValueError as exc:
        out["predicted_ratio"] = None
        out["note"] = str(exc)
    if args.trials and out["predicted_ratio"] is not None:
        out["empirical_ratio"] = empirical_h2_ratio(spec, spec.n, args.trials, args.alpha, args.threads)
    return out


def cmd_invariance(args):
    cloud = load_cloud(args.input, args.format)
    if args.map == "identity":
        pmap = PointMap()
    elif args.map == "scale":
        if args.factor is None:
            raise _Usage("--map scale needs --factor")
        pmap = PointMap.scale(args.factor)
    elif args.matrix:
        pmap = PointMap.linear(np.loadtxt(args.matrix, delimiter=",", ndmin=2))
    else:
        if args.seed is None or not args.singular_values:
            raise _Usage("--map linear needs --matrix, or --singular-values with --seed")
        pmap = random_linear_map(cloud.dim, args.singular_values, trial_rng(args.seed))
    rep = invariance_check(cloud, pmap, args.alpha, args.rule, args.threads)
    return {**rep.to_dict(), "map": pmap.describe()}


def cmd_loss(args):
    real = load_cloud(args.real, args.format)
    fake = load_cloud(args.fake, args.format)
    return topo_loss(real, fake, args.k).to_dict(with_gradient=args.gradient)


def cmd_expand(args):
    real = load_cloud(args.real, args.format)
    fake = load_cloud(args.fake, args.format)
    try:
        trace = expand_demo(real, fake, args.steps, args.lr, args.alpha, args.k, args.eval_every)
    except DivergenceError as exc:
        if args.csv:
            exc.trace.to_csv(args.csv)
        raise
    if args.csv:
        trace.to_csv(args.csv)
    if args.cloud_out:
        save_cloud(trace.final_cloud, args.cloud_out, args.format)
    first, last = trace.initial, trace.final
    return {
        **trace.to_dict(),
        "initial_loss": first[1],
        "final_loss": last[1],
        "initial_delta_eps": first[3],
        "final_delta_eps": last[3],
    }


def cmd_spectrum(args):
    cloud = load_cloud(args.input, args.format)
    spec = distance_spectrum(cloud, args.threads)
    spec.to_csv(args.csv)
    return {"n": cloud.n, "pairs": len(spec), "csv": args.csv}


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="percshift", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--format", choices=("csv", "binary"), default=None,
                       help="cloud file format (default: from the file suffix)")
        return p

    p = add("gen", cmd_gen, "generate a synthetic cloud")
    _add_spec_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", dest="cloud_out", required=True, help="cloud file to write")
    p.add_argument("--report", default="-", help="JSON report path, '-' for stdout")
    p.add_argument("--threads", type=int, default=None)

    p = add("curve", cmd_curve, "percolation curve of a cloud")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--csv", help="write 'epsilon,p_inf' rows here")
    p.add_argument("--grid", type=_floats, help="resample on these ascending radii")
    _threshold_args(p)
    _common(p)

    p = add("threshold", cmd_threshold, "critical radius eps_c of a cloud")
    p.add_argument("--in", dest="input", required=True)
    _threshold_args(p)
    _common(p)

    p = add("shift", cmd_shift, "percolation shift between a real and a model cloud")
    p.add_argument("--real", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--resamples", type=int, default=200)
    p.add_argument("--subsample", type=_fraction, default=0.5)
    p.add_argument("--confidence", type=_fraction, default=0.95)
    _threshold_args(p)
    _common(p, seed=True)

    p = add("fit-scaling", cmd_fit_scaling, "log-log fit of eps_c against N")
    _add_spec_args(p, with_n=False)
    p.add_argument("--n", type=_ints, required=True, help="comma-separated sample sizes")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--csv", help="write 'n,mean_eps_c,std_eps_c' rows here")
    _threshold_args(p)
    _common(p, seed=True, seed_required=True)

    p = add("h2", cmd_h2, "collision integral and density-corrected eps_c ratio")
    _add_spec_args(p)
    p.add_argument("--trials", type=int, default=0, help="also estimate the ratio empirically")
    _threshold_args(p)
    _common(p, seed=True)

    p = add("invariance", cmd_invariance, "bi-Lipschitz sandwich check of eps_c")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--map", choices=("identity", "scale", "linear"), default="identity")
    p.add_argument("--factor", type=float)
    p.add_argument("--matrix", help="CSV file holding the linear map (D' rows x D columns)")
    p.add_argument("--singular-values", type=_floats, help="random linear map with these singular values")
    _threshold_args(p)
    _common(p, seed=True)

    p = add("loss", cmd_loss, "sorted-distance topo loss between two clouds")
    p.add_argument("--real", required=True)
    p.add_argument("--fake", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--gradient", action="store_true", help="include the gradient matrix")
    _common(p)

    p = add("expand", cmd_expand, "gradient-descent expansion demo")
    p.add_argument("--real", required=True)
    p.add_argument("--fake", required=True)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--eval-every", type=int, default=10)
    p.add_argument("--csv", help="write 'iter,loss,eps_c,delta_eps' rows here")
    p.add_argument("--cloud-out", help="write the final fake cloud here")
    _threshold_args(p)
    _common(p)

    p = add("spectrum", cmd_spectrum, "export the sorted distance spectrum")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--csv", required=True)
    _common(p)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("gen", "fit-scaling", "h2") and not args.spec and not args.kind:
        parser.error("--kind or --spec is required")
    if args.command == "shift" and args.resamples > 0 and args.seed is None:
        parser.error("shift with --resamples > 0 requires --seed")
    if args.command == "h2" and args.trials > 0 and args.seed is None:
        parser.error("h2 with --trials > 0 requires --seed")
    started = time.time()
    try:
        report = args.func(args)
    except _Usage as exc:
        parser.error(str(exc))
    except (ValueError, OSError, DivergenceError) as exc:
        print(f"percshift {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    _emit(args, report, started, argv)
    return 0


if __name__ == "__main__":
    sys.exit(main())
