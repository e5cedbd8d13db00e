"""Scaling fits, the percolation shift, density correction and invariance checks."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .generators import GeneratorSpec, analytic_h2, generate, trial_rng
from .metric import PointMap, apply_map, default_threads, distance_spectrum
from .pointcloud import CloudPair, PointCloud
from .percolation import critical_epsilon, spectrum_epsilon

ZONES = ("shrinkage", "healthy", "expansion")


class DataError(ValueError):
    """Input data that makes a diagnostic undefined (e.g. eps_c = 0 under a log)."""


def _pmap(fn, items, threads: Optional[int]):
    threads = default_threads() if threads is None else max(1, threads)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    # map() keeps input order, so the reduction below never depends on scheduling
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class ScalingFit:
    n_values: list
    eps_means: list
    eps_stds: list
    slope: float
    intercept: float
    r_squared: float
    d_hat: Optional[float]
    trials: int
    eps_trials: list

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("n,mean_eps_c,std_eps_c\n")
            for n, m, s in zip(self.n_values, self.eps_means, self.eps_stds):
                fh.write(f"{n},{m!r},{s!r}\n")


def loglog_fit(n_values: Sequence[int], eps_means: Sequence[float]) -> tuple[float, float, float]:
    """OLS of log(eps) on log(N); returns (slope, intercept, r^2)."""
    x = np.log(np.asarray(n_values, dtype=np.float64))
    y = np.log(np.asarray(eps_means, dtype=np.float64))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), min(1.0, max(0.0, r2))


def fit_scaling(
    spec: GeneratorSpec,
    n_grid: Sequence[int],
    trials: int = 5,
    alpha: float = 0.5,
    rule: str = "strict-majority",
    threads: Optional[int] = None,
) -> ScalingFit:
    """Fit eps_c(N) ~ N^slope over ``n_grid``; d_hat = -1/slope.

    Trial t at size N is drawn from the stream keyed (N, t) under ``spec.seed``.
    """
    n_grid = sorted(int(n) for n in n_grid)
    if len(set(n_grid)) < 2:
        raise ValueError("need >= 2 distinct N values")
    if trials < 1:
        raise ValueError("need trials >= 1")
    if n_grid[0] < 2:
        raise ValueError("every N must be >= 2")
    tasks = [(n, t) for n in n_grid for t in range(trials)]

    def one(task):
        n, t = task
        return critical_epsilon(generate(spec.with_n(n), trial=(n, t)), alpha, rule, threads=1)

    eps = _pmap(one, tasks, threads)
    for (n, t), e in zip(tasks, eps):
        if not e > 0:
            raise DataError(f"eps_c = 0 at N={n}, trial {t}: log-log fit undefined")
    per_n = np.asarray(eps).reshape(len(n_grid), trials)
    means = per_n.mean(axis=1)
    stds = per_n.std(axis=1, ddof=1) if trials > 1 else np.zeros(len(n_grid))
    slope, intercept, r2 = loglog_fit(n_grid, means)
    return ScalingFit(
        n_values=n_grid,
        eps_means=means.tolist(),
        eps_stds=stds.tolist(),
        slope=slope,
        intercept=intercept,
        r_squared=r2,
        d_hat=-1.0 / slope if slope < 0 else None,
        trials=trials,
        eps_trials=per_n.tolist(),
    )


@dataclass(frozen=True)
class ShiftReport:
    delta_eps: float
    eps_real: float
    eps_model: float
    ci_low: float
    ci_high: float
    zone: str
    n: int
    resamples: int
    subsample_size: int
    confidence: float

    def to_dict(self) -> dict:
        return asdict(self)


def classify_zone(ci_low: float, ci_high: float) -> str:
    if ci_high < 0:
        return "shrinkage"
    if ci_low > 0:
        return "expansion"
    return "healthy"


def percolation_shift(
    pair: CloudPair,
    alpha: float = 0.5,
    resamples: int = 200,
    subsample_fraction: float = 0.5,
    seed: int = 0,
    confidence: float = 0.95,
    rule: str = "strict-majority",
    threads: Optional[int] = None,
) -> ShiftReport:
    """Delta eps_c = eps_c(model) - eps_c(real) with a subsampling CI.

    Each resample draws one index set of size floor(f*N) without replacement
    and applies it to both clouds, so the N^(-1/d) factor cancels in the
    difference. The CI is the percentile interval of those differences. With
    ``resamples=0`` the interval collapses to the point estimate.
    """
    pair.require_matched()
    if resamples < 0:
        raise ValueError("resamples must be >= 0")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    n = pair.real.n
    m = int(math.floor(subsample_fraction * n))
    if resamples and (m < 2 or m > n):
        raise ValueError(f"subsample size {m} invalid for N={n}; need 2 <= size <= N")
    if not resamples:
        eps_real = critical_epsilon(pair.real, alpha, rule, threads)
        eps_model = critical_epsilon(pair.model, alpha, rule, threads)
        delta = eps_model - eps_real
        return ShiftReport(delta, eps_real, eps_model, delta, delta, classify_zone(delta, delta),
                           n, 0, 0, confidence)

    real = distance_spectrum(pair.real, threads)
    model = distance_spectrum(pair.model, threads)
    eps_real = spectrum_epsilon(real, None, alpha, rule)
    eps_model = spectrum_epsilon(model, None, alpha, rule)
    delta = eps_model - eps_real

    def one(r):
        idx = trial_rng(seed, r).choice(n, size=m, replace=False)
        return spectrum_epsilon(model, idx, alpha, rule) - spectrum_epsilon(real, idx, alpha, rule)

    deltas = np.asarray(_pmap(one, list(range(resamples)), threads))
    tail = 100 * (1 - confidence) / 2
    lo, hi = (float(v) for v in np.percentile(deltas, [tail, 100 - tail]))
    return ShiftReport(
        delta_eps=delta,
        eps_real=eps_real,
        eps_model=eps_model,
        ci_low=lo,
        ci_high=hi,
        zone=classify_zone(lo, hi),
        n=n,
        resamples=resamples,
        subsample_size=m,
        confidence=confidence,
    )


def uniform_h2(spec: GeneratorSpec) -> float:
    """H2 of the uniform law on the same support as ``spec``."""
    vol = spec.volume()
    if vol is None:
        raise ValueError(f"{spec.kind} has no bounded support volume")
    return 1.0 / vol


def h2_corrected_prediction(spec: GeneratorSpec, n: Optional[int] = None) -> float:
    """Predicted eps_c(spec) / eps_c(uniform on the same support) = (H2 / H2_unif)^(-1/d).

    The N^(-1/d) factor is common to both and cancels, so ``n`` only has to be valid.
    """
    if n is not None and n < 2:
        raise ValueError("n must be >= 2")
    if spec.d is None:
        raise ValueError("intrinsic dimension unknown")
    return (analytic_h2(spec) / uniform_h2(spec)) ** (-1.0 / spec.d)


def uniform_counterpart(spec: GeneratorSpec) -> GeneratorSpec:
    """Uniform spec on the same support (step density -> unit square)."""
    if spec.kind == "step_density":
        return GeneratorSpec("cube", n=spec.n, seed=spec.seed, d=2, ambient_pad=spec.ambient_pad)
    if spec.kind in ("cube", "ball", "hypersphere"):
        return spec
    raise ValueError(f"no uniform counterpart for {spec.kind}")


def empirical_h2_ratio(spec: GeneratorSpec, n: int, trials: int = 20, alpha: float = 0.5,
                       threads: Optional[int] = None) -> float:
    """mean eps_c(spec) / mean eps_c(uniform counterpart), independent draws."""
    uni = uniform_counterpart(spec)

    def one(task):
        which, t = task
        s = (spec if which == 0 else uni).with_n(n)
        return critical_epsilon(generate(s, trial=(which, t)), alpha, threads=1)

    tasks = [(w, t) for w in (0, 1) for t in range(trials)]
    eps = np.asarray(_pmap(one, tasks, threads)).reshape(2, trials)
    return float(eps[0].mean() / eps[1].mean())


@dataclass(frozen=True)
class InvarianceReport:
    eps_original: float
    eps_mapped: float
    c1: float
    c2: float
    lower_ok: bool
    upper_ok: bool

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> dict:
        return asdict(self)


def invariance_check(
    cloud: PointCloud,
    pmap: PointMap,
    alpha: float = 0.5,
    rule: str = "strict-majority",
    threads: Optional[int] = None,
) -> InvarianceReport:
    """Check c1*eps_c <= eps_c(mapped) <= c2*eps_c for a bi-Lipschitz map."""
    if not pmap.known_bounds:
        raise ValueError("map has unknown Lipschitz constants")
    eps0 = critical_epsilon(cloud, alpha, rule, threads)
    eps1 = critical_epsilon(apply_map(cloud, pmap), alpha, rule, threads)
    return InvarianceReport(
        eps_original=eps0,
        eps_mapped=eps1,
        c1=pmap.c1,
        c2=pmap.c2,
        lower_ok=bool(pmap.c1 * eps0 <= eps1),
        upper_ok=bool(eps1 <= pmap.c2 * eps0),
    )
