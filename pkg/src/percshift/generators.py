"""Seeded synthetic clouds with known intrinsic dimension, volume and H2.

Random streams come from numpy's PCG64 seeded through ``SeedSequence``;
trial ``t`` of a run with seed ``s`` uses ``SeedSequence(s, spawn_key=(t,))``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .pointcloud import PointCloud

RNG_ALGORITHM = "PCG64"
KINDS = ("hypersphere", "ball", "cube", "gaussian_mixture", "step_density")

# Default toy mixture: 3 overlapping modes on a circle of radius 0.3.
# Modes must overlap at both variances; once they separate, eps_c is set by
# the inter-mode gaps, which widen as the variance shrinks.
TOY_CENTERS = tuple(
    (0.3 * math.cos(2 * math.pi * k / 3), 0.3 * math.sin(2 * math.pi * k / 3)) for k in range(3)
)
TOY_SIGMA_REAL = 0.5
TOY_SIGMA_COLLAPSED = 0.25


def unit_ball_volume(d: int) -> float:
    """Volume C_d of the unit d-ball."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^d in R^(d+1)."""
    return 2 * math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int
    seed: int = 0
    d: Optional[int] = None
    radius: float = 1.0
    centers: Optional[tuple] = None
    sigma: Optional[float] = None
    weights: Optional[tuple] = None
    w: Optional[float] = None
    ambient_pad: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.ambient_pad < 0:
            raise ValueError("ambient_pad must be >= 0")
        if self.kind in ("hypersphere", "ball", "cube"):
            if self.d is None or self.d < 1:
                raise ValueError(f"{self.kind} needs intrinsic dimension d >= 1")
            if not self.radius > 0:
                raise ValueError("radius must be positive")
        elif self.kind == "gaussian_mixture":
            if not self.centers:
                raise ValueError("gaussian_mixture needs centers")
            c = np.asarray(self.centers, dtype=np.float64)
            if c.ndim != 2:
                raise ValueError("centers must be a list of equal-length coordinate tuples")
            object.__setattr__(self, "centers", tuple(map(tuple, c.tolist())))
            if self.sigma is None or not self.sigma > 0:
                raise ValueError("gaussian_mixture needs sigma > 0")
            k = len(self.centers)
            if self.weights is None:
                object.__setattr__(self, "weights", tuple([1.0 / k] * k))
            w = np.asarray(self.weights, dtype=np.float64)
            if len(w) != k or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
                raise ValueError("weights must be nonnegative, one per center, summing to 1")
            object.__setattr__(self, "weights", tuple(w.tolist()))
            if self.d is None:
                object.__setattr__(self, "d", c.shape[1])
        elif self.kind == "step_density":
            if self.w is None or not 0 < self.w < 1:
                raise ValueError("step_density needs w in (0, 1)")
            if self.d is None:
                object.__setattr__(self, "d", 2)

    @property
    def ambient_dim(self) -> int:
        base = {
            "hypersphere": (self.d or 0) + 1,
            "ball": self.d,
            "cube": self.d,
            "step_density": 2,
            "gaussian_mixture": len(self.centers[0]) if self.centers else None,
        }[self.kind]
        return base + self.ambient_pad

    def volume(self) -> Optional[float]:
        """Analytic measure of the support (None when unbounded)."""
        if self.kind == "hypersphere":
            return sphere_area(self.d) * self.radius**self.d
        if self.kind == "ball":
            return unit_ball_volume(self.d) * self.radius**self.d
        if self.kind == "cube":
            return self.radius**self.d
        if self.kind == "step_density":
            return 1.0
        return None

    def with_n(self, n: int) -> "GeneratorSpec":
        return replace(self, n=n)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        data = dict(data)
        for key in ("centers", "weights"):
            if data.get(key) is not None:
                data[key] = tuple(tuple(c) if isinstance(c, (list, tuple)) else c for c in data[key])
        return cls(**data)


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for (seed, key...); key () is the base stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _sample(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.n
    if spec.kind == "hypersphere":
        g = rng.standard_normal((n, spec.d + 1))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        return spec.radius * g / norms
    if spec.kind == "ball":
        g = rng.standard_normal((n, spec.d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = spec.radius * rng.random(n) ** (1.0 / spec.d)
        return g * r[:, None]
    if spec.kind == "cube":
        return spec.radius * rng.random((n, spec.d))
    if spec.kind == "step_density":
        left = rng.random(n) < spec.w
        u = rng.random(n) * 0.5
        x = np.where(left, u, 0.5 + u)
        return np.column_stack([x, rng.random(n)])
    centers = np.asarray(spec.centers)
    labels = rng.choice(len(centers), size=n, p=np.asarray(spec.weights))
    return centers[labels] + spec.sigma * rng.standard_normal((n, centers.shape[1]))


def generate(spec: GeneratorSpec, trial=None) -> PointCloud:
    """Draw ``spec.n`` points.

    ``trial`` (an int or a tuple of ints) selects an independent sub-stream.
    """
    if trial is None:
        key = ()
    elif isinstance(trial, (tuple, list)):
        key = tuple(int(t) for t in trial)
    else:
        key = (int(trial),)
    pts = _sample(spec, trial_rng(spec.seed, *key))
    if spec.ambient_pad:
        pts = np.hstack([pts, np.zeros((spec.n, spec.ambient_pad))])
    meta = {
        "generator": spec.kind,
        "spec": spec.to_dict(),
        "d": spec.d,
        "volume": spec.volume(),
        "rng": RNG_ALGORITHM,
    }
    if trial is not None:
        meta["trial"] = list(key)
    label = f"{spec.kind}-n{spec.n}"
    return PointCloud(pts, label=label, seed=spec.seed, meta=meta)


def density(spec: GeneratorSpec, x: np.ndarray) -> np.ndarray:
    """Analytic sampling density at points ``x`` (w.r.t. the support's own measure)."""
    x = np.asarray(x, dtype=np.float64)
    if spec.kind in ("hypersphere", "ball", "cube"):
        return np.full(len(x), 1.0 / spec.volume())
    if spec.kind == "step_density":
        return np.where(x[:, 0] < 0.5, 2 * spec.w, 2 * (1 - spec.w))
    centers = np.asarray(spec.centers)
    dim = centers.shape[1]
    sq = ((x[:, None, : dim] - centers[None, :, :]) ** 2).sum(axis=2)
    norm = (2 * math.pi * spec.sigma**2) ** (-dim / 2)
    return norm * np.exp(-sq / (2 * spec.sigma**2)) @ np.asarray(spec.weights)


def analytic_h2(spec: GeneratorSpec) -> float:
    """Collision integral H2 = integral of p(x)^2 over the support."""
    if spec.kind in ("hypersphere", "ball", "cube"):
        return 1.0 / spec.volume()
    if spec.kind == "step_density":
        return 2 * (spec.w**2 + (1 - spec.w) ** 2)
    # isotropic shared-sigma mixture: integral of N(x; a, s^2) N(x; b, s^2) = N(a; b, 2 s^2)
    c = np.asarray(spec.centers)
    w = np.asarray(spec.weights)
    dim = c.shape[1]
    s2 = spec.sigma**2
    sq = ((c[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
    kernel = (4 * math.pi * s2) ** (-dim / 2) * np.exp(-sq / (4 * s2))
    return float(w @ kernel @ w)


def collapse_pair_specs(n: int, seed: int, sigma_real: float = TOY_SIGMA_REAL,
                        sigma_model: float = TOY_SIGMA_COLLAPSED,
                        centers: Sequence = TOY_CENTERS) -> tuple[GeneratorSpec, GeneratorSpec]:
    """Ground-truth mixture and its reduced-variance copy (same mode centers)."""
    real = GeneratorSpec("gaussian_mixture", n=n, seed=seed, centers=tuple(centers), sigma=sigma_real)
    model = replace(real, sigma=sigma_model)
    return real, model
