"""Sorted pairwise-distance matching loss and its analytic gradient.

    L = (1/K) * sum_k (d_(k)^fake - d_(k)^real)^2

where d_(k) is the k-th smallest pairwise distance of a batch. The gradient
holds the current sort permutation fixed (a subgradient at rank ties) and
chains d(d_ij)/d(x_i) = (x_i - x_j) / d_ij onto the pair realising each rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .metric import distance_spectrum
from .percolation import critical_epsilon
from .pointcloud import PointCloud


class DivergenceError(RuntimeError):
    """Gradient descent blew up; ``trace`` holds the steps recorded so far."""

    def __init__(self, message: str, trace: "ExpansionTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True, eq=False)
class TopoLossResult:
    value: float
    gradient: np.ndarray
    k_used: int
    fake_pairs: np.ndarray
    real_pairs: np.ndarray

    @property
    def pairing(self) -> list[tuple[int, tuple[int, int], tuple[int, int]]]:
        """(rank, fake pair, real pair) for every order statistic used."""
        return [
            (k, tuple(f), tuple(r))
            for k, (f, r) in enumerate(zip(self.fake_pairs.tolist(), self.real_pairs.tolist()))
        ]

    def to_dict(self, with_gradient: bool = False) -> dict:
        out = {"value": self.value, "k_used": self.k_used}
        if with_gradient:
            out["gradient"] = self.gradient.tolist()
        return out


def _resolve_k(k, m_real: int, m_fake: int) -> int:
    kmax = min(m_real, m_fake)
    if k is None or k == "all":
        return kmax
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > kmax:
        raise ValueError(f"k={k} exceeds the available pairs ({kmax})")
    return k


def topo_loss(real: PointCloud, fake: PointCloud, k=None) -> TopoLossResult:
    """Loss value and gradient with respect to the fake points.

    ``k=None`` (or "all") matches every rank of the smaller spectrum. Batches
    of different size are compared rank by rank over the first K entries.
    """
    if real.dim != fake.dim:
        raise ValueError(f"dimension mismatch: real D={real.dim}, fake D={fake.dim}")
    sr = distance_spectrum(real)
    sf = distance_spectrum(fake)
    kk = _resolve_k(k, len(sr), len(sf))
    df = sf.distances[:kk]
    dr = sr.distances[:kk]
    fi, fj = sf.i[:kk], sf.j[:kk]
    zero = np.flatnonzero(df == 0)
    if len(zero):
        z = zero[0]
        raise ValueError(
            f"fake points {int(fi[z])} and {int(fj[z])} coincide (rank {int(z)}); gradient undefined"
        )
    diff = df - dr
    value = float(np.mean(diff * diff))
    x = fake.points
    coef = (2.0 / kk) * diff / df
    contrib = coef[:, None] * (x[fi] - x[fj])
    grad = np.zeros_like(x)
    np.add.at(grad, fi, contrib)
    np.add.at(grad, fj, -contrib)
    return TopoLossResult(
        value=value,
        gradient=grad,
        k_used=kk,
        fake_pairs=np.column_stack([fi, fj]),
        real_pairs=np.column_stack([sr.i[:kk], sr.j[:kk]]),
    )


def loss_direction(real: PointCloud, fake: PointCloud, k=None) -> str:
    """"repulsive" if every used fake order statistic is below the real one,
    "attractive" if every one is above, otherwise "mixed"."""
    sr = distance_spectrum(real)
    sf = distance_spectrum(fake)
    kk = _resolve_k(k, len(sr), len(sf))
    diff = sf.distances[:kk] - sr.distances[:kk]
    if np.all(diff < 0):
        return "repulsive"
    if np.all(diff > 0):
        return "attractive"
    return "mixed"


@dataclass
class ExpansionTrace:
    learning_rate: float
    steps: list = field(default_factory=list)
    final_cloud: Optional[PointCloud] = None

    @property
    def initial(self):
        return self.steps[0]

    @property
    def final(self):
        return self.steps[-1]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iter,loss,eps_c,delta_eps\n")
            for it, loss, eps, delta in self.steps:
                fh.write(f"{it},{loss!r},{eps!r},{delta!r}\n")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "steps": [list(s) for s in self.steps],
        }


def expand_demo(
    real: PointCloud,
    fake0: PointCloud,
    steps: int = 500,
    learning_rate: float = 1.0,
    alpha: float = 0.5,
    k=None,
    eval_every: int = 1,
    patience: int = 10,
    check_regime: bool = True,
) -> ExpansionTrace:
    """Plain gradient descent on the topo loss over the fake points.

    Records (iteration, loss, eps_c(fake), eps_c(fake) - eps_c(real)) every
    ``eval_every`` steps and after the last one. Raises DivergenceError when
    the loss rises ``patience`` times in a row or stops being finite.
    """
    if not learning_rate > 0:
        raise ValueError("learning_rate must be positive")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    eps_real = critical_epsilon(real, alpha)
    x = np.array(fake0.points)
    trace = ExpansionTrace(learning_rate=learning_rate)
    first = topo_loss(real, fake0, k)
    if check_regime and first.value > 0:
        regime = loss_direction(real, fake0, k)
        if regime != "repulsive":
            raise ValueError(f"fake cloud is not under-covering (regime: {regime})")

    def record(it, loss, pts):
        eps = critical_epsilon(fake0.with_points(pts), alpha)
        trace.steps.append((it, loss, eps, eps - eps_real))

    prev = first.value
    rising = 0
    res = first
    for it in range(steps):
        if it % eval_every == 0:
            record(it, res.value, x)
        x = x - learning_rate * res.gradient
        try:
            res = topo_loss(real, fake0.with_points(x), k)
        except ValueError as exc:
            # non-finite coordinates or coincident points after a wild step
            raise DivergenceError(f"step {it + 1}: {exc}", trace) from exc
        if not math.isfinite(res.value):
            raise DivergenceError(f"step {it + 1}: loss is not finite", trace)
        rising = rising + 1 if res.value > prev else 0
        prev = res.value
        if rising >= patience:
            raise DivergenceError(f"loss rose for {patience} consecutive steps", trace)
    record(steps, res.value, x)
    trace.final_cloud = fake0.with_points(x, label=f"{fake0.label}-expanded")
    return trace
