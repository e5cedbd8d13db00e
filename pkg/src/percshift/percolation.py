"""Giant-component evolution over the radius via a Kruskal-style sweep.

Edges are consumed in ascending distance order by a union-find structure.
Tied distances are merged as one batch before the largest component size is
sampled, so the curve is a genuine function of the radius.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .metric import DistanceSpectrum, PairTable, distance_spectrum
from .pointcloud import PointCloud

RULES = ("strict-majority", "at-least")


class UnionFind:
    """Disjoint sets over 0..n-1 with union by size and path compression."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.largest = 1 if n else 0
        self.components = n

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of a and b; False if they were already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        size = self.size
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        size[ra] += size[rb]
        if size[ra] > self.largest:
            self.largest = size[ra]
        self.components -= 1
        return True


@dataclass(frozen=True, eq=False)
class PercolationCurve:
    """P_inf(eps) sampled at 0 and at every distinct pairwise distance."""

    epsilons: np.ndarray
    p_inf: np.ndarray
    n: int

    def __post_init__(self):
        if len(self.epsilons) != len(self.p_inf) or len(self.epsilons) == 0:
            raise ValueError("epsilons and p_inf must be nonempty and of equal length")
        if np.any(np.diff(self.epsilons) < 0):
            raise ValueError("epsilons must be ascending")
        if np.any(np.diff(self.p_inf) < 0):
            raise ValueError("p_inf must be non-decreasing")

    @property
    def sizes(self) -> np.ndarray:
        """Largest component sizes |C_max| (exact integers)."""
        return np.rint(np.asarray(self.p_inf) * self.n).astype(np.int64)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epsilon,p_inf\n")
            for e, p in zip(self.epsilons.tolist(), self.p_inf.tolist()):
                fh.write(f"{e!r},{p!r}\n")


@dataclass(frozen=True)
class ThresholdEstimate:
    epsilon_c: float
    alpha: float
    rule: str
    n: int
    connectivity_epsilon: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def required_size(n: int, alpha: float = 0.5, rule: str = "strict-majority") -> int:
    """Smallest |C_max| satisfying the threshold rule.

    ``alpha`` is read through its shortest decimal repr so that e.g. 0.3*10
    counts as exactly 3.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}, got {rule!r}")
    target = Fraction(repr(float(alpha))) * n
    if rule == "strict-majority":
        return int(target // 1) + 1
    return max(1, -int((-target) // 1))


def _group_starts(d: np.ndarray) -> np.ndarray:
    if len(d) == 0:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(np.r_[True, d[1:] != d[:-1]])


def _sweep(spec: DistanceSpectrum, n: int, stop_size: Optional[int] = None, below: float = np.inf):
    """Run union-find over whole tie groups of ``spec``.

    Returns (eps list, size list, index of next unprocessed group, group starts).
    Stops after the group where the largest component reaches ``stop_size``
    (default n), or before the first group with distance >= ``below``.
    """
    stop_size = n if stop_size is None else stop_size
    d = spec.distances
    starts = _group_starts(d)
    ends = np.r_[starts[1:], len(d)]
    ii, jj = spec.i, spec.j
    uf = UnionFind(n)
    eps = [0.0]
    sizes = [1]
    g = 0
    ngroups = len(starts)
    while g < ngroups and uf.largest < stop_size:
        # process a few thousand groups per batch to amortise tolist()
        hi_g = min(ngroups, g + 4096)
        lo_e, hi_e = int(starts[g]), int(ends[hi_g - 1])
        a_list = ii[lo_e:hi_e].tolist()
        b_list = jj[lo_e:hi_e].tolist()
        vals = d[starts[g:hi_g]].tolist()
        bounds = (ends[g:hi_g] - lo_e).tolist()
        pos = 0
        for val, end in zip(vals, bounds):
            if val >= below:
                return eps, sizes, g, starts
            while pos < end:
                uf.union(a_list[pos], b_list[pos])
                pos += 1
            if val == 0.0:
                sizes[0] = uf.largest
            else:
                eps.append(val)
                sizes.append(uf.largest)
            g += 1
            if uf.largest >= stop_size:
                break
    return eps, sizes, g, starts


def _check_indices(spec: DistanceSpectrum, n: int):
    if n < 2:
        raise ValueError(f"insufficient points: need N >= 2, got {n}")
    if spec.source_n != n:
        raise ValueError(f"spectrum built for N={spec.source_n}, got n={n}")
    if len(spec) and (int(spec.j.max()) >= n or int(spec.i.min()) < 0):
        raise ValueError(f"pair index out of range for n={n}")


def percolate(spectrum: DistanceSpectrum, n: int) -> PercolationCurve:
    """Full percolation curve: P_inf after every distinct distance."""
    _check_indices(spectrum, n)
    eps, sizes, g, starts = _sweep(spectrum, n)
    if sizes[-1] != n:
        raise ValueError("spectrum does not connect the cloud; is it complete?")
    tail = spectrum.distances[starts[g:]]
    eps_arr = np.concatenate([np.asarray(eps), tail])
    size_arr = np.concatenate([np.asarray(sizes, dtype=np.float64), np.full(len(tail), float(n))])
    return PercolationCurve(eps_arr, size_arr / n, n)


def critical_threshold(
    curve: PercolationCurve, alpha: float = 0.5, rule: str = "strict-majority"
) -> ThresholdEstimate:
    need = required_size(curve.n, alpha, rule)
    sizes = curve.sizes
    k = int(np.argmax(sizes >= need))
    full = np.flatnonzero(sizes >= curve.n)
    conn = float(curve.epsilons[full[0]]) if len(full) else None
    return ThresholdEstimate(float(curve.epsilons[k]), float(alpha), rule, curve.n, conn)


def mst_longest_edge(spectrum: DistanceSpectrum, n: int) -> float:
    """Longest edge of the Euclidean minimum spanning tree (Kruskal)."""
    _check_indices(spectrum, n)
    uf = UnionFind(n)
    longest = 0.0
    for d, a, b in spectrum:
        if uf.union(a, b):
            longest = d
            if uf.components == 1:
                return longest
    raise ValueError("spectrum does not connect the cloud; is it complete?")


def curve_on_grid(curve: PercolationCurve, grid) -> PercolationCurve:
    """Right-continuous step evaluation of ``curve`` at ascending radii."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("grid must be a nonempty 1-D sequence")
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be ascending")
    if grid[0] < 0:
        raise ValueError("grid radii must be nonnegative")
    idx = np.searchsorted(curve.epsilons, grid, side="right") - 1
    return PercolationCurve(grid, np.asarray(curve.p_inf)[idx], curve.n)


def threshold_of_cloud(
    cloud,
    alpha: float = 0.5,
    rule: str = "strict-majority",
    connectivity: bool = True,
    threads: Optional[int] = None,
) -> ThresholdEstimate:
    """Same result as ``critical_threshold(percolate(distance_spectrum(c)))``.

    Only the shortest part of the spectrum is sorted: the prefix grows
    geometrically until the sweep reaches the threshold (and, with
    ``connectivity``, full connectivity) strictly inside the sorted region.
    With ``connectivity=False`` the estimate carries ``connectivity_epsilon=None``.
    ``cloud`` may also be a precomputed :class:`PairTable`.
    """
    prefix = cloud if isinstance(cloud, PairTable) else PairTable.from_cloud(cloud, threads)
    n = prefix.n
    need = required_size(n, alpha, rule)
    stop = n if connectivity else need
    m = min(len(prefix), 4 * n)
    while True:
        spec, below = prefix.take(m)
        eps, sizes, _, _ = _sweep(spec, n, stop_size=stop, below=below)
        if sizes[-1] >= stop:
            break
        m = min(len(prefix), 4 * m)
    sizes = np.asarray(sizes)
    k = int(np.argmax(sizes >= need))
    conn = float(eps[-1]) if connectivity else None
    return ThresholdEstimate(float(eps[k]), float(alpha), rule, n, conn)


def spectrum_epsilon(spectrum: DistanceSpectrum, idx=None, alpha: float = 0.5,
                     rule: str = "strict-majority") -> float:
    """eps_c of the sub-cloud ``idx`` (default: all points) from a sorted spectrum.

    Equal to ``critical_epsilon(cloud.subset(sorted(idx)))``: the parent's
    prefix, filtered to pairs inside ``idx``, is the sub-cloud's prefix in
    the same (distance, i, j) order. Only that prefix is scanned.
    """
    if idx is None:
        idx = np.arange(spectrum.source_n)
    idx = np.asarray(idx, dtype=np.int64)
    m = len(idx)
    if m < 2 or len(np.unique(idx)) != m:
        raise ValueError("subsample needs at least 2 distinct indices")
    need = required_size(m, alpha, rule)
    pos = np.full(spectrum.source_n, -1, dtype=np.int64)
    pos[np.sort(idx)] = np.arange(m)
    total = len(spectrum)
    length = min(total, 16 * m)
    while True:
        pi, pj = pos[spectrum.i[:length]], pos[spectrum.j[:length]]
        keep = (pi >= 0) & (pj >= 0)
        sub = DistanceSpectrum(spectrum.distances[:length][keep], pi[keep], pj[keep], m)
        below = float(spectrum.distances[length]) if length < total else np.inf
        eps, sizes, _, _ = _sweep(sub, m, stop_size=need, below=below)
        if sizes[-1] >= need:
            return float(eps[-1])
        length = min(total, 4 * length)


def critical_epsilon(cloud, alpha: float = 0.5, rule: str = "strict-majority",
                     threads: Optional[int] = None) -> float:
    return threshold_of_cloud(cloud, alpha, rule, connectivity=False, threads=threads).epsilon_c


def curve_of_cloud(cloud: PointCloud, threads: Optional[int] = None) -> PercolationCurve:
    return percolate(distance_spectrum(cloud, threads), cloud.n)
