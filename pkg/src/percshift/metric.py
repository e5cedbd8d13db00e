"""Exact pairwise Euclidean distances, sorted spectra and point maps."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .pointcloud import PointCloud

THREADS_ENV = "PERCSHIFT_THREADS"

# entries of the (rows x N) accumulator per block
_BLOCK_ELEMS = 1 << 21


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class DistanceSpectrum:
    """All N(N-1)/2 pairwise distances sorted by (distance, i, j).

    Stored column-wise: ``distances[k]`` is realised by pair ``(i[k], j[k])``
    with ``i[k] < j[k]``.
    """

    distances: np.ndarray
    i: np.ndarray
    j: np.ndarray
    source_n: int

    def __len__(self):
        return len(self.distances)

    def __iter__(self):
        return zip(self.distances.tolist(), self.i.tolist(), self.j.tolist())

    @property
    def entries(self) -> list[tuple[float, int, int]]:
        return list(self)

    def validate(self):
        n = self.source_n
        assert len(self.distances) == n * (n - 1) // 2
        assert np.all(self.i < self.j)
        assert np.all(np.isfinite(self.distances)) and np.all(self.distances >= 0)
        assert np.all(np.diff(self.distances) >= 0)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("distance,i,j\n")
            for d, a, b in self:
                fh.write(f"{d!r},{a},{b}\n")


def _row_block_sq(x: np.ndarray, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Squared distances from rows lo..hi-1 to every later row, in (i, j) order."""
    n, dim = x.shape
    right = x[lo + 1 :]
    acc = np.zeros((hi - lo, n - lo - 1))
    # accumulate coordinate by coordinate: same summation order as a naive loop
    for k in range(dim):
        diff = x[lo:hi, k, None] - right[None, :, k]
        acc += diff * diff
    rows, cols = np.triu_indices(hi - lo, 0, n - lo - 1)
    return acc[rows, cols], rows + lo, cols + lo + 1


def pairwise_sq(x: np.ndarray, threads: Optional[int] = None):
    """Squared distances of all pairs i < j, in lexicographic (i, j) order."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    rows_per_block = max(1, _BLOCK_ELEMS // max(n, 1))
    blocks = [(lo, min(n - 1, lo + rows_per_block)) for lo in range(0, n - 1, rows_per_block)]
    threads = default_threads() if threads is None else max(1, threads)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda b: _row_block_sq(x, *b), blocks))
    else:
        parts = [_row_block_sq(x, *b) for b in blocks]
    if not parts:
        empty = np.empty(0, dtype=np.int64)
        return np.empty(0), empty, empty
    sq = np.concatenate([p[0] for p in parts])
    ii = np.concatenate([p[1] for p in parts]).astype(np.int64)
    jj = np.concatenate([p[2] for p in parts]).astype(np.int64)
    return sq, ii, jj


def _sorted(sq, ii, jj, n) -> DistanceSpectrum:
    d = np.sqrt(sq)
    # input is in (i, j) order, so a stable sort gives (distance, i, j) order
    order = np.argsort(d, kind="stable")
    return DistanceSpectrum(d[order], ii[order], jj[order], n)


def distance_spectrum(cloud: PointCloud, threads: Optional[int] = None) -> DistanceSpectrum:
    """Sorted spectrum of all pairwise Euclidean distances of ``cloud``."""
    if cloud.n < 2:
        raise ValueError(f"insufficient points: need N >= 2, got {cloud.n}")
    return PairTable.from_cloud(cloud, threads).spectrum()


class PairTable:
    """Unsorted squared distances of every pair i < j of one cloud.

    Used when only the short end of the spectrum matters: ``take(m)`` sorts
    just the entries at or below the m-th smallest squared distance.
    """

    def __init__(self, sq: np.ndarray, i: np.ndarray, j: np.ndarray, n: int):
        self.sq, self.i, self.j, self.n = sq, i, j, n

    @classmethod
    def from_cloud(cls, cloud: PointCloud, threads: Optional[int] = None) -> "PairTable":
        if cloud.n < 2:
            raise ValueError(f"insufficient points: need N >= 2, got {cloud.n}")
        return cls(*pairwise_sq(cloud.points, threads), cloud.n)

    def __len__(self):
        return len(self.sq)

    def spectrum(self) -> DistanceSpectrum:
        return _sorted(self.sq, self.i, self.j, self.n)

    def take(self, m: int) -> tuple[DistanceSpectrum, float]:
        """Sorted entries with squared distance <= the m-th smallest.

        Also returns the radius strictly below which the prefix is complete.
        """
        if m >= len(self.sq):
            return self.spectrum(), np.inf
        cut = np.partition(self.sq, m - 1)[m - 1]
        mask = self.sq <= cut
        spec = _sorted(self.sq[mask], self.i[mask], self.j[mask], self.n)
        # unseen pairs have sqrt(sq) >= sqrt(cut), so tie groups below it are whole
        return spec, float(np.sqrt(cut))


@dataclass(frozen=True, eq=False)
class PointMap:
    """A transform of point coordinates with optional bi-Lipschitz bounds c1 <= c2."""

    kind: str = "identity"
    matrix: Optional[np.ndarray] = None
    factor: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    description: str = ""

    def __post_init__(self):
        if self.kind not in ("identity", "linear", "scale", "custom"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "identity":
            self._fill(1.0, 1.0)
        elif self.kind == "scale":
            if self.factor is None or not self.factor > 0:
                raise ValueError("scale map needs a positive factor")
            self._fill(float(self.factor), float(self.factor))
        elif self.kind == "linear":
            if self.matrix is None:
                raise ValueError("linear map needs a matrix")
            a = np.array(self.matrix, dtype=np.float64)
            if a.ndim != 2:
                raise ValueError("linear map matrix must be 2-D")
            a.flags.writeable = False
            object.__setattr__(self, "matrix", a)
            sv = np.linalg.svd(a, compute_uv=False)
            # injective only when there are as many nonzero singular values as input dims
            smin = float(sv.min()) if a.shape[0] >= a.shape[1] else 0.0
            smax = float(sv.max())
            for name, given, want in (("c1", self.c1, smin), ("c2", self.c2, smax)):
                if given is not None and abs(given - want) > 1e-9 * max(abs(want), 1e-300):
                    raise ValueError(f"{name}={given} does not match singular value {want}")
            self._fill(smin if smin > 0 else None, smax)
        elif self.func is None:
            raise ValueError("custom map needs a callable")
        for c in (self.c1, self.c2):
            if c is not None and not c > 0:
                raise ValueError("Lipschitz constants must be positive")

    def _fill(self, c1, c2):
        if self.c1 is None:
            object.__setattr__(self, "c1", c1)
        if self.c2 is None:
            object.__setattr__(self, "c2", c2)

    @classmethod
    def linear(cls, matrix, **kw) -> "PointMap":
        return cls(kind="linear", matrix=matrix, **kw)

    @classmethod
    def scale(cls, factor: float) -> "PointMap":
        return cls(kind="scale", factor=factor)

    @property
    def known_bounds(self) -> bool:
        return self.c1 is not None and self.c2 is not None

    def describe(self) -> dict:
        out = {"kind": self.kind, "c1": self.c1, "c2": self.c2}
        if self.kind == "scale":
            out["factor"] = self.factor
        if self.kind == "linear":
            out["shape"] = list(self.matrix.shape)
        if self.description:
            out["description"] = self.description
        return out


def apply_map(cloud: PointCloud, pmap: PointMap) -> PointCloud:
    x = cloud.points
    if pmap.kind == "identity":
        y = x.copy()
    elif pmap.kind == "scale":
        y = x * pmap.factor
    elif pmap.kind == "linear":
        if pmap.matrix.shape[1] != cloud.dim:
            raise ValueError(
                f"dimension mismatch: map takes D={pmap.matrix.shape[1]}, cloud has D={cloud.dim}"
            )
        y = x @ pmap.matrix.T
    else:
        y = np.asarray(pmap.func(x), dtype=np.float64)
        if y.ndim != 2 or y.shape[0] != cloud.n:
            raise ValueError(f"custom map returned shape {y.shape}, expected ({cloud.n}, D')")
    if pmap.kind == "identity":
        return cloud.with_points(y)
    return cloud.with_points(y, meta={**cloud.meta, "map": pmap.describe()})


def random_linear_map(dim: int, singular_values, rng: np.random.Generator) -> PointMap:
    """Square map U diag(s) V^T with Haar-random orthogonal U, V."""
    s = np.asarray(singular_values, dtype=np.float64)
    if s.shape != (dim,) or np.any(s <= 0):
        raise ValueError(f"need {dim} positive singular values")
    u, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    v, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return PointMap.linear(u @ np.diag(s) @ v.T, description="random orthogonal x diag x orthogonal")
