"""Point cloud container and the CSV / binary (PGC1) file formats."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

MAGIC = b"PGC1"


class CloudFormatError(ValueError):
    """Raised when a cloud file or array cannot be turned into a valid PointCloud."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N points in R^D plus provenance.

    ``points`` is copied, cast to float64 and made read-only. ``meta`` holds
    generator details (kind, intrinsic dimension ``d``, ``volume``, ...).
    """

    points: np.ndarray
    label: str = ""
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise CloudFormatError(f"points must be a 2-D array, got shape {pts.shape}")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise CloudFormatError(f"need N >= 1 and D >= 1, got shape {pts.shape}")
        bad = ~np.isfinite(pts).all(axis=1)
        if bad.any():
            raise CloudFormatError("non-finite coordinate", row=int(np.flatnonzero(bad)[0]) + 1)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return (
            self.points.shape == other.points.shape
            and bool(np.array_equal(self.points, other.points))
            and self.label == other.label
            and self.seed == other.seed
            and self.meta == other.meta
        )

    __hash__ = None

    def with_points(self, points, **changes) -> "PointCloud":
        """Copy of this cloud with new coordinates (metadata carried over)."""
        kw = dict(label=self.label, seed=self.seed, meta=self.meta)
        kw.update(changes)
        return PointCloud(points, **kw)

    def subset(self, idx) -> "PointCloud":
        return self.with_points(self.points[np.asarray(idx)])

    def scaled(self, factor: float, center: Optional[np.ndarray] = None) -> "PointCloud":
        """Contract/expand about ``center`` (centroid by default)."""
        c = self.points.mean(axis=0) if center is None else np.asarray(center, dtype=np.float64)
        return self.with_points(c + factor * (self.points - c))


@dataclass(frozen=True)
class CloudPair:
    real: PointCloud
    model: PointCloud

    def __post_init__(self):
        if self.real.dim != self.model.dim:
            raise ValueError(
                f"dimension mismatch: real has D={self.real.dim}, model has D={self.model.dim}"
            )

    def require_matched(self):
        if self.real.n != self.model.n:
            raise ValueError(
                f"sample size mismatch: real N={self.real.n}, model N={self.model.n}"
            )


def _infer_format(path: Path, fmt: Optional[str]) -> str:
    if fmt is not None:
        if fmt not in ("csv", "binary"):
            raise ValueError(f"unknown format {fmt!r}")
        return fmt
    return "csv" if path.suffix.lower() in (".csv", ".txt") else "binary"


def _read_csv(text: str) -> np.ndarray:
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        fields = s.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise CloudFormatError(f"expected {width} fields, found {len(fields)}", row=lineno)
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            raise CloudFormatError(f"non-numeric field in {s!r}", row=lineno) from None
        if not all(np.isfinite(vals)):
            raise CloudFormatError("non-finite coordinate", row=lineno)
        rows.append(vals)
    if not rows:
        raise CloudFormatError("empty file")
    return np.array(rows, dtype=np.float64)


def _read_binary(blob: bytes) -> tuple[np.ndarray, dict]:
    if len(blob) < 20 or blob[:4] != MAGIC:
        raise CloudFormatError("missing PGC1 header")
    n, d = struct.unpack_from("<QQ", blob, 4)
    if n < 1 or d < 1:
        raise CloudFormatError(f"empty cloud (N={n}, D={d})")
    start = 20
    end = start + 8 * n * d
    if len(blob) < end:
        raise CloudFormatError(f"truncated payload: need {end} bytes, have {len(blob)}")
    pts = np.frombuffer(blob, dtype="<f8", count=n * d, offset=start).reshape(n, d)
    meta = {}
    if len(blob) > end:
        if len(blob) < end + 8:
            raise CloudFormatError("truncated metadata length")
        (mlen,) = struct.unpack_from("<Q", blob, end)
        raw = blob[end + 8 : end + 8 + mlen]
        if len(raw) != mlen:
            raise CloudFormatError("truncated metadata block")
        meta = json.loads(raw.decode("utf-8"))
    bad = ~np.isfinite(pts).all(axis=1)
    if bad.any():
        raise CloudFormatError("non-finite coordinate", row=int(np.flatnonzero(bad)[0]) + 1)
    return pts.astype(np.float64), meta


def load_cloud(path, format: Optional[str] = None) -> PointCloud:
    """Read a cloud; ``format`` is ``"csv"`` or ``"binary"`` (guessed from suffix if None)."""
    path = Path(path)
    fmt = _infer_format(path, format)
    if fmt == "csv":
        return PointCloud(_read_csv(path.read_text()), label=path.stem)
    pts, meta = _read_binary(path.read_bytes())
    label = meta.pop("label", path.stem)
    seed = meta.pop("seed", None)
    return PointCloud(pts, label=label, seed=seed, meta=meta.pop("meta", meta))


def save_cloud(cloud: PointCloud, path, format: Optional[str] = None) -> None:
    path = Path(path)
    fmt = _infer_format(path, format)
    if fmt == "csv":
        # repr() of a float64 is the shortest string that round-trips exactly
        lines = [",".join(repr(float(v)) for v in row) for row in cloud.points]
        path.write_text("\n".join(lines) + "\n")
        return
    header = MAGIC + struct.pack("<QQ", cloud.n, cloud.dim)
    payload = np.ascontiguousarray(cloud.points, dtype="<f8").tobytes()
    meta = json.dumps({"label": cloud.label, "seed": cloud.seed, "meta": cloud.meta}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<Q", len(meta)))
        fh.write(meta)
