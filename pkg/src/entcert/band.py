"""Partial coherence matrices: diagonal, first off-diagonal, and lower bounds.

The object of study is the real symmetric d x d matrix whose entry (j, k) is
the real part of the coherence between the two-photon basis states |j,j> and
|k,k>.  Only the diagonal and the first off-diagonal are measured; the rest
is either unknown or carries a certified lower bound.

Window indices in the public API are 1-based and inclusive, matching how
temporal modes are numbered in the lab.  Arrays are 0-based internally.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StructuralError

DEFAULT_RELATIVE_TOL = 1e-9


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NoiseDiagonal:
    """Common accidental population <j,k|rho|j,k> for j != k.

    ``floor`` is a fraction of the mean signal diagonal element of whatever
    matrix it is applied to, so it survives renormalisation unchanged.
    """

    floor: float = 0.01

    def __post_init__(self):
        if not np.isfinite(self.floor) or self.floor < 0:
            raise DomainError(f"noise floor must be >= 0, got {self.floor}")

    def population(self, diag) -> float:
        """Absolute cross population implied for a matrix with this diagonal."""
        diag = np.asarray(diag, dtype=float)
        return self.floor * float(diag.mean()) if diag.size else 0.0


@dataclass(frozen=True, eq=False)
class CoherenceBandMatrix:
    """Diagonal + measured first off-diagonal + optional bounds on the rest.

    ``lower`` is a full d x d array; only entries ``lower[j, l]`` with
    ``l > j + 1`` are meaningful and NaN means no bound is known.  Arrays are
    made read-only on construction.
    """

    diag: np.ndarray
    band1: np.ndarray
    lower: np.ndarray = None
    normalized: bool = False
    # absolute cross populations per pair (j < k); None means use a NoiseDiagonal
    cross: np.ndarray = field(default=None)

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        band1 = np.asarray(self.band1, dtype=float)
        if diag.ndim != 1 or diag.size < 1:
            raise StructuralError("diag must be a non-empty 1-d sequence")
        d = diag.size
        if band1.shape != (max(d - 1, 0),):
            raise StructuralError(f"band1 must have length {d - 1}, got {band1.shape}")
        if not np.all(np.isfinite(diag)) or not np.all(np.isfinite(band1)):
            raise DomainError("diag and band1 must be finite")
        if np.any(diag < 0):
            raise DomainError("diagonal populations must be non-negative")
        scale = max(float(diag.max()), 1e-300)
        limit = 0.5 * (diag[:-1] + diag[1:])
        bad = np.nonzero(np.abs(band1) > limit + DEFAULT_RELATIVE_TOL * scale)[0]
        if bad.size:
            j = int(bad[0])
            raise DomainError(
                f"|band1[{j}]| = {abs(band1[j]):.6g} exceeds (diag[{j}] + diag[{j + 1}])/2 "
                f"= {limit[j]:.6g}; visibility would exceed 1"
            )
        if self.lower is None:
            lower = np.full((d, d), np.nan)
        else:
            lower = np.array(self.lower, dtype=float)
            if lower.shape != (d, d):
                raise StructuralError(f"lower must be {d}x{d}, got {lower.shape}")
            keep = np.triu(np.ones((d, d), dtype=bool), k=2)
            lower[~keep] = np.nan
        object.__setattr__(self, "diag", _frozen(diag))
        object.__setattr__(self, "band1", _frozen(band1))
        object.__setattr__(self, "lower", _frozen(lower))
        if self.cross is not None:
            cross = np.array(self.cross, dtype=float)
            if cross.shape != (d, d):
                raise StructuralError(f"cross must be {d}x{d}, got {cross.shape}")
            if np.any(cross[np.isfinite(cross)] < 0):
                raise DomainError("cross populations must be non-negative")
            object.__setattr__(self, "cross", _frozen(cross))

    @property
    def dim(self) -> int:
        return int(self.diag.size)

    def __eq__(self, other):
        if not isinstance(other, CoherenceBandMatrix):
            return NotImplemented
        same_cross = (self.cross is None and other.cross is None) or (
            self.cross is not None
            and other.cross is not None
            and np.array_equal(self.cross, other.cross, equal_nan=True)
        )
        return (
            self.normalized == other.normalized
            and np.array_equal(self.diag, other.diag)
            and np.array_equal(self.band1, other.band1)
            and np.array_equal(self.lower, other.lower, equal_nan=True)
            and same_cross
        )

    __hash__ = None

    def scaled(self, factor: float, normalized: bool | None = None) -> "CoherenceBandMatrix":
        return CoherenceBandMatrix(
            self.diag * factor,
            self.band1 * factor,
            self.lower * factor,
            normalized=self.normalized if normalized is None else normalized,
            cross=None if self.cross is None else self.cross * factor,
        )

    def normalize(self) -> "CoherenceBandMatrix":
        """Rescale so the diagonal sums to one."""
        total = float(self.diag.sum())
        if total <= 0:
            raise DomainError("cannot normalise an all-zero diagonal")
        if self.normalized and abs(total - 1.0) < 1e-15:
            return self
        return self.scaled(1.0 / total, normalized=True)

    def with_lower(self, lower) -> "CoherenceBandMatrix":
        return CoherenceBandMatrix(
            self.diag, self.band1, lower, normalized=self.normalized, cross=self.cross
        )

    def dense(self, unknown: float = np.nan) -> np.ndarray:
        """Full symmetric matrix; unbounded entries become ``unknown``."""
        d = self.dim
        m = np.full((d, d), unknown, dtype=float)
        np.fill_diagonal(m, self.diag)
        idx = np.arange(d - 1)
        m[idx, idx + 1] = self.band1
        iu = np.triu_indices(d, k=2)
        known = np.isfinite(self.lower[iu])
        m[iu[0][known], iu[1][known]] = self.lower[iu][known]
        upper = np.triu(np.ones((d, d), dtype=bool), k=1)
        m.T[upper] = m[upper]
        return m


def submatrix(m: CoherenceBandMatrix, a: int, b: int) -> CoherenceBandMatrix:
    """Contiguous window of modes ``a..b`` (1-based, inclusive).

    Known band entries and computed bounds are carried over.  A normalized
    source yields a normalized window.
    """
    if not (1 <= a < b <= m.dim):
        raise DomainError(f"window [{a}, {b}] invalid for dim {m.dim}; need 1 <= a < b <= dim")
    i, k = a - 1, b
    out = CoherenceBandMatrix(
        m.diag[i:k],
        m.band1[i : k - 1],
        m.lower[i:k, i:k],
        normalized=False,
        cross=None if m.cross is None else m.cross[i:k, i:k],
    )
    if m.normalized:
        out = out.normalize()
    return out


def psd_check(m, tol: float | None = None) -> bool:
    """True iff the real symmetric matrix ``m`` has no eigenvalue below -tol.

    ``tol`` defaults to 1e-9 times the largest diagonal magnitude.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError(f"expected a square matrix, got shape {m.shape}")
    if m.size == 0:
        return True
    if tol is None:
        tol = DEFAULT_RELATIVE_TOL * max(float(np.abs(np.diag(m)).max()), 1.0e-300)
    if tol < 0:
        raise DomainError("tol must be non-negative")
    if not np.allclose(m, m.T, rtol=0.0, atol=max(tol, 1e-12)):
        raise StructuralError("matrix is not symmetric within tolerance")
    return bool(np.linalg.eigvalsh(0.5 * (m + m.T))[0] >= -tol)
