"""Lower bounds on unmeasured coherences from 3x3 principal-minor positivity.

For modes j < k < l the principal minor on {j, k, l} of a PSD matrix is
non-negative, which, solved for the (j, l) entry, gives

    r_jl >= (r_jk r_kl - sqrt((r_jj r_kk - r_jk^2)(r_kk r_ll - r_kl^2))) / r_kk

The right-hand side is non-decreasing in r_jk and r_kl, so it stays valid
when those are replaced by non-negative lower bounds.  ``fill`` applies this
band by band, starting from the measured first off-diagonal.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .band import DEFAULT_RELATIVE_TOL, CoherenceBandMatrix
from .errors import DegeneratePivotError, PreconditionError

log = logging.getLogger(__name__)


def det3_bound(r_jj: float, r_kk: float, r_ll: float, r_jk: float, r_kl: float) -> float:
    """Lower bound on r_jl given the {j, k, l} principal minor is >= 0.

    The result may be negative, in which case it certifies nothing about the
    magnitude of r_jl.
    """
    if min(r_jj, r_kk, r_ll) < 0 or r_jk < 0 or r_kl < 0:
        raise PreconditionError("det3_bound expects non-negative arguments")
    if r_kk == 0:
        raise DegeneratePivotError("intermediate diagonal entry r_kk is zero")
    slack = DEFAULT_RELATIVE_TOL * max(r_jj, r_kk, r_ll)
    m1 = r_jj * r_kk - r_jk * r_jk
    m2 = r_kk * r_ll - r_kl * r_kl
    if m1 < -slack * max(r_jj, r_kk) or m2 < -slack * max(r_kk, r_ll):
        raise PreconditionError(
            f"2x2 minor negative (r_jj r_kk - r_jk^2 = {m1:.3g}, r_kk r_ll - r_kl^2 = {m2:.3g})"
        )
    return (r_jk * r_kl - math.sqrt(max(m1, 0.0) * max(m2, 0.0))) / r_kk


@dataclass
class FillReport:
    filled: int = 0
    negative_cutoff: int | None = None
    # (j, l, k_best, bound, nearest_chain_bound), 1-based indices
    trace: list = field(default_factory=list)
    clamped: list = field(default_factory=list)


def _vector_bounds(pj, pk, pl, xjk, xkl):
    """Vectorised det3_bound; NaN where the pivot is zero or an input is unusable."""
    with np.errstate(invalid="ignore", divide="ignore"):
        m1 = np.maximum(pj * pk - xjk * xjk, 0.0)
        m2 = np.maximum(pk * pl - xkl * xkl, 0.0)
        out = (xjk * xkl - np.sqrt(m1 * m2)) / pk
    out[~(pk > 0)] = np.nan
    return out


def _usable(bound):
    # only strictly positive bounds carry information into later bands
    return np.where(bound > 0, bound, np.nan)


def fill(m: CoherenceBandMatrix, trace: bool = False) -> tuple[CoherenceBandMatrix, FillReport]:
    """Bound every entry beyond the first off-diagonal.

    Bands are processed in increasing distance from the diagonal.  For each
    entry the best bound over all intermediates is kept, together with any
    bound the input already carried.  Non-positive bounds are stored as
    computed but are not propagated.
    """
    d = m.dim
    diag = m.diag
    report = FillReport()
    band1 = np.array(m.band1, dtype=float)
    neg = band1 < 0
    if neg.any():
        for j in np.nonzero(neg)[0]:
            report.clamped.append((int(j) + 1, int(j) + 2, float(band1[j]), 0.0))
        log.warning("clamping %d negative measured coherence(s) to 0", int(neg.sum()))
        band1[neg] = 0.0
    cap = np.sqrt(diag[:-1] * diag[1:])
    over = band1 > cap
    if over.any():
        for j in np.nonzero(over)[0]:
            report.clamped.append((int(j) + 1, int(j) + 2, float(band1[j]), float(cap[j])))
        log.info("clamping %d coherence(s) to the 2x2 positivity limit", int(over.sum()))
        band1 = np.minimum(band1, cap)

    # value used for propagation: measured band or positive bound, NaN otherwise
    known = np.full((d, d), np.nan)
    idx = np.arange(d - 1)
    known[idx, idx + 1] = band1
    lower = np.array(m.lower, dtype=float)

    for n in range(2, d):
        js = np.arange(d - n)
        ls = js + n
        ks = js[:, None] + np.arange(1, n)[None, :]
        pj = diag[js][:, None]
        pl = diag[ls][:, None]
        pk = diag[ks]
        xjk = known[js[:, None], ks]
        xkl = known[ks, ls[:, None]]
        cand = _vector_bounds(pj, pk, pl, xjk, xkl)
        have = np.isfinite(cand)
        best = np.where(have.any(axis=1), np.nanmax(np.where(have, cand, -np.inf), axis=1), np.nan)
        prior = lower[js, ls]
        merged = np.fmax(best, prior)
        lower[js, ls] = merged
        known[js, ls] = _usable(merged)
        report.filled += int(np.isfinite(merged).sum() - np.isfinite(prior).sum())
        if report.negative_cutoff is None and not np.any(merged > 0):
            report.negative_cutoff = n
        if trace:
            for row, (j, l) in enumerate(zip(js, ls)):
                kbest = None
                if have[row].any():
                    kbest = int(ks[row, int(np.nanargmax(np.where(have[row], cand[row], -np.inf)))]) + 1
                chain = cand[row, -1] if have[row, -1] else None
                report.trace.append(
                    (int(j) + 1, int(l) + 1, kbest, float(merged[row]), None if chain is None else float(chain))
                )

    out = CoherenceBandMatrix(diag, m.band1, lower, normalized=m.normalized, cross=m.cross)
    return out, report


def magnitude_floor(m: CoherenceBandMatrix) -> np.ndarray:
    """Certified lower bound on |r_jk| for every pair (upper triangle, else 0).

    Measured neighbours contribute |band1|; other entries contribute their
    bound only when it is positive.  Everything is capped at the 2x2 limit
    sqrt(r_jj r_kk).
    """
    d = m.dim
    out = np.zeros((d, d))
    idx = np.arange(d - 1)
    out[idx, idx + 1] = np.abs(m.band1)
    bounded = np.nan_to_num(m.lower, nan=0.0)
    out = np.maximum(out, np.where(bounded > 0, bounded, 0.0))
    out = np.minimum(out, np.sqrt(np.outer(m.diag, m.diag)))
    return np.triu(out, k=1)
