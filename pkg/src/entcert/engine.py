"""End-to-end certification: window search, bound, bootstrap errors, sweeps."""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .band import CoherenceBandMatrix, NoiseDiagonal, submatrix
from .errors import DegenerateDataError, DomainError, InputError
from .ingest import (
    MeasurementRecord,
    estimate_noise_floor,
    fit_visibilities,
    to_band_matrix,
)
from .metrics import EntanglementBound, best_B, build_ledger, eof_bound
from .propagation import fill

log = logging.getLogger(__name__)

POSITIVITY = "positivity"
CONSTANT_COHERENCE = "constant-coherence"
MODES = (POSITIVITY, CONSTANT_COHERENCE)
DEFAULT_RESAMPLES = 1000
_TIE_RTOL = 1e-12


@dataclass
class WindowResult:
    window: tuple
    bound: EntanglementBound
    chosen_pairs: list


@dataclass
class CertificationResult:
    bound: EntanglementBound
    window: tuple
    chosen_pairs: list
    eof_mean: float
    eof_std: float
    per_dimension_curve: list
    mode: str
    noise_floor: float = 0.0
    visibilities: list = field(default_factory=list)
    replicate_eofs: list = field(default_factory=list)
    failed_replicates: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["chosen_pairs"] = [list(p) for p in self.chosen_pairs]
        d["per_dimension_curve"] = [list(p) for p in self.per_dimension_curve]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CertificationResult":
        d = dict(d)
        d["bound"] = EntanglementBound(**d["bound"])
        d["window"] = tuple(d["window"])
        d["chosen_pairs"] = [tuple(p) for p in d["chosen_pairs"]]
        d["per_dimension_curve"] = [(int(n), float(e)) for n, e in d["per_dimension_curve"]]
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CertificationResult":
        return cls.from_dict(json.loads(text))

    def curve_csv(self) -> str:
        rows = ["d,eof_bits"] + [f"{n},{e:.12g}" for n, e in self.per_dimension_curve]
        return "\n".join(rows) + "\n"


def constant_coherence_matrix(m: CoherenceBandMatrix, visibility: float) -> CoherenceBandMatrix:
    """Model matrix with every r_jk = V (p_j + p_k)/2; a model, not a certificate."""
    p = m.diag
    model = visibility * 0.5 * (p[:, None] + p[None, :])
    d = m.dim
    idx = np.arange(d - 1)
    return CoherenceBandMatrix(
        p, model[idx, idx + 1], np.triu(model, k=2), normalized=m.normalized, cross=m.cross
    )


def central_visibility(visibilities) -> float:
    """Mean visibility excluding the first and last pair when there are >= 3."""
    v = np.asarray([x for x in visibilities if x is not None and np.isfinite(x)], dtype=float)
    if v.size == 0:
        raise InputError("no measured visibilities")
    if v.size >= 3:
        v = v[1:-1]
    return float(v.mean())


def _better(new: float, old: float) -> bool:
    return new > old + _TIE_RTOL * max(abs(old), 1.0)


def scan_windows(m: CoherenceBandMatrix, noise: NoiseDiagonal | None = None) -> list:
    """Bound for every contiguous window of an already-completed matrix.

    Ordered by window size, then start index.
    """
    out = []
    for size in range(2, m.dim + 1):
        for a in range(1, m.dim - size + 2):
            b = a + size - 1
            sub = m if size == m.dim else submatrix(m, a, b)
            bval, chosen = best_B(build_ledger(sub, noise))
            out.append(WindowResult((a, b), eof_bound(bval), chosen))
    return out


def certify_matrix(
    m: CoherenceBandMatrix,
    noise: NoiseDiagonal | None = None,
    mode: str = POSITIVITY,
    visibility: float | None = None,
):
    """Best window for a band matrix.

    Returns ``(best WindowResult, per-dimension curve)``.  In constant-coherence
    mode ``visibility`` is the model coherence; it defaults to the mean
    neighbour visibility implied by ``m``.
    """
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}; choose from {MODES}")
    if m.dim < 2:
        raise InputError("need at least 2 modes")
    if not np.any(m.diag > 0):
        raise DegenerateDataError("diagonal is all zero")
    if mode == POSITIVITY:
        done, _ = fill(m)
    else:
        if visibility is None:
            with np.errstate(invalid="ignore", divide="ignore"):
                v = 2 * m.band1 / (m.diag[:-1] + m.diag[1:])
            visibility = central_visibility(v)
        done = constant_coherence_matrix(m, visibility)
    results = scan_windows(done, noise)
    best = None
    curve = {}
    for r in results:
        size = r.window[1] - r.window[0] + 1
        if size not in curve or _better(r.bound.eof_bits, curve[size]):
            curve[size] = r.bound.eof_bits
        if best is None or _better(r.bound.eof_bits, best.bound.eof_bits):
            best = r
    return best, sorted(curve.items())


def _record_matrix(rec: MeasurementRecord):
    if rec.modes < 2:
        raise InputError("record needs at least 2 modes")
    if not np.any(rec.diagonal_counts > 0):
        raise DegenerateDataError("diagonal counts are all zero")
    if not rec.fringes:
        raise InputError("record has no fringe scans")
    fits = fit_visibilities(rec)
    vis = [np.nan if f is None else f.visibility for f in fits]
    return to_band_matrix(rec.diagonal_counts, vis), vis


def _evaluate(rec, noise, mode):
    m, vis = _record_matrix(rec)
    if noise is not None:
        floor = noise.floor
    elif mode == CONSTANT_COHERENCE:
        # the model describes the signal state; measured V already carries the multipair loss
        floor = 0.0
    else:
        floor = estimate_noise_floor(rec)
    const = central_visibility(vis) if mode == CONSTANT_COHERENCE else None
    best, curve = certify_matrix(m, NoiseDiagonal(floor), mode, const)
    return best, curve, floor, vis


def resample_record(rec: MeasurementRecord, rng: np.random.Generator) -> MeasurementRecord:
    """Poisson parametric resample of every raw count in the record."""
    fringes = [
        {"pair": f.pair, "phases": f.phases, "counts": rng.poisson(f.counts)} for f in rec.fringes
    ]
    return MeasurementRecord(
        delta_ns=rec.delta_ns,
        modes=rec.modes,
        diagonal_counts=rng.poisson(rec.diagonal_counts),
        fringes=fringes,
        postselect_window_ns=rec.postselect_window_ns,
        cross_counts=None if rec.cross_counts is None else rng.poisson(rec.cross_counts),
    )


def _replicate(args):
    rec, noise, mode, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    try:
        best, _, _, _ = _evaluate(resample_record(rec, rng), noise, mode)
    except (DegenerateDataError, DomainError) as exc:
        log.debug("replicate failed: %s", exc)
        return math.nan
    return best.bound.eof_bits


def default_workers() -> int:
    return max(1, int(os.environ.get("ENTCERT_THREADS", "1")))


def certify(
    record: MeasurementRecord,
    noise: NoiseDiagonal | None = None,
    mode: str = POSITIVITY,
    resamples: int = DEFAULT_RESAMPLES,
    seed: int | None = None,
    window: tuple | None = None,
    workers: int | None = None,
) -> CertificationResult:
    """Certify a lower bound on the entanglement of formation of a record.

    The headline bound is the point estimate on the measured counts.
    ``resamples`` Poisson replicas of the raw counts are pushed through the
    same pipeline to give ``eof_mean`` and ``eof_std``.  ``window`` (1-based,
    inclusive) restricts the analysis to a sub-range of modes.  ``noise``
    overrides the floor estimated from the record's cross counts; without it,
    constant-coherence mode uses no floor.
    """
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}; choose from {MODES}")
    if window is not None:
        record = restrict_record(record, *window)
    best, curve, floor, vis = _evaluate(record, noise, mode)

    eofs = []
    if resamples > 0:
        if seed is None:
            raise InputError("a seed is required when resamples > 0")
        seqs = np.random.SeedSequence(seed).spawn(resamples)
        jobs = [(record, noise, mode, s) for s in seqs]
        workers = workers or default_workers()
        if workers > 1:
            with ProcessPoolExecutor(workers) as ex:
                eofs = list(ex.map(_replicate, jobs, chunksize=max(1, resamples // (4 * workers))))
        else:
            eofs = [_replicate(j) for j in jobs]
    arr = np.asarray(eofs, dtype=float)
    ok = arr[np.isfinite(arr)]
    if window is not None:
        off = window[0] - 1
        best = WindowResult(
            (best.window[0] + off, best.window[1] + off),
            best.bound,
            [(j + off, k + off) for j, k in best.chosen_pairs],
        )
    return CertificationResult(
        bound=best.bound,
        window=best.window,
        chosen_pairs=list(best.chosen_pairs),
        eof_mean=float(ok.mean()) if ok.size else best.bound.eof_bits,
        eof_std=float(ok.std(ddof=1)) if ok.size > 1 else 0.0,
        per_dimension_curve=[(int(n), float(e)) for n, e in curve],
        mode=mode,
        noise_floor=float(floor),
        visibilities=[None if not np.isfinite(v) else float(v) for v in vis],
        replicate_eofs=[float(x) for x in arr],
        failed_replicates=int(arr.size - ok.size),
    )


def restrict_record(rec: MeasurementRecord, a: int, b: int) -> MeasurementRecord:
    """Record reduced to modes a..b (1-based, inclusive), pairs renumbered."""
    if not (1 <= a < b <= rec.modes):
        raise DomainError(f"window [{a}, {b}] invalid for {rec.modes} modes")
    fringes = [
        {"pair": (f.pair[0] - a + 1, f.pair[1] - a + 1), "phases": f.phases, "counts": f.counts}
        for f in rec.fringes
        if a <= f.pair[0] and f.pair[1] <= b
    ]
    cross = rec.cross_counts
    return MeasurementRecord(
        delta_ns=rec.delta_ns,
        modes=b - a + 1,
        diagonal_counts=rec.diagonal_counts[a - 1 : b],
        fringes=fringes,
        postselect_window_ns=rec.postselect_window_ns,
        cross_counts=cross,
    )


def uniform_matrix(d: int, visibility: float) -> CoherenceBandMatrix:
    p = np.full(d, 1.0 / d)
    return CoherenceBandMatrix(p, np.full(d - 1, visibility / d), normalized=True)


def uniform_eof(d: int, visibility: float, noise_floor: float = 0.0) -> float:
    """Bound from the full d-mode window of uniform data (no window search)."""
    m, _ = fill(uniform_matrix(d, visibility))
    bval, _ = best_B(build_ledger(m, NoiseDiagonal(noise_floor)))
    return eof_bound(bval).eof_bits


def sweep(visibilities, d_max: int, noise_floor: float = 0.0) -> list:
    """(V, d, eof_bits) for uniform data, d = 2..d_max.

    Each d gets the best bound over all windows, as ``certify`` would report.
    Uniform windows of equal size are identical, so this is the running
    maximum of the full-window bound over sizes <= d.
    """
    if d_max < 2:
        raise DomainError("d_max must be >= 2")
    rows = []
    for v in visibilities:
        v = float(v)
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"visibility {v} outside [0, 1]")
        running = 0.0
        for d in range(2, d_max + 1):
            e = uniform_eof(d, v, noise_floor)
            if _better(e, running):
                running = e
            rows.append((v, d, running))
    return rows
