"""Measurement records: file I/O, central-peak post-selection, fringe fitting.

File format (JSON, one document per run)::

    {
      "delta_ns": 5.5,
      "postselect_window_ns": 3.0,
      "modes": 10,
      "diagonal_counts": [...],            # one integer per mode
      "cross_counts": [...],               # optional, neighbour cross terms
      "fringes": [{"pair": [1, 2], "phases": [...], "counts": [...]}, ...],
      "raw_histogram": {                   # optional
          "delay1_edges": [...], "delay2_edges": [...], "counts": [[...], ...]
      }
    }

Phases are radians.  Mode indices in ``pair`` are 1-based.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .band import CoherenceBandMatrix
from .errors import (
    ConfigurationError,
    DegenerateDataError,
    InsufficientDataError,
    ParseError,
    ValidationError,
)

DEFAULT_NOISE_FLOOR = 0.01
MIN_FRINGE_POINTS = 5
ONSET_FRACTION = 0.05
_ILL_CONDITIONED = 1e8


@dataclass
class Fringe:
    pair: tuple
    phases: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.pair = tuple(int(i) for i in self.pair)
        self.phases = np.asarray(self.phases, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)


@dataclass
class CoincidenceHistogram2D:
    """Coincidences binned by arrival time (delay 1) and detector delay (delay 2).

    ``counts[i, k]`` is the number of events in delay-1 bin ``i`` and delay-2
    bin ``k``.  Bin edges are in ns.
    """

    delay1_edges: np.ndarray
    delay2_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.delay1_edges = np.asarray(self.delay1_edges, dtype=float)
        self.delay2_edges = np.asarray(self.delay2_edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        problems = []
        for name in ("delay1_edges", "delay2_edges"):
            e = getattr(self, name)
            if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
                problems.append(f"{name}: must be strictly increasing with >= 2 entries")
        if not problems and self.counts.shape != (self.delay1_edges.size - 1, self.delay2_edges.size - 1):
            problems.append(
                f"counts: shape {self.counts.shape} does not match edges "
                f"({self.delay1_edges.size - 1}, {self.delay2_edges.size - 1})"
            )
        if np.any(self.counts < 0):
            problems.append("counts: must be non-negative")
        if problems:
            raise ValidationError(problems)


@dataclass
class MeasurementRecord:
    delta_ns: float
    modes: int
    diagonal_counts: np.ndarray
    fringes: list
    postselect_window_ns: float = 3.0
    cross_counts: np.ndarray | None = None
    raw_histogram: CoincidenceHistogram2D | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.diagonal_counts = np.asarray(self.diagonal_counts, dtype=np.int64)
        if self.cross_counts is not None:
            self.cross_counts = np.asarray(self.cross_counts, dtype=np.int64)
        self.fringes = [f if isinstance(f, Fringe) else Fringe(**f) for f in self.fringes]
        problems = validate_record(self)
        if problems:
            raise ValidationError(problems)

    def fringe_for(self, j: int) -> Fringe | None:
        """Fringe scan for the pair (j, j+1), 1-based."""
        for f in self.fringes:
            if f.pair == (j, j + 1):
                return f
        return None


def validate_record(rec: MeasurementRecord) -> list:
    problems = []
    if not (isinstance(rec.delta_ns, (int, float)) and rec.delta_ns > 0):
        problems.append("delta_ns: must be a positive number")
    if not (isinstance(rec.postselect_window_ns, (int, float)) and rec.postselect_window_ns > 0):
        problems.append("postselect_window_ns: must be a positive number")
    if not (isinstance(rec.modes, (int, np.integer)) and rec.modes >= 1):
        problems.append("modes: must be a positive integer")
    if rec.diagonal_counts.ndim != 1 or rec.diagonal_counts.size != rec.modes:
        problems.append(f"diagonal_counts: length {rec.diagonal_counts.size} != modes {rec.modes}")
    if np.any(rec.diagonal_counts < 0):
        problems.append("diagonal_counts: must be non-negative")
    if rec.cross_counts is not None and np.any(rec.cross_counts < 0):
        problems.append("cross_counts: must be non-negative")
    seen = set()
    for i, f in enumerate(rec.fringes):
        tag = f"fringes[{i}]"
        if len(f.pair) != 2 or f.pair[1] != f.pair[0] + 1 or not (1 <= f.pair[0] < rec.modes):
            problems.append(f"{tag}.pair: must be [j, j+1] with 1 <= j < modes, got {list(f.pair)}")
        elif f.pair in seen:
            problems.append(f"{tag}.pair: duplicate pair {list(f.pair)}")
        seen.add(f.pair)
        if f.phases.shape != f.counts.shape or f.phases.ndim != 1:
            problems.append(f"{tag}: phases and counts must be equal-length arrays")
            continue
        if np.any(f.counts < 0):
            problems.append(f"{tag}.counts: must be non-negative")
        distinct = np.unique(np.round(f.phases, 12))
        if distinct.size < MIN_FRINGE_POINTS:
            problems.append(f"{tag}.phases: need >= {MIN_FRINGE_POINTS} distinct settings, got {distinct.size}")
        elif np.ptp(f.phases) < math.pi - 1e-9:
            problems.append(f"{tag}.phases: settings must span at least pi radians")
        if f.phases.size and np.max(np.abs(f.phases)) > 2 * math.pi + 1e-6:
            problems.append(f"{tag}.phases: values beyond 2*pi; phases must be in radians, not degrees")
    return problems


# -- fringe fitting ---------------------------------------------------------


@dataclass(frozen=True)
class FringeFit:
    visibility: float
    phase0: float
    amplitude: float
    offset: float
    v_err: float
    method: str

    def __iter__(self):
        # unpacks as (V, phase0, amplitude, offset)
        return iter((self.visibility, self.phase0, self.amplitude, self.offset))


def max_min_visibility(counts) -> tuple[float, float]:
    """(max - min)/(max + min) with its Poisson standard error."""
    c = np.asarray(counts, dtype=float)
    hi, lo = float(c.max()), float(c.min())
    s = hi + lo
    if s <= 0:
        raise DegenerateDataError("all fringe counts are zero")
    v = (hi - lo) / s
    err = math.sqrt(hi * (2 * lo / s**2) ** 2 + lo * (2 * hi / s**2) ** 2)
    return v, err


def _maxmin_fit(n):
    v, err = max_min_visibility(n)
    mean = float(n.mean())
    return FringeFit(min(v, 1.0), 0.0, mean * v, mean, err, "maxmin")


def fit_fringe(phases, counts, iterations: int = 4) -> FringeFit:
    """Fit N(phi) = A (1 + V cos(phi + phi0)) by Poisson-weighted least squares.

    Solved in the linear form a + b cos(phi) + c sin(phi), reweighting with
    the fitted model (not the observed counts) so that near-zero minima do
    not bias the contrast.  V is clamped to [0, 1].  Falls back to the
    max/min contrast when the design matrix is ill-conditioned, e.g. phases
    that do not resolve a sinusoid.
    """
    phi = np.asarray(phases, dtype=float)
    n = np.asarray(counts, dtype=float)
    if phi.size < MIN_FRINGE_POINTS or phi.size != n.size:
        raise InsufficientDataError(f"need >= {MIN_FRINGE_POINTS} phase settings, got {phi.size}")
    if not np.any(n > 0):
        raise DegenerateDataError("all fringe counts are zero")
    x = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    if np.linalg.cond(x.T @ x) > _ILL_CONDITIONED:
        return _maxmin_fit(n)
    w = np.ones_like(n)
    for _ in range(iterations + 1):
        xw = x * w[:, None]
        cov = np.linalg.inv(x.T @ xw)
        coef = cov @ (xw.T @ n)
        model = x @ coef
        # floor keeps weights finite where the model touches zero
        w = 1.0 / np.maximum(model, 0.5)
    a, b, c = coef
    if a <= 0:
        return _maxmin_fit(n)
    mod = math.hypot(b, c)
    v = mod / a
    if mod > 0:
        grad = np.array([-v / a, b / (a * mod), c / (a * mod)])
    else:
        grad = np.array([0.0, 1.0 / a, 0.0])
    err = math.sqrt(max(float(grad @ cov @ grad), 0.0))
    phase0 = math.atan2(-c, b)
    v_c = min(max(v, 0.0), 1.0)
    return FringeFit(v_c, phase0, float(a) * v_c, float(a), err, "fit")


def fit_visibilities(rec: MeasurementRecord) -> list:
    """FringeFit per neighbouring pair j = 1..modes-1 (None where not measured)."""
    fits = []
    for j in range(1, rec.modes):
        f = rec.fringe_for(j)
        fits.append(None if f is None else fit_fringe(f.phases, f.counts))
    return fits


def visibility_table(rec: MeasurementRecord, fits=None) -> str:
    """CSV with columns pair, V, V_err, method."""
    fits = fit_visibilities(rec) if fits is None else fits
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pair", "V", "V_err", "method"])
    for j, fit in enumerate(fits, start=1):
        if fit is not None:
            w.writerow([f"{j}-{j + 1}", f"{fit.visibility:.6f}", f"{fit.v_err:.6f}", fit.method])
    return buf.getvalue()


def estimate_noise_floor(rec: MeasurementRecord, default: float = DEFAULT_NOISE_FLOOR) -> float:
    """Mean cross-term count over the mean diagonal count, or ``default``."""
    if rec.cross_counts is None or rec.cross_counts.size == 0:
        return default
    mean_diag = float(rec.diagonal_counts.mean())
    if mean_diag <= 0:
        raise DegenerateDataError("diagonal counts are all zero")
    return float(rec.cross_counts.mean()) / mean_diag


def to_band_matrix(diagonal_counts, visibilities) -> CoherenceBandMatrix:
    """Normalised band matrix from counts and neighbour visibilities.

    The fringe of modes j, j+1 behaves as p_j + p_{j+1} + 2|r| cos(phi), so
    r_{j,j+1} = V_j (p_j + p_{j+1}) / 2.  Missing visibilities count as 0.
    """
    counts = np.asarray(diagonal_counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise DegenerateDataError("diagonal counts are all zero")
    p = counts / total
    v = np.nan_to_num(np.asarray(visibilities, dtype=float), nan=0.0)
    v = np.clip(v, 0.0, 1.0)
    return CoherenceBandMatrix(p, v * 0.5 * (p[:-1] + p[1:]), normalized=True)


# -- raw histogram ----------------------------------------------------------


def _central_center(h: CoincidenceHistogram2D, delta_ns: float) -> float:
    centers = 0.5 * (h.delay2_edges[:-1] + h.delay2_edges[1:])
    mid = 0.5 * (h.delay2_edges[0] + h.delay2_edges[-1])
    near = np.abs(centers - mid) < 0.5 * delta_ns
    marginal = h.counts.sum(axis=0)
    if not near.any() or marginal[near].max() <= 0:
        return mid
    cand = np.nonzero(near)[0]
    return float(centers[cand[int(np.argmax(marginal[cand]))]])


def postselect_central_peak(
    h: CoincidenceHistogram2D,
    delta_ns: float,
    window_ns: float,
    modes: int | None = None,
    origin_ns: float | None = None,
) -> np.ndarray:
    """Per-mode coincidences inside the central delay-2 peak.

    Delay-2 bins whose centre lies within +-window/2 of the central peak are
    kept.  Delay 1 is cut into modes of width ``delta_ns`` starting at the
    first bin above 5% of the maximum, or at ``origin_ns`` when given.
    Bins before the onset or past the
    last mode are folded into the edge modes, so the output always sums to
    the in-window mass.
    """
    if window_ns >= delta_ns:
        raise ConfigurationError(
            f"post-selection window {window_ns} ns must be shorter than delta {delta_ns} ns"
        )
    if window_ns <= 0:
        raise ConfigurationError("post-selection window must be positive")
    centers2 = 0.5 * (h.delay2_edges[:-1] + h.delay2_edges[1:])
    c = _central_center(h, delta_ns)
    keep = np.abs(centers2 - c) <= 0.5 * window_ns + 1e-12
    per_t = h.counts[:, keep].sum(axis=1)
    t = 0.5 * (h.delay1_edges[:-1] + h.delay1_edges[1:])
    if per_t.max() <= 0:
        return np.zeros(modes or 1, dtype=np.int64)
    above = np.nonzero(per_t > ONSET_FRACTION * per_t.max())[0]
    start = h.delay1_edges[above[0]] if origin_ns is None else float(origin_ns)
    if modes is None:
        stop = h.delay1_edges[above[-1] + 1]
        modes = max(1, int(math.ceil((stop - start) / delta_ns - 1e-9)))
    idx = np.clip(np.floor((t - start) / delta_ns).astype(int), 0, modes - 1)
    return np.bincount(idx, weights=per_t, minlength=modes).astype(np.int64)


# -- file I/O ---------------------------------------------------------------

_REQUIRED = ("delta_ns", "postselect_window_ns", "modes", "diagonal_counts", "fringes")


def record_from_dict(doc: dict) -> MeasurementRecord:
    if not isinstance(doc, dict):
        raise ValidationError(["document: top level must be an object"])
    problems = [f"{k}: required field missing" for k in _REQUIRED if k not in doc]
    units = doc.get("phase_units", "radians")
    if units != "radians":
        problems.append(f"phase_units: only 'radians' is accepted, got {units!r}")
    fringes = doc.get("fringes", [])
    if not isinstance(fringes, list):
        problems.append("fringes: must be an array")
        fringes = []
    parsed = []
    for i, f in enumerate(fringes):
        if not isinstance(f, dict) or not {"pair", "phases", "counts"} <= set(f):
            problems.append(f"fringes[{i}]: needs pair, phases and counts")
            continue
        try:
            parsed.append(Fringe(f["pair"], f["phases"], f["counts"]))
        except (TypeError, ValueError) as exc:
            problems.append(f"fringes[{i}]: {exc}")
    if problems:
        raise ValidationError(problems)
    hist = None
    if doc.get("raw_histogram") is not None:
        rh = doc["raw_histogram"]
        try:
            hist = CoincidenceHistogram2D(rh["delay1_edges"], rh["delay2_edges"], rh["counts"])
        except KeyError as exc:
            raise ValidationError([f"raw_histogram: missing {exc.args[0]}"]) from None
    try:
        return MeasurementRecord(
            delta_ns=doc["delta_ns"],
            modes=doc["modes"],
            diagonal_counts=doc["diagonal_counts"],
            fringes=parsed,
            postselect_window_ns=doc["postselect_window_ns"],
            cross_counts=doc.get("cross_counts"),
            raw_histogram=hist,
            meta=dict(doc.get("meta", {})),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError([str(exc)]) from None


def record_to_dict(rec: MeasurementRecord) -> dict:
    doc = {
        "delta_ns": rec.delta_ns,
        "postselect_window_ns": rec.postselect_window_ns,
        "modes": int(rec.modes),
        "diagonal_counts": rec.diagonal_counts.tolist(),
        "fringes": [
            {"pair": list(f.pair), "phases": f.phases.tolist(), "counts": f.counts.tolist()}
            for f in rec.fringes
        ],
    }
    if rec.cross_counts is not None:
        doc["cross_counts"] = rec.cross_counts.tolist()
    if rec.raw_histogram is not None:
        h = rec.raw_histogram
        doc["raw_histogram"] = {
            "delay1_edges": h.delay1_edges.tolist(),
            "delay2_edges": h.delay2_edges.tolist(),
            "counts": h.counts.tolist(),
        }
    if rec.meta:
        doc["meta"] = rec.meta
    return doc


def loads_record(text: str) -> MeasurementRecord:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed document: {exc.msg}", exc.lineno, exc.colno) from None
    return record_from_dict(doc)


def load_record(path, format: str = "json") -> MeasurementRecord:
    """Read and validate a record.  ``path`` may be ``-`` for stdin."""
    if format != "json":
        raise ConfigurationError(f"unsupported record format {format!r}")
    if str(path) == "-":
        import sys

        return loads_record(sys.stdin.read())
    return loads_record(Path(path).read_text())


def dumps_record(rec: MeasurementRecord) -> str:
    return json.dumps(record_to_dict(rec), indent=1)


def save_record(rec: MeasurementRecord, path) -> None:
    Path(path).write_text(dumps_record(rec) + "\n")


def records_equal(a: MeasurementRecord, b: MeasurementRecord) -> bool:
    return record_to_dict(a) == record_to_dict(b)
