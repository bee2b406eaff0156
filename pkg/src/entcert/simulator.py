"""Synthetic measurement records for a pulsed energy-time two-photon source.

The model works directly at the granularity the certification consumes:
mode populations, neighbour coherences and accidental cross populations.
A trapezoidal pump pulse of length ``pulse_ns`` sits centred in a span of
``modes * delta_ns``.  Population of mode j is the pulse intensity
integrated over its time bin; the coherence between modes j and j+1 is the
overlap integral of sqrt(I(t) I(t + delta)), so fast intensity changes at
the pulse edges lower the neighbour visibility without any extra parameter.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError
from .ingest import CoincidenceHistogram2D, MeasurementRecord

N_PHASES = 15
_GRID = 2000  # integration points per mode


@dataclass(frozen=True)
class SimulationConfig:
    modes: int = 9
    delta_ns: float = 5.5
    storage_ns: float = 50.0
    pulse_ns: float | None = None  # None: fill the whole span of modes * delta_ns
    visibility1: float = 0.97
    pump_linewidth_hz: float = 1000.0
    memory_efficiency: float = 0.15
    noise_floor: float = 0.01
    counts_per_point: float = 300.0
    pairs_per_mode: float = 2.0e4
    edge_rise_fraction: float = 0.5
    postselect_window_ns: float = 3.0
    raw_histogram: bool = False
    seed: int = 0

    def __post_init__(self):
        problems = []
        if not (isinstance(self.modes, int) and self.modes >= 2):
            problems.append("modes must be an integer >= 2")
        if not self.delta_ns > 0:
            problems.append("delta_ns must be positive")
        if not self.storage_ns > 0:
            problems.append("storage_ns must be positive")
        if self.pulse_ns is not None:
            if not 0 < self.pulse_ns <= self.storage_ns:
                problems.append("pulse_ns must be in (0, storage_ns]")
            if self.pulse_ns > self.modes * self.delta_ns + 1e-9:
                problems.append("pulse_ns must fit inside modes * delta_ns")
        if not 0.0 <= self.visibility1 <= 1.0:
            problems.append("visibility1 must be in [0, 1]")
        if self.pump_linewidth_hz < 0:
            problems.append("pump_linewidth_hz must be >= 0")
        if not 0.0 < self.memory_efficiency <= 1.0:
            problems.append("memory_efficiency must be in (0, 1]")
        if self.noise_floor < 0:
            problems.append("noise_floor must be >= 0")
        if not self.counts_per_point > 0 or not self.pairs_per_mode > 0:
            problems.append("count budgets must be positive")
        if not 0.0 <= self.edge_rise_fraction <= 1.0:
            problems.append("edge_rise_fraction must be in [0, 1]")
        if not 0 < self.postselect_window_ns < self.delta_ns:
            problems.append("postselect_window_ns must be in (0, delta_ns)")
        if problems:
            raise ConfigurationError("; ".join(problems))

    @property
    def pulse(self) -> float:
        return self.modes * self.delta_ns if self.pulse_ns is None else self.pulse_ns


def visibility_decay(n: int, cfg: SimulationConfig) -> float:
    """Neighbour visibility at delay n * delta under Gaussian pump phase noise."""
    if n < 1:
        raise ValueError("band index n must be >= 1")
    x = math.pi * cfg.pump_linewidth_hz * n * cfg.delta_ns * 1e-9
    return cfg.visibility1 * math.exp(-2.0 * x * x)


def intensity(t_ns, cfg: SimulationConfig) -> np.ndarray:
    """Trapezoidal pulse profile (peak 1) on the span [0, modes * delta_ns]."""
    t = np.asarray(t_ns, dtype=float)
    span = cfg.modes * cfg.delta_ns
    start = 0.5 * (span - cfg.pulse)
    stop = start + cfg.pulse
    rise = cfg.edge_rise_fraction * cfg.delta_ns
    if rise <= 0:
        return ((t >= start) & (t < stop)).astype(float)
    up = np.clip((t - start) / rise, 0.0, 1.0)
    down = np.clip((stop - t) / rise, 0.0, 1.0)
    return np.minimum(up, down)


def mode_profile(cfg: SimulationConfig) -> tuple[np.ndarray, np.ndarray]:
    """Mode populations p_j and neighbour overlaps o_j, both in units of delta_ns.

    A fully lit mode has p_j = 1; o_j <= sqrt(p_j p_{j+1}) by Cauchy-Schwarz.
    """
    d, dt = cfg.modes, cfg.delta_ns
    u = (np.arange(_GRID) + 0.5) / _GRID
    p = np.array([intensity((j + u) * dt, cfg).mean() for j in range(d)])
    o = np.array(
        [np.sqrt(intensity((j + u) * dt, cfg) * intensity((j + 1 + u) * dt, cfg)).mean() for j in range(d - 1)]
    )
    return p, o


def expected_visibilities(cfg: SimulationConfig) -> np.ndarray:
    """Fringe contrast per neighbour pair before Poisson noise."""
    p, o = mode_profile(cfg)
    n = cfg.noise_floor * p.mean()
    return visibility_decay(1, cfg) * 2 * o / (p[:-1] + p[1:] + 2 * n)


def fringe_phases() -> np.ndarray:
    return np.linspace(0.0, 2.0 * math.pi, N_PHASES)


def simulate(cfg: SimulationConfig) -> MeasurementRecord:
    """Draw one synthetic record.  Bit-reproducible for a fixed ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    p, o = mode_profile(cfg)
    n = cfg.noise_floor * p.mean()
    v1 = visibility_decay(1, cfg)
    phases = fringe_phases()
    scale = cfg.counts_per_point / (2 * p.max() + 2 * n)

    fringes = []
    offsets = rng.uniform(0.0, 2 * math.pi, cfg.modes - 1)
    for j in range(cfg.modes - 1):
        mean = scale * (p[j] + p[j + 1] + 2 * n + 2 * v1 * o[j] * np.cos(phases + offsets[j]))
        fringes.append({"pair": (j + 1, j + 2), "phases": phases, "counts": rng.poisson(mean)})

    diag_mean = cfg.pairs_per_mode * cfg.memory_efficiency * p / p.max()
    diagonal = rng.poisson(diag_mean)
    cross = rng.poisson(np.full(cfg.modes - 1, cfg.noise_floor * diag_mean.mean()))

    hist = synth_histogram(diagonal, cfg, rng) if cfg.raw_histogram else None
    return MeasurementRecord(
        delta_ns=cfg.delta_ns,
        modes=cfg.modes,
        diagonal_counts=diagonal,
        fringes=fringes,
        postselect_window_ns=cfg.postselect_window_ns,
        cross_counts=cross,
        raw_histogram=hist,
        meta={"synthetic": True, "config": asdict(cfg)},
    )


def synth_histogram(
    diagonal, cfg: SimulationConfig, rng: np.random.Generator, sub_bins: int = 10, sigma_ns: float = 0.4
) -> CoincidenceHistogram2D:
    """Three-peak coincidence histogram whose central peak holds ``diagonal``.

    Side peaks sit at +-delta with half the central mass each.  Central
    events are confined to the post-selection window so that post-selection
    with the span start as time origin returns ``diagonal`` exactly.
    """
    d, dt = cfg.modes, cfg.delta_ns
    d1 = np.linspace(0.0, d * dt, d * sub_bins + 1)
    step = 0.25
    half = math.ceil((1.5 * dt + 4 * sigma_ns) / step) * step
    d2 = np.arange(-half, half + step / 2, step)
    c2 = 0.5 * (d2[:-1] + d2[1:])
    t1 = 0.5 * (d1[:-1] + d1[1:])
    inside = np.abs(c2) <= 0.5 * cfg.postselect_window_ns
    shape_c = np.exp(-0.5 * (c2 / sigma_ns) ** 2) * inside
    shape_c /= shape_c.sum()
    w1 = intensity(t1, cfg) + 1e-12
    counts = np.zeros((t1.size, c2.size), dtype=np.int64)
    for j, c in enumerate(np.asarray(diagonal, dtype=np.int64)):
        rows = slice(j * sub_bins, (j + 1) * sub_bins)
        wr = w1[rows] / w1[rows].sum()
        cell = rng.multinomial(int(c), np.outer(wr, shape_c).ravel()).reshape(sub_bins, c2.size)
        counts[rows] += cell
        for shift in (-dt, dt):
            side = np.exp(-0.5 * ((c2 - shift) / sigma_ns) ** 2) * ~inside
            side /= side.sum()
            counts[rows] += rng.poisson(0.5 * c * np.outer(wr, side))
    return CoincidenceHistogram2D(d1, d2, counts)
