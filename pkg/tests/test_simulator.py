import math

import numpy as np
import pytest

from entcert.band import NoiseDiagonal
from entcert.engine import central_visibility, certify
from entcert.errors import ConfigurationError
from entcert.ingest import dumps_record, fit_visibilities
from entcert.simulator import (
    SimulationConfig,
    expected_visibilities,
    fringe_phases,
    simulate,
    visibility_decay,
)


def test_decay_base_case():
    cfg = SimulationConfig()
    assert visibility_decay(1, cfg) == pytest.approx(cfg.visibility1, rel=1e-9)


def test_decay_monochromatic():
    cfg = SimulationConfig(pump_linewidth_hz=0.0)
    assert all(visibility_decay(n, cfg) == cfg.visibility1 for n in range(1, 20))


def test_decay_at_n9():
    cfg = SimulationConfig(visibility1=1.0)
    assert 1 - visibility_decay(9, cfg) == pytest.approx(4.8e-8, rel=0.01)


def test_decay_monotone():
    lo, hi = SimulationConfig(pump_linewidth_hz=1e5), SimulationConfig(pump_linewidth_hz=1e6)
    a = [visibility_decay(n, lo) for n in range(1, 12)]
    b = [visibility_decay(n, hi) for n in range(1, 12)]
    assert all(x >= y for x, y in zip(a, a[1:]))
    assert all(x >= y for x, y in zip(a, b))


def test_decay_rejects_n0():
    with pytest.raises(ValueError):
        visibility_decay(0, SimulationConfig())


@pytest.mark.parametrize(
    "kw",
    [
        {"modes": 1},
        {"visibility1": 1.2},
        {"memory_efficiency": 0.0},
        {"pulse_ns": 60.0},
        {"postselect_window_ns": 6.0},
        {"noise_floor": -0.01},
    ],
)
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        SimulationConfig(**kw)


def test_fifteen_phases():
    ph = fringe_phases()
    assert ph.size == 15 and ph[0] == 0 and ph[-1] == pytest.approx(2 * math.pi)


def test_reproducible():
    cfg = SimulationConfig(seed=42, raw_histogram=True)
    assert dumps_record(simulate(cfg)) == dumps_record(simulate(cfg))
    assert dumps_record(simulate(cfg)) != dumps_record(simulate(SimulationConfig(seed=43, raw_histogram=True)))


def test_expected_visibility_consistency():
    cfg = SimulationConfig(modes=5)
    expected = expected_visibilities(cfg)
    vs = np.array(
        [[f.visibility for f in fit_visibilities(simulate(SimulationConfig(modes=5, seed=s)))] for s in range(100)]
    )
    se = vs.std(axis=0, ddof=1) / math.sqrt(len(vs))
    assert np.all(np.abs(vs.mean(axis=0) - expected) < 3 * se)


def test_efficiency_scales_diagonal():
    totals = []
    for eff in (0.05, 0.1, 0.2):
        draws = [simulate(SimulationConfig(memory_efficiency=eff, seed=s)).diagonal_counts.sum() for s in range(10)]
        totals.append(np.mean(draws))
    ratio = np.array(totals) / np.array([0.05, 0.1, 0.2])
    assert np.ptp(ratio) / ratio.mean() < 0.01


def test_edge_visibilities_depressed():
    rec = simulate(SimulationConfig(modes=10, edge_rise_fraction=0.5, seed=3))
    vis = [f.visibility for f in fit_visibilities(rec)]
    centre = central_visibility(vis)
    assert vis[0] < centre and vis[-1] < centre
    flat = expected_visibilities(SimulationConfig(modes=10, edge_rise_fraction=0.0))
    assert np.ptp(flat) < 1e-12


def test_ideal_limit():
    cfg = SimulationConfig(
        modes=9, edge_rise_fraction=0.0, visibility1=1.0, noise_floor=0.0, counts_per_point=1e8, pump_linewidth_hz=0.0
    )
    res = certify(simulate(cfg), noise=NoiseDiagonal(0.0), resamples=0)
    assert abs(res.bound.eof_bits - math.log2(9)) < 0.02


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_default_regime(seed):
    res = certify(simulate(SimulationConfig(modes=10, seed=seed)), resamples=0)
    assert 1.1 <= res.bound.eof_bits <= 1.4


def test_synthetic_flag():
    assert simulate(SimulationConfig()).meta["synthetic"] is True
