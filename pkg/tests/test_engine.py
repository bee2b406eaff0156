import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entcert.band import NoiseDiagonal
from entcert.engine import (
    CONSTANT_COHERENCE,
    POSITIVITY,
    CertificationResult,
    certify,
    certify_matrix,
    restrict_record,
    scan_windows,
    sweep,
    uniform_eof,
    uniform_matrix,
)
from entcert.errors import DegenerateDataError, DomainError, InputError
from entcert.ingest import MeasurementRecord
from entcert.propagation import fill
from entcert.simulator import SimulationConfig, simulate

PHASES = np.linspace(0, 2 * np.pi, 15)


def uniform_record(d, v, cross=None, level=100_000):
    fringes = [
        {"pair": (j, j + 1), "phases": PHASES, "counts": np.rint(level * (1 + v * np.cos(PHASES)))}
        for j in range(1, d)
    ]
    return MeasurementRecord(
        delta_ns=5.5,
        modes=d,
        diagonal_counts=np.full(d, level),
        fringes=fringes,
        cross_counts=cross,
    )


def test_ideal_record_gives_log2d():
    res = certify(uniform_record(9, 1.0), noise=NoiseDiagonal(0.0), resamples=0)
    assert res.bound.eof_bits == pytest.approx(math.log2(9), abs=1e-6)
    assert res.window == (1, 9)
    assert res.bound.dim_lower == 9


def test_uniform_097_in_range():
    res = certify(uniform_record(10, 0.97), noise=NoiseDiagonal(0.01), resamples=0)
    assert 1.1 <= res.bound.eof_bits <= 1.4
    assert res.bound.eof_bits == max(e for _, e in res.per_dimension_curve)
    assert [n for n, _ in res.per_dimension_curve] == list(range(2, 11))


def test_window_dominance():
    m = uniform_matrix(8, 0.96)
    best, _ = certify_matrix(m, NoiseDiagonal(0.01))
    done, _ = fill(m)
    for r in scan_windows(done, NoiseDiagonal(0.01)):
        assert best.bound.eof_bits >= r.bound.eof_bits - 1e-15


def test_tie_prefers_small_early_window():
    best, _ = certify_matrix(uniform_matrix(6, 0.5), NoiseDiagonal(0.0))
    # bands >= 2 unbounded; every 2-mode window is equivalent
    assert best.window == (1, 2)


def test_bootstrap_deterministic(bundled):
    a = certify(bundled, resamples=20, seed=5)
    b = certify(bundled, resamples=20, seed=5)
    assert a.eof_mean == b.eof_mean and a.eof_std == b.eof_std
    assert a.replicate_eofs == b.replicate_eofs
    c = certify(bundled, resamples=20, seed=6)
    assert c.replicate_eofs != a.replicate_eofs


def test_bootstrap_parallel_matches_serial(bundled):
    a = certify(bundled, resamples=8, seed=2, workers=1)
    b = certify(bundled, resamples=8, seed=2, workers=2)
    assert a.replicate_eofs == b.replicate_eofs


def test_seed_required():
    with pytest.raises(InputError):
        certify(uniform_record(3, 0.9), resamples=10)


@given(st.integers(0, 500))
@settings(max_examples=15, deadline=None)
def test_mode_ordering(seed):
    rec = simulate(SimulationConfig(modes=6, seed=seed, visibility1=0.9 + 0.09 * (seed % 7) / 6))
    pos = certify(rec, resamples=0)
    cc = certify(rec, mode=CONSTANT_COHERENCE, noise=NoiseDiagonal(pos.noise_floor), resamples=0)
    assert cc.bound.eof_bits >= pos.bound.eof_bits - 1e-12


def test_window_override_offsets_indices():
    rec = uniform_record(8, 0.97)
    res = certify(rec, noise=NoiseDiagonal(0.01), resamples=0, window=(3, 7))
    assert 3 <= res.window[0] < res.window[1] <= 7
    assert all(3 <= j < k <= 7 for j, k in res.chosen_pairs)


def test_restrict_record_bounds():
    with pytest.raises(DomainError):
        restrict_record(uniform_record(4, 0.9), 3, 3)


def test_degenerate_counts():
    rec = uniform_record(3, 0.9)
    rec.diagonal_counts[:] = 0
    with pytest.raises(DegenerateDataError):
        certify(rec, resamples=0)


def test_result_roundtrip(bundled):
    res = certify(bundled, resamples=5, seed=1)
    back = CertificationResult.from_json(res.to_json())
    assert back == res
    assert res.curve_csv().splitlines()[0] == "d,eof_bits"


def test_sweep_ideal_and_null():
    for v, d, e in sweep([1.0], 16):
        assert e == pytest.approx(math.log2(d), abs=1e-9)
    assert all(e == 0.0 for _, _, e in sweep([0.0], 10))


@pytest.mark.parametrize("v", [0.98, 0.99, 0.995])
def test_sweep_saturates(v):
    e = np.array([row[2] for row in sweep([v], 40)])
    assert np.all(np.diff(e) >= 0)
    peak = int(np.argmax(e))
    assert peak < len(e) - 1
    assert np.all(e[peak:] == e[peak])


def test_sweep_domain():
    with pytest.raises(DomainError):
        sweep([1.2], 4)
    with pytest.raises(DomainError):
        sweep([0.9], 1)


def test_uniform_eof_peak_values():
    # frozen reference values for uniform data with a 1% floor
    assert uniform_eof(4, 0.97, 0.01) == pytest.approx(1.312, abs=1e-3)
    assert uniform_eof(2, 0.97, 0.01) == pytest.approx(0.891, abs=1e-3)



def test_bundled_frozen_values(bundled):
    # regression values for the shipped synthetic run
    pos = certify(bundled, resamples=0)
    assert pos.bound.eof_bits == pytest.approx(1.3455, abs=1e-4)
    assert pos.window == (6, 9)
    cc = certify(bundled, mode=CONSTANT_COHERENCE, resamples=0)
    assert dict(cc.per_dimension_curve)[9] == pytest.approx(2.5784, abs=1e-4)
