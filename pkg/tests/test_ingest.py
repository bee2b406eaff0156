import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entcert.engine import central_visibility
from entcert.errors import (
    ConfigurationError,
    DegenerateDataError,
    InsufficientDataError,
    ParseError,
    ValidationError,
)
from entcert.ingest import (
    _central_center,
    CoincidenceHistogram2D,
    dumps_record,
    estimate_noise_floor,
    fit_fringe,
    fit_visibilities,
    load_record,
    loads_record,
    max_min_visibility,
    postselect_central_peak,
    records_equal,
    save_record,
    to_band_matrix,
    visibility_table,
)

PHASES = np.linspace(0, 2 * np.pi, 15)


def minimal_doc():
    return {
        "delta_ns": 5.5,
        "postselect_window_ns": 3.0,
        "modes": 2,
        "diagonal_counts": [100, 100],
        "fringes": [{"pair": [1, 2], "phases": PHASES.tolist(), "counts": [100] * 15}],
    }


@pytest.mark.parametrize("v", [0.0, 0.5, 0.9, 0.97, 1.0])
def test_noiseless_fit(v):
    fit = fit_fringe(PHASES, 100 * (1 + v * np.cos(PHASES + 0.3)))
    assert fit.visibility == pytest.approx(v, abs=1e-6)
    V, phase0, amp, off = fit
    assert off == pytest.approx(100)


def test_constant_counts():
    assert fit_fringe(PHASES, np.full(15, 50)).visibility == pytest.approx(0.0, abs=1e-12)


def test_max_min_two_points():
    v, err = max_min_visibility([200, 100])
    assert v == pytest.approx(1 / 3)
    assert err > 0


def test_fit_errors():
    with pytest.raises(InsufficientDataError):
        fit_fringe(PHASES[:4], [1, 2, 3, 4])
    with pytest.raises(DegenerateDataError):
        fit_fringe(PHASES, np.zeros(15))


def test_ill_conditioned_falls_back():
    phases = np.zeros(6)
    fit = fit_fringe(phases, [10, 20, 10, 20, 10, 20])
    assert fit.method == "maxmin"
    assert fit.visibility == pytest.approx(1 / 3)


def test_noisy_fit_within_error():
    rng = np.random.default_rng(0)
    pulls = []
    for _ in range(200):
        counts = rng.poisson(1e4 * (1 + 0.97 * np.cos(PHASES)))
        fit = fit_fringe(PHASES, counts)
        pulls.append((fit.visibility - 0.97) / fit.v_err)
    pulls = np.array(pulls)
    assert abs(pulls.mean()) < 0.3
    assert 0.7 < pulls.std() < 1.3


def _three_peak(mass, delta=5.5, sub=10, side=True):
    d = len(mass)
    d1 = np.linspace(0, d * delta, d * sub + 1)
    d2 = np.arange(-9.0, 9.0 + 0.125, 0.25)
    c2 = 0.5 * (d2[:-1] + d2[1:])
    counts = np.zeros((d * sub, c2.size), dtype=np.int64)
    centre = int(np.argmin(np.abs(c2)))
    for j, m in enumerate(mass):
        rows = slice(j * sub, (j + 1) * sub)
        counts[rows, centre] += m // sub
        counts[j * sub, centre] += m % sub
        if side:
            for shift in (-delta, delta):
                counts[rows, int(np.argmin(np.abs(c2 - shift)))] += 7
    return CoincidenceHistogram2D(d1, d2, counts)


def test_postselect_recovers_mass():
    h = _three_peak([100, 200, 100])
    np.testing.assert_array_equal(postselect_central_peak(h, 5.5, 3.0, modes=3), [100, 200, 100])


def test_postselect_side_peaks_only():
    h = _three_peak([0, 0, 0])
    assert not postselect_central_peak(h, 5.5, 3.0, modes=3).any()


@pytest.mark.parametrize("window", [5.5, 6.0, 0.0])
def test_postselect_window_errors(window):
    with pytest.raises(ConfigurationError):
        postselect_central_peak(_three_peak([1, 2, 3]), 5.5, window)


@given(st.lists(st.integers(0, 5000), min_size=2, max_size=8), st.integers(0, 2**31))
@settings(max_examples=50, deadline=None)
def test_postselect_conserves(mass, seed):
    rng = np.random.default_rng(seed)
    h = _three_peak(mass)
    noisy = CoincidenceHistogram2D(h.delay1_edges, h.delay2_edges, h.counts + rng.poisson(0.3, h.counts.shape))
    c2 = 0.5 * (h.delay2_edges[:-1] + h.delay2_edges[1:])
    centre = _central_center(noisy, 5.5)
    out = postselect_central_peak(noisy, 5.5, 3.0, modes=len(mass), origin_ns=0.0)
    assert out.sum() == noisy.counts[:, np.abs(c2 - centre) <= 1.5 + 1e-12].sum()


def test_bundled_histogram_matches_diagonal(bundled):
    out = postselect_central_peak(
        bundled.raw_histogram, bundled.delta_ns, bundled.postselect_window_ns, modes=bundled.modes, origin_ns=0.0
    )
    np.testing.assert_array_equal(out, bundled.diagonal_counts)


def test_minimal_document():
    rec = loads_record(json.dumps(minimal_doc()))
    assert rec.modes == 2


def test_missing_field_named():
    doc = minimal_doc()
    del doc["diagonal_counts"]
    with pytest.raises(ValidationError) as exc:
        loads_record(json.dumps(doc))
    assert any("diagonal_counts" in p for p in exc.value.problems)


def test_parse_error_has_line():
    with pytest.raises(ParseError) as exc:
        loads_record('{\n "modes": 2,\n "delta_ns": }')
    assert exc.value.line == 3


def test_degrees_rejected():
    doc = minimal_doc()
    doc["fringes"][0]["phases"] = np.linspace(0, 360, 15).tolist()
    with pytest.raises(ValidationError) as exc:
        loads_record(json.dumps(doc))
    assert "degrees" in str(exc.value)
    doc = minimal_doc()
    doc["phase_units"] = "degrees"
    with pytest.raises(ValidationError):
        loads_record(json.dumps(doc))


def test_invariant_violations_enumerated():
    doc = minimal_doc()
    doc["diagonal_counts"] = [1, 2, 3]
    doc["fringes"][0]["phases"] = [0.0, 0.1, 0.2, 0.3, 0.4]
    doc["fringes"][0]["counts"] = [1] * 5
    with pytest.raises(ValidationError) as exc:
        loads_record(json.dumps(doc))
    assert len(exc.value.problems) == 2


def test_bundled_roundtrip(bundled, bundled_path, tmp_path):
    out = tmp_path / "rt.json"
    save_record(bundled, out)
    again = load_record(out)
    assert records_equal(bundled, again)
    assert dumps_record(again) == dumps_record(load_record(bundled_path))


def test_bundled_edge_effect(bundled):
    vis = [f.visibility for f in fit_visibilities(bundled)]
    centre = central_visibility(vis)
    assert bundled.modes == 10
    assert abs(centre - 0.97) < 0.01
    assert vis[0] < centre and vis[-1] < centre


def test_visibility_table(bundled):
    lines = visibility_table(bundled).splitlines()
    assert lines[0] == "pair,V,V_err,method"
    assert len(lines) == bundled.modes


def test_noise_floor_estimate(bundled):
    assert estimate_noise_floor(bundled) == pytest.approx(0.01, rel=0.2)
    rec = loads_record(json.dumps(minimal_doc()))
    assert estimate_noise_floor(rec) == 0.01


def test_to_band_matrix():
    m = to_band_matrix([1, 1, 2], [0.5, float("nan")])
    np.testing.assert_allclose(m.diag, [0.25, 0.25, 0.5])
    np.testing.assert_allclose(m.band1, [0.125, 0.0])
    assert m.normalized
