"""Brute-force checks that certified bounds are sound.

Everything here is deliberately independent of the fast paths it checks:
explicit d^2 x d^2 density matrices, eigen-decompositions, random PSD
completions and exhaustive subset enumeration.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .band import CoherenceBandMatrix
from .engine import POSITIVITY, certify_matrix
from .errors import InputError, PreconditionError, SamplingFailure
from .metrics import PairLedger, best_B, eof_bound, pure_state_oracles
from .propagation import fill

SOUNDNESS_SLACK = 1e-8
MAX_PROJECTIONS = 10_000
MAX_EXHAUSTIVE_PAIRS = 20


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Density matrix on C^d (x) C^d, basis |j,k> at index j*d + k."""

    dim_each: int
    matrix: np.ndarray

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=complex)
        d = self.dim_each
        if rho.shape != (d * d, d * d):
            raise PreconditionError(f"matrix must be {d * d}x{d * d}, got {rho.shape}")
        if np.abs(rho - rho.conj().T).max() > 1e-12:
            raise PreconditionError("matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise PreconditionError(f"trace {np.trace(rho).real} != 1")
        if np.linalg.eigvalsh(rho)[0] < -1e-10:
            raise PreconditionError("matrix is not positive semi-definite")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    def element(self, j, k, jp, kp) -> complex:
        """<j,k| rho |j',k'> with 0-based mode indices."""
        d = self.dim_each
        return complex(self.matrix[j * d + k, jp * d + kp])

    @classmethod
    def from_vector(cls, psi) -> "TwoPhotonState":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        d = int(round(math.sqrt(psi.size)))
        return cls(d, np.outer(psi, psi.conj()))


def maximally_entangled(d: int) -> TwoPhotonState:
    psi = np.zeros(d * d, dtype=complex)
    psi[[j * d + j for j in range(d)]] = 1.0
    return TwoPhotonState.from_vector(psi)


def product_state(d: int, j: int = 0, k: int = 0) -> TwoPhotonState:
    psi = np.zeros(d * d, dtype=complex)
    psi[j * d + k] = 1.0
    return TwoPhotonState.from_vector(psi)


def with_white_noise(state: TwoPhotonState, w: float) -> TwoPhotonState:
    n = state.dim_each**2
    return TwoPhotonState(state.dim_each, (1 - w) * state.matrix + w * np.eye(n) / n)


def random_pure_state(d: int, rng: np.random.Generator, correlated: bool | None = None) -> TwoPhotonState:
    """Haar-like random pure state, or (``correlated``) one concentrated on |j,j>.

    Correlated states have real positive |j,j> amplitudes plus a small
    complex perturbation, which is the regime where the bounds are tight.
    """
    if correlated is None:
        correlated = bool(rng.integers(2))
    z = rng.normal(size=d * d) + 1j * rng.normal(size=d * d)
    if correlated:
        psi = 0.15 * rng.uniform() * z
        amp = rng.uniform(0.2, 1.0, d)
        psi[[j * d + j for j in range(d)]] += amp
    else:
        psi = z
    return TwoPhotonState.from_vector(psi)


def random_mixed_state(d: int, rng: np.random.Generator, rank: int | None = None) -> TwoPhotonState:
    rank = rank or int(rng.integers(1, d * d + 1))
    weights = rng.dirichlet(np.ones(rank))
    rho = sum(w * random_pure_state(d, rng).matrix for w in weights)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return TwoPhotonState(d, rho)


def state_to_record(state: TwoPhotonState):
    """Idealised noiseless measurement: (diag, band1, cross populations).

    ``cross[j, k]`` is <j,k|rho|j,k> for j != k and 0 on the diagonal.
    """
    d = state.dim_each
    rho = state.matrix
    jj = np.array([j * d + j for j in range(d)])
    diag = rho[jj, jj].real.copy()
    band1 = np.array([rho[jj[j], jj[j + 1]].real for j in range(d - 1)])
    pops = np.diag(rho).real.reshape(d, d).copy()
    np.fill_diagonal(pops, 0.0)
    return diag, band1, pops


def state_to_matrix(state: TwoPhotonState) -> CoherenceBandMatrix:
    """Band matrix in absolute (trace) units; windows are not rescaled."""
    diag, band1, cross = state_to_record(state)
    return CoherenceBandMatrix(np.maximum(diag, 0.0), band1, normalized=False, cross=cross)


def coherence_matrix(state: TwoPhotonState) -> np.ndarray:
    """Full real matrix r_jk = Re <j,j|rho|k,k>."""
    d = state.dim_each
    jj = np.array([j * d + j for j in range(d)])
    return state.matrix[np.ix_(jj, jj)].real


def ledger_from_state(state: TwoPhotonState) -> PairLedger:
    """Exact pair values |<jj|rho|kk>| - sqrt(<jk|rho|jk><kj|rho|kj>)."""
    d = state.dim_each
    pairs = []
    for j in range(d):
        for k in range(j + 1, d):
            coh = abs(state.element(j, j, k, k))
            pen = math.sqrt(max(state.element(j, k, j, k).real, 0.0) * max(state.element(k, j, k, j).real, 0.0))
            pairs.append((j + 1, k + 1, coh - pen))
    return PairLedger(pairs)


def certify_state(state: TwoPhotonState):
    """Positivity-mode certification of the idealised record of ``state``."""
    best, _ = certify_matrix(state_to_matrix(state), mode=POSITIVITY)
    return best


def exhaustive_subset_B(ledger) -> float:
    """max over all non-empty subsets C of 2/sqrt(|C|) * sum_C v, by enumeration."""
    values = np.asarray(
        ledger.values if isinstance(ledger, PairLedger) else [p[2] if isinstance(p, tuple) else p for p in ledger],
        dtype=float,
    )
    m = values.size
    if m == 0:
        raise InputError("empty ledger")
    if m > MAX_EXHAUSTIVE_PAIRS:
        raise InputError(f"exhaustive search limited to {MAX_EXHAUSTIVE_PAIRS} pairs, got {m}")
    best = -math.inf
    bits = np.arange(m, dtype=np.int64)
    block = 1 << 15
    for start in range(1, 1 << m, block):
        masks = np.arange(start, min(start + block, 1 << m), dtype=np.int64)
        sel = ((masks[:, None] >> bits) & 1).astype(float)
        scores = 2.0 * (sel @ values) / np.sqrt(sel.sum(axis=1))
        best = max(best, float(scores.max()))
    return max(best, 0.0)


def markov_completion(diag, band1) -> np.ndarray:
    """Completion r_jl = prod of neighbour ratios, the covariance of a Markov chain.

    PSD whenever every 2x2 neighbour minor is non-negative.
    """
    diag = np.asarray(diag, dtype=float)
    band1 = np.asarray(band1, dtype=float)
    d = diag.size
    gain = np.divide(band1, diag[:-1], out=np.zeros(d - 1), where=diag[:-1] > 0)
    x = np.diag(diag).astype(float)
    for j in range(d):
        for l in range(j + 1, d):
            x[j, l] = x[l, j] = x[j, l - 1] * gain[l - 1]
    return x


def random_psd_with_band(diag, band1, samples: int, seed=None, max_iter: int = MAX_PROJECTIONS):
    """Random PSD completions of a band pattern.

    Each sample starts from random unknown entries and alternates eigenvalue
    clipping with re-imposing the diagonal and first off-diagonal.  If that
    has not reached exact feasibility within ``max_iter`` rounds (typical
    when the pattern only admits singular completions), the iterate is
    pulled toward the Markov completion by the smallest amount that makes it
    PSD.  Returns ``(matrices, failures)``; failures are counted, never
    silently dropped.
    """
    diag = np.asarray(diag, dtype=float)
    band1 = np.asarray(band1, dtype=float)
    d = diag.size
    scale = max(float(diag.max()), 1e-300)
    tol = 1e-13 * scale
    rng = np.random.default_rng(seed)
    idx = np.arange(d - 1)
    lim = np.sqrt(np.outer(diag, diag))
    anchor = markov_completion(diag, band1)
    if np.linalg.eigvalsh(anchor)[0] < -1e-9 * scale:
        raise SamplingFailure("band pattern admits no PSD completion")

    def impose(x):
        x = 0.5 * (x + x.T)
        np.fill_diagonal(x, diag)
        x[idx, idx + 1] = band1
        x[idx + 1, idx] = band1
        return x

    def lam_min(x):
        return np.linalg.eigvalsh(x)[0]

    out, failures = [], 0
    for _ in range(samples):
        x = impose(rng.uniform(-1.0, 1.0, (d, d)) * lim)
        for _ in range(max_iter):
            w, v = np.linalg.eigh(x)
            if w[0] >= -tol:
                break
            x = impose((v * np.maximum(w, 0.0)) @ v.T)
        if lam_min(x) < -tol:
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if lam_min((1 - mid) * x + mid * anchor) >= -tol:
                    hi = mid
                else:
                    lo = mid
            x = (1 - hi) * x + hi * anchor
        if lam_min(x) >= -1e-9 * scale:
            out.append(impose(x))
        else:
            failures += 1
    return out, failures


def fill_violation(matrix) -> float:
    """Largest amount by which a fill bound exceeds the true entry (<= 0 is sound).

    Only positive bounds count; non-positive ones are recorded as unbounded.
    """
    m = np.asarray(matrix, dtype=float)
    d = m.shape[0]
    idx = np.arange(d - 1)
    filled, _ = fill(CoherenceBandMatrix(np.diag(m).copy(), m[idx, idx + 1], normalized=False))
    bounded = np.nan_to_num(filled.lower, nan=-1.0) > 0
    if not bounded.any():
        return -math.inf
    return float((filled.lower - m)[bounded].max())


def fill_violation_state(state: TwoPhotonState) -> float:
    """As :func:`fill_violation`, for the idealised record of a state."""
    filled, _ = fill(state_to_matrix(state))
    truth = coherence_matrix(state)
    bounded = np.nan_to_num(filled.lower, nan=-1.0) > 0
    if not bounded.any():
        return -math.inf
    return float((filled.lower - truth)[bounded].max())


def random_psd(d: int, rng: np.random.Generator) -> np.ndarray:
    """Random real PSD matrix with unit-trace diagonal, often near the boundary.

    Half the draws are Gram matrices of a random walk of unit vectors, which
    gives strong neighbour correlations so that the bounds are non-trivial.
    """
    rank = int(rng.integers(1, d + 1))
    if rng.uniform() < 0.5:
        g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    else:
        step = rng.uniform(0.02, 0.6)
        g = np.empty((d, rank), dtype=complex)
        g[0] = rng.normal(size=rank) + 1j * rng.normal(size=rank)
        for j in range(1, d):
            g[j] = g[j - 1] + step * (rng.normal(size=rank) + 1j * rng.normal(size=rank))
        g *= rng.uniform(0.3, 1.0, d)[:, None]
    m = (g @ g.conj().T).real
    return m / np.trace(m)


def validate(
    psd_samples: int = 10_000,
    pure_samples: int = 1_000,
    ledger_samples: int = 1_000,
    completion_samples: int = 200,
    mixed_samples: int = 1_000,
    max_dim: int = 8,
    max_state_dim: int = 6,
    seed: int = 0,
) -> dict:
    """Run the full oracle suite.  Returns a report with counts and worst margins."""
    rng = np.random.default_rng(seed)
    report = {}

    t0 = time.perf_counter()
    worst = -math.inf
    bad = 0
    for _ in range(psd_samples):
        m = random_psd(int(rng.integers(3, max_dim + 1)), rng)
        v = fill_violation(m)
        worst = max(worst, v)
        bad += v > SOUNDNESS_SLACK
    report["fill_vs_random_psd"] = _entry(psd_samples, bad, worst, t0)

    t0 = time.perf_counter()
    worst, bad, fails, checked = -math.inf, 0, 0, 0
    for _ in range(max(completion_samples // 10, 1)):
        d = int(rng.integers(3, max_dim + 1))
        base = random_psd(d, rng)
        idx = np.arange(d - 1)
        mats, f = random_psd_with_band(np.diag(base), base[idx, idx + 1], 10, rng, max_iter=200)
        fails += f
        for m in mats:
            v = fill_violation(m)
            worst = max(worst, v)
            bad += v > SOUNDNESS_SLACK
            checked += 1
    report["fill_vs_completions"] = _entry(checked, bad, worst, t0, sampling_failures=fails)

    t0 = time.perf_counter()
    worst_c, worst_e, worst_cert, bad = -math.inf, -math.inf, -math.inf, 0
    for _ in range(pure_samples):
        st = random_pure_state(int(rng.integers(2, max_state_dim + 1)), rng)
        conc, ent = pure_state_oracles(st)
        b, _ = best_B(ledger_from_state(st))
        e = eof_bound(min(b, math.sqrt(2) - 1e-15)).eof_bits
        cert = certify_state(st).bound.eof_bits
        dc, de, dcert = b - conc, e - ent, cert - ent
        worst_c, worst_e, worst_cert = max(worst_c, dc), max(worst_e, de), max(worst_cert, dcert)
        bad += max(dc, de, dcert) > SOUNDNESS_SLACK
    report["pure_state_chain"] = _entry(
        pure_samples, bad, max(worst_c, worst_e, worst_cert), t0,
        worst_B_minus_concurrence=worst_c, worst_eof_minus_entropy=worst_e,
        worst_certified_minus_entropy=worst_cert,
    )

    t0 = time.perf_counter()
    worst, bad = -math.inf, 0
    for _ in range(mixed_samples):
        st = random_mixed_state(int(rng.integers(2, max_state_dim + 1)), rng)
        if rng.uniform() < 0.5:
            st = with_white_noise(random_pure_state(st.dim_each, rng, correlated=True), rng.uniform(0, 0.3))
        v = fill_violation_state(st)
        worst = max(worst, v)
        bad += v > SOUNDNESS_SLACK
    report["fill_vs_states"] = _entry(mixed_samples, bad, worst, t0)

    t0 = time.perf_counter()
    worst, bad = 0.0, 0
    for _ in range(ledger_samples):
        m = int(rng.integers(1, 13))
        vals = rng.normal(size=m) * rng.uniform(0.01, 1.0)
        ledger = PairLedger([(i + 1, i + 2, v) for i, v in enumerate(vals)])
        diff = abs(best_B(ledger)[0] - exhaustive_subset_B(ledger))
        worst = max(worst, diff)
        bad += diff > 1e-12
    report["best_B_vs_exhaustive"] = _entry(ledger_samples, bad, worst, t0)

    report["passed"] = all(v["failures"] == 0 for v in report.values() if isinstance(v, dict))
    return report


def _entry(n, bad, worst, t0, **extra):
    return {"checked": int(n), "failures": int(bad), "worst_margin": float(worst),
            "seconds": round(time.perf_counter() - t0, 3), **extra}
