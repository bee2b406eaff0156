"""Concurrence-type witness B, entanglement-of-formation bound, and pure-state oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .band import CoherenceBandMatrix, NoiseDiagonal
from .errors import DomainError, InputError, PreconditionError
from .propagation import magnitude_floor

SQRT2 = math.sqrt(2.0)


@dataclass
class PairLedger:
    """Per-pair contributions v_jk = |r_jk|_floor - sqrt(n_jk n_kj).

    ``pairs`` holds (j, k, value) with 1-based j < k, sorted by value,
    largest first.  ``chosen`` is filled in by :func:`best_B`.
    """

    pairs: list
    chosen: list = field(default_factory=list)

    def __post_init__(self):
        self.pairs = sorted(
            ((int(j), int(k), float(v)) for j, k, v in self.pairs),
            key=lambda p: (-p[2], p[0], p[1]),
        )

    @property
    def values(self) -> np.ndarray:
        return np.array([p[2] for p in self.pairs])

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class EntanglementBound:
    b_value: float
    eof_bits: float
    dim_lower: int


def build_ledger(m: CoherenceBandMatrix, noise: NoiseDiagonal | None = None) -> PairLedger:
    """Ledger for every pair j < k of ``m``.

    Cross populations come from ``m.cross`` when present, otherwise from the
    common ``noise`` floor applied to the mean diagonal of ``m``.
    """
    d = m.dim
    floor = magnitude_floor(m)
    if m.cross is not None:
        cross = np.nan_to_num(m.cross, nan=0.0)
        penalty = np.sqrt(np.maximum(cross * cross.T, 0.0))
    else:
        n = (noise or NoiseDiagonal(0.0)).population(m.diag)
        penalty = np.full((d, d), n)
    ju, ku = np.triu_indices(d, k=1)
    vals = floor[ju, ku] - penalty[ju, ku]
    return PairLedger([(j + 1, k + 1, v) for j, k, v in zip(ju, ku, vals)])


def prefix_scan(values) -> tuple[float, int]:
    """Best (2/sqrt(m)) * sum of the m largest values, and its m."""
    v = np.sort(np.asarray(values, dtype=float))[::-1]
    if v.size == 0:
        raise InputError("empty ledger")
    sizes = np.arange(1, v.size + 1)
    scores = 2.0 * np.cumsum(v) / np.sqrt(sizes)
    i = int(np.argmax(scores))
    return float(scores[i]), i + 1


def best_B(ledger: PairLedger) -> tuple[float, list]:
    """Maximise B over non-empty pair subsets.

    For a fixed subset size the best choice is the largest values, so
    scanning prefix sizes of the sorted ledger is exact.  Negative optima are
    clamped to zero.
    """
    if len(ledger) == 0:
        raise InputError("empty ledger")
    b, size = prefix_scan(ledger.values)
    chosen = [(j, k) for j, k, _ in ledger.pairs[:size]] if b > 0 else []
    ledger.chosen = chosen
    return max(b, 0.0), chosen


def eof_bound(b: float) -> EntanglementBound:
    """Entanglement of formation (ebits) implied by B, plus a dimension witness."""
    if not math.isfinite(b) or b < 0:
        raise DomainError(f"B must be a non-negative real, got {b}")
    if b >= SQRT2:
        raise DomainError(f"B = {b} >= sqrt(2) is not a valid concurrence bound")
    eof = -math.log2(1.0 - 0.5 * b * b)
    return EntanglementBound(float(b), float(eof), dimension_witness(eof))


def dimension_witness(eof_bits: float) -> int:
    """Smallest Schmidt number compatible with ``eof_bits``.

    A state of Schmidt number D - 1 carries at most log2(D - 1) ebits, so
    exceeding that certifies D.  A relative slack of 1e-9 keeps exact
    log2(d) values from rounding up.
    """
    x = 2.0**eof_bits
    return max(1, int(math.ceil(x * (1.0 - 1e-9))))


def _reduced_first(psi: np.ndarray, d: int) -> np.ndarray:
    a = psi.reshape(d, -1)
    return a @ a.conj().T


def pure_state_oracles(state, tol: float = 1e-8) -> tuple[float, float]:
    """Concurrence sqrt(2(1 - tr rho_A^2)) and entanglement entropy in bits.

    ``state`` is a :class:`~entcert.oracles.TwoPhotonState` or a d^2 x d^2
    density matrix.  Mixed input is rejected.
    """
    rho = np.asarray(getattr(state, "matrix", state), dtype=complex)
    d = int(round(math.sqrt(rho.shape[0])))
    if d * d != rho.shape[0]:
        raise PreconditionError("density matrix size is not a perfect square")
    w, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if abs(w[-1] - 1.0) > tol:
        raise PreconditionError(f"state is not pure (largest eigenvalue {w[-1]:.6g})")
    rho_a = _reduced_first(vecs[:, -1], d)
    purity = float(np.real(np.trace(rho_a @ rho_a)))
    conc = math.sqrt(max(2.0 * (1.0 - purity), 0.0))
    lam = np.linalg.eigvalsh(rho_a)
    lam = lam[lam > 1e-15]
    entropy = float(-(lam * np.log2(lam)).sum())
    return conc, max(entropy, 0.0)
