"""Entanglement-of-formation certification from sparse time-bin data."""
from .band import CoherenceBandMatrix, NoiseDiagonal, psd_check, submatrix
from .engine import CertificationResult, certify, certify_matrix, sweep
from .ingest import MeasurementRecord, fit_fringe, load_record, postselect_central_peak, save_record
from .metrics import EntanglementBound, PairLedger, best_B, eof_bound, pure_state_oracles
from .propagation import FillReport, det3_bound, fill
from .simulator import SimulationConfig, simulate, visibility_decay

__all__ = [
    "CertificationResult",
    "CoherenceBandMatrix",
    "EntanglementBound",
    "FillReport",
    "MeasurementRecord",
    "NoiseDiagonal",
    "PairLedger",
    "SimulationConfig",
    "best_B",
    "certify",
    "certify_matrix",
    "det3_bound",
    "eof_bound",
    "fill",
    "fit_fringe",
    "load_record",
    "postselect_central_peak",
    "psd_check",
    "pure_state_oracles",
    "save_record",
    "simulate",
    "submatrix",
    "sweep",
    "visibility_decay",
]
