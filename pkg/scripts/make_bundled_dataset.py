"""Regenerate the bundled synthetic run (10 modes, depressed edge visibilities).

The file is synthetic; it imitates the shape of a single experimental run,
not its raw data.
"""
from pathlib import Path

from entcert.ingest import save_record
from entcert.simulator import SimulationConfig, simulate

OUT = Path(__file__).resolve().parents[1] / "src" / "entcert" / "data" / "synthetic_run.json"

CONFIG = SimulationConfig(
    modes=10,
    storage_ns=55.0,
    pulse_ns=None,
    visibility1=0.975,
    noise_floor=0.01,
    counts_per_point=300,
    edge_rise_fraction=0.5,
    raw_histogram=True,
    seed=0,
)

if __name__ == "__main__":
    rec = simulate(CONFIG)
    save_record(rec, OUT)
    print(f"wrote {OUT}")
