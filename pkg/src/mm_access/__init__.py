"""Media-modulation massive-access uplink: model, greedy detectors, metrics
and a Monte Carlo sweep harness."""

from .detectors import (
    Reconstruction,
    gsp,
    oracle_ls,
    sic_ssp,
    stromp,
    stromp_known_ka,
    zf_benchmark,
)
from .harness import ResultRow, SweepSpec, emit_csv, emit_plot, mix64, run_sweep
from .metrics import MetricsRecord, aud_metrics, ber_metrics, complexity_eval
from .model import (
    GroundTruth,
    Observation,
    SystemConfig,
    demodulate,
    generate_activity,
    generate_frame,
    generate_frame_for_activity,
    modulate,
)
from .numerics import DegenerateSupportError, frobenius_norm, hermitian_mul, lstsq

__version__ = "0.1.0"

__all__ = [
    "DegenerateSupportError",
    "GroundTruth",
    "MetricsRecord",
    "Observation",
    "Reconstruction",
    "ResultRow",
    "SweepSpec",
    "SystemConfig",
    "aud_metrics",
    "ber_metrics",
    "complexity_eval",
    "demodulate",
    "emit_csv",
    "emit_plot",
    "frobenius_norm",
    "generate_activity",
    "generate_frame",
    "generate_frame_for_activity",
    "gsp",
    "hermitian_mul",
    "lstsq",
    "mix64",
    "modulate",
    "oracle_ls",
    "run_sweep",
    "sic_ssp",
    "stromp",
    "stromp_known_ka",
    "zf_benchmark",
]
