#!/usr/bin/env python3
"""SNR sweep of all detector pipelines at the baseline scenario
(K=100, K_a=8, N_r=50, J=12). Writes CSV plus Pe/BER charts."""

import argparse
import os
import sys

from mm_access.harness import DETECTOR_NAMES, SweepSpec, emit_csv, emit_plot, run_sweep
from mm_access.model import SystemConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=os.cpu_count())
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()

    base = SystemConfig(snr_db=2.0, master_seed=args.seed)
    spec = SweepSpec(
        variable="snr_db",
        values=tuple(float(v) for v in range(-10, 13, 2)),
        trials=args.trials,
        detectors=DETECTOR_NAMES,
        base=base,
    )
    rows = run_sweep(spec, workers=args.workers)
    os.makedirs(args.outdir, exist_ok=True)
    emit_csv(rows, os.path.join(args.outdir, "snr_sweep.csv"), spec)
    emit_plot(rows, os.path.join(args.outdir, "snr_sweep_ber.svg"), metric="ber")
    emit_plot(rows, os.path.join(args.outdir, "snr_sweep_pe.svg"), metric="pe")
    for r in rows:
        print(f"snr={r.value:6.1f}  {r.detector:16s} pe={r.pe_mean:.5f} ber={r.ber_mean:.5f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
