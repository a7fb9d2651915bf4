"""Monte Carlo sweep engine with CSV and SVG line-chart output.

A sweep varies one scalar (snr_db, j or n_r) over an increasing grid and
runs ``trials`` seeded frames per grid point. Every requested detector
pipeline consumes the *same* frame per trial (paired comparison); trial
seeds are a stable 64-bit mix of (master seed, point index, trial index),
so a sweep is reproducible bit-for-bit regardless of worker count or
completion order (wall-clock columns excepted).
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from . import detectors, model
from .metrics import MetricsRecord, aud_metrics, ber_metrics, complexity_eval

logger = logging.getLogger(__name__)

#: Detector pipelines known to the harness.
DETECTOR_NAMES = ("stromp+sic_ssp", "stromp+gsp", "aud_lb", "oracle_ls", "zf_benchmark")

SWEEP_VARIABLES = ("snr_db", "j", "n_r")

CSV_HEADER = "sweep_var,value,detector,pe_mean,pe_ci,ber_mean,ber_ci,trials,wall_ms_mean,mult_estimate"

#: Log floor for zero values on the SVG log axis.
PLOT_FLOOR = 1e-6

_MASK64 = (1 << 64) - 1


def mix64(*parts: int) -> int:
    """Stable 64-bit mix of integer parts (splitmix64 finalizer chain)."""
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = (h + (int(p) & _MASK64)) & _MASK64
        h ^= h >> 30
        h = (h * 0xBF58476D1CE4E5B9) & _MASK64
        h ^= h >> 27
        h = (h * 0x94D049BB133111EB) & _MASK64
        h ^= h >> 31
    return h


@dataclass(frozen=True)
class SweepSpec:
    variable: str                    # one of SWEEP_VARIABLES
    values: tuple[float, ...]        # strictly increasing grid
    trials: int
    detectors: tuple[str, ...]
    base: model.SystemConfig

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        if not self.values:
            raise ValueError("values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"values must be strictly increasing, got {self.values}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        unknown = [d for d in self.detectors if d not in DETECTOR_NAMES]
        if unknown or not self.detectors:
            raise ValueError(f"detectors must be a non-empty subset of {DETECTOR_NAMES}, got {self.detectors}")

    def config_at(self, value: float) -> model.SystemConfig:
        if self.variable in ("j", "n_r"):
            value = int(value)
        return dataclasses.replace(self.base, **{self.variable: value})


@dataclass
class ResultRow:
    sweep_var: str
    value: float
    detector: str
    pe_mean: float
    pe_ci: float
    ber_mean: float
    ber_ci: float
    trials: int
    wall_ms_mean: float
    mult_estimate: float


def _mult_estimate(detector: str, cfg: model.SystemConfig) -> float:
    """Closed-form multiplication count attributed to one pipeline."""
    parts = {
        "stromp+sic_ssp": ("stromp", "sic-ssp"),
        "stromp+gsp": ("stromp", "gsp"),
        "aud_lb": ("aud-lb",),
        "oracle_ls": ("ls",),
        "zf_benchmark": ("benchmark1",),
    }[detector]
    return sum(complexity_eval(cfg, p) for p in parts)


def run_trial(cfg: model.SystemConfig, detector_names: tuple[str, ...], seed: int) -> dict[str, MetricsRecord]:
    """One seeded frame, all requested detectors on that same frame."""
    rng = np.random.default_rng(seed)
    truth, h, obs = model.generate_frame(cfg, rng)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("frame seed=%d checksum=%08x", seed, zlib.crc32(obs.y.tobytes()))

    records: dict[str, MetricsRecord] = {}
    total_bits = cfg.k_a * cfg.j * cfg.eta

    gamma = None
    stromp_time = 0.0
    if "stromp+sic_ssp" in detector_names or "stromp+gsp" in detector_names:
        t0 = time.perf_counter()
        gamma = detectors.stromp(obs.y, h, cfg)
        stromp_time = time.perf_counter() - t0
        e_u, e_f, pe = aud_metrics(truth.activity, gamma)

    for name, decoder in (("stromp+sic_ssp", detectors.sic_ssp), ("stromp+gsp", detectors.gsp)):
        if name not in detector_names:
            continue
        t0 = time.perf_counter()
        rec = decoder(obs.y, h, gamma, cfg)
        elapsed = stromp_time + (time.perf_counter() - t0)
        b_m, b_c, ber = ber_metrics(truth, gamma, rec.bits, cfg)
        records[name] = MetricsRecord(name, pe, ber, e_u, e_f, b_m, b_c, total_bits,
                                      elapsed, _mult_estimate(name, cfg))

    if "aud_lb" in detector_names:
        t0 = time.perf_counter()
        gamma_lb = detectors.stromp_known_ka(obs.y, h, cfg)
        elapsed = time.perf_counter() - t0
        e_u, e_f, pe = aud_metrics(truth.activity, gamma_lb)
        records["aud_lb"] = MetricsRecord("aud_lb", pe, math.nan, e_u, e_f, 0, 0, total_bits,
                                          elapsed, _mult_estimate("aud_lb", cfg))

    if "oracle_ls" in detector_names:
        t0 = time.perf_counter()
        rec = detectors.oracle_ls(obs.y, h, truth, cfg)
        elapsed = time.perf_counter() - t0
        b_m, b_c, ber = ber_metrics(truth, truth.active, rec.bits, cfg)
        records["oracle_ls"] = MetricsRecord("oracle_ls", 0.0, ber, 0, 0, b_m, b_c, total_bits,
                                             elapsed, _mult_estimate("oracle_ls", cfg))

    if "zf_benchmark" in detector_names:
        rng_zf = np.random.default_rng(mix64(seed, 0x5A5A5A5A))
        t0 = time.perf_counter()
        errors, bits = detectors.zf_benchmark(cfg, rng_zf)
        elapsed = time.perf_counter() - t0
        ber = errors / bits if bits else 0.0
        records["zf_benchmark"] = MetricsRecord("zf_benchmark", math.nan, ber, 0, 0, 0, errors, bits,
                                                elapsed, _mult_estimate("zf_benchmark", cfg))

    return records


def _run_batch(cfg, detector_names, seeds):
    # trials are the parallelism unit; BLAS threading on these small systems
    # only adds contention
    with threadpool_limits(limits=1):
        return [run_trial(cfg, detector_names, s) for s in seeds]


def _worker_count(requested: int | None) -> int:
    cap = os.environ.get("MM_ACCESS_THREADS")
    cap = int(cap) if cap else None
    n = requested if requested is not None else (cap or 1)
    if cap is not None:
        n = min(n, cap)
    return max(1, n)


def _mean_ci(values: np.ndarray) -> tuple[float, float]:
    """Mean and 95% normal-approximation half-width; (nan, nan) for all-nan."""
    if np.isnan(values).all():
        return math.nan, math.nan
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(1.96 * values.std(ddof=1) / math.sqrt(values.size))


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[ResultRow]:
    """Run the sweep and aggregate per (point, detector) in deterministic order.

    ``workers`` > 1 distributes trials over processes; MM_ACCESS_THREADS caps
    the count. Aggregation always walks trials in index order, so results do
    not depend on completion order.
    """
    workers = _worker_count(workers)
    all_records: list[list[dict[str, MetricsRecord]]] = []
    for p_idx, value in enumerate(spec.values):
        cfg = spec.config_at(value)
        seeds = [mix64(spec.base.master_seed, p_idx, t) for t in range(spec.trials)]
        if workers > 1 and spec.trials > 1:
            chunk = max(1, math.ceil(spec.trials / (workers * 4)))
            batches = [seeds[i : i + chunk] for i in range(0, len(seeds), chunk)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                out = list(pool.map(_run_batch, [cfg] * len(batches),
                                    [spec.detectors] * len(batches), batches))
            trial_records = [r for batch in out for r in batch]
        else:
            with threadpool_limits(limits=1):
                trial_records = [run_trial(cfg, spec.detectors, s) for s in seeds]
        all_records.append(trial_records)

    rows: list[ResultRow] = []
    for p_idx, value in enumerate(spec.values):
        cfg = spec.config_at(value)
        for det in spec.detectors:
            recs = [all_records[p_idx][t][det] for t in range(spec.trials)]
            pe_mean, pe_ci = _mean_ci(np.array([r.pe for r in recs]))
            ber_mean, ber_ci = _mean_ci(np.array([r.ber for r in recs]))
            wall_ms = float(np.mean([r.wall_time for r in recs]) * 1e3)
            rows.append(ResultRow(spec.variable, float(value), det, pe_mean, pe_ci,
                                  ber_mean, ber_ci, spec.trials, wall_ms,
                                  _mult_estimate(det, cfg)))
    return rows


# --- CSV ----------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.6g}"


def describe_spec(spec: SweepSpec) -> str:
    """One-line config record embedded as the CSV comment."""
    b = spec.base
    return (
        f"# mm-access sweep variable={spec.variable} values={','.join(_fmt(v) for v in spec.values)}"
        f" trials={spec.trials} detectors={'|'.join(spec.detectors)}"
        f" k={b.k} k_a={b.k_a} m_r={b.m_r} m={b.m} n_r={b.n_r} j={b.j}"
        f" snr_db={_fmt(b.snr_db)} p_th={_fmt(b.p_th)} seed={b.master_seed}"
        f" snr_convention=snr_db=10log10(1/noise_var),unit-energy-qam,unit-variance-channel"
        f" bit_mapping=map:natural-binary-msb-first,qam:gray-per-axis(I-first,zero-bits->positive)"
    )


def emit_csv(rows: list[ResultRow], path: str, spec: SweepSpec) -> None:
    """Write rows as UTF-8 CSV: one '#' metadata line, header, data lines."""
    if not rows:
        raise ValueError("rows must be non-empty")
    lines = [describe_spec(spec), CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.sweep_var},{_fmt(r.value)},{r.detector},{_fmt(r.pe_mean)},{_fmt(r.pe_ci)},"
            f"{_fmt(r.ber_mean)},{_fmt(r.ber_ci)},{r.trials},{_fmt(r.wall_ms_mean)},{_fmt(r.mult_estimate)}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# --- SVG line chart -------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def emit_plot(rows: list[ResultRow], path: str, metric: str = "ber") -> None:
    """Standalone SVG line chart of one metric (log y), one polyline per
    detector. Values below PLOT_FLOOR are drawn at the floor with a distinct
    open marker."""
    if metric not in ("pe", "ber"):
        raise ValueError(f"metric must be 'pe' or 'ber', got {metric!r}")
    values = sorted({r.value for r in rows})
    if len(values) < 2:
        raise ValueError("plot needs rows covering at least 2 sweep values")
    sweep_var = rows[0].sweep_var

    series: dict[str, list[tuple[float, float]]] = {}
    for r in rows:
        y = r.pe_mean if metric == "pe" else r.ber_mean
        if not math.isnan(y):
            series.setdefault(r.detector, []).append((r.value, y))
    width, height = 760, 480
    left, right, top, bottom = 70, 230, 30, 50
    x_lo, x_hi = min(values), max(values)
    y_hi_data = max((y for pts in series.values() for _, y in pts), default=PLOT_FLOOR)
    dec_lo = math.floor(math.log10(PLOT_FLOOR))
    dec_hi = max(math.ceil(math.log10(max(y_hi_data, 10 * PLOT_FLOOR))), dec_lo + 1)

    def sx(v: float) -> float:
        return left + (v - x_lo) / (x_hi - x_lo) * (width - left - right)

    def sy(y: float) -> float:
        ly = math.log10(max(y, PLOT_FLOOR))
        return top + (dec_hi - ly) / (dec_hi - dec_lo) * (height - top - bottom)

    e = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
    ]
    for d in range(dec_lo, dec_hi + 1):
        yy = sy(10.0 ** d)
        e.append(f'<line x1="{left - 4}" y1="{yy:.1f}" x2="{left}" y2="{yy:.1f}" stroke="black"/>')
        e.append(f'<text x="{left - 8}" y="{yy + 4:.1f}" font-size="11" text-anchor="end">1e{d}</text>')
    for v in values:
        xx = sx(v)
        e.append(f'<line x1="{xx:.1f}" y1="{height - bottom}" x2="{xx:.1f}" y2="{height - bottom + 4}" stroke="black"/>')
        e.append(f'<text x="{xx:.1f}" y="{height - bottom + 18}" font-size="11" text-anchor="middle">{_fmt(v)}</text>')
    e.append(f'<text x="{(left + width - right) / 2:.1f}" y="{height - 10}" font-size="13" text-anchor="middle">{sweep_var}</text>')
    e.append(f'<text x="18" y="{(top + height - bottom) / 2:.1f}" font-size="13" text-anchor="middle" '
             f'transform="rotate(-90 18 {(top + height - bottom) / 2:.1f})">{metric}</text>')

    for idx, (det, pts) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{sx(v):.1f},{sy(y):.1f}" for v, y in pts)
        e.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for v, y in pts:
            if y < PLOT_FLOOR:
                e.append(f'<circle class="clamped" cx="{sx(v):.1f}" cy="{sy(y):.1f}" r="4" '
                         f'fill="white" stroke="{color}"/>')
        ly = top + 16 * idx
        e.append(f'<rect x="{width - right + 16}" y="{ly}" width="12" height="4" fill="{color}"/>')
        e.append(f'<text x="{width - right + 34}" y="{ly + 6}" font-size="11">{det}</text>')
    if any(y < PLOT_FLOOR for pts in series.values() for _, y in pts):
        e.append(f'<text x="{left + 4}" y="{top + 10}" font-size="10" fill="#555">'
                 f'open markers: zero clamped to {PLOT_FLOOR:g}</text>')
    e.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(e) + "\n")


# --- plain-text config -----------------------------------------------------------

class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


#: Default sweep grids per variable.
DEFAULT_GRIDS = {
    "snr_db": tuple(float(v) for v in range(-10, 13, 2)),
    "j": tuple(float(v) for v in range(2, 17, 2)),
    "n_r": tuple(float(v) for v in range(10, 101, 10)),
}

_SWEEP_ALIASES = {"snr": "snr_db", "snr_db": "snr_db", "j": "j", "nr": "n_r", "n_r": "n_r"}


def load_config(path: str) -> dict[str, str]:
    """Parse a ``key = value`` file; '#' starts a comment, keys lowercased."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {ln}", f"expected 'key = value', got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip().lower()] = value.strip()
    return out


def _get(cfg: dict[str, str], field: str, cast, default):
    if field not in cfg:
        return default
    try:
        return cast(cfg[field])
    except ValueError as exc:
        raise ConfigError(field, f"cannot parse {cfg[field]!r}") from exc


def spec_from_config(cfg: dict[str, str], **overrides) -> SweepSpec:
    """Build a SweepSpec from parsed config plus keyword overrides
    (sweep, seed, trials, snr_db). Raises ConfigError naming bad fields."""
    merged = dict(cfg)
    for key, val in overrides.items():
        if val is not None:
            merged[key] = str(val)

    base_kwargs = {}
    for field, cast in (("k", int), ("k_a", int), ("m_r", int), ("m", int),
                        ("n_r", int), ("j", int), ("snr_db", float), ("p_th", float)):
        val = _get(merged, field, cast, None)
        if val is not None:
            base_kwargs[field] = val
    base_kwargs["master_seed"] = _get(merged, "seed", int, 1)
    try:
        base = model.SystemConfig(**base_kwargs)
    except ValueError as exc:
        msg = str(exc)
        field = next((f for f in base_kwargs if f in msg), "system config")
        raise ConfigError(field, msg) from exc

    sweep_key = merged.get("sweep", "snr").strip().lower()
    if sweep_key not in _SWEEP_ALIASES:
        raise ConfigError("sweep", f"must be one of snr|J|Nr, got {merged.get('sweep')!r}")
    variable = _SWEEP_ALIASES[sweep_key]

    values_field = {"snr_db": "snr_values", "j": "j_values", "n_r": "nr_values"}[variable]
    if values_field in merged:
        try:
            values = tuple(float(v) for v in merged[values_field].split(",") if v.strip())
        except ValueError as exc:
            raise ConfigError(values_field, f"cannot parse {merged[values_field]!r}") from exc
    else:
        values = DEFAULT_GRIDS[variable]

    det_text = merged.get("detectors", ",".join(DETECTOR_NAMES))
    det = tuple(d.strip() for d in det_text.split(",") if d.strip())
    trials = _get(merged, "trials", int, 1000)
    try:
        return SweepSpec(variable=variable, values=values, trials=trials, detectors=det, base=base)
    except ValueError as exc:
        msg = str(exc)
        field = "detectors" if "detector" in msg else ("trials" if "trials" in msg else values_field)
        raise ConfigError(field, msg) from exc
