import csv
import io
import logging
import math

import pytest

from mm_access import harness
from mm_access.cli import main
from mm_access.harness import (
    ResultRow,
    SweepSpec,
    emit_csv,
    emit_plot,
    mix64,
    run_sweep,
    run_trial,
    spec_from_config,
)
from mm_access.model import SystemConfig

DESK = SystemConfig(k=12, k_a=2, m_r=1, m=4, n_r=12, j=3, snr_db=4.0, master_seed=7)


def desk_spec(**kwargs):
    defaults = dict(
        variable="snr_db",
        values=(-2.0, 4.0),
        trials=5,
        detectors=("stromp+sic_ssp", "stromp+gsp", "aud_lb", "oracle_ls", "zf_benchmark"),
        base=DESK,
    )
    defaults.update(kwargs)
    return SweepSpec(**defaults)


# --- mix64 / SweepSpec --------------------------------------------------------

def test_mix64_frozen_reference_values():
    # pinned so historic sweep seeds never drift
    assert mix64(1, 0, 0) == 736442933886495122
    assert mix64(1, 0, 1) == 3193540615753203535
    assert mix64(2, 5, 77) == 13273940483811437467


def test_mix64_sensitivity():
    seeds = {mix64(s, p, t) for s in range(3) for p in range(3) for t in range(3)}
    assert len(seeds) == 27


@pytest.mark.parametrize(
    "kwargs",
    [
        {"variable": "snr"},
        {"values": ()},
        {"values": (3.0, 1.0)},
        {"values": (1.0, 1.0)},
        {"trials": 0},
        {"detectors": ("mmse",)},
        {"detectors": ()},
    ],
)
def test_sweep_spec_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        desk_spec(**kwargs)


def test_config_at_casts_integer_variables():
    spec = desk_spec(variable="j", values=(2.0, 4.0))
    assert spec.config_at(4.0).j == 4
    assert isinstance(spec.config_at(4.0).j, int)


# --- run_sweep ---------------------------------------------------------------

def test_effectively_noiseless_point_is_error_free():
    spec = desk_spec(values=(300.0,), trials=1)
    rows = run_sweep(spec)
    for row in rows:
        if row.detector != "zf_benchmark":
            assert row.pe_mean == 0.0 or math.isnan(row.pe_mean)
        assert row.ber_mean == 0.0 or math.isnan(row.ber_mean)


def test_row_order_and_nan_policy():
    spec = desk_spec(trials=2)
    rows = run_sweep(spec)
    assert [r.detector for r in rows[:5]] == list(spec.detectors)
    assert rows[0].value == -2.0 and rows[5].value == 4.0
    by_det = {r.detector: r for r in rows[:5]}
    assert math.isnan(by_det["aud_lb"].ber_mean)       # no data detection
    assert math.isnan(by_det["zf_benchmark"].pe_mean)  # no activity detection
    assert by_det["oracle_ls"].pe_mean == 0.0
    assert by_det["stromp+sic_ssp"].pe_mean == by_det["stromp+gsp"].pe_mean


def test_paired_frames_across_detector_subsets():
    # dropping detectors must not change the frames others see
    rows_all = run_sweep(desk_spec(trials=4))
    rows_sub = run_sweep(desk_spec(trials=4, detectors=("stromp+sic_ssp",)))
    full = {(r.value, r.detector): r for r in rows_all}
    for r in rows_sub:
        ref = full[(r.value, r.detector)]
        assert r.pe_mean == ref.pe_mean and r.ber_mean == ref.ber_mean


def test_parallel_workers_match_serial(monkeypatch):
    spec = desk_spec(trials=6)
    serial = run_sweep(spec, workers=1)
    parallel = run_sweep(spec, workers=2)
    for a, b in zip(serial, parallel):
        assert (a.sweep_var, a.value, a.detector) == (b.sweep_var, b.value, b.detector)
        for field in ("pe_mean", "pe_ci", "ber_mean", "ber_ci", "mult_estimate"):
            va, vb = getattr(a, field), getattr(b, field)
            assert (math.isnan(va) and math.isnan(vb)) or va == vb


def test_threads_env_caps_workers(monkeypatch):
    monkeypatch.setenv("MM_ACCESS_THREADS", "1")
    assert harness._worker_count(8) == 1
    monkeypatch.delenv("MM_ACCESS_THREADS")
    assert harness._worker_count(None) == 1
    assert harness._worker_count(3) == 3


def test_frame_checksum_logging(caplog):
    with caplog.at_level(logging.DEBUG, logger="mm_access.harness"):
        run_trial(DESK, ("oracle_ls",), mix64(7, 0, 0))
        first = [r.message for r in caplog.records if "checksum" in r.message]
        caplog.clear()
        run_trial(DESK, ("stromp+sic_ssp", "zf_benchmark"), mix64(7, 0, 0))
        second = [r.message for r in caplog.records if "checksum" in r.message]
    assert first and first == second


# --- CSV ----------------------------------------------------------------------

def test_emit_csv_shape_and_round_trip(tmp_path):
    spec = desk_spec(values=(2.0,), trials=1, detectors=("oracle_ls",))
    rows = run_sweep(spec)
    path = tmp_path / "out.csv"
    emit_csv(rows, str(path), spec)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("#")
    assert "snr_convention" in lines[0] and "bit_mapping" in lines[0]
    assert lines[1] == harness.CSV_HEADER
    parsed = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert len(parsed) == 1
    row = parsed[0]
    assert row["detector"] == "oracle_ls"
    assert float(row["pe_mean"]) == rows[0].pe_mean
    assert int(row["trials"]) == 1
    # 6-significant-digit round trip
    assert float(row["ber_mean"]) == pytest.approx(rows[0].ber_mean, rel=1e-5)


def test_emit_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], str(tmp_path / "x.csv"), desk_spec())


def _strip_wall(text: str) -> str:
    out = []
    for line in text.splitlines():
        if line.startswith("#") or line.startswith("sweep_var"):
            out.append(line)
        else:
            cells = line.split(",")
            del cells[8]  # wall_ms_mean
            out.append(",".join(cells))
    return "\n".join(out)


def test_emit_csv_deterministic_modulo_wall_time(tmp_path):
    spec = desk_spec(trials=3)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_sweep(spec), str(a), spec)
    emit_csv(run_sweep(spec), str(b), spec)
    assert _strip_wall(a.read_text()) == _strip_wall(b.read_text())


# --- SVG ------------------------------------------------------------------------

def _rows_for_plot(values, detectors, ber=lambda v, d: 0.1):
    rows = []
    for v in values:
        for d in detectors:
            rows.append(ResultRow("snr_db", v, d, 0.01, 0.001, ber(v, d), 0.001, 10, 1.0, 1e6))
    return rows


def test_emit_plot_one_polyline_per_detector(tmp_path):
    rows = _rows_for_plot([0.0, 2.0, 4.0], ["stromp+sic_ssp", "stromp+gsp"])
    path = tmp_path / "plot.svg"
    emit_plot(rows, str(path))
    text = path.read_text()
    assert text.count("<polyline") == 2
    assert "snr_db" in text
    assert text.startswith("<svg")


def test_emit_plot_clamps_zero_series(tmp_path):
    rows = _rows_for_plot([0.0, 2.0], ["oracle_ls"], ber=lambda v, d: 0.0)
    path = tmp_path / "plot.svg"
    emit_plot(rows, str(path))
    text = path.read_text()
    assert 'class="clamped"' in text
    assert "clamped to 1e-06" in text


def test_emit_plot_needs_two_sweep_values(tmp_path):
    with pytest.raises(ValueError):
        emit_plot(_rows_for_plot([1.0], ["oracle_ls"]), str(tmp_path / "p.svg"))


def test_emit_plot_pe_metric_skips_nan_series(tmp_path):
    rows = _rows_for_plot([0.0, 2.0], ["stromp+sic_ssp"])
    rows += [ResultRow("snr_db", v, "zf_benchmark", math.nan, math.nan, 0.2, 0.01, 10, 1.0, 1e6)
             for v in (0.0, 2.0)]
    path = tmp_path / "pe.svg"
    emit_plot(rows, str(path), metric="pe")
    assert path.read_text().count("<polyline") == 1


# --- config + CLI ----------------------------------------------------------------

CONFIG = """
# desk-scale scenario
k = 12
k_a = 2
m_r = 1
m = 4
n_r = 12
j = 3
snr_db = 4
p_th = 2
seed = 7
trials = 2
sweep = snr
snr_values = -2, 4
detectors = stromp+sic_ssp, oracle_ls
"""


def write_config(tmp_path, text=CONFIG):
    path = tmp_path / "scenario.cfg"
    path.write_text(text)
    return str(path)


def test_spec_from_config_and_overrides(tmp_path):
    cfg = harness.load_config(write_config(tmp_path))
    spec = spec_from_config(cfg)
    assert spec.base.k == 12 and spec.base.master_seed == 7
    assert spec.values == (-2.0, 4.0)
    assert spec.detectors == ("stromp+sic_ssp", "oracle_ls")
    spec2 = spec_from_config(cfg, seed=9, trials=5, sweep="Nr")
    assert spec2.base.master_seed == 9
    assert spec2.trials == 5
    assert spec2.variable == "n_r" and spec2.values == harness.DEFAULT_GRIDS["n_r"]


def test_spec_from_config_names_bad_field(tmp_path):
    cfg = harness.load_config(write_config(tmp_path))
    cfg["k_a"] = "40"
    with pytest.raises(harness.ConfigError) as err:
        spec_from_config(cfg)
    assert "k_a" in str(err.value)


def test_cli_sweep_writes_outputs(tmp_path, capsys):
    out = tmp_path / "r.csv"
    plot = tmp_path / "r.svg"
    rc = main(["sweep", "--config", write_config(tmp_path),
               "--out", str(out), "--plot", str(plot)])
    assert rc == 0
    assert out.exists() and plot.exists()
    assert plot.read_text().count("<polyline") == 2


def test_cli_sweep_stdout_when_no_out(tmp_path, capsys):
    rc = main(["sweep", "--config", write_config(tmp_path), "--trials", "1"])
    captured = capsys.readouterr()
    assert rc == 0
    assert harness.CSV_HEADER in captured.out


def test_cli_rejects_invalid_config(tmp_path, capsys):
    rc = main(["sweep", "--config", write_config(tmp_path, CONFIG.replace("k_a = 2", "k_a = 40"))])
    captured = capsys.readouterr()
    assert rc == 1
    assert "k_a" in captured.err


def test_cli_unwritable_output_fails(tmp_path, capsys):
    rc = main(["sweep", "--config", write_config(tmp_path),
               "--out", str(tmp_path / "missing_dir" / "r.csv")])
    assert rc == 1
    assert "cannot write" in capsys.readouterr().err


def test_cli_complexity_prints_counts(tmp_path, capsys):
    paper_cfg = "k = 100\nk_a = 8\nm_r = 2\nm = 4\nn_r = 50\nj = 12\n"
    rc = main(["complexity", "--config", write_config(tmp_path, paper_cfg)])
    captured = capsys.readouterr()
    assert rc == 0
    assert "stromp" in captured.out
    assert "9580500" in captured.out.replace(",", "")


def test_cli_missing_config_file(tmp_path, capsys):
    rc = main(["sweep", "--config", str(tmp_path / "nope.cfg")])
    assert rc == 1
    assert "cannot read config" in capsys.readouterr().err
