import json
import subprocess
import sys

import pytest

import dopmimo as dm
from dopmimo import ExperimentKind, Metric, Receiver
from dopmimo.cli import main
from dopmimo.exceptions import NumericalError, SpecValidationError
from dopmimo.harness import CSV_HEADER, ResultRow, _config_at

BASE_DOC = {
    "name": "tiny",
    "kind": "rate_sweep",
    "description": "unit-test sweep",
    "base_config": {"n_tx": 2, "n_rx": 2, "k_block": 4, "n_rep": 3,
                    "f_doppler": 1000.0, "t_symbol": 1e-5,
                    "pilot_snr_db": 10.0, "data_snr_db": 10.0, "m_psk": 4},
    "sweep": {"parameter": "n_rep", "values": [2, 3, 4]},
    "trials": 4,
    "seed": 99,
}


def tiny_spec(**overrides):
    doc = json.loads(json.dumps(BASE_DOC))
    doc.update(overrides)
    return dm.parse_spec(doc)


# ---------------------------------------------------------------------------
# spec parsing

def test_parse_valid_spec():
    spec = tiny_spec()
    assert spec.kind is ExperimentKind.RATE_SWEEP
    assert spec.base_config.n_tx == 2
    assert spec.sweep_values == (2, 3, 4)
    assert spec.receivers == tuple(Receiver)


def test_parse_reports_every_violation():
    doc = {"name": "", "kind": "nope",
           "base_config": {"n_tx": 0, "f_doppler": 100.0},
           "sweep": {"parameter": "bogus", "values": []},
           "trials": 0}
    with pytest.raises(SpecValidationError) as err:
        dm.parse_spec(doc)
    text = str(err.value)
    for field in ("name", "kind", "base_config", "sweep.parameter",
                  "sweep.values", "trials", "seed"):
        assert field in text


def test_parse_doppler_from_speed():
    doc = json.loads(json.dumps(BASE_DOC))
    del doc["base_config"]["f_doppler"]
    doc["base_config"]["speed_kmh"] = 113.6
    doc["base_config"]["carrier_hz"] = 1.9e9
    spec = dm.parse_spec(doc)
    assert spec.base_config.f_doppler == pytest.approx(200.0, abs=0.5)


def test_parse_power_split_requirements():
    doc = json.loads(json.dumps(BASE_DOC))
    doc["kind"] = "ser_sweep"
    doc["sweep"] = {"parameter": "b", "values": [2, 8]}
    with pytest.raises(SpecValidationError, match="gamma0_db"):
        dm.parse_spec(doc)
    doc["gamma0_db"] = 10.0
    spec = dm.parse_spec(doc)
    cfg, _ = _config_at(spec, 8.0)
    assert cfg.gamma_p == pytest.approx(8.0 * cfg.gamma_c)


def test_config_at_snr_axis():
    spec = tiny_spec(sweep={"parameter": "snr_db", "values": [0, 10]})
    cfg, _ = _config_at(spec, 10.0)
    assert cfg.gamma_p == pytest.approx(10.0)
    assert cfg.gamma_c == pytest.approx(10.0)


def test_config_at_k_axis():
    spec = tiny_spec(sweep={"parameter": "k", "values": [1, 2]})
    cfg, k = _config_at(spec, 2)
    assert k == 2 and cfg == spec.base_config


# ---------------------------------------------------------------------------
# running

def test_rate_sweep_row_contract():
    rows = dm.run_experiment(tiny_spec())
    assert len(rows) == 3 * 3 * 2  # values x receivers x metrics
    keys = [(r.sweep_value, r.receiver.value, r.metric.value) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert (r.ci_halfwidth is not None) == (r.metric is Metric.RATE_MC)


def test_ser_sweep_rows():
    spec = tiny_spec(kind="ser_sweep",
                     sweep={"parameter": "n_rep", "values": [2, 3]},
                     receivers=["mrc_like", "mrc"], trials=3)
    rows = dm.run_experiment(spec)
    metrics = {(r.sweep_value, r.receiver, r.metric) for r in rows}
    assert (2.0, Receiver.MRC_LIKE, Metric.SER_ANALYTIC) in metrics
    assert (2.0, Receiver.MRC, Metric.SER_MC) in metrics
    assert not any(m is Metric.SER_ANALYTIC and r is Receiver.MRC
                   for _, r, m in metrics)


def test_diversity_report_rows():
    spec = tiny_spec(kind="diversity_report",
                     sweep={"parameter": "xi", "values": [0.5, 1.0, 2.0]},
                     power_split={"b": 8.0, "xi": 1.0}, gamma0_db=10.0)
    rows = dm.run_experiment(spec)
    orders = [r.value for r in rows if r.metric is Metric.DIVERSITY_ORDER]
    assert len(rows) == 6
    assert max(orders) == orders[1]  # xi = 1 maximizes


def test_estimation_validity_warning():
    doc = json.loads(json.dumps(BASE_DOC))
    doc["base_config"]["f_doppler"] = 99999.0
    spec = dm.parse_spec(doc)
    with pytest.warns(UserWarning, match="pilot-spacing"):
        dm.run_experiment(spec)


def test_numerical_errors_carry_sweep_context(monkeypatch):
    def boom(*a, **k):
        raise NumericalError("synthetic failure")
    monkeypatch.setattr("dopmimo.harness.asymptotic_rate", boom)
    with pytest.raises(NumericalError, match="n_rep=2"):
        dm.run_experiment(tiny_spec())


# ---------------------------------------------------------------------------
# CSV

def test_csv_round_trip(tmp_path):
    rows = dm.run_experiment(tiny_spec())
    path = tmp_path / "out.csv"
    dm.emit_csv(rows, path)
    back = dm.read_csv_rows(path)
    assert back == rows


def test_csv_header_and_small_files(tmp_path):
    empty = tmp_path / "empty.csv"
    dm.emit_csv([], empty)
    assert empty.read_text() == CSV_HEADER + "\n"
    one = tmp_path / "one.csv"
    dm.emit_csv([ResultRow(1.0, Receiver.MRC, Metric.RATE_ASYMPTOTIC, 0.5)], one)
    lines = one.read_text().splitlines()
    assert len(lines) == 2
    assert lines[1] == "1,mrc,rate_asymptotic,0.5,"


def test_csv_determinism_same_seed(tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    dm.emit_csv(dm.run_experiment(tiny_spec()), p1)
    dm.emit_csv(dm.run_experiment(tiny_spec()), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_csv_determinism_across_worker_counts(tmp_path):
    spec = tiny_spec(trials=10)
    p1, p2 = tmp_path / "t1.csv", tmp_path / "t2.csv"
    dm.emit_csv(dm.run_experiment(spec, threads=1), p1)
    dm.emit_csv(dm.run_experiment(spec, threads=2), p2)
    assert p1.read_bytes() == p2.read_bytes()


# ---------------------------------------------------------------------------
# presets

def test_presets_all_parse():
    names = dm.preset_names()
    assert {"fig3", "fig11a", "fig12", "fig13"} <= set(names)
    for fid in names:
        spec = dm.parse_spec(dm.preset_spec(fid))
        assert spec.name == fid
        assert spec.base_config.estimation_valid


def test_preset_unknown_id():
    with pytest.raises(KeyError):
        dm.preset_spec("fig99")


# ---------------------------------------------------------------------------
# CLI

def test_cli_run_and_outputs(tmp_path):
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps(BASE_DOC))
    out = tmp_path / "rows.csv"
    assert main(["run", str(spec_file), "--out", str(out)]) == 0
    assert out.read_text().startswith(CSV_HEADER)


def test_cli_seed_override(tmp_path):
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps(BASE_DOC))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["run", str(spec_file), "--out", str(out1), "--seed", "123"])
    main(["run", str(spec_file), "--out", str(out2), "--seed", "123"])
    assert out1.read_bytes() == out2.read_bytes()


def test_cli_validation_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "x", "kind": "rate_sweep"}))
    assert main(["run", str(bad), "--out", str(tmp_path / "o.csv")]) == 1
    assert main(["run", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "o.csv")]) == 1


def test_cli_numerical_error_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("synthetic failure")
    monkeypatch.setattr("dopmimo.harness.asymptotic_rate", boom)
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps(BASE_DOC))
    assert main(["run", str(spec_file), "--out", str(tmp_path / "o.csv")]) == 2


def test_cli_preset_commands(capsys):
    assert main(["preset", "list"]) == 0
    listing = capsys.readouterr().out
    assert "fig3" in listing and "fig13" in listing
    assert main(["preset", "show", "fig3"]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert dm.parse_spec(shown).name == "fig3"
    assert main(["preset", "show", "fig99"]) == 1


def test_cli_usage_error_exit_code():
    assert main(["bogus-command"]) == 1


def test_cli_subprocess_entry(tmp_path):
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps(BASE_DOC))
    out = tmp_path / "rows.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "dopmimo.cli", "run", str(spec_file),
         "--out", str(out), "--threads", "2"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
