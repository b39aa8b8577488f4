"""Experiment runner: spec parsing, seeded sweeps, CSV output, presets.

A spec names a sweep axis, a base scenario, trial/seed bookkeeping, and
the receivers to score.  Runs are deterministic in (spec, seed): trials
derive their substreams from the trial index alone, per-trial results are
reassembled in trial order, and CSV floats are written with 17
significant digits, so reruns and different worker counts produce
byte-identical files.
"""

from __future__ import annotations

import csv
import enum
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .asymptotics import asymptotic_rate
from .channel import SystemConfig, sample_channel, speed_to_doppler
from .diversity import PowerSplit, config_for_total_snr, coding_gain_loss, diversity_order
from .estimation import build_equivalent_model
from .exceptions import NumericalError, SpecValidationError
from .receivers import Receiver, sinr_report
from .ser import analytic_ser_mean, monte_carlo_ser

__all__ = [
    "ExperimentKind",
    "Metric",
    "ExperimentSpec",
    "ResultRow",
    "parse_spec",
    "load_spec",
    "run_experiment",
    "emit_csv",
    "read_csv_rows",
    "preset_names",
    "preset_spec",
]


class ExperimentKind(enum.Enum):
    RATE_SWEEP = "rate_sweep"
    SER_SWEEP = "ser_sweep"
    DEQ_COMPARE = "deq_compare"
    DIVERSITY_REPORT = "diversity_report"


class Metric(enum.Enum):
    RATE_MC = "rate_mc"
    RATE_ASYMPTOTIC = "rate_asymptotic"
    SER_MC = "ser_mc"
    SER_ANALYTIC = "ser_analytic"
    DIVERSITY_ORDER = "diversity_order"
    GAIN_LOSS_DB = "gain_loss_db"


SWEEP_PARAMETERS = ("n_rep", "n_tx", "n_rx", "k_block", "f_doppler",
                    "snr_db", "k", "gamma0_db", "b", "xi")

MC_KINDS = (ExperimentKind.RATE_SWEEP, ExperimentKind.SER_SWEEP,
            ExperimentKind.DEQ_COMPARE)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    kind: ExperimentKind
    base_config: SystemConfig
    sweep_parameter: str
    sweep_values: tuple
    trials: int
    seed: int
    receivers: tuple
    k_symbol: int = 1
    power_split: PowerSplit | None = None
    gamma0_db: float | None = None
    description: str = ""


@dataclass(frozen=True)
class ResultRow:
    sweep_value: float
    receiver: Receiver
    metric: Metric
    value: float
    ci_halfwidth: float | None = None


def _base_config_from(doc: dict, errors: list) -> SystemConfig | None:
    cfg_doc = dict(doc)
    if "f_doppler" not in cfg_doc:
        if "speed_kmh" in cfg_doc and "carrier_hz" in cfg_doc:
            try:
                cfg_doc["f_doppler"] = speed_to_doppler(
                    cfg_doc.pop("speed_kmh"), cfg_doc.pop("carrier_hz"))
            except ValueError as e:
                errors.append(f"base_config: {e}")
                return None
        else:
            errors.append("base_config: give f_doppler or (speed_kmh, carrier_hz)")
            return None
    noise_var = float(cfg_doc.pop("noise_var", 1.0))
    for db_key, energy_key in (("pilot_snr_db", "e_pilot"), ("data_snr_db", "e_data")):
        if db_key in cfg_doc:
            cfg_doc[energy_key] = 10.0 ** (float(cfg_doc.pop(db_key)) / 10.0) * noise_var
    known = {"n_tx", "n_rx", "k_block", "n_rep", "f_doppler", "t_symbol",
             "e_pilot", "e_data", "m_psk"}
    unknown = set(cfg_doc) - known
    if unknown:
        errors.append(f"base_config: unknown fields {sorted(unknown)}")
        return None
    try:
        return SystemConfig(noise_var=noise_var, **cfg_doc)
    except (ValueError, TypeError) as e:
        errors.append(f"base_config: {e}")
        return None


def parse_spec(doc: dict) -> ExperimentSpec:
    """Build an ExperimentSpec from a plain dict (e.g. parsed JSON),
    reporting every violated field at once."""
    errors: list[str] = []
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        errors.append("name: required non-empty string")
        name = "<unnamed>"
    try:
        kind = ExperimentKind(doc.get("kind"))
    except ValueError:
        errors.append(f"kind: must be one of {[k.value for k in ExperimentKind]}")
        kind = None
    cfg = None
    if isinstance(doc.get("base_config"), dict):
        cfg = _base_config_from(doc["base_config"], errors)
    else:
        errors.append("base_config: required object")
    sweep = doc.get("sweep") or {}
    param = sweep.get("parameter")
    if param not in SWEEP_PARAMETERS:
        errors.append(f"sweep.parameter: must be one of {SWEEP_PARAMETERS}")
    values = sweep.get("values")
    if not isinstance(values, (list, tuple)) or len(values) == 0:
        errors.append("sweep.values: required non-empty list")
        values = ()
    elif not all(np.isfinite(v) for v in values):
        errors.append("sweep.values: all values must be finite")
    elif param in ("n_rep", "n_tx", "n_rx", "k_block", "k"):
        if not all(float(v).is_integer() and v >= 1 for v in values):
            errors.append(f"sweep.values: {param} values must be integers >= 1")
        elif param == "k" and cfg is not None and max(values) > cfg.k_block:
            errors.append(f"sweep.values: k values exceed k_block={cfg.k_block}")
    trials = doc.get("trials")
    if trials is None:
        # defaults: 2000 frames for rate experiments; for SER, enough
        # frames that every point sees at least 1e5 symbol decisions
        if kind is ExperimentKind.SER_SWEEP and cfg is not None:
            trials = -(-100_000 // (cfg.n_tx * cfg.k_block))
        elif kind in MC_KINDS:
            trials = 2000
        else:
            trials = 0
    if (kind is None or kind in MC_KINDS) and (not isinstance(trials, int) or trials < 1):
        errors.append("trials: must be an integer >= 1 for Monte Carlo kinds")
    seed = doc.get("seed")
    if not isinstance(seed, int):
        errors.append("seed: required integer")
        seed = 0
    rec_names = doc.get("receivers", [r.value for r in Receiver])
    receivers = []
    for r in rec_names:
        try:
            receivers.append(Receiver(r))
        except ValueError:
            errors.append(f"receivers: unknown receiver {r!r}")
    split = None
    if "power_split" in doc:
        try:
            split = PowerSplit(b=float(doc["power_split"]["b"]),
                               xi=float(doc["power_split"].get("xi", 1.0)))
        except (KeyError, TypeError, ValueError) as e:
            errors.append(f"power_split: {e}")
    gamma0_db = doc.get("gamma0_db")
    if gamma0_db is not None and not np.isfinite(gamma0_db):
        errors.append("gamma0_db: must be finite")
    k_symbol = doc.get("k_symbol", 1)
    if cfg is not None and param != "k" and not (1 <= k_symbol <= cfg.k_block):
        errors.append(f"k_symbol: outside [1, {cfg.k_block}]")
    if param in ("gamma0_db", "b", "xi") or gamma0_db is not None:
        if split is None and param != "b":
            errors.append(f"sweep over {param!r} needs power_split")
        if param in ("b", "xi") and gamma0_db is None:
            errors.append(f"sweep over {param!r} needs gamma0_db")
    if errors:
        raise SpecValidationError(errors)
    return ExperimentSpec(name=name, kind=kind, base_config=cfg,
                          sweep_parameter=param, sweep_values=tuple(values),
                          trials=int(trials), seed=seed,
                          receivers=tuple(receivers), k_symbol=int(k_symbol),
                          power_split=split, gamma0_db=gamma0_db,
                          description=str(doc.get("description", "")))


def load_spec(path) -> ExperimentSpec:
    with open(path) as fh:
        return parse_spec(json.load(fh))


def _config_at(spec: ExperimentSpec, value) -> tuple:
    """(config, k_symbol) for one sweep point."""
    cfg = spec.base_config
    p = spec.sweep_parameter
    if p in ("n_rep", "n_tx", "n_rx", "k_block"):
        cfg = replace(cfg, **{p: int(value)})
    elif p == "f_doppler":
        cfg = replace(cfg, f_doppler=float(value))
    elif p == "snr_db":
        e = 10.0 ** (float(value) / 10.0) * cfg.noise_var
        cfg = replace(cfg, e_pilot=e, e_data=e)
    elif p == "k":
        return cfg, int(value)
    elif p == "gamma0_db":
        cfg = config_for_total_snr(cfg, float(value), spec.power_split)
    elif p == "b":
        split = PowerSplit(b=float(value),
                           xi=spec.power_split.xi if spec.power_split else 1.0)
        cfg = config_for_total_snr(cfg, spec.gamma0_db, split)
    elif p == "xi":
        split = PowerSplit(b=spec.power_split.b, xi=float(value))
        cfg = config_for_total_snr(cfg, spec.gamma0_db, split)
    else:
        raise ValueError(f"unknown sweep parameter {p!r}")
    return cfg, spec.k_symbol


def _rate_chunk(args) -> tuple:
    cfg, k, receivers, seed, start, count = args
    rates = np.empty((count, len(receivers)))
    for i, trial in enumerate(range(start, start + count)):
        realization = sample_channel(cfg, (k,), seed, trial)
        model = build_equivalent_model(realization, seed, cfg, k)
        for j, rec in enumerate(receivers):
            rates[i, j] = sinr_report(model, rec).rate
    return start, rates


def monte_carlo_rates(cfg: SystemConfig, k: int, receivers, trials: int,
                      seed: int, threads: int = 1) -> dict:
    """Mean normalized rate per receiver over seeded frames.

    Returns {receiver: (mean, ci_halfwidth)}; per-trial rates are
    reassembled in trial order, so the reduction is worker-count
    independent.
    """
    receivers = tuple(receivers)
    chunk = max(1, min(256, (trials + 3) // 4))
    jobs = [(cfg, k, receivers, int(seed), s, min(chunk, trials - s))
            for s in range(0, trials, chunk)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_rate_chunk, jobs))
    else:
        parts = [_rate_chunk(j) for j in jobs]
    parts.sort(key=lambda p: p[0])
    rates = np.concatenate([p[1] for p in parts], axis=0)
    out = {}
    for j, rec in enumerate(receivers):
        col = rates[:, j]
        ci = 1.96 * float(np.std(col, ddof=1)) / np.sqrt(trials) if trials > 1 else 0.0
        out[rec] = (float(np.mean(col)), ci)
    return out


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> list:
    """Execute one spec; returns rows sorted by (value, receiver, metric)."""
    if not spec.base_config.estimation_valid:
        warnings.warn("base config violates the pilot-spacing condition "
                      "(N_T + K) T <= 0.5/f_D; estimates will be poor",
                      stacklevel=2)
    rows = []
    for value in spec.sweep_values:
        try:
            rows.extend(_rows_at(spec, value, threads))
        except NumericalError as e:
            raise NumericalError(
                f"{spec.name}: sweep {spec.sweep_parameter}={value}: {e}") from e
    rows.sort(key=lambda r: (r.sweep_value, r.receiver.value, r.metric.value))
    return rows


def _rows_at(spec: ExperimentSpec, value, threads: int) -> list:
    cfg, k = _config_at(spec, value)
    v = float(value)
    rows = []
    if spec.kind in (ExperimentKind.RATE_SWEEP, ExperimentKind.DEQ_COMPARE):
        for rec in spec.receivers:
            rows.append(ResultRow(v, rec, Metric.RATE_ASYMPTOTIC,
                                  asymptotic_rate(cfg, rec, k)))
        mc = monte_carlo_rates(cfg, k, spec.receivers, spec.trials, spec.seed, threads)
        for rec in spec.receivers:
            mean, ci = mc[rec]
            rows.append(ResultRow(v, rec, Metric.RATE_MC, mean, ci))
    elif spec.kind is ExperimentKind.SER_SWEEP:
        if Receiver.MRC_LIKE in spec.receivers:
            rows.append(ResultRow(v, Receiver.MRC_LIKE, Metric.SER_ANALYTIC,
                                  analytic_ser_mean(cfg).ser))
        for rec in spec.receivers:
            res = monte_carlo_ser(cfg, rec, spec.trials, spec.seed, threads=threads)
            rows.append(ResultRow(v, rec, Metric.SER_MC, res.ser, res.ci_halfwidth))
    elif spec.kind is ExperimentKind.DIVERSITY_REPORT:
        split = spec.power_split or PowerSplit(b=float(np.sqrt(cfg.n_tx * cfg.k_block)))
        if spec.sweep_parameter == "b":
            split = PowerSplit(b=float(value), xi=split.xi)
        elif spec.sweep_parameter == "xi":
            split = PowerSplit(b=split.b, xi=float(value))
        rows.append(ResultRow(v, Receiver.MRC_LIKE, Metric.DIVERSITY_ORDER,
                              diversity_order(cfg.f_doppler, cfg.n_rx, split.xi)))
        rows.append(ResultRow(v, Receiver.MRC_LIKE, Metric.GAIN_LOSS_DB,
                              coding_gain_loss(cfg.n_tx, cfg.k_block, split.b)))
    else:
        raise ValueError(f"unknown experiment kind {spec.kind!r}")
    return rows


CSV_HEADER = "sweep_value,receiver,metric,value,ci_halfwidth"


def emit_csv(rows, path) -> None:
    """Write rows with 17-significant-digit floats, LF newlines, and an
    empty CI field for non-Monte-Carlo metrics."""
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            ci = "" if r.ci_halfwidth is None else f"{r.ci_halfwidth:.17g}"
            fh.write(f"{r.sweep_value:.17g},{r.receiver.value},"
                     f"{r.metric.value},{r.value:.17g},{ci}\n")


def read_csv_rows(path) -> list:
    """Parse a file produced by emit_csv back into ResultRow objects."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            ci = rec["ci_halfwidth"]
            rows.append(ResultRow(
                sweep_value=float(rec["sweep_value"]),
                receiver=Receiver(rec["receiver"]),
                metric=Metric(rec["metric"]),
                value=float(rec["value"]),
                ci_halfwidth=None if ci == "" else float(ci)))
    return rows


# ---------------------------------------------------------------------------
# Presets: desk-scale experiment definitions keyed by figure id.

_SV_BASE = {"n_tx": 4, "n_rx": 8, "k_block": 16, "n_rep": 15,
            "f_doppler": 200.0, "t_symbol": 1e-5,
            "pilot_snr_db": 10.0, "data_snr_db": 10.0, "m_psk": 4}


def _preset_docs() -> dict:
    base = dict(_SV_BASE)
    docs = {}
    docs["fig3"] = {
        "name": "fig3", "kind": "deq_compare",
        "description": "normalized rates vs repetition count: Monte Carlo vs asymptotic",
        "base_config": {**base, "n_rx": 4},
        "sweep": {"parameter": "n_rep", "values": [5, 10, 15, 20, 25, 30]},
        "trials": 2000, "seed": 1001,
    }
    docs["fig4"] = {
        "name": "fig4", "kind": "rate_sweep",
        "description": "rates vs SNR at moderate Doppler (200 Hz)",
        "base_config": base,
        "sweep": {"parameter": "snr_db", "values": [0, 4, 8, 12, 16, 20]},
        "trials": 2000, "seed": 1002,
    }
    docs["fig5"] = {
        "name": "fig5", "kind": "rate_sweep",
        "description": "rates vs SNR at high Doppler (1000 Hz)",
        "base_config": {**base, "f_doppler": 1000.0},
        "sweep": {"parameter": "snr_db", "values": [0, 4, 8, 12, 16, 20]},
        "trials": 2000, "seed": 1003,
    }
    docs["fig6"] = {
        "name": "fig6", "kind": "rate_sweep",
        "description": "rates vs Doppler spread",
        "base_config": base,
        "sweep": {"parameter": "f_doppler", "values": [100, 200, 400, 600, 800, 1000]},
        "trials": 2000, "seed": 1004,
    }
    docs["fig7"] = {
        "name": "fig7", "kind": "rate_sweep",
        "description": "rates vs data-symbol position within the block",
        "base_config": {**base, "f_doppler": 1000.0},
        "sweep": {"parameter": "k", "values": [1, 4, 8, 12, 16]},
        "trials": 2000, "seed": 1005,
    }
    docs["fig8"] = {
        "name": "fig8", "kind": "rate_sweep",
        "description": "rates vs transmit antennas at high speed (N * N_R = 100)",
        "base_config": {**base, "f_doppler": 1000.0, "t_symbol": 1.0 / 3e5,
                        "n_rep": 5, "n_rx": 20},
        "sweep": {"parameter": "n_tx", "values": [1, 2, 4, 8]},
        "trials": 2000, "seed": 1006,
    }
    docs["fig9"] = {
        "name": "fig9", "kind": "rate_sweep",
        "description": "rates vs receive antennas at high speed",
        "base_config": {**base, "f_doppler": 1000.0},
        "sweep": {"parameter": "n_rx", "values": [4, 8, 16, 32]},
        "trials": 2000, "seed": 1007,
    }
    docs["fig10"] = {
        "name": "fig10", "kind": "rate_sweep",
        "description": "rates vs repetition count at high speed, many receive antennas",
        "base_config": {**base, "f_doppler": 1000.0, "n_rx": 20},
        "sweep": {"parameter": "n_rep", "values": [5, 10, 15, 20, 25, 30]},
        "trials": 2000, "seed": 1008,
    }
    for fid, fd in (("fig11a", 200.0), ("fig11b", 1000.0)):
        docs[fid] = {
            "name": fid, "kind": "ser_sweep",
            "description": f"whitened-MRC SER vs repetition count at {fd:.0f} Hz: "
                           "analytic vs Monte Carlo",
            "base_config": {**base, "n_rx": 4, "f_doppler": fd},
            "sweep": {"parameter": "n_rep", "values": [4, 6, 8, 10, 12, 15]},
            "trials": 1600, "seed": 1011,
            "receivers": ["mrc_like"],
        }
    docs["fig12"] = {
        "name": "fig12", "kind": "ser_sweep",
        "description": "whitened-MRC SER vs total SNR under the b*gamma_c power split",
        "base_config": {**base, "n_rx": 4, "n_rep": 8, "f_doppler": 1000.0},
        "sweep": {"parameter": "gamma0_db", "values": [0, 5, 10, 15]},
        "trials": 1600, "seed": 1012,
        "receivers": ["mrc_like"],
        "power_split": {"b": 8.0, "xi": 1.0},
    }
    docs["fig13"] = {
        "name": "fig13", "kind": "ser_sweep",
        "description": "whitened-MRC SER vs pilot/data power split b",
        "base_config": {**base, "n_rx": 4, "n_rep": 8, "f_doppler": 1000.0},
        "sweep": {"parameter": "b", "values": [2, 4, 8, 16, 32]},
        "trials": 1600, "seed": 1013,
        "receivers": ["mrc_like"],
        "power_split": {"b": 8.0, "xi": 1.0},
        "gamma0_db": 5.0,
    }
    return docs


def preset_names() -> list:
    return sorted(_preset_docs().keys())


def preset_spec(figure_id: str) -> dict:
    """The JSON-able spec document for one preset figure id."""
    docs = _preset_docs()
    if figure_id not in docs:
        raise KeyError(f"unknown preset {figure_id!r}; have {sorted(docs)}")
    return docs[figure_id]
