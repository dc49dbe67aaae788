"""
Command-line entry point.

Every subcommand reads one JSON config, applies ``--set dotted.key=value``
overrides, validates the result against a schema (unknown keys rejected),
runs the pipeline and writes its artifacts plus ``run-manifest.json`` into
the output directory. Exit codes: 0 success, 1 runtime failure, 2 config
error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import jsonschema
import numba
import numpy as np
import scipy

from . import __version__
from .alignment import (
    HorizonSpec,
    LagSpec,
    design_to_tensor,
    frequency_align,
    sample_align,
    write_design_csv,
)
from .empirical import RecursiveConfig, evaluation_windows, load_pseudo_thai, run_recursive_study
from .errors import ConfigError, MflstmError
from .evaluation import ForecastRecord, evaluate, read_forecasts
from .lstm import TrainConfig
from .midas import NORMALIZED, WEIGHTINGS, ar1_fit, midas_fit, umidas_fit
from .selection import HyperGrid, grid_search
from .series import read_dataset, write_dataset
from .simulation import (
    PAPER_ROSTER,
    Ar1Estimator,
    DgpConfig,
    FaLstmEstimator,
    McExperiment,
    MidasEstimator,
    OracleEstimator,
    SaLstmEstimator,
    UMidasEstimator,
    derive_seed,
    entry_name,
    gen_dgp,
    rolling_forecast,
    run_monte_carlo,
)

log = logging.getLogger("mflstm")

ENV_OUTPUT = "MFLSTM_OUTPUT_DIR"
MANIFEST = "run-manifest.json"
PSEUDO_THAI = "builtin:pseudo-thai"

# --- schemas --------------------------------------------------------------

_INT = {"type": "integer"}
_POS = {"type": "integer", "minimum": 1}
_NONNEG = {"type": "integer", "minimum": 0}
_LAG = {"oneOf": [{"type": "string", "pattern": r"^\d+:\d+$"}, _NONNEG]}
_LAGS = {"oneOf": [_LAG, {"type": "object", "additionalProperties": _LAG}]}
_SPLIT = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_HORIZONS = {"type": "array", "items": _NONNEG, "minItems": 1}
_CELLS = {"oneOf": [_POS, {"type": "array", "items": _POS, "minItems": 1}]}
_BATCH = {"oneOf": [_POS, {"type": "string", "pattern": r"^input/\d+(\.\d+)?$"}]}
_COMMON = {"seed": _NONNEG, "output_dir": {"type": "string"}}

_DGP = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "T": {"type": "integer", "minimum": 20},
        "m": _POS,
        "K": _POS,
        "J": _POS,
        "alpha": {"type": "number"},
        "beta": {"type": "array", "items": {"type": "number"}},
        "theta": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                             "minItems": 2, "maxItems": 2}},
        "x_process": {"enum": ["iid", "ar1"]},
        "rho": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
        "noise_sd": {"type": "number", "minimum": 0},
    },
}

_HYPER = {
    "type": "object",
    "additionalProperties": False,
    "required": ["epochs", "dropout", "batch_size", "cells"],
    "properties": {
        "epochs": _POS,
        "dropout": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "batch_size": _POS,
        "cells": _CELLS,
        "patience": _POS,
        "learning_rate": {"type": "number", "exclusiveMinimum": 0},
        "peepholes": {"type": "boolean"},
    },
}

_ENTRY = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["midas", "umidas", "ar1", "oracle", "fa_lstm", "sa_lstm"]},
        "name": {"type": "string"},
        "timesteps": _POS,
        "lags": _LAG,
        "within_rate": _POS,
        "ids": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "n_lags": _POS,
        "weighting": {"enum": list(WEIGHTINGS)},
        "hyper": _HYPER,
    },
}

_GRID = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "epochs": {"type": "array", "items": _POS, "minItems": 1},
        "dropout": {"type": "array", "items": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    "minItems": 1},
        "batch_size": {"type": "array", "items": _BATCH, "minItems": 1},
        "cells": {"type": "array", "items": _CELLS, "minItems": 1},
        "timesteps": {"type": "array", "items": _POS, "minItems": 1},
        "p_m": {"type": "array", "items": _POS, "minItems": 1},
        "p_q": {"type": "array", "items": _POS, "minItems": 1},
    },
}

_WINDOWS = {"type": "object", "additionalProperties": {"type": "array", "items": _POS}}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "additionalProperties": False, "required": list(required),
            "properties": {**_COMMON, **props}}


SCHEMAS = {
    "simulate": _obj({"dgp": _DGP, "name": {"type": "string", "pattern": r"^[\w.-]+$"}}),
    "align": _obj({
        "dataset": {"type": "string"},
        "mode": {"enum": ["frequency", "sampling"]},
        "lags": _LAGS,
        "ar_lags": {"oneOf": [_LAG, {"type": "null"}]},
        "h_m": _NONNEG,
        "timesteps": _POS,
        "within_rate": _POS,
    }, ["dataset"]),
    "fit": _obj({
        "dataset": {"type": "string"},
        "model": {"enum": ["midas", "umidas", "ar1"]},
        "weighting": {"enum": list(WEIGHTINGS)},
        "lags": _LAGS,
        "ar_lags": {"oneOf": [_LAG, {"type": "null"}]},
        "h_m": _NONNEG,
        "train_end": {"oneOf": [_POS, {"type": "null"}]},
        "n_jitter": _NONNEG,
        "max_iter": _POS,
    }, ["dataset"]),
    "forecast": _obj({
        "dataset": {"type": "string"},
        "mode": {"enum": ["rolling", "recursive"]},
        "horizons": _HORIZONS,
        "split": _SPLIT,
        "estimations": _POS,
        "estimators": {"type": "array", "items": _ENTRY, "minItems": 1},
        "models": {"type": "object", "minProperties": 1, "additionalProperties": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["fa_lstm", "sa_lstm", "uni_lstm", "ar1"]},
                "grid": _GRID,
                "repeats": _POS,
                "n_estimations": _POS,
                "split": _SPLIT,
                "folds": _POS,
                "patience": _POS,
                "always_include": {"type": "object", "additionalProperties": _POS},
            },
        }},
        "targets": {"oneOf": [{"type": "array", "items": _POS, "minItems": 1}, {"type": "null"}]},
        "windows": _WINDOWS,
        "benchmark": {"type": "string"},
    }, ["dataset"]),
    "gridsearch": _obj({
        "dataset": {"type": "string"},
        "dgp": _DGP,
        "tuning_reps": _POS,
        "kind": {"enum": ["fa_lstm", "sa_lstm"]},
        "timesteps": _POS,
        "lags": _LAG,
        "within_rate": _POS,
        "h_m": _NONNEG,
        "split": _SPLIT,
        "grid": _GRID,
        "repeats": _POS,
    }),
    "montecarlo": _obj({
        "dgp": _DGP,
        "horizons": _HORIZONS,
        "roster": {"type": "array", "items": _ENTRY, "minItems": 1},
        "R": _POS,
        "estimations": _POS,
        "split": _SPLIT,
        "tuning_reps": _POS,
        "midas_spec": {"type": "object", "additionalProperties": False, "required": ["ids", "n_lags"],
                       "properties": {"ids": {"type": "array", "items": {"type": "string"},
                                              "minItems": 1},
                                      "n_lags": _POS, "weighting": {"enum": list(WEIGHTINGS)}}},
        "search_lags": {"type": "array", "items": _POS, "minItems": 1},
        "search_jitter": _NONNEG,
        "search_max_iter": _POS,
        "hyper": {"type": "object", "additionalProperties": _HYPER},
    }),
    "evaluate": _obj({
        "forecasts": {"oneOf": [{"type": "string"},
                                {"type": "array", "items": {"type": "string"}, "minItems": 1}]},
        "benchmark": {"type": "string"},
        "windows": _WINDOWS,
    }, ["forecasts"]),
    "report": _obj({
        "forecasts": {"oneOf": [{"type": "string"},
                                {"type": "array", "items": {"type": "string"}, "minItems": 1}]},
        "benchmark": {"type": "string"},
    }, ["forecasts", "benchmark"]),
}


# --- config handling ------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(config: dict, overrides) -> dict:
    """Return a copy of ``config`` with each ``a.b.c=value`` applied (values parsed as JSON)."""
    out = copy.deepcopy(config)
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            if isinstance(node, list):
                node = node[int(p)]
                continue
            node = node.setdefault(p, {})
            if not isinstance(node, (dict, list)):
                raise ConfigError(f"override {key!r} descends into a non-object value")
        if isinstance(node, list):
            node[int(parts[-1])] = _parse_value(raw)
        else:
            node[parts[-1]] = _parse_value(raw)
    return out


def _path_of(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate_config(command: str, config: dict) -> None:
    """Raise :class:`ConfigError` listing every schema violation with its field path."""
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(config), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{_path_of(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid config\n  " + "\n  ".join(lines))


def load_config(path, command: str, overrides=(), seed=None) -> dict:
    if path is None:
        raw = {}
    else:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    cfg = apply_overrides(raw, overrides)
    if seed is not None:
        cfg["seed"] = seed
    validate_config(command, cfg)
    return cfg


def _resolve(base: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base / q


def output_dir(command: str, cli_out, config: dict) -> Path:
    if cli_out:
        return Path(cli_out)
    if "output_dir" in config:
        return Path(config["output_dir"])
    return Path(os.environ.get(ENV_OUTPUT, "mflstm-output")) / command


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_manifest(out: Path, command: str, config: dict, seeds: dict, written) -> Path:
    doc = {
        "command": command,
        "config": config,
        "config_sha256": hashlib.sha256(_canonical(config).encode()).hexdigest(),
        "seeds": seeds,
        "versions": {"mflstm": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "numba": numba.__version__, "python": platform.python_version()},
        "outputs": {p.relative_to(out).as_posix(): _sha256(p) for p in sorted(written)},
    }
    path = out / MANIFEST
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")
    return path


# --- builders -------------------------------------------------------------

def _dgp(cfg: dict, seed: int) -> DgpConfig:
    d = dict(cfg.get("dgp", {}))
    if "theta" in d:
        d["theta"] = tuple(tuple(t) for t in d["theta"])
    K = d.get("K", 3)
    if K != 3:
        d.setdefault("beta", [0.5] * K)
        if "theta" not in d:
            raise ConfigError("dgp.theta must be given when K != 3")
    try:
        return DgpConfig(**d, seed=seed)
    except ValueError as exc:
        raise ConfigError(f"dgp: {exc}") from exc


def _cells(v):
    return tuple(v) if isinstance(v, list) else (int(v),)


def _train_config(hyper: dict | None) -> TrainConfig:
    if hyper is None:
        return TrainConfig(epochs=25, batch_size=16, cells=(16,))
    return TrainConfig(epochs=hyper["epochs"], dropout=hyper["dropout"],
                       batch_size=hyper["batch_size"], cells=_cells(hyper["cells"]),
                       patience=hyper.get("patience"),
                       learning_rate=hyper.get("learning_rate", 1e-3),
                       peepholes=hyper.get("peepholes", False))


def _lag_map(spec, ds):
    if spec is None:
        return LagSpec(0, 2)
    if isinstance(spec, dict):
        unknown = set(spec) - set(ds.ids)
        if unknown:
            raise ConfigError(f"lags: unknown series {sorted(unknown)}")
        return {k: LagSpec.parse(v) for k, v in spec.items()}
    return LagSpec.parse(spec)


def _estimator(entry: dict, ds, dgp=None):
    kind = entry["kind"]
    name = entry_name(entry)
    ids = tuple(entry.get("ids", ds.ids))
    missing = set(ids) - set(ds.ids)
    if missing:
        raise ConfigError(f"estimator {name}: unknown ids {sorted(missing)}")
    n_lags = entry.get("n_lags", 3)
    if kind == "midas":
        return MidasEstimator(ids, n_lags, entry.get("weighting", NORMALIZED), name=name)
    if kind == "umidas":
        return UMidasEstimator(ids, n_lags, name=name)
    if kind == "ar1":
        return Ar1Estimator(name=name)
    if kind == "oracle":
        if dgp is None:
            raise ConfigError("the oracle estimator needs a simulated dataset")
        return OracleEstimator(dgp, name=name)
    tc = _train_config(entry.get("hyper"))
    if kind == "fa_lstm":
        return FaLstmEstimator(entry.get("timesteps", 1), LagSpec.parse(entry.get("lags", "0:2")), tc,
                               name=name)
    return SaLstmEstimator(entry.get("timesteps", 6), entry.get("within_rate", 1), tc, name=name)


def _dataset(cfg: dict, base: Path):
    src = cfg["dataset"]
    if src == PSEUDO_THAI:
        return load_pseudo_thai()
    return read_dataset(_resolve(base, src)), None


# --- subcommands ----------------------------------------------------------

def cmd_simulate(cfg, out, base, jobs):
    seed = cfg.get("seed", 0)
    dgp = _dgp(cfg, derive_seed(seed, "data"))
    ds = gen_dgp(dgp)
    manifest = write_dataset(ds, out, cfg.get("name", "dataset"))
    written = [manifest] + [out / f"{cfg.get('name', 'dataset')}_m{r}.csv" for r in sorted({1, *ds.ratios})]
    return written, {"root": seed, "data": dgp.seed}


def cmd_align(cfg, out, base, jobs):
    ds, _ = _dataset(cfg, base)
    h_m = cfg.get("h_m", 0)
    if cfg.get("mode", "frequency") == "frequency":
        ad = frequency_align(ds, _lag_map(cfg.get("lags"), ds), h_m, cfg.get("ar_lags"))
        written = [write_design_csv(ad, out / "design.csv")]
        if "timesteps" in cfg:
            written.append(_write_tensor(design_to_tensor(ad, cfg["timesteps"]),
                                         [f"{s}_lag{j}" for s, j in ad.columns], out / "tensor.csv"))
        return written, {}
    batch = sample_align(ds, cfg.get("timesteps", 1), h_m, cfg.get("within_rate", 1))
    return [_write_tensor(batch, [c.id for c in ds.covariates], out / "tensor.csv")], {}


def _write_tensor(batch, names, path: Path) -> Path:
    """Long format: one line per (sequence, timestep)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "step"] + list(names) + ["y"])
        for i in range(len(batch)):
            y = batch.y[i]
            for s in range(batch.timesteps):
                w.writerow([int(batch.t[i]), s + 1] + [repr(float(v)) for v in batch.X[i, s]]
                           + ["" if not np.isfinite(y) else repr(float(y))])
    return path


def cmd_fit(cfg, out, base, jobs):
    ds, _ = _dataset(cfg, base)
    seed = cfg.get("seed", 0)
    model = cfg.get("model", "midas")
    h_m = cfg.get("h_m", 0)
    end = cfg.get("train_end") or ds.n
    if end > ds.n:
        raise ConfigError(f"train_end {end} exceeds the dataset length {ds.n}")
    spec = HorizonSpec.from_high_frequency(h_m, ds)
    info = ds.information_set(end, {c.id: c.ratio * end - spec.steps[c.id] for c in ds.covariates})
    ms = derive_seed(seed, "multistart")
    if model == "ar1":
        fit = ar1_fit(np.where(info.target.mask, np.nan, info.target.values), spec.ar_step)
    else:
        ad = frequency_align(info, _lag_map(cfg.get("lags"), ds), h_m, cfg.get("ar_lags"))
        if model == "umidas":
            fit = umidas_fit(ad)
        else:
            fit = midas_fit(ad, cfg.get("weighting", NORMALIZED), seed=ms,
                            n_jitter=cfg.get("n_jitter", 2), max_iter=cfg.get("max_iter", 200))
    doc = {"fit": fit.to_dict(), "h_m": h_m, "train_end": end, "n_params": fit.n_params}
    return [_write_json(out / "fit.json", doc)], {"root": seed, "multistart": ms}


def _rolling(cfg, ds, dgp, seed):
    split = cfg.get("split", 0.6)
    n_est = cfg.get("estimations", 1)
    by_model = {}
    entries = cfg.get("estimators") or [{"kind": "ar1"}]
    names = [entry_name(e) for e in entries]
    if len(set(names)) != len(names):
        raise ConfigError(f"estimators: duplicate names {names}")
    for entry in entries:
        est = _estimator(entry, ds, dgp)
        recs = []
        for h_m in cfg.get("horizons", [1]):
            runs = []
            for e in range(n_est if est.stochastic else 1):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    runs.append(rolling_forecast(est, ds, h_m, split,
                                                 derive_seed(seed, "est", est.name, h_m, e)))
            for i, r in enumerate(runs[0]):
                f = float(np.mean([run[i].forecast for run in runs]))
                recs.append(ForecastRecord(r.origin, r.target, r.h_m, f, r.actual))
        by_model[est.name] = recs
    return by_model


def _recursive_models(cfg, meta, seed):
    models = {}
    spec = cfg.get("models") or {"FA-LSTM": {"kind": "fa_lstm"}, "AR(1)": {"kind": "ar1"}}
    for i, (name, m) in enumerate(sorted(spec.items())):
        kw = {k: v for k, v in m.items() if k != "grid"}
        if "grid" in m:
            kw["grid"] = HyperGrid.from_dict(m["grid"])
        if "always_include" not in kw and meta is not None:
            kw["always_include"] = meta.get("always_include", {})
        try:
            models[name] = RecursiveConfig(**kw, seed=derive_seed(seed, "model", name))
        except ValueError as exc:
            raise ConfigError(f"models.{name}: {exc}") from exc
    return models


def cmd_forecast(cfg, out, base, jobs):
    seed = cfg.get("seed", 0)
    ds, meta = _dataset(cfg, base)
    written = []
    if cfg.get("mode", "rolling") == "rolling":
        records = _rolling(cfg, ds, None, seed)
        report = None
    else:
        targets = cfg.get("targets") or (meta or {}).get("eval_targets")
        if not targets:
            raise ConfigError("targets must be given for recursive forecasting")
        if any(t > ds.n for t in targets):
            raise ConfigError(f"targets beyond the dataset length {ds.n}")
        windows = cfg.get("windows") or (evaluation_windows(meta, targets) if meta else None)
        models = _recursive_models(cfg, meta, seed)
        benchmark = cfg.get("benchmark")
        if benchmark is not None and benchmark not in models:
            raise ConfigError(f"benchmark {benchmark!r} is not a configured model")
        sel_log = []
        records, report = run_recursive_study(ds, models, cfg.get("horizons", [1, 2, 3, 6, 9, 12]),
                                              targets, windows, benchmark, sel_log)
        written.append(_write_json(out / "selection_log.json", sel_log))
        written += [report.to_csv(out / "report.csv"), report.to_json(out / "report.json")]
    written.append(_write_all_forecasts(records, out / "forecasts.csv"))
    return written, {"root": seed}


def _write_all_forecasts(records: dict, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "origin", "target", "h_m", "forecast", "actual"])
        for model in sorted(records):
            for r in records[model]:
                w.writerow([model, r.origin, r.target, r.h_m, repr(float(r.forecast)),
                            repr(float(r.actual))])
    return path


def cmd_gridsearch(cfg, out, base, jobs):
    seed = cfg.get("seed", 0)
    if "dataset" in cfg:
        datasets = [_dataset(cfg, base)[0]]
    else:
        dgp = _dgp(cfg, derive_seed(seed, "data"))
        datasets = [gen_dgp(replace(dgp, seed=derive_seed(dgp.seed, "tune", i)))
                    for i in range(cfg.get("tuning_reps", 5))]
    kind = cfg.get("kind", "fa_lstm")
    grid_cfg = dict(cfg.get("grid", {}))
    grid_cfg.setdefault("timesteps", [cfg.get("timesteps", 1 if kind == "fa_lstm" else 6)])
    grid = HyperGrid.from_dict(grid_cfg)
    h_m = cfg.get("h_m", 1)
    split = cfg.get("split", 0.6)

    def score(choice, s):
        n_train = int(round(split * datasets[0].n))
        tc = TrainConfig(epochs=choice.epochs, dropout=choice.dropout,
                         batch_size=choice.resolved_batch(n_train), cells=choice.cells)
        if kind == "fa_lstm":
            lags = LagSpec.parse(cfg.get("lags", "0:2"))
            est = FaLstmEstimator(choice.timesteps, lags, tc)
            n_feat = sum(lags.width for _ in datasets[0].covariates)
        else:
            est = SaLstmEstimator(choice.timesteps, cfg.get("within_rate", 1), tc)
            n_feat = len(datasets[0].covariates)
        vals = []
        for i, ds in enumerate(datasets):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                recs = rolling_forecast(est, ds, h_m, split, derive_seed(s, "ds", i))
            e = np.array([r.error for r in recs])
            vals.append(float(np.sqrt(np.mean(e * e))))
        return float(np.mean(vals)), choice.n_lstm_params(n_feat)

    choice, table = grid_search(grid, score, cfg.get("repeats", 1), derive_seed(seed, "grid"))
    path = out / "scores.csv"
    cols = ["index", "epochs", "dropout", "batch_size", "cells", "timesteps", "p_m", "p_q",
            "n_params", "score"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in table:
            w.writerow(["" if row[c] is None else
                        ("-".join(map(str, row[c])) if c == "cells" else
                         repr(row[c]) if isinstance(row[c], float) else row[c]) for c in cols])
    return [path, _write_json(out / "choice.json", choice.as_dict())], {"root": seed}


def cmd_montecarlo(cfg, out, base, jobs):
    seed = cfg.get("seed", 0)
    dgp = _dgp(cfg, derive_seed(seed, "data"))
    roster = tuple(cfg.get("roster", PAPER_ROSTER))
    for e in roster:
        if e["kind"] in ("fa_lstm",) and "lags" not in e:
            raise ConfigError(f"roster entry {e} needs 'lags'")
        if e["kind"] in ("fa_lstm", "sa_lstm") and "timesteps" not in e:
            raise ConfigError(f"roster entry {e} needs 'timesteps'")
    hyper = dict(cfg.get("hyper", {}))
    for e in roster:
        if "hyper" in e:
            hyper[entry_name(e)] = e["hyper"]
    kw = {k: cfg[k] for k in ("R", "estimations", "split", "tuning_reps", "midas_spec",
                               "search_jitter", "search_max_iter") if k in cfg}
    try:
        exp = McExperiment(dgp=dgp, horizons=tuple(cfg.get("horizons", [1])), roster=roster,
                           search_lags=tuple(cfg.get("search_lags", range(2, 13))),
                           hyper=hyper or None, jobs=jobs, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = run_monte_carlo(exp, progress=lambda i, n: log.info("replication %d/%d", i, n))
    written = [res.to_csv(out / "results.csv"), res.write_metadata(out / "metadata.json")]
    return written, {"root": seed, "data": dgp.seed}


def _forecast_inputs(cfg, base):
    paths = cfg["forecasts"]
    paths = [paths] if isinstance(paths, str) else paths
    records = {}
    for p in paths:
        for model, recs in read_forecasts(_resolve(base, p)).items():
            if model in records:
                raise ConfigError(f"model {model!r} appears in more than one forecast file")
            records[model] = recs
    bench = cfg.get("benchmark")
    if bench is not None and bench not in records:
        raise ConfigError(f"benchmark {bench!r} not found among models {sorted(records)}")
    return records


def cmd_evaluate(cfg, out, base, jobs):
    report = evaluate(_forecast_inputs(cfg, base), cfg.get("benchmark"), cfg.get("windows"))
    return [report.to_csv(out / "report.csv"), report.to_json(out / "report.json")], {}


def cmd_report(cfg, out, base, jobs):
    report = evaluate(_forecast_inputs(cfg, base), cfg["benchmark"])
    return report.write_cumsfe(out), {}


COMMANDS = {
    "simulate": (cmd_simulate, "simulate a mixed-frequency dataset from the MIDAS DGP"),
    "align": (cmd_align, "frequency- or sampling-align a dataset"),
    "fit": (cmd_fit, "fit a MIDAS, U-MIDAS or AR(1) regression"),
    "forecast": (cmd_forecast, "rolling or recursive out-of-sample forecasts"),
    "gridsearch": (cmd_gridsearch, "LSTM hyperparameter grid search"),
    "montecarlo": (cmd_montecarlo, "Monte Carlo comparison of the estimator roster"),
    "evaluate": (cmd_evaluate, "accuracy report from forecast CSVs"),
    "report": (cmd_report, "CUMSFE plot data against a benchmark"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mflstm", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mflstm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, text) in COMMANDS.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("config", nargs="?", help="JSON config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key by dotted path (value parsed as JSON)")
        p.add_argument("--seed", type=int, help="root seed (overrides the config)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
        p.add_argument("--out", help=f"output directory (default: config output_dir, ${ENV_OUTPUT})")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "fit":
            p.add_argument("--model", choices=["midas", "umidas", "ar1"])
            p.add_argument("--weighting", choices=list(WEIGHTINGS))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = list(args.overrides)
    for flag in ("model", "weighting"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides.append(f"{flag}={json.dumps(value)}")
    func = COMMANDS[args.command][0]
    base = Path(args.config).resolve().parent if args.config else Path.cwd()
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = load_config(args.config, args.command, overrides, args.seed)
        out = output_dir(args.command, args.out, cfg)
        out.mkdir(parents=True, exist_ok=True)
        written, seeds = func(cfg, out, base, args.jobs)
        write_manifest(out, args.command, cfg, seeds, written)
    except ConfigError as exc:
        print(f"mflstm {args.command}: config error: {exc}", file=sys.stderr)
        return 2
    except (MflstmError, ValueError, KeyError, OSError, np.linalg.LinAlgError) as exc:
        print(f"mflstm {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0
