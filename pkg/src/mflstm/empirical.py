"""
Recursive configure-and-forecast protocol for an empirical nowcasting study.

At every forecast target and horizon the model is reconfigured from scratch
on the information available at that point:

1. for each grid combination, LASSO picks the covariates on the combination's
   aligned design (rolling-origin CV), forced ids are added;
2. the sequences are split 80:20, the model is trained on the first part and
   scored by fixed-scheme RMSFE on the rest, averaged over ``repeats`` seeds;
3. the best combination is refitted on all available sequences
   ``n_estimations`` times and the forecasts are averaged.

A synthetic quarterly/monthly dataset with two downturn episodes is bundled
for exercising the pipeline end to end.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .alignment import HorizonSpec, LagSpec, design_to_tensor, frequency_align, sample_align
from .errors import AlignmentError, SelectionError
from .evaluation import ForecastRecord, evaluate
from .lstm import TrainConfig, forward, train
from .midas import ar1_fit
from .selection import HyperChoice, HyperGrid, grid_search, lasso_select
from .series import MixedFrequencyDataset, Series, read_dataset, rng, write_dataset
from .simulation import derive_seed

__all__ = [
    "RecursiveConfig",
    "recursive_forecast",
    "run_recursive_study",
    "make_pseudo_thai",
    "load_pseudo_thai",
    "write_pseudo_thai",
    "evaluation_windows",
    "PSEUDO_THAI_META",
]

MODEL_KINDS = ("fa_lstm", "sa_lstm", "uni_lstm", "ar1")


@dataclass(frozen=True)
class RecursiveConfig:
    kind: str = "fa_lstm"
    grid: HyperGrid = HyperGrid(epochs=(200,), batch_size=("input/2",), cells=((16,),),
                                timesteps=(3,), p_m=(3,), p_q=(1,))
    repeats: int = 3
    n_estimations: int = 100
    split: float = 0.8
    folds: int = 4
    patience: int = 5
    always_include: Mapping[str, int] = field(default_factory=dict)  # id -> first target index
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")


@dataclass
class _Candidate:
    """Training and prediction sequences for one grid combination at one target."""

    train: object
    query: object
    selected: tuple


def _forced(cfg: RecursiveConfig, t: int) -> list[str]:
    return [sid for sid, start in cfg.always_include.items() if t >= start]


def _query(batch, t):
    hit = np.flatnonzero(batch.t == t)
    if hit.size == 0:
        raise AlignmentError(f"no feasible sequence for target {t}")
    return batch.take(hit)


def _training(batch):
    ok = np.flatnonzero(np.isfinite(batch.y))
    if ok.size < 5:
        raise AlignmentError("fewer than 5 training sequences")
    return batch.take(ok)


class _Builder:
    """Aligned designs and LASSO selections cached per lag specification."""

    def __init__(self, info: MixedFrequencyDataset, cfg: RecursiveConfig, h_m: int, t: int):
        self.info, self.cfg, self.h_m, self.t = info, cfg, h_m, t
        self.monthly = [c.id for c in info.covariates if c.ratio > 1]
        self.quarterly = [c.id for c in info.covariates if c.ratio == 1]
        self._cache = {}

    def _selected_design(self, p_m, p_q):
        key = (p_m, p_q)
        if key not in self._cache:
            lags = {sid: LagSpec(0, p_m - 1) for sid in self.monthly}
            ar = None
            if self.cfg.kind == "fa_lstm":
                lags.update({sid: LagSpec(0, p_q - 1) for sid in self.quarterly})
                ar = LagSpec(0, p_q - 1)
            ad = frequency_align(self.info, lags, self.h_m, ar)
            forced = [s for s in _forced(self.cfg, self.t) if s in ad.blocks]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sel = lasso_select(ad, self.cfg.folds, always_include=forced).selected
            if not sel:
                sel = tuple(ad.blocks)
            self._cache[key] = (ad, sel)
        return self._cache[key]

    def candidate(self, c: HyperChoice) -> _Candidate:
        kind = self.cfg.kind
        if kind == "uni_lstm":
            ad = frequency_align(self.info, {}, self.h_m, LagSpec(0, 0))
            batch = design_to_tensor(ad, c.timesteps)
            return _Candidate(_training(batch), _query(batch, self.t), (self.info.target.id,))
        ad, sel = self._selected_design(c.p_m or 3, c.p_q or 1)
        if kind == "fa_lstm":
            batch = design_to_tensor(ad.select(sel), c.timesteps)
        else:
            ids = [s for s in sel if s in self.monthly] or self.monthly
            batch = sample_align(self.info.subset(ids), c.timesteps, self.h_m)
        return _Candidate(_training(batch), _query(batch, self.t), tuple(sel))


def _train_cfg(c: HyperChoice, n_train: int, seed: int, patience) -> TrainConfig:
    return TrainConfig(epochs=c.epochs, dropout=c.dropout, batch_size=c.resolved_batch(n_train),
                       cells=c.cells, patience=patience, seed=seed)


def _validation_score(cand: _Candidate, c: HyperChoice, cfg: RecursiveConfig, seed: int):
    n = len(cand.train)
    cut = int(round(cfg.split * n))
    fit_part = cand.train.take(slice(0, cut))
    val = cand.train.take(slice(cut, None))
    if len(fit_part) < 2 or len(val) < 1:
        raise SelectionError("too few sequences for the 80:20 split")
    net = train(fit_part, _train_cfg(c, len(fit_part), seed, cfg.patience), validation=val)
    err = val.y - forward(net, val)
    return float(np.sqrt(np.mean(err * err))), c.n_lstm_params(cand.train.n_features)


def recursive_forecast(ds: MixedFrequencyDataset, cfg: RecursiveConfig, h_m: int,
                       targets: Sequence[int], log: list | None = None) -> list[ForecastRecord]:
    """
    Forecast each target ``t`` at monthly horizon ``h_m``, reconfiguring the
    model on the information set ``y`` through ``t - h`` and covariate ``k``
    through ``m_k t - h_k``.
    """
    spec = HorizonSpec.from_high_frequency(h_m, ds)
    h = spec.ar_step
    out = []
    for t in targets:
        origin = t - h
        info = ds.information_set(origin, {c.id: c.ratio * t - spec.steps[c.id] for c in ds.covariates})
        actual = float(ds.target.values[t - 1])
        if cfg.kind == "ar1":
            y = np.where(info.target.mask, np.nan, info.target.values)
            fit = ar1_fit(y, h)
            out.append(ForecastRecord(origin, t, h_m, float(fit.predict([[y[origin - 1]]])[0]), actual))
            continue
        builder = _Builder(info, cfg, h_m, t)
        cache = {}

        def score(c: HyperChoice, seed: int):
            if c.index not in cache:
                cache[c.index] = builder.candidate(c)
            return _validation_score(cache[c.index], c, cfg, seed)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            choice, _ = grid_search(cfg.grid, score, cfg.repeats, derive_seed(cfg.seed, "grid", h_m, t))
        cand = cache[choice.index]
        preds = []
        for e in range(cfg.n_estimations):
            seed = derive_seed(cfg.seed, "final", h_m, t, e)
            tc = _train_cfg(choice, len(cand.train), seed, cfg.patience)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                net = train(cand.train, tc, validation=1.0 - cfg.split)
            preds.append(float(forward(net, cand.query)[0]))
        out.append(ForecastRecord(origin, t, h_m, float(np.mean(preds)), actual))
        if log is not None:
            log.append({"target": t, "h_m": h_m, "choice": choice.as_dict(),
                        "selected": list(cand.selected)})
    return out


def run_recursive_study(ds: MixedFrequencyDataset, models: Mapping[str, RecursiveConfig],
                        horizons: Sequence[int], targets: Sequence[int],
                        windows: Mapping[str, Sequence[int]] | None = None,
                        benchmark: str | None = None, log: list | None = None):
    """Forecast records per model over all horizons plus the evaluation report."""
    records = {}
    for name in sorted(models):
        recs = []
        for h_m in horizons:
            sub = [] if log is not None else None
            recs += recursive_forecast(ds, models[name], h_m, targets, sub)
            if log is not None:
                log += [{"model": name, **row} for row in sub]
        records[name] = recs
    report = evaluate(records, benchmark=benchmark, windows=windows)
    return records, report


# --- synthetic dataset ----------------------------------------------------

PSEUDO_THAI_META = "pseudo_thai_meta.json"


def make_pseudo_thai(seed: int = 7, n: int = 64):
    """
    Non-seasonally-adjusted quarterly growth target driven by a monthly common
    factor, eight monthly indicators, two quarterly indicators and two deep
    downturns; the ``tourists`` indicator collapses in the final year.

    Returns ``(dataset, meta)``.
    """
    gen = rng(seed, "pseudo-thai")
    m = 3
    n_hf = m * n
    f = np.zeros(n_hf)
    shock = gen.standard_normal(n_hf)
    downturns = [(int(0.62 * n), int(0.62 * n) + 1), (n - 4, n - 2)]
    hit = np.zeros(n_hf)
    for a, b in downturns:
        hit[m * (a - 1):m * b] = -2.5
    for i in range(n_hf):
        f[i] = (0.6 * f[i - 1] if i else 0.0) + shock[i] + hit[i]
    monthly_ids = ["mpi", "exports", "imports", "tourists", "retail", "credit", "cpi", "capacity"]
    loads = [0.9, 0.8, 0.7, 0.6, 0.5, 0.2, 0.0, 0.4]
    covs = []
    covid_start = m * (n - 4)
    for sid, lam in zip(monthly_ids, loads):
        x = lam * f + gen.standard_normal(n_hf) * 0.6
        if sid == "tourists":
            x[covid_start:] = -4.0 + 0.05 * gen.standard_normal(n_hf - covid_start)
        covs.append(Series(sid, x, m))
    fq = f.reshape(n, m).mean(axis=1)
    for sid, lam in (("invest", 0.8), ("govt", -0.3)):
        covs.append(Series(sid, lam * fq + gen.standard_normal(n) * 0.5, 1))
    season = np.tile([2.5, -1.5, -3.0, 2.0], n // 4 + 1)[:n]
    y = np.empty(n)
    eps = gen.standard_normal(n) * 0.8
    for t in range(n):
        y[t] = 0.8 + season[t] + 2.0 * fq[t] + (0.2 * (y[t - 1] - season[t - 1]) if t else 0.0) + eps[t]
    ds = MixedFrequencyDataset(Series("qgdp", y), tuple(covs))
    down = sorted({t for a, b in downturns for t in range(a, b + 1)})
    meta = {
        "eval_targets": list(range(n - 16 + 1, n + 1)),
        "downturns": down,
        "always_include": {"tourists": n - 4},
    }
    return ds, meta


def load_pseudo_thai():
    """The bundled copy of :func:`make_pseudo_thai` output as ``(dataset, meta)``."""
    base = resources.files("mflstm") / "data"
    with resources.as_file(base) as path:
        ds = read_dataset(Path(path) / "pseudo_thai.json")
        meta = json.loads((Path(path) / PSEUDO_THAI_META).read_text())
    return ds, meta


def write_pseudo_thai(directory, seed: int = 7, n: int = 64) -> Path:
    ds, meta = make_pseudo_thai(seed, n)
    path = write_dataset(ds, directory, "pseudo_thai")
    (Path(directory) / PSEUDO_THAI_META).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def evaluation_windows(meta: Mapping, targets: Sequence[int]) -> dict[str, list[int]]:
    down = set(meta["downturns"])
    return {
        "full": list(targets),
        "excl_downturns": [t for t in targets if t not in down],
        "downturns": [t for t in targets if t in down],
    }
