"""
Monte Carlo DGPs, rolling-origin forecasting and the estimator comparison harness.

Data-generating process: ``K`` high-frequency covariates with ratio ``m``
(iid N(0,1) or AR(1) with persistence ``rho``) and a low-frequency target

    y_t = alpha + sum_k beta_k * sum_{j=0..J} w_k(j) x_k[m t - j] + eps_t

where ``w_k`` are normalized exponential Almon weights on positions 1..J+1
(lag ``j`` sits at position ``j + 1``).

Forecasting follows a fixed-parameter rolling scheme: fit once on the first
``T1`` periods, then for origins ``T1 .. T - h`` forecast ``y`` at ``origin + h``
using covariate information up to index ``m (origin + h) - h_m``.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import presets
from .alignment import (
    HorizonSpec,
    LagSpec,
    design_to_tensor,
    frequency_align,
    sample_align,
)
from .errors import AlignmentError, DegenerateComparisonError, MflstmError, ShapeError
from .evaluation import ForecastRecord, dm_from_differential
from .lstm import TrainConfig, forward, train
from .midas import NON_NORMALIZED, NORMALIZED, almon_weights, ar1_fit, midas_fit, umidas_fit
from .series import MixedFrequencyDataset, Series, rng, stream_seed

__all__ = [
    "DgpConfig",
    "gen_dgp",
    "derive_seed",
    "Estimator",
    "MidasEstimator",
    "UMidasEstimator",
    "Ar1Estimator",
    "FaLstmEstimator",
    "SaLstmEstimator",
    "OracleEstimator",
    "split_sizes",
    "rolling_forecast",
    "MidasSpec",
    "search_midas_spec",
    "McExperiment",
    "McResult",
    "run_monte_carlo",
    "PAPER_ROSTER",
]

THETA2 = (-0.025, -0.1, -0.5)


def derive_seed(seed: int, *names) -> int:
    """A 63-bit integer seed for the named sub-stream of ``seed``."""
    return int(stream_seed(seed, *names).generate_state(1, np.uint64)[0] >> np.uint64(1))


def _low_h(h_m: int, m: int) -> int:
    return max(1, math.ceil(h_m / m))


# --- DGP ------------------------------------------------------------------

@dataclass(frozen=True)
class DgpConfig:
    T: int = 50
    m: int = 3
    K: int = 3
    J: int = 11
    alpha: float = 0.0
    beta: tuple[float, ...] = (0.5, 0.5, 0.5)
    theta: tuple[tuple[float, float], ...] = tuple((0.7, t2) for t2 in THETA2)
    x_process: str = "iid"
    rho: float = 0.9
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "theta", tuple(tuple(float(v) for v in th) for th in self.theta))
        if self.T < 20:
            raise ValueError("T must be at least 20")
        if self.J >= self.m * self.T:
            raise ValueError("J must be below m * T")
        if len(self.beta) != self.K or len(self.theta) != self.K:
            raise ValueError(f"need {self.K} beta and theta entries")
        if self.x_process not in ("iid", "ar1"):
            raise ValueError(f"x_process must be 'iid' or 'ar1', got {self.x_process!r}")
        if self.x_process == "ar1" and not abs(self.rho) < 1:
            raise ValueError("AR(1) persistence must satisfy |rho| < 1")

    @property
    def ids(self) -> list[str]:
        return [f"x{k + 1}" for k in range(self.K)]

    def weights(self, k: int) -> np.ndarray:
        """Weights on lags 0..J for covariate ``k``."""
        return almon_weights(self.theta[k], self.J + 1, normalized=True)


def _draw_x(cfg: DgpConfig, k: int, length: int) -> np.ndarray:
    gen = rng(cfg.seed, "x", k)
    e = gen.standard_normal(length)
    if cfg.x_process == "iid":
        return e
    x = np.empty(length)
    # stationary start
    prev = gen.standard_normal() / math.sqrt(1.0 - cfg.rho ** 2)
    for i in range(length):
        prev = cfg.rho * prev + e[i]
        x[i] = prev
    return x


def gen_dgp(cfg: DgpConfig) -> MixedFrequencyDataset:
    """
    Simulate one dataset. ``J`` presample high-frequency values are drawn and
    discarded so that every ``y_t``, ``t >= 1``, has its full lag window.
    """
    n_hf = cfg.m * cfg.T
    signal = np.full(cfg.T, cfg.alpha)
    covs = []
    last = cfg.m * np.arange(1, cfg.T + 1) + cfg.J  # positions in the extended array (0-based)
    for k, sid in enumerate(cfg.ids):
        x_ext = _draw_x(cfg, k, n_hf + cfg.J)
        w = cfg.weights(k)
        window = x_ext[last[:, None] - np.arange(cfg.J + 1)[None, :] - 1]
        signal = signal + cfg.beta[k] * (window @ w)
        covs.append(Series(sid, x_ext[cfg.J:], cfg.m))
    eps = rng(cfg.seed, "noise").standard_normal(cfg.T) * cfg.noise_sd
    return MixedFrequencyDataset(Series("y", signal + eps), tuple(covs))


# --- estimators -----------------------------------------------------------

class Estimator:
    """
    Interface: ``fit(ds, h_m, seed)`` returns an object whose
    ``predict(ds_info, t)`` gives the forecast of ``y_t`` from the data
    visible in ``ds_info``.
    """

    name: str = "estimator"
    stochastic: bool = False

    def fit(self, ds: MixedFrequencyDataset, h_m: int, seed: int):  # pragma: no cover
        raise NotImplementedError


def _row(ad, t):
    i = ad.row_of(t)
    if not 0 <= i < len(ad.t) or not ad.valid[i]:
        raise AlignmentError(f"no valid aligned row for t={t}")
    return ad.X[i:i + 1]


@dataclass
class _RegFitted:
    fit: object
    lags: Mapping
    h_m: int

    def predict(self, ds, t):
        ad = frequency_align(ds, self.lags, self.h_m)
        return float(self.fit.predict(_row(ad, t))[0])


@dataclass
class MidasEstimator(Estimator):
    ids: tuple[str, ...] = ("x1", "x2")
    n_lags: int = 3
    weighting: str = NORMALIZED
    n_jitter: int = 2
    max_iter: int = 200
    name: str = "MIDAS"

    def lags(self):
        return {sid: LagSpec(0, self.n_lags - 1) for sid in self.ids}

    def fit(self, ds, h_m, seed):
        ad = frequency_align(ds, self.lags(), h_m)
        f = midas_fit(ad, self.weighting, seed=seed, n_jitter=self.n_jitter, max_iter=self.max_iter)
        return _RegFitted(f, self.lags(), h_m)


@dataclass
class UMidasEstimator(Estimator):
    ids: tuple[str, ...] = ("x1", "x2")
    n_lags: int = 3
    name: str = "U-MIDAS"

    def lags(self):
        return {sid: LagSpec(0, self.n_lags - 1) for sid in self.ids}

    def fit(self, ds, h_m, seed):
        ad = frequency_align(ds, self.lags(), h_m)
        return _RegFitted(umidas_fit(ad), self.lags(), h_m)


@dataclass
class _Ar1Fitted:
    fit: object

    def predict(self, ds, t):
        h = self.fit.h
        if not ds.target.available(t - h):
            raise AlignmentError(f"y_{t - h} not available")
        return float(self.fit.predict([[ds.target.values[t - h - 1]]])[0])


@dataclass
class Ar1Estimator(Estimator):
    name: str = "AR(1)"

    def fit(self, ds, h_m, seed):
        h = HorizonSpec.from_high_frequency(h_m, ds).ar_step
        y = np.where(ds.target.mask, np.nan, ds.target.values)
        return _Ar1Fitted(ar1_fit(y, h))


@dataclass
class _LstmFitted:
    net: object
    make_batch: object

    def predict(self, ds, t):
        batch = self.make_batch(ds)
        hit = np.flatnonzero(batch.t == t)
        if hit.size == 0:
            raise AlignmentError(f"no feasible sequence for t={t}")
        return float(forward(self.net, batch.take(hit))[0])


def _trainable(batch):
    ok = np.isfinite(batch.y)
    if ok.sum() < 2:
        raise AlignmentError("fewer than 2 training sequences")
    return batch.take(np.flatnonzero(ok))


@dataclass
class FaLstmEstimator(Estimator):
    """LSTM on frequency-aligned rows stacked ``timesteps`` deep."""

    timesteps: int = 1
    lags: LagSpec = LagSpec(0, 0)
    config: TrainConfig = TrainConfig()
    name: str = "FA-LSTM"
    stochastic: bool = True

    def _batch(self, ds, h_m):
        return design_to_tensor(frequency_align(ds, self.lags, h_m), self.timesteps)

    def fit(self, ds, h_m, seed):
        batch = _trainable(self._batch(ds, h_m))
        net = train(batch, replace(self.config, seed=seed))
        return _LstmFitted(net, lambda d: self._batch(d, h_m))


@dataclass
class SaLstmEstimator(Estimator):
    """LSTM on sampling-aligned raw high-frequency sequences."""

    timesteps: int = 6
    within_rate: int = 1
    config: TrainConfig = TrainConfig()
    name: str = "SA-LSTM"
    stochastic: bool = True

    def _batch(self, ds, h_m):
        return sample_align(ds, self.timesteps, h_m, self.within_rate)

    def fit(self, ds, h_m, seed):
        batch = _trainable(self._batch(ds, h_m))
        net = train(batch, replace(self.config, seed=seed))
        return _LstmFitted(net, lambda d: self._batch(d, h_m))


@dataclass
class _OracleFitted:
    cfg: DgpConfig

    def predict(self, ds, t):
        cfg = self.cfg
        out = cfg.alpha
        for k, c in enumerate(ds.covariates):
            avail = np.flatnonzero(~c.mask)
            known = int(avail[-1]) + 1 if avail.size else 0
            w = cfg.weights(k)
            for j in range(cfg.J + 1):
                tau = cfg.m * t - j
                if tau < 1:
                    continue
                if tau <= known:
                    xv = c.values[tau - 1]
                elif cfg.x_process == "ar1" and known >= 1:
                    xv = cfg.rho ** (tau - known) * c.values[known - 1]
                else:
                    xv = 0.0
                out += cfg.beta[k] * w[j] * xv
        return float(out)


@dataclass
class OracleEstimator(Estimator):
    """Conditional mean of ``y_t`` under the true DGP given the visible covariates."""

    cfg: DgpConfig = DgpConfig()
    name: str = "oracle"

    def fit(self, ds, h_m, seed):
        return _OracleFitted(self.cfg)


# --- rolling forecast -----------------------------------------------------

def split_sizes(T: int, split: float = 0.6) -> tuple[int, int]:
    """``(T1, T2)`` with ``T1 = round(split * T)``; T=50 gives (30, 20)."""
    T1 = int(round(split * T))
    if not 1 <= T1 < T:
        raise ShapeError(f"split {split} leaves no evaluation sample for T={T}")
    return T1, T - T1


def _hf_last(ds, spec: HorizonSpec, t: int) -> dict[str, int]:
    return {c.id: c.ratio * t - spec.steps[c.id] for c in ds.covariates}


def rolling_forecast(estimator: Estimator, ds: MixedFrequencyDataset, h_m: int,
                     split: float = 0.6, seed: int = 0) -> list[ForecastRecord]:
    """
    Fit once on targets ``1..T1`` and forecast each ``y_{T1+Omega+h}``,
    ``Omega = 0..T2-h``, without re-estimation. At each origin the dataset
    passed to the fitted model has the target masked after the origin and each
    covariate masked after index ``m_k (T1+Omega+h) - h_k``.
    """
    spec = HorizonSpec.from_high_frequency(h_m, ds)
    h = spec.ar_step
    T1, T2 = split_sizes(ds.n, split)
    if T2 < h:
        raise ShapeError(f"evaluation sample {T2} shorter than horizon {h}")
    train_ds = ds.information_set(T1, _hf_last(ds, spec, T1))
    fitted = estimator.fit(train_ds, h_m, seed)
    records = []
    for omega in range(0, T2 - h + 1):
        origin = T1 + omega
        t = origin + h
        info = ds.information_set(origin, _hf_last(ds, spec, t))
        try:
            yhat = fitted.predict(info, t)
        except AlignmentError as exc:
            warnings.warn(f"origin {origin} skipped: {exc}", stacklevel=2)
            continue
        records.append(ForecastRecord(origin, t, h_m, yhat, float(ds.target.values[t - 1])))
    return records


# --- MIDAS specification search ------------------------------------------

@dataclass(frozen=True)
class MidasSpec:
    ids: tuple[str, ...]
    n_lags: int
    weighting: str

    def label(self) -> str:
        return f"{'+'.join(self.ids)} lags={self.n_lags} {self.weighting}"


def midas_candidates(ids: Sequence[str], lag_counts=range(2, 13),
                     weightings=(NORMALIZED, NON_NORMALIZED), pair_size: int = 2):
    for n_lags in lag_counts:
        for pair in itertools.combinations(ids, pair_size):
            for w in weightings:
                yield MidasSpec(tuple(pair), int(n_lags), w)


def search_midas_spec(datasets: Sequence[MixedFrequencyDataset], h_m: int, split: float = 0.6,
                      candidates=None, seed: int = 0, n_jitter: int = 0, max_iter: int = 100):
    """
    Pick the MIDAS spec with the lowest mean fixed-scheme MSFE over ``datasets``.

    Returns ``(best_spec, scores)`` with ``scores`` a list of ``(spec, msfe)``
    in candidate order; a spec failing on any dataset scores ``inf``. Ties go
    to the earlier candidate.
    """
    if candidates is None:
        candidates = list(midas_candidates(datasets[0].ids))
    scores = []
    for spec in candidates:
        est = MidasEstimator(spec.ids, spec.n_lags, spec.weighting, n_jitter=n_jitter, max_iter=max_iter)
        total = 0.0
        for i, ds in enumerate(datasets):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    recs = rolling_forecast(est, ds, h_m, split, derive_seed(seed, "search", i))
                e = np.array([r.error for r in recs])
                total += float(np.mean(e * e)) if e.size else math.inf
            except (MflstmError, ValueError, np.linalg.LinAlgError):
                total = math.inf
                break
        scores.append((spec, total / len(datasets)))
    best = min(range(len(scores)), key=lambda i: (scores[i][1], i))
    if not math.isfinite(scores[best][1]):
        raise MflstmError("every MIDAS specification failed during the search")
    return scores[best][0], scores


# --- Monte Carlo ----------------------------------------------------------

PAPER_ROSTER = (
    {"kind": "midas"},
    {"kind": "umidas"},
    {"kind": "sa_lstm", "timesteps": 6},
    {"kind": "sa_lstm", "timesteps": 12},
    {"kind": "fa_lstm", "timesteps": 4, "lags": "0:2"},
    {"kind": "fa_lstm", "timesteps": 2, "lags": "0:5"},
    {"kind": "fa_lstm", "timesteps": 1, "lags": "0:11"},
)


def entry_name(entry: Mapping) -> str:
    if "name" in entry:
        return entry["name"]
    kind = entry["kind"]
    if kind == "sa_lstm":
        return f"SA-LSTM[{entry['timesteps']},0:0]"
    if kind == "fa_lstm":
        lag = LagSpec.parse(entry["lags"])
        return f"FA-LSTM[{entry['timesteps']},{lag.j_min}:{lag.j_max}]"
    return {"midas": "MIDAS", "umidas": "U-MIDAS", "ar1": "AR(1)", "oracle": "oracle"}[kind]


@dataclass(frozen=True)
class McExperiment:
    dgp: DgpConfig = DgpConfig()
    horizons: tuple[int, ...] = (1,)
    roster: tuple = PAPER_ROSTER
    R: int = 50
    estimations: int = 2
    split: float = 0.6
    tuning_reps: int = 20
    midas_spec: Mapping | None = None  # fixed spec instead of searching
    search_lags: tuple[int, ...] = tuple(range(2, 13))
    search_jitter: int = 0
    search_max_iter: int = 100
    hyper: Mapping | None = None  # name -> {"epochs", "dropout", "batch_size", "cells"}
    jobs: int = 1

    def __post_init__(self):
        if not self.roster:
            raise ValueError("roster must not be empty")
        T1, T2 = split_sizes(self.dgp.T, self.split)
        h_max = max(_low_h(h, self.dgp.m) for h in self.horizons)
        if T2 < h_max + 1:
            raise ValueError(f"evaluation sample T2={T2} too short for horizon {h_max}")
        names = [entry_name(e) for e in self.roster]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate estimator names in roster: {names}")


def _train_config(exp: McExperiment, name: str, h_m: int, seed: int) -> TrainConfig:
    override = (exp.hyper or {}).get(name)
    if override is not None:
        return TrainConfig(epochs=int(override["epochs"]), dropout=float(override["dropout"]),
                           batch_size=int(override["batch_size"]), cells=tuple(override["cells"])
                           if isinstance(override["cells"], (list, tuple)) else (int(override["cells"]),),
                           seed=seed)
    hit = presets.preset(exp.dgp.x_process, exp.dgp.T, h_m, name)
    if hit is None:
        return TrainConfig(epochs=25, dropout=0.0, batch_size=16, cells=(16,), seed=seed)
    e, d, b, c = hit
    return TrainConfig(epochs=e, dropout=d, batch_size=b, cells=(c,), seed=seed)


def build_estimator(entry: Mapping, exp: McExperiment, h_m: int, midas: MidasSpec | None):
    kind = entry["kind"]
    name = entry_name(entry)
    if kind == "midas":
        return MidasEstimator(midas.ids, midas.n_lags, midas.weighting, name=name)
    if kind == "umidas":
        return UMidasEstimator(midas.ids, midas.n_lags, name=name)
    if kind == "ar1":
        return Ar1Estimator(name=name)
    if kind == "oracle":
        return OracleEstimator(exp.dgp, name=name)
    cfg = _train_config(exp, name, h_m, 0)
    if kind == "fa_lstm":
        return FaLstmEstimator(int(entry["timesteps"]), LagSpec.parse(entry["lags"]), cfg, name=name)
    if kind == "sa_lstm":
        return SaLstmEstimator(int(entry["timesteps"]), int(entry.get("within_rate", 1)), cfg, name=name)
    raise ValueError(f"unknown estimator kind {kind!r}")


def _rep_dgp(exp: McExperiment, tag: str, r: int) -> DgpConfig:
    return replace(exp.dgp, seed=derive_seed(exp.dgp.seed, tag, r))


def _run_replication(exp: McExperiment, r: int, midas_specs: Mapping[int, MidasSpec]):
    """Errors per (name, h_m): list over estimations of per-origin arrays, or an error string."""
    ds = gen_dgp(_rep_dgp(exp, "rep", r))
    out = {}
    for h_m in exp.horizons:
        spec = HorizonSpec.from_high_frequency(h_m, ds)
        T1, T2 = split_sizes(ds.n, exp.split)
        n_orig = T2 - spec.ar_step + 1
        for entry in exp.roster:
            name = entry_name(entry)
            est = build_estimator(entry, exp, h_m, midas_specs.get(h_m))
            runs = exp.estimations if est.stochastic else 1
            errs = []
            try:
                for e in range(runs):
                    seed = derive_seed(exp.dgp.seed, "est", name, h_m, r, e)
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        recs = rolling_forecast(est, ds, h_m, exp.split, seed)
                    arr = np.full(n_orig, np.nan)
                    for rec in recs:
                        arr[rec.origin - T1] = rec.error
                    if not np.all(np.isfinite(arr)):
                        raise MflstmError("non-finite or missing forecasts")
                    errs.append(arr)
                out[(name, h_m)] = errs
            except (MflstmError, ValueError, np.linalg.LinAlgError) as exc:
                out[(name, h_m)] = f"{type(exc).__name__}: {exc}"
    return out


@dataclass
class McResult:
    rows: list[dict]
    metadata: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    COLUMNS = ("estimator", "h_m", "T", "mean_rmsfe", "sd", "n_fail", "dm_vs_midas_p")

    def row(self, estimator: str, h_m: int) -> dict:
        for r in self.rows:
            if r["estimator"] == estimator and r["h_m"] == h_m:
                return r
        raise KeyError((estimator, h_m))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for r in self.rows:
                w.writerow([_fmt(r[c]) for c in self.COLUMNS])
        return path

    def write_metadata(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.metadata, indent=1, sort_keys=True) + "\n")
        return path


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.10g}"
    return str(v)


def _tuning_sets(exp: McExperiment):
    return [gen_dgp(_rep_dgp(exp, "tune", i)) for i in range(exp.tuning_reps)]


def run_monte_carlo(exp: McExperiment, progress=None) -> McResult:
    """
    Run every roster estimator on ``R`` simulated datasets per horizon.

    Per estimator and horizon: RMSFE is averaged over the estimations of each
    replication, then mean and (n-denominator) sd are taken across successful
    replications. The DM p-value against MIDAS uses per-origin squared-error
    differentials averaged across replications (and estimations).
    """
    kinds = {e["kind"] for e in exp.roster}
    midas_specs: dict[int, MidasSpec] = {}
    search_meta = {}
    if kinds & {"midas", "umidas"}:
        if exp.midas_spec is not None:
            fixed = MidasSpec(tuple(exp.midas_spec["ids"]), int(exp.midas_spec["n_lags"]),
                              exp.midas_spec.get("weighting", NORMALIZED))
            midas_specs = {h: fixed for h in exp.horizons}
        else:
            tuning = _tuning_sets(exp)
            for h_m in exp.horizons:
                cands = list(midas_candidates(exp.dgp.ids, exp.search_lags))
                best, scores = search_midas_spec(tuning, h_m, exp.split, cands,
                                                 seed=derive_seed(exp.dgp.seed, "search", h_m),
                                                 n_jitter=exp.search_jitter, max_iter=exp.search_max_iter)
                midas_specs[h_m] = best
                search_meta[str(h_m)] = {"chosen": best.label(),
                                         "msfe": min(s for _, s in scores)}

    if exp.jobs > 1:
        with ProcessPoolExecutor(max_workers=exp.jobs) as pool:
            futures = [pool.submit(_run_replication, exp, r, midas_specs) for r in range(exp.R)]
            results = [f.result() for f in futures]
    else:
        results = []
        for r in range(exp.R):
            results.append(_run_replication(exp, r, midas_specs))
            if progress is not None:
                progress(r + 1, exp.R)

    names = sorted(entry_name(e) for e in exp.roster)
    rows, failures = [], {}
    for h_m in exp.horizons:
        midas_loss = {}
        if "MIDAS" in names:
            for r, res in enumerate(results):
                v = res[("MIDAS", h_m)]
                if not isinstance(v, str):
                    midas_loss[r] = np.mean([e * e for e in v], axis=0)
        for name in names:
            per_rep, diffs, fails = [], [], []
            for r, res in enumerate(results):
                v = res[(name, h_m)]
                if isinstance(v, str):
                    fails.append({"replication": r, "error": v})
                    continue
                per_rep.append(float(np.mean([math.sqrt(np.mean(e * e)) for e in v])))
                if name != "MIDAS" and r in midas_loss:
                    diffs.append(np.mean([e * e for e in v], axis=0) - midas_loss[r])
            p = None
            if diffs:
                d = np.mean(diffs, axis=0)
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        _, p = dm_from_differential(d, _low_h(h_m, exp.dgp.m))
                except (DegenerateComparisonError, ShapeError):
                    p = None
            rows.append({
                "estimator": name, "h_m": h_m, "T": exp.dgp.T,
                "mean_rmsfe": float(np.mean(per_rep)) if per_rep else float("nan"),
                "sd": float(np.std(per_rep)) if per_rep else float("nan"),
                "n_fail": len(fails), "dm_vs_midas_p": p,
            })
            if fails:
                failures[f"{name}|h{h_m}"] = fails
    metadata = {
        "dgp": asdict(exp.dgp),
        "R": exp.R,
        "estimations": exp.estimations,
        "split": exp.split,
        "horizons": list(exp.horizons),
        "roster": names,
        "midas_spec": {str(h): s.label() for h, s in sorted(midas_specs.items())},
        "midas_search": search_meta,
        "tuning_reps": exp.tuning_reps,
        "dm_method": "pooled: per-origin squared-error differentials averaged across "
                     "replications and estimations, HAC truncation h-1, normal reference",
        "sd_method": "population sd across replications of per-replication mean RMSFE",
        "failures": failures,
    }
    return McResult(rows, metadata)
