"""
Forecast accuracy metrics and pairwise comparison.

All functions are pure. Error series are ``actual - forecast``.
"""

from __future__ import annotations

import csv
import json
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import DegenerateComparisonError, DomainError, ShapeError

__all__ = [
    "ForecastRecord",
    "errors_of",
    "rmsfe",
    "msfe",
    "relative_mse",
    "relative_rmsfe",
    "dm_test",
    "dm_from_differential",
    "cumsfe",
    "annualize",
    "ANNUAL_SCHEDULE",
    "annual_inputs",
    "EvaluationReport",
    "evaluate",
    "read_forecasts",
    "write_forecasts",
]


@dataclass(frozen=True)
class ForecastRecord:
    origin: int
    target: int
    h_m: int
    forecast: float
    actual: float

    @property
    def error(self) -> float:
        return self.actual - self.forecast


def errors_of(records) -> np.ndarray:
    """Forecast errors from records, or the input itself when it is already numeric."""
    if len(records) and isinstance(records[0], ForecastRecord):
        return np.array([r.error for r in records], float)
    return np.asarray(records, float)


def msfe(records) -> float:
    e = errors_of(records)
    if e.size == 0:
        raise ShapeError("need at least one forecast")
    return float(np.mean(e * e))


def rmsfe(records) -> float:
    """Root mean squared forecast error."""
    return math.sqrt(msfe(records))


def relative_mse(records, y_eval) -> float:
    """MSFE divided by the n-denominator variance of the evaluation-window actuals."""
    y = np.asarray(y_eval, float)
    var = float(np.var(y))
    if not var > 0:
        raise DomainError("evaluation actuals have zero variance")
    return msfe(records) / var


def relative_rmsfe(records_model, records_bench) -> float:
    a = errors_of(records_model)
    b = errors_of(records_bench)
    if a.shape == b.shape and np.array_equal(a, b):
        return 1.0
    return rmsfe(a) / rmsfe(b)


def dm_test(errors_a, errors_b, h: int = 1, loss: str = "squared",
            hln: bool = False) -> tuple[float, float]:
    """
    Diebold-Mariano test of equal predictive accuracy.

    ``d_t = L(e_a,t) - L(e_b,t)``; a positive statistic means model ``a`` has
    the larger loss. The long-run variance uses autocovariances up to lag
    ``h - 1`` with unit (rectangular) weights. ``hln`` applies the
    Harvey-Leybourne-Newbold small-sample factor and a Student-t reference.

    Returns ``(statistic, two-sided p-value)``.
    """
    a = errors_of(errors_a)
    b = errors_of(errors_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(f"error series must be equal-length vectors, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise ShapeError("dm_test needs at least 2 paired errors")
    if n < 5:
        warnings.warn(f"dm_test on only {n} pairs; the normal reference is unreliable", stacklevel=2)
    if loss == "squared":
        d = a * a - b * b
    elif loss == "absolute":
        d = np.abs(a) - np.abs(b)
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return dm_from_differential(d, h, hln)


def dm_from_differential(d, h: int = 1, hln: bool = False) -> tuple[float, float]:
    """DM statistic and two-sided p-value for a given loss-differential series."""
    d = np.asarray(d, float)
    n = d.size
    if n < 2:
        raise ShapeError("need at least 2 loss differentials")
    if not np.any(d):
        raise DegenerateComparisonError("loss differential is identically zero")
    dbar = d.mean()
    dc = d - dbar
    gamma = [float(dc @ dc) / n]
    for k in range(1, min(max(int(h), 1), n)):
        gamma.append(float(dc[k:] @ dc[:-k]) / n)
    v = gamma[0] + 2.0 * sum(gamma[1:])
    if not v > 0:
        warnings.warn("long-run variance estimate not positive; using lag-0 variance", stacklevel=2)
        v = gamma[0]
    if not v > 0:
        raise DegenerateComparisonError("loss differential has zero variance")
    stat = dbar / math.sqrt(v / n)
    if hln:
        k = max(int(h), 1)
        stat *= math.sqrt((n + 1 - 2 * k + k * (k - 1) / n) / n)
        p = 2.0 * stats.t.sf(abs(stat), df=n - 1)
    else:
        p = 2.0 * stats.norm.sf(abs(stat))
    return float(stat), float(min(p, 1.0))


def cumsfe(errors_bench, errors_model) -> np.ndarray:
    """Running sum of ``e_bench^2 - e_model^2``; positive means the model is ahead."""
    b = errors_of(errors_bench)
    m = errors_of(errors_model)
    if b.shape != m.shape:
        raise ShapeError(f"length mismatch: {b.shape} vs {m.shape}")
    return np.cumsum(b * b - m * m)


# --- annualization --------------------------------------------------------

# For an annual projection made h_m months before year end: number of quarters
# already known as actuals, then the monthly horizon of the forecast used for
# each remaining quarter.
ANNUAL_SCHEDULE: dict[int, tuple[int, tuple[int, ...]]] = {
    12: (0, (3, 6, 9, 12)),
    9: (1, (3, 6, 9)),
    6: (2, (3, 6)),
    3: (3, (3,)),
    1: (3, (1,)),
}


def annualize(quarterly_actuals, quarterly_forecasts, base_year_levels) -> float:
    """
    Annual growth (%) from four quarterly growth rates of the current year.

    ``quarterly_actuals`` are the known growth rates of the first quarters,
    ``quarterly_forecasts`` the forecasts for the remaining ones; together
    they must cover exactly four quarters. Levels are rebuilt by compounding
    from the last prior-year level, and annual growth compares the sums of
    quarterly levels.
    """
    act = [float(v) for v in quarterly_actuals]
    fc = [float(v) for v in quarterly_forecasts]
    if len(act) + len(fc) != 4:
        raise ShapeError(f"need 4 quarters, got {len(act)} actual + {len(fc)} forecast")
    base = np.asarray(base_year_levels, float)
    if base.shape != (4,):
        raise ShapeError("base_year_levels must hold the 4 prior-year quarterly levels")
    if np.any(~(base > 0)):
        raise DomainError("base-year levels must be positive")
    level = base[-1]
    levels = []
    for g in act + fc:
        level = level * (1.0 + g / 100.0)
        levels.append(level)
    return 100.0 * (sum(levels) / base.sum() - 1.0)


def annual_inputs(h_m: int, actual_growth, forecasts_by_horizon: Mapping[int, Sequence[float]]):
    """
    Pick actuals and forecasts for one year according to ``ANNUAL_SCHEDULE``.

    ``actual_growth`` holds the year's four actual quarterly growth rates and
    ``forecasts_by_horizon[k]`` the year's four quarterly forecasts made at
    monthly horizon ``k``. Returns ``(actuals, forecasts)`` for :func:`annualize`.
    """
    if h_m not in ANNUAL_SCHEDULE:
        raise DomainError(f"no annual schedule for h_m={h_m}")
    known, horizons = ANNUAL_SCHEDULE[h_m]
    actual_growth = list(actual_growth)
    actuals = actual_growth[:known]
    forecasts = []
    for q, k in enumerate(horizons, start=known):
        if k not in forecasts_by_horizon:
            raise ShapeError(f"missing forecasts at horizon {k}")
        forecasts.append(forecasts_by_horizon[k][q])
    return actuals, forecasts


# --- reports --------------------------------------------------------------

@dataclass
class EvaluationReport:
    """Per model x horizon accuracy table plus CUMSFE trajectories."""

    rows: list[dict] = field(default_factory=list)
    cumsfe: dict[tuple[str, int], list[float]] = field(default_factory=dict)
    benchmark: str | None = None
    windows: dict = field(default_factory=dict)

    COLUMNS = ("window", "model", "h_m", "n", "rmsfe", "relative_rmsfe", "relative_mse",
               "dm_stat", "dm_p")

    def row(self, model: str, h_m: int, window: str = "full") -> dict:
        for r in self.rows:
            if r["model"] == model and r["h_m"] == h_m and r["window"] == window:
                return r
        raise KeyError((model, h_m, window))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for r in self.rows:
                w.writerow([_cell(r.get(c)) for c in self.COLUMNS])
        return path

    def to_json(self, path) -> Path:
        doc = {
            "benchmark": self.benchmark,
            "windows": self.windows,
            "rows": self.rows,
            "cumsfe": [
                {"model": m, "h_m": h, "values": v} for (m, h), v in sorted(self.cumsfe.items())
            ],
        }
        path = Path(path)
        path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=_jsonable) + "\n")
        return path

    def write_cumsfe(self, directory) -> list[Path]:
        """One ``x,y`` CSV per (model, horizon) for external plotting."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        out = []
        for (model, h), values in sorted(self.cumsfe.items()):
            slug = re.sub(r"[^A-Za-z0-9.-]+", "_", model).strip("_")
            p = directory / f"cumsfe_{slug}_h{h}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["x", "y"])
                for x, y in enumerate(values, start=1):
                    w.writerow([x, repr(float(y))])
            out.append(p)
        return out


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(type(v))


def evaluate(forecasts: Mapping[str, Sequence[ForecastRecord]], benchmark: str | None = None,
             windows: Mapping[str, Iterable[int]] | None = None) -> EvaluationReport:
    """
    Build an :class:`EvaluationReport` from records keyed by model name.

    ``windows`` maps a window name to the set of target indices it covers;
    by default there is a single ``full`` window. The benchmark row gets
    relative RMSFE 1 and no DM entry.
    """
    windows = {"full": None} if windows is None else {k: set(v) for k, v in windows.items()}
    report = EvaluationReport(benchmark=benchmark,
                              windows={k: (None if v is None else sorted(v)) for k, v in windows.items()})
    models = sorted(forecasts)
    if benchmark is not None and benchmark not in forecasts:
        raise KeyError(f"benchmark {benchmark!r} has no forecasts")
    first_window = next(iter(windows))
    for wname, wset in windows.items():
        for model in models:
            by_h: dict[int, list[ForecastRecord]] = {}
            for r in forecasts[model]:
                if wset is None or r.target in wset:
                    by_h.setdefault(r.h_m, []).append(r)
            for h in sorted(by_h):
                recs = sorted(by_h[h], key=lambda r: r.target)
                row = {"window": wname, "model": model, "h_m": h, "n": len(recs),
                       "rmsfe": rmsfe(recs), "relative_rmsfe": None, "relative_mse": None,
                       "dm_stat": None, "dm_p": None}
                actuals = [r.actual for r in recs]
                if len(recs) > 1 and np.var(actuals) > 0:
                    row["relative_mse"] = relative_mse(recs, actuals)
                if benchmark is not None:
                    bench = {r.target: r for r in forecasts[benchmark]
                             if r.h_m == h and (wset is None or r.target in wset)}
                    common = [r for r in recs if r.target in bench]
                    if common:
                        b = [bench[r.target] for r in common]
                        row["relative_rmsfe"] = relative_rmsfe(common, b)
                        if model != benchmark:
                            if wname == first_window:
                                report.cumsfe[(model, h)] = cumsfe(b, common).tolist()
                            try:
                                with warnings.catch_warnings():
                                    warnings.simplefilter("ignore")
                                    stat, p = dm_test(common, b, h=_low_freq_h(h))
                                row["dm_stat"], row["dm_p"] = stat, p
                            except (DegenerateComparisonError, ShapeError):
                                pass
                report.rows.append(row)
    return report


def _low_freq_h(h_m: int, m: int = 3) -> int:
    """Low-frequency horizon used for the DM truncation lag."""
    return max(1, math.ceil(h_m / m))


# --- forecast CSV ---------------------------------------------------------

FORECAST_COLUMNS = ("origin", "target", "h_m", "forecast", "actual")


def write_forecasts(records: Sequence[ForecastRecord], path, model: str | None = None) -> Path:
    path = Path(path)
    cols = (("model",) if model is not None else ()) + FORECAST_COLUMNS
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            row = [r.origin, r.target, r.h_m, repr(float(r.forecast)), repr(float(r.actual))]
            w.writerow(([model] if model is not None else []) + row)
    return path


def read_forecasts(path, default_model: str | None = None) -> dict[str, list[ForecastRecord]]:
    """Read ``[model,]origin,target,h_m,forecast,actual`` rows grouped by model."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in FORECAST_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ShapeError(f"{path}: missing columns {missing}")
        out: dict[str, list[ForecastRecord]] = {}
        for row in reader:
            model = row.get("model") or default_model or path.stem
            out.setdefault(model, []).append(ForecastRecord(
                int(row["origin"]), int(row["target"]), int(row["h_m"]),
                float(row["forecast"]), float(row["actual"])))
    return out
