"""
Frequency alignment and sampling alignment.

Frequency alignment turns each higher-frequency covariate into a block of
low-frequency columns, one per lag. For target period ``t`` the column for lag
``j`` of covariate ``k`` holds ``x_k[m_k * t - h_k - j]`` (1-based), where
``h_k`` is the forecast horizon in that covariate's own units. Rows needing an
index below 1 (or a masked value) are invalid and dropped from estimation.

Sampling alignment builds LSTM sequences directly from single-mismatch raw
data: the sequence for ``y_t`` ends at high-frequency index ``m * t - h_m``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import AlignmentError, MultipleMismatchError, ShapeError
from .series import MixedFrequencyDataset, validate_dataset

__all__ = [
    "LagSpec",
    "HorizonSpec",
    "AlignedDesign",
    "TensorBatch",
    "frequency_align",
    "sample_align",
    "design_to_tensor",
    "write_design_csv",
]


@dataclass(frozen=True)
class LagSpec:
    """Inclusive lag range ``j_min..j_max`` in the variable's own units."""

    j_min: int
    j_max: int

    def __post_init__(self):
        if self.j_min < 0 or self.j_max < self.j_min:
            raise ValueError(f"invalid lag range {self.j_min}..{self.j_max}")

    @property
    def width(self) -> int:
        return self.j_max - self.j_min + 1

    @property
    def lags(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @classmethod
    def parse(cls, value) -> "LagSpec":
        """Accept a LagSpec, ``(lo, hi)``, ``"lo:hi"`` or a single int ``hi`` meaning ``0..hi``."""
        if isinstance(value, LagSpec):
            return value
        if isinstance(value, str):
            lo, hi = value.split(":")
            return cls(int(lo), int(hi))
        if isinstance(value, int):
            return cls(0, value)
        lo, hi = value
        return cls(int(lo), int(hi))


@dataclass(frozen=True)
class HorizonSpec:
    """
    Forecast horizon per covariate (own units) and for the target's AR terms.

    ``steps`` maps covariate id to ``h_k``; ``ar_step`` is the low-frequency
    horizon ``h`` used for lagged targets.
    """

    steps: Mapping[str, int]
    ar_step: int

    @classmethod
    def from_high_frequency(cls, h_m: int, ds: MixedFrequencyDataset) -> "HorizonSpec":
        """
        Horizon ``h_m`` expressed in units of the fastest covariate.

        A covariate with ratio ``m_k`` (fastest ratio ``M``) gets
        ``ceil(h_m * m_k / M)``; AR terms use ``max(1, ceil(h_m / M))`` since
        the current target is never observed. With ``M = 3`` this gives
        ``h = {1,1,1,2,3,4}`` for ``h_m = {1,2,3,6,9,12}``.
        """
        fastest = max(ds.ratios, default=1)
        steps = {c.id: math.ceil(h_m * c.ratio / fastest) for c in ds.covariates}
        return cls(steps, max(1, math.ceil(h_m / fastest)))

    def leading_index(self, sid: str, ratio: int) -> int:
        return max(ratio - self.steps[sid], 0)


@dataclass(frozen=True, eq=False)
class AlignedDesign:
    """
    Low-frequency design matrix from frequency alignment.

    ``X`` has one row per target period ``t = 1..n`` (invalid entries NaN);
    ``columns`` lists ``(series_id, lag)`` in feature order: covariates in
    dataset order with ascending lags, AR block last (id of the target).
    """

    t: np.ndarray
    X: np.ndarray
    y: np.ndarray
    valid: np.ndarray
    columns: tuple[tuple[str, int], ...]
    blocks: dict = field(default_factory=dict)
    ar_id: str | None = None

    @property
    def has_target(self) -> np.ndarray:
        return np.isfinite(self.y)

    @property
    def usable(self) -> np.ndarray:
        """Rows usable for estimation: valid regressors and observed target."""
        return self.valid & self.has_target

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def rows(self, mask=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m = self.usable if mask is None else mask
        return self.t[m], self.X[m], self.y[m]

    def row_of(self, t: int) -> int:
        return int(t) - int(self.t[0])

    def select(self, ids: Sequence[str]) -> "AlignedDesign":
        """Restrict to the blocks of the listed series ids (AR block kept if listed)."""
        keep = [i for i, (sid, _) in enumerate(self.columns) if sid in set(ids)]
        cols = tuple(self.columns[i] for i in keep)
        X = self.X[:, keep]
        valid = np.all(np.isfinite(X), axis=1) if keep else np.ones(len(self.t), bool)
        ar_id = self.ar_id if self.ar_id in set(ids) else None
        return AlignedDesign(self.t, X, self.y, valid, cols, _blocks(cols), ar_id)

    @property
    def covariate_ids(self) -> list[str]:
        return [sid for sid in self.blocks if sid != self.ar_id]


@dataclass(frozen=True, eq=False)
class TensorBatch:
    """Sequences shaped ``(batch, timesteps, features)`` with one target per sequence."""

    X: np.ndarray
    y: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        if self.X.ndim != 3:
            raise ShapeError(f"TensorBatch.X must be 3-D, got shape {self.X.shape}")
        if len(self.y) != self.X.shape[0] or len(self.t) != self.X.shape[0]:
            raise ShapeError("TensorBatch targets and sequences differ in length")

    def __len__(self):
        return self.X.shape[0]

    @property
    def timesteps(self) -> int:
        return self.X.shape[1]

    @property
    def n_features(self) -> int:
        return self.X.shape[2]

    def take(self, idx) -> "TensorBatch":
        return TensorBatch(self.X[idx], self.y[idx], self.t[idx])


def _blocks(columns) -> dict:
    blocks: dict[str, list[int]] = {}
    for i, (sid, _) in enumerate(columns):
        blocks.setdefault(sid, []).append(i)
    return {k: np.array(v) for k, v in blocks.items()}


def _lag_map(lags, ds) -> dict:
    if isinstance(lags, Mapping):
        out = {sid: LagSpec.parse(v) for sid, v in lags.items()}
    elif isinstance(lags, (LagSpec, str, int, tuple)):
        out = {sid: LagSpec.parse(lags) for sid in ds.ids}
    else:
        lags = list(lags)
        if len(lags) != len(ds.covariates):
            raise ShapeError(f"{len(lags)} lag specs for {len(ds.covariates)} covariates")
        out = {c.id: LagSpec.parse(v) for c, v in zip(ds.covariates, lags)}
    unknown = set(out) - set(ds.ids)
    if unknown:
        raise KeyError(f"lag specs for unknown covariates: {sorted(unknown)}")
    return out


def frequency_align(
    ds: MixedFrequencyDataset,
    lags,
    horizon: HorizonSpec | int = 0,
    ar_lags: LagSpec | None = None,
) -> AlignedDesign:
    """
    Frequency-align ``ds`` into an :class:`AlignedDesign`.

    ``lags`` is a LagSpec for every covariate, a sequence in dataset order or a
    mapping id -> LagSpec (covariates absent from a mapping are left out).
    An integer ``horizon`` is read as ``h_m`` in units of the fastest covariate.
    """
    report = validate_dataset(ds)
    if report:
        raise ShapeError("; ".join(report))
    if not isinstance(horizon, HorizonSpec):
        horizon = HorizonSpec.from_high_frequency(int(horizon), ds)
    lag_map = _lag_map(lags, ds)
    n = ds.n
    t = np.arange(1, n + 1)
    blocks_x, columns = [], []
    for c in ds.covariates:
        if c.id not in lag_map:
            continue
        spec = lag_map[c.id]
        last = c.ratio * t - horizon.steps[c.id]
        idx = last[:, None] - np.array(list(spec.lags))[None, :]
        blocks_x.append(_gather(c.values, c.mask, idx))
        columns += [(c.id, j) for j in spec.lags]
    if ar_lags is not None:
        ar_lags = LagSpec.parse(ar_lags)
        idx = (t - horizon.ar_step)[:, None] - np.array(list(ar_lags.lags))[None, :]
        blocks_x.append(_gather(ds.target.values, ds.target.mask, idx))
        columns += [(ds.target.id, j) for j in ar_lags.lags]
    if not columns:
        raise AlignmentError("no regressors requested")
    X = np.hstack(blocks_x)
    valid = np.all(np.isfinite(X), axis=1)
    if not valid.any():
        raise AlignmentError("no feasible rows")
    y = np.where(ds.target.mask, np.nan, ds.target.values)
    cols = tuple(columns)
    ar_id = ds.target.id if ar_lags is not None else None
    return AlignedDesign(t, X, y, valid, cols, _blocks(cols), ar_id)


def _gather(values, mask, idx):
    """Pick 1-based ``idx`` entries from ``values``; out-of-range or masked give NaN."""
    ok = (idx >= 1) & (idx <= len(values))
    safe = np.clip(idx - 1, 0, max(len(values) - 1, 0))
    out = np.where(ok, values[safe] if len(values) else np.nan, np.nan)
    if len(values):
        out = np.where(ok & mask[safe], np.nan, out)
    return out


def sample_align(
    ds: MixedFrequencyDataset,
    timesteps: int,
    h_m: int = 0,
    within_rate: int = 1,
) -> TensorBatch:
    """
    Sequences ending at high-frequency index ``m * t - h_m`` for each target ``t``.

    Successive timesteps are ``within_rate`` indices apart; successive targets
    shift the window by ``m``. Sequences that would need an index below 1, or a
    masked value, are skipped.
    """
    if timesteps < 1 or within_rate < 1:
        raise ValueError("timesteps and within_rate must be >= 1")
    ratios = set(ds.ratios)
    if len(ratios) > 1:
        raise MultipleMismatchError(
            f"sampling alignment needs a single mismatch ratio, got {sorted(ratios)}; "
            "use frequency_align instead"
        )
    if not ds.covariates:
        raise AlignmentError("sampling alignment needs at least one covariate")
    report = validate_dataset(ds)
    if report:
        raise ShapeError("; ".join(report))
    m = ds.covariates[0].ratio
    t = np.arange(1, ds.n + 1)
    ends = m * t - h_m
    offsets = within_rate * np.arange(timesteps - 1, -1, -1)
    idx = ends[:, None] - offsets[None, :]
    feats = np.stack([_gather(c.values, c.mask, idx) for c in ds.covariates], axis=-1)
    ok = np.all(np.isfinite(feats), axis=(1, 2))
    if not ok.any():
        raise AlignmentError("no feasible sequences")
    y = np.where(ds.target.mask, np.nan, ds.target.values)
    return TensorBatch(feats[ok], y[ok], t[ok])


def design_to_tensor(ad: AlignedDesign, timesteps: int) -> TensorBatch:
    """Stack aligned rows ``t - timesteps + 1 .. t`` as the sequence for target ``t``."""
    if timesteps < 1:
        raise ValueError("timesteps must be >= 1")
    n = len(ad.t)
    run = np.zeros(n, dtype=int)
    count = 0
    for i, v in enumerate(ad.valid):
        count = count + 1 if v else 0
        run[i] = count
    ends = np.flatnonzero(run >= timesteps)
    if ends.size == 0:
        raise AlignmentError(f"fewer than {timesteps} consecutive valid rows")
    idx = ends[:, None] - np.arange(timesteps - 1, -1, -1)[None, :]
    return TensorBatch(ad.X[idx], ad.y[ends], ad.t[ends])


def write_design_csv(ad: AlignedDesign, path) -> Path:
    """Write the design with header ``t,<id>_lag<j>...,y,valid``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"{sid}_lag{j}" for sid, j in ad.columns] + ["y", "valid"])
        for i in range(len(ad.t)):
            row = [str(int(ad.t[i]))]
            row += ["" if not np.isfinite(v) else repr(float(v)) for v in ad.X[i]]
            row.append("" if not np.isfinite(ad.y[i]) else repr(float(ad.y[i])))
            row.append("1" if ad.valid[i] else "0")
            w.writerow(row)
    return path
