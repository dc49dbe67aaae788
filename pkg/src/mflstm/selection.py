"""
Hyperparameter grid search and LASSO variable selection.

Batch sizes in a grid may be absolute integers or strings ``"input/k"``,
resolved as ``ceil(n_train / k)`` once the effective training size is known.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numba
import numpy as np

from .alignment import AlignedDesign
from .errors import MflstmError, SelectionError

__all__ = [
    "HyperGrid",
    "HyperChoice",
    "resolve_batch",
    "grid_search",
    "LassoFit",
    "LassoPath",
    "LassoSelection",
    "lasso_fit",
    "lasso_path",
    "lasso_select",
    "SIMULATION_GRID",
]


def resolve_batch(value, n_train: int) -> int:
    """Absolute batch size, or ``ceil(n_train / k)`` for ``"input/k"``."""
    if isinstance(value, str):
        head, _, k = value.partition("/")
        if head.strip() != "input" or not k:
            raise ValueError(f"batch size must be an int or 'input/k', got {value!r}")
        return max(1, math.ceil(n_train / float(k)))
    b = int(value)
    if b < 1:
        raise ValueError("batch size must be >= 1")
    return b


def _cells(v) -> tuple[int, ...]:
    return tuple(int(c) for c in v) if isinstance(v, (list, tuple)) else (int(v),)


@dataclass(frozen=True)
class HyperChoice:
    """One point of a :class:`HyperGrid`; ``batch_size`` stays symbolic until resolved."""

    epochs: int
    dropout: float
    batch_size: object
    cells: tuple[int, ...]
    timesteps: int = 1
    p_m: int | None = None
    p_q: int | None = None
    index: int = 0

    def resolved_batch(self, n_train: int) -> int:
        return resolve_batch(self.batch_size, n_train)

    def as_dict(self) -> dict:
        return {"epochs": self.epochs, "dropout": self.dropout, "batch_size": self.batch_size,
                "cells": list(self.cells), "timesteps": self.timesteps, "p_m": self.p_m,
                "p_q": self.p_q}

    def n_lstm_params(self, n_features: int) -> int:
        total, fan_in = 0, n_features
        for H in self.cells:
            total += 4 * H * (fan_in + H + 1)
            fan_in = H
        return total + fan_in + 1


@dataclass(frozen=True)
class HyperGrid:
    epochs: tuple = (25,)
    dropout: tuple = (0.0,)
    batch_size: tuple = (1,)
    cells: tuple = ((16,),)
    timesteps: tuple = (1,)
    p_m: tuple = (None,)
    p_q: tuple = (None,)

    def __post_init__(self):
        for name in ("epochs", "dropout", "batch_size", "cells", "timesteps", "p_m", "p_q"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"grid dimension {name!r} is empty")
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "cells", tuple(_cells(c) for c in self.cells))
        for b in self.batch_size:
            resolve_batch(b, 1)

    @classmethod
    def from_dict(cls, d: Mapping) -> "HyperGrid":
        return cls(**{k: tuple(v) for k, v in d.items()})

    def __iter__(self):
        prod = itertools.product(self.epochs, self.dropout, self.batch_size, self.cells,
                                 self.timesteps, self.p_m, self.p_q)
        for i, (e, d, b, c, ts, pm, pq) in enumerate(prod):
            yield HyperChoice(int(e), float(d), b, c, int(ts), pm, pq, i)

    def __len__(self):
        return (len(self.epochs) * len(self.dropout) * len(self.batch_size) * len(self.cells)
                * len(self.timesteps) * len(self.p_m) * len(self.p_q))


SIMULATION_GRID = {
    "fa": HyperGrid(epochs=(25, 50), dropout=(0.0, 0.4), batch_size=(1, "input/10", "input/2"),
                    cells=(16, 32, 64, 128)),
    "sa": HyperGrid(epochs=(25, 50), dropout=(0.0, 0.4), batch_size=(1, "input/10", "input/2"),
                    cells=(8, 16, 32)),
}


def grid_search(grid: Sequence[HyperChoice] | HyperGrid,
                score: Callable[[HyperChoice, int], object],
                repeats: int = 1, seed: int = 0):
    """
    Evaluate every grid point ``repeats`` times and return the best.

    ``score(choice, seed)`` returns a validation RMSFE, or a pair
    ``(rmsfe, n_params)``; exceptions and non-finite scores count as
    divergence. The winner has the lowest mean score; ties go to fewer
    parameters, then earlier grid position.

    Returns ``(choice, table)`` where ``table`` has one dict per grid point.
    """
    from .simulation import derive_seed

    table = []
    for choice in grid:
        vals, n_params = [], None
        for rep in range(repeats):
            try:
                out = score(choice, derive_seed(seed, "grid", choice.index, rep))
            except (MflstmError, ValueError, FloatingPointError, np.linalg.LinAlgError):
                vals = []
                break
            if isinstance(out, tuple):
                out, n_params = out
            if not np.isfinite(out):
                vals = []
                break
            vals.append(float(out))
        mean = float(np.mean(vals)) if vals else math.inf
        table.append({**choice.as_dict(), "index": choice.index, "score": mean,
                      "n_params": n_params})
    ok = [r for r in table if math.isfinite(r["score"])]
    if not ok:
        raise SelectionError("every grid combination failed or diverged")
    best = min(ok, key=lambda r: (r["score"], r["n_params"] if r["n_params"] is not None else 0,
                                  r["index"]))
    choice = next(c for c in grid if c.index == best["index"])
    return choice, table


# --- LASSO ----------------------------------------------------------------

@dataclass
class LassoFit:
    intercept: float
    coef: np.ndarray  # original scale
    lam: float
    n_iter: int
    objective: list = field(default_factory=list)

    def predict(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X, float) @ self.coef


def _standardize(X, standardize=True):
    mean = X.mean(axis=0)
    sd = X.std(axis=0) if standardize else np.ones(X.shape[1])
    keep = sd > 0
    if standardize and not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} zero-variance column(s)", stacklevel=3)
    sd_safe = np.where(keep, sd, 1.0)
    Z = (X - mean) / sd_safe
    Z[:, ~keep] = 0.0
    return Z, mean, sd_safe, keep


@numba.njit(cache=True)
def _sweep(G, diag, q, b, lam, idx):
    worst = 0.0
    p = q.shape[0]
    for j in idx:
        old = b[j]
        z = q[j] + diag[j] * old
        new = max(abs(z) - lam, 0.0) / diag[j]
        if z < 0:
            new = -new
        if new != old:
            d = new - old
            for i in range(p):
                q[i] -= G[i, j] * d
            b[j] = new
            if abs(d) > worst:
                worst = abs(d)
    return worst


@numba.njit(cache=True)
def _cd_kernel(G, diag, q, b, lam, tol, max_iter, yy, track):
    # Covariance updates: q = Z'r / n stays current, so a coordinate step costs O(p).
    # Sweeps cycle over the nonzero set until it settles; only a full sweep can end the fit.
    p = q.shape[0]
    everything = np.array([j for j in range(p) if diag[j] > 0], dtype=np.int64)
    objective = np.empty(max_iter if track else 0)
    it = 0
    full = True
    while it < max_iter:
        if full:
            worst = _sweep(G, diag, q, b, lam, everything)
        else:
            worst = _sweep(G, diag, q, b, lam, everything[b[everything] != 0.0])
        if track:
            # RSS/n = y'y/n - 2 c'b + b'Gb with c = q + Gb
            objective[it] = 0.5 * (yy - b @ (2.0 * q + G @ b)) + lam * np.abs(b).sum()
        it += 1
        if worst < tol:
            if full:
                break
            full = True
        elif full:
            full = False
    return it, objective[:it]


def _cd(Z, yc, lam, b0, tol, max_iter, track=False):
    n = Z.shape[0]
    G = np.ascontiguousarray(Z.T @ Z / n)
    b = np.array(b0, float)
    q = Z.T @ yc / n - G @ b
    it, obj = _cd_kernel(G, np.diag(G).copy(), q, b, float(lam), float(tol), int(max_iter),
                         float(yc @ yc) / n, bool(track))
    return b, int(it), [float(v) for v in obj]


def lasso_fit(X, y, lam: float, standardize: bool = True, tol: float = 1e-7,
              max_iter: int = 100_000, warm=None, track: bool = False) -> LassoFit:
    """
    Minimize ``RSS / (2n) + lam * ||beta||_1`` by cyclic coordinate descent on
    standardized columns (population sd), intercept unpenalized. Converged when
    the largest coefficient change in a sweep is below ``tol``.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be n x p with len(y) == n")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    Z, mean, sd, keep = _standardize(X, standardize)
    ybar = y.mean()
    b0 = np.zeros(X.shape[1]) if warm is None else np.asarray(warm, float) * sd
    b, it, obj = _cd(Z, y - ybar, lam, b0, tol, max_iter, track)
    b[~keep] = 0.0
    coef = b / sd
    return LassoFit(float(ybar - mean @ coef), coef, float(lam), it, obj)


def lambda_max(X, y, standardize: bool = True) -> float:
    Z, *_ = _standardize(np.asarray(X, float), standardize)
    y = np.asarray(y, float)
    return float(np.max(np.abs(Z.T @ (y - y.mean()))) / len(y)) if Z.shape[1] else 0.0


@dataclass
class LassoPath:
    lambdas: np.ndarray
    coefs: np.ndarray  # (n_lambdas, p), original scale
    intercepts: np.ndarray
    cv_scores: np.ndarray | None = None
    support: tuple = ()


def lasso_path(X, y, lambdas=None, n_lambdas: int = 100, ratio: float = 1e-4,
               standardize: bool = True, tol: float = 1e-7) -> LassoPath:
    """Warm-started fits on ``n_lambdas`` log-spaced penalties from ``lambda_max`` down."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    if lambdas is None:
        lmax = lambda_max(X, y, standardize)
        lmax = lmax if lmax > 0 else 1.0
        lambdas = np.geomspace(lmax, lmax * ratio, n_lambdas)
    lambdas = np.asarray(lambdas, float)
    coefs = np.empty((len(lambdas), X.shape[1]))
    icpt = np.empty(len(lambdas))
    warm = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, lam in enumerate(lambdas):
            f = lasso_fit(X, y, lam, standardize, tol, warm=warm)
            coefs[i], icpt[i], warm = f.coef, f.intercept, f.coef
    return LassoPath(lambdas, coefs, icpt)


@dataclass
class LassoSelection:
    selected: tuple[str, ...]
    lam: float
    path: LassoPath
    folds: int


def lasso_select(ad: AlignedDesign, folds: int = 4, lambdas=None,
                 always_include: Sequence[str] = (), min_train: int | None = None,
                 n_lambdas: int = 100) -> LassoSelection:
    """
    Choose series by LASSO with one-step rolling-origin cross-validation.

    The last ``folds`` usable rows are each predicted from a fit on all usable
    rows before them (expanding window). The penalty with the lowest mean
    squared fold error is refitted on all usable rows; a series is selected
    when any of its columns is nonzero. ``always_include`` ids are added.
    """
    _, X, y = ad.rows()
    n = len(y)
    if min_train is None:
        min_train = 3
    usable = max(0, min(folds, n - min_train))
    if usable < folds:
        if usable == 0:
            raise SelectionError(f"no usable CV folds with {n} rows")
        warnings.warn(f"reducing LASSO CV folds from {folds} to {usable}", stacklevel=2)
    if lambdas is None:
        lmax = lambda_max(X, y)
        lmax = lmax if lmax > 0 else 1.0
        lambdas = np.geomspace(lmax, lmax * 1e-4, n_lambdas)
    lambdas = np.asarray(lambdas, float)
    errs = np.zeros(len(lambdas))
    for k in range(usable):
        cut = n - usable + k
        p = lasso_path(X[:cut], y[:cut], lambdas)
        pred = p.intercepts + p.coefs @ X[cut]
        errs += (y[cut] - pred) ** 2
    errs /= usable
    best = int(np.argmin(errs))
    full = lasso_path(X, y, lambdas[: best + 1])
    coef = full.coefs[-1]
    full.cv_scores = errs
    chosen = []
    for sid, idx in ad.blocks.items():
        if np.any(coef[idx] != 0) or sid in set(always_include):
            chosen.append(sid)
    for sid in always_include:
        if sid not in chosen:
            chosen.append(sid)
    full.support = tuple(chosen)
    return LassoSelection(tuple(chosen), float(lambdas[best]), full, usable)
