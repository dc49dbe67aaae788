"""
MIDAS regressions on frequency-aligned designs.

* Restricted MIDAS: each covariate block is collapsed with exponential Almon
  weights, ``y = a + sum_k beta_k * X_k @ w(theta_k)``, and estimated by
  nonlinear least squares. The slopes enter linearly, so they are profiled out
  and the optimizer only searches over the thetas.
* U-MIDAS: every aligned column gets a free coefficient (plain OLS).
* AR(1): the low-frequency benchmark ``y_t = a + rho * y_{t-h}``.

Weight positions ``i = 1..J`` map onto a block's lags in ascending order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import singledispatch

import numpy as np
from scipy import linalg, optimize

from .alignment import AlignedDesign
from .errors import (
    ConvergenceError,
    DomainError,
    NumericalError,
    ShapeError,
    SingularDesignError,
)
from .series import rng

__all__ = [
    "almon_weights",
    "MidasFit",
    "UMidasFit",
    "Ar1Fit",
    "midas_fit",
    "umidas_fit",
    "ar1_fit",
    "predict",
    "THETA_GRID",
]

NORMALIZED = "nealmon"
NON_NORMALIZED = "almon-nonnorm"
WEIGHTINGS = (NORMALIZED, NON_NORMALIZED)

THETA_GRID = tuple(itertools.product((-1.0, 0.0, 0.7), (-0.5, -0.1, -0.01)))


def almon_weights(theta, J: int, normalized: bool = True) -> np.ndarray:
    """
    Exponential Almon lag weights at positions ``i = 1..J``.

    Normalized weights are ``exp(t1*i + t2*i^2) / sum_i' exp(...)``, computed
    after subtracting the largest exponent so they never overflow.
    """
    if J < 1:
        raise DomainError(f"J must be >= 1, got {J}")
    t1, t2 = float(theta[0]), float(theta[1])
    i = np.arange(1, J + 1, dtype=float)
    expo = t1 * i + t2 * i * i
    if not np.all(np.isfinite(expo)):
        raise NumericalError(f"non-finite Almon exponent for theta={theta}")
    if normalized:
        e = np.exp(expo - expo.max())
        w = e / e.sum()
    else:
        with np.errstate(over="ignore"):
            w = np.exp(expo)
    if not np.all(np.isfinite(w)):
        raise NumericalError(f"Almon weights overflow for theta={theta}, J={J}")
    return w


def _intercept_design(X):
    return np.column_stack([np.ones(len(X)), X])


@dataclass(frozen=True, eq=False)
class MidasFit:
    """Restricted MIDAS estimates; ``b_coefficients`` gives ``beta_k * w_k``."""

    alpha: float
    beta: np.ndarray
    theta: np.ndarray
    weighting: tuple[str, ...]
    ids: tuple[str, ...]
    columns: tuple[tuple[str, int], ...]
    ar_coef: np.ndarray
    rss: float
    sigma2: float
    nobs: int
    n_starts: int = 0

    def weights(self, k: int) -> np.ndarray:
        width = sum(1 for sid, _ in self.columns if sid == self.ids[k])
        return almon_weights(self.theta[k], width, self.weighting[k] == NORMALIZED)

    @property
    def b_coefficients(self) -> dict[str, np.ndarray]:
        return {sid: self.beta[k] * self.weights(k) for k, sid in enumerate(self.ids)}

    def coefficient_vector(self) -> np.ndarray:
        """Slope per aligned column in design order (AR slopes included)."""
        b = self.b_coefficients
        out, pos, ar_i = [], {sid: 0 for sid in self.ids}, 0
        for sid, _ in self.columns:
            if sid in b:
                out.append(b[sid][pos[sid]])
                pos[sid] += 1
            else:
                out.append(self.ar_coef[ar_i])
                ar_i += 1
        return np.array(out)

    def predict(self, X) -> np.ndarray:
        X = _check_columns(X, len(self.columns))
        return self.alpha + X @ self.coefficient_vector()

    @property
    def n_params(self) -> int:
        return 1 + 3 * len(self.ids) + len(self.ar_coef)

    def to_dict(self) -> dict:
        return {
            "model": "midas",
            "alpha": self.alpha,
            "beta": self.beta.tolist(),
            "theta": self.theta.tolist(),
            "weighting": list(self.weighting),
            "ids": list(self.ids),
            "columns": [list(c) for c in self.columns],
            "ar_coef": self.ar_coef.tolist(),
            "b_coefficients": {k: v.tolist() for k, v in self.b_coefficients.items()},
            "rss": self.rss,
            "sigma2": self.sigma2,
            "nobs": self.nobs,
        }


@dataclass(frozen=True, eq=False)
class UMidasFit:
    """Unrestricted MIDAS: intercept plus one OLS coefficient per aligned column."""

    alpha: float
    coef: np.ndarray
    columns: tuple[tuple[str, int], ...]
    rss: float
    sigma2: float
    nobs: int

    def predict(self, X) -> np.ndarray:
        X = _check_columns(X, len(self.coef))
        return self.alpha + X @ self.coef

    @property
    def n_params(self) -> int:
        return 1 + len(self.coef)

    def to_dict(self) -> dict:
        return {
            "model": "umidas",
            "alpha": self.alpha,
            "coef": self.coef.tolist(),
            "columns": [list(c) for c in self.columns],
            "rss": self.rss,
            "sigma2": self.sigma2,
            "nobs": self.nobs,
        }


@dataclass(frozen=True)
class Ar1Fit:
    intercept: float
    slope: float
    sigma2: float
    h: int = 1
    nobs: int = 0

    def predict(self, X) -> np.ndarray:
        X = _check_columns(X, 1)
        return self.intercept + self.slope * X[:, 0]

    @property
    def n_params(self) -> int:
        return 2

    def to_dict(self) -> dict:
        return {"model": "ar1", "intercept": self.intercept, "slope": self.slope,
                "sigma2": self.sigma2, "h": self.h, "nobs": self.nobs}


def _check_columns(X, p):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != p:
        raise ShapeError(f"expected {p} columns, got {X.shape[1]}")
    return X


@singledispatch
def predict(fit, X) -> np.ndarray:
    """Evaluate a fitted regression on new aligned rows."""
    raise TypeError(f"cannot predict with {type(fit).__name__}")


@predict.register
def _(fit: MidasFit, X):
    return fit.predict(X)


@predict.register
def _(fit: UMidasFit, X):
    return fit.predict(X)


@predict.register
def _(fit: Ar1Fit, X):
    return fit.predict(X)


# --- OLS -------------------------------------------------------------------

def _ols(Z, y, names=None, rtol=None):
    """Least squares by pivoted QR; raises SingularDesignError on rank deficiency."""
    n, p = Z.shape
    Q, R, piv = linalg.qr(Z, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    tol = (rtol if rtol is not None else max(n, p) * np.finfo(float).eps) * (d[0] if d.size else 0)
    rank = int(np.sum(d > tol))
    if rank < p:
        dep = [int(j) for j in piv[rank:]]
        label = [names[j] if names is not None else j for j in dep]
        raise SingularDesignError(f"rank-deficient design; dependent columns: {label}", label)
    coef = np.empty(p)
    coef[piv] = linalg.solve_triangular(R, Q.T @ y)
    return coef


def umidas_fit(ad: AlignedDesign) -> UMidasFit:
    """OLS of the target on every aligned column plus an intercept."""
    _, X, y = ad.rows()
    n, p = X.shape
    if n <= p + 1:
        raise ShapeError(f"U-MIDAS needs more than {p + 1} usable rows, got {n}")
    names = ["(intercept)"] + [f"{sid}_lag{j}" for sid, j in ad.columns]
    coef = _ols(_intercept_design(X), y, names)
    resid = y - coef[0] - X @ coef[1:]
    rss = float(resid @ resid)
    return UMidasFit(float(coef[0]), coef[1:], ad.columns, rss, rss / (n - p - 1), n)


def ar1_fit(y, h: int = 1) -> Ar1Fit:
    """OLS of ``y_t`` on ``y_{t-h}`` with intercept; NaN entries are skipped pairwise."""
    y = np.asarray(y, dtype=float)
    if h < 1:
        raise DomainError("AR horizon must be >= 1")
    lhs, rhs = y[h:], y[:-h]
    ok = np.isfinite(lhs) & np.isfinite(rhs)
    if ok.sum() < 2 or np.isfinite(y).sum() < 3:
        raise ShapeError("AR(1) needs at least 3 observations")
    lhs, rhs = lhs[ok], rhs[ok]
    Z = _intercept_design(rhs[:, None])
    if np.ptp(rhs) == 0:
        # constant regressor: slope unidentified, fall back to the mean
        mu = float(lhs.mean())
        return Ar1Fit(mu, 0.0, float(np.mean((lhs - mu) ** 2)), h, len(lhs))
    coef = _ols(Z, lhs)
    resid = lhs - Z @ coef
    dof = max(len(lhs) - 2, 1)
    return Ar1Fit(float(coef[0]), float(coef[1]), float(resid @ resid) / dof, h, len(lhs))


# --- restricted MIDAS ------------------------------------------------------

class _Profiled:
    """Profiled NLS objective: thetas outside, (alpha, AR, betas) by linear LS."""

    def __init__(self, ad: AlignedDesign, weighting):
        _, X, y = ad.rows()
        self.y = y
        self.n = len(y)
        self.ids = ad.covariate_ids
        self.blocks = [X[:, ad.blocks[sid]] for sid in self.ids]
        if ad.ar_id is not None:
            self.ar = X[:, ad.blocks[ad.ar_id]]
        else:
            self.ar = np.empty((self.n, 0))
        self.normalized = [weighting[s] == NORMALIZED for s in self.ids]
        self.K = len(self.ids)
        self.base = np.column_stack([np.ones(self.n), self.ar])
        self.scale = float(np.sqrt(np.sum((y - y.mean()) ** 2)) + 1.0)

    def design(self, theta):
        th = np.asarray(theta).reshape(self.K, 2)
        z = [blk @ almon_weights(th[k], blk.shape[1], self.normalized[k])
             for k, blk in enumerate(self.blocks)]
        return np.column_stack([self.base] + [np.asarray(z).T]) if z else self.base

    def solve(self, theta):
        Z = self.design(theta)
        coef, *_ = linalg.lstsq(Z, self.y, lapack_driver="gelsy", check_finite=False)
        return coef, self.y - Z @ coef

    def residuals(self, theta):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                _, r = self.solve(theta)
        except (NumericalError, ValueError, linalg.LinAlgError):
            return np.full(self.n, 1e6 * self.scale)
        if not np.all(np.isfinite(r)):
            return np.full(self.n, 1e6 * self.scale)
        return r

    def jacobian(self, theta):
        """Kaufman's variable-projection Jacobian ``-(I - P) dZ/dtheta coef``."""
        J = np.zeros((self.n, 2 * self.K))
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                Z = self.design(theta)
                coef, *_ = linalg.lstsq(Z, self.y, lapack_driver="gelsy", check_finite=False)
                Q, _ = np.linalg.qr(Z)
                th = np.asarray(theta).reshape(self.K, 2)
                off = self.base.shape[1]
                for k, blk in enumerate(self.blocks):
                    L = blk.shape[1]
                    i = np.arange(1, L + 1, dtype=float)
                    w = almon_weights(th[k], L, self.normalized[k])
                    if self.normalized[k]:
                        d1 = w * (i - w @ i)
                        d2 = w * (i * i - w @ (i * i))
                    else:
                        d1, d2 = w * i, w * i * i
                    for c, dw in enumerate((d1, d2)):
                        v = (blk @ dw) * coef[off + k]
                        J[:, 2 * k + c] = -(v - Q @ (Q.T @ v))
        except (NumericalError, ValueError, linalg.LinAlgError):
            return np.zeros((self.n, 2 * self.K))
        if not np.all(np.isfinite(J)):
            return np.zeros((self.n, 2 * self.K))
        return J


def midas_fit(
    ad: AlignedDesign,
    weighting=NORMALIZED,
    seed: int = 0,
    n_jitter: int = 2,
    jitter_sd: float = 0.25,
    grid=THETA_GRID,
    max_iter: int = 200,
) -> MidasFit:
    """
    Nonlinear least squares for the restricted MIDAS regression.

    ``weighting`` is one name for every covariate block or a mapping
    id -> {"nealmon", "almon-nonnorm"}. Any block of the target id is treated
    as free AR terms. The multistart set is every grid point (applied to all
    covariates at once) plus ``n_jitter`` seeded perturbations of each; the
    best local optimum wins, ties broken by lexicographically smallest theta.
    """
    cov_ids = ad.covariate_ids
    if isinstance(weighting, str):
        weighting = {sid: weighting for sid in cov_ids}
    for sid in cov_ids:
        if weighting.get(sid) not in WEIGHTINGS:
            raise ValueError(f"unknown weighting for {sid!r}: {weighting.get(sid)!r}")
    prob = _Profiled(ad, weighting)
    p = 1 + prob.ar.shape[1] + 3 * prob.K
    if prob.n < p:
        raise ShapeError(f"MIDAS needs at least {p} usable rows, got {prob.n}")
    if np.linalg.matrix_rank(prob.base) < prob.base.shape[1]:
        raise SingularDesignError("intercept/AR block is rank deficient")

    starts = []
    gen = rng(seed, "multistart")
    for g in grid:
        base = np.tile(np.asarray(g, float), prob.K)
        starts.append(base)
        for _ in range(n_jitter):
            starts.append(base + gen.normal(0.0, jitter_sd, size=base.shape))

    best = None
    converged = 0
    for x0 in starts:
        try:
            res = optimize.least_squares(
                prob.residuals, x0, jac=prob.jacobian, method="trf", ftol=1e-10, xtol=1e-10, gtol=1e-12,
                max_nfev=max_iter,
            )
        except (ValueError, linalg.LinAlgError):
            continue
        if not np.all(np.isfinite(res.x)):
            continue
        r = prob.residuals(res.x)
        rss = float(r @ r)
        if not np.isfinite(rss) or rss >= 1e11 * prob.scale ** 2:
            continue
        converged += 1
        key = (rss, tuple(res.x))
        if best is None or key < best[0]:
            best = (key, res.x)
    if best is None:
        raise ConvergenceError("no MIDAS start converged")
    theta = best[1]
    coef, resid = prob.solve(theta)
    n_ar = prob.ar.shape[1]
    rss = float(resid @ resid)
    return MidasFit(
        alpha=float(coef[0]),
        beta=np.asarray(coef[1 + n_ar:], float),
        theta=np.asarray(theta, float).reshape(prob.K, 2),
        weighting=tuple(weighting[s] for s in prob.ids),
        ids=tuple(prob.ids),
        columns=ad.columns,
        ar_coef=np.asarray(coef[1:1 + n_ar], float),
        rss=rss,
        sigma2=rss / max(prob.n - p, 1),
        nobs=prob.n,
        n_starts=converged,
    )

