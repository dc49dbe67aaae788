"""Independent reference implementations used as test oracles.

Each one is written directly from the defining formula with plain loops and
shares no code with the package.
"""

import math

import numpy as np


def brute_force_align(ds, lags: dict, h_m: int, ar_lags=None):
    """Walk every (t, k, j) triple. Returns (X, valid, y) with NaN for unavailable entries."""
    fastest = max([c.ratio for c in ds.covariates], default=1)
    n = ds.n
    rows = []
    for t in range(1, n + 1):
        row = []
        for c in ds.covariates:
            if c.id not in lags:
                continue
            lo, hi = lags[c.id]
            h_k = math.ceil(h_m * c.ratio / fastest)
            for j in range(lo, hi + 1):
                idx = c.ratio * t - h_k - j
                if 1 <= idx <= len(c.values) and not c.mask[idx - 1]:
                    row.append(float(c.values[idx - 1]))
                else:
                    row.append(float("nan"))
        if ar_lags is not None:
            h = max(1, math.ceil(h_m / fastest))
            lo, hi = ar_lags
            for j in range(lo, hi + 1):
                idx = t - h - j
                if 1 <= idx <= n and not ds.target.mask[idx - 1]:
                    row.append(float(ds.target.values[idx - 1]))
                else:
                    row.append(float("nan"))
        rows.append(row)
    X = np.array(rows, dtype=float)
    valid = np.array([all(not math.isnan(v) for v in r) for r in rows])
    y = np.array([float("nan") if ds.target.mask[i] else float(ds.target.values[i]) for i in range(n)])
    return X, valid, y


def naive_almon(theta, J, normalized=True):
    """Direct evaluation without any overflow guard."""
    with np.errstate(over="ignore", invalid="ignore"):
        raw = [math.exp(theta[0] * i + theta[1] * i * i) if theta[0] * i + theta[1] * i * i < 709
               else float("inf") for i in range(1, J + 1)]
        if not normalized:
            return np.array(raw)
        s = sum(raw)
        return np.array([r / s for r in raw])


def _sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def scalar_cell(x, h, c, Wx, Wh, b, peep=None):
    """Scalar-loop LSTM step with gate order (i, f, c, o) in the packed matrices."""
    H = len(h)
    nx = len(x)

    def pre(gate, k):
        col = gate * H + k
        s = b[col]
        for a in range(nx):
            s += x[a] * Wx[a, col]
        for a in range(H):
            s += h[a] * Wh[a, col]
        return s

    c_new, h_new = [0.0] * H, [0.0] * H
    for k in range(H):
        zi, zf, zc = pre(0, k), pre(1, k), pre(2, k)
        if peep is not None:
            zi += peep[0, k] * c[k]
            zf += peep[1, k] * c[k]
        i, f, g = _sig(zi), _sig(zf), math.tanh(zc)
        c_new[k] = f * c[k] + i * g
    for k in range(H):
        zo = pre(3, k)
        if peep is not None:
            zo += peep[2, k] * c_new[k]
        h_new[k] = _sig(zo) * math.tanh(c_new[k])
    return h_new, c_new


def scalar_forward(params, X):
    """Unroll the scalar cell over timesteps and layers; linear head on the last h."""
    out = []
    for seq in X:
        inputs = [list(map(float, row)) for row in seq]
        for layer in params.layers:
            H = layer.Wh.shape[0]
            h, c = [0.0] * H, [0.0] * H
            outs = []
            for x in inputs:
                h, c = scalar_cell(x, h, c, layer.Wx, layer.Wh, layer.b, layer.peep)
                outs.append(h)
            inputs = outs
        last = inputs[-1]
        out.append(sum(w * v for w, v in zip(params.head_w, last)) + float(params.head_b[0]))
    return np.array(out)


def normal_equations(X, y):
    Z = np.column_stack([np.ones(len(y)), X])
    return np.linalg.solve(Z.T @ Z, Z.T @ y)


def soft_threshold(z, g):
    return np.sign(z) * np.maximum(np.abs(z) - g, 0.0)
