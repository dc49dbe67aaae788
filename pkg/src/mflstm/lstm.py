"""
LSTM with forget gate, sequence-to-one linear head, trained by full BPTT.

Gate equations (peephole terms only when enabled)::

    i_t = sigmoid(W_xi x_t + W_hi h_{t-1} [+ w_ci * c_{t-1}] + b_i)
    f_t = sigmoid(W_xf x_t + W_hf h_{t-1} [+ w_cf * c_{t-1}] + b_f)
    c_t = f_t * c_{t-1} + i_t * tanh(W_xc x_t + W_hc h_{t-1} + b_c)
    o_t = sigmoid(W_xo x_t + W_ho h_{t-1} [+ w_co * c_t] + b_o)
    h_t = o_t * tanh(c_t)

Kernels are stored stacked in gate order ``[i, f, c, o]``: ``Wx`` is
``(features, 4H)`` and ``Wh`` is ``(H, 4H)``; activations are row vectors.
Training uses Adam on the mean squared error, input dropout (one mask per
sequence, shared across timesteps) and optional early stopping.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .alignment import TensorBatch
from .errors import DivergenceError, ShapeError
from .series import rng

__all__ = [
    "LayerParams",
    "LstmParams",
    "TrainConfig",
    "LstmNetwork",
    "cell_step",
    "init_params",
    "forward",
    "loss_and_grad",
    "train",
    "gradient_check",
    "save_network",
    "load_network",
]

FORMAT_VERSION = 1
GATES = ("i", "f", "c", "o")


def _sigmoid(z):
    # split branches keep exp() from overflowing for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(eq=False)
class LayerParams:
    Wx: np.ndarray
    Wh: np.ndarray
    b: np.ndarray
    peep: np.ndarray | None = None  # rows: w_ci, w_cf, w_co

    @property
    def units(self) -> int:
        return self.Wh.shape[0]

    def kernel(self, gate: str, recurrent: bool = False) -> np.ndarray:
        """Single-gate matrix, e.g. ``kernel("i")`` is W_xi as ``(features, H)``."""
        H = self.units
        k = GATES.index(gate)
        W = self.Wh if recurrent else self.Wx
        return W[:, k * H:(k + 1) * H]

    def bias(self, gate: str) -> np.ndarray:
        H = self.units
        k = GATES.index(gate)
        return self.b[k * H:(k + 1) * H]

    def arrays(self) -> list[np.ndarray]:
        out = [self.Wx, self.Wh, self.b]
        if self.peep is not None:
            out.append(self.peep)
        return out


@dataclass(eq=False)
class LstmParams:
    layers: list[LayerParams]
    head_w: np.ndarray
    head_b: np.ndarray  # shape (1,)

    @property
    def peepholes(self) -> bool:
        return self.layers[0].peep is not None

    @property
    def n_features(self) -> int:
        return self.layers[0].Wx.shape[0]

    def arrays(self) -> list[np.ndarray]:
        """Every trainable array, in a fixed order (views, not copies)."""
        out = []
        for layer in self.layers:
            out += layer.arrays()
        return out + [self.head_w, self.head_b]

    def copy(self) -> "LstmParams":
        layers = [LayerParams(l.Wx.copy(), l.Wh.copy(), l.b.copy(),
                              None if l.peep is None else l.peep.copy()) for l in self.layers]
        return LstmParams(layers, self.head_w.copy(), self.head_b.copy())

    @property
    def size(self) -> int:
        return int(sum(a.size for a in self.arrays()))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    dropout: float = 0.0
    cells: tuple[int, ...] = (16,)
    patience: int | None = None
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    seed: int = 0
    peepholes: bool = False
    shuffle: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not self.cells or any(c < 1 for c in self.cells):
            raise ValueError("cells must list positive layer widths")
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))


@dataclass(eq=False)
class LstmNetwork:
    """Trained network plus the training-split feature scaler."""

    params: LstmParams
    config: TrainConfig
    mean: np.ndarray
    scale: np.ndarray
    history: list = field(default_factory=list)
    best_epoch: int = 0

    def standardize(self, X) -> np.ndarray:
        return (np.asarray(X, float) - self.mean) / self.scale

    def predict(self, batch) -> np.ndarray:
        return forward(self, batch)


# --- initialization -------------------------------------------------------

def _glorot(gen, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return gen.uniform(-limit, limit, size=(fan_in, fan_out))


def _orthogonal(gen, rows, cols):
    a = gen.normal(size=(max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    return np.ascontiguousarray(q if rows >= cols else q.T)


def init_params(n_features: int, cells, seed: int = 0, peepholes: bool = False) -> LstmParams:
    """Glorot-uniform input kernels, orthogonal recurrent kernels, forget bias 1."""
    gen = rng(seed, "init")
    layers = []
    fan_in = n_features
    for H in cells:
        Wx = _glorot(gen, fan_in, 4 * H)
        Wh = _orthogonal(gen, H, 4 * H)
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0
        peep = _glorot(gen, 3, H) if peepholes else None
        layers.append(LayerParams(Wx, Wh, b, peep))
        fan_in = H
    head_w = _glorot(gen, fan_in, 1)[:, 0]
    return LstmParams(layers, head_w, np.zeros(1))


# --- forward / backward ---------------------------------------------------

def cell_step(x_t, h_prev, c_prev, layer: LayerParams):
    """
    One LSTM step for a batch of rows (or a single vector).

    Returns ``(h_t, c_t, cache)``; the cache holds gate activations for BPTT.
    """
    x_t = np.asarray(x_t, float)
    single = x_t.ndim == 1
    if single:
        x_t, h_prev, c_prev = x_t[None], np.asarray(h_prev, float)[None], np.asarray(c_prev, float)[None]
    H = layer.units
    if x_t.shape[-1] != layer.Wx.shape[0] or h_prev.shape[-1] != H or c_prev.shape[-1] != H:
        raise ShapeError(
            f"cell_step: got x {x_t.shape}, h {h_prev.shape}, c {c_prev.shape} "
            f"for a layer with {layer.Wx.shape[0]} inputs and {H} units"
        )
    z = x_t @ layer.Wx + h_prev @ layer.Wh + layer.b
    zi, zf, zc, zo = z[:, :H], z[:, H:2 * H], z[:, 2 * H:3 * H], z[:, 3 * H:]
    if layer.peep is not None:
        zi = zi + c_prev * layer.peep[0]
        zf = zf + c_prev * layer.peep[1]
    i = _sigmoid(zi)
    f = _sigmoid(zf)
    g = np.tanh(zc)
    c = f * c_prev + i * g
    if layer.peep is not None:
        zo = zo + c * layer.peep[2]
    o = _sigmoid(zo)
    tc = np.tanh(c)
    h = o * tc
    cache = (x_t, h_prev, c_prev, i, f, g, o, c, tc)
    if single:
        return h[0], c[0], cache
    return h, c, cache


def _forward_raw(params: LstmParams, X: np.ndarray, masks=None, keep_cache=False):
    """Unroll all layers on standardized inputs ``X`` of shape (B, T, F)."""
    B, T, _ = X.shape
    seq = X
    caches = []
    for li, layer in enumerate(params.layers):
        if masks is not None and masks[li] is not None:
            seq = seq * masks[li][:, None, :]
        H = layer.units
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        outs = np.empty((B, T, H))
        layer_cache = []
        for t in range(T):
            h, c, cache = cell_step(seq[:, t, :], h, c, layer)
            outs[:, t, :] = h
            if keep_cache:
                layer_cache.append(cache)
        caches.append(layer_cache)
        seq = outs
    h_last = seq[:, -1, :]
    yhat = h_last @ params.head_w + params.head_b[0]
    return yhat, h_last, caches


def _backward(params: LstmParams, caches, h_last, dy, masks=None):
    """Gradients of ``sum(dy * yhat)`` with respect to every parameter array."""
    grads_head_w = h_last.T @ dy
    grads_head_b = np.array([dy.sum()])
    B = dy.shape[0]
    n_layers = len(params.layers)
    T = len(caches[0])
    # gradient flowing into the top layer's hidden outputs
    dH = np.zeros((B, T, params.layers[-1].units))
    dH[:, -1, :] = dy[:, None] * params.head_w[None, :]
    layer_grads = [None] * n_layers
    for li in range(n_layers - 1, -1, -1):
        layer = params.layers[li]
        H = layer.units
        dWx = np.zeros_like(layer.Wx)
        dWh = np.zeros_like(layer.Wh)
        db = np.zeros_like(layer.b)
        dpeep = None if layer.peep is None else np.zeros_like(layer.peep)
        F = layer.Wx.shape[0]
        dX = np.zeros((B, T, F))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        dz = np.empty((B, 4 * H))
        for t in range(T - 1, -1, -1):
            x_t, h_prev, c_prev, i, f, g, o, c, tc = caches[li][t]
            dh = dH[:, t, :] + dh_next
            do = dh * tc
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dzo = do * o * (1.0 - o)
            if dpeep is not None:
                dpeep[2] += np.sum(dzo * c, axis=0)
                dc = dc + dzo * layer.peep[2]
            dzi = dc * g * i * (1.0 - i)
            dzf = dc * c_prev * f * (1.0 - f)
            dzc = dc * i * (1.0 - g * g)
            dc_prev = dc * f
            if dpeep is not None:
                dpeep[0] += np.sum(dzi * c_prev, axis=0)
                dpeep[1] += np.sum(dzf * c_prev, axis=0)
                dc_prev = dc_prev + dzi * layer.peep[0] + dzf * layer.peep[1]
            dz[:, :H] = dzi
            dz[:, H:2 * H] = dzf
            dz[:, 2 * H:3 * H] = dzc
            dz[:, 3 * H:] = dzo
            dWx += x_t.T @ dz
            dWh += h_prev.T @ dz
            db += dz.sum(axis=0)
            if li > 0:
                dX[:, t, :] = dz @ layer.Wx.T
            dh_next = dz @ layer.Wh.T
            dc_next = dc_prev
        layer_grads[li] = [dWx, dWh, db] + ([dpeep] if dpeep is not None else [])
        if li > 0:
            if masks is not None and masks[li] is not None:
                dX = dX * masks[li][:, None, :]
            dH = dX
    grads = []
    for lg in layer_grads:
        grads += lg
    return grads + [grads_head_w, grads_head_b]


def loss_and_grad(params: LstmParams, X, y, masks=None):
    """Mean squared error on standardized inputs and its exact BPTT gradient."""
    yhat, h_last, caches = _forward_raw(params, X, masks, keep_cache=True)
    resid = yhat - y
    with np.errstate(over="ignore"):  # an infinite loss is reported as divergence by train()
        loss = float(np.mean(resid * resid))
    dy = 2.0 * resid / len(y)
    return loss, _backward(params, caches, h_last, dy, masks)


def _inputs(batch):
    X = batch.X if isinstance(batch, TensorBatch) else np.asarray(batch, float)
    if X.ndim == 2:
        X = X[:, None, :]
    if X.ndim != 3:
        raise ShapeError(f"expected (batch, timesteps, features), got {X.shape}")
    return X


def forward(net, batch) -> np.ndarray:
    """
    Predictions for every sequence in ``batch`` (dropout inactive).

    ``net`` is an :class:`LstmNetwork` (inputs are standardized with its
    scaler) or bare :class:`LstmParams` (inputs used as given).
    """
    X = _inputs(batch)
    params = net.params if isinstance(net, LstmNetwork) else net
    if X.shape[2] != params.n_features:
        raise ShapeError(f"network expects {params.n_features} features, got {X.shape[2]}")
    if isinstance(net, LstmNetwork):
        X = net.standardize(X)
    yhat, _, _ = _forward_raw(params, X)
    return yhat


# --- training -------------------------------------------------------------

def _fit_scaler(X):
    flat = X.reshape(-1, X.shape[2])
    mean = flat.mean(axis=0)
    scale = flat.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return mean, scale


def _split_validation(batch: TensorBatch, validation):
    if validation is None:
        return batch, None
    if isinstance(validation, TensorBatch):
        return batch, validation
    frac = float(validation)
    n_val = int(np.floor(len(batch) * frac))
    n_val = min(max(n_val, 1), len(batch) - 1)
    cut = len(batch) - n_val
    return batch.take(slice(0, cut)), batch.take(slice(cut, None))


def train(batch: TensorBatch, config: TrainConfig, validation=None, targets=None) -> LstmNetwork:
    """
    Fit an LSTM by minibatch Adam on the mean squared error.

    ``validation`` is None, a held-out :class:`TensorBatch`, or a fraction of
    the (time-ordered) sequences to hold out from the end. With validation and
    a ``patience``, training stops after ``patience`` epochs without a new best
    validation loss and the best epoch's parameters are returned.
    """
    if targets is not None:
        batch = TensorBatch(batch.X, np.asarray(targets, float), batch.t)
    fit_batch, val_batch = _split_validation(batch, validation)
    X = _inputs(fit_batch)
    y = np.asarray(fit_batch.y, float)
    if len(y) < 2:
        raise ShapeError("training needs at least 2 sequences")
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X)):
        raise ShapeError("training data contain non-finite values")
    mean, scale = _fit_scaler(X)
    Xs = (X - mean) / scale
    Xv = yv = None
    if val_batch is not None:
        Xv = (_inputs(val_batch) - mean) / scale
        yv = np.asarray(val_batch.y, float)

    cfg = config
    params = init_params(X.shape[2], cfg.cells, cfg.seed, cfg.peepholes)
    arrays = params.arrays()
    m_state = [np.zeros_like(a) for a in arrays]
    v_state = [np.zeros_like(a) for a in arrays]
    shuffle_gen = rng(cfg.seed, "shuffle")
    drop_gen = rng(cfg.seed, "dropout")
    widths = [X.shape[2]] + list(cfg.cells[:-1])
    n = len(y)
    step = 0
    history = []
    best = (np.inf, params.copy(), 0)
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_gen.permutation(n) if cfg.shuffle else np.arange(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            masks = None
            if cfg.dropout > 0:
                keep = 1.0 - cfg.dropout
                masks = [(drop_gen.random((len(idx), w)) < keep) / keep for w in widths]
            loss, grads = loss_and_grad(params, Xs[idx], y[idx], masks)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at epoch {epoch}", epoch)
            step += 1
            lr_t = cfg.learning_rate * np.sqrt(1 - cfg.beta2 ** step) / (1 - cfg.beta1 ** step)
            for a, g, m, v in zip(arrays, grads, m_state, v_state):
                m *= cfg.beta1
                m += (1 - cfg.beta1) * g
                v *= cfg.beta2
                v += (1 - cfg.beta2) * g * g
                a -= lr_t * m / (np.sqrt(v) + cfg.epsilon)
        train_loss = float(np.mean((_forward_raw(params, Xs)[0] - y) ** 2))
        if not np.isfinite(train_loss):
            raise DivergenceError(f"non-finite training loss at epoch {epoch}", epoch)
        record = {"epoch": epoch, "loss": train_loss}
        if Xv is not None:
            val_loss = float(np.mean((_forward_raw(params, Xv)[0] - yv) ** 2))
            record["val_loss"] = val_loss
            if val_loss < best[0]:
                best = (val_loss, params.copy(), epoch)
                stale = 0
            else:
                stale += 1
        history.append(record)
        if Xv is not None and cfg.patience is not None and stale >= cfg.patience:
            break
    if Xv is not None:
        final, best_epoch = best[1], best[2]
    else:
        final, best_epoch = params, len(history)
    return LstmNetwork(final, cfg, mean, scale, history, best_epoch)


# --- gradient check -------------------------------------------------------

def _as_dtype(params: LstmParams, dtype) -> LstmParams:
    layers = [LayerParams(l.Wx.astype(dtype), l.Wh.astype(dtype), l.b.astype(dtype),
                          None if l.peep is None else l.peep.astype(dtype)) for l in params.layers]
    return LstmParams(layers, params.head_w.astype(dtype), params.head_b.astype(dtype))


def gradient_check(net, batch, targets=None, epsilon: float = 1e-5) -> float:
    """
    Max over parameters of ``|g_a - g_fd| / max(1e-8, |g_a| + |g_fd|)`` with
    central finite differences of the mean squared error.

    The finite differences are evaluated in extended precision so that their
    rounding floor sits well below the smallest gradients being checked.
    """
    params = net.params if isinstance(net, LstmNetwork) else net
    X = _inputs(batch)
    if isinstance(net, LstmNetwork):
        X = net.standardize(X)
    y = np.asarray(batch.y if targets is None else targets, float)
    _, grads = loss_and_grad(params, X, y)
    ext = np.longdouble
    probe = _as_dtype(params, ext)
    Xe, ye, eps = X.astype(ext), y.astype(ext), ext(epsilon)

    def loss():
        r = _forward_raw(probe, Xe)[0] - ye
        return np.mean(r * r)

    worst = 0.0
    for a, g in zip(probe.arrays(), grads):
        flat = a.reshape(-1)
        gflat = g.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            lp = loss()
            flat[k] = orig - eps
            lm = loss()
            flat[k] = orig
            fd = float((lp - lm) / (2 * eps))
            err = abs(gflat[k] - fd) / max(1e-8, abs(gflat[k]) + abs(fd))
            worst = max(worst, err)
    return worst


# --- persistence ----------------------------------------------------------

def _encode(a):
    a = np.asarray(a, float)
    return {"shape": list(a.shape), "data": [float(v) for v in a.reshape(-1)]}


def _decode(d):
    return np.asarray(d["data"], float).reshape(d["shape"])


def save_network(net: LstmNetwork, path) -> Path:
    """Write config, scaler and row-major weights as JSON."""
    doc = {
        "version": FORMAT_VERSION,
        "config": asdict(net.config),
        "scaler": {"mean": _encode(net.mean), "scale": _encode(net.scale)},
        "layers": [
            {"Wx": _encode(l.Wx), "Wh": _encode(l.Wh), "b": _encode(l.b),
             "peep": None if l.peep is None else _encode(l.peep)}
            for l in net.params.layers
        ],
        "head": {"w": _encode(net.params.head_w), "b": _encode(net.params.head_b)},
        "best_epoch": net.best_epoch,
    }
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def load_network(path) -> LstmNetwork:
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported network file version {doc.get('version')}")
    cfg = doc["config"]
    cfg["cells"] = tuple(cfg["cells"])
    config = TrainConfig(**cfg)
    layers = [
        LayerParams(_decode(l["Wx"]), _decode(l["Wh"]), _decode(l["b"]),
                    None if l["peep"] is None else _decode(l["peep"]))
        for l in doc["layers"]
    ]
    params = LstmParams(layers, _decode(doc["head"]["w"]), _decode(doc["head"]["b"]))
    return LstmNetwork(params, config, _decode(doc["scaler"]["mean"]),
                       _decode(doc["scaler"]["scale"]), [], doc.get("best_epoch", 0))


def with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return replace(config, seed=int(seed))
