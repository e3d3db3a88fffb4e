"""Stacked univariate LSTM trained with full-sequence BPTT and Adam.

All weights live in one flat float64 vector so the optimizer, the
finite-difference checks and serialization all treat the model uniformly.
Layout, per layer ``l`` (input width ``d = 1`` for the first layer, ``H``
otherwise)::

    W_l  (4H, d)   input-to-hidden, row-major
    U_l  (4H, H)   hidden-to-hidden, row-major
    b_l  (4H,)

followed by the readout ``w_out (H,)`` and ``b_out (1,)``.  Gate rows are
stacked in the order input, forget, output, candidate.

The recurrences are the usual ones::

    z = W x + U h_prev + b
    i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o);  g = tanh(z_g)
    c = f * c_prev + i * g;   h = o * tanh(c)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numba
import numpy as np

GATES = ("input", "forget", "output", "candidate")


class LstmDivergenceError(FloatingPointError):
    """Training produced a non-finite loss or model."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


def param_count(num_layers, width):
    n = 0
    for layer in range(num_layers):
        d = 1 if layer == 0 else width
        n += 4 * width * (d + width + 1)
    return n + width + 1


@numba.njit(cache=True)
def _offsets(num_layers, width):
    # (W, U, b) start offsets per layer, then readout offset
    offs = np.empty((num_layers, 3), dtype=np.int64)
    pos = 0
    for layer in range(num_layers):
        d = 1 if layer == 0 else width
        offs[layer, 0] = pos
        pos += 4 * width * d
        offs[layer, 1] = pos
        pos += 4 * width * width
        offs[layer, 2] = pos
        pos += 4 * width
    return offs, pos


@numba.njit(cache=True)
def _sigmoid(v):
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


@numba.njit(cache=True, nogil=True)
def _forward(theta, num_layers, width, seq, h0, c0):
    """Forward pass keeping every activation; returns outputs and caches."""
    H = width
    S = seq.shape[0]
    offs, ro = _offsets(num_layers, width)
    gi = np.empty((num_layers, S, H))
    gf = np.empty((num_layers, S, H))
    go = np.empty((num_layers, S, H))
    gg = np.empty((num_layers, S, H))
    cs = np.empty((num_layers, S, H))
    hs = np.empty((num_layers, S, H))
    out = np.empty(S)
    z = np.empty(4 * H)
    for t in range(S):
        for layer in range(num_layers):
            d = 1 if layer == 0 else H
            w0, u0, b0 = offs[layer, 0], offs[layer, 1], offs[layer, 2]
            for k in range(4 * H):
                acc = theta[b0 + k]
                for j in range(d):
                    xj = seq[t] if layer == 0 else hs[layer - 1, t, j]
                    acc += theta[w0 + k * d + j] * xj
                for j in range(H):
                    hp = h0[layer, j] if t == 0 else hs[layer, t - 1, j]
                    acc += theta[u0 + k * H + j] * hp
                z[k] = acc
            for j in range(H):
                i_ = _sigmoid(z[j])
                f_ = _sigmoid(z[H + j])
                o_ = _sigmoid(z[2 * H + j])
                g_ = math.tanh(z[3 * H + j])
                cp = c0[layer, j] if t == 0 else cs[layer, t - 1, j]
                c_ = f_ * cp + i_ * g_
                gi[layer, t, j] = i_
                gf[layer, t, j] = f_
                go[layer, t, j] = o_
                gg[layer, t, j] = g_
                cs[layer, t, j] = c_
                hs[layer, t, j] = o_ * math.tanh(c_)
        acc = theta[ro + H]
        for j in range(H):
            acc += theta[ro + j] * hs[num_layers - 1, t, j]
        out[t] = acc
    return out, gi, gf, go, gg, cs, hs


@numba.njit(cache=True, nogil=True)
def _loss_grad(theta, num_layers, width, inputs, targets):
    """Mean squared one-step error and its gradient w.r.t. ``theta`` (BPTT)."""
    H = width
    S = inputs.shape[0]
    zeros = np.zeros((num_layers, H))
    out, gi, gf, go, gg, cs, hs = _forward(theta, num_layers, width, inputs, zeros, zeros)
    offs, ro = _offsets(num_layers, width)
    grad = np.zeros_like(theta)

    loss = 0.0
    dh_above = np.zeros((S, H))
    for t in range(S):
        r = out[t] - targets[t]
        loss += r * r
        dy = 2.0 * r / S
        grad[ro + H] += dy
        for j in range(H):
            grad[ro + j] += dy * hs[num_layers - 1, t, j]
            dh_above[t, j] = dy * theta[ro + j]
    loss /= S

    dz = np.empty(4 * H)
    for layer in range(num_layers - 1, -1, -1):
        d = 1 if layer == 0 else H
        w0, u0, b0 = offs[layer, 0], offs[layer, 1], offs[layer, 2]
        dh_below = np.zeros((S, d))
        dh_next = np.zeros(H)
        dc_next = np.zeros(H)
        for t in range(S - 1, -1, -1):
            for j in range(H):
                dh = dh_above[t, j] + dh_next[j]
                c_ = cs[layer, t, j]
                tc = math.tanh(c_)
                o_ = go[layer, t, j]
                i_ = gi[layer, t, j]
                f_ = gf[layer, t, j]
                g_ = gg[layer, t, j]
                cp = cs[layer, t - 1, j] if t > 0 else 0.0
                dc = dc_next[j] + dh * o_ * (1.0 - tc * tc)
                dz[j] = dc * g_ * i_ * (1.0 - i_)
                dz[H + j] = dc * cp * f_ * (1.0 - f_)
                dz[2 * H + j] = dh * tc * o_ * (1.0 - o_)
                dz[3 * H + j] = dc * i_ * (1.0 - g_ * g_)
                dc_next[j] = dc * f_
            for j in range(H):
                dh_next[j] = 0.0
            for k in range(4 * H):
                g = dz[k]
                grad[b0 + k] += g
                for j in range(d):
                    xj = inputs[t] if layer == 0 else hs[layer - 1, t, j]
                    grad[w0 + k * d + j] += g * xj
                    dh_below[t, j] += theta[w0 + k * d + j] * g
                if t > 0:
                    for j in range(H):
                        grad[u0 + k * H + j] += g * hs[layer, t - 1, j]
                        dh_next[j] += theta[u0 + k * H + j] * g
        if layer > 0:
            dh_above = dh_below
    return loss, grad


@dataclass
class LstmModel:
    num_layers: int
    width: int
    params: np.ndarray
    # affine standardization applied to series before they enter the network
    mean: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64)
        expected = param_count(self.num_layers, self.width)
        if self.params.shape != (expected,):
            raise ValueError(f"expected {expected} parameters, got {self.params.shape}")

    def is_finite(self):
        return bool(np.all(np.isfinite(self.params))) and math.isfinite(self.mean) and math.isfinite(self.scale)

    def standardize(self, values):
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.scale

    def destandardize(self, values):
        return np.asarray(values, dtype=np.float64) * self.scale + self.mean

    def blocks(self):
        """Per-layer ``(W, U, b)`` views and the readout ``(w, b)``."""
        offs, ro = _offsets(self.num_layers, self.width)
        H = self.width
        layers = []
        for layer in range(self.num_layers):
            d = 1 if layer == 0 else H
            w0, u0, b0 = offs[layer]
            layers.append((
                self.params[w0:w0 + 4 * H * d].reshape(4 * H, d),
                self.params[u0:u0 + 4 * H * H].reshape(4 * H, H),
                self.params[b0:b0 + 4 * H],
            ))
        return layers, (self.params[ro:ro + H], self.params[ro + H])

    def to_dict(self):
        layers, (w_out, b_out) = self.blocks()
        return {
            "num_layers": self.num_layers,
            "width": self.width,
            "gate_order": list(GATES),
            "layers": [
                {"W": W.tolist(), "U": U.tolist(), "b": b.tolist()} for W, U, b in layers
            ],
            "readout": {"w": w_out.tolist(), "b": float(b_out)},
            "mean": self.mean,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, data):
        parts = []
        for layer in data["layers"]:
            parts += [np.ravel(layer["W"]), np.ravel(layer["U"]), np.ravel(layer["b"])]
        parts += [np.ravel(data["readout"]["w"]), [data["readout"]["b"]]]
        return cls(data["num_layers"], data["width"], np.concatenate(parts),
                   float(data["mean"]), float(data["scale"]))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class TrainConfig:
    num_layers: int = 4
    layer_width: int = 4
    learning_rate: float = 0.05
    epochs: int = 300
    seed: int = 0
    betas: tuple = field(default=(0.9, 0.999))
    eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.num_layers < 1 or self.layer_width < 1:
            raise ValueError("num_layers and layer_width must be >= 1")


class Adam:
    def __init__(self, size, lr, betas=(0.9, 0.999), eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params, grad):
        """In-place update of ``params``."""
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def init_model(num_layers=4, width=4, seed=0):
    """Uniform +-1/sqrt(fan_in) weights, zero biases except forget gates at 1."""
    rng = np.random.default_rng(seed)
    model = LstmModel(num_layers, width, np.zeros(param_count(num_layers, width)))
    layers, (w_out, _) = model.blocks()
    for layer, (W, U, b) in enumerate(layers):
        bound = 1.0 / math.sqrt(W.shape[1] + width)
        W[:] = rng.uniform(-bound, bound, W.shape)
        U[:] = rng.uniform(-bound, bound, U.shape)
        b[width:2 * width] = 1.0
    bound = 1.0 / math.sqrt(width)
    w_out[:] = rng.uniform(-bound, bound, width)
    return model


def lstm_forward(model, sequence, state=None):
    """Run the network over ``sequence`` (already standardized).

    Returns the one-step-ahead outputs and the final ``(h, c)`` state, each of
    shape ``(num_layers, width)``.  ``state`` defaults to zeros.
    """
    if not model.is_finite():
        raise LstmDivergenceError("model has non-finite parameters")
    seq = np.asarray(sequence, dtype=np.float64).ravel()
    if seq.size == 0:
        raise ValueError("sequence must be nonempty")
    if state is None:
        h0 = np.zeros((model.num_layers, model.width))
        c0 = np.zeros_like(h0)
    else:
        h0, c0 = (np.asarray(s, dtype=np.float64) for s in state)
    out, _, _, _, _, cs, hs = _forward(model.params, model.num_layers, model.width, seq, h0, c0)
    return out, (hs[:, -1, :].copy(), cs[:, -1, :].copy())


def loss_and_grad(model, inputs, targets):
    return _loss_grad(model.params, model.num_layers, model.width,
                      np.asarray(inputs, dtype=np.float64), np.asarray(targets, dtype=np.float64))


def standardization(series):
    """Mean and scale for a series; a constant series gets scale 1."""
    s = np.asarray(series, dtype=np.float64)
    scale = float(s.std())
    return float(s.mean()), (scale if scale > 0 else 1.0)


def train_lstm(series, cfg=None):
    """Fit the model to predict each standardized value from its past.

    One Adam step per epoch on the gradient of the whole sequence.  Returns
    the model and the loss recorded before each step.
    """
    cfg = cfg or TrainConfig()
    s = np.asarray(series, dtype=np.float64).ravel()
    if s.size < 3:
        raise ValueError("series needs at least 3 values")
    if not np.all(np.isfinite(s)):
        raise ValueError("series contains non-finite values")
    model = init_model(cfg.num_layers, cfg.layer_width, cfg.seed)
    model.mean, model.scale = standardization(s)
    z = model.standardize(s)
    inputs, targets = z[:-1].copy(), z[1:].copy()

    opt = Adam(model.params.size, cfg.learning_rate, cfg.betas, cfg.eps)
    history = []
    for epoch in range(cfg.epochs):
        loss, grad = _loss_grad(model.params, model.num_layers, model.width, inputs, targets)
        if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
            raise LstmDivergenceError(f"training diverged at epoch {epoch}", epoch)
        history.append(loss)
        opt.step(model.params, grad)
    if not model.is_finite():
        raise LstmDivergenceError(f"training diverged at epoch {cfg.epochs}", cfg.epochs)
    return model, history


def forecast(model, context, horizon):
    """Recursive multi-step forecast continuing after ``context``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    z = model.standardize(context).ravel()
    out, state = lstm_forward(model, z)
    preds = [out[-1]]
    for _ in range(horizon - 1):
        step, state = lstm_forward(model, preds[-1:], state)
        preds.append(step[0])
    result = model.destandardize(preds)
    if not np.all(np.isfinite(result)):
        raise LstmDivergenceError("forecast produced non-finite values")
    return result
