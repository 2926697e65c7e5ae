"""One-hidden-layer perceptron coupling hourly temperature and humidity."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import InsufficientDataError, SynthmetError
from ..weather import Var, WeatherSeries

DEFAULT_INPUTS = ("hour_sin", "hour_cos", "ghi_Whm2", "wind_ms", "prev_temp_C", "prev_rh_pct")
DEFAULT_OUTPUTS = ("temp_C", "rh_pct")
OUTPUT_RANGE = {"temp_C": (-40.0, 60.0), "rh_pct": (0.0, 100.0)}
MIN_HOURS = 1000


@dataclass(frozen=True)
class MlpSpec:
    hidden: int = 8
    inputs: tuple = DEFAULT_INPUTS
    outputs: tuple = DEFAULT_OUTPUTS
    learning_rate: float = 0.02
    momentum: float = 0.9
    batch_size: int = 64
    val_fraction: float = 0.2


@dataclass(frozen=True, eq=False)
class MlpModel:
    inputs: tuple
    outputs: tuple
    W1: np.ndarray          # (H, d)
    b1: np.ndarray          # (H,)
    W2: np.ndarray          # (m, H)
    b2: np.ndarray          # (m,)
    x_mean: np.ndarray
    x_sd: np.ndarray
    y_mean: np.ndarray
    y_sd: np.ndarray
    val_rmse: float = float("nan")
    epochs: int = 0
    seed: int | None = None
    n: int = 0
    period: str = ""
    site: str = ""

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    def params(self):
        return [self.W1, self.b1, self.W2, self.b2]

    def to_dict(self):
        return {
            "kind": "mlp", "inputs": list(self.inputs), "outputs": list(self.outputs),
            "hidden": self.hidden, "W1": self.W1.tolist(), "b1": self.b1.tolist(),
            "W2": self.W2.tolist(), "b2": self.b2.tolist(),
            "x_mean": self.x_mean.tolist(), "x_sd": self.x_sd.tolist(),
            "y_mean": self.y_mean.tolist(), "y_sd": self.y_sd.tolist(),
            "val_rmse": self.val_rmse, "epochs": self.epochs, "seed": self.seed,
            "n": self.n, "period": self.period, "site": self.site,
        }

    @classmethod
    def from_dict(cls, d):
        a = lambda k: np.asarray(d[k], dtype=float)  # noqa: E731
        return cls(tuple(d["inputs"]), tuple(d["outputs"]), a("W1"), a("b1"), a("W2"), a("b2"),
                   a("x_mean"), a("x_sd"), a("y_mean"), a("y_sd"), float(d.get("val_rmse", np.nan)),
                   int(d.get("epochs", 0)), d.get("seed"), int(d.get("n", 0)),
                   d.get("period", ""), d.get("site", ""))


def forward(params, Xn):
    W1, b1, W2, b2 = params
    H = np.tanh(Xn @ W1.T + b1)
    return H @ W2.T + b2, H


def loss_and_grad(params, Xn, Yn):
    """Mean squared error over samples and outputs, with its gradient."""
    W1, b1, W2, b2 = params
    out, H = forward(params, Xn)
    R = out - Yn
    n, m = Yn.shape
    loss = float(np.mean(R * R))
    dout = 2.0 * R / (n * m)
    gW2 = dout.T @ H
    gb2 = dout.sum(axis=0)
    dH = (dout @ W2) * (1.0 - H * H)
    gW1 = dH.T @ Xn
    gb1 = dH.sum(axis=0)
    return loss, [gW1, gb1, gW2, gb2]


def _norm_constants(A):
    mu = A.mean(axis=0)
    sd = A.std(axis=0)
    sd[sd == 0] = 1.0
    return mu, sd


def train_mlp(X, Y, spec: MlpSpec = MlpSpec(), epochs: int = 100, seed=0, inputs=None, outputs=None) -> MlpModel:
    """Train on raw arrays ``X`` (n, d) and ``Y`` (n, m).

    Rows are split 80/20 at random (seeded); weights use a scaled uniform
    initialisation; minibatch gradient descent with momentum.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, d = X.shape
    m = Y.shape[1]
    if n < 10:
        raise InsufficientDataError("too few training rows")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_val = max(1, int(round(spec.val_fraction * n)))
    val, tr = perm[:n_val], perm[n_val:]
    x_mean, x_sd = _norm_constants(X[tr])
    y_mean, y_sd = _norm_constants(Y[tr])
    Xn = (X - x_mean) / x_sd
    Yn = (Y - y_mean) / y_sd

    H = spec.hidden
    lim1, lim2 = np.sqrt(6.0 / (d + H)), np.sqrt(6.0 / (H + m))
    params = [rng.uniform(-lim1, lim1, (H, d)), np.zeros(H),
              rng.uniform(-lim2, lim2, (m, H)), np.zeros(m)]
    vel = [np.zeros_like(p) for p in params]
    bs = spec.batch_size
    for _ in range(epochs):
        order = tr[rng.permutation(tr.size)]
        for s in range(0, order.size, bs):
            b = order[s:s + bs]
            loss, grads = loss_and_grad(params, Xn[b], Yn[b])
            if not np.isfinite(loss):
                raise SynthmetError("non-finite training loss")
            for p, v, g in zip(params, vel, grads):
                v *= spec.momentum
                v -= spec.learning_rate * g
                p += v
    out, _ = forward(params, Xn[val])
    val_rmse = float(np.sqrt(np.mean((out - Yn[val]) ** 2)))
    if not np.isfinite(val_rmse) or not all(np.all(np.isfinite(p)) for p in params):
        raise SynthmetError("non-finite training result")
    return MlpModel(tuple(inputs or (f"x{i}" for i in range(d))),
                    tuple(outputs or (f"y{i}" for i in range(m))),
                    *params, x_mean, x_sd, y_mean, y_sd, val_rmse, epochs,
                    seed if isinstance(seed, (int, np.integer)) else None, int(n))


def hour_features(hours):
    a = 2.0 * np.pi * np.asarray(hours, dtype=float) / 24.0
    return np.sin(a), np.cos(a)


def mlp_dataset(series: WeatherSeries):
    """Predictor matrix and targets for every hour whose previous hour exists.

    Returns ``(X, Y, index)`` with ``index`` the rows of ``series`` used.
    """
    need = (Var.TEMP, Var.RH, Var.GHI, Var.WIND)
    for v in need:
        if v not in series.columns:
            raise SynthmetError(f"MLP fitting needs column {v.value}")
    t = series.times.astype(np.int64)
    T, RH, G, W = (np.asarray(series.columns[v], dtype=float) for v in need)
    i = np.arange(1, t.size)
    ok = (t[i] - t[i - 1] == 1)
    ok &= np.isfinite(T[i]) & np.isfinite(RH[i]) & np.isfinite(G[i]) & np.isfinite(W[i])
    ok &= np.isfinite(T[i - 1]) & np.isfinite(RH[i - 1])
    i = i[ok]
    hs, hc = hour_features(series.hour_of_day[i])
    X = np.column_stack([hs, hc, G[i], W[i], T[i - 1], RH[i - 1]])
    Y = np.column_stack([T[i], RH[i]])
    return X, Y, i


def fit_mlp(series: WeatherSeries, spec: MlpSpec = MlpSpec(), epochs: int = 30, seed=0,
            period: str = "") -> MlpModel:
    if spec.inputs != DEFAULT_INPUTS or spec.outputs != DEFAULT_OUTPUTS:
        raise SynthmetError("fit_mlp supports the default predictor/target set; use train_mlp")
    X, Y, _ = mlp_dataset(series)
    if X.shape[0] < MIN_HOURS:
        raise InsufficientDataError(f"{X.shape[0]} complete hours, need {MIN_HOURS}")
    m = train_mlp(X, Y, spec, epochs, seed, DEFAULT_INPUTS, DEFAULT_OUTPUTS)
    return replace(m, period=period, site=series.site.name)


def _clamp(model, Y):
    Y = np.array(Y, dtype=float)
    for j, name in enumerate(model.outputs):
        if name in OUTPUT_RANGE:
            lo, hi = OUTPUT_RANGE[name]
            Y[..., j] = np.clip(Y[..., j], lo, hi)
    return Y


def predict_raw(model: MlpModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out, _ = forward(model.params(), (X - model.x_mean) / model.x_sd)
    return _clamp(model, out * model.y_sd + model.y_mean)


def predict_mlp(model: MlpModel, predictors: dict):
    """Evaluate on named predictors; returns ``(temperature, rh)`` clamped to physical ranges."""
    missing = [k for k in model.inputs if k not in predictors]
    if missing:
        raise SynthmetError(f"missing predictor(s): {', '.join(missing)}")
    cols = [np.atleast_1d(np.asarray(predictors[k], dtype=float)) for k in model.inputs]
    X = np.column_stack(np.broadcast_arrays(*cols))
    if not np.all(np.isfinite(X)):
        raise SynthmetError("predictors must be finite")
    Y = predict_raw(model, X)
    return Y[:, 0], Y[:, 1]


def run_mlp(model: MlpModel, hours, ghi, wind, t0: float, rh0: float, noise=None):
    """Recursive hour-by-hour generation, feeding each output back as the
    next step's previous-hour predictors. ``noise`` (n, 2), if given, is added
    to every step's output before clamping."""
    hs, hc = hour_features(hours)
    n = hs.size
    W1, b1, W2, b2 = model.params()
    xm, xs, ym, ys = model.x_mean, model.x_sd, model.y_mean, model.y_sd
    lo = np.array([OUTPUT_RANGE[k][0] for k in model.outputs])
    hi = np.array([OUTPUT_RANGE[k][1] for k in model.outputs])
    # static part of the normalised inputs
    Xs = (np.column_stack([hs, hc, ghi, wind, np.zeros(n), np.zeros(n)]) - xm) / xs
    out = np.empty((n, 2))
    prev = np.array([t0, rh0], dtype=float)
    for k in range(n):
        x = Xs[k].copy()
        x[4:] = (prev - xm[4:]) / xs[4:]
        y = W2 @ np.tanh(W1 @ x + b1) + b2
        y = y * ys + ym
        if noise is not None:
            y = y + noise[k]
        prev = np.clip(y, lo, hi)
        out[k] = prev
    return out[:, 0], out[:, 1]
