"""Bounded-output affordance regressor with hand-written gradients.

The network is deliberately small and fixed in topology (two valid-padding
strided convolutions, two dense layers, hyperbolic-tangent output) so that
reverse-mode differentiation can be written out by hand and checked against
central finite differences. Everything runs in float64 numpy; no autodiff or
deep-learning dependency is involved.

The output activation matters more than the architecture: tanh keeps every
prediction strictly inside (-1, 1), so the inactive sentinel 1.1 is never
reachable and any batch containing an inactive target has a strictly
positive loss floor. Training minimizes plain MSE over all 8 outputs with
inactive targets included as-is.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .affordances import INACTIVE_THRESHOLD, N_VARIABLES, NormalizationRanges, VARIABLES

CHECKPOINT_VERSION = 1
PARAM_KEYS = ("w1", "b1", "w2", "b2", "w3", "b3", "w4", "b4")

# float64 tanh rounds to exactly +-1.0 in deep saturation; the output bound
# must stay strict or an inactive 1.1 target could be approached to 0.1
_ONE_INSIDE = np.nextafter(1.0, 0.0)


class DivergenceError(RuntimeError):
    """Training loss blew past the divergence bound; results are garbage."""


@dataclass(frozen=True)
class NetConfig:
    """Architecture knobs. Defaults fit the 52 x 70 x 3 downsampled frames."""

    input_hw: tuple = (52, 70)
    in_channels: int = 3
    conv_channels: tuple = (8, 16)
    kernel: int = 5
    stride: int = 2
    hidden: int = 64
    outputs: int = N_VARIABLES

    def __post_init__(self):
        if len(self.conv_channels) != 2:
            raise ValueError("exactly two conv layers are supported")
        if self.kernel < 1 or self.stride < 1 or self.hidden < 1:
            raise ValueError("kernel, stride and hidden must be positive")
        h, w = self.conv_hw(2)
        if h < 1 or w < 1:
            raise ValueError("input too small for the conv stack")

    def conv_hw(self, layer: int) -> tuple[int, int]:
        """Spatial output size after `layer` convolutions (valid padding)."""
        h, w = self.input_hw
        for _ in range(layer):
            h = (h - self.kernel) // self.stride + 1
            w = (w - self.kernel) // self.stride + 1
        return (h, w)

    @property
    def flat_features(self) -> int:
        h, w = self.conv_hw(2)
        return h * w * self.conv_channels[1]

    def to_dict(self) -> dict:
        return {
            "input_hw": list(self.input_hw),
            "in_channels": self.in_channels,
            "conv_channels": list(self.conv_channels),
            "kernel": self.kernel,
            "stride": self.stride,
            "hidden": self.hidden,
            "outputs": self.outputs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        return cls(
            input_hw=tuple(d["input_hw"]),
            in_channels=int(d["in_channels"]),
            conv_channels=tuple(d["conv_channels"]),
            kernel=int(d["kernel"]),
            stride=int(d["stride"]),
            hidden=int(d["hidden"]),
            outputs=int(d["outputs"]),
        )


def _conv_forward(x, w, b, stride):
    # x (N,H,W,C), w (k,k,C,F): windows are a strided view, the contraction
    # is one tensordot (BLAS does the heavy lifting)
    k = w.shape[0]
    win = sliding_window_view(x, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    out = np.tensordot(win, w, axes=([3, 4, 5], [2, 0, 1])) + b
    return out


def _conv_backward(x, w, stride, d_out):
    k = w.shape[0]
    n, oh, ow, _ = d_out.shape
    dw = np.zeros_like(w)
    dx = np.zeros_like(x)
    db = d_out.sum(axis=(0, 1, 2))
    for ki in range(k):
        for kj in range(k):
            xs = x[:, ki : ki + stride * oh : stride, kj : kj + stride * ow : stride, :]
            dw[ki, kj] = np.tensordot(xs, d_out, axes=([0, 1, 2], [0, 1, 2]))
            dx[:, ki : ki + stride * oh : stride, kj : kj + stride * ow : stride, :] += np.tensordot(
                d_out, w[ki, kj], axes=([3], [1])
            )
    return dx, dw, db


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over batch x outputs of squared error; inactive 1.1 targets count too."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    if not np.all(np.isfinite(pred)):
        raise ValueError("predictions contain non-finite values")
    return float(np.mean((pred - target) ** 2))


class TinyConvNet:
    """conv-relu, conv-relu, dense-relu, dense-tanh. Forward and backward by hand."""

    def __init__(self, config: NetConfig | None = None, seed: int = 0):
        self.config = config or NetConfig()
        c = self.config
        rng = np.random.Generator(np.random.PCG64(seed))
        k = c.kernel
        c1, c2 = c.conv_channels
        # He initialization for the relu layers, Xavier for the tanh head.
        # Hidden biases get a small random offset: at exactly zero a dead
        # upstream sample parks the preactivation on the relu kink, which
        # breaks finite-difference validation and stalls the unit
        self.params = {
            "w1": rng.normal(0.0, math.sqrt(2.0 / (k * k * c.in_channels)), (k, k, c.in_channels, c1)),
            "b1": rng.normal(0.0, 0.01, c1),
            "w2": rng.normal(0.0, math.sqrt(2.0 / (k * k * c1)), (k, k, c1, c2)),
            "b2": rng.normal(0.0, 0.01, c2),
            "w3": rng.normal(0.0, math.sqrt(2.0 / c.flat_features), (c.flat_features, c.hidden)),
            "b3": rng.normal(0.0, 0.01, c.hidden),
            "w4": rng.normal(0.0, math.sqrt(1.0 / c.hidden), (c.hidden, c.outputs)),
            "b4": np.zeros(c.outputs),
        }

    # -- parameter plumbing --

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in PARAM_KEYS])

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {flat.shape}")
        pos = 0
        for k in PARAM_KEYS:
            p = self.params[k]
            self.params[k] = flat[pos : pos + p.size].reshape(p.shape).copy()
            pos += p.size

    # -- forward / backward --

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        c = self.config
        expected = (c.input_hw[0], c.input_hw[1], c.in_channels)
        if x.ndim == 3:
            x = x[None]
        if x.ndim != 4 or x.shape[1:] != expected:
            raise ValueError(f"input must be (N, {expected[0]}, {expected[1]}, {expected[2]})")
        return x

    def forward(self, x) -> tuple[np.ndarray, dict]:
        x = self._check_input(x)
        p = self.params
        s = self.config.stride

        z1 = _conv_forward(x, p["w1"], p["b1"], s)
        a1 = np.maximum(z1, 0.0)
        z2 = _conv_forward(a1, p["w2"], p["b2"], s)
        a2 = np.maximum(z2, 0.0)
        flat = a2.reshape(len(x), -1)
        z3 = flat @ p["w3"] + p["b3"]
        a3 = np.maximum(z3, 0.0)
        z4 = a3 @ p["w4"] + p["b4"]
        pred = np.clip(np.tanh(z4), -_ONE_INSIDE, _ONE_INSIDE)
        cache = {"x": x, "z1": z1, "a1": a1, "z2": z2, "a2": a2, "flat": flat, "z3": z3, "a3": a3, "pred": pred}
        return pred, cache

    def backward(self, cache: dict, target: np.ndarray) -> dict:
        """Gradient of the batch MSE loss with respect to every parameter."""
        p = self.params
        s = self.config.stride
        pred = cache["pred"]
        target = np.asarray(target, dtype=float)

        d_pred = 2.0 * (pred - target) / pred.size
        d_z4 = d_pred * (1.0 - pred**2)
        g = {}
        g["w4"] = cache["a3"].T @ d_z4
        g["b4"] = d_z4.sum(axis=0)
        d_a3 = d_z4 @ p["w4"].T
        d_z3 = d_a3 * (cache["z3"] > 0.0)
        g["w3"] = cache["flat"].T @ d_z3
        g["b3"] = d_z3.sum(axis=0)
        d_flat = d_z3 @ p["w3"].T
        d_a2 = d_flat.reshape(cache["a2"].shape)
        d_z2 = d_a2 * (cache["z2"] > 0.0)
        d_a1, g["w2"], g["b2"] = _conv_backward(cache["a1"], p["w2"], s, d_z2)
        d_z1 = d_a1 * (cache["z1"] > 0.0)
        _, g["w1"], g["b1"] = _conv_backward(cache["x"], p["w1"], s, d_z1)
        return g

    def loss_and_grads(self, x, target) -> tuple[float, dict]:
        pred, cache = self.forward(x)
        return mse_loss(pred, target), self.backward(cache, target)

    def predict(self, x, chunk: int = 256) -> np.ndarray:
        x = self._check_input(x)
        outs = [self.forward(x[i : i + chunk])[0] for i in range(0, len(x), chunk)]
        return np.concatenate(outs) if outs else np.zeros((0, self.config.outputs))


class Adam:
    """Adaptive-moment gradient descent, the standard bias-corrected form."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError("lr must be positive")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict = {}
        self.v: dict = {}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k, gk in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(gk)
                self.v[k] = np.zeros_like(gk)
            self.m[k] = b1 * self.m[k] + (1 - b1) * gk
            self.v[k] = b2 * self.v[k] + (1 - b2) * gk * gk
            m_hat = self.m[k] / (1 - b1**self.t)
            v_hat = self.v[k] / (1 - b2**self.t)
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    divergence_factor: float = 10.0
    checkpoint_dir: str | None = None

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be at least 1")


def train(
    net: TinyConvNet,
    x: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig | None = None,
    val: tuple[np.ndarray, np.ndarray] | None = None,
) -> list[dict]:
    """Minibatch Adam over (x, y); returns one history row per epoch.

    Single-threaded and deterministic: batch order comes from the config
    seed alone. Checkpoints (when a directory is set) are written after
    every epoch. Raises DivergenceError when a batch loss exceeds
    divergence_factor times the first batch loss.
    """
    cfg = cfg or TrainConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) == 0:
        raise ValueError("x and y must be nonempty and the same length")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    opt = Adam(lr=cfg.lr)
    history: list[dict] = []
    initial_loss: float | None = None

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(x))
        batch_losses = []
        for start in range(0, len(x), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = net.loss_and_grads(x[idx], y[idx])
            if initial_loss is None:
                initial_loss = max(loss, 1e-12)
            if loss > cfg.divergence_factor * initial_loss:
                raise DivergenceError(
                    f"loss {loss:.6g} exceeded {cfg.divergence_factor:g} x initial "
                    f"{initial_loss:.6g} at epoch {epoch}"
                )
            opt.step(net.params, grads)
            batch_losses.append(loss)
        row = {"epoch": epoch, "train_loss": float(np.mean(batch_losses))}
        if val is not None:
            pred = net.predict(val[0])
            row["val_loss"] = mse_loss(pred, val[1])
            row["val_mse"] = [float(v) for v in np.mean((pred - val[1]) ** 2, axis=0)]
        history.append(row)
        if cfg.checkpoint_dir is not None:
            save_checkpoint(net, f"{cfg.checkpoint_dir}/epoch_{epoch:03d}.npz", meta={"epoch": epoch, "history": history})
    return history


# -- checkpoints ---------------------------------------------------------------


def save_checkpoint(net: TinyConvNet, path, meta: dict | None = None) -> None:
    """Versioned binary: parameters plus an echo of the architecture settings."""
    payload = {
        "format_version": np.array(CHECKPOINT_VERSION),
        "config_json": np.array(json.dumps(net.config.to_dict(), sort_keys=True)),
        "meta_json": np.array(json.dumps(meta or {}, sort_keys=True)),
    }
    for k in PARAM_KEYS:
        payload[f"param_{k}"] = net.params[k]
    with open(path, "wb") as f:
        np.savez(f, **payload)


def load_checkpoint(path) -> tuple[TinyConvNet, dict]:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        config = NetConfig.from_dict(json.loads(str(data["config_json"])))
        meta = json.loads(str(data["meta_json"]))
        net = TinyConvNet(config)
        for k in PARAM_KEYS:
            net.params[k] = data[f"param_{k}"].astype(float)
    return net, meta


# -- evaluation ----------------------------------------------------------------


@dataclass
class EvalReport:
    """Per-variable accuracy in the encoded space, physical units, and activity calls.

    Active-target entries and inactive-target entries are scored separately:
    squared error tables cover only entries whose ground truth is active
    (errors against the 1.1 sentinel say nothing about regression quality),
    while sentinel handling is scored as a detection problem at the decode
    threshold.
    """

    count: int
    overall_mse: float
    mse_all: dict
    mse_active: dict
    mse_physical: dict
    active_counts: dict
    inactive_precision: float
    inactive_recall: float
    inactive_per_variable: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "count": self.count,
                "overall_mse": self.overall_mse,
                "mse_all": self.mse_all,
                "mse_active": self.mse_active,
                "mse_physical": self.mse_physical,
                "active_counts": self.active_counts,
                "inactive_precision": self.inactive_precision,
                "inactive_recall": self.inactive_recall,
                "inactive_per_variable": self.inactive_per_variable,
            },
            sort_keys=True,
            indent=2,
        )

    def text_table(self) -> str:
        header = f"{'variable':<10}{'n_active':>9}{'mse':>12}{'physical':>14}"
        lines = [header, "-" * len(header)]
        for name in VARIABLES:
            mse = self.mse_active.get(name)
            phys = self.mse_physical.get(name)
            lines.append(
                f"{name:<10}{self.active_counts[name]:>9}"
                f"{mse if mse is not None else float('nan'):>12.6f}"
                f"{phys if phys is not None else float('nan'):>14.4f}"
            )
        lines.append(
            f"overall mse {self.overall_mse:.6f}   inactive precision {self.inactive_precision:.3f}"
            f" recall {self.inactive_recall:.3f}   n={self.count}"
        )
        return "\n".join(lines)


def evaluate(pred: np.ndarray, target: np.ndarray, ranges: NormalizationRanges | None = None) -> EvalReport:
    """Score predictions against encoded targets.

    ``pred`` are raw model outputs in (-1, 1); ``target`` encoded labels where
    inactive entries are exactly 1.1. Physical-unit errors rescale the encoded
    error by each variable's range (the affine decode makes squared errors
    scale by ((hi - lo) / 1.8)^2).
    """
    ranges = ranges or NormalizationRanges.default()
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape or pred.ndim != 2 or pred.shape[1] != N_VARIABLES:
        raise ValueError("pred and target must both be (N, 8)")
    if len(pred) == 0:
        raise ValueError("cannot evaluate an empty split")

    target_inactive = target > INACTIVE_THRESHOLD
    pred_inactive = pred > INACTIVE_THRESHOLD
    err2 = (pred - target) ** 2
    lo, hi = ranges.lo_array(), ranges.hi_array()
    phys_scale = ((hi - lo) / 1.8) ** 2

    mse_all = {}
    mse_active = {}
    mse_physical = {}
    active_counts = {}
    inactive_pv = {}
    for i, name in enumerate(VARIABLES):
        act = ~target_inactive[:, i]
        mse_all[name] = float(err2[:, i].mean())
        active_counts[name] = int(act.sum())
        if act.any():
            mse_active[name] = float(err2[act, i].mean())
            mse_physical[name] = float(err2[act, i].mean() * phys_scale[i])
        else:
            mse_active[name] = None
            mse_physical[name] = None
        tp = int((target_inactive[:, i] & pred_inactive[:, i]).sum())
        inactive_pv[name] = {
            "true_inactive": int(target_inactive[:, i].sum()),
            "predicted_inactive": int(pred_inactive[:, i].sum()),
            "correct": tp,
        }

    tp = int((target_inactive & pred_inactive).sum())
    fp = int((~target_inactive & pred_inactive).sum())
    fn = int((target_inactive & ~pred_inactive).sum())
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0

    return EvalReport(
        count=len(pred),
        overall_mse=float(err2.mean()),
        mse_all=mse_all,
        mse_active=mse_active,
        mse_physical=mse_physical,
        active_counts=active_counts,
        inactive_precision=float(precision),
        inactive_recall=float(recall),
        inactive_per_variable=inactive_pv,
    )


def epoch_table(history: list[dict]) -> str:
    """Validation MSE per variable, one row per epoch: the familiar 8-column table."""
    header = f"{'epoch':>5} " + " ".join(f"{name:>9}" for name in VARIABLES)
    lines = [header]
    for row in history:
        if "val_mse" not in row:
            continue
        cells = " ".join(f"{v:>9.5f}" for v in row["val_mse"])
        lines.append(f"{row['epoch']:>5} " + cells)
    return "\n".join(lines)


# -- estimator facade ----------------------------------------------------------


class AffordanceRegressor:
    """Thin fit/predict wrapper around TinyConvNet + train.

    Keeps the conventional estimator surface (fit, predict, get_params,
    set_params) for scripting convenience; all hyperparameters are
    constructor arguments.
    """

    def __init__(
        self,
        conv_channels=(8, 16),
        kernel: int = 5,
        stride: int = 2,
        hidden: int = 64,
        lr: float = 1e-3,
        batch_size: int = 32,
        epochs: int = 10,
        seed: int = 0,
    ):
        self.conv_channels = tuple(conv_channels)
        self.kernel = kernel
        self.stride = stride
        self.hidden = hidden
        self.lr = lr
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed
        self.net_: TinyConvNet | None = None
        self.history_: list[dict] | None = None

    def get_params(self, deep: bool = True) -> dict:
        return {
            "conv_channels": self.conv_channels,
            "kernel": self.kernel,
            "stride": self.stride,
            "hidden": self.hidden,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
        }

    def set_params(self, **params) -> "AffordanceRegressor":
        valid = self.get_params()
        for k, v in params.items():
            if k not in valid:
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, tuple(v) if k == "conv_channels" else v)
        return self

    def fit(self, x, y, val=None) -> "AffordanceRegressor":
        x = np.asarray(x, dtype=float)
        if x.ndim != 4:
            raise ValueError("x must be (N, H, W, C)")
        config = NetConfig(
            input_hw=(x.shape[1], x.shape[2]),
            in_channels=x.shape[3],
            conv_channels=self.conv_channels,
            kernel=self.kernel,
            stride=self.stride,
            hidden=self.hidden,
        )
        self.net_ = TinyConvNet(config, seed=self.seed)
        cfg = TrainConfig(lr=self.lr, batch_size=self.batch_size, epochs=self.epochs, seed=self.seed)
        self.history_ = train(self.net_, x, y, cfg, val=val)
        return self

    def predict(self, x) -> np.ndarray:
        if self.net_ is None:
            raise RuntimeError("fit the regressor before predicting")
        return self.net_.predict(x)
