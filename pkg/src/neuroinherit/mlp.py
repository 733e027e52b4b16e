"""One-hidden-layer perceptrons, QuickProp training and quality measures."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .data import CLASSIFICATION, REGRESSION, Split
from .errors import ConfigurationError, DataError, DegenerateDataError, KindMismatchError, ShapeError

SIGMOID = "sigmoid"
LINEAR = "linear"
OUTPUT_KINDS = (SIGMOID, LINEAR)
OUTPUT_FOR_KIND = {CLASSIFICATION: SIGMOID, REGRESSION: LINEAR}

HIDDEN_CAP = 60
INIT_WEIGHT_RANGE = 0.5
LEARNING_RATE_RANGE = (0.001, 1.0)
INIT_LEARNING_RATE_RANGE = (0.01, 0.5)
WEIGHT_CLAMP = 100.0


def _readonly(array):
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MlpGenome:
    """Directly encoded MLP: weight matrices with a trailing bias column.

    ``hidden_weights`` is ``n_hidden x (n_in + 1)`` and ``output_weights``
    is ``n_out x (n_hidden + 1)``.  Arrays are copied on construction and
    frozen, so a genome behaves as a value.
    """

    hidden_weights: np.ndarray
    output_weights: np.ndarray
    learning_rate: float
    output_kind: str = SIGMOID

    def __post_init__(self):
        hw = _readonly(self.hidden_weights)
        ow = _readonly(self.output_weights)
        if hw.ndim != 2 or ow.ndim != 2:
            raise ShapeError("weight matrices must be two-dimensional")
        if hw.shape[0] < 1 or hw.shape[1] < 2 or ow.shape[0] < 1:
            raise ShapeError(f"degenerate weight shapes {hw.shape}, {ow.shape}")
        if ow.shape[1] != hw.shape[0] + 1:
            raise ShapeError(
                f"output weights {ow.shape} do not match {hw.shape[0]} hidden units (+ bias)"
            )
        if not (np.isfinite(hw).all() and np.isfinite(ow).all()):
            raise ShapeError("weights must be finite")
        if self.output_kind not in OUTPUT_KINDS:
            raise ConfigurationError(f"unknown output kind {self.output_kind!r}")
        lo, hi = LEARNING_RATE_RANGE
        if not lo <= self.learning_rate <= hi:
            raise ConfigurationError(f"learning rate {self.learning_rate} outside [{lo}, {hi}]")
        object.__setattr__(self, "hidden_weights", hw)
        object.__setattr__(self, "output_weights", ow)
        object.__setattr__(self, "learning_rate", float(self.learning_rate))

    @property
    def n_in(self):
        return self.hidden_weights.shape[1] - 1

    @property
    def n_hidden(self):
        return self.hidden_weights.shape[0]

    @property
    def n_out(self):
        return self.output_weights.shape[0]

    def replace(self, **changes) -> "MlpGenome":
        fields_ = dict(
            hidden_weights=self.hidden_weights,
            output_weights=self.output_weights,
            learning_rate=self.learning_rate,
            output_kind=self.output_kind,
        )
        fields_.update(changes)
        return MlpGenome(**fields_)

    def to_bytes(self) -> bytes:
        """Canonical byte image, used for hashing and identity checks."""
        head = f"{self.n_in},{self.n_hidden},{self.n_out},{self.output_kind},".encode()
        return (
            head
            + np.float64(self.learning_rate).tobytes()
            + self.hidden_weights.tobytes()
            + self.output_weights.tobytes()
        )

    def __eq__(self, other):
        if not isinstance(other, MlpGenome):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    def __hash__(self):
        return hash(self.to_bytes())


@dataclass(frozen=True)
class QpParams:
    epochs: int = 200
    max_growth_factor: float = 1.75
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if not self.max_growth_factor > 1:
            raise ConfigurationError("max_growth_factor must be > 1")
        if self.weight_decay < 0:
            raise ConfigurationError("weight_decay must be >= 0")


@dataclass(frozen=True)
class TrainReport:
    epochs_run: int
    initial_train_error: float
    final_train_error: float
    clamped: bool = field(default=False, compare=False)


def weight_count(genome: MlpGenome) -> int:
    return (genome.n_in + 1) * genome.n_hidden + (genome.n_hidden + 1) * genome.n_out


def init_random(n_in, n_hidden, n_out, output_kind, rng, hidden_cap=HIDDEN_CAP) -> MlpGenome:
    """Random genome: weights uniform in [-0.5, 0.5], learning rate log-uniform in [0.01, 0.5]."""
    for name, value in (("n_in", n_in), ("n_hidden", n_hidden), ("n_out", n_out)):
        if value < 1:
            raise ConfigurationError(f"{name} must be >= 1, got {value}")
    if n_hidden > hidden_cap:
        raise ConfigurationError(f"n_hidden {n_hidden} exceeds hidden cap {hidden_cap}")
    if output_kind not in OUTPUT_KINDS:
        raise ConfigurationError(f"unknown output kind {output_kind!r}")
    r = INIT_WEIGHT_RANGE
    hidden = rng.uniform(-r, r, size=(n_hidden, n_in + 1))
    output = rng.uniform(-r, r, size=(n_out, n_hidden + 1))
    lo, hi = INIT_LEARNING_RATE_RANGE
    lr = math.exp(rng.uniform(math.log(lo), math.log(hi)))
    return MlpGenome(hidden, output, lr, output_kind)


def forward(genome: MlpGenome, inputs) -> np.ndarray:
    """Network outputs for one input vector, or row-wise for a matrix."""
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != genome.n_in:
        raise ShapeError(f"expected inputs of length {genome.n_in}, got shape {np.shape(inputs)}")
    hw, ow = genome.hidden_weights, genome.output_weights
    h = expit(x @ hw[:, :-1].T + hw[:, -1])
    o = h @ ow[:, :-1].T + ow[:, -1]
    if genome.output_kind == SIGMOID:
        o = expit(o)
    return o[0] if single else o


def _check_split(genome, split: Split):
    if len(split) == 0:
        raise DataError("split is empty")
    if split.inputs.shape[1] != genome.n_in or split.targets.shape[1] != genome.n_out:
        raise ShapeError(
            f"genome {genome.n_in}-{genome.n_hidden}-{genome.n_out} does not fit data with "
            f"{split.inputs.shape[1]} inputs and {split.targets.shape[1]} outputs"
        )


class _Batch:
    """Preallocated buffers for repeated full-batch passes over one split."""

    def __init__(self, genome, split):
        x = split.inputs
        self.n = x.shape[0]
        self.n_in = genome.n_in
        self.n_hidden = genome.n_hidden
        self.n_out = genome.n_out
        self.sigmoid_out = genome.output_kind == SIGMOID
        self.xb = np.empty((self.n, self.n_in + 1))
        self.xb[:, :-1] = x
        self.xb[:, -1] = 1.0
        self.t = split.targets
        self.hb = np.empty((self.n, self.n_hidden + 1))
        self.hb[:, -1] = 1.0
        self.split_at = self.n_hidden * (self.n_in + 1)

    def views(self, w):
        hw = w[: self.split_at].reshape(self.n_hidden, self.n_in + 1)
        ow = w[self.split_at:].reshape(self.n_out, self.n_hidden + 1)
        return hw, ow

    def outputs(self, w):
        hw, ow = self.views(w)
        h = self.hb[:, :-1]
        np.matmul(self.xb, hw.T, out=h)
        expit(h, out=h)
        o = self.hb @ ow.T
        if self.sigmoid_out:
            expit(o, out=o)
        return o

    def mse(self, w):
        r = self.outputs(w) - self.t
        return float(np.mean(r * r))

    def gradient(self, w, grad):
        """Fill ``grad`` with dE/dw for E = sum of squared residuals / (2 * n); return mean squared error."""
        hw, ow = self.views(w)
        o = self.outputs(w)
        r = o - self.t
        mse = float(np.mean(r * r))
        delta_o = r / self.n
        if self.sigmoid_out:
            delta_o *= o * (1.0 - o)
        g_hw, g_ow = self.views(grad)
        np.matmul(delta_o.T, self.hb, out=g_ow)
        h = self.hb[:, :-1]
        delta_h = (delta_o @ ow[:, :-1]) * h * (1.0 - h)
        np.matmul(delta_h.T, self.xb, out=g_hw)
        return mse


def _flatten(genome):
    return np.concatenate([genome.hidden_weights.ravel(), genome.output_weights.ravel()])


def _unflatten(genome, w, batch):
    hw, ow = batch.views(w)
    return genome.replace(hidden_weights=hw, output_weights=ow)


def training_loss(genome: MlpGenome, split: Split) -> float:
    """Objective minimized by :func:`train_qp`: half the mean over examples of the summed squared residual."""
    _check_split(genome, split)
    r = forward(genome, split.inputs) - split.targets
    return float(0.5 * np.sum(r * r) / len(split))


def loss_gradient(genome: MlpGenome, split: Split):
    """Analytic gradient of :func:`training_loss` as ``(d_hidden, d_output)`` matrices."""
    _check_split(genome, split)
    batch = _Batch(genome, split)
    grad = np.empty(batch.split_at + genome.n_out * (genome.n_hidden + 1))
    batch.gradient(_flatten(genome), grad)
    g_hw, g_ow = batch.views(grad)
    return g_hw.copy(), g_ow.copy()


def train_qp(genome: MlpGenome, split: Split, params: QpParams, rng=None):
    """Full-batch QuickProp on ``split``; returns ``(trained_genome, TrainReport)``.

    Fahlman's update, applied per weight with ``S`` the current slope:

    * no previous step: gradient descent with the genome's learning rate;
    * otherwise the secant step ``S / (S_prev - S) * dw_prev``, replaced by
      ``max_growth_factor * dw_prev`` when the slope has not shrunk enough
      for the parabola to be trusted, and limited to that size in any case;
    * while the slope still points the way the previous step went, the
      gradient-descent term is added on top.

    Weights are clipped to +-100 after every epoch.  The procedure is
    deterministic; ``rng`` is accepted for interface uniformity and is not
    consumed.
    """
    _check_split(genome, split)
    batch = _Batch(genome, split)
    w = _flatten(genome)
    if params.epochs == 0:
        err = batch.mse(w)
        return genome, TrainReport(0, err, err)

    lr = genome.learning_rate
    mu = params.max_growth_factor
    shrink = mu / (1.0 + mu)
    decay = params.weight_decay
    grad = np.empty_like(w)
    prev_grad = None
    prev_step = None
    clamped = False
    initial = None

    for _ in range(params.epochs):
        err = batch.gradient(w, grad)
        if initial is None:
            initial = err
        if decay:
            grad += decay * w
        if prev_step is None:
            step = -lr * grad
        else:
            step = qp_step(grad, prev_grad, prev_step, lr, mu, shrink)
        new_w = w + step
        if not np.isfinite(new_w).all():
            new_w = np.nan_to_num(new_w, nan=0.0, posinf=WEIGHT_CLAMP, neginf=-WEIGHT_CLAMP)
            clamped = True
        if np.abs(new_w).max() > WEIGHT_CLAMP:
            np.clip(new_w, -WEIGHT_CLAMP, WEIGHT_CLAMP, out=new_w)
            clamped = True
        prev_step = new_w - w
        prev_grad = grad.copy()
        w = new_w

    final = batch.mse(w)
    return _unflatten(genome, w, batch), TrainReport(params.epochs, initial, final, clamped)


def qp_step(grad, prev_grad, prev_step, lr, mu, shrink=None):
    """One QuickProp weight change from the current and previous error derivatives."""
    if shrink is None:
        shrink = mu / (1.0 + mu)
    slope = -grad
    prev_slope = -prev_grad
    direction = np.sign(prev_step)
    descent = np.where((direction == 0) | (direction * slope > 0), lr * slope, 0.0)
    grow = direction * slope > direction * shrink * prev_slope
    denom = prev_slope - slope
    quad = np.divide(slope, denom, out=np.zeros_like(slope), where=denom != 0) * prev_step
    quad = np.where(grow, mu * prev_step, quad)
    limit = mu * np.abs(prev_step)
    np.clip(quad, -limit, limit, out=quad)
    return descent + quad


def classification_error(genome: MlpGenome, split: Split) -> float:
    """Percentage of misclassified examples; predicted class is the first maximal output."""
    if split.kind != CLASSIFICATION:
        raise KindMismatchError("classification error needs a classification split")
    _check_split(genome, split)
    predicted = np.argmax(forward(genome, split.inputs), axis=1)
    actual = np.argmax(split.targets, axis=1)
    hits = int(np.count_nonzero(predicted == actual))
    return 100.0 * (1.0 - hits / len(split))


def nmse_values(targets, outputs) -> float:
    s = np.asarray(targets, dtype=np.float64).ravel()
    o = np.asarray(outputs, dtype=np.float64).ravel()
    if s.shape != o.shape:
        raise ShapeError(f"targets {s.shape} and outputs {o.shape} differ")
    if s.size < 2:
        raise DegenerateDataError("normalized error needs at least two examples")
    denom = np.sum((s - s.mean()) ** 2)
    if denom == 0.0:
        raise DegenerateDataError("all targets are identical; normalized error is undefined")
    return float(np.sqrt(np.sum((s - o) ** 2) / denom))


def nmse(genome: MlpGenome, split: Split) -> float:
    """Root of residual sum of squares over total sum of squares about the target mean."""
    if split.kind != REGRESSION:
        raise KindMismatchError("NMSE needs a regression split")
    _check_split(genome, split)
    return nmse_values(split.targets, forward(genome, split.inputs))


def validation_metric(genome: MlpGenome, split: Split) -> float:
    """Classification error (percent) or NMSE, whichever fits the split."""
    if split.kind == CLASSIFICATION:
        return classification_error(genome, split)
    return nmse(genome, split)
