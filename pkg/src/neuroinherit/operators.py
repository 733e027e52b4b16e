"""Genetic operators on :class:`~neuroinherit.mlp.MlpGenome`.

Every operator returns a genome and never touches its arguments.  When an
operator cannot apply (size floor or cap reached) it returns the parent
object itself, which lets the engine reuse the parent's fitness.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .mlp import INIT_WEIGHT_RANGE, LEARNING_RATE_RANGE, HIDDEN_CAP, MlpGenome, QpParams, train_qp

MUTATE = "mutate"
ADD_NEURON = "add_neuron"
REMOVE_NEURON = "remove_neuron"
CROSSOVER = "crossover"
LAMARCK_TRAIN = "lamarck_train"

STRUCTURAL_OPERATORS = (MUTATE, ADD_NEURON, REMOVE_NEURON, CROSSOVER)
ALL_OPERATORS = STRUCTURAL_OPERATORS + (LAMARCK_TRAIN,)


def op_mutate_weights(genome: MlpGenome, rng, rate=0.1, sigma=0.2, lr_rate=0.1, lr_sigma=0.3) -> MlpGenome:
    """Gaussian weight noise plus a log-normal nudge of the learning rate.

    Each weight is perturbed independently with probability ``rate``; the
    learning rate is scaled by ``exp(N(0, lr_sigma))`` with probability
    ``lr_rate`` and clipped back into its allowed range.
    """
    hw = genome.hidden_weights.copy()
    ow = genome.output_weights.copy()
    for w in (hw, ow):
        hit = rng.random(w.shape) < rate
        w += np.where(hit, rng.normal(0.0, sigma, size=w.shape), 0.0)
    lr = genome.learning_rate
    if rng.random() < lr_rate:
        lo, hi = LEARNING_RATE_RANGE
        lr = float(np.clip(lr * np.exp(rng.normal(0.0, lr_sigma)), lo, hi))
    return genome.replace(hidden_weights=hw, output_weights=ow, learning_rate=lr)


def op_add_neuron(genome: MlpGenome, rng, hidden_cap=HIDDEN_CAP) -> MlpGenome:
    if genome.n_hidden >= hidden_cap:
        return genome
    r = INIT_WEIGHT_RANGE
    fan_in = rng.uniform(-r, r, size=(1, genome.n_in + 1))
    fan_out = rng.uniform(-r, r, size=(genome.n_out, 1))
    hw = np.vstack([genome.hidden_weights, fan_in])
    ow = genome.output_weights
    ow = np.hstack([ow[:, :-1], fan_out, ow[:, -1:]])
    return genome.replace(hidden_weights=hw, output_weights=ow)


def op_remove_neuron(genome: MlpGenome, rng) -> MlpGenome:
    if genome.n_hidden <= 1:
        return genome
    unit = int(rng.integers(genome.n_hidden))
    hw = np.delete(genome.hidden_weights, unit, axis=0)
    ow = np.delete(genome.output_weights, unit, axis=1)
    return genome.replace(hidden_weights=hw, output_weights=ow)


def op_crossover(a: MlpGenome, b: MlpGenome, rng) -> MlpGenome:
    """Unit-wise uniform crossover between two genomes of possibly different size.

    The child size is uniform between the parents' sizes.  Hidden unit ``k``
    (fan-in row and fan-out column together) comes from a random parent that
    has a unit ``k``, otherwise from the larger parent.  Output biases are
    averaged; the learning rate is taken from a random parent.
    """
    if a.n_in != b.n_in or a.n_out != b.n_out or a.output_kind != b.output_kind:
        raise ShapeError(
            f"cannot cross {a.n_in}-{a.n_hidden}-{a.n_out} ({a.output_kind}) with "
            f"{b.n_in}-{b.n_hidden}-{b.n_out} ({b.output_kind})"
        )
    small, large = sorted((a.n_hidden, b.n_hidden))
    size = int(rng.integers(small, large + 1))
    bigger = a if a.n_hidden >= b.n_hidden else b
    hw = np.empty((size, a.n_in + 1))
    ow = np.empty((a.n_out, size + 1))
    for k in range(size):
        if k < small:
            donor = a if rng.random() < 0.5 else b
        else:
            donor = bigger
        hw[k] = donor.hidden_weights[k]
        ow[:, k] = donor.output_weights[:, k]
    ow[:, -1] = 0.5 * (a.output_weights[:, -1] + b.output_weights[:, -1])
    lr = a.learning_rate if rng.random() < 0.5 else b.learning_rate
    return MlpGenome(hw, ow, lr, a.output_kind)


def op_lamarck_train(genome: MlpGenome, split, params: QpParams, rng=None) -> MlpGenome:
    """Train on ``split`` and keep the learned weights as the offspring genome."""
    trained, _ = train_qp(genome, split, params, rng)
    return trained
