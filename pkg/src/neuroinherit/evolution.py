"""Elitist generational evolution of MLPs under three inheritance strategies.

``darwinian``
    fitness is the validation error of a transiently trained copy, ties
    broken by fewer weights; the genome keeps its untrained weights.
``lamarckian``
    same fitness, plus a training operator whose trained weights become
    the offspring genome.
``baldwinian``
    fitness also records the validation error *before* training and ranks
    by (after, before, weights); the genome is never written back.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import operators as ops
from .data import Dataset
from .errors import ConfigurationError, ModeMismatchError, StateError
from .mlp import HIDDEN_CAP, OUTPUT_FOR_KIND, MlpGenome, QpParams, init_random, train_qp, validation_metric, weight_count


class StrategyMode(str, enum.Enum):
    DARWINIAN = "darwinian"
    LAMARCKIAN = "lamarckian"
    BALDWINIAN = "baldwinian"

    def __str__(self):
        return self.value


MODES = tuple(m.value for m in StrategyMode)


@dataclass(frozen=True)
class FitnessRecord:
    error_after: float
    error_before: Optional[float]
    weights: int
    evaluated_at_generation: int = 0


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 200
    generations: int = 300
    epochs: int = 200
    mode: StrategyMode = StrategyMode.LAMARCKIAN
    elite_fraction: float = 0.10
    operators: Optional[tuple] = None
    hidden_init_range: tuple = (2, 10)
    hidden_cap: int = HIDDEN_CAP
    equality_tolerance: float = 1e-6
    master_seed: int = 0
    max_growth_factor: float = 1.75
    weight_decay: float = 0.0
    mutation_rate: float = 0.1
    mutation_sigma: float = 0.2
    lr_mutation_rate: float = 0.1
    lr_mutation_sigma: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "mode", StrategyMode(self.mode))
        if self.population_size < 2:
            raise ConfigurationError("population_size must be >= 2")
        if self.generations < 0 or self.epochs < 0:
            raise ConfigurationError("generations and epochs must be >= 0")
        if not 0 < self.elite_fraction <= 0.5:
            raise ConfigurationError("elite_fraction must lie in (0, 0.5]")
        lo, hi = self.hidden_init_range
        if lo < 1 or hi < lo or hi > self.hidden_cap:
            raise ConfigurationError(
                f"hidden_init_range {self.hidden_init_range} must satisfy 1 <= lo <= hi <= hidden_cap ({self.hidden_cap})"
            )
        if self.equality_tolerance < 0:
            raise ConfigurationError("equality_tolerance must be >= 0")
        roster = self.operators if self.operators is not None else default_operators(self.mode)
        roster = tuple(roster)
        if not roster:
            raise ConfigurationError("at least one operator must be enabled")
        unknown = set(roster) - set(ops.ALL_OPERATORS)
        if unknown:
            raise ConfigurationError(f"unknown operators {sorted(unknown)}; known: {ops.ALL_OPERATORS}")
        if ops.LAMARCK_TRAIN in roster and self.mode is not StrategyMode.LAMARCKIAN:
            raise ConfigurationError("the training operator is only available in lamarckian mode")
        object.__setattr__(self, "operators", roster)
        object.__setattr__(self, "hidden_init_range", (int(lo), int(hi)))

    @property
    def qp_params(self):
        return QpParams(self.epochs, self.max_growth_factor, self.weight_decay)

    @property
    def elite_count(self):
        return math.ceil(self.elite_fraction * self.population_size)


def default_operators(mode) -> tuple:
    if StrategyMode(mode) is StrategyMode.LAMARCKIAN:
        return ops.ALL_OPERATORS
    return ops.STRUCTURAL_OPERATORS


@dataclass(frozen=True)
class Individual:
    genome: MlpGenome
    fitness: FitnessRecord


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_error_after: float
    best_error_before: Optional[float]
    best_weights: int
    mean_error_after: float
    mean_weights: float

    def as_record(self) -> FitnessRecord:
        return FitnessRecord(self.best_error_after, self.best_error_before, self.best_weights, self.generation)


@dataclass
class EvolutionResult:
    best: Individual
    trace: list
    generation_of_best: int
    population: list = field(repr=False, default_factory=list)


# ---------------------------------------------------------------------------
# comparators
#
# Errors are compared on a grid of width ``tol``: two errors tie when they
# round to the same grid point.  This keeps the induced order a genuine
# total preorder.


def _grid(value, tol):
    if tol <= 0:
        return value
    return round(value / tol)


def darwinian_key(record: FitnessRecord, tol=1e-6):
    return (_grid(record.error_after, tol), record.weights)


def baldwinian_key(record: FitnessRecord, tol=1e-6):
    if record.error_before is None:
        raise ModeMismatchError("baldwinian comparison needs error_before on every record")
    return (_grid(record.error_after, tol), _grid(record.error_before, tol), record.weights)


def fitness_key(record: FitnessRecord, mode, tol=1e-6):
    """Sort key under ``mode``'s comparator; smaller is better."""
    if StrategyMode(mode) is StrategyMode.BALDWINIAN:
        return baldwinian_key(record, tol)
    return darwinian_key(record, tol)


def _cmp(ka, kb):
    return (ka > kb) - (ka < kb)


def compare_darwinian(a: FitnessRecord, b: FitnessRecord, tol=1e-6) -> int:
    """Negative when ``a`` is better, positive when ``b`` is, zero on a tie."""
    return _cmp(darwinian_key(a, tol), darwinian_key(b, tol))


def compare_baldwinian(a: FitnessRecord, b: FitnessRecord, tol=1e-6) -> int:
    """Lexicographic on (error after training, error before training, weights)."""
    return _cmp(baldwinian_key(a, tol), baldwinian_key(b, tol))


def comparator(mode) -> Callable:
    if StrategyMode(mode) is StrategyMode.BALDWINIAN:
        return compare_baldwinian
    return compare_darwinian


# ---------------------------------------------------------------------------
# evaluation


def evaluate(genome: MlpGenome, data: Dataset, config: EvolutionConfig, rng=None, generation=0) -> FitnessRecord:
    trained = trained_network(genome, data, config, rng)
    validation = data.split("validation")
    after = validation_metric(trained, validation)
    before = None
    if config.mode is StrategyMode.BALDWINIAN:
        before = validation_metric(genome, validation)
    for value in (after, before):
        if value is not None and not math.isfinite(value):
            raise FloatingPointError(f"non-finite validation error {value}")
    return FitnessRecord(after, before, weight_count(genome), generation)


def trained_network(genome: MlpGenome, data: Dataset, config: EvolutionConfig, rng=None) -> MlpGenome:
    """The transient trained copy whose validation error is the fitness."""
    trained, _ = train_qp(genome, data.split("train"), config.qp_params, rng)
    return trained


def _stream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


INIT_STREAM = 0
OFFSPRING_STREAM = 1
EVALUATION_STREAM = 2


def population_stats(population: Sequence[Individual], config: EvolutionConfig, generation: int) -> GenerationStats:
    if not population:
        raise StateError("population is empty")
    tol = config.equality_tolerance
    best = min(population, key=lambda ind: fitness_key(ind.fitness, config.mode, tol))
    return GenerationStats(
        generation=generation,
        best_error_after=best.fitness.error_after,
        best_error_before=best.fitness.error_before,
        best_weights=best.fitness.weights,
        mean_error_after=float(np.mean([ind.fitness.error_after for ind in population])),
        mean_weights=float(np.mean([ind.fitness.weights for ind in population])),
    )


def rank(population: Sequence[Individual], config: EvolutionConfig) -> list:
    tol = config.equality_tolerance
    return sorted(population, key=lambda ind: fitness_key(ind.fitness, config.mode, tol))


def apply_operator(name, parent: MlpGenome, mate: MlpGenome, data: Dataset, config: EvolutionConfig, rng) -> MlpGenome:
    if name == ops.MUTATE:
        return ops.op_mutate_weights(
            parent,
            rng,
            rate=config.mutation_rate,
            sigma=config.mutation_sigma,
            lr_rate=config.lr_mutation_rate,
            lr_sigma=config.lr_mutation_sigma,
        )
    if name == ops.ADD_NEURON:
        return ops.op_add_neuron(parent, rng, config.hidden_cap)
    if name == ops.REMOVE_NEURON:
        return ops.op_remove_neuron(parent, rng)
    if name == ops.CROSSOVER:
        return ops.op_crossover(parent, mate, rng)
    if name == ops.LAMARCK_TRAIN:
        if config.mode is not StrategyMode.LAMARCKIAN:
            raise ConfigurationError("the training operator is only available in lamarckian mode")
        return ops.op_lamarck_train(parent, data.split("train"), config.qp_params, rng)
    raise ConfigurationError(f"unknown operator {name!r}")


def draw_breeding(rng, pool_size, roster):
    """Parent index, operator name (uniform over ``roster``) and mate index for crossover."""
    parent = int(rng.integers(pool_size))
    name = roster[int(rng.integers(len(roster)))]
    mate = int(rng.integers(pool_size)) if name == ops.CROSSOVER else None
    return parent, name, mate


def make_offspring(pool: Sequence[Individual], data: Dataset, config: EvolutionConfig, generation: int, slot: int):
    """Breed and evaluate the child for ``slot``; returns ``(Individual, operator name)``.

    All randomness comes from streams keyed by (seed, generation, slot), so
    the result does not depend on the order in which slots are processed.
    """
    rng = _stream(config.master_seed, OFFSPRING_STREAM, generation, slot)
    p, name, m = draw_breeding(rng, len(pool), config.operators)
    parent = pool[p]
    mate = pool[m] if m is not None else None
    child = apply_operator(name, parent.genome, mate.genome if mate else None, data, config, rng)
    if child is parent.genome:
        return parent, name
    eval_rng = _stream(config.master_seed, EVALUATION_STREAM, generation, slot)
    return Individual(child, evaluate(child, data, config, eval_rng, generation)), name


def step_generation(population, data: Dataset, config: EvolutionConfig, generation: int, map_fn=map):
    """Produce generation ``generation`` from the evaluated ``population``.

    The top ``ceil(elite_fraction * N)`` individuals survive unchanged; every
    other slot receives one child of a parent drawn uniformly from the top
    half, made by exactly one operator drawn uniformly from the roster.
    ``map_fn`` may be a parallel map; results are merged in slot order.
    """
    if not population:
        raise StateError("population is empty")
    if any(ind.fitness is None for ind in population):
        raise StateError("population must be fully evaluated")
    n = len(population)
    ranked = rank(population, config)
    n_elite = min(config.elite_count, n)
    pool = ranked[: max(1, n // 2)]
    slots = range(n_elite, n)
    children = list(map_fn(lambda s: make_offspring(pool, data, config, generation, s)[0], slots))
    new_population = ranked[:n_elite] + children
    return new_population, population_stats(new_population, config, generation)


def initial_population(data: Dataset, config: EvolutionConfig) -> list:
    rng = _stream(config.master_seed, INIT_STREAM)
    lo, hi = config.hidden_init_range
    kind = OUTPUT_FOR_KIND[data.kind]
    population = []
    for slot in range(config.population_size):
        n_hidden = int(rng.integers(lo, hi + 1))
        genome = init_random(data.n_in, n_hidden, data.n_out, kind, rng, hidden_cap=config.hidden_cap)
        eval_rng = _stream(config.master_seed, EVALUATION_STREAM, 0, slot)
        population.append(Individual(genome, evaluate(genome, data, config, eval_rng, 0)))
    return population


def generation_of_best(trace: Sequence[GenerationStats], best: FitnessRecord, config: EvolutionConfig) -> int:
    """First generation whose best individual ties ``best`` under the run's comparator."""
    tol = config.equality_tolerance
    target = fitness_key(best, config.mode, tol)
    for stats in trace:
        if fitness_key(stats.as_record(), config.mode, tol) == target:
            return stats.generation
    raise StateError("final best never appears in the trace")


def run_evolution(config: EvolutionConfig, data: Dataset, map_fn=map, on_generation=None) -> EvolutionResult:
    population = initial_population(data, config)
    trace = [population_stats(population, config, 0)]
    if on_generation:
        on_generation(population, trace[-1])
    for generation in range(1, config.generations + 1):
        population, stats = step_generation(population, data, config, generation, map_fn)
        trace.append(stats)
        if on_generation:
            on_generation(population, stats)
    best = rank(population, config)[0]
    return EvolutionResult(best, trace, generation_of_best(trace, best.fitness, config), population)
