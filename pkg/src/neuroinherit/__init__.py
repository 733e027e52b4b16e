"""Neuroevolution of one-hidden-layer MLPs with darwinian, lamarckian and baldwinian inheritance."""
from .data import Dataset, SplitSpec, load_proben1, parse_proben1, dump_proben1, resplit, sample_f2
from .evolution import (
    EvolutionConfig,
    FitnessRecord,
    GenerationStats,
    StrategyMode,
    compare_baldwinian,
    compare_darwinian,
    evaluate,
    run_evolution,
)
from .harness import ExperimentConfig, run_experiment
from .mlp import MlpGenome, QpParams, TrainReport, classification_error, forward, init_random, nmse, train_qp, weight_count

__version__ = "0.1.0"
