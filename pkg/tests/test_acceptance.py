"""Exit criteria for the package, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the terminal summary.
The desk-scale experiments (criteria 5-7) are the expensive part: about
20 Glass1a runs and 20 f2 runs at population 50, 100 generations and
100 epochs, shared between criteria through session fixtures.
"""
import math
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from neuroinherit import evolution as evo
from neuroinherit.data import Split, bundled_glass1a_path, dump_proben1, load_proben1, parse_proben1
from neuroinherit.evolution import EvolutionConfig, FitnessRecord, compare_baldwinian, compare_darwinian, evaluate, fitness_key
from neuroinherit.harness import ExperimentConfig, run_experiment
from neuroinherit.mlp import QpParams, forward, init_random, loss_gradient, nmse, nmse_values, train_qp, training_loss
from neuroinherit.operators import op_lamarck_train

DESK = dict(population_size=50, generations=100, epochs=100)
DESK_RUNS = 10


def record(number, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# 1. NMSE oracle equivalence


def direct_nmse(targets, outputs):
    s = [float(v) for v in np.ravel(targets)]
    o = [float(v) for v in np.ravel(outputs)]
    mean = math.fsum(s) / len(s)
    num = math.fsum((a - b) ** 2 for a, b in zip(s, o))
    den = math.fsum((a - mean) ** 2 for a in s)
    return math.sqrt(num / den)


def test_criterion_1_nmse_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    mean_ok = exact_ok = True
    for _ in range(100):
        n = int(rng.integers(2, 60))
        x = rng.uniform(0, 1, size=(n, 1))
        t = rng.normal(size=(n, 1))
        split = Split(x, t, "regression")
        genome = init_random(1, int(rng.integers(1, 10)), 1, "linear", rng)
        outputs = forward(genome, x)
        worst = max(worst, abs(nmse(genome, split) - direct_nmse(t, outputs)))
        mean_ok &= abs(nmse_values(t, np.full_like(t, t.mean())) - 1.0) <= 1e-9
        exact_ok &= nmse_values(t, t) == 0.0
    elapsed = time.perf_counter() - started
    record(1, "NMSE matches direct summation", worst <= 1e-12 and mean_ok and exact_ok and elapsed < 1,
           f"max diff {worst:.1e}, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# 2. gradient correctness


def test_criterion_2_gradient_vs_finite_differences():
    started = time.perf_counter()
    rng = np.random.default_rng(2)
    h = 1e-5
    worst = 0.0
    for i in range(20):
        genome = init_random(3, 5, 2, "sigmoid" if i % 2 else "linear", rng)
        kind = "classification" if i % 2 else "regression"
        x = rng.uniform(0, 1, size=(15, 3))
        t = np.eye(2)[rng.integers(2, size=15)] if i % 2 else rng.normal(size=(15, 2))
        split = Split(x, t, kind)
        analytic = loss_gradient(genome, split)
        for which, grad in zip(("hidden_weights", "output_weights"), analytic):
            base = getattr(genome, which)
            fd = np.zeros_like(base)
            for idx in np.ndindex(base.shape):
                plus, minus = base.copy(), base.copy()
                plus[idx] += h
                minus[idx] -= h
                fd[idx] = (
                    training_loss(genome.replace(**{which: plus}), split)
                    - training_loss(genome.replace(**{which: minus}), split)
                ) / (2 * h)
            rel = np.max(np.abs(grad - fd)) / max(np.max(np.abs(fd)), 1e-12)
            worst = max(worst, rel)
    elapsed = time.perf_counter() - started
    record(2, "epoch-1 gradient vs central differences on 20 random 3-5-2 genomes",
           worst < 1e-4 and elapsed < 5, f"max rel err {worst:.1e}, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# 3. inheritance contracts


def test_criterion_3_inheritance_contracts(glass):
    started = time.perf_counter()
    config_b = EvolutionConfig(population_size=20, epochs=50, mode="baldwinian", master_seed=3)
    config_d = EvolutionConfig(population_size=20, epochs=50, mode="darwinian", master_seed=3)
    population = evo.initial_population(glass, config_b)
    digest = [ind.genome.to_bytes() for ind in population]
    for ind in population:
        evaluate(ind.genome, glass, config_b)
        evaluate(ind.genome, glass, config_d)
    untouched = [ind.genome.to_bytes() for ind in population] == digest

    train = glass.split("train")
    improved = changed = 0
    params = QpParams(epochs=50)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        genome = init_random(9, int(rng.integers(2, 11)), 6, "sigmoid", rng)
        child = op_lamarck_train(genome, train, params)
        _, report = train_qp(genome, train, params)
        changed += child != genome
        improved += report.final_train_error <= report.initial_train_error
    elapsed = time.perf_counter() - started
    ok = untouched and changed == 100 and improved >= 90 and elapsed < 120
    record(3, "no writeback outside lamarckian; training operator commits and improves",
           ok, f"hash invariant={untouched}, changed {changed}/100, improved {improved}/100, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 4. comparator properties


def test_criterion_4_comparator_properties():
    started = time.perf_counter()
    rng = np.random.default_rng(4)
    grid = np.array([0.0, 30.0, 31.0, 32.0, 0.086, 0.09])
    n = 3 * 10_000
    errs = np.where(rng.random((n, 2)) < 0.6, rng.choice(grid, (n, 2)), rng.uniform(0, 100, (n, 2)))
    sizes = rng.choice([16, 59, 70, 85, 112], n)
    pool = [FitnessRecord(float(e[0]), float(e[1]), int(w)) for e, w in zip(errs, sizes)]
    triples = iter(zip(pool[0::3], pool[1::3], pool[2::3]))

    violations = 0
    for a, b, c in triples:
        for cmp in (compare_darwinian, compare_baldwinian):
            ab, ba, bc, ac = cmp(a, b), cmp(b, a), cmp(b, c), cmp(a, c)
            if np.sign(ab) != -np.sign(ba):
                violations += 1
            if ab <= 0 and bc <= 0 and ac > 0:
                violations += 1
            if ab == 0 and bc == 0 and ac != 0:
                violations += 1
    forced = (
        compare_baldwinian(FitnessRecord(30, 60, 100), FitnessRecord(32, 10, 10)) < 0
        and compare_baldwinian(FitnessRecord(30, 50, 100), FitnessRecord(30, 40, 10)) > 0
        and compare_baldwinian(FitnessRecord(30, 40, 59), FitnessRecord(30, 40, 112)) < 0
        and compare_darwinian(FitnessRecord(31, None, 112), FitnessRecord(32, None, 59)) < 0
        and compare_darwinian(FitnessRecord(32, None, 59), FitnessRecord(32, None, 112)) < 0
        and compare_darwinian(FitnessRecord(32, None, 59), FitnessRecord(32, None, 59)) == 0
    )
    elapsed = time.perf_counter() - started
    record(4, "comparators are total preorders; lexicographic criteria fire in order",
           violations == 0 and forced and elapsed < 1.0, f"{violations} violations over 10000 triples, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# desk-scale experiments shared by criteria 5-7


def desk_experiment(problem, mode, runs=DESK_RUNS, seed=2001):
    cfg = ExperimentConfig(
        problem,
        mode,
        runs=runs,
        master_seed=seed,
        evolution=DESK,
        data_path=bundled_glass1a_path() if problem == "glass1a" else None,
        jobs=os.cpu_count() or 1,
    )
    started = time.perf_counter()
    summaries, report = run_experiment(cfg)
    return summaries, report, time.perf_counter() - started


@pytest.fixture(scope="session")
def desk_glass():
    return {mode: desk_experiment("glass1a", mode) for mode in ("lamarckian", "baldwinian")}


@pytest.fixture(scope="session")
def desk_f2():
    return {mode: desk_experiment("f2", mode) for mode in ("lamarckian", "baldwinian")}


@pytest.fixture(scope="session")
def desk_darwinian():
    return desk_experiment("f2", "darwinian", runs=5)


def elitist_violations(summaries, mode):
    bad = 0
    for s in summaries:
        keys = [fitness_key(t.as_record(), mode) for t in s.trace]
        bad += sum(1 for a, b in zip(keys, keys[1:]) if b > a)
    return bad


def test_criterion_5_elitist_monotonicity(desk_glass, desk_f2, desk_darwinian):
    checked = 0
    bad = 0
    for results in (desk_glass, desk_f2):
        for mode, (summaries, _, _) in results.items():
            runs = [s for s in summaries if s.ok][:5]
            assert len(runs) == 5
            bad += elitist_violations(runs, mode)
            checked += len(runs)
    summaries, _, elapsed = desk_darwinian
    runs = [s for s in summaries if s.ok]
    bad += elitist_violations(runs, "darwinian")
    checked += len(runs)
    record(5, "best-of-generation never worsens", bad == 0 and checked == 25,
           f"{checked} runs checked, {bad} regressions; darwinian batch {elapsed:.0f}s")


def ordering_report(number, label, results, error_limit, budget):
    lam = results["lamarckian"][1]
    bal = results["baldwinian"][1]
    elapsed = results["lamarckian"][2] + results["baldwinian"][2]
    err_ok = lam.error_mean <= error_limit and bal.error_mean <= error_limit
    gen_ok = lam.generations_mean < bal.generations_mean
    size_ok = lam.size_mean < bal.size_mean
    complete = lam.n_runs == DESK_RUNS and bal.n_runs == DESK_RUNS
    detail = (
        f"error L={lam.error_mean:.4g} B={bal.error_mean:.4g} (limit {error_limit}); "
        f"generations L={lam.generations_mean:.1f} B={bal.generations_mean:.1f}; "
        f"size L={lam.size_mean:.1f} B={bal.size_mean:.1f}; {elapsed / 60:.1f} min"
    )
    record(number, f"desk-scale {label}", err_ok and gen_ok and size_ok and complete and elapsed <= budget, detail)


def test_criterion_6_desk_glass(desk_glass):
    ordering_report(6, "Glass1a", desk_glass, 45.0, 30 * 60)


def test_criterion_7_desk_f2(desk_f2):
    ordering_report(7, "f2", desk_f2, 0.30, 20 * 60)


# ---------------------------------------------------------------------------
# 8. determinism


def test_criterion_8_determinism(tmp_path):
    started = time.perf_counter()
    settings = dict(population_size=12, generations=8, epochs=20)
    trees = []
    for label, jobs in (("a", 1), ("b", 1), ("c", max(2, os.cpu_count() or 1))):
        for problem, mode in (("glass1a", "baldwinian"), ("f2", "lamarckian")):
            cfg = ExperimentConfig(
                problem,
                mode,
                runs=3,
                master_seed=8,
                evolution=settings,
                data_path=bundled_glass1a_path() if problem == "glass1a" else None,
                out_dir=tmp_path / label,
                jobs=jobs,
            )
            run_experiment(cfg)
        root = tmp_path / label
        trees.append(
            {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file() and p.name != "timing.csv"}
        )
    elapsed = time.perf_counter() - started
    same = trees[0] == trees[1] == trees[2] and len(trees[0]) > 0
    record(8, "byte-identical outputs across repeats and parallelism degrees",
           same and elapsed < 300, f"{len(trees[0])} files compared, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 9. Proben1 round trip


def test_criterion_9_proben1_round_trip():
    started = time.perf_counter()
    first = load_proben1(bundled_glass1a_path())
    again = parse_proben1(dump_proben1(first))
    counts = (first.n_examples, first.n_in, first.n_out) == (214, 9, 6)
    elapsed = time.perf_counter() - started
    record(9, "Glass1a parse/serialize/parse identity, 214 x 9 -> 6",
           again == first and counts and elapsed < 1, f"{elapsed:.2f}s")
