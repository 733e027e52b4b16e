"""Benchmark datasets: Proben1 text files and the sampled f2 curve.

A :class:`Dataset` owns every example of a problem together with three
disjoint index lists (train / validation / test).  It is immutable; every
split-producing function returns a new instance.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, DataError, ParseError

CLASSIFICATION = "classification"
REGRESSION = "regression"
KINDS = (CLASSIFICATION, REGRESSION)

SPLIT_NAMES = ("train", "validation", "test")

PROBEN1_KEYS = (
    "bool_in",
    "real_in",
    "bool_out",
    "real_out",
    "training_examples",
    "validation_examples",
    "test_examples",
)


class Split(NamedTuple):
    """Materialized view of one partition: input matrix, target matrix, kind."""

    inputs: np.ndarray
    targets: np.ndarray
    kind: str

    def __len__(self):
        return self.inputs.shape[0]


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    kind: str
    inputs: np.ndarray
    targets: np.ndarray
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown dataset kind {self.kind!r}")
        inputs = _frozen(self.inputs, np.float64)
        targets = _frozen(self.targets, np.float64)
        if inputs.ndim != 2 or targets.ndim != 2 or inputs.shape[0] != targets.shape[0]:
            raise DataError(
                f"inputs {inputs.shape} and targets {targets.shape} are not row-aligned matrices"
            )
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        for name in SPLIT_NAMES:
            object.__setattr__(self, name, _frozen(getattr(self, name), np.int64).reshape(-1))
        self._check_splits()
        if self.kind == CLASSIFICATION and len(targets):
            if not (np.isin(targets, (0.0, 1.0)).all() and (targets.sum(axis=1) == 1).all()):
                raise DataError("classification targets must be 1-of-C encoded")

    def _check_splits(self):
        n = self.n_examples
        joined = np.concatenate([self.train, self.validation, self.test])
        if joined.size and (joined.min() < 0 or joined.max() >= n):
            raise DataError("split index out of bounds")
        if joined.size != n or np.unique(joined).size != n:
            raise DataError("splits must be disjoint and cover every example")

    @property
    def n_examples(self):
        return self.inputs.shape[0]

    @property
    def n_in(self):
        return self.inputs.shape[1]

    @property
    def n_out(self):
        return self.targets.shape[1]

    def split(self, name: str) -> Split:
        try:
            return self._splits[name]
        except KeyError:
            raise DataError(f"unknown split {name!r}; expected one of {SPLIT_NAMES}") from None

    @cached_property
    def _splits(self):
        out = {}
        for name in SPLIT_NAMES:
            idx = getattr(self, name)
            x = self.inputs[idx]
            t = self.targets[idx]
            x.setflags(write=False)
            t.setflags(write=False)
            out[name] = Split(x, t, self.kind)
        return out

    def split_sizes(self):
        return tuple(len(getattr(self, name)) for name in SPLIT_NAMES)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.inputs.shape == other.inputs.shape
            and self.targets.shape == other.targets.shape
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.targets, other.targets)
            and all(np.array_equal(getattr(self, s), getattr(other, s)) for s in SPLIT_NAMES)
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# Proben1 text format


def parse_proben1(text) -> Dataset:
    """Parse a Proben1 ``.dt`` file.

    ``text`` may be a string or any iterable of lines (an open file works).
    The header is a block of ``key=value`` lines naming the seven Proben1
    counts; every following non-comment line holds one example, inputs first.
    Splits are assigned sequentially in the declared counts.
    """
    if isinstance(text, str):
        lines = io.StringIO(text)
    else:
        lines = text

    header = {}
    rows = []
    width = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if width is None and "=" in line:
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in PROBEN1_KEYS:
                raise ParseError(f"unknown header key {key!r}", lineno)
            if key in header:
                raise ParseError(f"duplicate header key {key!r}", lineno)
            try:
                count = int(value.strip())
            except ValueError:
                raise ParseError(f"header value for {key!r} is not an integer: {value.strip()!r}", lineno) from None
            if count < 0:
                raise ParseError(f"header value for {key!r} is negative", lineno)
            header[key] = count
            continue
        if width is None:
            missing = [k for k in PROBEN1_KEYS if k not in header]
            if missing:
                raise ParseError(f"header is missing {', '.join(missing)}", lineno)
            width = header["bool_in"] + header["real_in"] + header["bool_out"] + header["real_out"]
        tokens = line.split()
        if len(tokens) != width:
            raise ParseError(f"expected {width} numbers, found {len(tokens)}", lineno)
        try:
            row = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise ParseError(f"non-numeric token ({exc})", lineno) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError("non-finite value", lineno)
        rows.append(row)

    if width is None:
        missing = [k for k in PROBEN1_KEYS if k not in header]
        if missing:
            raise ParseError(f"header is missing {', '.join(missing)}")

    n_in = header["bool_in"] + header["real_in"]
    n_out = header["bool_out"] + header["real_out"]
    counts = [header["training_examples"], header["validation_examples"], header["test_examples"]]
    if len(rows) != sum(counts):
        raise ParseError(f"header declares {sum(counts)} examples but file has {len(rows)} rows")

    kind = CLASSIFICATION if header["bool_out"] > 0 and header["real_out"] == 0 else REGRESSION
    table = np.array(rows, dtype=np.float64).reshape(len(rows), n_in + n_out)
    bounds = np.cumsum([0] + counts)
    splits = [np.arange(bounds[i], bounds[i + 1]) for i in range(3)]
    try:
        return Dataset(kind, table[:, :n_in], table[:, n_in:], *splits)
    except DataError as exc:
        raise ParseError(str(exc)) from None


def dump_proben1(dataset: Dataset) -> str:
    """Serialize ``dataset`` to Proben1 text, rows in train/validation/test order.

    Values are written with ``repr`` precision, so re-parsing a sequentially
    split dataset reproduces it exactly.
    """
    bool_out, real_out = (dataset.n_out, 0) if dataset.kind == CLASSIFICATION else (0, dataset.n_out)
    sizes = dataset.split_sizes()
    out = [
        "bool_in=0",
        f"real_in={dataset.n_in}",
        f"bool_out={bool_out}",
        f"real_out={real_out}",
        f"training_examples={sizes[0]}",
        f"validation_examples={sizes[1]}",
        f"test_examples={sizes[2]}",
    ]
    for name in SPLIT_NAMES:
        for i in getattr(dataset, name):
            values = list(dataset.inputs[i]) + list(dataset.targets[i])
            out.append(" ".join(_fmt_exact(v) for v in values))
    return "\n".join(out) + "\n"


def _fmt_exact(value):
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def load_proben1(path) -> Dataset:
    path = Path(path)
    with path.open("r", encoding="ascii") as fh:
        return parse_proben1(fh)


def bundled_glass1a_path() -> Path:
    """Location of the Glass1a file shipped with the package."""
    return Path(__file__).with_name("data") / "glass1a.dt"


# ---------------------------------------------------------------------------
# f2(x) = exp(-5x) sin(2 pi x) on [0, 1]


def f2(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-5.0 * x) * np.sin(2.0 * np.pi * x)


def sample_f2(n_points: int = 200) -> Dataset:
    """Sample f2 on an equidistant grid over [0, 1].

    Grid index ``k`` goes to train when ``k % 4`` is 0 or 1, to validation
    when it is 2 and to test when it is 3.
    """
    if isinstance(n_points, bool) or not isinstance(n_points, (int, np.integer)):
        raise ConfigurationError(f"n_points must be an integer, got {n_points!r}")
    if n_points < 8 or n_points % 4:
        raise ConfigurationError(f"n_points must be >= 8 and divisible by 4, got {n_points}")
    k = np.arange(n_points)
    x = k / (n_points - 1)
    y = f2(x)
    residue = k % 4
    return Dataset(
        REGRESSION,
        x[:, None],
        y[:, None],
        train=k[residue < 2],
        validation=k[residue == 2],
        test=k[residue == 3],
    )


# ---------------------------------------------------------------------------
# re-splitting

SEQUENTIAL = "sequential"
ROUND_ROBIN = "round_robin"


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple = (0.5, 0.25, 0.25)
    policy: str = SEQUENTIAL

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        if len(fr) != 3:
            raise ConfigurationError("fractions must name exactly train, validation and test")
        if any(not f > 0 for f in fr):
            raise ConfigurationError(f"every split fraction must be > 0, got {fr}")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ConfigurationError(f"split fractions must sum to 1, got {sum(fr)}")
        if self.policy not in (SEQUENTIAL, ROUND_ROBIN):
            raise ConfigurationError(f"unknown split policy {self.policy!r}")
        object.__setattr__(self, "fractions", fr)

    def counts(self, n: int):
        """Largest-remainder apportionment of ``n`` examples; ties favour later splits."""
        quotas = [f * n for f in self.fractions]
        counts = [math.floor(q + 1e-9) for q in quotas]
        leftover = n - sum(counts)
        # rank by remainder descending, later split first among equals
        order = sorted(range(3), key=lambda i: (-(round(quotas[i] - counts[i], 9)), -i))
        for i in order[:leftover]:
            counts[i] += 1
        return counts


def resplit(dataset: Dataset, spec: SplitSpec, rng: np.random.Generator | None = None) -> Dataset:
    """Reassign examples to splits; the examples themselves are untouched.

    Without ``rng`` the canonical example order is used; with one, the order
    is a permutation drawn from it.
    """
    n = dataset.n_examples
    counts = spec.counts(n)
    if min(counts) == 0:
        raise ConfigurationError(f"split sizes {counts} for {n} examples leave a split empty")
    order = np.arange(n) if rng is None else rng.permutation(n)

    if spec.policy == SEQUENTIAL:
        bounds = np.cumsum([0] + counts)
        parts = [order[bounds[i]:bounds[i + 1]] for i in range(3)]
    else:
        assigned = [[], [], []]
        for pos, idx in enumerate(order):
            deficits = [
                counts[s] * (pos + 1) / n - len(assigned[s]) if len(assigned[s]) < counts[s] else -math.inf
                for s in range(3)
            ]
            assigned[int(np.argmax(deficits))].append(idx)
        parts = [np.array(sorted(a), dtype=np.int64) for a in assigned]
    return Dataset(dataset.kind, dataset.inputs, dataset.targets, *parts)


def one_hot(labels: Sequence[int], n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out
