"""Data model shared by all modules: labeled datasets, batches, score sets,
and reproducible random streams.

Conventions:
  * labels are exactly +1 / -1 (inputs using {0,1} are rejected, not coerced);
  * a dataset is stored class-partitioned (positives first-class, negatives
    first-class), row order preserved within each class;
  * randomness is always derived from an explicit (master_seed, stream_id)
    pair so that repeat r of an experiment uses the same stream regardless
    of execution order or thread count.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

DEFAULT_SCORE_RANGE = (-1.0, 1.0)


class EmptyClassError(ValueError):
    """A class (positives or negatives) is empty where it must not be."""


class CapacityError(ValueError):
    """Requested more samples than a class contains."""


class ShapeError(ValueError):
    """Array dimensions do not match the operation's contract."""


class DomainError(ValueError):
    """Scalar input outside the mathematical domain of the function."""


class ScoreRangeError(ValueError):
    """A score lies outside the declared score range [b, B]."""


class MonotonicityError(ValueError):
    """Samples expected to be monotone are not."""


class ExperimentSpecError(ValueError):
    """An experiment specification is infeasible or inconsistent."""


class DatasetFormatError(ValueError):
    """A data file row could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or gradient; carries the iteration."""

    def __init__(self, iteration: int, message: str):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class LabeledVector:
    """A feature vector with a binary label in {+1, -1}."""

    features: np.ndarray
    label: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 1 or feats.size == 0:
            raise ShapeError("features must be a non-empty 1-D vector")
        if not np.all(np.isfinite(feats)):
            raise DomainError("features must be finite")
        if self.label not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.label!r}")
        object.__setattr__(self, "features", feats)


@dataclass(frozen=True)
class Dataset:
    """Class-partitioned dataset: positives (label +1) and negatives (label -1).

    `positives` and `negatives` are (N+, dim) and (N-, dim) float arrays.
    """

    positives: np.ndarray
    negatives: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positives, dtype=np.float64))
        neg = np.atleast_2d(np.asarray(self.negatives, dtype=np.float64))
        if pos.shape[0] == 0 or neg.shape[0] == 0:
            raise EmptyClassError("dataset needs at least one positive and one negative")
        if pos.shape[1] != neg.shape[1] or pos.shape[1] == 0:
            raise ShapeError(f"feature dims differ: {pos.shape[1]} vs {neg.shape[1]}")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
            raise DomainError("features must be finite")
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "negatives", neg)

    @property
    def n_pos(self) -> int:
        return self.positives.shape[0]

    @property
    def n_neg(self) -> int:
        return self.negatives.shape[0]

    @property
    def dim(self) -> int:
        return self.positives.shape[1]

    @property
    def prior_pi(self) -> float:
        return self.n_pos / (self.n_pos + self.n_neg)

    @staticmethod
    def from_rows(rows: list[LabeledVector]) -> "Dataset":
        pos = [r.features for r in rows if r.label == 1]
        neg = [r.features for r in rows if r.label == -1]
        if not pos or not neg:
            raise EmptyClassError("dataset needs at least one positive and one negative")
        return Dataset(np.stack(pos), np.stack(neg))


@dataclass(frozen=True)
class Batch:
    """Index lists into a dataset's positives / negatives."""

    pos_indices: np.ndarray
    neg_indices: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pos_indices, dtype=np.int64)
        ni = np.asarray(self.neg_indices, dtype=np.int64)
        if pi.size == 0 or ni.size == 0:
            raise EmptyClassError("batch needs at least one index per class")
        if len(np.unique(pi)) != pi.size or len(np.unique(ni)) != ni.size:
            raise ValueError("batch indices must be distinct within each class")
        object.__setattr__(self, "pos_indices", pi)
        object.__setattr__(self, "neg_indices", ni)

    @property
    def n_pos(self) -> int:
        return self.pos_indices.size

    @property
    def n_neg(self) -> int:
        return self.neg_indices.size

    @property
    def sampling_rate(self) -> float:
        return self.n_pos / (self.n_pos + self.n_neg)


@dataclass(frozen=True)
class ScoreSet:
    """Scores of the positive and negative examples of some set."""

    pos_scores: np.ndarray
    neg_scores: np.ndarray

    def __post_init__(self):
        ps = np.atleast_1d(np.asarray(self.pos_scores, dtype=np.float64))
        ns = np.atleast_1d(np.asarray(self.neg_scores, dtype=np.float64))
        if ps.size == 0 or ns.size == 0:
            raise EmptyClassError("score set needs both classes non-empty")
        if not (np.all(np.isfinite(ps)) and np.all(np.isfinite(ns))):
            raise DomainError("scores must be finite")
        object.__setattr__(self, "pos_scores", ps)
        object.__setattr__(self, "neg_scores", ns)

    @property
    def n_pos(self) -> int:
        return self.pos_scores.size

    @property
    def n_neg(self) -> int:
        return self.neg_scores.size

    @property
    def prior_pi(self) -> float:
        return self.n_pos / (self.n_pos + self.n_neg)


@dataclass(frozen=True)
class RngHandle:
    """Deterministic random stream keyed by (master_seed, stream_id).

    Distinct stream_ids give statistically independent streams, so parallel
    repeats keyed by repeat index reproduce bit-identically under any
    schedule.
    """

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator at the start of this handle's stream."""
        seq = np.random.SeedSequence(
            [self.master_seed & 0xFFFFFFFFFFFFFFFF, self.stream_id & 0xFFFFFFFFFFFFFFFF]
        )
        return np.random.Generator(np.random.PCG64(seq))

    def stream(self, stream_id: int) -> "RngHandle":
        """Sibling handle with the same master seed."""
        return RngHandle(self.master_seed, stream_id)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngHandle):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngHandle or numpy Generator, got {type(rng)!r}")


def load_dataset(path, has_header: bool = False) -> Dataset:
    """Load a CSV dataset: column 1 = label (+1/-1), columns 2.. = features.

    Accepts UTF-8 with LF or CRLF endings and an optional single header line.
    Raises DatasetFormatError with the offending line number on malformed
    rows, EmptyClassError if either class is absent.
    """
    rows: list[LabeledVector] = []
    dim = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) < 2:
                raise DatasetFormatError(lineno, "need a label and at least one feature")
            try:
                values = [float(cell) for cell in record]
            except ValueError:
                raise DatasetFormatError(lineno, f"non-numeric value in {record!r}") from None
            label = values[0]
            if label not in (1.0, -1.0):
                raise DatasetFormatError(lineno, f"label must be +1 or -1, got {label}")
            feats = np.asarray(values[1:], dtype=np.float64)
            if dim is None:
                dim = feats.size
            elif feats.size != dim:
                raise DatasetFormatError(lineno, f"expected {dim} features, got {feats.size}")
            if not np.all(np.isfinite(feats)):
                raise DatasetFormatError(lineno, "non-finite feature value")
            rows.append(LabeledVector(feats, int(label)))
    if not rows:
        raise EmptyClassError(f"no data rows in {path}")
    return Dataset.from_rows(rows)


def save_dataset(dataset: Dataset, path) -> None:
    """Inverse of load_dataset (no header)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in dataset.positives:
            writer.writerow([1] + [repr(float(v)) for v in row])
        for row in dataset.negatives:
            writer.writerow([-1] + [repr(float(v)) for v in row])


def sample_batch(dataset: Dataset, n_pos: int, n_neg: int, rng) -> Batch:
    """Sample a batch uniformly without replacement within each class.

    `rng` may be an RngHandle (fresh stream each call, so the same handle
    always yields the same batch) or a numpy Generator (consumes state).
    """
    if not (1 <= n_pos <= dataset.n_pos):
        raise CapacityError(f"n_pos={n_pos} not in [1, {dataset.n_pos}]")
    if not (1 <= n_neg <= dataset.n_neg):
        raise CapacityError(f"n_neg={n_neg} not in [1, {dataset.n_neg}]")
    gen = _as_generator(rng)
    pos_idx = gen.choice(dataset.n_pos, size=n_pos, replace=False)
    neg_idx = gen.choice(dataset.n_neg, size=n_neg, replace=False)
    return Batch(pos_idx, neg_idx)
