"""Shared data model: feature schemas, subjects, and censored-lifetime datasets.

A dataset is stored column-wise (one numpy array per feature plus time and
event arrays) and is immutable after construction. Row-level views are
materialized as :class:`Subject` objects on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import SchemaMismatchError

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Feature:
    """One column of the schema: a name plus numeric/categorical kind."""

    name: str
    kind: str
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("feature name must be non-empty")
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        object.__setattr__(self, "categories", tuple(self.categories))
        if self.kind == CATEGORICAL:
            if len(self.categories) < 1:
                raise ValueError(f"categorical feature {self.name!r} needs at least one category")
            if len(set(self.categories)) != len(self.categories):
                raise ValueError(f"categorical feature {self.name!r} has duplicate categories")
        elif self.categories:
            raise ValueError(f"numeric feature {self.name!r} cannot declare categories")


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered, immutable list of features. Category order is significant."""

    features: tuple[Feature, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self) -> Iterator[Feature]:
        return iter(self.features)

    def __getitem__(self, i: int) -> Feature:
        return self.features[i]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class Subject:
    """One individual: feature values, observed time, and event flag.

    ``values`` holds floats for numeric features and integer category
    indices for categorical ones, in schema order. ``event`` is True when
    the death was observed and False when the time is right-censored.
    """

    id: str
    values: tuple
    time: float
    event: bool


def _column_dtype(feature: Feature):
    return np.float64 if feature.kind == NUMERIC else np.int64


class SurvivalDataset:
    """Immutable censored-lifetime sample bound to a schema."""

    def __init__(self, schema: FeatureSchema, ids: Sequence[str],
                 columns: Sequence[np.ndarray], times: np.ndarray, events: np.ndarray):
        n = len(ids)
        if len(columns) != len(schema):
            raise SchemaMismatchError(
                f"expected {len(schema)} feature columns, got {len(columns)}")
        cols = []
        for feature, col in zip(schema, columns):
            arr = np.asarray(col, dtype=_column_dtype(feature))
            if arr.shape != (n,):
                raise SchemaMismatchError(
                    f"column {feature.name!r} has shape {arr.shape}, expected ({n},)")
            arr = arr.copy()
            arr.flags.writeable = False
            cols.append(arr)
        times = np.asarray(times, dtype=np.float64).copy()
        events = np.asarray(events, dtype=bool).copy()
        if times.shape != (n,) or events.shape != (n,):
            raise SchemaMismatchError("times/events length does not match ids")
        times.flags.writeable = False
        events.flags.writeable = False
        self.schema = schema
        self.ids = tuple(ids)
        self.columns = tuple(cols)
        self.times = times
        self.events = events

    @classmethod
    def from_subjects(cls, schema: FeatureSchema, subjects: Sequence[Subject]) -> "SurvivalDataset":
        for s in subjects:
            if len(s.values) != len(schema):
                raise SchemaMismatchError(
                    f"subject {s.id!r} has {len(s.values)} values, schema has {len(schema)}")
        ids = [s.id for s in subjects]
        columns = [np.array([s.values[j] for s in subjects], dtype=_column_dtype(f))
                   for j, f in enumerate(schema)]
        times = np.array([s.time for s in subjects], dtype=np.float64)
        events = np.array([s.event for s in subjects], dtype=bool)
        return cls(schema, ids, columns, times, events)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_events(self) -> int:
        return int(self.events.sum())

    def subject(self, i: int) -> Subject:
        values = tuple(
            float(col[i]) if f.kind == NUMERIC else int(col[i])
            for f, col in zip(self.schema, self.columns))
        return Subject(self.ids[i], values, float(self.times[i]), bool(self.events[i]))

    def subjects(self) -> Iterator[Subject]:
        for i in range(len(self)):
            yield self.subject(i)

    def subset_mask(self, mask: np.ndarray) -> "SurvivalDataset":
        """Row subset in original order; shares the schema."""
        mask = np.asarray(mask, dtype=bool)
        ids = [sid for sid, keep in zip(self.ids, mask) if keep]
        columns = [col[mask] for col in self.columns]
        return SurvivalDataset(self.schema, ids, columns, self.times[mask], self.events[mask])


def subset(dataset: SurvivalDataset, predicate: Callable[[Subject], bool]) -> SurvivalDataset:
    """Subjects satisfying ``predicate``, original order preserved."""
    mask = np.fromiter((bool(predicate(s)) for s in dataset.subjects()),
                       dtype=bool, count=len(dataset))
    return dataset.subset_mask(mask)


@dataclass(frozen=True)
class Violation:
    """One invariant breach; ``subject_id`` is None for dataset-level issues."""

    subject_id: str | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_dataset(dataset: SurvivalDataset) -> ValidationReport:
    """Check every dataset invariant, reporting violations as data.

    Covers per-subject time validity, missing or out-of-range feature
    values, duplicate ids, and the requirement of at least one observed
    event.
    """
    out: list[Violation] = []
    seen: set[str] = set()
    for i, sid in enumerate(dataset.ids):
        if sid in seen:
            out.append(Violation(sid, "duplicate id"))
        seen.add(sid)
        t = dataset.times[i]
        if not math.isfinite(t):
            out.append(Violation(sid, "non-finite time"))
        elif t < 0:
            out.append(Violation(sid, "negative time"))
    for feature, col in zip(dataset.schema, dataset.columns):
        if feature.kind == NUMERIC:
            bad = np.flatnonzero(~np.isfinite(col))
            for i in bad:
                out.append(Violation(
                    dataset.ids[i], f"missing or non-finite value for feature {feature.name!r}"))
        else:
            bad = np.flatnonzero((col < 0) | (col >= len(feature.categories)))
            for i in bad:
                out.append(Violation(
                    dataset.ids[i], f"unknown category for feature {feature.name!r}"))
    if len(dataset) == 0:
        out.append(Violation(None, "empty dataset"))
    elif not dataset.events.any():
        out.append(Violation(None, "no observed events"))
    return ValidationReport(tuple(out))
