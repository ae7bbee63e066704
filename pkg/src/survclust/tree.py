"""Decision tree whose splits maximize Kuiper divergence between child curves.

Each node enumerates attribute-value tests (numeric "value < threshold",
categorical "value = level"), fits survival curves on both induced child
populations, and keeps the candidate with the lowest Kuiper p-value. The
split is accepted only if that p-value clears the Bonferroni-corrected
level alpha/m, m being the number of candidates tested at the node.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import CATEGORICAL, NUMERIC, FeatureSchema, Subject, SurvivalDataset
from .errors import NoEventsAtRootError, SchemaMismatchError
from .kaplan_meier import SurvivalCurve, km_fit_arrays
from .twosample import bonferroni_threshold, kuiper_pvalue, kuiper_statistic

THREADS_ENV_VAR = "SURVCLUST_THREADS"


def worker_count() -> int:
    """Parallelism cap from SURVCLUST_THREADS (0 or unset = auto)."""
    raw = os.environ.get(THREADS_ENV_VAR, "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


@dataclass(frozen=True)
class NumericTest:
    """True iff value < threshold; equality routes to the false side."""

    threshold: float

    def evaluate(self, column: np.ndarray) -> np.ndarray:
        return column < self.threshold


@dataclass(frozen=True)
class CategoryTest:
    """True iff the value equals one category level (one-vs-rest)."""

    category_index: int

    def evaluate(self, column: np.ndarray) -> np.ndarray:
        return column == self.category_index


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    test: Union[NumericTest, CategoryTest]
    p_value: float = float("nan")
    statistic: float = float("nan")


@dataclass(frozen=True)
class TreeConfig:
    alpha: float = 0.05
    min_leaf_subjects: int = 50
    min_leaf_events: int = 5
    max_depth: int = 12
    max_numeric_thresholds: int = 32

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise ValueError("alpha must be in (0, 1]")
        for name in ("min_leaf_subjects", "min_leaf_events", "max_depth",
                     "max_numeric_thresholds"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


@dataclass
class TreeNode:
    """Internal node (split + children) or leaf (curve + counts)."""

    node_id: int
    split: Optional[SplitCandidate] = None
    n_candidates: int = 0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    leaf_id: Optional[int] = None
    n_subjects: int = 0
    n_events: int = 0
    curve: Optional[SurvivalCurve] = None

    @property
    def is_leaf(self) -> bool:
        return self.split is None


@dataclass
class SurvivalTree:
    schema: FeatureSchema
    root: TreeNode
    config: TreeConfig
    leaf_ids: list[int] = field(default_factory=list)

    def leaves(self) -> list[TreeNode]:
        out: list[TreeNode] = []

        def walk(node: TreeNode):
            if node.is_leaf:
                out.append(node)
            else:
                walk(node.left)
                walk(node.right)

        walk(self.root)
        return out

    def nodes(self) -> list[TreeNode]:
        out: list[TreeNode] = []

        def walk(node: TreeNode):
            out.append(node)
            if not node.is_leaf:
                walk(node.left)
                walk(node.right)

        walk(self.root)
        return out


def enumerate_splits(data: SurvivalDataset, schema: FeatureSchema,
                     config: TreeConfig) -> list[SplitCandidate]:
    """All admissible attribute-value tests on this node's population.

    Numeric features test midpoints between consecutive distinct values,
    thinned to at most ``max_numeric_thresholds`` equally spaced positions
    along the sorted midpoint sequence; categorical features test each
    observed level one-vs-rest. Candidates leaving either side short of
    the leaf minima are dropped. Order is deterministic: schema order,
    then ascending threshold / category index.
    """
    n = len(data)
    if n == 0:
        return []
    events = data.events
    out: list[SplitCandidate] = []
    for j, feature in enumerate(schema):
        col = data.columns[j]
        if feature.kind == NUMERIC:
            order = np.argsort(col, kind="stable")
            sorted_col = col[order]
            sorted_events = events[order]
            distinct_mask = np.r_[True, sorted_col[1:] != sorted_col[:-1]]
            distinct = sorted_col[distinct_mask]
            if distinct.size < 2:
                continue
            mids = 0.5 * (distinct[:-1] + distinct[1:])
            if mids.size > config.max_numeric_thresholds:
                pick = np.round(np.linspace(0, mids.size - 1,
                                            config.max_numeric_thresholds)).astype(int)
                mids = np.unique(mids[pick])
            cum_events = np.cumsum(sorted_events)
            total_events = int(cum_events[-1])
            for theta in mids:
                k = int(np.searchsorted(sorted_col, theta, side="left"))
                n_true, n_false = k, n - k
                e_true = int(cum_events[k - 1]) if k > 0 else 0
                e_false = total_events - e_true
                if (min(n_true, n_false) >= config.min_leaf_subjects
                        and min(e_true, e_false) >= config.min_leaf_events):
                    out.append(SplitCandidate(j, NumericTest(float(theta))))
        else:
            for level in range(len(feature.categories)):
                mask = col == level
                n_true = int(mask.sum())
                if n_true == 0:
                    continue  # unobserved level
                e_true = int(events[mask].sum())
                n_false = n - n_true
                e_false = int(events.sum()) - e_true
                if (min(n_true, n_false) >= config.min_leaf_subjects
                        and min(e_true, e_false) >= config.min_leaf_events):
                    out.append(SplitCandidate(j, CategoryTest(level)))
    return out


def _score_candidate(candidate: SplitCandidate, columns, times_sorted, events_sorted):
    """Kuiper p-value of the split; node arrays are pre-sorted by time."""
    mask = candidate.test.evaluate(columns[candidate.feature])
    curve_true = km_fit_arrays(times_sorted[mask], events_sorted[mask], presorted=True)
    curve_false = km_fit_arrays(times_sorted[~mask], events_sorted[~mask], presorted=True)
    v = kuiper_statistic(curve_true, curve_false)
    result = kuiper_pvalue(v, curve_true.n_events, curve_false.n_events)
    return result.p_value, result.statistic


def best_split(data: SurvivalDataset, candidates: list[SplitCandidate],
               config: TreeConfig) -> Optional[SplitCandidate]:
    """Lowest-p candidate iff it clears the Bonferroni-corrected level.

    Ties break toward the earlier candidate in enumeration order (lower
    schema index, then lower threshold / category index), so the reduction
    is order-independent under any evaluation schedule.
    """
    if not candidates:
        return None
    order = np.argsort(data.times, kind="stable")
    times_sorted = data.times[order]
    events_sorted = data.events[order]
    columns = [col[order] for col in data.columns]

    workers = min(worker_count(), len(candidates))
    if workers > 1 and len(candidates) >= 8:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(
                lambda c: _score_candidate(c, columns, times_sorted, events_sorted),
                candidates))
    else:
        scores = [_score_candidate(c, columns, times_sorted, events_sorted)
                  for c in candidates]

    best_idx = min(range(len(candidates)), key=lambda i: (scores[i][0], i))
    p, v = scores[best_idx]
    if p < bonferroni_threshold(config.alpha, len(candidates)):
        chosen = candidates[best_idx]
        return SplitCandidate(chosen.feature, chosen.test, p, v)
    return None


def grow_tree(data: SurvivalDataset, config: TreeConfig = TreeConfig()) -> SurvivalTree:
    """Recursively grow the significance-gated tree on a validated dataset."""
    if len(data) == 0 or not data.events.any():
        raise NoEventsAtRootError("tree growth requires at least one observed event")
    counter = {"node": 0, "leaf": 0}
    leaf_ids: list[int] = []

    def make_node(node_data: SurvivalDataset, depth: int) -> TreeNode:
        node_id = counter["node"]
        counter["node"] += 1
        n = len(node_data)
        n_events = node_data.n_events
        chosen = None
        n_candidates = 0
        splittable = (depth < config.max_depth
                      and n >= 2 * config.min_leaf_subjects
                      and n_events >= 2 * config.min_leaf_events)
        if splittable:
            candidates = enumerate_splits(node_data, node_data.schema, config)
            n_candidates = len(candidates)
            chosen = best_split(node_data, candidates, config)
        if chosen is None:
            leaf_id = counter["leaf"]
            counter["leaf"] += 1
            leaf_ids.append(leaf_id)
            curve = km_fit_arrays(node_data.times, node_data.events)
            return TreeNode(node_id, leaf_id=leaf_id, n_subjects=n,
                            n_events=n_events, curve=curve)
        mask = chosen.test.evaluate(node_data.columns[chosen.feature])
        node = TreeNode(node_id, split=chosen, n_candidates=n_candidates)
        node.left = make_node(node_data.subset_mask(mask), depth + 1)
        node.right = make_node(node_data.subset_mask(~mask), depth + 1)
        return node

    root = make_node(data, 0)
    return SurvivalTree(data.schema, root, config, leaf_ids)


def _check_schema(tree: SurvivalTree, subject: Subject):
    if len(subject.values) != len(tree.schema):
        raise SchemaMismatchError(
            f"subject {subject.id!r} has {len(subject.values)} values, "
            f"schema has {len(tree.schema)}")
    for value, feature in zip(subject.values, tree.schema):
        if feature.kind == CATEGORICAL and not (0 <= int(value) < len(feature.categories)):
            raise SchemaMismatchError(
                f"subject {subject.id!r}: unknown category for feature {feature.name!r}")


def assign_leaf(tree: SurvivalTree, subject: Subject) -> int:
    """Route one subject to its leaf id."""
    _check_schema(tree, subject)
    node = tree.root
    while not node.is_leaf:
        value = subject.values[node.split.feature]
        if isinstance(node.split.test, NumericTest):
            go_left = value < node.split.test.threshold
        else:
            go_left = int(value) == node.split.test.category_index
        node = node.left if go_left else node.right
    return node.leaf_id


def assign_leaves(tree: SurvivalTree, data: SurvivalDataset) -> np.ndarray:
    """Vectorized leaf routing for a whole dataset (schema must match)."""
    if data.schema != tree.schema:
        raise SchemaMismatchError("dataset schema does not match the tree's schema")
    labels = np.full(len(data), -1, dtype=np.int64)

    def walk(node: TreeNode, idx: np.ndarray):
        if node.is_leaf:
            labels[idx] = node.leaf_id
            return
        mask = node.split.test.evaluate(data.columns[node.split.feature][idx])
        walk(node.left, idx[mask])
        walk(node.right, idx[~mask])

    walk(tree.root, np.arange(len(data)))
    return labels
