"""File formats: subject CSV with a JSON schema sidecar, tree and model JSON.

All JSON is dumped with sorted keys and compact separators so identical
objects produce identical bytes; floats round-trip exactly through repr.
Files are written atomically (temp file + rename).
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from typing import Iterator

from .clustering import ClusterModel
from .core import (CATEGORICAL, NUMERIC, Feature, FeatureSchema, Subject,
                   SurvivalDataset)
from .errors import SchemaMismatchError
from .kaplan_meier import SurvivalCurve
from .tree import (CategoryTest, NumericTest, SplitCandidate, SurvivalTree,
                   TreeConfig, TreeNode)

RESERVED_COLUMNS = ("id", "time", "event")


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def atomic_write_text(path, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_json(obj, path):
    atomic_write_text(path, dump_json(obj) + "\n")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------- schema

def schema_to_dict(schema: FeatureSchema) -> dict:
    features = []
    for f in schema:
        entry: dict = {"name": f.name, "kind": f.kind}
        if f.kind == CATEGORICAL:
            entry["categories"] = list(f.categories)
        features.append(entry)
    return {"features": features}


def schema_from_dict(d: dict) -> FeatureSchema:
    features = []
    for entry in d["features"]:
        features.append(Feature(entry["name"], entry["kind"],
                                tuple(entry.get("categories", ()))))
    return FeatureSchema(tuple(features))


# ------------------------------------------------------------- subjects

def _format_value(feature: Feature, value) -> str:
    if feature.kind == NUMERIC:
        return repr(float(value))
    idx = int(value)
    if 0 <= idx < len(feature.categories):
        return feature.categories[idx]
    return ""  # preserved as an invalid marker


def _parse_value(feature: Feature, raw: str, strict: bool):
    if feature.kind == NUMERIC:
        if not raw.strip():
            if strict:
                raise SchemaMismatchError(f"missing value in column {feature.name!r}")
            return float("nan")
        return float(raw)
    try:
        return feature.categories.index(raw)
    except ValueError:
        if strict:
            raise SchemaMismatchError(
                f"unknown category {raw!r} in column {feature.name!r}")
        return -1


def save_dataset_csv(dataset: SurvivalDataset, path):
    header = list(RESERVED_COLUMNS) + list(dataset.schema.names)
    lines = [",".join(header)]
    for i, sid in enumerate(dataset.ids):
        row = [sid, repr(float(dataset.times[i])), "1" if dataset.events[i] else "0"]
        row += [_format_value(f, col[i]) for f, col in
                zip(dataset.schema, dataset.columns)]
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _open_subject_reader(path, schema: FeatureSchema):
    fh = open(path, newline="")
    reader = csv.DictReader(fh)
    fields = set(reader.fieldnames or ())
    missing = set(RESERVED_COLUMNS) - fields
    if missing:
        fh.close()
        raise SchemaMismatchError(f"subject CSV missing columns: {sorted(missing)}")
    extra = fields - set(RESERVED_COLUMNS) - set(schema.names)
    undeclared = set(schema.names) - fields
    if extra or undeclared:
        fh.close()
        parts = []
        if undeclared:
            parts.append(f"columns missing for schema features: {sorted(undeclared)}")
        if extra:
            parts.append(f"columns not declared in the schema: {sorted(extra)}")
        raise SchemaMismatchError("; ".join(parts))
    return fh, reader


def _row_to_subject(row: dict, schema: FeatureSchema, strict: bool) -> Subject:
    raw_event = row["event"].strip()
    if raw_event not in ("0", "1"):
        raise SchemaMismatchError(f"event must be 0 or 1, got {raw_event!r}")
    values = tuple(_parse_value(f, row[f.name], strict) for f in schema)
    return Subject(row["id"], values, float(row["time"]), raw_event == "1")


def iter_subjects_csv(path, schema: FeatureSchema, strict: bool = True) -> Iterator[Subject]:
    """Stream subjects row by row; strict mode rejects unknown categories."""
    fh, reader = _open_subject_reader(path, schema)
    try:
        for row in reader:
            yield _row_to_subject(row, schema, strict)
    finally:
        fh.close()


def load_dataset_csv(path, schema: FeatureSchema, strict: bool = False) -> SurvivalDataset:
    """Read a subject CSV; lenient mode stores invalid cells for validation."""
    subjects = list(iter_subjects_csv(path, schema, strict))
    return SurvivalDataset.from_subjects(schema, subjects)


# ------------------------------------------------------------------ tree

def _test_to_dict(test) -> dict:
    if isinstance(test, NumericTest):
        return {"kind": "numeric_lt", "threshold": test.threshold}
    return {"kind": "category_eq", "index": test.category_index}


def _test_from_dict(d: dict):
    if d["kind"] == "numeric_lt":
        return NumericTest(float(d["threshold"]))
    if d["kind"] == "category_eq":
        return CategoryTest(int(d["index"]))
    raise ValueError(f"unknown test kind {d['kind']!r}")


def tree_to_dict(tree: SurvivalTree) -> dict:
    nodes = []

    def walk(node: TreeNode):
        if node.is_leaf:
            nodes.append({
                "id": node.node_id,
                "leaf_id": node.leaf_id,
                "n_subjects": node.n_subjects,
                "n_events": node.n_events,
                "curve": node.curve.to_json_dict(),
            })
        else:
            nodes.append({
                "id": node.node_id,
                "feature": tree.schema[node.split.feature].name,
                "test": _test_to_dict(node.split.test),
                "p_value": node.split.p_value,
                "statistic": node.split.statistic,
                "n_candidates": node.n_candidates,
                "left": node.left.node_id,
                "right": node.right.node_id,
            })
            walk(node.left)
            walk(node.right)

    walk(tree.root)
    config = tree.config
    return {
        "schema": schema_to_dict(tree.schema),
        "config": {
            "alpha": config.alpha,
            "min_leaf_subjects": config.min_leaf_subjects,
            "min_leaf_events": config.min_leaf_events,
            "max_depth": config.max_depth,
            "max_numeric_thresholds": config.max_numeric_thresholds,
        },
        "root": tree.root.node_id,
        "nodes": nodes,
        "leaf_ids": list(tree.leaf_ids),
    }


def tree_from_dict(d: dict) -> SurvivalTree:
    schema = schema_from_dict(d["schema"])
    config = TreeConfig(**d["config"])
    by_id = {node["id"]: node for node in d["nodes"]}

    def build(node_id: int) -> TreeNode:
        raw = by_id[node_id]
        if "leaf_id" in raw:
            return TreeNode(raw["id"], leaf_id=raw["leaf_id"],
                            n_subjects=raw["n_subjects"], n_events=raw["n_events"],
                            curve=SurvivalCurve.from_json_dict(raw["curve"]))
        split = SplitCandidate(schema.index(raw["feature"]),
                               _test_from_dict(raw["test"]),
                               raw["p_value"], raw["statistic"])
        node = TreeNode(raw["id"], split=split, n_candidates=raw["n_candidates"])
        node.left = build(raw["left"])
        node.right = build(raw["right"])
        return node

    return SurvivalTree(schema, build(d["root"]), config, list(d["leaf_ids"]))


# ----------------------------------------------------------------- model

def model_to_dict(model: ClusterModel) -> dict:
    return {
        "tree": tree_to_dict(model.tree),
        "k": model.k,
        "leaf_to_cluster": [[lid, model.leaf_to_cluster[lid]]
                            for lid in sorted(model.leaf_to_cluster)],
        "cluster_curves": [c.to_json_dict() for c in model.cluster_curves],
    }


def model_from_dict(d: dict) -> ClusterModel:
    tree = tree_from_dict(d["tree"])
    leaf_to_cluster = {int(lid): int(cid) for lid, cid in d["leaf_to_cluster"]}
    curves = tuple(SurvivalCurve.from_json_dict(c) for c in d["cluster_curves"])
    return ClusterModel(tree, leaf_to_cluster, int(d["k"]), curves)


def save_model(model: ClusterModel, path):
    save_json(model_to_dict(model), path)


def load_model(path) -> ClusterModel:
    return model_from_dict(load_json(path))
