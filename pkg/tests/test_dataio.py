import json

import numpy as np
import pytest

from survclust import (Feature, FeatureSchema, SurvivalDataset,
                       validate_dataset)
from survclust.clustering import cluster_assign_dataset, fit_cluster_model
from survclust.dataio import (dump_json, iter_subjects_csv, load_dataset_csv,
                              load_model, model_to_dict, save_dataset_csv,
                              save_json, save_model, schema_from_dict,
                              schema_to_dict, tree_from_dict, tree_to_dict)
from survclust.errors import SchemaMismatchError
from survclust.synth import GroupSpec, SynthConfig, generate
from survclust.tree import TreeConfig, assign_leaves, grow_tree


def mixed_schema():
    return FeatureSchema((Feature("age", "numeric"),
                          Feature("gender", "categorical", ("M", "F"))))


def mixed_dataset():
    schema = mixed_schema()
    return SurvivalDataset(schema, ["a", "b", "c"],
                           [np.array([25.5, 0.1, 43.0]), np.array([0, 1, 0])],
                           np.array([1.0, 2.5, 3.75]),
                           np.array([True, False, True]))


def planted_model(seed=33, k=2):
    config = SynthConfig(
        (GroupSpec(0.5, 2.0, (0.0,)), GroupSpec(0.5, 0.2, (4.0,))),
        n_subjects=800, entry_window=2.0, study_duration=10.0,
        noise_features=1, seed=seed)
    data, _ = generate(config)
    tree = grow_tree(data, TreeConfig(min_leaf_subjects=40, min_leaf_events=5))
    return data, fit_cluster_model(data, tree, k=k)


class TestSchemaJson:
    def test_round_trip(self):
        schema = mixed_schema()
        assert schema_from_dict(schema_to_dict(schema)) == schema

    def test_category_order_preserved(self):
        schema = FeatureSchema((Feature("g", "categorical", ("z", "a", "m")),))
        out = schema_from_dict(schema_to_dict(schema))
        assert out[0].categories == ("z", "a", "m")


class TestSubjectCsv:
    def test_round_trip(self, tmp_path):
        ds = mixed_dataset()
        path = tmp_path / "subjects.csv"
        save_dataset_csv(ds, path)
        back = load_dataset_csv(path, ds.schema)
        assert back.ids == ds.ids
        assert np.array_equal(back.times, ds.times)
        assert np.array_equal(back.events, ds.events)
        for a, b in zip(back.columns, ds.columns):
            assert np.array_equal(a, b)

    def test_float_values_round_trip_exactly(self, tmp_path):
        schema = FeatureSchema((Feature("x", "numeric"),))
        values = np.array([0.1, 1 / 3, np.pi, 1e-17, 12345.6789])
        ds = SurvivalDataset(schema, [f"s{i}" for i in range(5)], [values],
                             np.array([0.1, 0.2, 0.3, 0.4, 1 / 7]),
                             np.ones(5, dtype=bool))
        path = tmp_path / "subjects.csv"
        save_dataset_csv(ds, path)
        back = load_dataset_csv(path, schema)
        assert np.array_equal(back.columns[0], values)
        assert np.array_equal(back.times, ds.times)

    def test_unknown_category_lenient_vs_strict(self, tmp_path):
        path = tmp_path / "subjects.csv"
        path.write_text("id,time,event,age,gender\n"
                        "a,1.0,1,30,M\n"
                        "b,2.0,0,40,UNKNOWN\n")
        schema = mixed_schema()
        ds = load_dataset_csv(path, schema, strict=False)
        report = validate_dataset(ds)
        assert any("gender" in v.message and v.subject_id == "b"
                   for v in report.violations)
        with pytest.raises(SchemaMismatchError) as err:
            list(iter_subjects_csv(path, schema, strict=True))
        assert "gender" in str(err.value)

    def test_missing_required_column(self, tmp_path):
        path = tmp_path / "subjects.csv"
        path.write_text("id,time,age,gender\na,1.0,30,M\n")
        with pytest.raises(SchemaMismatchError):
            load_dataset_csv(path, mixed_schema())

    def test_undeclared_extra_column(self, tmp_path):
        path = tmp_path / "subjects.csv"
        path.write_text("id,time,event,age,gender,mystery\na,1.0,1,30,M,7\n")
        with pytest.raises(SchemaMismatchError):
            load_dataset_csv(path, mixed_schema())

    def test_bad_event_value(self, tmp_path):
        path = tmp_path / "subjects.csv"
        path.write_text("id,time,event,age,gender\na,1.0,yes,30,M\n")
        with pytest.raises(SchemaMismatchError):
            load_dataset_csv(path, mixed_schema())


class TestTreeJson:
    def test_round_trip_reproduces_routing(self):
        data, model = planted_model()
        tree = model.tree
        clone = tree_from_dict(json.loads(dump_json(tree_to_dict(tree))))
        assert np.array_equal(assign_leaves(clone, data), assign_leaves(tree, data))
        assert clone.leaf_ids == tree.leaf_ids
        assert clone.config == tree.config

    def test_serialized_bytes_deterministic(self):
        _, m1 = planted_model(seed=34)
        _, m2 = planted_model(seed=34)
        assert dump_json(model_to_dict(m1)) == dump_json(model_to_dict(m2))


class TestModelJson:
    def test_round_trip(self, tmp_path):
        data, model = planted_model()
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert back.k == model.k
        assert back.leaf_to_cluster == model.leaf_to_cluster
        assert np.array_equal(cluster_assign_dataset(back, data),
                              cluster_assign_dataset(model, data))
        for a, b in zip(back.cluster_curves, model.cluster_curves):
            assert np.array_equal(a.event_times, b.event_times)
            assert np.array_equal(a.survival, b.survival)

    def test_atomic_write_leaves_no_droppings(self, tmp_path):
        path = tmp_path / "out.json"
        save_json({"x": 1}, path)
        assert [p.name for p in tmp_path.iterdir()] == ["out.json"]
