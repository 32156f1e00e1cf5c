"""Benchmark driver: config round-trips, leakage audit, model selection."""

import json

import numpy as np
import pytest

from absenteeism.ann import ANNConfig
from absenteeism.experiment import (
    MODEL_KINDS,
    BenchmarkResult,
    ExperimentConfig,
    ModelRun,
    Repetition,
    aggregate_metrics,
    leakage_report,
    manifest_dict,
    run_benchmark,
    run_importance,
    select_best,
)
from absenteeism.metrics import MetricsReport
from absenteeism.mlr import MLRConfig
from absenteeism.rf import ForestConfig
from absenteeism.svm import SVMConfig

# ---------------------------------------------------------------------------
# config


def test_config_dict_round_trip():
    config = ExperimentConfig(
        train_fraction=0.7,
        seed=99,
        repetitions=3,
        models=("mlr", "rf"),
        smote_k=4,
        mlr=MLRConfig(alpha=0.01),
        svm=SVMConfig(gamma=0.1, c=10.0),
        ann=ANNConfig(hidden=(8, 4), max_epochs=5),
        rf=ForestConfig(n_trees=25),
    )
    assert ExperimentConfig.from_dict(config.to_dict()) == config


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_dict({"seed": 1, "bogus": 2})


def test_config_rejects_unknown_model_kinds():
    with pytest.raises(ValueError, match="unknown model kinds"):
        ExperimentConfig.from_dict({"models": ["mlr", "xgboost"]})


# ---------------------------------------------------------------------------
# synthetic selection fixtures


def _report(weighted_f1, cm):
    cm = np.asarray(cm)
    return MetricsReport(
        confusion=cm,
        accuracy=float(np.trace(cm) / cm.sum()),
        precision=(0.0, 0.0, 0.0),
        recall=(0.0, 0.0, 0.0),
        f1=(0.0, 0.0, 0.0),
        weighted_precision=weighted_f1,
        weighted_recall=weighted_f1,
        weighted_f1=weighted_f1,
        auc=None,
        support=(int(cm[0].sum()), int(cm[1].sum()), int(cm[2].sum())),
    )


CLEAN = [[4, 1, 0], [1, 18, 0], [0, 1, 1]]
DIRTY = [[4, 0, 1], [1, 17, 1], [0, 1, 1]]


def _fake_result(per_rep, models):
    """per_rep: list of {kind: (f1, cm)} dictionaries, one per repetition."""
    reps = []
    for i, runs in enumerate(per_rep):
        rep = Repetition(
            index=i,
            split_seed=i,
            smote_seed=i,
            train_indices=np.arange(10),
            test_indices=np.arange(10, 14),
            smote_source_indices=np.arange(10),
        )
        for kind, (f1, cm) in runs.items():
            rep.runs[kind] = ModelRun(kind=kind, metrics=_report(f1, cm),
                                      fit_seconds=0.0)
        reps.append(rep)
    return BenchmarkResult(
        config=ExperimentConfig(models=models),
        schema=None,
        repetitions=reps,
        wall_seconds=0.0,
    )


def test_select_single_model():
    result = _fake_result([{"mlr": (0.9, CLEAN)}], models=("mlr",))
    record = select_best(result)
    assert record.kind == "mlr"
    assert record.screen_passed == {"mlr": True}


def test_screen_pass_beats_higher_f1():
    per_rep = [
        {"mlr": (0.95, DIRTY), "rf": (0.80, CLEAN)},
        {"mlr": (0.94, DIRTY), "rf": (0.81, CLEAN)},
        {"mlr": (0.96, DIRTY), "rf": (0.79, CLEAN)},
    ]
    record = select_best(_fake_result(per_rep, ("mlr", "rf")))
    assert record.kind == "rf"
    assert record.screen_passed == {"mlr": False, "rf": True}
    assert "screen-passing" in record.reason


def test_fallback_when_no_model_screens_clean():
    per_rep = [
        {"mlr": (0.95, DIRTY), "rf": (0.80, DIRTY)},
        {"mlr": (0.94, DIRTY), "rf": (0.81, DIRTY)},
    ]
    record = select_best(_fake_result(per_rep, ("mlr", "rf")))
    assert record.kind == "mlr"
    assert "no model passed" in record.reason


def test_screen_needs_strict_majority():
    # Clean in exactly half of the repetitions is not enough.
    per_rep = [
        {"rf": (0.8, CLEAN)},
        {"rf": (0.8, DIRTY)},
    ]
    record = select_best(_fake_result(per_rep, ("rf",)))
    assert record.screen_passed == {"rf": False}


def test_selection_invariant_to_model_order():
    per_rep = [{"mlr": (0.9, CLEAN), "rf": (0.85, CLEAN)}] * 3
    forward = select_best(_fake_result(per_rep, ("mlr", "rf")))
    backward = select_best(_fake_result(per_rep, ("rf", "mlr")))
    assert forward.kind == backward.kind == "mlr"


def test_selection_on_repetition_subset():
    per_rep = [
        {"mlr": (0.95, CLEAN), "rf": (0.70, CLEAN)},
        {"mlr": (0.50, CLEAN), "rf": (0.90, CLEAN)},
    ]
    result = _fake_result(per_rep, ("mlr", "rf"))
    assert select_best(result, repetitions=[0]).kind == "mlr"
    assert select_best(result, repetitions=[1]).kind == "rf"


def test_selection_without_any_metrics_raises():
    result = _fake_result([{}], models=("mlr",))
    result.repetitions[0].runs["mlr"] = ModelRun(kind="mlr", metrics=None,
                                                 fit_seconds=0.0, error="boom")
    with pytest.raises(ValueError, match="nothing to select"):
        select_best(result)


# ---------------------------------------------------------------------------
# leakage audit on crafted results


def test_leakage_flags_overlap_and_foreign_smote_rows():
    rep = Repetition(
        index=0,
        split_seed=0,
        smote_seed=0,
        train_indices=np.array([0, 1, 2]),
        test_indices=np.array([2, 3]),          # overlaps train
        smote_source_indices=np.array([0, 3]),  # includes a test row
    )
    result = BenchmarkResult(
        config=ExperimentConfig(models=("mlr",)),
        schema=None,
        repetitions=[rep],
        wall_seconds=0.0,
    )
    problems = "\n".join(leakage_report(result))
    assert "overlap" in problems
    assert "test rows" in problems


# ---------------------------------------------------------------------------
# a small real benchmark run


@pytest.fixture(scope="module")
def small_result(records):
    config = ExperimentConfig(
        repetitions=2,
        seed=7,
        svm=SVMConfig(gamma=0.5, c=1.0),
        ann=ANNConfig(hidden=(8,), max_epochs=3, patience=3),
        rf=ForestConfig(n_trees=15),
    )
    return run_benchmark(config, records)


def test_benchmark_runs_every_model(small_result):
    assert len(small_result.repetitions) == 2
    for rep in small_result.repetitions:
        assert set(rep.runs) == set(MODEL_KINDS)
        for run in rep.runs.values():
            assert run.error is None
            assert run.metrics is not None
            assert run.fit_seconds >= 0.0


def test_benchmark_split_counts(small_result):
    for rep in small_result.repetitions:
        assert len(rep.train_indices) == 518
        assert len(rep.test_indices) == 222
        assert len(np.intersect1d(rep.train_indices, rep.test_indices)) == 0


def test_benchmark_has_no_leakage(small_result):
    assert leakage_report(small_result) == []


def test_benchmark_repetitions_use_distinct_splits(small_result):
    first, second = small_result.repetitions
    assert first.split_seed != second.split_seed
    assert not np.array_equal(first.test_indices, second.test_indices)


def test_aggregate_shape_and_bounds(small_result):
    agg = aggregate_metrics(small_result)
    assert set(agg) == set(MODEL_KINDS)
    for stats in agg.values():
        assert set(stats) == {"accuracy", "weighted_f1", "auc"}
        for summary in stats.values():
            assert summary["min"] <= summary["median"] <= summary["max"]
            assert 0.0 <= summary["min"] and summary["max"] <= 1.0


def test_fitted_models_and_scaler_exposed(small_result):
    assert set(small_result.fitted) == set(MODEL_KINDS)
    assert small_result.rep0_scaler is not None


def test_manifest_is_json_serializable(small_result):
    selection = select_best(small_result)
    doc = manifest_dict(small_result, selection)
    text = json.dumps(doc)
    parsed = json.loads(text)
    assert parsed["selection"]["kind"] == selection.kind
    assert parsed["schema_width"] == 42
    assert parsed["leakage_problems"] == []


def test_ann_validation_rows_come_from_train(small_result):
    for rep in small_result.repetitions:
        val = rep.runs["ann"].validation_rows
        assert val is not None and len(val) > 0
        assert set(int(i) for i in val) <= set(int(i) for i in rep.train_indices)


# ---------------------------------------------------------------------------
# importance entry point


def test_run_importance_covers_full_attribute_space(records):
    schema, importances = run_importance(records, n_trees=10, seed=3)
    assert schema.width == 43
    assert importances.shape == (43,)
    assert np.all(importances >= 0)
    assert importances.sum() == pytest.approx(1.0, abs=1e-9)
    assert any(c.name == "height" for c in schema.columns)
