"""The comparison experiment: repeated split/scale/oversample/fit/score runs.

Each repetition draws its own derived seeds, splits 70/30 stratified,
fits the min-max scaler on the training block only, oversamples the
training block for the margin, network and forest models (the regression
trains on the raw block) and scores everything on the untouched test
block. All row index sets are recorded so a leakage audit can re-verify
that no test row ever influenced training.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import ann as ann_mod
from . import mlr as mlr_mod
from . import rf as rf_mod
from . import svm as svm_mod
from .ingest import HireTimeRecord, parse_dataset, to_hire_time
from .metrics import MetricsReport, evaluate_predictions
from .numerics import RngStream
from .preprocess import (FeatureSchema, ScalerParams, apply_scaler, build_schema,
                         encode, fit_scaler, smote_oversample, stratified_split)

MODEL_KINDS = ("mlr", "svm", "ann", "rf")
SMOTE_KINDS = ("svm", "ann", "rf")     # the regression trains on raw rows


@dataclass(frozen=True)
class ExperimentConfig:
    data_path: str = "data/Absenteeism_at_work.csv"
    train_fraction: float = 0.7
    seed: int = 20240813
    repetitions: int = 10
    models: tuple[str, ...] = MODEL_KINDS
    smote_k: int = 5
    mlr: mlr_mod.MLRConfig = field(default_factory=mlr_mod.MLRConfig)
    svm: svm_mod.SVMConfig = field(default_factory=svm_mod.SVMConfig)
    ann: ann_mod.ANNConfig = field(default_factory=ann_mod.ANNConfig)
    rf: rf_mod.ForestConfig = field(default_factory=rf_mod.ForestConfig)

    def to_dict(self) -> dict:
        return {
            "data_path": self.data_path,
            "train_fraction": self.train_fraction,
            "seed": self.seed,
            "repetitions": self.repetitions,
            "models": list(self.models),
            "smote_k": self.smote_k,
            "mlr": {"alpha": self.mlr.alpha, "tol": self.mlr.tol,
                    "max_iter": self.mlr.max_iter},
            "svm": {"gamma": self.svm.gamma, "c": self.svm.c, "tol": self.svm.tol,
                    "max_iter": self.svm.max_iter},
            "ann": {"hidden": list(self.ann.hidden),
                    "learning_rate": self.ann.learning_rate,
                    "batch_size": self.ann.batch_size,
                    "max_epochs": self.ann.max_epochs,
                    "patience": self.ann.patience,
                    "val_fraction": self.ann.val_fraction},
            "rf": {"n_trees": self.rf.n_trees,
                   "features_per_split": self.rf.features_per_split},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {"data_path", "train_fraction", "seed", "repetitions", "models",
                 "smote_k", "mlr", "svm", "ann", "rf"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = {k: doc[k] for k in
              ("data_path", "train_fraction", "seed", "repetitions", "smote_k")
              if k in doc}
        if "models" in doc:
            bad = set(doc["models"]) - set(MODEL_KINDS)
            if bad:
                raise ValueError(f"unknown model kinds: {sorted(bad)}")
            kw["models"] = tuple(doc["models"])
        if "mlr" in doc:
            kw["mlr"] = mlr_mod.MLRConfig(**doc["mlr"])
        if "svm" in doc:
            kw["svm"] = svm_mod.SVMConfig(**doc["svm"])
        if "ann" in doc:
            ann_kw = dict(doc["ann"])
            if "hidden" in ann_kw:
                ann_kw["hidden"] = tuple(ann_kw["hidden"])
            kw["ann"] = ann_mod.ANNConfig(**ann_kw)
        if "rf" in doc:
            kw["rf"] = rf_mod.ForestConfig(**doc["rf"])
        return cls(**kw)


@dataclass
class ModelRun:
    kind: str
    metrics: MetricsReport | None
    fit_seconds: float
    error: str | None = None
    validation_rows: np.ndarray | None = None   # original dataset indices


@dataclass
class Repetition:
    index: int
    split_seed: int
    smote_seed: int
    train_indices: np.ndarray
    test_indices: np.ndarray
    smote_source_indices: np.ndarray
    runs: dict[str, ModelRun] = field(default_factory=dict)


@dataclass
class BenchmarkResult:
    config: ExperimentConfig
    schema: FeatureSchema
    repetitions: list[Repetition]
    wall_seconds: float
    fitted: dict[str, object] = field(default_factory=dict)   # repetition 0 models
    rep0_scaler: ScalerParams | None = None


def fit_kind(kind: str, config: ExperimentConfig, X_raw: np.ndarray,
             y_raw: np.ndarray, X_smote: np.ndarray, y_smote: np.ndarray,
             seed: int):
    """Fit one model kind on the appropriate training view.

    Returns (model, validation_row_positions) where the positions index
    into the rows the model actually saw (None when not applicable).
    """
    if kind == "mlr":
        model, _ = mlr_mod.fit_mlr(X_raw, y_raw, config.mlr)
        return model, None
    if kind == "svm":
        return svm_mod.svm_fit(X_smote, y_smote, config.svm), None
    if kind == "ann":
        model, report = ann_mod.ann_train(
            X_smote, y_smote, replace(config.ann, seed=seed))
        return model, report.val_indices
    if kind == "rf":
        return rf_mod.forest_fit(X_smote, y_smote,
                                 replace(config.rf, seed=seed)), None
    raise ValueError(f"unknown model kind {kind!r}")


def predict_kind(kind: str, model, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Labels plus per-class scores (probabilities, margins or vote shares)."""
    if kind == "mlr":
        scores = mlr_mod.predict_proba(model, X)
    elif kind == "svm":
        scores = svm_mod.svm_decision_values(model, X)
    elif kind == "ann":
        scores = ann_mod.ann_forward(model, X)
    elif kind == "rf":
        votes = rf_mod.forest_votes(model, X)
        scores = votes / max(len(model.trees), 1)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return np.argmax(scores, axis=1), scores


def score_kind_name(kind: str) -> str:
    return {"mlr": "probabilities", "ann": "probabilities",
            "svm": "decision_values", "rf": "vote_shares"}[kind]


def run_benchmark(config: ExperimentConfig,
                  records: list[HireTimeRecord] | None = None,
                  progress=None) -> BenchmarkResult:
    """Run every repetition of the comparison and collect all artifacts.

    A model that fails inside one repetition records its error and leaves
    the other models' results intact. ``progress`` is an optional callable
    fed one status line per fit.
    """
    t0 = time.perf_counter()
    if records is None:
        records = to_hire_time(parse_dataset(config.data_path))
    schema = build_schema(records, modeled_only=True)
    enc = encode(records, schema)
    root = RngStream(config.seed)

    result = BenchmarkResult(config=config, schema=schema, repetitions=[],
                             wall_seconds=0.0)
    for r in range(config.repetitions):
        rep_rng = root.spawn(r)
        split_seed = rep_rng.spawn(1).seed
        smote_seed = rep_rng.spawn(2).seed
        split = stratified_split(enc.y, config.train_fraction, split_seed)
        scaler = fit_scaler(enc.X, schema, rows=split.train)
        Xs = apply_scaler(enc.X, scaler)
        X_train, y_train = Xs[split.train], enc.y[split.train]
        X_test, y_test = Xs[split.test], enc.y[split.test]
        X_sm, y_sm = smote_oversample(X_train, y_train, k=config.smote_k,
                                      seed=smote_seed)
        if r == 0:
            result.rep0_scaler = scaler

        rep = Repetition(index=r, split_seed=split_seed, smote_seed=smote_seed,
                         train_indices=split.train, test_indices=split.test,
                         smote_source_indices=split.train.copy())
        for kind in config.models:
            model_seed = rep_rng.spawn(10 + MODEL_KINDS.index(kind)).seed
            t1 = time.perf_counter()
            try:
                model, val_pos = fit_kind(kind, config, X_train, y_train,
                                          X_sm, y_sm, model_seed)
                labels, scores = predict_kind(kind, model, X_test)
                report = evaluate_predictions(y_test, labels, scores)
                val_rows = None
                if val_pos is not None:
                    original = val_pos[val_pos < len(split.train)]
                    val_rows = split.train[original]
                rep.runs[kind] = ModelRun(kind=kind, metrics=report,
                                          fit_seconds=time.perf_counter() - t1,
                                          validation_rows=val_rows)
                if r == 0:
                    result.fitted[kind] = model
            except Exception as exc:
                rep.runs[kind] = ModelRun(kind=kind, metrics=None,
                                          fit_seconds=time.perf_counter() - t1,
                                          error=f"{type(exc).__name__}: {exc}")
            if progress is not None:
                run = rep.runs[kind]
                status = (f"accuracy={run.metrics.accuracy:.4f}"
                          if run.metrics else f"failed: {run.error}")
                progress(f"rep {r} {kind}: {status} ({run.fit_seconds:.1f}s)")
        result.repetitions.append(rep)

    result.wall_seconds = time.perf_counter() - t0
    return result


def aggregate_metrics(result: BenchmarkResult) -> dict[str, dict[str, dict[str, float]]]:
    """Median/min/max of accuracy, weighted F1 and AUC per model kind."""
    out: dict[str, dict[str, dict[str, float]]] = {}
    for kind in result.config.models:
        series: dict[str, list[float]] = {"accuracy": [], "weighted_f1": [], "auc": []}
        for rep in result.repetitions:
            run = rep.runs.get(kind)
            if run is None or run.metrics is None:
                continue
            series["accuracy"].append(run.metrics.accuracy)
            series["weighted_f1"].append(run.metrics.weighted_f1)
            if run.metrics.auc is not None:
                series["auc"].append(run.metrics.auc)
        out[kind] = {
            name: {
                "median": float(np.median(vals)) if vals else float("nan"),
                "min": float(np.min(vals)) if vals else float("nan"),
                "max": float(np.max(vals)) if vals else float("nan"),
            }
            for name, vals in series.items()
        }
    return out


@dataclass
class SelectionRecord:
    kind: str
    median_f1: dict[str, float]
    screen_passed: dict[str, bool]
    reason: str


def _passes_screen(reps: list[Repetition], kind: str) -> bool:
    """True when a strict majority of repetitions never misroute a less
    severe truth into the most severe prediction."""
    ok = 0
    total = 0
    for rep in reps:
        run = rep.runs.get(kind)
        if run is None or run.metrics is None:
            continue
        total += 1
        cm = run.metrics.confusion
        if cm[0, 2] == 0 and cm[1, 2] == 0:
            ok += 1
    return total > 0 and ok * 2 > total


def select_best(result: BenchmarkResult,
                repetitions: list[int] | None = None) -> SelectionRecord:
    """Rank by median weighted F1 with the severe-misroute safety screen.

    Models that keep the most severe prediction clean of less severe
    truths are preferred; if none do, the ranking alone decides and the
    record says so. Invariant to the order models were run in.
    ``repetitions`` restricts the ranking to a subset of repetition
    indices, e.g. a single one for a per-split selection.
    """
    if repetitions is None:
        reps = result.repetitions
    else:
        reps = [result.repetitions[r] for r in repetitions]
    medians: dict[str, float] = {}
    screened: dict[str, bool] = {}
    for kind in sorted(result.config.models):
        f1s = [rep.runs[kind].metrics.weighted_f1 for rep in reps
               if rep.runs.get(kind) is not None
               and rep.runs[kind].metrics is not None]
        medians[kind] = float(np.median(f1s)) if f1s else float("nan")
        screened[kind] = _passes_screen(reps, kind)
    candidates = [k for k in medians if screened[k] and not np.isnan(medians[k])]
    if candidates:
        kind = max(candidates, key=lambda k: (medians[k], k))
        reason = "highest median weighted F1 among screen-passing models"
    else:
        usable = [k for k in medians if not np.isnan(medians[k])]
        if not usable:
            raise ValueError("no model produced metrics; nothing to select")
        kind = max(usable, key=lambda k: (medians[k], k))
        reason = "no model passed the severity screen; highest median weighted F1 overall"
    return SelectionRecord(kind=kind, median_f1=medians, screen_passed=screened,
                           reason=reason)


def leakage_report(result: BenchmarkResult) -> list[str]:
    """Audit the recorded index sets; an empty list means no leakage."""
    problems = []
    n_rows = None
    for rep in result.repetitions:
        train = set(int(i) for i in rep.train_indices)
        test = set(int(i) for i in rep.test_indices)
        if train & test:
            problems.append(f"rep {rep.index}: train and test overlap")
        if n_rows is None:
            n_rows = len(train) + len(test)
        if train | test != set(range(n_rows)):
            problems.append(f"rep {rep.index}: split does not cover the dataset")
        smote_src = set(int(i) for i in rep.smote_source_indices)
        if smote_src - train:
            problems.append(f"rep {rep.index}: oversampling saw non-training rows")
        if smote_src & test:
            problems.append(f"rep {rep.index}: oversampling saw test rows")
        for kind, run in rep.runs.items():
            if run.validation_rows is None:
                continue
            val = set(int(i) for i in run.validation_rows)
            if val & test:
                problems.append(f"rep {rep.index} {kind}: validation used test rows")
            if val - train:
                problems.append(f"rep {rep.index} {kind}: validation outside train rows")
    return problems


def manifest_dict(result: BenchmarkResult,
                  selection: SelectionRecord | None = None) -> dict:
    """JSON-able record of everything the benchmark did."""
    doc = {
        "config": result.config.to_dict(),
        "schema_width": result.schema.width,
        "wall_seconds": result.wall_seconds,
        "repetitions": [
            {
                "index": rep.index,
                "split_seed": rep.split_seed,
                "smote_seed": rep.smote_seed,
                "train_indices": [int(i) for i in rep.train_indices],
                "test_indices": [int(i) for i in rep.test_indices],
                "runs": {
                    kind: {
                        "metrics": run.metrics.to_dict() if run.metrics else None,
                        "fit_seconds": run.fit_seconds,
                        "error": run.error,
                        "validation_rows": (
                            [int(i) for i in run.validation_rows]
                            if run.validation_rows is not None else None
                        ),
                    }
                    for kind, run in rep.runs.items()
                },
            }
            for rep in result.repetitions
        ],
        "aggregate": aggregate_metrics(result),
        "leakage_problems": leakage_report(result),
    }
    if selection is not None:
        doc["selection"] = {
            "kind": selection.kind,
            "median_f1": selection.median_f1,
            "screen_passed": selection.screen_passed,
            "reason": selection.reason,
        }
    return doc


def run_importance(records: list[HireTimeRecord], n_trees: int = 500,
                   seed: int = 20240813) -> tuple[FeatureSchema, np.ndarray]:
    """Forest importance over the full attribute space, height included.

    This is a screening diagnostic over the whole dataset as collected,
    not a held-out evaluation: every row is encoded and scaled, no
    oversampling is applied, and a forest ranks every column by
    accumulated impurity decrease.
    """
    schema = build_schema(records, modeled_only=False)
    enc = encode(records, schema)
    scaler = fit_scaler(enc.X, schema)
    Xs = apply_scaler(enc.X, scaler)
    root = RngStream(seed)
    model = rf_mod.forest_fit(
        Xs, enc.y,
        rf_mod.ForestConfig(n_trees=n_trees, seed=root.spawn(3).seed))
    return schema, rf_mod.feature_importance(model)
