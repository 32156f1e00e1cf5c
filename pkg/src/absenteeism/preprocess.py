"""Feature schema, one-hot encoding, min-max scaling, stratified split, SMOTE.

The modeling space has one column per numeric attribute and one indicator
column per observed category of each categorical attribute. Column order is
deterministic: numeric attributes in declaration order, then one-hot groups
in declaration order with categories ascending. Height is recorded in the
schema (the service form needs it) but excluded from the modeling space; the
comparison models were specified over the other 12 attributes, which encode
to 42 columns on the canonical dataset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .ingest import AbsenteeismClass, HireTimeRecord
from .numerics import RngStream


class EncodingError(ValueError):
    """A value that cannot be mapped into the feature space."""


# (attribute name, kind, modeled) in canonical declaration order.
_ATTRIBUTE_LAYOUT = [
    ("reason_for_absence", "categorical", True),
    ("transportation_expense", "numeric", True),
    ("distance_to_work", "numeric", True),
    ("age", "numeric", True),
    ("work_load_avg_per_day", "numeric", True),
    ("education", "categorical", True),
    ("son", "numeric", True),
    ("social_drinker", "numeric", True),
    ("social_smoker", "numeric", True),
    ("pet", "numeric", True),
    ("weight", "numeric", True),
    ("height", "numeric", False),
    ("body_mass_index", "numeric", True),
]


@dataclass(frozen=True)
class AttributeSpec:
    """Descriptor for one hire-time attribute."""

    name: str
    kind: str  # "numeric" or "categorical"
    modeled: bool
    categories: tuple[int, ...] = ()
    value_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class ColumnSpec:
    """One column of the encoded matrix."""

    name: str
    attribute: str
    kind: str
    category: int | None = None


@dataclass(frozen=True)
class FeatureSchema:
    """All attribute descriptors plus the derived column layout."""

    attributes: tuple[AttributeSpec, ...]
    columns: tuple[ColumnSpec, ...]

    @property
    def width(self) -> int:
        return len(self.columns)

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def attribute_by_name(self, name: str) -> AttributeSpec:
        for a in self.attributes:
            if a.name == name:
                return a
        raise KeyError(name)


@dataclass
class EncodedMatrix:
    """Encoded rows, labels and the schema that produced them."""

    X: np.ndarray
    y: np.ndarray
    schema: FeatureSchema


@dataclass(frozen=True)
class ScalerParams:
    """Fitted min-max parameters for the numeric columns of a schema."""

    column_indices: tuple[int, ...]
    mins: tuple[float, ...]
    maxs: tuple[float, ...]
    width: int


@dataclass(frozen=True)
class SplitIndices:
    """Row index sets of a stratified split, each sorted ascending."""

    train: np.ndarray
    test: np.ndarray


def build_schema(records: Sequence[HireTimeRecord], modeled_only: bool = True) -> FeatureSchema:
    """Derive the feature schema from observed data.

    Categorical attributes get one indicator column per distinct observed
    value; numeric attributes record their observed range for downstream
    input hints. With ``modeled_only`` (the default) attributes flagged out
    of the modeling space contribute no columns, though their descriptors
    remain available for input validation.
    """
    if not records:
        raise EncodingError("cannot build a schema from zero records")
    attributes = []
    for name, kind, modeled in _ATTRIBUTE_LAYOUT:
        values = [getattr(r, name) for r in records]
        if kind == "categorical":
            attributes.append(
                AttributeSpec(name=name, kind=kind, modeled=modeled,
                              categories=tuple(sorted(set(values))))
            )
        else:
            attributes.append(
                AttributeSpec(name=name, kind=kind, modeled=modeled,
                              value_range=(float(min(values)), float(max(values))))
            )

    columns: list[ColumnSpec] = []
    for a in attributes:
        if a.kind == "numeric" and (a.modeled or not modeled_only):
            columns.append(ColumnSpec(name=a.name, attribute=a.name, kind="numeric"))
    for a in attributes:
        if a.kind == "categorical" and (a.modeled or not modeled_only):
            for cat in a.categories:
                columns.append(
                    ColumnSpec(name=f"{a.name}={cat}", attribute=a.name,
                               kind="indicator", category=cat)
                )

    names = [c.name for c in columns]
    if len(set(names)) != len(names):
        raise EncodingError("schema produced duplicate column names")
    return FeatureSchema(attributes=tuple(attributes), columns=tuple(columns))


def _encode_row(schema: FeatureSchema, getter) -> np.ndarray:
    row = np.zeros(schema.width, dtype=np.float64)
    for j, col in enumerate(schema.columns):
        value = getter(col.attribute)
        if col.kind == "numeric":
            row[j] = float(value)
        else:
            row[j] = 1.0 if int(value) == col.category else 0.0
    return row


def encode(records: Sequence[HireTimeRecord], schema: FeatureSchema) -> EncodedMatrix:
    """Encode records into the schema's column space.

    A categorical value that was never observed when the schema was built
    has no column to land in and raises EncodingError naming the attribute
    and the value.
    """
    cat_allowed = {a.name: set(a.categories) for a in schema.attributes if a.kind == "categorical"}
    X = np.zeros((len(records), schema.width), dtype=np.float64)
    y = np.zeros(len(records), dtype=np.int64)
    for i, rec in enumerate(records):
        for attr, allowed in cat_allowed.items():
            v = getattr(rec, attr)
            if v not in allowed:
                raise EncodingError(
                    f"row {i}: attribute {attr!r} has unseen category {v!r}"
                )
        X[i] = _encode_row(schema, lambda a: getattr(rec, a))
        y[i] = int(rec.label)
    return EncodedMatrix(X=X, y=y, schema=schema)


def encode_input(schema: FeatureSchema, mapping: Mapping[str, float]) -> np.ndarray:
    """Encode one attribute mapping (e.g. a service payload) to a row vector.

    The mapping must supply every attribute in the schema, including ones
    outside the modeling space. Unknown categories raise EncodingError.
    """
    for a in schema.attributes:
        if a.name not in mapping:
            raise EncodingError(f"missing attribute {a.name!r}")
        if a.kind == "categorical" and int(mapping[a.name]) not in a.categories:
            raise EncodingError(
                f"attribute {a.name!r} has unseen category {mapping[a.name]!r}"
            )
    return _encode_row(schema, lambda attr: mapping[attr])


def fit_scaler(X: np.ndarray, schema: FeatureSchema,
               rows: np.ndarray | None = None) -> ScalerParams:
    """Fit per-column min and max over the given rows (default: all rows).

    Only numeric columns are scaled. Indicator columns already live in
    [0, 1] and are passed through untouched, which keeps one-hot groups
    summing to one after scaling.
    """
    sub = X if rows is None else X[rows]
    if sub.shape[0] == 0:
        raise ValueError("cannot fit a scaler on zero rows")
    idx = tuple(j for j, c in enumerate(schema.columns) if c.kind == "numeric")
    mins = tuple(float(sub[:, j].min()) for j in idx)
    maxs = tuple(float(sub[:, j].max()) for j in idx)
    return ScalerParams(column_indices=idx, mins=mins, maxs=maxs, width=schema.width)


def apply_scaler(X: np.ndarray, params: ScalerParams) -> np.ndarray:
    """Map numeric columns to [0, 1] by the fitted ranges.

    A column that was constant on the fitting rows maps to zero everywhere.
    Values outside the fitted range extrapolate linearly (they can occur on
    held-out rows and are legitimate).
    """
    if X.shape[1] != params.width:
        raise ValueError(f"matrix has {X.shape[1]} columns, scaler expects {params.width}")
    out = X.astype(np.float64).copy()
    for j, lo, hi in zip(params.column_indices, params.mins, params.maxs):
        span = hi - lo
        out[:, j] = 0.0 if span == 0.0 else (out[:, j] - lo) / span
    return out


def invert_scaler(X: np.ndarray, params: ScalerParams) -> np.ndarray:
    """Undo apply_scaler. Constant columns recover their fitted value."""
    if X.shape[1] != params.width:
        raise ValueError(f"matrix has {X.shape[1]} columns, scaler expects {params.width}")
    out = X.astype(np.float64).copy()
    for j, lo, hi in zip(params.column_indices, params.mins, params.maxs):
        span = hi - lo
        out[:, j] = lo if span == 0.0 else out[:, j] * span + lo
    return out


def stratified_split(y: np.ndarray, train_fraction: float, seed: int) -> SplitIndices:
    """Seeded stratified split of row indices.

    Each class contributes round(n_c * fraction) rows to the training side,
    clamped so both sides keep at least one row per class. Classes with
    fewer than two rows cannot be split and raise ValueError.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    y = np.asarray(y)
    rng = RngStream(seed)
    train_parts, test_parts = [], []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if len(idx) < 2:
            raise ValueError(f"class {int(c)} has {len(idx)} row(s), cannot stratify")
        k = int(np.floor(len(idx) * train_fraction + 0.5))
        k = min(max(k, 1), len(idx) - 1)
        shuffled = rng.shuffle(idx)
        train_parts.append(shuffled[:k])
        test_parts.append(shuffled[k:])
    train = np.sort(np.concatenate(train_parts))
    test = np.sort(np.concatenate(test_parts))
    return SplitIndices(train=train, test=test)


def smote_oversample(X: np.ndarray, y: np.ndarray, k: int = 5,
                     seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Equalize class sizes by synthesizing minority rows.

    For every class below the majority count, synthetic rows are built as
    x + u * (x_nn - x): a base minority row, one of its k nearest
    same-class neighbours (Euclidean distance in the encoded, scaled
    space), and a uniform u in [0, 1). Base rows cycle through a seeded
    shuffle of the class so synthesis spreads evenly. Originals are
    preserved unchanged, synthetics are appended after them.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y row counts differ")
    if k < 1:
        raise ValueError("k must be at least 1")
    counts = {int(c): int(np.sum(y == c)) for c in np.unique(y)}
    target = max(counts.values())
    rng = RngStream(seed)

    new_rows, new_labels = [], []
    for c in sorted(counts):
        n_c = counts[c]
        need = target - n_c
        if need == 0:
            continue
        if n_c <= k:
            raise ValueError(
                f"class {c} has {n_c} rows, not enough for k={k} neighbours; lower k"
            )
        idx = np.flatnonzero(y == c)
        block = X[idx]
        # Pairwise squared distances; self excluded via an infinite diagonal.
        sq = np.sum(block ** 2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (block @ block.T)
        np.fill_diagonal(d2, np.inf)
        neighbours = np.argsort(d2, axis=1, kind="stable")[:, :k]

        order = rng.permutation(n_c)
        picks = rng.integers(0, k, size=need)
        us = rng.uniform(need)
        for s in range(need):
            b = order[s % n_c]
            nn = neighbours[b, picks[s]]
            new_rows.append(block[b] + us[s] * (block[nn] - block[b]))
            new_labels.append(c)

    if not new_rows:
        return X.copy(), y.copy()
    X_out = np.vstack([X, np.array(new_rows)])
    y_out = np.concatenate([y, np.array(new_labels, dtype=y.dtype)])
    return X_out, y_out


def class_counts(y: np.ndarray, n_classes: int = 3) -> np.ndarray:
    """Label histogram over a fixed class universe."""
    y = np.asarray(y, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ValueError("labels outside the class universe")
    return np.bincount(y, minlength=n_classes)


CLASS_LABELS = tuple(c.label for c in AbsenteeismClass)
