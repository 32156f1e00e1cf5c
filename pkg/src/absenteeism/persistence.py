"""Versioned model bundles with a tamper-evident checksum.

A bundle is a single canonical JSON document: fixed key order, no spaces,
ASCII only, floats in shortest round-trip form. The checksum member is
always last and holds the sha256 of the serialization of everything before
it, so equal bundles are byte-identical and any byte flip is detected at
load time either by the parser or by the digest comparison.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ann as ann_mod
from . import mlr as mlr_mod
from . import rf as rf_mod
from . import svm as svm_mod
from .preprocess import AttributeSpec, ColumnSpec, FeatureSchema, ScalerParams

BUNDLE_VERSION = 1
KINDS = ("mlr", "svm", "ann", "rf")
_DOC_KEYS = ("version", "kind", "schema", "scaler", "mask", "params", "manifest_digest")


class BundleError(ValueError):
    """Unreadable, corrupt or incompatible bundle content."""


def canonical_json(obj) -> str:
    """Serialize with insertion-ordered keys, tight separators, no NaN."""
    try:
        return json.dumps(obj, ensure_ascii=True, separators=(",", ":"),
                          allow_nan=False)
    except (TypeError, ValueError) as exc:
        raise BundleError(f"value not serializable canonically: {exc}") from None


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class ModelBundle:
    kind: str
    schema: FeatureSchema
    scaler: ScalerParams
    mask: np.ndarray
    params: dict
    manifest_digest: str = ""
    version: int = BUNDLE_VERSION
    checksum: str | None = None    # filled by save_bundle / load_bundle


def _schema_to_doc(schema: FeatureSchema) -> dict:
    return {
        "attributes": [
            {
                "name": a.name,
                "kind": a.kind,
                "modeled": a.modeled,
                "categories": list(a.categories),
                "value_range": list(a.value_range) if a.value_range else None,
            }
            for a in schema.attributes
        ],
        "columns": [
            {"name": c.name, "attribute": c.attribute, "kind": c.kind,
             "category": c.category}
            for c in schema.columns
        ],
    }


def _schema_from_doc(doc: dict) -> FeatureSchema:
    attributes = tuple(
        AttributeSpec(
            name=a["name"], kind=a["kind"], modeled=a["modeled"],
            categories=tuple(a["categories"]),
            value_range=tuple(a["value_range"]) if a["value_range"] else None,
        )
        for a in doc["attributes"]
    )
    columns = tuple(
        ColumnSpec(name=c["name"], attribute=c["attribute"], kind=c["kind"],
                   category=c["category"])
        for c in doc["columns"]
    )
    return FeatureSchema(attributes=attributes, columns=columns)


def _build_doc(bundle: ModelBundle) -> dict:
    if bundle.kind not in KINDS:
        raise BundleError(f"unknown model kind {bundle.kind!r}")
    mask = np.asarray(bundle.mask, dtype=bool)
    if mask.size != bundle.schema.width:
        raise BundleError("mask length must equal the schema width")
    return {
        "version": int(bundle.version),
        "kind": bundle.kind,
        "schema": _schema_to_doc(bundle.schema),
        "scaler": {
            "column_indices": list(bundle.scaler.column_indices),
            "mins": list(bundle.scaler.mins),
            "maxs": list(bundle.scaler.maxs),
            "width": bundle.scaler.width,
        },
        "mask": [int(v) for v in mask],
        "params": bundle.params,
        "manifest_digest": bundle.manifest_digest,
    }


def save_bundle(bundle: ModelBundle, sink) -> int:
    """Write the bundle; returns the byte count. Sets bundle.checksum."""
    payload = canonical_json(_build_doc(bundle)).encode("ascii")
    digest = sha256_hex(payload)
    data = payload[:-1] + b',"checksum":"' + digest.encode("ascii") + b'"}'
    bundle.checksum = digest
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)
    return len(data)


def load_bundle(source) -> ModelBundle:
    """Read and verify a bundle; raises BundleError on any defect."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()

    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleError(f"not a readable bundle: {exc}") from None
    if not isinstance(doc, dict):
        raise BundleError("bundle root must be an object")
    expected = set(_DOC_KEYS) | {"checksum"}
    if set(doc) != expected:
        missing = expected - set(doc)
        extra = set(doc) - expected
        raise BundleError(
            f"bundle keys wrong: missing {sorted(missing)}, unexpected {sorted(extra)}"
        )

    stated = doc.pop("checksum")
    payload = canonical_json(doc).encode("ascii")
    actual = sha256_hex(payload)
    if stated != actual:
        raise BundleError("checksum mismatch: bundle corrupted or truncated")
    if doc["version"] != BUNDLE_VERSION:
        raise BundleError(
            f"unsupported bundle version {doc['version']!r}, expected {BUNDLE_VERSION}"
        )
    if doc["kind"] not in KINDS:
        raise BundleError(f"unknown model kind {doc['kind']!r}")

    schema = _schema_from_doc(doc["schema"])
    scaler_doc = doc["scaler"]
    scaler = ScalerParams(
        column_indices=tuple(scaler_doc["column_indices"]),
        mins=tuple(float(v) for v in scaler_doc["mins"]),
        maxs=tuple(float(v) for v in scaler_doc["maxs"]),
        width=int(scaler_doc["width"]),
    )
    mask = np.array(doc["mask"], dtype=bool)
    if mask.size != schema.width:
        raise BundleError("mask length must equal the schema width")
    return ModelBundle(
        kind=doc["kind"], schema=schema, scaler=scaler, mask=mask,
        params=doc["params"], manifest_digest=doc["manifest_digest"],
        version=doc["version"], checksum=stated,
    )


def params_from_model(kind: str, model) -> dict:
    """Flatten a fitted model into a JSON-able parameter document."""
    if kind == "mlr":
        return {
            "intercepts": model.intercepts.tolist(),
            "coefs": model.coefs.tolist(),
            "n_classes": model.n_classes,
            "reference_index": model.reference_index,
        }
    if kind == "svm":
        return {
            "n_classes": model.n_classes,
            "machines": [
                {
                    "support_vectors": m.support_vectors.tolist(),
                    "coefs": m.coefs.tolist(),
                    "bias": m.bias,
                    "gamma": m.gamma,
                    "c": m.c,
                }
                for m in model.machines
            ],
        }
    if kind == "ann":
        return {
            "layer_sizes": list(model.layer_sizes),
            "weights": [w.tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
        }
    if kind == "rf":
        return {
            "n_features": model.n_features,
            "n_classes": model.n_classes,
            "importances": model.importances.tolist(),
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "label": t.label.tolist(),
                }
                for t in model.trees
            ],
        }
    raise BundleError(f"unknown model kind {kind!r}")


def model_from_bundle(bundle: ModelBundle):
    """Rebuild the typed in-memory model from a bundle's parameters."""
    p = bundle.params
    try:
        if bundle.kind == "mlr":
            model = mlr_mod.MLRModel(
                intercepts=np.array(p["intercepts"], dtype=np.float64),
                coefs=np.array(p["coefs"], dtype=np.float64),
                mask=np.asarray(bundle.mask, dtype=bool),
                n_classes=int(p["n_classes"]),
                reference_index=int(p["reference_index"]),
            )
            if model.coefs.shape[1] != int(np.sum(bundle.mask)):
                raise BundleError("coefficient width disagrees with the mask")
            return model
        if bundle.kind == "svm":
            machines = [
                svm_mod.BinarySVMModel(
                    support_vectors=np.array(m["support_vectors"], dtype=np.float64),
                    coefs=np.array(m["coefs"], dtype=np.float64),
                    bias=float(m["bias"]),
                    gamma=float(m["gamma"]),
                    c=float(m["c"]),
                )
                for m in p["machines"]
            ]
            return svm_mod.SVMModel(
                machines=machines, n_classes=int(p["n_classes"]),
                config=svm_mod.SVMConfig(
                    gamma=machines[0].gamma if machines else 0.1,
                    c=machines[0].c if machines else 1.0,
                ),
            )
        if bundle.kind == "ann":
            return ann_mod.MLPModel(
                weights=[np.array(w, dtype=np.float64) for w in p["weights"]],
                biases=[np.array(b, dtype=np.float64) for b in p["biases"]],
                layer_sizes=tuple(p["layer_sizes"]),
            )
        if bundle.kind == "rf":
            trees = [
                rf_mod.TreeNodes(
                    feature=np.array(t["feature"], dtype=np.int32),
                    threshold=np.array(t["threshold"], dtype=np.float64),
                    left=np.array(t["left"], dtype=np.int32),
                    right=np.array(t["right"], dtype=np.int32),
                    label=np.array(t["label"], dtype=np.int8),
                )
                for t in p["trees"]
            ]
            return rf_mod.ForestModel(
                trees=trees, n_features=int(p["n_features"]),
                n_classes=int(p["n_classes"]),
                importances=np.array(p["importances"], dtype=np.float64),
            )
    except (KeyError, TypeError) as exc:
        raise BundleError(f"malformed {bundle.kind} parameters: {exc}") from None
    raise BundleError(f"unknown model kind {bundle.kind!r}")


def bundle_from_model(kind: str, model, schema: FeatureSchema,
                      scaler: ScalerParams, mask: np.ndarray,
                      manifest_digest: str = "") -> ModelBundle:
    return ModelBundle(kind=kind, schema=schema, scaler=scaler,
                       mask=np.asarray(mask, dtype=bool),
                       params=params_from_model(kind, model),
                       manifest_digest=manifest_digest)


def bundle_bytes(bundle: ModelBundle) -> bytes:
    """In-memory serialization, exactly what save_bundle writes."""
    buf = io.BytesIO()
    save_bundle(bundle, buf)
    return buf.getvalue()
