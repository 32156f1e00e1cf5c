"""HTTP prediction service over a loaded model bundle.

Endpoints, all JSON:

- ``GET /api/health``      readiness probe
- ``GET /api/schema``      attribute descriptors for building input forms
- ``GET /api/model-info``  model kind, digest and training snapshot
- ``POST /api/predict``    one prediction from a 13-attribute payload

Faults share one shape: ``{"code", "message", "fields"}`` where fields is
a list of ``{"name", "message"}`` entries tied to offending attributes.
Payload validation is hand-rolled against the bundle's schema so fault
codes and messages stay stable regardless of framework versions. The
service holds no mutable state: the same payload always yields the same
prediction for a given bundle.
"""

from __future__ import annotations

import math
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .experiment import predict_kind, score_kind_name
from .ingest import AbsenteeismClass
from .persistence import ModelBundle, bundle_bytes, model_from_bundle
from .preprocess import FeatureSchema, apply_scaler, encode_input


def fault(code: str, message: str, fields: list[dict] | None = None,
          status: int = 422) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "fields": fields or []},
    )


def validate_payload(schema: FeatureSchema, payload: Any) -> tuple[dict | None, dict | None]:
    """Check a prediction payload against the schema.

    Returns (clean mapping, None) on success or (None, fault document)
    where the fault document carries per-field messages for every
    problem found in one pass.
    """
    if not isinstance(payload, dict):
        return None, {"code": "invalid-payload",
                      "message": "request body must be a JSON object",
                      "fields": []}
    names = [a.name for a in schema.attributes]
    missing = [n for n in names if n not in payload]
    extra = [k for k in payload if k not in names]
    problems: list[dict] = []
    for n in missing:
        problems.append({"name": n, "message": "required attribute is missing"})
    for k in extra:
        problems.append({"name": k, "message": "not an attribute of this model"})
    if problems:
        code = "missing-fields" if missing else "unknown-fields"
        return None, {"code": code,
                      "message": "payload does not match the attribute schema",
                      "fields": problems}

    clean: dict[str, float] = {}
    for attr in schema.attributes:
        value = payload[attr.name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append({"name": attr.name,
                             "message": "value must be a number"})
            continue
        if not math.isfinite(value):
            problems.append({"name": attr.name,
                             "message": "value must be finite"})
            continue
        if attr.kind == "categorical":
            if float(value) != int(value) or int(value) not in attr.categories:
                problems.append({
                    "name": attr.name,
                    "message": f"value {value!r} is not an observed category",
                })
                continue
            clean[attr.name] = int(value)
        else:
            clean[attr.name] = float(value)
    if problems:
        return None, {"code": "invalid-value",
                      "message": "one or more attribute values are invalid",
                      "fields": problems}
    return clean, None


def create_app(bundle: ModelBundle | None = None,
               manifest: dict | None = None,
               static_dir: str | None = None) -> FastAPI:
    """Build the application around one loaded bundle (or none)."""
    app = FastAPI(title="absenteeism prediction service", docs_url=None,
                  redoc_url=None)

    model = None
    digest = None
    if bundle is not None:
        model = model_from_bundle(bundle)
        if bundle.checksum is None:
            bundle_bytes(bundle)     # sets the checksum as a side effect
        digest = bundle.checksum

    @app.get("/api/health")
    def health():
        if bundle is None:
            return JSONResponse(status_code=503, content={"status": "not-ready"})
        return {"status": "ready"}

    @app.get("/api/schema")
    def schema_endpoint():
        if bundle is None:
            return fault("model-not-loaded", "no model bundle is loaded",
                         status=503)
        return {
            "attributes": [
                {
                    "name": a.name,
                    "kind": a.kind,
                    "modeled": a.modeled,
                    "categories": list(a.categories) if a.kind == "categorical" else None,
                    "value_range": list(a.value_range) if a.value_range else None,
                }
                for a in bundle.schema.attributes
            ],
            "classes": [c.label for c in AbsenteeismClass],
        }

    @app.get("/api/model-info")
    def model_info():
        if bundle is None:
            return fault("model-not-loaded", "no model bundle is loaded",
                         status=503)
        info = {
            "kind": bundle.kind,
            "digest": digest,
            "version": bundle.version,
            "schema_width": bundle.schema.width,
            "manifest_digest": bundle.manifest_digest,
        }
        if manifest:
            info["training"] = {
                "aggregate": manifest.get("aggregate"),
                "selection": manifest.get("selection"),
                "wall_seconds": manifest.get("wall_seconds"),
            }
        return info

    @app.post("/api/predict")
    async def predict(request: Request):
        if bundle is None:
            return fault("model-not-loaded", "no model bundle is loaded",
                         status=503)
        try:
            payload = await request.json()
        except Exception:
            return fault("invalid-json", "request body is not valid JSON")
        clean, problem = validate_payload(bundle.schema, payload)
        if problem is not None:
            return fault(problem["code"], problem["message"], problem["fields"])

        row = encode_input(bundle.schema, clean)
        row = apply_scaler(row[None, :], bundle.scaler)
        labels, scores = predict_kind(bundle.kind, model, row)
        cls = AbsenteeismClass(int(labels[0]))
        values = {c.label: float(scores[0, c]) for c in AbsenteeismClass}
        body = {
            "predicted_class": cls.label,
            "class_index": int(cls),
            "score_kind": score_kind_name(bundle.kind),
            "scores": values,
            "model": {"kind": bundle.kind, "digest": digest},
        }
        if body["score_kind"] == "probabilities":
            body["probabilities"] = values
        if bundle.kind == "rf":
            n_trees = len(bundle.params.get("trees", [])) or 1
            body["votes"] = {
                c.label: int(round(values[c.label] * n_trees))
                for c in AbsenteeismClass
            }
        return body

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
