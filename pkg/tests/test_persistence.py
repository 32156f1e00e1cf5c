"""Model bundles: canonical bytes, checksums, exact parameter round-trips."""

import json

import numpy as np
import pytest

from absenteeism.ann import ANNConfig, ann_forward, ann_train
from absenteeism.mlr import MLRConfig, fit_mlr, predict_proba
from absenteeism.persistence import (
    BUNDLE_VERSION,
    BundleError,
    ModelBundle,
    bundle_bytes,
    bundle_from_model,
    canonical_json,
    load_bundle,
    model_from_bundle,
    save_bundle,
    sha256_hex,
)
from absenteeism.preprocess import apply_scaler, encode, fit_scaler
from absenteeism.rf import ForestConfig, forest_fit, forest_predict, forest_votes
from absenteeism.svm import SVMConfig, svm_decision_values, svm_fit


@pytest.fixture(scope="module")
def trained(records, schema):
    """One small fitted model of each kind on the real data, plus scaler."""
    matrix = encode(records, schema)
    scaler = fit_scaler(matrix.X, schema)
    Xs = apply_scaler(matrix.X, scaler)[:120]
    ys = matrix.y[:120]
    mask = np.ones(schema.width, dtype=bool)

    mlr, _ = fit_mlr(Xs, ys, MLRConfig())
    svm = svm_fit(Xs, ys, SVMConfig(gamma=0.5, c=2.0))
    ann, _ = ann_train(Xs, ys, ANNConfig(hidden=(8,), max_epochs=4, seed=1))
    rf = forest_fit(Xs, ys, ForestConfig(n_trees=12, seed=6))
    return {
        "Xs": Xs,
        "scaler": scaler,
        "schema": schema,
        "mask": mask,
        "models": {"mlr": mlr, "svm": svm, "ann": ann, "rf": rf},
    }


def _bundle(trained, kind):
    return bundle_from_model(
        kind,
        trained["models"][kind],
        trained["schema"],
        trained["scaler"],
        trained["mask"],
        manifest_digest="d" * 64,
    )


# ---------------------------------------------------------------------------
# canonical serialization


def test_canonical_json_is_tight_and_ordered():
    s = canonical_json({"b": 1, "a": [1.5, None, "x"]})
    assert s == '{"b":1,"a":[1.5,null,"x"]}'


def test_canonical_json_rejects_nan():
    with pytest.raises(BundleError, match="not serializable"):
        canonical_json({"v": float("nan")})


def test_saving_twice_yields_identical_bytes(trained):
    b = _bundle(trained, "mlr")
    assert bundle_bytes(b) == bundle_bytes(b)


def test_save_returns_byte_count(tmp_path, trained):
    b = _bundle(trained, "mlr")
    path = tmp_path / "m.absmodel"
    n = save_bundle(b, path)
    assert path.stat().st_size == n
    assert isinstance(b.checksum, str) and len(b.checksum) == 64


def test_checksum_field_matches_payload(trained):
    data = bundle_bytes(_bundle(trained, "mlr"))
    doc = json.loads(data)
    stated = doc.pop("checksum")
    assert stated == sha256_hex(canonical_json(doc).encode("ascii"))


# ---------------------------------------------------------------------------
# round trips


def test_mlr_round_trip_exact(trained):
    b = _bundle(trained, "mlr")
    loaded = load_bundle(bundle_bytes(b))
    rebuilt = model_from_bundle(loaded)
    original = trained["models"]["mlr"]
    assert np.array_equal(rebuilt.intercepts, original.intercepts)
    assert np.array_equal(rebuilt.coefs, original.coefs)
    assert rebuilt.reference_index == original.reference_index


def test_all_kinds_predict_identically_after_reload(trained):
    probe = trained["Xs"][:50]
    checks = {
        "mlr": lambda m: predict_proba(m, probe),
        "svm": lambda m: svm_decision_values(m, probe),
        "ann": lambda m: ann_forward(m, probe),
        "rf": lambda m: forest_votes(m, probe),
    }
    for kind, evaluate in checks.items():
        loaded = model_from_bundle(load_bundle(bundle_bytes(_bundle(trained, kind))))
        before = evaluate(trained["models"][kind])
        after = evaluate(loaded)
        assert np.array_equal(before, after), kind


def test_forest_round_trip_preserves_votes_and_classes(trained):
    probe = trained["Xs"][:50]
    original = trained["models"]["rf"]
    loaded = model_from_bundle(load_bundle(bundle_bytes(_bundle(trained, "rf"))))
    assert np.array_equal(forest_votes(loaded, probe), forest_votes(original, probe))
    assert np.array_equal(forest_predict(loaded, probe), forest_predict(original, probe))


def test_schema_scaler_and_mask_survive(trained):
    b = _bundle(trained, "svm")
    loaded = load_bundle(bundle_bytes(b))
    assert loaded.schema == trained["schema"]
    assert loaded.scaler == trained["scaler"]
    assert np.array_equal(loaded.mask, trained["mask"])
    assert loaded.manifest_digest == "d" * 64
    assert loaded.version == BUNDLE_VERSION


def test_file_round_trip(tmp_path, trained):
    b = _bundle(trained, "ann")
    path = tmp_path / "net.absmodel"
    save_bundle(b, path)
    loaded = load_bundle(path)
    assert loaded.kind == "ann"
    assert loaded.checksum == b.checksum


# ---------------------------------------------------------------------------
# defects


def _corrupt(data: bytes, pos: int) -> bytes:
    flipped = data[pos] ^ 0x01
    return data[:pos] + bytes([flipped]) + data[pos + 1:]


def test_flipped_byte_detected(trained):
    data = bundle_bytes(_bundle(trained, "mlr"))
    # Flip a byte inside the payload, not inside the checksum field.
    pos = data.index(b'"intercepts"') + 20
    with pytest.raises(BundleError, match="checksum"):
        load_bundle(_corrupt(data, pos))


def test_truncated_input_rejected(trained):
    data = bundle_bytes(_bundle(trained, "mlr"))
    with pytest.raises(BundleError):
        load_bundle(data[: len(data) // 2])


def test_version_mismatch_rejected(trained):
    b = _bundle(trained, "mlr")
    b.version = BUNDLE_VERSION + 1
    data = bundle_bytes(b)
    with pytest.raises(BundleError, match="version"):
        load_bundle(data)


def test_unknown_kind_rejected(trained):
    with pytest.raises(BundleError, match="unknown model kind"):
        bundle_bytes(
            ModelBundle(
                kind="boost",
                schema=trained["schema"],
                scaler=trained["scaler"],
                mask=trained["mask"],
                params={},
            )
        )


def test_unexpected_top_level_key_rejected(trained):
    data = bundle_bytes(_bundle(trained, "mlr"))
    doc = json.loads(data)
    doc["extra"] = 1
    with pytest.raises(BundleError, match="unexpected"):
        load_bundle(json.dumps(doc).encode())


def test_missing_key_rejected(trained):
    data = bundle_bytes(_bundle(trained, "mlr"))
    doc = json.loads(data)
    del doc["scaler"]
    with pytest.raises(BundleError, match="missing"):
        load_bundle(json.dumps(doc).encode())


def test_non_json_input_rejected():
    with pytest.raises(BundleError, match="not a readable bundle"):
        load_bundle(b"\x00\x01\x02")


def test_malformed_params_rejected(trained):
    b = _bundle(trained, "mlr")
    b.params = {"intercepts": [0.0, 0.0]}    # missing the other fields
    loaded = load_bundle(bundle_bytes(b))
    with pytest.raises(BundleError, match="malformed"):
        model_from_bundle(loaded)


def test_mask_width_mismatch_rejected(trained):
    b = _bundle(trained, "mlr")
    b.mask = np.ones(5, dtype=bool)
    with pytest.raises(BundleError, match="mask length"):
        bundle_bytes(b)
