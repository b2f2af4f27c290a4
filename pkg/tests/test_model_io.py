"""Serialization: exact parameter round-trips for every model kind."""

import json

import numpy as np
import pytest

from subspacegan.errors import ContractError
from subspacegan.generators import (ablate_subspaces, init_layered_model,
                                    init_linear_model)
from subspacegan.model_io import (SCHEMA_VERSION, load_model, model_from_dict,
                                  model_to_dict, save_model)


def _params_equal(a, b):
    pa, pb = a.parameters(), b.parameters()
    assert [n for n, _ in pa] == [n for n, _ in pb]
    for (_, x), (_, y) in zip(pa, pb):
        assert np.array_equal(x.value, y.value)


def test_linear_round_trip_is_exact(rng, tmp_path):
    m = init_linear_model(6, 2, rng)
    m.log_sigma.value[0, 0] = np.log(np.pi)  # non-dyadic float
    path = tmp_path / "m.json"
    save_model(m, path)
    back = load_model(path)
    _params_equal(m, back)
    z = rng.normal(size=(5, 2))
    e = rng.normal(size=(5, 6))
    assert np.array_equal(m.forward(z, e), back.forward(z, e))


def test_layered_round_trip_is_exact(rng, tmp_path):
    m = init_layered_model(16, q=2, widths=(4, 8), noise_dim=3, rng=rng)
    path = tmp_path / "m.json"
    save_model(m, path)
    back = load_model(path)
    _params_equal(m, back)
    zs = [rng.normal(size=(4, 2)) for _ in range(2)]
    e = rng.normal(size=(4, 3))
    assert np.array_equal(m.forward(zs, e), back.forward(zs, e))


def test_ablated_round_trip_keeps_structure(rng, tmp_path):
    m = ablate_subspaces(init_layered_model(16, q=2, widths=(4, 8), rng=rng))
    path = tmp_path / "a.json"
    save_model(m, path)
    back = load_model(path)
    assert all(s is None for s, _ in back.layers)
    assert all(lm.f_transform is None for _, lm in back.layers)
    _params_equal(m, back)
    zs = [rng.normal(size=(4, 2)) for _ in range(2)]
    e = rng.normal(size=(4, 4))
    assert np.array_equal(m.forward(zs, e), back.forward(zs, e))


def test_document_shape_and_meta(rng):
    m = init_linear_model(4, 2, rng)
    doc = model_to_dict(m, meta={"note": "fixture"})
    assert doc["version"] == SCHEMA_VERSION
    assert doc["kind"] == "linear"
    assert doc["meta"] == {"note": "fixture"}
    assert len(doc["layers"]) == 1
    assert doc["layers"][0]["weight"] is None
    # document survives an actual JSON text cycle
    again = model_from_dict(json.loads(json.dumps(doc)))
    _params_equal(m, again)


def test_version_guard(rng):
    doc = model_to_dict(init_linear_model(4, 2, rng))
    doc["version"] = SCHEMA_VERSION + 1
    with pytest.raises(ContractError):
        model_from_dict(doc)


def test_unknown_kind_rejected(rng):
    doc = model_to_dict(init_linear_model(4, 2, rng))
    doc["kind"] = "quadratic"
    with pytest.raises(ContractError):
        model_from_dict(doc)


def test_unsupported_object_rejected():
    with pytest.raises(ContractError):
        model_to_dict(object())
