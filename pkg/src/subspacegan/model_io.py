"""Model persistence: JSON documents that round-trip exactly.

Floats are serialized with Python's shortest-round-trip repr, so
load(save(m)) reproduces every parameter bit for bit. Layer entries carry
null U/L/mu/f_transform for ablated models; the linear kind stores its one
subspace as a single layer entry with no affine map.
"""

from __future__ import annotations

import json

import numpy as np

from . import autodiff as ad
from .errors import ContractError
from .generators import LayeredEigenModel, LayerMap, LinearEigenModel
from .subspace import SubspaceModel

__all__ = ["model_to_dict", "model_from_dict", "save_model", "load_model"]

SCHEMA_VERSION = 1


def _arr(a):
    return None if a is None else a.value.tolist()


def _node(data):
    return None if data is None else ad.param(np.asarray(data, dtype=np.float64))


def model_to_dict(m, meta=None) -> dict:
    doc = {"version": SCHEMA_VERSION, "meta": dict(meta or {})}
    if isinstance(m, LinearEigenModel):
        s = m.subspace
        doc.update({
            "kind": "linear", "ambient": s.d,
            "layers": [{"U": _arr(s.U), "L": _arr(s.L), "mu": _arr(s.mu),
                        "weight": None, "bias": None, "f_transform": None}],
            "log_sigma": float(m.log_sigma.value[0, 0]),
            "bottom": None,
            "noise_dim": m.noise_dim, "latent_dims": list(m.latent_dims),
        })
        return doc
    if isinstance(m, LayeredEigenModel):
        layers = []
        for s, lm in m.layers:
            layers.append({
                "U": _arr(s.U) if s else None, "L": _arr(s.L) if s else None,
                "mu": _arr(s.mu) if s else None,
                "weight": _arr(lm.weight), "bias": _arr(lm.bias),
                "activation": lm.activation,
                "f_transform": _arr(lm.f_transform),
            })
        doc.update({
            "kind": "layered", "ambient": m.data_dim, "layers": layers,
            "log_sigma": None,
            "bottom": {"weight": _arr(m.bottom_weight), "bias": _arr(m.bottom_bias)},
            "noise_dim": m.noise_dim, "latent_dims": list(m.latent_dims),
        })
        return doc
    raise ContractError(f"cannot serialize {type(m).__name__}")


def model_from_dict(doc: dict):
    if doc.get("version") != SCHEMA_VERSION:
        raise ContractError(f"unsupported model version {doc.get('version')!r}")
    kind = doc.get("kind")
    if kind == "linear":
        entry = doc["layers"][0]
        U, L, mu = _node(entry["U"]), _node(entry["L"]), _node(entry["mu"])
        sub = SubspaceModel(U=U, L=L, mu=mu, d=U.value.shape[0], q=U.value.shape[1])
        return LinearEigenModel(
            subspace=sub, log_sigma=ad.param([[float(doc["log_sigma"])]]))
    if kind == "layered":
        layers = []
        for entry in doc["layers"]:
            sub = None
            if entry["U"] is not None:
                U, L, mu = _node(entry["U"]), _node(entry["L"]), _node(entry["mu"])
                sub = SubspaceModel(U=U, L=L, mu=mu,
                                    d=U.value.shape[0], q=U.value.shape[1])
            layers.append((sub, LayerMap(
                weight=_node(entry["weight"]), bias=_node(entry["bias"]),
                activation=entry["activation"],
                f_transform=_node(entry["f_transform"]),
            )))
        bottom = doc["bottom"]
        return LayeredEigenModel(
            layers=layers,
            bottom_weight=_node(bottom["weight"]),
            bottom_bias=_node(bottom["bias"]),
            noise_dim=int(doc["noise_dim"]),
            latent_dims=[int(q) for q in doc["latent_dims"]],
        )
    raise ContractError(f"unknown model kind {kind!r}")


def save_model(m, path, meta=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(m, meta), fh, indent=2)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
