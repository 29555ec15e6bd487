"""JSON model persistence.

Parameter arrays are stored row-major as plain JSON floats; Python's float
repr round-trips 64-bit values exactly, so load(save(model)) reproduces
predictions bit-for-bit.
"""

import json

import numpy as np

from ..errors import SchemaError
from .affnet import AffNet
from .dense import DenseNet3

SCHEMA_VERSION = 1

_KINDS = {"dense": DenseNet3, "affnet": AffNet}


def _kind_of(model):
    for kind, cls in _KINDS.items():
        if isinstance(model, cls):
            return kind
    raise SchemaError(f"cannot serialize model of type {type(model).__name__}")


def model_to_dict(model):
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": _kind_of(model),
        "config": model.config(),
        "params": {
            name: {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
            for name, arr in sorted(model.params.items())
        },
    }


def model_from_dict(payload):
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {payload.get('schema_version')!r}")
    kind = payload.get("kind")
    if kind not in _KINDS:
        raise SchemaError(f"unknown model kind {kind!r}")
    model = _KINDS[kind].from_config(payload["config"])
    saved = payload["params"]
    if set(saved) != set(model.params):
        raise SchemaError("saved parameter names do not match the model config")
    for name, entry in saved.items():
        arr = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if arr.shape != model.params[name].shape:
            raise SchemaError(f"parameter {name} has shape {arr.shape}, "
                              f"expected {model.params[name].shape}")
        model.params[name][...] = arr
    return model


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
