"""Detector model serialization: self-describing JSON, bit-exact round trip.

Floats are written with Python's shortest round-trip representation, so
load(dump(model)) reproduces every parameter bit for bit.
"""

from __future__ import annotations

import json
from typing import TextIO

import numpy as np

from .drnn import DrnnParams, IdsModel

FORMAT_NAME = "dofid-model"
FORMAT_VERSION = 1


def _matrix_doc(W: np.ndarray) -> dict:
    return {"shape": list(W.shape), "data": [float(v) for v in W.ravel(order="C")]}


def _matrix_from_doc(doc: dict) -> np.ndarray:
    return np.array(doc["data"], dtype=float).reshape(doc["shape"], order="C")


def model_to_dict(model: IdsModel, params: DrnnParams) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "params": {
            "p": params.p,
            "r": params.r,
            "lambda_plus": params.lambda_plus,
            "lambda_minus": params.lambda_minus,
            "layers": params.layers,
            "width": params.width,
            "cluster_size": params.cluster_size,
        },
        "hidden_weights": [_matrix_doc(W) for W in model.hidden_weights],
        "output_weights": _matrix_doc(model.output_weights),
        "whiskers": [float(w) for w in model.whiskers],
        "theta": float(model.theta),
    }


def model_from_dict(doc: dict) -> tuple[IdsModel, DrnnParams]:
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} document")
    params = DrnnParams(**doc["params"])
    model = IdsModel(
        hidden_weights=[_matrix_from_doc(d) for d in doc["hidden_weights"]],
        output_weights=_matrix_from_doc(doc["output_weights"]),
        whiskers=np.array(doc["whiskers"], dtype=float),
        theta=float(doc["theta"]),
    )
    model.validate_shapes(params)
    if any(np.any(W < 0) for W in model.hidden_weights) or np.any(model.whiskers < 0):
        raise ValueError("hidden weights and whiskers must be non-negative")
    return model, params


def dump_model(model: IdsModel, params: DrnnParams, fp: TextIO) -> None:
    json.dump(model_to_dict(model, params), fp, indent=2)
    fp.write("\n")


def load_model(fp: TextIO) -> tuple[IdsModel, DrnnParams]:
    return model_from_dict(json.load(fp))


def dumps_model(model: IdsModel, params: DrnnParams) -> str:
    return json.dumps(model_to_dict(model, params), indent=2)


def loads_model(text: str) -> tuple[IdsModel, DrnnParams]:
    return model_from_dict(json.loads(text))
