"""Model checkpoints as structured text.

A checkpoint is a JSON document carrying the model kind tag (fnn, reynet,
red-reynet, inv-reynet, inv-red-reynet), shapes, hyperparameters, seed, and
every parameter array flattened row-major as decimal strings with 17
significant digits, which round-trips float64 exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .models import (
    EquivariantReyNet,
    FlatNet,
    InvariantReyNet,
    ReducedSpec,
    build_equivariant,
)
from .nn import MLPParams
from .tableaux import BasisTableau

FORMAT_NAME = "reynet-checkpoint"
FORMAT_VERSION = 1
MODEL_KINDS = ("fnn", "reynet", "red-reynet", "inv-reynet", "inv-red-reynet")


@dataclass
class ModelBundle:
    kind: str
    task: str
    loss: str
    n: int
    seed: int
    hyper: dict
    model: EquivariantReyNet | InvariantReyNet | FlatNet


def kind_of(model) -> str:
    if isinstance(model, FlatNet):
        return "fnn"
    if isinstance(model, EquivariantReyNet):
        return "reynet" if model.reduced is None else "red-reynet"
    if isinstance(model, InvariantReyNet):
        return "inv-reynet" if model.body.reduced is None else "inv-red-reynet"
    raise TypeError(f"unknown model type {type(model)!r}")


def _fmt(values: np.ndarray) -> list[str]:
    return [format(float(v), ".17e") for v in np.asarray(values).ravel()]


def _mlp_doc(p: MLPParams) -> dict:
    return {
        "dims": list(p.dims),
        "weights": [_fmt(w) for w in p.weights],
        "biases": [_fmt(b) for b in p.biases],
    }


def _mlp_load(doc: dict) -> MLPParams:
    dims = tuple(int(d) for d in doc["dims"])
    weights = [
        np.array([float(s) for s in flat]).reshape(dims[k + 1], dims[k])
        for k, flat in enumerate(doc["weights"])
    ]
    biases = [
        np.array([float(s) for s in flat]).reshape(dims[k + 1])
        for k, flat in enumerate(doc["biases"])
    ]
    return MLPParams(dims, weights, biases)


def _reduced_doc(reduced: ReducedSpec | None):
    if reduced is None:
        return None
    return {
        "coords": [list(c) for c in reduced.coords],
        "stab_restricted": reduced.stab_restricted,
    }


def _reduced_load(doc) -> ReducedSpec | None:
    if doc is None:
        return None
    return ReducedSpec(
        tuple(tuple(int(i) for i in c) for c in doc["coords"]),
        bool(doc["stab_restricted"]),
    )


def _equivariant_doc(m: EquivariantReyNet) -> dict:
    comps = []
    for tab in m.tableaux:
        comp = m.components[tab]
        if not isinstance(comp, MLPParams):
            raise TypeError("only trainable components can be saved")
        comps.append({"rows": [list(r) for r in tab.rows], "mlp": _mlp_doc(comp)})
    return {
        "n": m.n,
        "order_in": m.order_in,
        "channels_in": m.channels_in,
        "order_out": m.order_out,
        "channels_out": m.channels_out,
        "reduced": _reduced_doc(m.reduced),
        "depth_divisors": {str(d): v for d, v in m.depth_divisors.items()},
        "components": comps,
    }


def _equivariant_load(doc: dict) -> EquivariantReyNet:
    model = build_equivariant(
        0,
        int(doc["n"]),
        int(doc["order_in"]),
        int(doc["channels_in"]),
        int(doc["order_out"]),
        int(doc["channels_out"]),
        widths=(1,),
        reduced=_reduced_load(doc["reduced"]),
    )
    components: dict[BasisTableau, MLPParams] = {}
    for entry in doc["components"]:
        rows = tuple(tuple(int(i) for i in r) for r in entry["rows"])
        tab = BasisTableau(int(doc["order_out"]), rows)
        components[tab] = _mlp_load(entry["mlp"])
    model.components = components
    model.depth_divisors = {int(k): int(v) for k, v in doc["depth_divisors"].items()}
    return model


def _model_doc(model) -> dict:
    if isinstance(model, FlatNet):
        return {
            "n": model.n,
            "order_in": model.order_in,
            "channels_in": model.channels_in,
            "order_out": model.order_out,
            "channels_out": model.channels_out,
            "mlp": _mlp_doc(model.params),
        }
    if isinstance(model, EquivariantReyNet):
        return _equivariant_doc(model)
    if isinstance(model, InvariantReyNet):
        return {
            "body": _equivariant_doc(model.body),
            "pooling": model.pooling,
            "head": _mlp_doc(model.head),
        }
    raise TypeError(f"unknown model type {type(model)!r}")


def save_checkpoint(path: str, bundle: ModelBundle) -> None:
    kind = kind_of(bundle.model)
    if bundle.kind != kind:
        raise ValueError(f"bundle kind {bundle.kind!r} does not match model ({kind!r})")
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "task": bundle.task,
        "loss": bundle.loss,
        "n": bundle.n,
        "seed": bundle.seed,
        "hyper": bundle.hyper,
        "model": _model_doc(bundle.model),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_checkpoint(path: str) -> ModelBundle:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: not a checkpoint file")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: version {doc.get('version')}, expected {FORMAT_VERSION}")
    kind = doc["kind"]
    if kind not in MODEL_KINDS:
        raise ValueError(f"{path}: unknown model kind {kind!r}")
    mdoc = doc["model"]
    if kind == "fnn":
        order_out = mdoc["order_out"]
        model = FlatNet(
            int(mdoc["n"]),
            int(mdoc["order_in"]),
            int(mdoc["channels_in"]),
            None if order_out is None else int(order_out),
            int(mdoc["channels_out"]),
            _mlp_load(mdoc["mlp"]),
        )
    elif kind in ("reynet", "red-reynet"):
        model = _equivariant_load(mdoc)
    else:
        model = InvariantReyNet(
            _equivariant_load(mdoc["body"]), mdoc["pooling"], _mlp_load(mdoc["head"])
        )
    return ModelBundle(
        kind, doc["task"], doc["loss"], int(doc["n"]), int(doc["seed"]), doc["hyper"], model
    )
