"""Version-tagged JSON containers for fitted denoisers.

Floats are serialized with shortest round-trip repr (Python's json default),
so save -> load -> denoise is bit-identical to the original.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..datasets import GmmSpec
from ..errors import ValidationError
from ..linalg import EigenDecomposition
from .base import Denoiser
from .linear import ExactGmmDenoiser, LinearDenoiser
from .mlp import MlpBottleneckDenoiser
from .patch import PatchSizeMap, PatchwiseDenoiser
from .polynomial import PolynomialDenoiser

FORMAT = "denoiserlab/denoiser"
VERSION = 1


def _arr(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def denoiser_to_dict(den: Denoiser) -> dict:
    if isinstance(den, LinearDenoiser):
        payload = {
            "mean": _arr(den.mean),
            "eigenvalues": _arr(den.eig.eigenvalues),
            "eigenvectors": _arr(den.eig.eigenvectors),
            "k": den.k,
            "label": den.label,
        }
        family = "linear"
    elif isinstance(den, ExactGmmDenoiser):
        payload = {"spec": den.spec.to_dict()}
        family = "exact_gmm"
    elif isinstance(den, PolynomialDenoiser):
        payload = {
            "kind": den.kind,
            "degree": den.degree,
            "input_dim": den.input_dim,
            "sigma_grid": _arr(den.sigma_grid),
            "a_matrices": [_arr(a) for a in den.a_matrices],
            "b_vectors": [_arr(b) for b in den.b_vectors],
            "exponents": [list(e) for e in den.exponents] if den.exponents else None,
            "rf_matrix": _arr(den.rf_matrix) if den.rf_matrix is not None else None,
        }
        family = "polynomial"
    elif isinstance(den, MlpBottleneckDenoiser):
        payload = {
            "weights": [_arr(w) for w in den.weights],
            "biases": [_arr(b) for b in den.biases],
            "h": den.h,
            "width": den.width,
            "sigma_range": [float(den.sigma_range[0]), float(den.sigma_range[1])],
            "activation": den.activation,
            "loss_curve": [float(v) for v in den.loss_curve],
            "train_meta": den.train_meta,
        }
        family = "mlp_bottleneck"
    elif isinstance(den, PatchwiseDenoiser):
        payload = {
            "side": den.side,
            "stride": den.stride,
            "default_size": den.size_map.default_size,
            "breakpoints": [[s, p] for s, p in den.size_map.breakpoints],
            "bases": {str(k): denoiser_to_dict(v) for k, v in den.bases.items()},
        }
        family = "patchwise"
    else:
        raise ValidationError(f"cannot serialize denoiser type {type(den).__name__}")
    return {"format": FORMAT, "version": VERSION, "family": family, "payload": payload}


def denoiser_from_dict(doc: dict) -> Denoiser:
    if doc.get("format") != FORMAT:
        raise ValidationError(f"not a denoiser container: format={doc.get('format')!r}")
    if doc.get("version") != VERSION:
        raise ValidationError(f"unsupported container version {doc.get('version')!r}")
    family = doc["family"]
    p = doc["payload"]
    if family == "linear":
        eig = EigenDecomposition(
            np.asarray(p["eigenvalues"], dtype=float),
            np.asarray(p["eigenvectors"], dtype=float),
        )
        return LinearDenoiser(
            mean=np.asarray(p["mean"], dtype=float), eig=eig, k=p["k"], label=p["label"]
        )
    if family == "exact_gmm":
        return ExactGmmDenoiser(GmmSpec.from_dict(p["spec"]))
    if family == "polynomial":
        return PolynomialDenoiser(
            kind=p["kind"],
            degree=p["degree"],
            sigma_grid=np.asarray(p["sigma_grid"], dtype=float),
            a_matrices=[np.asarray(a, dtype=float) for a in p["a_matrices"]],
            b_vectors=[np.asarray(b, dtype=float) for b in p["b_vectors"]],
            input_dim=p["input_dim"],
            exponents=[tuple(e) for e in p["exponents"]] if p["exponents"] else None,
            rf_matrix=(
                np.asarray(p["rf_matrix"], dtype=float)
                if p["rf_matrix"] is not None else None
            ),
        )
    if family == "mlp_bottleneck":
        return MlpBottleneckDenoiser(
            weights=[np.asarray(w, dtype=float) for w in p["weights"]],
            biases=[np.asarray(b, dtype=float) for b in p["biases"]],
            h=p["h"],
            width=p["width"],
            sigma_range=(p["sigma_range"][0], p["sigma_range"][1]),
            activation=p["activation"],
            loss_curve=p.get("loss_curve", []),
            train_meta=p.get("train_meta", {}),
        )
    if family == "patchwise":
        return PatchwiseDenoiser(
            side=p["side"],
            stride=p["stride"],
            size_map=PatchSizeMap(
                default_size=p["default_size"],
                breakpoints=tuple((s, int(q)) for s, q in p["breakpoints"]),
            ),
            bases={int(k): denoiser_from_dict(v) for k, v in p["bases"].items()},
        )
    raise ValidationError(f"unknown denoiser family {family!r}")


def save_denoiser(den: Denoiser, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(denoiser_to_dict(den), fh)


def load_denoiser(path: str | Path) -> Denoiser:
    with open(path) as fh:
        return denoiser_from_dict(json.load(fh))
