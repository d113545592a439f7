"""Versioned model serialization with an embedded self-check battery.

Models are stored as JSON with all floats in shortest round-trip decimal
form, which Python's float repr guarantees to restore bit-exactly. The
file carries a small battery of probe inputs together with their scores
at save time; load() recomputes them and refuses the file on any
difference, so silent corruption or a numerics drift cannot go unnoticed.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from . import langevin
from .errors import ModelFormatError, UnsupportedVersionError
from .kde import KdeStats
from .model import CdrmModel, TrainConfig, score_batch
from .nnet import MlpNetwork

SCHEMA_VERSION = 1
N_CHECK_PROBES = 16
_CHECK_STREAM_TAG = 0xC4EC


def _check_probes(model: CdrmModel) -> np.ndarray:
    """Deterministic probe battery spanning the model's input box."""
    rng = langevin.sample_rng((_CHECK_STREAM_TAG,), 0)
    lows, highs = model.input_bounds[:, 0], model.input_bounds[:, 1]
    return rng.uniform(lows, highs, size=(N_CHECK_PROBES, model.d_total))


def _nested(arr: np.ndarray):
    return np.asarray(arr, dtype=np.float64).tolist()


def provenance_for(cfg: TrainConfig) -> dict:
    """Training-run fingerprint stored inside the model file."""
    blob = json.dumps(
        {
            "epochs": cfg.epochs,
            "positive_batch": cfg.positive_batch,
            "negative_batch": cfg.negative_batch,
            "langevin_steps": cfg.langevin_steps,
            "langevin_step_size": cfg.langevin_step_size,
            "langevin_noise": cfg.langevin_noise,
            "learning_rate": cfg.learning_rate,
            "stability_eps": cfg.stability_eps,
            "seed": list(langevin.derive_seed(cfg.seed)),
        },
        sort_keys=True,
    )
    return {
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "seed": list(langevin.derive_seed(cfg.seed)),
        "epochs": cfg.epochs,
    }


def save_model(path, model: CdrmModel) -> None:
    probes = _check_probes(model)
    scores = score_batch(model, probes)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "dims": list(model.dims),
        "layer_dims": list(model.net.layer_dims),
        "logit_clip": model.logit_clip,
        "input_bounds": _nested(model.input_bounds),
        "weights": [_nested(w) for w in model.net.weights],
        "biases": [_nested(b) for b in model.net.biases],
        "kde": None
        if model.kde_stats is None
        else {
            "reference_points": _nested(model.kde_stats.reference_points),
            "bandwidth": model.kde_stats.bandwidth,
            "mu": model.kde_stats.mu,
            "sigma": model.kde_stats.sigma,
        },
        "provenance": model.provenance,
        "self_check": {"probes": _nested(probes), "scores": _nested(scores)},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> CdrmModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise ModelFormatError("missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise UnsupportedVersionError(
            f"schema_version {doc['schema_version']} not supported (this build reads {SCHEMA_VERSION})"
        )
    try:
        net = MlpNetwork(
            layer_dims=list(doc["layer_dims"]),
            weights=[np.array(w, dtype=np.float64) for w in doc["weights"]],
            biases=[np.array(b, dtype=np.float64) for b in doc["biases"]],
        )
        kde_doc = doc["kde"]
        kde_stats = None
        if kde_doc is not None:
            kde_stats = KdeStats(
                reference_points=np.array(kde_doc["reference_points"], dtype=np.float64),
                bandwidth=float(kde_doc["bandwidth"]),
                mu=float(kde_doc["mu"]),
                sigma=float(kde_doc["sigma"]),
            )
        model = CdrmModel(
            net=net,
            input_bounds=np.array(doc["input_bounds"], dtype=np.float64),
            dims=tuple(doc["dims"]),
            logit_clip=float(doc["logit_clip"]),
            kde_stats=kde_stats,
            provenance=doc["provenance"],
        )
        probes = np.array(doc["self_check"]["probes"], dtype=np.float64)
        stored = np.array(doc["self_check"]["scores"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from None
    recomputed = score_batch(model, probes)
    if not np.array_equal(recomputed, stored):
        raise ModelFormatError("self-check battery mismatch; file corrupt or numerics drifted")
    return model
