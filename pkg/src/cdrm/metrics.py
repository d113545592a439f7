"""Ranking metrics and the room-grid evaluation protocol.

Uncertainty estimates are judged as binary classifiers: does the AU
score rank noisy-region probes above everything else, and does the EU
score rank unreachable-region probes above everything else.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import langevin
from .data import RegionLabel, RoomLayout, label_probe
from .errors import UndefinedMetricError
from .inference import DEFAULT_ALPHA, default_inference_config, infer
from .langevin import LangevinConfig, SeedLike
from .model import CdrmModel


@dataclass
class ScoredProbe:
    probe_input: np.ndarray
    score: float
    label: int


def _split(probes) -> tuple[np.ndarray, np.ndarray]:
    scores = np.array([p.score for p in probes], dtype=np.float64)
    labels = np.array([int(p.label) for p in probes])
    if not np.all(np.isfinite(scores)):
        raise UndefinedMetricError("scores must be finite")
    return scores[labels == 1], scores[labels == 0]


def auroc(probes) -> float:
    """Rank statistic: P(random positive outranks random negative).

    Mann-Whitney form with half credit for ties, so the result equals
    exhaustive pair enumeration exactly.
    """
    pos, neg = _split(probes)
    if len(pos) == 0 or len(neg) == 0:
        raise UndefinedMetricError("auroc needs at least one probe of each class")
    diff = pos[:, None] - neg[None, :]
    wins = np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0)
    return float(wins / (len(pos) * len(neg)))


def auprc(probes) -> float:
    """Step-integrated area under the precision-recall sweep.

    Thresholds descend through the distinct scores with ties grouped;
    each recall increment contributes at the precision reached after the
    whole tie group is admitted.
    """
    pos, neg = _split(probes)
    if len(pos) == 0:
        raise UndefinedMetricError("auprc needs at least one positive probe")
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    order = np.argsort(-scores, kind="stable")
    scores, labels = scores[order], labels[order]
    # Last index of each tie group in the descending order.
    boundary = np.flatnonzero(np.diff(scores) != 0)
    last = np.concatenate([boundary, [len(scores) - 1]])
    tp = np.cumsum(labels)[last]
    n_admitted = last + 1.0
    precision = tp / n_admitted
    recall = tp / len(pos)
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


@dataclass
class ProbeRecord:
    x: float
    y: float
    label: str
    au_score: float
    eu_score: float
    valid_count: int


@dataclass
class RoomEvaluation:
    au_auroc: float
    au_auprc: float
    eu_auroc: float
    eu_auprc: float
    probes: list[ProbeRecord]

    def row(self) -> dict:
        return {
            "au_auroc": self.au_auroc,
            "au_auprc": self.au_auprc,
            "eu_auroc": self.eu_auroc,
            "eu_auprc": self.eu_auprc,
        }


def probe_grid(grid_resolution: int) -> np.ndarray:
    """Cell-center probe coordinates over the unit room, row-major."""
    centers = (np.arange(grid_resolution) + 0.5) / grid_resolution
    xx, yy = np.meshgrid(centers, centers, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def evaluate_room(
    model: CdrmModel,
    kde_stats=None,
    layout: RoomLayout | None = None,
    grid_resolution: int = 40,
    langevin_cfg: LangevinConfig | None = None,
    alpha: float = DEFAULT_ALPHA,
    seed: SeedLike = 0,
) -> RoomEvaluation:
    """Probe the whole room on a regular grid and score both classifiers.

    Probes with an empty valid set carry no spread estimate and enter the
    AU classifier with score 0. Each probe gets its own seed stream, so
    the evaluation is deterministic and independent of grid order.
    """
    layout = layout or RoomLayout()
    if kde_stats is not None:
        model = replace(model, kde_stats=kde_stats)
    cfg = langevin_cfg or default_inference_config(model)
    records: list[ProbeRecord] = []
    for i, probe in enumerate(probe_grid(grid_resolution)):
        result = infer(
            model,
            probe,
            np.empty(0),
            cfg=cfg,
            alpha=alpha,
            seed=langevin.derive_seed(seed, i),
        )
        label = label_probe(layout, probe)
        records.append(
            ProbeRecord(
                x=float(probe[0]),
                y=float(probe[1]),
                label=label.value,
                au_score=0.0 if result.au is None else result.au,
                eu_score=result.eu,
                valid_count=result.valid_count,
            )
        )
    au_probes = [
        ScoredProbe(np.array([r.x, r.y]), r.au_score, int(r.label == RegionLabel.AU_POSITIVE.value))
        for r in records
    ]
    eu_probes = [
        ScoredProbe(np.array([r.x, r.y]), r.eu_score, int(r.label == RegionLabel.EU_POSITIVE.value))
        for r in records
    ]
    return RoomEvaluation(
        au_auroc=auroc(au_probes),
        au_auprc=auprc(au_probes),
        eu_auroc=auroc(eu_probes),
        eu_auprc=auprc(eu_probes),
        probes=records,
    )
