"""Radial-basis-function density estimation over dataset inputs.

Densities are unnormalized kernel averages: only their standardized value
relative to the training distribution matters downstream, where a sigmoid
turns "how unusual is this query" into a base epistemic-uncertainty term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDatasetError, InvalidInputError
from .nnet import sigmoid

MAX_REFERENCE_POINTS = 4096
BANDWIDTH_SAMPLE = 1024


@dataclass
class KdeStats:
    """Fitted density state: reference inputs, bandwidth, and the mean and
    standard deviation of the density over the reference points themselves."""

    reference_points: np.ndarray
    bandwidth: float
    mu: float
    sigma: float


def density(stats: KdeStats, query: np.ndarray) -> float:
    """Average RBF kernel value between the query and every reference point."""
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != stats.reference_points.shape[1]:
        raise InvalidInputError(
            f"query width {q.shape} does not match reference width "
            f"{stats.reference_points.shape[1]}"
        )
    return float(density_batch(stats, q[None, :])[0])


def density_batch(stats: KdeStats, queries: np.ndarray) -> np.ndarray:
    refs = stats.reference_points
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != refs.shape[1]:
        raise InvalidInputError("queries must be (k, d) with d matching references")
    sq = (
        np.sum(q * q, axis=1)[:, None]
        + np.sum(refs * refs, axis=1)[None, :]
        - 2.0 * (q @ refs.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * stats.bandwidth**2)).mean(axis=1)


def median_heuristic_bandwidth(points: np.ndarray, seed: int = 0) -> float:
    """Median pairwise distance over a bounded subsample, divided by sqrt(2)."""
    pts = points
    if len(pts) > BANDWIDTH_SAMPLE:
        idx = np.random.default_rng(seed).choice(len(pts), BANDWIDTH_SAMPLE, replace=False)
        pts = pts[np.sort(idx)]
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    iu = np.triu_indices(len(pts), k=1)
    med = float(np.median(dist[iu]))
    if med <= 0.0:
        raise DegenerateDatasetError("all subsampled points coincide; bandwidth undefined")
    return med / np.sqrt(2.0)


def fit(
    dataset_inputs: np.ndarray,
    bandwidth_rule: float | str = "median",
    seed: int = 0,
) -> KdeStats:
    """Freeze reference points and standardization constants before inference.

    Reference sets beyond MAX_REFERENCE_POINTS are uniformly subsampled
    (seeded) to bound the per-query cost. A dataset whose points all see the
    same density (e.g. fully symmetric or coincident points) has zero spread
    and cannot be standardized; that raises DegenerateDatasetError.
    """
    pts = np.asarray(dataset_inputs, dtype=np.float64)
    if pts.ndim != 2 or len(pts) < 2:
        raise InvalidInputError("need a (n, d) array with at least 2 points")
    if len(pts) > MAX_REFERENCE_POINTS:
        idx = np.random.default_rng(seed).choice(len(pts), MAX_REFERENCE_POINTS, replace=False)
        pts = pts[np.sort(idx)]
    if isinstance(bandwidth_rule, str):
        if bandwidth_rule != "median":
            raise InvalidInputError(f"unknown bandwidth rule {bandwidth_rule!r}")
        h = median_heuristic_bandwidth(pts, seed=seed)
    else:
        h = float(bandwidth_rule)
        if not (h > 0):
            raise InvalidInputError("bandwidth must be positive")
    stats = KdeStats(pts, h, mu=0.0, sigma=1.0)
    self_density = density_batch(stats, pts)
    mu = float(self_density.mean())
    sigma = float(self_density.std())
    if sigma <= 0.0:
        raise DegenerateDatasetError("density is constant over the dataset")
    stats.mu = mu
    stats.sigma = sigma
    return stats


def base_eu(stats: KdeStats, query: np.ndarray) -> float:
    """Sigmoid-standardized rarity of the query input, in (0, 1).

    High density relative to the dataset pushes the value toward 0, low
    density toward 1; it is strictly decreasing in density(query).
    """
    z = (density(stats, query) - stats.mu) / stats.sigma
    return float(sigmoid(-z))
