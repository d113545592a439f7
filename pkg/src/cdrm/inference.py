"""Next-state prediction and disentangled uncertainty from a trained model.

Inference freezes the query (state, action), lets a Langevin chain roam
the next-state block, and keeps every visited candidate whose score
clears a threshold. The surviving set yields the prediction (its best
member), the aleatoric estimate (its spread), and half of the epistemic
estimate (its best score and the chain's score stability); the other
half comes from the query's kernel density under the training inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kde, langevin
from .errors import EmptyValidSetError, InvalidInputError, UnpreparedModelError
from .langevin import ChainTrace, LangevinConfig, SeedLike
from .model import CdrmModel, score_fn

DEFAULT_ALPHA = 0.5
DEDUP_RANGE_FRACTION = 1e-3


class ValidSet:
    """Deduplicated above-threshold candidates in insertion order.

    An incoming sample within dedup_tol (componentwise, so L-infinity for
    a scalar tolerance) of a stored member is discarded regardless of
    score; first-seen members are never displaced. Inserts go through a
    cell hash with one cell per tolerance box, so only the 3^d adjacent
    cells are ever compared against.
    """

    def __init__(self, dedup_tol):
        self.dedup_tol = np.atleast_1d(np.asarray(dedup_tol, dtype=np.float64))
        if self.dedup_tol.ndim != 1 or np.any(self.dedup_tol < 0):
            raise InvalidInputError("dedup_tol must be a non-negative scalar or vector")
        self.samples: list[np.ndarray] = []
        self.scores: list[float] = []
        self._flat: list[tuple] = []  # tuple mirror of samples, for cheap compares
        self._cells: dict[tuple, list[int]] = {}
        self._tol: tuple | None = None  # per-dim tolerance, fixed at first insert
        self._width: np.ndarray | None = None
        self._offsets: list[tuple] | None = None

    def __len__(self) -> int:
        return len(self.samples)

    def _prepare(self, d: int):
        tol = self.dedup_tol
        if tol.size == 1:
            tol = np.repeat(tol, d)
        elif tol.size != d:
            raise InvalidInputError(f"dedup_tol has {tol.size} entries, samples have {d}")
        self._tol = tuple(tol)
        # Zero-tolerance dims still need a positive hash cell width; exact
        # duplicates share a cell at any width.
        self._width = np.where(tol > 0, tol, 1.0)
        self._offsets = list(itertools.product((-1, 0, 1), repeat=d))

    def cell_width(self, d: int) -> np.ndarray:
        if self._tol is None:
            self._prepare(d)
        return self._width

    def _is_duplicate(self, xt: tuple, cell: tuple) -> bool:
        tol = self._tol
        cells = self._cells
        flat = self._flat
        for off in self._offsets:
            key = tuple(c + o for c, o in zip(cell, off))
            for idx in cells.get(key, ()):
                yt = flat[idx]
                if all(abs(a - b) <= t for a, b, t in zip(xt, yt, tol)):
                    return True
        return False

    def _insert_fast(self, xt: tuple, cell: tuple, score: float) -> bool:
        if self._is_duplicate(xt, cell):
            return False
        self.samples.append(np.array(xt))
        self.scores.append(score)
        self._flat.append(xt)
        self._cells.setdefault(cell, []).append(len(self._flat) - 1)
        return True

    def insert(self, x: np.ndarray, score: float) -> bool:
        """Add x unless a stored member sits within dedup_tol of it."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        if self._tol is None:
            self._prepare(x.size)
        xt = tuple(x.tolist())
        cell = tuple(np.floor(x / self._width).astype(np.int64).tolist())
        return self._insert_fast(xt, cell, float(score))

    def max_score(self) -> float:
        if not self.scores:
            raise EmptyValidSetError("valid set is empty")
        return max(self.scores)


@dataclass
class InferenceResult:
    prediction: np.ndarray | None
    eu: float
    au: float | None
    valid_count: int
    per_step_max: np.ndarray


def collect_valid(trace: ChainTrace, alpha: float, dedup_tol) -> ValidSet:
    """Filter a chain trace into a deduplicated valid set.

    Scans the post-update batches (the initialization batch is not a
    chain product and is skipped); within a batch, samples are offered in
    index order, so insertion order is (step, sample index).
    """
    free = np.asarray(trace.free_dims)
    valid = ValidSet(dedup_tol)
    width = valid.cell_width(free.size)
    for batch, scores in zip(trace.samples[1:], trace.scores[1:]):
        scores = np.asarray(scores, dtype=np.float64)
        keep = np.flatnonzero(scores > alpha)
        if keep.size == 0:
            continue
        sub = batch[keep][:, free]
        cells = np.floor(sub / width).astype(np.int64)
        for xt, ct, sc in zip(sub.tolist(), cells.tolist(), scores[keep].tolist()):
            valid._insert_fast(tuple(xt), tuple(ct), sc)
    return valid


def predict(valid: ValidSet) -> np.ndarray:
    """Highest-scoring member; earliest insertion wins ties."""
    if len(valid) == 0:
        raise EmptyValidSetError("cannot predict from an empty valid set")
    return valid.samples[int(np.argmax(valid.scores))]


def aleatoric(valid: ValidSet) -> float:
    """Square root of the covariance trace of the stored samples."""
    if len(valid) == 0:
        raise EmptyValidSetError("cannot compute spread of an empty valid set")
    members = np.stack(valid.samples)
    return float(np.sqrt(members.var(axis=0).sum()))


def epistemic(valid: ValidSet, per_step_max: np.ndarray, kde_base: float) -> float:
    """Missing-data certainty in [0, 1]; exactly 1 when nothing was valid."""
    if len(valid) == 0:
        return 1.0
    sigma_phi = float(np.asarray(per_step_max, dtype=np.float64).std())
    return (kde_base + (1.0 - valid.max_score()) * sigma_phi) / 2.0


def default_inference_config(model: CdrmModel) -> LangevinConfig:
    """Chain over the next-state block with the query held fixed."""
    free = model.next_state_dims
    return LangevinConfig(
        n_samples=512,
        steps=50,
        step_size=0.1,
        noise_scale=0.01,
        direction="ascent",
        free_dims=free,
        bounds=model.input_bounds[free],
    )


def default_dedup_tol(model: CdrmModel) -> np.ndarray:
    free = model.next_state_dims
    spans = model.input_bounds[free, 1] - model.input_bounds[free, 0]
    return DEDUP_RANGE_FRACTION * spans


def infer(
    model: CdrmModel,
    s: np.ndarray,
    a: np.ndarray,
    cfg: LangevinConfig | None = None,
    alpha: float = DEFAULT_ALPHA,
    dedup_tol: np.ndarray | None = None,
    seed: SeedLike = 0,
) -> InferenceResult:
    """Full chain-collect-summarize pass for one query."""
    if model.kde_stats is None:
        raise UnpreparedModelError("model has no fitted density stats; train or fit first")
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    a = np.atleast_1d(np.asarray(a, dtype=np.float64)) if np.size(a) else np.empty(0)
    d_s, d_a, d_next = model.dims
    if len(s) != d_s or len(a) != d_a:
        raise InvalidInputError(
            f"query dims ({len(s)}, {len(a)}) do not match model dims ({d_s}, {d_a})"
        )
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(a))):
        raise InvalidInputError("query must be finite")
    cfg = cfg or default_inference_config(model)
    tol = default_dedup_tol(model) if dedup_tol is None else dedup_tol

    fixed = np.concatenate([s, a, np.zeros(d_next)])
    trace = langevin.run(score_fn(model), cfg.resolved(), fixed, seed)
    valid = collect_valid(trace, alpha, tol)

    base = kde.base_eu(model.kde_stats, np.concatenate([s, a]))
    eu = epistemic(valid, trace.per_step_max, base)
    if len(valid) == 0:
        return InferenceResult(None, eu, None, 0, trace.per_step_max)
    return InferenceResult(
        predict(valid), eu, aleatoric(valid), len(valid), trace.per_step_max
    )
