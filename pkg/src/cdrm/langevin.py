"""Batch-parallel Langevin dynamics over a scored vector space.

One sampler serves two callers: training evolves negatives over the full
joint tuple, inference evolves next-state candidates with the query
coordinates frozen. A score function maps a batch of points to scores and
per-point input gradients; the chain follows the gradient (ascent or
descent), adds Gaussian noise, and projects back into bounds after every
step.

Reproducibility contract: each sample's initialization and noise come from
its own stream, derived from (seed, sample index). Changing the batch size
therefore never perturbs the stream of any other sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError, SamplingFailureError

# score_fn(batch (n, d)) -> (scores (n,), gradients (n, d))
ScoreFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

SeedLike = int | tuple[int, ...]


def _entropy(seed: SeedLike) -> list[int]:
    parts = (seed,) if isinstance(seed, int) else tuple(seed)
    return [int(p) & 0xFFFFFFFFFFFFFFFF for p in parts]


def sample_rng(seed: SeedLike, index: int) -> np.random.Generator:
    """Independent generator for one sample, a counter-style split of `seed`."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_entropy(seed) + [index])))


def derive_seed(seed: SeedLike, *tags: int) -> tuple[int, ...]:
    """Extend a seed with context tags (epoch index, stream purpose, ...)."""
    return tuple(_entropy(seed)) + tuple(int(t) for t in tags)


@dataclass
class LangevinConfig:
    """Chain shape and update knobs.

    free_dims lists the coordinates the chain updates; all others stay
    frozen at caller-supplied values. bounds has one (low, high) row per
    free dimension. Both may be None in configs that act as knob bundles;
    they must be resolved before running a chain.
    """

    n_samples: int
    steps: int
    step_size: float
    noise_scale: float
    direction: str = "ascent"
    free_dims: Sequence[int] | None = None
    bounds: np.ndarray | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise InvalidInputError("n_samples must be positive")
        if self.steps < 0:
            raise InvalidInputError("steps must be >= 0")
        if not (self.step_size > 0):
            raise InvalidInputError("step_size must be positive")
        if self.noise_scale < 0:
            raise InvalidInputError("noise_scale must be non-negative")
        if self.direction not in ("ascent", "descent"):
            raise InvalidInputError(f"unknown direction {self.direction!r}")
        if self.free_dims is not None:
            self.free_dims = np.asarray(self.free_dims, dtype=np.intp)
            if self.free_dims.size == 0:
                raise InvalidInputError("free_dims must be non-empty")
        if self.bounds is not None:
            self.bounds = np.asarray(self.bounds, dtype=np.float64)
            if self.bounds.ndim != 2 or self.bounds.shape[1] != 2:
                raise InvalidInputError("bounds must have shape (n_free, 2)")
            if not np.all(np.isfinite(self.bounds)):
                raise InvalidInputError("bounds must be finite")
            if np.any(self.bounds[:, 0] > self.bounds[:, 1]):
                raise InvalidInputError("bounds must satisfy low <= high")

    def resolved(self) -> "LangevinConfig":
        if self.free_dims is None or self.bounds is None:
            raise InvalidInputError("config is missing free_dims/bounds")
        if len(self.free_dims) != len(self.bounds):
            raise InvalidInputError("free_dims and bounds disagree in length")
        return self


@dataclass
class ChainTrace:
    """Full record of one chain run.

    samples[l] is the batch after l steps (samples[0] is the
    initialization); scores[l] are the matching score values. per_step_max
    holds the batch maximum for steps 1..L, the statistic downstream
    uncertainty estimates are built from.
    """

    samples: list[np.ndarray]
    scores: list[np.ndarray]
    per_step_max: np.ndarray
    free_dims: np.ndarray = field(default_factory=lambda: np.arange(0))


def init_uniform(
    cfg: LangevinConfig,
    seed: SeedLike,
    fixed_values: np.ndarray | None = None,
) -> np.ndarray:
    """Uniform initialization over bounds on free dims; frozen dims copied.

    fixed_values is a full-width vector supplying the frozen coordinates;
    omit it when every dimension is free.
    """
    cfg = cfg.resolved()
    batch = _init_with_rngs(cfg, [sample_rng(seed, i) for i in range(cfg.n_samples)], fixed_values)
    return batch


def _init_with_rngs(cfg, rngs, fixed_values):
    free = cfg.free_dims
    if fixed_values is None:
        total_dim = len(free)
        if not np.array_equal(np.sort(free), np.arange(total_dim)):
            raise InvalidInputError("fixed_values required when some dims are frozen")
        base = np.zeros(total_dim)
    else:
        base = np.asarray(fixed_values, dtype=np.float64)
        if base.ndim != 1 or len(base) < len(free):
            raise InvalidInputError("fixed_values must be a full-width vector")
        if np.any(free >= len(base)):
            raise InvalidInputError("free_dims exceed the width of fixed_values")
    batch = np.tile(base, (cfg.n_samples, 1))
    lows, highs = cfg.bounds[:, 0], cfg.bounds[:, 1]
    for i, rng in enumerate(rngs):
        batch[i, free] = rng.uniform(lows, highs)
    return batch


def _apply_update(batch, grads, noise, cfg):
    """Gradient move plus noise on free dims, then projection into bounds."""
    sign = 1.0 if cfg.direction == "ascent" else -1.0
    free = cfg.free_dims
    out = batch.copy()
    moved = batch[:, free] + sign * cfg.step_size * grads[:, free] + noise
    np.clip(moved, cfg.bounds[:, 0], cfg.bounds[:, 1], out=moved)
    out[:, free] = moved
    return out


def step(
    score_fn: ScoreFn,
    batch: np.ndarray,
    cfg: LangevinConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Single Langevin update of a batch, drawing noise from `rng`."""
    cfg = cfg.resolved()
    batch = np.asarray(batch, dtype=np.float64)
    _, grads = score_fn(batch)
    _check_grads(grads)
    if cfg.noise_scale > 0:
        noise = rng.normal(0.0, cfg.noise_scale, size=(batch.shape[0], len(cfg.free_dims)))
    else:
        noise = np.zeros((batch.shape[0], len(cfg.free_dims)))
    return _apply_update(batch, grads, noise, cfg)


def _check_grads(grads):
    finite = np.isfinite(grads).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise SamplingFailureError(f"non-finite gradient for sample {bad}")


def run(
    score_fn: ScoreFn,
    cfg: LangevinConfig,
    fixed_values: np.ndarray | None,
    seed: SeedLike,
) -> ChainTrace:
    """Initialize and advance a batch for cfg.steps steps, recording all of it.

    Per-sample noise for the whole chain is drawn up front from each
    sample's own stream, so traces are bit-reproducible for a given seed
    regardless of batch size changes elsewhere.
    """
    cfg = cfg.resolved()
    n, n_free, L = cfg.n_samples, len(cfg.free_dims), cfg.steps
    rngs = [sample_rng(seed, i) for i in range(n)]
    batch = _init_with_rngs(cfg, rngs, fixed_values)
    if cfg.noise_scale > 0:
        noise = np.stack([rng.normal(0.0, cfg.noise_scale, size=(L, n_free)) for rng in rngs])
    else:
        noise = np.zeros((n, L, n_free))

    scores, grads = score_fn(batch)
    samples_rec = [batch.copy()]
    scores_rec = [np.asarray(scores, dtype=np.float64).copy()]
    for l in range(L):
        _check_grads(grads)
        batch = _apply_update(batch, grads, noise[:, l, :], cfg)
        scores, grads = score_fn(batch)
        samples_rec.append(batch.copy())
        scores_rec.append(np.asarray(scores, dtype=np.float64).copy())
    per_step_max = np.array([s.max() for s in scores_rec[1:]])
    return ChainTrace(samples_rec, scores_rec, per_step_max, np.asarray(cfg.free_dims))
