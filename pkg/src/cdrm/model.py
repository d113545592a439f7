"""Scored transition field and its contrastive training loop.

The model assigns each joint (state, action, next-state) tuple a score
rho in (0, 1), read as "this transition exists in the dataset". Training
pushes scores toward 1 on dataset tuples and toward 0 on negatives, which
a Langevin ascent chain drags into whatever high-score regions the model
currently hallucinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import langevin
from .errors import InvalidInputError, TrainingDivergenceError
from .kde import KdeStats
from .langevin import LangevinConfig, ScoreFn, SeedLike
from .nnet import AdamState, MlpNetwork, adam_update, sigmoid

# Pre-sigmoid clamp half-width: confines scores to [1e-6, 1 - 1e-6].
LOGIT_CLIP = math.log((1.0 - 1e-6) / 1e-6)

# Stream tags keeping positive sampling and negative chains independent.
_TAG_POSITIVE = 1
_TAG_NEGATIVE = 2


@dataclass
class CdrmModel:
    """Network plus the joint-space geometry it is scored over.

    input_bounds has one (low, high) row per joint dimension; dims is the
    (d_s, d_a, d_next) split of the input layout. kde_stats is attached
    after training and feeds the epistemic-uncertainty base term.
    """

    net: MlpNetwork
    input_bounds: np.ndarray
    dims: tuple[int, int, int]
    logit_clip: float = LOGIT_CLIP
    kde_stats: KdeStats | None = None
    provenance: dict | None = None  # training config hash, seed, epochs

    def __post_init__(self):
        self.input_bounds = np.asarray(self.input_bounds, dtype=np.float64)
        d_s, d_a, d_next = self.dims
        if d_s < 1 or d_a < 0 or d_next < 1:
            raise InvalidInputError(f"bad dims {self.dims}")
        d_total = d_s + d_a + d_next
        if self.net.input_dim != d_total:
            raise InvalidInputError(
                f"net expects {self.net.input_dim} inputs, dims {self.dims} give {d_total}"
            )
        if self.input_bounds.shape != (d_total, 2):
            raise InvalidInputError(f"input_bounds must be ({d_total}, 2)")
        if np.any(self.input_bounds[:, 0] >= self.input_bounds[:, 1]):
            raise InvalidInputError("input_bounds must satisfy low < high")
        if not (self.logit_clip > 0):
            raise InvalidInputError("logit_clip must be positive")

    @property
    def d_total(self) -> int:
        return sum(self.dims)

    @property
    def next_state_dims(self) -> np.ndarray:
        """Joint-space indices of the next-state block."""
        d_s, d_a, d_next = self.dims
        return np.arange(d_s + d_a, d_s + d_a + d_next)


def score_batch(model: CdrmModel, x: np.ndarray) -> np.ndarray:
    """rho = sigmoid(clamped logit) for each row of x."""
    logits = model.net.forward_batch(x)
    return sigmoid(np.clip(logits, -model.logit_clip, model.logit_clip))


def score(model: CdrmModel, s: np.ndarray, a: np.ndarray, s_next: np.ndarray) -> float:
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    s_next = np.atleast_1d(np.asarray(s_next, dtype=np.float64))
    d_s, d_a, d_next = model.dims
    if (len(s), len(a), len(s_next)) != (d_s, d_a, d_next):
        raise InvalidInputError(
            f"tuple dims ({len(s)}, {len(a)}, {len(s_next)}) do not match model dims {model.dims}"
        )
    return float(score_batch(model, np.concatenate([s, a, s_next])[None, :])[0])


def score_and_grad(model: CdrmModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scores and input gradients for a batch.

    The clamp contributes gradient 1 inside its range and 0 outside, so
    saturated samples report an exactly zero gradient.
    """
    x = np.asarray(x, dtype=np.float64)
    logits, dlogit = model.net.forward_and_grad_input_batch(x)
    in_range = np.abs(logits) < model.logit_clip
    rho = sigmoid(np.clip(logits, -model.logit_clip, model.logit_clip))
    grads = (rho * (1.0 - rho) * in_range)[:, None] * dlogit
    return rho, grads


def score_fn(model: CdrmModel) -> ScoreFn:
    """Closure shape the Langevin sampler consumes."""
    return lambda batch: score_and_grad(model, batch)


def contrastive_loss(rho_pos: np.ndarray, rho_neg: np.ndarray, eps: float) -> float:
    """-mean(log(rho+ + eps)) - mean(log(1 - rho- + eps))."""
    rho_pos = np.asarray(rho_pos, dtype=np.float64)
    rho_neg = np.asarray(rho_neg, dtype=np.float64)
    if rho_pos.size == 0 or rho_neg.size == 0:
        raise InvalidInputError("loss batches must be non-empty")
    return float(-np.mean(np.log(rho_pos + eps)) - np.mean(np.log(1.0 - rho_neg + eps)))


@dataclass
class TrainConfig:
    epochs: int
    positive_batch: int = 32
    negative_batch: int = 32
    langevin_steps: int = 10
    langevin_step_size: float = 0.1
    langevin_noise: float = 0.01
    learning_rate: float = 0.01
    stability_eps: float = 1e-6
    seed: SeedLike = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise InvalidInputError("epochs must be >= 0")
        if self.positive_batch < 1 or self.negative_batch < 1:
            raise InvalidInputError("batch sizes must be positive")
        if self.langevin_steps < 0:
            raise InvalidInputError("langevin_steps must be >= 0")
        if not (self.langevin_step_size > 0):
            raise InvalidInputError("langevin_step_size must be positive")
        if self.langevin_noise < 0:
            raise InvalidInputError("langevin_noise must be >= 0")
        if not (self.learning_rate > 0):
            raise InvalidInputError("learning_rate must be positive")
        if not (0.0 < self.stability_eps < 0.5):
            raise InvalidInputError("stability_eps must lie in (0, 0.5)")

    def negative_chain_config(self, model: CdrmModel) -> LangevinConfig:
        """Chain over the full joint tuple, every dimension free."""
        return LangevinConfig(
            n_samples=self.negative_batch,
            steps=self.langevin_steps,
            step_size=self.langevin_step_size,
            noise_scale=self.langevin_noise,
            direction="ascent",
            free_dims=np.arange(model.d_total),
            bounds=model.input_bounds,
        )


def generate_negatives(
    model: CdrmModel,
    n: int,
    cfg: LangevinConfig,
    seed: SeedLike,
) -> np.ndarray:
    """Final batch of an ascent chain from uniform initialization.

    Returned positions are constants downstream; no gradient flows back
    through the chain that produced them.
    """
    cfg = replace(cfg, n_samples=n).resolved()
    trace = langevin.run(score_fn(model), cfg, None, seed)
    return trace.samples[-1]


def train(
    model: CdrmModel,
    dataset,
    cfg: TrainConfig,
) -> tuple[CdrmModel, list[float]]:
    """Contrastive training loop; returns the trained model and loss trace.

    Each epoch is one pass over the dataset in shuffled positive
    minibatches. Every update runs a fresh negative chain against the
    network as it stands at that update, so the negatives keep tracking
    the regions the model currently over-scores instead of chasing a
    stale snapshot. The returned trace holds one mean loss per epoch.
    Everything is keyed off cfg.seed, so a rerun reproduces the trace
    bit for bit, and the per-sample noise streams make the result
    independent of batch-size-induced layout.
    """
    tuples = np.asarray(dataset.tuples, dtype=np.float64)
    if len(tuples) == 0:
        raise InvalidInputError("dataset is empty")
    if tuples.shape[1] != model.d_total:
        raise InvalidInputError(
            f"dataset width {tuples.shape[1]} does not match model dims {model.dims}"
        )

    net = model.net
    adam = AdamState.zeros_for(net)
    eps = cfg.stability_eps
    step_index = 0  # Adam bias correction counts updates, not epochs
    losses: list[float] = []
    for epoch in range(cfg.epochs):
        order = langevin.sample_rng(
            langevin.derive_seed(cfg.seed, _TAG_POSITIVE, epoch), 0
        ).permutation(len(tuples))
        epoch_losses = []
        for update, start in enumerate(range(0, len(tuples), cfg.positive_batch)):
            current = replace(model, net=net)
            pos = tuples[order[start : start + cfg.positive_batch]]
            neg = generate_negatives(
                current,
                cfg.negative_batch,
                cfg.negative_chain_config(current),
                langevin.derive_seed(cfg.seed, _TAG_NEGATIVE, epoch, update),
            )

            logits_pos = net.forward_batch(pos)
            logits_neg = net.forward_batch(neg)
            in_pos = np.abs(logits_pos) < model.logit_clip
            in_neg = np.abs(logits_neg) < model.logit_clip
            rho_pos = sigmoid(np.clip(logits_pos, -model.logit_clip, model.logit_clip))
            rho_neg = sigmoid(np.clip(logits_neg, -model.logit_clip, model.logit_clip))

            loss = contrastive_loss(rho_pos, rho_neg, eps)
            if not np.isfinite(loss):
                raise TrainingDivergenceError(f"non-finite loss at epoch {epoch}")
            epoch_losses.append(loss)

            # dL/dlogit for each batch; the clamp zeroes saturated samples.
            up_pos = -(1.0 / len(pos)) / (rho_pos + eps) * rho_pos * (1.0 - rho_pos) * in_pos
            up_neg = (1.0 / len(neg)) / (1.0 - rho_neg + eps) * rho_neg * (1.0 - rho_neg) * in_neg
            grad = net.grad_params_batch(pos, up_pos)
            grad_neg = net.grad_params_batch(neg, up_neg)
            for i in range(len(grad.weights)):
                grad.weights[i] += grad_neg.weights[i]
                grad.biases[i] += grad_neg.biases[i]
            step_index += 1
            try:
                net, adam = adam_update(net, grad, adam, step_index, cfg.learning_rate)
            except TrainingDivergenceError as exc:
                raise TrainingDivergenceError(f"epoch {epoch}: {exc}") from None
        losses.append(float(np.mean(epoch_losses)))

    return replace(model, net=net), losses
