"""Shared fixtures: the expensive trained models are session-cached so the
acceptance battery and the example-level tests reuse one training run."""

import time
from dataclasses import replace

import pytest
from cdrm import data, kde, langevin, model, nnet

TOY_HIDDEN = [64, 128, 64]
TOY_EPOCHS = 100
TOY_BATCH = 16


class TrainedToy:
    """A trained toy-dataset model plus its provenance and wall time."""

    def __init__(self, m, dataset, losses, seconds):
        self.model = m
        self.dataset = dataset
        self.losses = losses
        self.seconds = seconds


def train_toy(
    seed: int, learning_rate: float = 1e-2, multimodal: bool = False, **overrides
) -> TrainedToy:
    t0 = time.perf_counter()
    ds = data.gen_toy(multimodal=multimodal, seed=seed)
    net = nnet.MlpNetwork.initialize(
        [2] + TOY_HIDDEN + [1], seed=langevin.derive_seed(seed, 0xA11)
    )
    m = model.CdrmModel(net=net, input_bounds=ds.bounds, dims=ds.dims)
    cfg = model.TrainConfig(
        epochs=TOY_EPOCHS,
        positive_batch=TOY_BATCH,
        learning_rate=learning_rate,
        seed=seed,
        **overrides,
    )
    m, losses = model.train(m, ds, cfg)
    m = replace(m, kde_stats=kde.fit(ds.inputs, seed=langevin.derive_seed(seed, 0xDE)))
    return TrainedToy(m, ds, losses, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def toy_model_1():
    return train_toy(1)


@pytest.fixture(scope="session")
def toy_model_2():
    return train_toy(2)


@pytest.fixture(scope="session")
def toy_model_13():
    return train_toy(13)


@pytest.fixture(scope="session")
def toy_trio(toy_model_1, toy_model_2, toy_model_13):
    return {1: toy_model_1, 2: toy_model_2, 13: toy_model_13}
