"""
Shared fixtures: a tiny model configuration, small wave corpora and a model
trained once per session.
"""

import numpy as np
import pytest

from etnet.models import ModelConfig
from etnet.services import datagen
from etnet.services import etnet as net

LENGTH = 12
PERIOD = 6.0


@pytest.fixture(scope="session")
def tiny_config():
    """Small enough to train in well under a second per epoch."""
    return ModelConfig(
        N_E=2,
        N_L=2,
        N_N=3,
        K=2,
        L_c=1,
        epochs=3,
        learning_rate=0.01,
        chunk_size=8,
        seed=0,
    )


@pytest.fixture(scope="session")
def wave_corpus():
    """Four waves of each kind, length 12."""
    return datagen.gen_wave_corpus(count=4, length=LENGTH, period=PERIOD, phase_jitter=0.3, seed=1)


@pytest.fixture(scope="session")
def trained_model(tiny_config, wave_corpus):
    return net.train(tiny_config, wave_corpus)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
