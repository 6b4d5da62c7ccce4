import os
import sys

import pytest
import torch

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from portrait.core.tensor import precision  # noqa: E402
from portrait.datasets.dataset import PortraitDataset  # noqa: E402
from portrait.datasets.synthetic import generate_dataset  # noqa: E402
from portrait.models.embedder import FaceEmbedder  # noqa: E402


@pytest.fixture(scope='session')
def pairs():
    with precision('float32'):
        return generate_dataset(seed=0, n=24, preset='tiny')


@pytest.fixture(scope='session')
def dataset(pairs):
    with precision('float32'):
        return PortraitDataset.from_pairs(pairs, preset='tiny')


@pytest.fixture(scope='session')
def embedder():
    with precision('float32'):
        return FaceEmbedder('tiny')


@pytest.fixture
def float64():
    with precision('float64'):
        yield torch.float64


@pytest.fixture(autouse=True)
def default_float32():
    torch.set_default_dtype(torch.float32)
    yield
    torch.set_default_dtype(torch.float32)
