"""

    tests.conftest.py
    ~~~~~~~~~~~~~~~~~
    Shared fixtures.

    @author: z33k

"""
from typing import Callable

import numpy as np
import pytest
import torch

from rln2.data.synth import SceneGeometry, synthesize_scene
from rln2.imaging.plane import ImagePlane
from rln2.nn.model import ModelConfig


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def make_plane(rng) -> Callable[..., ImagePlane]:
    def make(height=16, width=16, channels=3, lo=0.0, hi=1.0) -> ImagePlane:
        return ImagePlane(rng.uniform(lo, hi, size=(height, width, channels)))
    return make


@pytest.fixture
def tiny_config() -> ModelConfig:
    return ModelConfig(variant="Sf", guidance="hsv", fusion="cdffa", stages=2, base_width=4,
                       seed=7)


@pytest.fixture
def flat_geometry() -> SceneGeometry:
    return SceneGeometry.from_height(np.zeros((32, 32)), np.array([0.6, 0.5, 0.4]))


@pytest.fixture
def triplets():
    return [t for i in range(4) for t in synthesize_scene(i, seed=3, resolution=(32, 32))]


@pytest.fixture(autouse=True)
def _default_dtype():
    previous = torch.get_default_dtype()
    yield
    torch.set_default_dtype(previous)
