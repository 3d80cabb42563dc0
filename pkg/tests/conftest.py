import numpy as np
import pytest

from detpatch.detector import generate_synthetic_image, make_toy_detector
from detpatch.detector.detector_api import DetectorFamily


@pytest.fixture(scope="session")
def toy_model():
    return make_toy_detector(1)


@pytest.fixture(scope="session")
def toy_model_b():
    return make_toy_detector(2)


@pytest.fixture(scope="session")
def toy_two_stage():
    return make_toy_detector(1, family=DetectorFamily.two_stage)


@pytest.fixture(scope="session")
def three_squares():
    """(image, ground-truth boxes) with three objects"""
    return generate_synthetic_image(7, 3)


@pytest.fixture(scope="session")
def one_square():
    return generate_synthetic_image(11, 1)


@pytest.fixture(scope="session")
def blank_image():
    return np.zeros((128, 128, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
