from .detector_api import (
    ImageTensor,
    DetectorFamily,
    Detection,
    ActivationRecord,
    ForwardPass,
    DetectorModel,
    candidates,
    detect,
    loss_and_gradient,
    input_gradient,
    activation_and_gradient,
)
from .toy_detector import make_toy_detector, fit_toy_detector, ToyDetector
from .synthetic import generate_synthetic_image
from .get_detector import get_detector
