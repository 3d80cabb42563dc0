"""Test doubles and brute-force oracles shared by the test modules."""

import numpy as np
import torch

from detpatch.detector.detector_api import DetectorFamily, DetectorModel, ForwardPass


class FixedScoresDetector(DetectorModel):
    """reports the same candidate confidences for every image"""

    def __init__(
        self,
        scores,
        name="fixed",
        family=DetectorFamily.single_stage,
        shape=(8, 8),
        score_dtype=torch.float64,
    ):
        super().__init__(
            name=name, family=family, activation_layers=("pixels",), input_shape=shape
        )
        self.fixed = torch.tensor(scores, dtype=score_dtype)
        self.boxes = torch.tensor(
            [[0.0, 2.0 * i, 1.0, 2.0 * i + 1.0] for i in range(len(scores))],
            dtype=torch.float64,
        ).reshape(-1, 4)

    def forward(self, image: torch.Tensor) -> ForwardPass:
        scores = self.fixed + 0.0 * image.sum()
        return ForwardPass(
            image=image,
            boxes=self.boxes.clone(),
            scores=scores,
            class_ids=torch.zeros(len(self.fixed), dtype=torch.int64),
            activations={"pixels": image.permute(2, 0, 1)},
        )


class MarkerCountDetector(DetectorModel):
    """detects as many boxes as the value of pixel (0, 0, 0), at most 8"""

    ANCHORS = 8

    def __init__(self, name="marker"):
        super().__init__(
            name=name,
            family=DetectorFamily.single_stage,
            activation_layers=("pixels",),
            input_shape=(8, 8),
        )
        self.boxes = torch.tensor(
            [[float(i), 0.0, i + 1.0, 1.0] for i in range(self.ANCHORS)], dtype=torch.float64
        )

    def forward(self, image: torch.Tensor) -> ForwardPass:
        marker = image[0, 0, 0]
        index = torch.arange(self.ANCHORS, dtype=torch.float64)
        high = torch.full_like(index, 0.9)
        low = torch.full_like(index, 0.05)
        scores = torch.where(index < marker, high, low) + 0.0 * marker
        return ForwardPass(
            image=image,
            boxes=self.boxes.clone(),
            scores=scores,
            class_ids=torch.zeros(self.ANCHORS, dtype=torch.int64),
            activations={"pixels": image.permute(2, 0, 1)},
        )


def marker_image(count: int) -> np.ndarray:
    image = np.zeros((8, 8, 3))
    image[0, 0, 0] = count
    return image


def brute_force_window_pair(values: np.ndarray, scale: int):
    """
    Enumerates every ordered pair of non-overlapping windows and returns the
    pair that ranks highest by (first window sum, second window sum), each
    sum compared first and then the raster position.
    """
    height, width = values.shape
    positions = [
        (r, c) for r in range(height - scale + 1) for c in range(width - scale + 1)
    ]
    sums = {(r, c): values[r : r + scale, c : c + scale].sum() for r, c in positions}

    def disjoint(a, b):
        return abs(a[0] - b[0]) >= scale or abs(a[1] - b[1]) >= scale

    best = None
    best_key = None
    for i, first in enumerate(positions):
        for j, second in enumerate(positions):
            if not disjoint(first, second):
                continue
            # larger sums win; earlier raster positions win ties
            key = (sums[first], -i, sums[second], -j)
            if best_key is None or key > best_key:
                best, best_key = (first, second), key
    return best


def direct_smooth(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """dense 2-D correlation with the outer-product kernel, symmetric padding"""
    radius = len(kernel) // 2
    padded = np.pad(values, radius, mode="symmetric")
    weights = np.outer(kernel, kernel)
    out = np.zeros_like(values, dtype=np.float64)
    for r in range(values.shape[0]):
        for c in range(values.shape[1]):
            out[r, c] = (padded[r : r + 2 * radius + 1, c : c + 2 * radius + 1] * weights).sum()
    return out
