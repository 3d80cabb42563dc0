#  Copyright 2026 detpatch developers
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

# =============================================================================
# This file contains the bundled toy detector.  It is a four layer
# convolutional network over a 128x128 input with a stride-8 anchor grid
# (16x16 cells, one anchor per cell):
#
#   conv1  3x3, 3->4     channel 0: pixel occupancy  sigmoid(k(m - thr))
#                        channels 1..3: pixel contrast softplus(k(m - thr)) / k
#   conv2  2x2/2, 4->4   per 2x2 block: occupancy mass, x/y first moments of
#                        the occupancy about the block centre, contrast mass
#   conv3  2x2/2, 4->4   the same four quantities per 4x4 block
#   conv4  2x2/2, 4->4   the same four quantities per 8x8 cell
#   head   3x3, 4->4     the same four quantities over the 24x24 neighbourhood
#                        of each cell
#
# The head decodes per cell:
#
#   objectness  sigmoid(2 log((C + 0.5) / 12.5))     C = contrast mass
#   gate(u)     sigmoid(8 (1 - u^2 / 4.5^2))         u = centroid offset
#   confidence  objectness * gate(u) * gate(v)
#   box         centred on the occupancy centroid, side sqrt(occupancy mass)
#
# so a cell is confident when the bright mass in its neighbourhood is large and
# the centroid of that mass lies inside the cell.  The seed sets the colour
# mixing of the first two layers; `fit_toy_detector` calibrates the conv1
# brightness thresholds from synthetic images.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from functools import lru_cache

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
import torch
from torch import nn
import torch.nn.functional as F

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .detector_api import DetectorFamily, DetectorModel, ForwardPass
from .synthetic import IMAGE_SIZE, generate_synthetic_image

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "ToyDetectorNet",
    "ToyDetector",
    "make_toy_detector",
    "fit_toy_detector",
    "TOY_LAYERS",
    "CELL_SIZE",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

TOY_LAYERS = ("conv1", "conv2", "conv3", "conv4")
CELL_SIZE = 8

SHARPNESS = 25.0
INITIAL_THRESHOLD = 0.45

# where the fitted brightness threshold sits between background and object
THRESHOLD_FRACTION = 0.45

GATE_HALF_WIDTH = 4.5
GATE_SLOPE = 8.0

OBJECTNESS_GAIN = 2.0
CONTRAST_FLOOR = 0.5
CONTRAST_REFERENCE = 12.5

FIT_IMAGES = 16
FIT_SEED_BASE = 1_000_000


def _moment_kernel(child: float) -> torch.Tensor:
    """
    2x2 stride-2 kernel that merges four child blocks of side `child` into
    their parent: masses add, first moments are shifted to the parent centre.
    """
    weight = torch.zeros(4, 4, 2, 2, dtype=torch.float64)
    for dy in range(2):
        for dx in range(2):
            weight[0, 0, dy, dx] = 1.0
            weight[1, 1, dy, dx] = 1.0
            weight[1, 0, dy, dx] = (dx - 0.5) * child
            weight[2, 2, dy, dx] = 1.0
            weight[2, 0, dy, dx] = (dy - 0.5) * child
            weight[3, 3, dy, dx] = 1.0
    return weight


def _neighbourhood_kernel() -> torch.Tensor:
    weight = torch.zeros(4, 4, 3, 3, dtype=torch.float64)
    for dy in range(3):
        for dx in range(3):
            weight[0, 0, dy, dx] = 1.0
            weight[1, 1, dy, dx] = 1.0
            weight[1, 0, dy, dx] = (dx - 1) * CELL_SIZE
            weight[2, 2, dy, dx] = 1.0
            weight[2, 0, dy, dx] = (dy - 1) * CELL_SIZE
            weight[3, 3, dy, dx] = 1.0
    return weight


def _seeded_mix(gen: torch.Generator, *shape: int) -> torch.Tensor:
    """positive mixing weights near uniform, normalized over the last axis"""
    mix = 1.0 + (torch.rand(*shape, generator=gen, dtype=torch.float64) - 0.5) * 0.3
    return mix / mix.sum(dim=-1, keepdim=True)


class ToyDetectorNet(nn.Module):
    """the convolutional stack of the toy detector; see module header"""

    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(3, 4, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(4, 4, kernel_size=2, stride=2, bias=False)
        self.conv3 = nn.Conv2d(4, 4, kernel_size=2, stride=2, bias=False)
        self.conv4 = nn.Conv2d(4, 4, kernel_size=2, stride=2, bias=False)
        self.head = nn.Conv2d(4, 4, kernel_size=3, padding=1, bias=False)
        self.double()
        self.requires_grad_(False)

    @torch.no_grad()
    def init_weights(self, seed: int):
        gen = torch.Generator().manual_seed(int(seed))

        mix = _seeded_mix(gen, 4, 3)
        self.conv1.weight.copy_(
            (SHARPNESS * mix / 9.0)[:, :, None, None].expand(4, 3, 3, 3)
        )
        self.conv1.bias.fill_(-SHARPNESS * INITIAL_THRESHOLD)

        contrast_mix = _seeded_mix(gen, 3)
        conv2 = torch.zeros(4, 4, 2, 2, dtype=torch.float64)
        for dy in range(2):
            for dx in range(2):
                conv2[0, 0, dy, dx] = 1.0
                conv2[1, 0, dy, dx] = dx - 0.5
                conv2[2, 0, dy, dx] = dy - 0.5
                conv2[3, 1:, dy, dx] = contrast_mix
        self.conv2.weight.copy_(conv2)

        self.conv3.weight.copy_(_moment_kernel(2.0))
        self.conv4.weight.copy_(_moment_kernel(4.0))
        self.head.weight.copy_(_neighbourhood_kernel())

    @property
    def colour_mix(self) -> torch.Tensor:
        """the 4 x 3 RGB mixing of the conv1 channels"""
        return self.conv1.weight[:, :, 0, 0] * 9.0 / SHARPNESS

    def forward(self, x: torch.Tensor) -> dict[str, torch.Tensor]:
        """
        Runs a 1 x 3 x H x W batch and returns the K x h x w output of every
        layer.  Each layer consumes the returned tensor of the layer before
        it, so box scores can be differentiated with respect to them.
        """
        z1 = self.conv1(x)[0]
        a1 = torch.cat(
            [
                torch.sigmoid(z1[:1]),
                F.softplus(z1[1:], threshold=30.0) / SHARPNESS,
            ],
            dim=0,
        )
        a2 = self.conv2(a1.unsqueeze(0))[0]
        a3 = self.conv3(a2.unsqueeze(0))[0]
        a4 = self.conv4(a3.unsqueeze(0))[0]
        head = self.head(a4.unsqueeze(0))[0]
        return dict(conv1=a1, conv2=a2, conv3=a3, conv4=a4, head=head)


@torch.no_grad()
def fit_toy_detector(net: ToyDetectorNet, num_images: int = FIT_IMAGES):
    """
    Calibrates the conv1 brightness thresholds of the network.  For each conv1
    channel the mixed brightness of object interiors and of the background is
    measured on synthetic images, and the threshold is placed at
    THRESHOLD_FRACTION of the way from the background mean to the object mean.

    Parameters
    ----------
    net: ToyDetectorNet
        The network whose conv1 bias is updated in place.

    num_images: int
        How many synthetic images (three objects each) to measure.
    """
    mix = net.colour_mix.numpy()
    fg_sum = np.zeros(4)
    bg_sum = np.zeros(4)
    fg_count = bg_count = 0

    for index in range(num_images):
        image, boxes = generate_synthetic_image(FIT_SEED_BASE + index, 3)
        brightness = (image / 255.0) @ mix.T

        inside = np.zeros(image.shape[:2], dtype=bool)
        near = np.zeros(image.shape[:2], dtype=bool)
        for x1, y1, x2, y2 in boxes:
            inside[y1 + 1 : y2 - 1, x1 + 1 : x2 - 1] = True
            near[max(y1 - 2, 0) : y2 + 2, max(x1 - 2, 0) : x2 + 2] = True

        fg_sum += brightness[inside].sum(axis=0)
        fg_count += int(inside.sum())
        bg_sum += brightness[~near].sum(axis=0)
        bg_count += int((~near).sum())

    fg_mean = fg_sum / max(fg_count, 1)
    bg_mean = bg_sum / max(bg_count, 1)
    threshold = bg_mean + THRESHOLD_FRACTION * (fg_mean - bg_mean)
    net.conv1.bias.copy_(torch.from_numpy(-SHARPNESS * threshold))


@lru_cache(maxsize=None)
def _fitted_state(seed: int) -> dict[str, torch.Tensor]:
    net = ToyDetectorNet()
    net.init_weights(seed)
    fit_toy_detector(net)
    return {key: value.clone() for key, value in net.state_dict().items()}


def _gate(offset: torch.Tensor) -> torch.Tensor:
    return torch.sigmoid(GATE_SLOPE * (1.0 - offset**2 / GATE_HALF_WIDTH**2))


class ToyDetector(DetectorModel):
    """
    Detector handle around a fitted `ToyDetectorNet`.  Every convolutional layer
    is registered as an activation layer.
    """

    def __init__(self, *, name: str, net: ToyDetectorNet, family: DetectorFamily):
        super().__init__(
            name=name,
            family=family,
            activation_layers=TOY_LAYERS,
            input_shape=(IMAGE_SIZE, IMAGE_SIZE),
        )
        self.net = net.eval()

    def forward(self, image: torch.Tensor) -> ForwardPass:
        x = image.permute(2, 0, 1).unsqueeze(0) / 255.0
        outs = self.net(x)

        mass, moment_x, moment_y, contrast = outs["head"]
        offset_x = moment_x / (mass + 1.0)
        offset_y = moment_y / (mass + 1.0)

        objectness = torch.sigmoid(
            OBJECTNESS_GAIN * torch.log((contrast + CONTRAST_FLOOR) / CONTRAST_REFERENCE)
        )
        scores = (objectness * _gate(offset_x) * _gate(offset_y)).reshape(-1)

        rows, cols = torch.meshgrid(
            torch.arange(mass.shape[0], dtype=torch.float64),
            torch.arange(mass.shape[1], dtype=torch.float64),
            indexing="ij",
        )
        centre_x = cols * CELL_SIZE + CELL_SIZE / 2 + offset_x
        centre_y = rows * CELL_SIZE + CELL_SIZE / 2 + offset_y
        half = torch.sqrt(mass.clamp(min=1.0)) / 2
        boxes = torch.stack(
            [centre_x - half, centre_y - half, centre_x + half, centre_y + half], dim=-1
        ).reshape(-1, 4)

        return ForwardPass(
            image=image,
            boxes=boxes.detach(),
            scores=scores,
            class_ids=torch.zeros(scores.shape[0], dtype=torch.int64),
            activations={name: outs[name] for name in TOY_LAYERS},
        )


def make_toy_detector(
    seed: int, family: DetectorFamily = DetectorFamily.single_stage
) -> ToyDetector:
    """
    Returns a new fitted toy detector handle.  The weights are derived from
    the seed only, so two calls with the same seed give bitwise identical
    weights; each call returns an independent handle.

    Parameters
    ----------
    seed: int
        Seed of the weight generator.

    family: DetectorFamily
        The family reported by the handle.  The network is the same; the
        family only selects the loss the consensus attack uses.
    """
    net = ToyDetectorNet()
    net.load_state_dict(_fitted_state(int(seed)))
    prefix = "toy" if DetectorFamily(family) is DetectorFamily.single_stage else "toy2"
    return ToyDetector(name=f"{prefix}:{seed}", net=net, family=family)
