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

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import importlib.metadata as importlib_metadata

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .errors import (
    DetpatchError,
    ConfigurationError,
    ContractViolation,
    GenerationError,
    AttackError,
    LossyFormatError,
)
from .detpatch_config import HeatmapConfig, ConsensusConfig, AttackConfig, RunConfig
from .detpatch_init import detpatch_init
from .masks import PatchMask, PatchWindow
from .mask_method import Placement, build_patch_mask
from .detector import get_detector, make_toy_detector, generate_synthetic_image, detect

# the placement modules register themselves with build_patch_mask on import
from . import heatmap, consensus  # noqa: F401
from .patch_attack import AttackResult, attack, ensemble_loss, fgsm_step

try:
    __version__ = importlib_metadata.version(__name__)
except importlib_metadata.PackageNotFoundError:
    __version__ = "0.0.0"
