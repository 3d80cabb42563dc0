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

from pathlib import Path
from typing import Literal, Optional, Union

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

from pydantic import BaseModel, Field, PositiveInt, SecretStr, field_validator
from pydantic_env.models import EnvSecretStr

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .errors import ConfigurationError
from .detector.get_detector import parse_detector_spec

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "HeatmapConfig",
    "ConsensusConfig",
    "AttackConfig",
    "RunConfig",
    "DEFAULT_MODELS",
    "DEFAULT_THRESHOLD",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

DEFAULT_MODELS = ("toy:1", "toy:2")
DEFAULT_THRESHOLD = 0.3


def _check_models(models: list[str]) -> list[str]:
    if not models:
        raise ValueError("at least one detector is required")
    for spec in models:
        try:
            parse_detector_spec(spec)
        except ConfigurationError as exc:
            raise ValueError(str(exc))
    return models


# -----------------------------------------------------------------------------
# Use pydantic models to validate every configuration.  Configure pydantic to
# prevent the User from providing (accidentally) any fields that are not
# specifically supported; via extra="forbid".
# -----------------------------------------------------------------------------


class HeatmapConfig(BaseModel, extra="forbid"):
    """
    Heatmap-based patch placement.

    Attributes
    ----------
    n: int
        Number of patches.

    scale: int
        Patch side in pixels.

    threshold: float
        Detections above this confidence contribute to the heatmap.

    layers: list, optional
        Activation layers to combine; all of the model's layers when omitted.

    sigma: float, optional
        Gaussian smoothing sigma; scale / 4 when omitted.
    """

    n: int = Field(10, ge=0)
    scale: int = Field(10, ge=1)
    threshold: float = Field(DEFAULT_THRESHOLD, ge=0.0, le=1.0)
    layers: Optional[list[str]] = None
    sigma: Optional[float] = Field(None, gt=0.0)

    @property
    def smoothing_sigma(self) -> float:
        return self.sigma if self.sigma is not None else self.scale / 4.0


class ConsensusConfig(BaseModel, extra="forbid"):
    """
    Consensus-based patch placement.

    Attributes
    ----------
    n: int
        Number of patches.

    scale: int
        Patch side in pixels.

    omega: float
        Weight of the squared L2 norm of the normalized perturbation (P / 255).

    gamma: float
        Weight of boxes that match clean detections in the two-stage loss.

    threshold: float
        Confidence threshold t of the suppression loss.

    l2_iters: int
        Iterations of the full-image L2-regularized attack.

    step: float
        Sign-gradient step of the L2 attack on the 0..255 scale.
    """

    n: int = Field(10, ge=1)
    scale: int = Field(10, ge=1)
    omega: float = Field(1e-4, ge=0.0)
    gamma: float = Field(0.9, ge=0.0, le=1.0)
    threshold: float = Field(DEFAULT_THRESHOLD, ge=0.0, le=1.0)
    l2_iters: int = Field(20, ge=1)
    step: float = Field(2.0, gt=0.0)


class AttackConfig(BaseModel, extra="forbid"):
    """the masked sign-gradient attack"""

    alpha: float = Field(4.0, gt=0.0)
    max_iters: int = Field(200, ge=1)
    threshold: float = Field(DEFAULT_THRESHOLD, ge=0.0, le=1.0)
    models: list[str] = Field(default_factory=lambda: list(DEFAULT_MODELS))

    _models = field_validator("models")(_check_models)


class RunConfig(BaseModel, extra="forbid"):
    """
    Define the schema of one command-line run.  Field names follow the CLI
    flags; see `detpatch.cli.main`.
    """

    method: Literal["heatmap", "consensus"] = "consensus"
    images: Path
    out: Path
    patches: int = Field(10, ge=1)
    scales: list[int] = Field(default_factory=lambda: [10], min_length=1)
    grid_ratios: list[float] = Field(default_factory=lambda: [0.0], min_length=1)
    inflate: bool = False
    iters: int = Field(200, ge=1)
    threshold: float = Field(DEFAULT_THRESHOLD, ge=0.0, le=1.0)
    seed: int = 0
    models: list[str] = Field(default_factory=lambda: list(DEFAULT_MODELS))
    vote_models: Optional[list[str]] = None
    report: Optional[Path] = None
    heatmap_dir: Optional[Path] = None
    workers: Union[PositiveInt, EnvSecretStr] = 1

    alpha: float = Field(4.0, gt=0.0)
    omega: float = Field(1e-4, ge=0.0)
    gamma: float = Field(0.9, ge=0.0, le=1.0)
    l2_iters: int = Field(20, ge=1)
    l2_step: float = Field(2.0, gt=0.0)
    sigma: Optional[float] = Field(None, gt=0.0)
    heatmap_layers: Optional[list[str]] = None

    _models = field_validator("models")(_check_models)

    @field_validator("vote_models")
    @classmethod
    def _vote_models(cls, value: Optional[list[str]]) -> Optional[list[str]]:
        return None if value is None else _check_models(value)

    @field_validator("workers", mode="before")
    @classmethod
    def _workers_text(cls, value):
        return value if isinstance(value, str) else str(value)

    @field_validator("workers")
    @classmethod
    def _workers(cls, value: Union[int, SecretStr]) -> int:
        """a "$NAME" worker count arrives as a secret holding the variable value"""
        if isinstance(value, SecretStr):
            value = value.get_secret_value()
        try:
            count = int(value)
        except (TypeError, ValueError):
            raise ValueError(f"worker count must be an integer, got {value!r}")
        if count < 1:
            raise ValueError("worker count must be >= 1")
        return count

    @field_validator("scales")
    @classmethod
    def _scales(cls, value: list[int]) -> list[int]:
        if any(scale < 1 for scale in value):
            raise ValueError("every scale must be >= 1")
        return value

    @field_validator("grid_ratios")
    @classmethod
    def _grid_ratios(cls, value: list[float]) -> list[float]:
        if any(not 0.0 <= ratio <= 1.0 for ratio in value):
            raise ValueError("every grid ratio must lie in [0, 1]")
        return value

    # -------------------------------------------------------------------------
    # per-stage configurations
    # -------------------------------------------------------------------------

    def attack_config(self) -> AttackConfig:
        return AttackConfig(
            alpha=self.alpha,
            max_iters=self.iters,
            threshold=self.threshold,
            models=self.models,
        )

    def consensus_config(self, scale: int) -> ConsensusConfig:
        return ConsensusConfig(
            n=self.patches,
            scale=scale,
            omega=self.omega,
            gamma=self.gamma,
            threshold=self.threshold,
            l2_iters=self.l2_iters,
            step=self.l2_step,
        )

    def heatmap_config(self, scale: int) -> HeatmapConfig:
        return HeatmapConfig(
            n=self.patches,
            scale=scale,
            threshold=self.threshold,
            layers=self.heatmap_layers,
            sigma=self.sigma,
        )

    @property
    def placement_models(self) -> list[str]:
        """the detectors that place patches; the attack models unless set"""
        return self.vote_models or self.models

    @property
    def candidates(self) -> list[tuple[int, float]]:
        """every (scale, grid ratio) pair of the ensemble, scales outermost"""
        return [(scale, ratio) for scale in self.scales for ratio in self.grid_ratios]
