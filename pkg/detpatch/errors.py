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
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "DetpatchError",
    "ConfigurationError",
    "ContractViolation",
    "GenerationError",
    "AttackError",
    "LossyFormatError",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


class DetpatchError(RuntimeError):
    """base class for all errors raised by this package"""


class ConfigurationError(DetpatchError):
    """
    Raised when a configuration value, an image shape, or a layer name does
    not agree with what the detector or pipeline expects.
    """


class ContractViolation(DetpatchError):
    """
    Raised when a caller hands over something that breaks an API contract; for
    example a loss that is not a differentiable scalar, or tensors whose shapes
    do not match.
    """


class GenerationError(DetpatchError):
    """Raised when the synthetic image generator cannot place the objects"""


class AttackError(DetpatchError):
    """Raised when an attack is started without anything to optimize"""


class LossyFormatError(DetpatchError):
    """Raised when an adversarial image would be written in a lossy format"""
