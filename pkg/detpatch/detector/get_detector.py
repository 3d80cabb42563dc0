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
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ConfigurationError
from .detector_api import DetectorFamily, DetectorModel
from .toy_detector import make_toy_detector

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["get_detector", "parse_detector_spec", "DETECTOR_KINDS"]

# -----------------------------------------------------------------------------
#
#                            CODE BEGINS
#
# -----------------------------------------------------------------------------

DETECTOR_KINDS = {
    "toy": DetectorFamily.single_stage,
    "toy2": DetectorFamily.two_stage,
}


def parse_detector_spec(spec: str) -> tuple[DetectorFamily, int]:
    """
    Splits a "<kind>:<seed>" model identifier into the detector family and
    seed, without building the detector.

    Raises
    ------
    ConfigurationError
        When the identifier is malformed or names an unknown detector kind.
    """
    kind, _, seed = spec.partition(":")

    if kind not in DETECTOR_KINDS:
        raise ConfigurationError(
            f"Unknown detector {spec!r}, expected one of "
            f"{', '.join(k + ':<seed>' for k in DETECTOR_KINDS)}"
        )

    try:
        return DETECTOR_KINDS[kind], int(seed)
    except ValueError:
        raise ConfigurationError(f"Detector {spec!r}: seed must be an integer")


def get_detector(spec: str) -> DetectorModel:
    """
    This function is the factory that turns a model identifier from the run
    configuration into a new detector handle.  Every call returns an
    independent handle, so concurrent jobs never share one.

    Parameters
    ----------
    spec: str
        "<kind>:<seed>", where kind is "toy" (single-stage toy detector) or
        "toy2" (the same network reported as a two-stage model).

    Raises
    ------
    ConfigurationError
        When the identifier is malformed or names an unknown detector kind.

    Returns
    -------
    The detector handle.
    """
    family, seed = parse_detector_spec(spec)
    return make_toy_detector(seed, family=family)
