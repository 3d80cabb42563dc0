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

from dataclasses import dataclass
from typing import Optional

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .detpatch_config import RunConfig

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["DetpatchGlobals", "g_detpatch"]


@dataclass
class DetpatchGlobals:
    """
    Define a class to encapsulate the global variables used by a run.

    Attributes
    ----------
    config: RunConfig
        The validated run configuration, as produced by `detpatch_init`.

    workers: int
        The resolved size of the image worker pool.  This is the configured
        value unless the DETPATCH_WORKERS environment variable overrides it.
    """

    config: Optional[RunConfig] = None
    workers: int = 1


# -----------------------------------------------------------------------------
# Globals
# -----------------------------------------------------------------------------

# the global variables used by the command-line harness
g_detpatch = DetpatchGlobals()
