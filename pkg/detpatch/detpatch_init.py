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

import os

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

from pydantic import ValidationError

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .errors import ConfigurationError
from .detpatch_globals import g_detpatch
from .detpatch_config import RunConfig

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["detpatch_init", "WORKERS_ENV"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

WORKERS_ENV = "DETPATCH_WORKERS"


def _format_errors(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(loc) for loc in err['loc']) or '<config>'}: {err['msg']}"
        for err in exc.errors()
    )


def detpatch_init(config: dict) -> RunConfig:
    """
    Validates the User run configuration and stores it, together with the
    resolved worker count, in the run globals.

    Parameters
    ----------
    config: dict
        The raw configuration; keys are the `RunConfig` field names.  The
        "workers" value may be given as "$NAME" to read it from the
        environment, and the DETPATCH_WORKERS variable overrides it.

    Raises
    ------
    ConfigurationError
        When any field is invalid; the message names every offending field.

    Returns
    -------
    The validated run configuration.
    """
    config = dict(config)

    # the override goes through the same "$NAME" resolution as the field
    if WORKERS_ENV in os.environ:
        config["workers"] = f"${WORKERS_ENV}"

    try:
        run_config = RunConfig.model_validate(config)
    except ValidationError as exc:
        raise ConfigurationError(f"Invalid run configuration: {_format_errors(exc)}")

    g_detpatch.config = run_config
    g_detpatch.workers = run_config.workers
    return run_config
