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
# This file contains the batch runner behind `detpatch attack`.  Every image is
# an independent job: it builds its own detector handles, places the patches
# with the configured method for each (scale, grid ratio) candidate, attacks,
# keeps the best scoring candidate and writes the adversarial image.  Jobs run
# in worker threads bounded by a semaphore; the report is assembled in file
# name order whatever the completion order.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from pathlib import Path
from typing import Optional
import asyncio
import logging

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
import torch

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import ConfigurationError, DetpatchError
from ..detpatch_config import RunConfig
from ..detpatch_globals import g_detpatch
from ..detector.get_detector import get_detector
from ..mask_method import Placement, build_patch_mask
from ..patch_attack import attack
from ..sparsify.grid import grid_mask, inflate_scale
from ..sparsify.ensemble import CandidateRun, ensemble_select
from ..sparsify.scoring import ImageReport, ScoreReport, final_score
from .image_io import IMAGE_SUFFIXES, dump_heatmap, load_image, save_image_lossless

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "EXIT_OK",
    "EXIT_SKIPPED",
    "EXIT_FAILED",
    "find_images",
    "check_models",
    "attack_image",
    "run_async",
    "run",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SKIPPED = 1
EXIT_FAILED = 2


def find_images(directory: Path) -> list[Path]:
    """the image files directly inside a directory, sorted by name"""
    if not directory.is_dir():
        return list()
    return sorted(
        path
        for path in directory.iterdir()
        if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES
    )


def check_models(config: RunConfig):
    """
    Builds every configured detector once and checks that the requested
    heatmap layers exist on the placement models.

    Raises
    ------
    ConfigurationError
        When a heatmap layer is not an activation layer of a placement model.
    """
    for spec in dict.fromkeys(config.models + config.placement_models):
        get_detector(spec)

    if config.method != "heatmap" or not config.heatmap_layers:
        return

    for spec in config.placement_models:
        model = get_detector(spec)
        unknown = [name for name in config.heatmap_layers if name not in model.activation_layers]
        if unknown:
            raise ConfigurationError(
                f"heatmap_layers: {unknown} are not activation layers of {spec}, "
                f"expected a subset of {list(model.activation_layers)}"
            )


def _method_config(config: RunConfig, scale: int):
    if config.method == "heatmap":
        return config.heatmap_config(scale)
    return config.consensus_config(scale)


def attack_image(path: Path, config: RunConfig) -> ImageReport:
    """
    Runs the full pipeline on one image file and writes the adversarial image
    to the output directory.  Unreadable images and images that do not fit
    the detectors are reported as skipped.
    """
    try:
        clean = load_image(path)
        attack_models = [get_detector(spec) for spec in config.models]
        vote_models = [get_detector(spec) for spec in config.placement_models]
        for model in {id(m): m for m in attack_models + vote_models}.values():
            model.check_image(clean)

    except (OSError, ConfigurationError) as exc:
        log.warning("skipping %s: %s", path.name, exc)
        return ImageReport(image=path.name, status="skipped", message=str(exc))

    limit = min(clean.shape[:2])
    attack_config = config.attack_config()
    placements: dict[int, Placement] = dict()

    def pipeline(image: np.ndarray, scale: int, ratio: float) -> CandidateRun:
        side = inflate_scale(scale, ratio, limit) if config.inflate else min(scale, limit)

        # placement depends on the patch side only, not on the grid ratio
        if (placement := placements.get(side)) is None:
            placement = build_patch_mask(_method_config(config, side), vote_models, image)
            placements[side] = placement

        mask = grid_mask(placement.mask, ratio) if ratio > 0 else placement.mask
        if mask.is_empty:
            return CandidateRun(image=image.copy(), mask=mask, placement=placement)

        result = attack(image, mask, attack_models, attack_config)
        return CandidateRun(
            image=np.rint(result.image),
            mask=mask,
            placement=placement,
            iterations=result.iterations,
            final_loss=result.final_loss,
        )

    choice = ensemble_select(
        clean, config.candidates, pipeline, attack_models, config.threshold
    )
    if choice.failed:
        log.warning("%s: no candidate suppressed any detection", path.name)

    save_image_lossless(choice.image, config.out / f"{path.stem}.png")
    if config.heatmap_dir and choice.run.placement is not None:
        dump_heatmap(
            choice.run.placement.evidence,
            config.heatmap_dir / f"{path.stem}_{config.method}.png",
        )

    scale, ratio = choice.params
    return ImageReport(
        image=path.name,
        scale=scale,
        ratio=ratio,
        iterations=choice.run.iterations,
        final_loss=choice.run.final_loss,
        mask_pixels=choice.run.mask.popcount if choice.run.mask is not None else 0,
        placement_degenerate=bool(
            choice.run.placement is not None and choice.run.placement.degenerate
        ),
        ensemble_failed=choice.failed,
        scores=choice.scores,
    )


async def run_async(config: Optional[RunConfig] = None) -> int:
    """
    Processes every image of the input directory with a pool of
    `g_detpatch.workers` worker threads.  A job that fails with a
    DetpatchError is reported as skipped; the other jobs carry on.

    Raises
    ------
    ConfigurationError
        When the run was not initialized or `check_models` rejects it; no job
        is started.

    Returns
    -------
    The process exit code: EXIT_OK when every image was processed,
    EXIT_SKIPPED when some were skipped, EXIT_FAILED when there was nothing
    to process.
    """
    config = config or g_detpatch.config
    if config is None:
        raise ConfigurationError("detpatch_init must be called before run")

    check_models(config)

    if not (images := find_images(config.images)):
        log.error("no images found in %s", config.images)
        return EXIT_FAILED

    workers = max(1, g_detpatch.workers if config is g_detpatch.config else config.workers)
    if workers > 1:
        torch.set_num_threads(1)

    torch.manual_seed(config.seed)
    semaphore = asyncio.Semaphore(workers)

    async def job(path: Path) -> ImageReport:
        async with semaphore:
            try:
                return await asyncio.to_thread(attack_image, path, config)
            except DetpatchError as exc:
                log.error("%s: %s", path.name, exc)
                return ImageReport(image=path.name, status="skipped", message=str(exc))

    log.info("attacking %d images with %d workers", len(images), workers)
    reports = await asyncio.gather(*(job(path) for path in images))
    reports = sorted(reports, key=lambda rpt: rpt.image)

    report = ScoreReport(
        method=config.method,
        threshold=config.threshold,
        models=list(config.models),
        images=reports,
        final_score=final_score(reports),
    )
    if config.report:
        report.write(config.report)

    skipped = sum(rpt.status == "skipped" for rpt in reports)
    log.info(
        "processed %d of %d images, final score %.4f",
        len(reports) - skipped,
        len(reports),
        report.final_score,
    )
    return EXIT_SKIPPED if skipped else EXIT_OK


def run(config: Optional[RunConfig] = None) -> int:
    """synchronous entry point; see `run_async`"""
    return asyncio.run(run_async(config))
