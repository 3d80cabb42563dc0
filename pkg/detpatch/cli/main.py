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
from typing import Optional, Sequence
import argparse
import logging
import sys

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

from pydantic import BaseModel

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from ..errors import DetpatchError
from ..detpatch_init import detpatch_init
from ..detector.synthetic import generate_synthetic_image
from .image_io import save_image_lossless
from .runner import EXIT_FAILED, EXIT_OK, run

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["main", "build_parser"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

log = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# CLI destinations that map one-to-one onto RunConfig fields
_RUN_FIELDS = (
    "method",
    "images",
    "out",
    "patches",
    "scales",
    "grid_ratios",
    "inflate",
    "iters",
    "threshold",
    "seed",
    "models",
    "vote_models",
    "report",
    "heatmap_dir",
    "workers",
    "alpha",
    "omega",
    "gamma",
    "l2_iters",
    "l2_step",
    "sigma",
    "heatmap_layers",
)


class GroundTruth(BaseModel, extra="forbid"):
    """the ground-truth file written next to a synthetic benchmark"""

    seed: int
    objects: int
    boxes: dict[str, list[tuple[int, int, int, int]]]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detpatch",
        description="Sparse adversarial patches against object detectors",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging level (default: %(default)s)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    # -------------------------------------------------------------------------
    # attack
    # -------------------------------------------------------------------------

    atk = commands.add_parser("attack", help="attack every image of a directory")
    atk.add_argument("--method", choices=["heatmap", "consensus"])
    atk.add_argument("--images", type=Path, required=True, help="input image directory")
    atk.add_argument("--out", type=Path, required=True, help="output image directory")
    atk.add_argument("--patches", type=int, help="patch count n")
    atk.add_argument(
        "--scale", dest="scales", type=int, action="append", help="patch side; repeatable"
    )
    atk.add_argument(
        "--grid-ratio",
        dest="grid_ratios",
        type=float,
        action="append",
        help="grid sparsity ratio; repeatable",
    )
    atk.add_argument(
        "--inflate",
        action="store_true",
        default=None,
        help="enlarge the patch side by 1/sqrt(1 - ratio) before gridding",
    )
    atk.add_argument("--iters", type=int, help="attack iteration budget")
    atk.add_argument("--threshold", type=float, help="confidence threshold t")
    atk.add_argument("--seed", type=int)
    atk.add_argument("--models", nargs="+", help="attack (and scoring) detectors")
    atk.add_argument("--vote-models", nargs="+", help="detectors that place the patches")
    atk.add_argument("--report", type=Path, help="score report path (JSON)")
    atk.add_argument("--heatmap-dir", type=Path, help="write placement maps here")
    atk.add_argument("--workers", help="worker count, or $NAME to read it from the environment")
    atk.add_argument("--alpha", type=float, help="attack step size")
    atk.add_argument("--omega", type=float, help="L2 weight of the consensus attack")
    atk.add_argument("--gamma", type=float, help="key box weight for two-stage detectors")
    atk.add_argument("--l2-iters", type=int, help="consensus L2 attack iterations")
    atk.add_argument("--l2-step", type=float, help="consensus L2 attack step size")
    atk.add_argument("--sigma", type=float, help="heatmap smoothing sigma")
    atk.add_argument("--heatmap-layers", nargs="+", help="activation layers for heatmaps")

    # -------------------------------------------------------------------------
    # synth
    # -------------------------------------------------------------------------

    syn = commands.add_parser("synth", help="write a seeded synthetic benchmark")
    syn.add_argument("--out", type=Path, required=True)
    syn.add_argument("--count", type=int, default=20)
    syn.add_argument("--objects", type=int, default=3)
    syn.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_attack(args: argparse.Namespace) -> int:
    raw = {
        name: value
        for name in _RUN_FIELDS
        if (value := getattr(args, name, None)) is not None
    }
    try:
        config = detpatch_init(raw)
        return run(config)
    except DetpatchError as exc:
        print(f"detpatch: {exc}", file=sys.stderr)
        return EXIT_FAILED


def _cmd_synth(args: argparse.Namespace) -> int:
    boxes = dict()
    try:
        for index in range(args.count):
            image, truth = generate_synthetic_image(args.seed + index, args.objects)
            name = f"synth_{index:03d}.png"
            save_image_lossless(image, args.out / name)
            boxes[name] = truth

    except DetpatchError as exc:
        print(f"detpatch: {exc}", file=sys.stderr)
        return EXIT_FAILED

    truth_file = GroundTruth(seed=args.seed, objects=args.objects, boxes=boxes)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "ground_truth.json").write_text(truth_file.model_dump_json(indent=2) + "\n")
    log.info("wrote %d images to %s", args.count, args.out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)

    if args.command == "synth":
        return _cmd_synth(args)
    return _cmd_attack(args)


if __name__ == "__main__":
    sys.exit(main())
