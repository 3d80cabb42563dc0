from .losses import suppression_loss, two_stage_loss
from .l2_attack import Perturbation, l2_attack
from .voting import (
    PatchCandidateMap,
    extract_top_patches,
    normalize_candidates,
    vote_map,
    vote,
)
from .placement import consensus_mask
