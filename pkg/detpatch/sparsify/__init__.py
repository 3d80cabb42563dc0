from .grid import BAYER_4X4, GridPattern, grid_mask, inflate_scale
from .scoring import (
    ModelScore,
    ImageReport,
    ScoreReport,
    pixels_changed,
    score_from_counts,
    score,
    final_score,
)
from .ensemble import CandidateRun, EnsembleChoice, ensemble_select
