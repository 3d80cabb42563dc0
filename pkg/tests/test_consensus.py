import numpy as np
import pytest

from detpatch.errors import ConfigurationError, ContractViolation
from detpatch.detpatch_config import ConsensusConfig
from detpatch.detector import Detection, candidates, detect
from detpatch.consensus import (
    PatchCandidateMap,
    Perturbation,
    extract_top_patches,
    l2_attack,
    normalize_candidates,
    suppression_loss,
    two_stage_loss,
    vote,
    vote_map,
)
from detpatch.mask_method import build_patch_mask
from detpatch.masks import PatchWindow

from helpers import brute_force_window_pair


def _det(confidence, box=(0.0, 0.0, 10.0, 10.0)):
    return Detection(box=box, confidence=confidence)


def _candidate_map(shape, windows):
    return PatchCandidateMap(magnitudes=np.zeros(shape), windows=windows)


# -----------------------------------------------------------------------------
# losses
# -----------------------------------------------------------------------------


def test_suppression_loss_sums_above_threshold():
    assert float(suppression_loss([_det(0.5), _det(0.2), _det(0.9)], 0.3)) == pytest.approx(1.4)


def test_suppression_loss_empty_and_below():
    assert float(suppression_loss([], 0.3)) == 0.0
    assert float(suppression_loss([_det(0.3), _det(0.1)], 0.3)) == 0.0


def test_suppression_loss_monotone():
    values = [float(suppression_loss([_det(c), _det(0.6)], 0.3)) for c in (0.9, 0.7, 0.5, 0.31)]
    assert values == sorted(values, reverse=True)


def test_suppression_loss_keeps_graph(toy_model, three_squares):
    loss = suppression_loss(candidates(toy_model, three_squares[0]), 0.3)
    assert loss.requires_grad


def test_two_stage_loss_weights():
    clean = [_det(0.9, (0, 0, 10, 10))]
    key = _det(0.8, (1, 1, 10, 10))
    other = _det(0.4, (50, 50, 60, 60))
    assert float(two_stage_loss([key, other], clean, 0.9)) == pytest.approx(0.76)
    assert float(two_stage_loss([key, other], clean, 1.0)) == pytest.approx(0.8)


def test_two_stage_loss_without_clean_boxes():
    found = [_det(0.8), _det(0.4, (50, 50, 60, 60))]
    assert float(two_stage_loss(found, [], 0.9)) == pytest.approx(0.1 * 1.2)


def test_two_stage_loss_rejects_bad_gamma():
    with pytest.raises(ConfigurationError):
        two_stage_loss([_det(0.5)], [], 1.5)


# -----------------------------------------------------------------------------
# l2_attack
# -----------------------------------------------------------------------------


def test_l2_attack_without_detections(toy_model, blank_image):
    result = l2_attack(toy_model, blank_image, ConsensusConfig())
    assert result.no_detections
    assert not result.values.any()


def test_l2_attack_zero_iterations(toy_model, three_squares):
    result = l2_attack(toy_model, three_squares[0], ConsensusConfig(), iterations=0)
    assert not result.no_detections
    assert not result.values.any()
    assert result.iterations == 0


def test_l2_attack_omega_zero_is_model_loss(toy_model, three_squares):
    image, _ = three_squares
    result = l2_attack(toy_model, image, ConsensusConfig(omega=0.0, l2_iters=3))
    assert len(result.history) == 3
    for model_loss, total in result.history:
        assert total == model_loss
    assert result.history[0][0] == pytest.approx(
        float(suppression_loss(candidates(toy_model, image), 0.3))
    )


def test_l2_attack_stays_feasible(toy_model, three_squares):
    image, _ = three_squares
    result = l2_attack(toy_model, image, ConsensusConfig(l2_iters=5))
    adv = image + result.values
    assert adv.min() >= 0 and adv.max() <= 255
    np.testing.assert_array_equal(result.apply(image), adv)


def test_l2_attack_concentrates_on_objects(toy_model, three_squares):
    image, truth = three_squares
    result = l2_attack(toy_model, image, ConsensusConfig(l2_iters=5))
    magnitudes = result.magnitudes

    inside = np.zeros((128, 128), dtype=bool)
    for x1, y1, x2, y2 in truth:
        inside[y1:y2, x1:x2] = True

    assert magnitudes.sum() > 0
    assert magnitudes[inside].sum() / magnitudes.sum() > inside.mean()


def test_l2_attack_two_stage(toy_two_stage, three_squares):
    image, _ = three_squares
    result = l2_attack(toy_two_stage, image, ConsensusConfig(l2_iters=2))
    clean = detect(toy_two_stage, image, 0.3)
    above = [det for det in candidates(toy_two_stage, image) if det.confidence > 0.3]
    assert result.history[0][0] == pytest.approx(float(two_stage_loss(above, clean, 0.9)))
    assert result.values.any()


# -----------------------------------------------------------------------------
# extraction, normalization, voting
# -----------------------------------------------------------------------------


def test_extract_uniform_magnitude_raster_order():
    values = np.zeros((6, 9, 3))
    values[:, :, 1] = 1.0
    cands = extract_top_patches(values, 3, 3)
    assert [(w.row, w.col) for w in cands.windows] == [(0, 0), (0, 3), (0, 6)]


def test_extract_single_hot_window():
    values = np.zeros((12, 12, 3))
    values[4:7, 5:8, 0] = 2.0
    cands = extract_top_patches(Perturbation(values=values), 1, 3)
    assert [(w.row, w.col) for w in cands.windows] == [(4, 5)]
    assert cands.windows[0].weight == pytest.approx(18.0)


def test_extract_matches_pair_search(rng):
    for _ in range(100):
        values = rng.random((12, 12))
        cands = extract_top_patches(values, 2, 3)
        assert [(w.row, w.col) for w in cands.windows] == list(
            brute_force_window_pair(values, 3)
        )


def test_extract_rejects_bad_arguments():
    with pytest.raises(ConfigurationError):
        extract_top_patches(np.ones((4, 4, 3)), 1, 5)
    with pytest.raises(ConfigurationError):
        extract_top_patches(np.ones((4, 4, 3)), 0, 2)


def test_extract_windows_disjoint_and_inside(rng):
    cands = extract_top_patches(rng.random((40, 40, 3)), 10, 6)
    for i, a in enumerate(cands.windows):
        assert a.inside((40, 40))
        assert not any(a.overlaps(b) for b in cands.windows[i + 1 :])


def test_candidate_map_rejects_overlap():
    with pytest.raises(ContractViolation):
        _candidate_map((8, 8), [PatchWindow(0, 0, 3, 1.0), PatchWindow(2, 2, 3, 1.0)])


def test_normalize_divides_by_max():
    cands = _candidate_map(
        (12, 12),
        [PatchWindow(0, 0, 3, 4.0), PatchWindow(0, 4, 3, 2.0), PatchWindow(0, 8, 3, 1.0)],
    )
    out = normalize_candidates(cands)
    assert [w.weight for w in out.windows] == [1.0, 0.5, 0.25]
    assert normalize_candidates(out).windows == out.windows


def test_normalize_single_window():
    out = normalize_candidates(_candidate_map((6, 6), [PatchWindow(1, 1, 2, 7.5)]))
    assert out.windows[0].weight == 1.0
    assert not out.degenerate


def test_normalize_all_zero_is_flagged():
    cands = _candidate_map((6, 6), [PatchWindow(0, 0, 2, 0.0)])
    out = normalize_candidates(cands)
    assert out.degenerate
    assert out.windows == cands.windows


def test_vote_single_model_reproduces_windows(rng):
    cands = normalize_candidates(extract_top_patches(rng.random((20, 20, 3)), 3, 4))
    mask = vote([cands], 3, 4)
    assert {(w.row, w.col) for w in mask.patches} == {(w.row, w.col) for w in cands.windows}


def test_vote_identical_models(rng):
    cands = normalize_candidates(extract_top_patches(rng.random((20, 20, 3)), 3, 4))
    single = vote([cands], 3, 4)
    triple = vote([cands, cands, cands], 3, 4)
    assert np.array_equal(single.bitmap, triple.bitmap)


def test_vote_disjoint_hot_windows():
    first = _candidate_map((12, 12), [PatchWindow(0, 0, 3, 1.0)])
    second = _candidate_map((12, 12), [PatchWindow(8, 8, 3, 1.0), PatchWindow(0, 8, 3, 0.9)])
    mask = vote([first, second], 2, 3)
    assert {(w.row, w.col) for w in mask.patches} == {(0, 0), (8, 8)}


def test_vote_order_and_scale_invariant(rng):
    per_model = [
        normalize_candidates(extract_top_patches(rng.random((24, 24, 3)), 4, 4))
        for _ in range(3)
    ]
    reference = vote(per_model, 4, 4)
    assert np.array_equal(vote(per_model[::-1], 4, 4).bitmap, reference.bitmap)
    np.testing.assert_array_equal(vote_map(per_model[::-1]), vote_map(per_model))

    doubled = [
        PatchCandidateMap(
            magnitudes=cand.magnitudes,
            windows=[PatchWindow(w.row, w.col, w.scale, 2 * w.weight) for w in cand.windows],
        )
        for cand in per_model
    ]
    assert np.array_equal(vote(doubled, 4, 4).bitmap, reference.bitmap)


def test_vote_rejects_empty_and_mismatch():
    with pytest.raises(ConfigurationError):
        vote([], 1, 2)
    with pytest.raises(ContractViolation):
        vote([_candidate_map((6, 6), []), _candidate_map((8, 8), [])], 1, 2)


# -----------------------------------------------------------------------------
# consensus placement
# -----------------------------------------------------------------------------


def test_consensus_placement(toy_model, toy_model_b, three_squares):
    image, truth = three_squares
    config = ConsensusConfig(n=10, scale=10, l2_iters=5)
    placement = build_patch_mask(config, [toy_model, toy_model_b], image)

    assert not placement.degenerate
    assert 0 < placement.mask.popcount <= 10 * 100
    hits = 0
    for win in placement.mask.patches:
        x_hit = [win.col < x2 and x1 < win.col + 10 for x1, _, x2, _ in truth]
        y_hit = [win.row < y2 and y1 < win.row + 10 for _, y1, _, y2 in truth]
        hits += any(x and y for x, y in zip(x_hit, y_hit))
    assert hits >= 3


def test_consensus_placement_blank_image(toy_model, blank_image):
    placement = build_patch_mask(ConsensusConfig(n=2, scale=10), [toy_model], blank_image)
    assert placement.degenerate
    assert not placement.mask.is_empty
