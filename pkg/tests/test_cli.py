import json

import numpy as np
import pytest
from PIL import Image

from detpatch.cli import dump_heatmap, load_image, save_image_lossless
from detpatch.cli import runner
from detpatch.cli.main import main
from detpatch.detpatch_init import WORKERS_ENV
from detpatch.errors import ContractViolation, LossyFormatError

FAST_ATTACK = ["--iters", "15", "--l2-iters", "3", "--patches", "6"]


@pytest.fixture(autouse=True)
def _no_workers_env(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)


@pytest.fixture
def synth_dir(tmp_path):
    images = tmp_path / "images"
    assert main(["synth", "--out", str(images), "--count", "2", "--seed", "40"]) == 0
    return images


def _attack(tmp_path, images, *extra):
    out, report = tmp_path / "adv", tmp_path / "report.json"
    argv = [
        "attack",
        "--images", str(images),
        "--out", str(out),
        "--report", str(report),
        *FAST_ATTACK,
        *extra,
    ]
    return main(argv), out, report


# -----------------------------------------------------------------------------
# image files
# -----------------------------------------------------------------------------


def test_lossless_round_trip(tmp_path, rng):
    image = rng.integers(0, 256, (17, 23, 3)).astype(np.float64)
    save_image_lossless(image, tmp_path / "a.png")
    loaded = load_image(tmp_path / "a.png")
    assert loaded.dtype == np.float64
    np.testing.assert_array_equal(loaded, image)


@pytest.mark.parametrize("name", ["a.jpg", "a.jpeg", "a.webp", "a"])
def test_refuses_lossy_output(tmp_path, name):
    with pytest.raises(LossyFormatError):
        save_image_lossless(np.zeros((4, 4, 3)), tmp_path / name)


def test_refuses_unrepresentable_pixels(tmp_path):
    with pytest.raises(ContractViolation):
        save_image_lossless(np.full((4, 4, 3), 10.5), tmp_path / "a.png")
    with pytest.raises(ContractViolation):
        save_image_lossless(np.full((4, 4, 3), 300.0), tmp_path / "a.png")
    with pytest.raises(ContractViolation):
        save_image_lossless(np.zeros((4, 4)), tmp_path / "a.png")


def test_load_grayscale_as_rgb(tmp_path):
    Image.fromarray(np.full((5, 6), 77, dtype=np.uint8)).save(tmp_path / "g.png")
    loaded = load_image(tmp_path / "g.png")
    assert loaded.shape == (5, 6, 3)
    assert (loaded == 77).all()


def test_dump_constant_heatmap(tmp_path):
    dump_heatmap(np.full((4, 4), 3.5), tmp_path / "h.png")
    assert (np.asarray(Image.open(tmp_path / "h.png")) == 128).all()


def test_dump_heatmap_endpoints(tmp_path):
    dump_heatmap(np.array([[0.0, 10.0], [5.0, 2.0]]), tmp_path / "h.png")
    gray = np.asarray(Image.open(tmp_path / "h.png"))
    assert gray.dtype == np.uint8
    assert gray[0, 0] == 0 and gray[0, 1] == 255
    assert gray[1, 1] == 51


def test_dump_heatmap_scaling(tmp_path, rng):
    values = rng.normal(size=(10, 10))
    values[0, 0], values[9, 9] = -20.0, 20.0
    dump_heatmap(values, tmp_path / "h.png")
    gray = np.asarray(Image.open(tmp_path / "h.png")).astype(int)

    assert gray[0, 0] == 0 and gray[9, 9] == 255
    order = np.argsort(values.ravel(), kind="stable")
    assert (np.diff(gray.ravel()[order]) >= 0).all()


def test_dump_heatmap_rejects_non_finite(tmp_path):
    with pytest.raises(ContractViolation):
        dump_heatmap(np.array([[0.0, np.nan]]), tmp_path / "h.png")


# -----------------------------------------------------------------------------
# synth and attack commands
# -----------------------------------------------------------------------------


def test_synth_writes_images_and_ground_truth(synth_dir):
    truth = json.loads((synth_dir / "ground_truth.json").read_text())
    assert sorted(truth["boxes"]) == ["synth_000.png", "synth_001.png"]
    assert truth["seed"] == 40
    assert all(len(boxes) == 3 for boxes in truth["boxes"].values())
    assert load_image(synth_dir / "synth_000.png").shape == (128, 128, 3)


def test_attack_empty_directory(tmp_path):
    (tmp_path / "empty").mkdir()
    code, out, report = _attack(tmp_path, tmp_path / "empty")
    assert code == 2
    assert not report.exists()


def test_attack_invalid_config(tmp_path, synth_dir):
    code, _, report = _attack(tmp_path, synth_dir, "--grid-ratio", "1.5")
    assert code == 2
    assert not report.exists()


def test_attack_unknown_heatmap_layer(tmp_path, synth_dir, capsys):
    code, out, report = _attack(
        tmp_path, synth_dir, "--method", "heatmap", "--heatmap-layers", "conv9"
    )
    assert code == 2
    assert not report.exists()
    assert not out.exists()
    assert "heatmap_layers" in capsys.readouterr().err


def test_attack_job_error_is_skipped(tmp_path, synth_dir, monkeypatch):
    real_attack_image = runner.attack_image

    def failing_first(path, config):
        if path.name == "synth_000.png":
            raise ContractViolation("detector returned a malformed forward pass")
        return real_attack_image(path, config)

    monkeypatch.setattr(runner, "attack_image", failing_first)
    code, out, report_path = _attack(tmp_path, synth_dir, "--method", "heatmap")
    assert code == 1

    entries = {item["image"]: item for item in json.loads(report_path.read_text())["images"]}
    assert entries["synth_000.png"]["status"] == "skipped"
    assert "malformed" in entries["synth_000.png"]["message"]
    assert entries["synth_001.png"]["status"] == "ok"
    assert (out / "synth_001.png").exists()


def test_attack_writes_images_and_report(tmp_path, synth_dir):
    code, out, report_path = _attack(
        tmp_path, synth_dir, "--heatmap-dir", str(tmp_path / "maps")
    )
    assert code == 0

    report = json.loads(report_path.read_text())
    assert report["schema_version"] == 1
    assert report["method"] == "consensus"
    assert [entry["image"] for entry in report["images"]] == ["synth_000.png", "synth_001.png"]

    total = 0.0
    for entry in report["images"]:
        assert entry["status"] == "ok"
        assert [item["model"] for item in entry["scores"]] == ["toy:1", "toy:2"]
        total += sum(item["score"] for item in entry["scores"])

        clean = load_image(synth_dir / entry["image"])
        adv = load_image(out / entry["image"])
        changed = np.any(clean != adv, axis=2).sum()
        assert changed <= entry["mask_pixels"]
        assert all(item["pixels_changed"] == changed for item in entry["scores"])

    assert report["final_score"] == pytest.approx(total)
    assert sorted(p.name for p in (tmp_path / "maps").iterdir()) == [
        "synth_000_consensus.png",
        "synth_001_consensus.png",
    ]


def test_attack_skips_unreadable_image(tmp_path, synth_dir):
    (synth_dir / "broken.png").write_bytes(b"not an image")
    code, out, report_path = _attack(tmp_path, synth_dir, "--method", "heatmap")
    assert code == 1

    entries = {item["image"]: item for item in json.loads(report_path.read_text())["images"]}
    assert entries["broken.png"]["status"] == "skipped"
    assert entries["broken.png"]["scores"] == []
    assert entries["synth_000.png"]["status"] == "ok"
    assert not (out / "broken.png").exists()


def test_attack_skips_wrong_size_image(tmp_path, synth_dir):
    save_image_lossless(np.zeros((64, 64, 3)), synth_dir / "small.png")
    code, _, report_path = _attack(tmp_path, synth_dir, "--method", "heatmap")
    assert code == 1
    entries = {item["image"]: item for item in json.loads(report_path.read_text())["images"]}
    assert entries["small.png"]["status"] == "skipped"


@pytest.mark.slow
def test_attack_is_deterministic(tmp_path, synth_dir):
    outputs = list()
    for run in ("first", "second"):
        argv = [
            "attack",
            "--images", str(synth_dir),
            "--out", str(tmp_path / run),
            "--report", str(tmp_path / f"{run}.json"),
            "--workers", "2",
            "--grid-ratio", "0",
            "--grid-ratio", "0.5",
            *FAST_ATTACK,
        ]
        assert main(argv) == 0
        outputs.append(
            {p.name: p.read_bytes() for p in sorted((tmp_path / run).iterdir())}
        )

    assert outputs[0] == outputs[1]
    assert (tmp_path / "first.json").read_text() == (tmp_path / "second.json").read_text()
