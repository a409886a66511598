import csv

import numpy as np
import pytest
import torch

from blinddenoise.models import BlindDenoiser
from blinddenoise.train import (TrainSpec, evaluate_denoising,
                                load_checkpoint, load_clean_images,
                                sample_batch, save_checkpoint, train)
from gen_corpus import clean_image
from blinddenoise.pngio import write_png

MICRO = dict(epochs=2, patches_per_epoch=24, patch_size=64, batch_size=4,
             base_channels=8, seed=7)


@pytest.fixture(scope="module")
def clean_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("clean")
    for k in range(4):
        write_png(clean_image(500 + k, 96), path / f"img{k}.png", depth=8)
    return path


def test_train_spec_schedule_contract():
    spec = TrainSpec()  # paper-scale defaults
    assert spec.epochs == 80 and spec.patch_size == 256
    assert spec.patches_per_epoch == 34000
    assert spec.lr_at_epoch(40) == 1e-3
    assert spec.lr_at_epoch(41) == 1e-4  # tenfold drop exactly here
    desk = TrainSpec.desk()
    assert (desk.epochs, desk.patches_per_epoch, desk.patch_size) == (20, 2000, 128)
    assert desk.lr_at_epoch(10) == 1e-3 and desk.lr_at_epoch(11) == 1e-4


def test_train_spec_validation():
    with pytest.raises(ValueError):
        TrainSpec(patch_size=130)  # not divisible by the downsampling factor
    with pytest.raises(ValueError):
        TrainSpec(epochs=0)
    with pytest.raises(ValueError):
        TrainSpec(noise_max=0.0)


def test_load_clean_images_errors_on_empty(tmp_path):
    with pytest.raises(ValueError):
        load_clean_images(tmp_path)


def test_sample_batch_contracts(clean_dir):
    spec = TrainSpec.desk(patch_size=64, batch_size=5)
    images = load_clean_images(clean_dir)
    gen = torch.Generator().manual_seed(3)
    noisy, clean, noise_truth = sample_batch(images, spec, gen)
    assert noisy.shape == clean.shape == noise_truth.shape == (5, 3, 64, 64)
    assert noisy.min() >= 0 and noisy.max() <= 1
    # the recorded map is constant per patch and inside (0, 50)/255
    for b in range(5):
        level = noise_truth[b]
        assert float(level.max() - level.min()) == 0.0
        assert 0.0 < float(level[0, 0, 0]) < 50.0 / 255.0


def test_sample_batch_pads_small_images():
    spec = TrainSpec.desk(patch_size=64, batch_size=2)
    small = [np.random.default_rng(0).random((40, 30, 3))]
    gen = torch.Generator().manual_seed(0)
    noisy, clean, _ = sample_batch(small, spec, gen)
    assert clean.shape == (2, 3, 64, 64)


def test_micro_training_runs_and_logs(clean_dir, tmp_path):
    ckpt = tmp_path / "micro.pt"
    model = train(clean_dir, ckpt, spec=TrainSpec.desk(**MICRO), quiet=True)
    assert ckpt.exists()
    with open(ckpt.with_suffix(".log.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert [r["epoch"] for r in rows] == ["1", "2"]
    for row in rows:
        assert np.isfinite(float(row["loss_total"]))
        parts = (float(row["loss_ssim"])
                 + 0.5 * float(row["loss_asymm"])
                 + 0.005 * float(row["loss_tv"]))
        assert abs(parts - float(row["loss_total"])) < 1e-4
    assert rows[0]["lr"] == "0.001" and rows[1]["lr"] == "0.0001"

    # checkpoint round trip reproduces identical held-out numbers
    images = load_clean_images(clean_dir)
    direct = evaluate_denoising(model, images, sigma255=25.0, seed=11)
    reloaded = evaluate_denoising(load_checkpoint(ckpt), images,
                                  sigma255=25.0, seed=11)
    assert direct == reloaded


def test_training_is_seed_deterministic(clean_dir, tmp_path):
    spec = TrainSpec.desk(epochs=1, patches_per_epoch=8, patch_size=64,
                          batch_size=4, base_channels=8, seed=13)
    a = train(clean_dir, tmp_path / "a.pt", spec=spec, quiet=True)
    b = train(clean_dir, tmp_path / "b.pt", spec=spec, quiet=True)
    for pa, pb in zip(a.state_dict().values(), b.state_dict().values()):
        assert torch.equal(pa, pb)


def test_checkpoint_rejects_foreign_payload(tmp_path):
    bad = tmp_path / "weights.pt"
    torch.save({"something": 1}, bad)
    with pytest.raises(ValueError):
        load_checkpoint(bad)


def test_save_load_checkpoint_round_trip(tmp_path):
    model = BlindDenoiser(base_channels=8)
    path = tmp_path / "ck.pt"
    save_checkpoint(model, TrainSpec.desk(base_channels=8), path)
    clone = load_checkpoint(path)
    for pa, pb in zip(model.state_dict().values(), clone.state_dict().values()):
        assert torch.equal(pa, pb)
