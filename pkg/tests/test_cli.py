import sys

import numpy as np
import pytest

from lowlight.cli import BridgeError, denoiser_bridge, main
from lowlight.fixtures import scene_image
from lowlight.image import load_png, save_png

PY = sys.executable

COPY_CMD = PY + """ -c "import shutil,sys; shutil.copy(sys.argv[1], sys.argv[2])" {in} {out}"""
FAIL_CMD = PY + """ -c "import sys; sys.exit(3)" {in} {out}"""


def _counting_cmd(tmp_path):
    script = tmp_path / "counting.py"
    script.write_text(
        "import shutil, sys, pathlib\n"
        f"marks = pathlib.Path({str(tmp_path)!r}) / 'marks'\n"
        "marks.mkdir(exist_ok=True)\n"
        "(marks / str(len(list(marks.iterdir())))).touch()\n"
        "shutil.copy(sys.argv[1], sys.argv[2])\n")
    return f"{PY} {script} {{in}} {{out}}", tmp_path / "marks"


def _shrinking_cmd(tmp_path):
    script = tmp_path / "shrink.py"
    script.write_text(
        "import sys\n"
        "from lowlight.image import load_png, save_png\n"
        "img = load_png(sys.argv[1])\n"
        "save_png(img[:-1, :, :], sys.argv[2], depth=16)\n")
    return f"{PY} {script} {{in}} {{out}}"


@pytest.fixture()
def small_png(tmp_path):
    path = tmp_path / "in.png"
    save_png(scene_image(1000, 32), path, depth=8)
    return path


def test_bridge_identity_round_trip():
    rng = np.random.default_rng(0)
    img = rng.random((6, 7, 3))
    out = denoiser_bridge(img, COPY_CMD)
    assert out.shape == img.shape
    assert np.abs(out - img).max() <= 0.5 / 65535 + 1e-12


def test_bridge_child_failure_carries_status():
    img = np.zeros((4, 4, 3))
    with pytest.raises(BridgeError) as err:
        denoiser_bridge(img, FAIL_CMD)
    assert err.value.status == 3


def test_bridge_dimension_mismatch(tmp_path):
    img = np.full((5, 5, 3), 0.5)
    with pytest.raises(BridgeError, match="dimensions"):
        denoiser_bridge(img, _shrinking_cmd(tmp_path))


def test_bridge_requires_placeholders():
    with pytest.raises(BridgeError, match="placeholders"):
        denoiser_bridge(np.zeros((2, 2, 3)), "true")


def test_bridge_timeout_enforced(tmp_path):
    slow = PY + """ -c "import time,sys; time.sleep(30)" {in} {out}"""
    with pytest.raises(BridgeError, match="timed out"):
        denoiser_bridge(np.zeros((3, 3, 3)), slow, timeout=1.0)


def test_enhance_bridge_timeout_flag(small_png, tmp_path):
    slow = PY + """ -c "import time,sys; time.sleep(30)" {in} {out}"""
    status = main(["enhance", "--denoise-mode", "post", "--denoiser-cmd", slow,
                   "--bridge-timeout", "1", str(small_png),
                   str(tmp_path / "o.png")])
    assert status == 2


def test_enhance_single_image(small_png, tmp_path):
    out = tmp_path / "out.png"
    assert main(["enhance", str(small_png), str(out)]) == 0
    img = load_png(out)
    assert img.shape == (32, 32, 3)


def test_enhance_dump_intermediates(small_png, tmp_path):
    out = tmp_path / "out.png"
    dump = tmp_path / "inter"
    assert main(["enhance", "--dump-intermediates", str(dump),
                 str(small_png), str(out)]) == 0
    for name in ("L_coarse.pfm", "L_refined.pfm", "L_gamma.pfm",
                 "R.pfm", "R_boost.pfm", "objective.txt"):
        assert (dump / name).exists(), name
    values = [float(line) for line in (dump / "objective.txt").read_text().split()]
    assert len(values) >= 1


def test_enhance_post_mode_invokes_bridge_once(small_png, tmp_path):
    cmd, marks = _counting_cmd(tmp_path)
    out = tmp_path / "out.png"
    assert main(["enhance", "--denoise-mode", "post",
                 "--denoiser-cmd", cmd, str(small_png), str(out)]) == 0
    assert len(list(marks.iterdir())) == 1


def test_enhance_pre_and_reflection_modes(small_png, tmp_path):
    for mode in ("pre", "reflection"):
        cmd, marks = _counting_cmd(tmp_path)
        out = tmp_path / f"out_{mode}.png"
        assert main(["enhance", "--denoise-mode", mode,
                     "--denoiser-cmd", cmd, str(small_png), str(out)]) == 0
        assert len(list(marks.iterdir())) == 1
        for mark in marks.iterdir():
            mark.unlink()
        marks.rmdir()


def test_enhance_mode_none_never_invokes_bridge(small_png, tmp_path):
    cmd, marks = _counting_cmd(tmp_path)
    out = tmp_path / "out.png"
    assert main(["enhance", "--denoise-mode", "none",
                 "--denoiser-cmd", cmd, str(small_png), str(out)]) == 0
    assert not marks.exists()


def test_enhance_bridge_failure_exits_runtime(small_png, tmp_path):
    out = tmp_path / "out.png"
    status = main(["enhance", "--denoise-mode", "post",
                   "--denoiser-cmd", FAIL_CMD, str(small_png), str(out)])
    assert status == 2


def test_enhance_batch_writes_manifest_with_config(tmp_path):
    inputs = []
    for k in range(2):
        p = tmp_path / f"in{k}.png"
        save_png(scene_image(1000 + k, 24), p, depth=8)
        inputs.append(str(p))
    out_dir = tmp_path / "out"
    assert main(["enhance", "--out-dir", str(out_dir), *inputs]) == 0
    manifest = (out_dir / "manifest.txt").read_text()
    assert "# config: lambda1=3.0" in manifest
    assert "# config: denoise_mode=post" in manifest
    assert len([l for l in manifest.splitlines() if l and not l.startswith("#")]) == 2
    for k in range(2):
        assert (out_dir / f"in{k}.png").exists()


def test_enhance_batch_jobs_match_sequential(tmp_path):
    inputs = []
    for k in range(3):
        p = tmp_path / f"in{k}.png"
        save_png(scene_image(1010 + k, 24), p, depth=8)
        inputs.append(str(p))
    seq_dir, par_dir = tmp_path / "seq", tmp_path / "par"
    assert main(["enhance", "--out-dir", str(seq_dir), *inputs]) == 0
    assert main(["enhance", "--jobs", "3", "--out-dir", str(par_dir), *inputs]) == 0
    for k in range(3):
        a = (seq_dir / f"in{k}.png").read_bytes()
        b = (par_dir / f"in{k}.png").read_bytes()
        assert a == b


def test_enhance_usage_errors(small_png, tmp_path):
    assert main(["enhance", str(small_png)]) == 1          # missing output
    assert main(["enhance", "--denoise-mode", "maybe",
                 str(small_png), str(tmp_path / "o.png")]) == 1
    assert main(["nonsense"]) == 1


def test_enhance_missing_input_is_runtime_error(tmp_path):
    status = main(["enhance", str(tmp_path / "ghost.png"), str(tmp_path / "o.png")])
    assert status == 2


def test_config_file_and_flag_precedence(small_png, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kappa = 2.0\ngamma0 = 1.5\n# comment line\n")
    out1 = tmp_path / "a.png"
    out2 = tmp_path / "b.png"
    out3 = tmp_path / "c.png"
    assert main(["enhance", "--config", str(cfg), str(small_png), str(out1)]) == 0
    # flag overrides the file value
    assert main(["enhance", "--config", str(cfg), "--kappa", "1.0",
                 str(small_png), str(out2)]) == 0
    assert main(["enhance", "--kappa", "2.0", "--gamma0", "1.5",
                 str(small_png), str(out3)]) == 0
    a, b, c = load_png(out1), load_png(out2), load_png(out3)
    assert np.array_equal(a, c)
    assert not np.array_equal(a, b)


def test_config_file_unknown_key_is_usage_error(small_png, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("warp_speed=9\n")
    assert main(["enhance", "--config", str(cfg),
                 str(small_png), str(tmp_path / "o.png")]) == 1


def test_degrade_single_deterministic(tmp_path):
    src = tmp_path / "clean.png"
    save_png(scene_image(1002, 32), src, depth=8)
    out1 = tmp_path / "d1.png"
    out2 = tmp_path / "d2.png"
    args = ["degrade", "--darken", "0.1", "--noise-var", "25", "--seed", "7"]
    assert main(args + [str(src), str(out1)]) == 0
    assert main(args + [str(src), str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_degrade_corpus_mode_manifest(tmp_path):
    src_dir = tmp_path / "clean"
    src_dir.mkdir()
    for k in range(3):
        save_png(scene_image(1000 + k, 24), src_dir / f"img{k}.png", depth=8)
    out_dir = tmp_path / "low"
    assert main(["degrade", "--darken", "0.2", "--noise-var", "5",
                 str(src_dir), str(out_dir)]) == 0
    manifest = (out_dir / "manifest.txt").read_text()
    assert manifest.startswith("# config: darken=0.2")
    rows = [l for l in manifest.splitlines() if not l.startswith("#")]
    assert len(rows) == 3
    for row in rows:
        parts = row.split("\t")
        assert len(parts) == 4


def test_degrade_empty_directory_is_usage_error(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["degrade", str(empty), str(tmp_path / "out")]) == 1


def test_evaluate_end_to_end(tmp_path, capsys):
    src_dir = tmp_path / "clean"
    src_dir.mkdir()
    for k in range(2):
        save_png(scene_image(1000 + k, 24), src_dir / f"img{k}.png", depth=8)
    low_dir = tmp_path / "low"
    assert main(["degrade", str(src_dir), str(low_dir)]) == 0
    csv_path = tmp_path / "r.csv"
    status = main(["evaluate", "--manifest", str(low_dir / "manifest.txt"),
                   "--metrics", "psnr,ssim,loe", "--out", str(csv_path)])
    assert status == 0
    table = capsys.readouterr().out
    assert "mean±std" in table
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "id,psnr_db,ssim,loe"
    assert len(lines) == 1 + 2 + 2


def test_evaluate_empty_manifest_usage_error(tmp_path):
    manifest = tmp_path / "empty.txt"
    manifest.write_text("# nothing here\n")
    assert main(["evaluate", "--manifest", str(manifest)]) == 1
    assert main(["evaluate", "--manifest", str(tmp_path / "missing.txt")]) == 1
    assert main(["evaluate", "--manifest", str(manifest),
                 "--metrics", "niqe"]) == 1


def test_evaluate_missing_row_file_is_runtime_error(tmp_path):
    ref = tmp_path / "ref.png"
    save_png(scene_image(1000, 16), ref, depth=8)
    manifest = tmp_path / "m.txt"
    manifest.write_text(f"gone\t{tmp_path}/gone.png\t{ref}\n")
    assert main(["evaluate", "--manifest", str(manifest)]) == 2
