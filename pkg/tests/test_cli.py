import numpy as np

from riskfl.data import write_idx
from riskfl.experiment.cli import main

FAST = ["--set", "n_samples=400", "--set", "n_devices=4", "--set", "rounds=3", "--set", "n_classes=4",
        "--set", "n_features=6", "--set", "eta=0.05"]


def test_run_writes_csv_and_svg(tmp_path, capsys):
    code = main(["run", "--variant", "alg1", "--delta", "0.6", "--seed", "3", "--out", str(tmp_path), "--svg", *FAST])
    assert code == 0
    assert (tmp_path / "alg1.csv").exists()
    assert (tmp_path / "alg1_accuracy.svg").exists() and (tmp_path / "alg1_regret.svg").exists()
    assert "seed = 3" in (tmp_path / "config.txt").read_text()
    assert "alg1: final accuracy" in capsys.readouterr().out


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("variant = ucb\nseed = 1\n", encoding="utf-8")
    assert main(["run", "--config", str(cfg), "--seed", "2", "--out", str(tmp_path), *FAST]) == 0
    assert (tmp_path / "ucb.csv").exists()
    assert "seed = 2" in (tmp_path / "config.txt").read_text()


def test_sweep_and_baselines(tmp_path):
    assert main(["sweep", "--out", str(tmp_path), "--svg", "--set", "deltas=0.6,0.99", *FAST]) == 0
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 3
    assert (tmp_path / "sweep_links.svg").exists()
    assert main(["baselines", "--out", str(tmp_path), "--svg", *FAST]) == 0
    for v in ("alg1", "ucb", "fedsgd_full", "fedsgd_partial", "centralized"):
        assert (tmp_path / f"{v}.csv").exists()
    assert (tmp_path / "baselines_accuracy.svg").exists()


def test_config_errors_exit_1(tmp_path, capsys):
    assert main(["run", "--delta", "2", "--out", str(tmp_path)]) == 1
    assert main(["run", "--set", "bogus=1", "--out", str(tmp_path)]) == 1
    assert main(["run", "--set", "rounds", "--out", str(tmp_path)]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.txt"), "--out", str(tmp_path)]) == 1
    assert "configuration error" in capsys.readouterr().err


def test_bad_idx_exit_1(tmp_path):
    img, lab = tmp_path / "i", tmp_path / "l"
    write_idx(np.zeros((4, 2, 2), np.uint8), np.zeros(4, np.uint8), img, lab)
    img.write_bytes(b"\x00\x00\x08\x04" + img.read_bytes()[4:])
    assert main(["run", "--mnist-images", str(img), "--mnist-labels", str(lab), "--out", str(tmp_path)]) == 1


def test_mnist_mode_runs(tmp_path):
    rng = np.random.default_rng(0)
    labels = np.arange(200) % 10
    images = (rng.random((200, 4, 4)) * 60).astype(np.uint8)
    images[np.arange(200), labels % 4, labels // 4] = 255
    img, lab = tmp_path / "i", tmp_path / "l"
    write_idx(images, labels, img, lab)
    args = ["run", "--variant", "fedsgd_full", "--mnist-images", str(img), "--mnist-labels", str(lab),
            "--out", str(tmp_path), "--set", "n_devices=4", "--set", "rounds=2"]
    assert main(args) == 0


def test_unwritable_output_exit_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--out", str(blocker / "sub"), *FAST]) == 2


def test_numeric_failure_exit_2(tmp_path, monkeypatch, capsys):
    from riskfl.errors import NumericError
    from riskfl.experiment import runner

    def boom(*args, **kwargs):
        raise NumericError("model weights contain non-finite entries")

    monkeypatch.setattr(runner, "local_train", boom)
    assert main(["run", "--variant", "fedsgd_full", "--out", str(tmp_path), *FAST]) == 2
    assert "round 1" in capsys.readouterr().err
