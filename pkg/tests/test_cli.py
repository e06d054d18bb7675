"""CLI: subcommand behavior, exit codes, file formats, idempotence."""

import numpy as np
import pytest
from PIL import Image

from elanet import dataset, ela, metrics
from elanet.cli import main
from elanet.nn import init_params, load_checkpoint

from conftest import natural_image, save_png


def run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture
def jpeg_file(tmp_path):
    path = tmp_path / "photo.jpg"
    path.write_bytes(ela.encode_jpeg(natural_image(1, 96, 96), 90))
    return path


class TestElaCommand:
    def test_writes_png_and_sidecar(self, tmp_path, jpeg_file, capsys):
        out = tmp_path / "map.png"
        assert run("ela", jpeg_file, "--quality", 95, "--out", out) == 0
        assert out.exists() and out.with_name("map.png.txt").exists()
        assert "max_error=" in capsys.readouterr().out

    def test_missing_file_exits_2_without_output(self, tmp_path, capsys):
        out = tmp_path / "map.png"
        assert run("ela", tmp_path / "absent.jpg", "--out", out) == 2
        assert not out.exists()
        assert "error" in capsys.readouterr().err

    def test_output_matches_library_pipeline(self, tmp_path, jpeg_file):
        out = tmp_path / "map.png"
        assert run("ela", jpeg_file, "--out", out) == 0
        reread = np.asarray(Image.open(out))
        expected = ela.enhance_ela(ela.compute_ela(ela.load_image(jpeg_file), 95))
        assert np.array_equal(reread, expected)

    def test_bad_quality_exits_1(self, tmp_path, jpeg_file):
        assert run("ela", jpeg_file, "--quality", 0, "--out", tmp_path / "m.png") == 1


class TestScanSplit:
    def test_scan_listing(self, tiny_corpus, tmp_path, capsys):
        out = tmp_path / "scan.csv"
        assert run("scan", tiny_corpus, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "path,label"
        assert len(lines) == 9
        assert "8 records" in capsys.readouterr().out

    def test_split_idempotent(self, tiny_corpus, tmp_path):
        scan_csv = tmp_path / "scan.csv"
        run("scan", tiny_corpus, "--out", scan_csv)
        m1, m2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
        args = ("split", scan_csv, "--ratios", "0.75,0.25,0.0", "--seed", 7, "--size", "48x48")
        assert run(*args, "--out", m1) == 0
        assert run(*args, "--out", m2) == 0
        assert m1.read_bytes() == m2.read_bytes()

    def test_split_bad_ratios_exit_1(self, tiny_corpus, tmp_path):
        scan_csv = tmp_path / "scan.csv"
        run("scan", tiny_corpus, "--out", scan_csv)
        assert run("split", scan_csv, "--ratios", "0.5,0.5,0.5",
                   "--out", tmp_path / "m.csv") == 1

    def test_scan_missing_root_exit_2(self, tmp_path):
        assert run("scan", tmp_path / "nowhere", "--out", tmp_path / "s.csv") == 2


@pytest.fixture
def manifest_file(tiny_corpus, tmp_path):
    scan_csv = tmp_path / "scan.csv"
    run("scan", tiny_corpus, "--out", scan_csv)
    manifest = tmp_path / "manifest.csv"
    run("split", scan_csv, "--ratios", "0.75,0.25,0.0", "--seed", 7,
        "--size", "48x48", "--out", manifest)
    return manifest


class TestTrainPredictEvaluate:
    def test_zero_epochs_writes_seeded_init(self, manifest_file, tmp_path):
        ckpt = tmp_path / "model.ckpt"
        history = tmp_path / "history.csv"
        assert run("train", manifest_file, "--epochs", 0, "--seed", 11,
                   "--out", ckpt, "--history", history) == 0
        assert history.read_text() == "epoch,train_loss,train_acc,val_loss,val_acc\n"
        loaded = load_checkpoint(ckpt)
        reference = init_params(11)
        assert all(np.array_equal(loaded[k], reference[k]) for k in loaded)

    def test_full_pipeline(self, manifest_file, tmp_path, capsys):
        ckpt = tmp_path / "model.ckpt"
        history = tmp_path / "history.csv"
        assert run("train", manifest_file, "--epochs", 1, "--batch", 4, "--seed", 3,
                   "--deterministic", "--out", ckpt, "--history", history) == 0
        assert len(history.read_text().splitlines()) == 2

        preds_csv = tmp_path / "preds.csv"
        assert run("predict", manifest_file, "--checkpoint", ckpt,
                   "--split", "val", "--out", preds_csv) == 0
        preds = metrics.PredictionSet.load(preds_csv)
        assert len(preds) == 2  # 4 per class * 0.25 val

        report = tmp_path / "report.txt"
        report_csv = tmp_path / "report.csv"
        assert run("evaluate", preds_csv, "--out", report, "--csv", report_csv) == 0
        text = report.read_text()
        assert all(f"{k}=" in text for k in
                   ("accuracy", "precision", "recall", "f_measure", "auc", "mean_bce"))
        assert report_csv.read_text().splitlines()[0] == "metric,value"

        roc_csv = tmp_path / "roc.csv"
        assert run("roc", preds_csv, "--out", roc_csv) == 0
        assert roc_csv.read_text().splitlines()[0] == "threshold,fpr,tpr"

    def test_evaluate_reference_pair_report(self, tmp_path):
        # Confusion counts chosen so precision/recall land within 5e-5 of
        # the published vgg19 pair (0.9825, 0.7934); the printed F1 then
        # starts 0.8779.
        tp, fp, fn, tn = 1909, 34, 497, 1000
        rows = ["path,label,p_authentic,p_tampered"]
        for i, (label, p_t) in enumerate(
            [(1, 0.9)] * tp + [(0, 0.9)] * fp + [(1, 0.1)] * fn + [(0, 0.1)] * tn
        ):
            rows.append(f"r{i}.png,{label},{1 - p_t:.1f},{p_t:.1f}")
        preds_csv = tmp_path / "preds.csv"
        preds_csv.write_text("\n".join(rows) + "\n")
        report = tmp_path / "report.txt"
        assert run("evaluate", preds_csv, "--out", report) == 0
        assert "f_measure=0.8779" in report.read_text()

    def test_evaluate_missing_file_exit_2(self, tmp_path):
        assert run("evaluate", tmp_path / "none.csv", "--out", tmp_path / "r.txt") == 2

    def test_diverged_training_exit_3(self, manifest_file, tmp_path, capsys):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            code = run("train", manifest_file, "--epochs", 5, "--lr", "1e18",
                       "--out", tmp_path / "m.ckpt", "--history", tmp_path / "h.csv")
        assert code == 3
        assert "diverged" in capsys.readouterr().err
        assert not (tmp_path / "m.ckpt").exists()


class TestSynthCommand:
    def test_writes_lossless_splice(self, tmp_path):
        base = save_png(natural_image(4, 96, 96), tmp_path / "base.png")
        out = tmp_path / "spliced.png"
        assert run("synth", base, "--rect", "16,16,32,32", "--donor-quality", 60,
                   "--seed", 5, "--out", out) == 0
        arr = np.asarray(Image.open(out))
        expected = dataset.synth_splice(
            ela.load_image(base), (16, 16, 32, 32), donor_quality=60,
            base_quality=95, seed=5,
        )
        assert np.array_equal(arr, expected)

    def test_rect_out_of_bounds_exit_2(self, tmp_path):
        base = save_png(natural_image(4, 64, 64), tmp_path / "base.png")
        assert run("synth", base, "--rect", "50,50,32,32", "--donor-quality", 60,
                   "--out", tmp_path / "s.png") == 2


class TestConfigFile:
    def test_config_supplies_defaults_cli_wins(self, tmp_path, jpeg_file):
        config = tmp_path / "settings.cfg"
        config.write_text("quality=50\n")
        out1 = tmp_path / "a.png"
        out2 = tmp_path / "b.png"
        # config only
        assert run("ela", jpeg_file, "--config", config, "--out", out1) == 0
        assert "quality=50" in out1.with_name("a.png.txt").read_text()
        # CLI flag overrides config
        assert run("ela", jpeg_file, "--config", config, "--quality", 80, "--out", out2) == 0
        assert "quality=80" in out2.with_name("b.png.txt").read_text()

    def test_unknown_command_usage_error(self):
        assert run("frobnicate") == 1
