"""Corpus scanning, deterministic splits, preprocessing, splice synthesis."""

import io
import json
import logging
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from elanet import ela
from elanet.dataset import (
    DatasetManifest,
    ImageRecord,
    Label,
    Split,
    bilinear_resize,
    preprocess,
    scan_corpus,
    split_manifest,
    synth_splice,
)
from elanet.errors import (
    EmptyCorpus,
    MissingDirectory,
    RectOutOfBounds,
    TooFewExamples,
)
from elanet.prng import make_rng

from conftest import natural_image, save_png

FIXTURES = Path(__file__).parent / "fixtures"


def fake_records(n_au: int, n_tp: int) -> list[tuple[str, Label]]:
    recs = [(f"au/{i:04d}.png", Label.AUTHENTIC) for i in range(n_au)]
    recs += [(f"tp/{i:04d}.png", Label.TAMPERED) for i in range(n_tp)]
    return recs


class TestScan:
    def test_layout_rule_and_order(self, tmp_path):
        (tmp_path / "Au").mkdir()
        (tmp_path / "Tp").mkdir()
        img = natural_image(0, 32, 32)
        for name in ("b.png", "a.png"):
            save_png(img, tmp_path / "Au" / name)
        save_png(img, tmp_path / "Tp" / "c.png")
        records = scan_corpus(tmp_path)
        assert [Path(p).name for p, _ in records] == ["a.png", "b.png", "c.png"]
        assert [int(lab) for _, lab in records] == [0, 0, 1]

    def test_missing_class_dir(self, tmp_path):
        (tmp_path / "Au").mkdir()
        with pytest.raises(MissingDirectory):
            scan_corpus(tmp_path)

    def test_undecodable_file_skipped_and_logged(self, tmp_path, caplog):
        (tmp_path / "Au").mkdir()
        (tmp_path / "Tp").mkdir()
        img = natural_image(0, 32, 32)
        for i in range(9):
            save_png(img, tmp_path / "Au" / f"{i}.png")
        (tmp_path / "Au" / "broken.png").write_bytes(b"\x89PNG\r\n\x1a\nxx")
        save_png(img, tmp_path / "Tp" / "t.png")
        with caplog.at_level(logging.WARNING, logger="elanet.dataset"):
            records = scan_corpus(tmp_path)
        assert len(records) == 10
        assert any("broken.png" in rec.message for rec in caplog.records)

    def test_empty_class(self, tmp_path):
        (tmp_path / "Au").mkdir()
        (tmp_path / "Tp").mkdir()
        save_png(natural_image(0, 32, 32), tmp_path / "Au" / "a.png")
        with pytest.raises(EmptyCorpus):
            scan_corpus(tmp_path)


class TestSplit:
    def test_stratified_counts_and_rerun_identical(self, tmp_path):
        manifest = split_manifest(fake_records(100, 100), (0.8, 0.2, 0.0), seed=42)
        for label in Label:
            train = [r for r in manifest.records if r.label is label and r.split is Split.TRAIN]
            val = [r for r in manifest.records if r.label is label and r.split is Split.VAL]
            assert (len(train), len(val)) == (80, 20)
        p1, p2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
        manifest.save(p1)
        split_manifest(fake_records(100, 100), (0.8, 0.2, 0.0), seed=42).save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_ratio_sum_validated(self):
        with pytest.raises(ValueError):
            split_manifest(fake_records(10, 10), (0.5, 0.5, 0.5), seed=1)

    def test_largest_remainder_counts(self):
        manifest = split_manifest(fake_records(10, 10), (0.8, 0.1, 0.1), seed=7)
        for label in Label:
            counts = [
                sum(1 for r in manifest.records if r.label is label and r.split is s)
                for s in (Split.TRAIN, Split.VAL, Split.TEST)
            ]
            assert counts == [8, 1, 1]

    def test_too_few_examples(self):
        with pytest.raises(TooFewExamples):
            split_manifest(fake_records(2, 10), (0.8, 0.2, 0.0), seed=1)

    def test_empty_train_rejected(self):
        # Ratios that starve the train split of a class must fail loudly.
        with pytest.raises(TooFewExamples):
            split_manifest(fake_records(3, 3), (0.05, 0.9, 0.05), seed=1)

    def test_shuffle_matches_published_sequence(self):
        fx = json.loads((FIXTURES / "shuffle_philox_seed42_n10.json").read_text())
        perm = make_rng(fx["seed"]).permutation(fx["n"]).tolist()
        assert perm == fx["permutation"]

    def test_stratification_proportions(self):
        # Unbalanced corpus: per-split class counts stay within one record
        # of the requested fractions.
        manifest = split_manifest(fake_records(75, 25), (0.6, 0.2, 0.2), seed=3)
        for label, n_class in ((Label.AUTHENTIC, 75), (Label.TAMPERED, 25)):
            for s, frac in ((Split.TRAIN, 0.6), (Split.VAL, 0.2), (Split.TEST, 0.2)):
                got = sum(1 for r in manifest.records if r.label is label and r.split is s)
                assert abs(got - frac * n_class) <= 1


class TestManifestIO:
    def test_roundtrip(self, tmp_path):
        manifest = split_manifest(
            fake_records(5, 5), (0.6, 0.2, 0.2), seed=9, quality=90,
            target_size=(64, 48), enhance=False,
        )
        path = tmp_path / "manifest.csv"
        manifest.save(path)
        text = path.read_text()
        assert text.startswith("# seed=9\n# quality=90\n# size=64x48\n# enhance=false\n")
        loaded = DatasetManifest.load(path)
        assert loaded.records == manifest.records
        assert (loaded.seed, loaded.quality, loaded.target_size, loaded.enhance) == (
            9, 90, (64, 48), False,
        )


class TestBilinearResize:
    def test_checkerboard_halves_to_midpoint(self):
        # 1px checkerboard at full range: every 2x2 block averages to 127.5.
        board = np.indices((64, 64)).sum(axis=0) % 2 * 255
        img = np.stack([board] * 3, axis=-1).astype(np.float64)
        out = bilinear_resize(img, (32, 32)) / 255.0
        assert np.all(np.abs(out - 0.5) <= 0.01)

    def test_matches_opencv_reference(self):
        cv2 = pytest.importorskip("cv2")
        rng = np.random.default_rng(12)
        img = rng.uniform(0, 255, (48, 40, 3))
        for size in [(20, 24), (80, 96), (40, 48)]:
            mine = bilinear_resize(img, size)
            ref = cv2.resize(img, size, interpolation=cv2.INTER_LINEAR)
            assert np.abs(mine - ref).max() < 1e-6

    def test_identity_size(self):
        img = np.arange(8 * 8 * 3, dtype=np.float64).reshape(8, 8, 3)
        assert np.allclose(bilinear_resize(img, (8, 8)), img)


class TestPreprocess:
    def manifest_for(self, tmp_path, **kw):
        return DatasetManifest(records=[], seed=1, **kw)

    def test_shape_and_range(self, tmp_path):
        path = save_png(natural_image(2, 96, 80), tmp_path / "img.png")
        manifest = DatasetManifest(records=[], quality=95, target_size=(32, 24), enhance=True)
        ex = preprocess(ImageRecord(str(path), Label.TAMPERED, Split.TRAIN), manifest)
        assert ex.data.shape == (24, 32, 3)
        assert ex.data.dtype == np.float32
        assert ex.data.min() >= 0.0 and ex.data.max() <= 1.0
        assert ex.label.tolist() == [0.0, 1.0] and ex.label.sum() == 1.0

    def test_zero_ela_gives_zero_tensor(self, tmp_path):
        path = save_png(np.full((64, 64, 3), 128, np.uint8), tmp_path / "gray.png")
        manifest = DatasetManifest(records=[], quality=95, target_size=(16, 16), enhance=True)
        ex = preprocess(ImageRecord(str(path), Label.AUTHENTIC, Split.TRAIN), manifest)
        assert not ex.data.any()
        assert ex.label.tolist() == [1.0, 0.0]

    def test_pure_function_of_inputs(self, tmp_path):
        path = save_png(natural_image(3, 64, 64), tmp_path / "img.png")
        manifest = DatasetManifest(records=[], quality=90, target_size=(32, 32), enhance=True)
        rec = ImageRecord(str(path), Label.AUTHENTIC, Split.TRAIN)
        a, b = preprocess(rec, manifest), preprocess(rec, manifest)
        assert np.array_equal(a.data, b.data)

    def test_enhance_flag_respected(self, tmp_path):
        path = save_png(natural_image(4, 64, 64), tmp_path / "img.png")
        on = DatasetManifest(records=[], quality=95, target_size=(32, 32), enhance=True)
        off = DatasetManifest(records=[], quality=95, target_size=(32, 32), enhance=False)
        rec = ImageRecord(str(path), Label.AUTHENTIC, Split.TRAIN)
        assert preprocess(rec, on).data.max() > preprocess(rec, off).data.max()


class TestSynthSplice:
    def test_degenerate_splice_equals_recompression(self):
        base = natural_image(5, 96, 96)
        out = synth_splice(base, (16, 16, 32, 32), donor_quality=95, base_quality=95,
                           seed=1, max_offset=0)
        ref = ela.recompress(base, 95)
        assert np.abs(out.astype(int) - ref.astype(int)).mean() <= 1.0
        assert np.array_equal(out, ref)

    def test_quality_gap_glows(self):
        # Independent per-pixel diff script: PIL round trip + region means.
        base = natural_image(6, 192, 192)
        rect = (48, 48, 64, 64)
        out = synth_splice(base, rect, donor_quality=60, base_quality=95, seed=2)

        buf = io.BytesIO()
        Image.fromarray(out).save(buf, format="JPEG", quality=95, subsampling=2)
        rec = np.asarray(Image.open(buf).convert("RGB"))
        diff = np.abs(out.astype(int) - rec.astype(int))
        x, y, w, h = rect
        mask = np.zeros(out.shape[:2], bool)
        mask[y : y + h, x : x + w] = True
        assert diff[mask].mean() >= 2.0 * diff[~mask].mean()

    def test_rect_out_of_bounds(self):
        base = natural_image(7, 64, 64)
        with pytest.raises(RectOutOfBounds):
            synth_splice(base, (40, 40, 32, 32), donor_quality=60, seed=0)

    def test_rect_too_small(self):
        base = natural_image(7, 64, 64)
        with pytest.raises(RectOutOfBounds):
            synth_splice(base, (0, 0, 8, 8), donor_quality=60, seed=0)

    def test_seeded_offset_is_deterministic(self):
        base = natural_image(8, 96, 96)
        a = synth_splice(base, (10, 10, 48, 48), donor_quality=70, seed=5)
        b = synth_splice(base, (10, 10, 48, 48), donor_quality=70, seed=5)
        assert np.array_equal(a, b)
