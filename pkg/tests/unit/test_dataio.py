"""Unit tests for sprite generation, curation and RGBA sequence I/O."""

import json

import numpy as np
import pytest

from src.amcm.boxes import extract_box_sequence, extract_bbox
from src.dataio.compositing import composite_over, premultiply, unpremultiply
from src.dataio.constants import FILTER_REPORT_FILENAME, FRAME_PATTERN, MANIFEST_FILENAME
from src.dataio.exceptions import ManifestError, SequenceLoadError, SpriteConfigError
from src.dataio.io import (
    load_rgba_sequence,
    read_manifest,
    save_rgba_sequence,
    write_manifest,
)
from src.dataio.schemas import ManifestEntry, RGBAVideo, SpriteParams
from src.dataio.service import DatasetBuilder, filter_dataset, load_split, video_seeds
from src.dataio.sprites import (
    all_captions,
    caption_for,
    caption_vocabulary,
    footprint_side,
    gen_sprite_video,
    sample_sprite_params,
)
from src.dataio.strategies import MinResolutionRule, WhiteAlphaRule, default_rules


def _sprite(**overrides) -> SpriteParams:
    base = dict(shape="circle", color="blue", motion="static", size=6, frames=4, height=16, width=16)
    base.update(overrides)
    return SpriteParams(**base)


class TestSpriteGenerator:
    """Unit tests for gen_sprite_video."""

    def test_static_sprite_frames_identical(self):
        """A static sprite should render the same frame every time."""
        video, boxes = gen_sprite_video(3, _sprite())
        for frame in video.frames[1:]:
            np.testing.assert_array_equal(frame, video.frames[0])
        assert (boxes == boxes[0]).all()

    def test_drift_advances_box(self, red_square_video):
        """Drifting right at 1 px/frame should move x_min by 1/(W-1) per normalised frame."""
        video, _ = red_square_video
        pixel, valid = extract_box_sequence(video.alpha)
        assert valid.all()
        np.testing.assert_array_equal(np.diff(pixel[:, 0]), 1)
        np.testing.assert_array_equal(np.diff(pixel[:, 1]), 0)

    def test_hard_edge_alpha_is_binary(self, red_square_video):
        """Without a soft edge alpha should only take the values 0 and 1."""
        video, _ = red_square_video
        assert set(np.unique(video.alpha)) <= {0.0, 1.0}

    def test_soft_edge_adds_half_alpha(self):
        """The soft ring should add alpha 0.5 pixels."""
        video, _ = gen_sprite_video(0, _sprite(soft_edge=True))
        assert 0.5 in set(np.unique(video.alpha))

    def test_geometry_boxes_match_extraction(self, micro_config):
        """Generator boxes should equal the boxes extracted from rendered alpha."""
        rng = np.random.default_rng(5)
        for seed in range(20):
            params = sample_sprite_params(rng, 16, 16, micro_config.frames)
            video, boxes = gen_sprite_video(seed, params)
            pixel, _ = extract_box_sequence(video.alpha)
            np.testing.assert_array_equal(pixel, boxes)

    def test_sprite_stays_in_frame(self):
        """Every frame of every sampled sprite should contain foreground."""
        rng = np.random.default_rng(11)
        for seed in range(30):
            video, _ = gen_sprite_video(seed, sample_sprite_params(rng, 16, 16, 4))
            assert all(extract_bbox(a) is not None for a in video.alpha)

    def test_generation_is_deterministic(self):
        """Same seed and params should give bit-identical videos."""
        params = _sprite(motion="drift", x0=None, y0=None)
        a, _ = gen_sprite_video(21, params)
        b, _ = gen_sprite_video(21, params)
        np.testing.assert_array_equal(a.frames, b.frames)

    def test_oversized_sprite_rejected(self):
        """A sprite larger than the frame should raise SpriteConfigError."""
        with pytest.raises(SpriteConfigError):
            gen_sprite_video(0, _sprite(size=20))

    def test_drift_leaving_frame_rejected(self):
        """A start position that would drift out of frame should be rejected."""
        with pytest.raises(SpriteConfigError):
            gen_sprite_video(0, _sprite(motion="drift", size=6, x0=9, y0=0))

    def test_rotation_footprint_grows(self):
        """Rotating sprites should reserve room for the diagonal."""
        assert footprint_side(_sprite(motion="rotate", size=6)) == 9

    def test_caption_template(self, red_square_params):
        """Captions should follow the colour/shape/motion template."""
        assert caption_for(red_square_params) == "a red square drifting right"
        assert caption_for(_sprite(motion="blink")) == "a blue circle blinking"

    def test_caption_vocabulary_closed(self):
        """Every caption token should be in the sorted vocabulary."""
        vocab = caption_vocabulary()
        assert vocab == sorted(set(vocab))
        for caption in all_captions():
            assert set(caption.split()) <= set(vocab)

    def test_unknown_colour_rejected(self):
        """Colours outside the palette should fail validation."""
        with pytest.raises(ValueError):
            _sprite(color="green")


class TestFilters:
    """Unit tests for curation rules."""

    @pytest.fixture
    def entry(self):
        return ManifestEntry(id="x", path="x", frames=1, height=16, width=16)

    def test_white_alpha_rejected(self, entry):
        """Entries with alpha == 1 everywhere should be rejected."""
        video = RGBAVideo(frames=np.ones((2, 16, 16, 4), np.float32))
        assert WhiteAlphaRule().rejects(entry, video)

    def test_transparent_video_kept(self, entry, red_square_video):
        """A sprite on a transparent field should pass every default rule."""
        video, _ = red_square_video
        assert not any(rule.rejects(entry, video) for rule in default_rules(16))

    def test_min_resolution_uses_shorter_side(self, entry):
        """A 99x200 video should fail a 100 px floor."""
        video = RGBAVideo(frames=np.zeros((1, 99, 200, 4), np.float32))
        assert MinResolutionRule(100).rejects(entry, video)
        assert not MinResolutionRule(99).rejects(entry, video)

    def test_filter_dataset_report(self, tmp_path):
        """Each constructed violation should be removed under its own rule, nothing else."""
        compliant = np.zeros((2, 104, 104, 4), np.float32)
        compliant[:, 10:30, 10:30] = 1.0
        videos = {
            "ok": compliant,
            "white": np.ones((2, 104, 104, 4), np.float32),
            "small": np.zeros((2, 99, 200, 4), np.float32),
        }
        entries = []
        for name, frames in videos.items():
            save_rgba_sequence(RGBAVideo(frames=frames), tmp_path / name)
            entries.append(
                ManifestEntry(
                    id=name, path=name, frames=2, height=frames.shape[1], width=frames.shape[2]
                )
            )
        entries.append(ManifestEntry(id="gone", path="gone", frames=2, height=104, width=104))

        kept, report = filter_dataset(entries, tmp_path, default_rules(100), threads=2)

        assert [e.id for e in kept] == ["ok"]
        assert report.total == 4
        assert report.kept == 1
        assert report.removed_ids["white-alpha"] == ["white"]
        assert report.removed_ids["min-resolution"] == ["small"]
        assert report.removed["unreadable"] == 1


class TestSequenceIO:
    """Unit tests for RGBA frame sequences and manifests."""

    def test_round_trip_within_quantisation(self, red_square_video, tmp_path, rng):
        """Saving and loading should change no channel by more than 1/255."""
        video, _ = red_square_video
        noisy = RGBAVideo(
            frames=np.clip(video.frames + rng.random(video.frames.shape) * 0.3, 0, 1).astype(np.float32),
            caption=video.caption,
            fps=12,
        )
        save_rgba_sequence(noisy, tmp_path / "v")
        loaded = load_rgba_sequence(tmp_path / "v")
        assert np.abs(loaded.frames - noisy.frames).max() <= 1.0 / 255.0 + 1e-7
        assert loaded.caption == noisy.caption
        assert loaded.fps == 12

    def test_frame_order_preserved(self, red_square_video, tmp_path):
        """Frames should come back in numbering order."""
        video, _ = red_square_video
        save_rgba_sequence(video, tmp_path / "v")
        loaded = load_rgba_sequence(tmp_path / "v")
        np.testing.assert_array_equal(loaded.alpha, video.alpha)

    def test_missing_frame_index(self, red_square_video, tmp_path):
        """A gap in the numbering should name the missing index."""
        video, _ = red_square_video
        save_rgba_sequence(video, tmp_path / "v")
        (tmp_path / "v" / FRAME_PATTERN.format(index=1)).unlink()
        with pytest.raises(SequenceLoadError, match="missing frame index 1"):
            load_rgba_sequence(tmp_path / "v")

    def test_mixed_frame_sizes(self, tmp_path):
        """Frames of different sizes should be rejected."""
        save_rgba_sequence(RGBAVideo(frames=np.zeros((1, 8, 8, 4), np.float32)), tmp_path / "v")
        other = tmp_path / "o"
        save_rgba_sequence(RGBAVideo(frames=np.zeros((1, 8, 12, 4), np.float32)), other)
        (other / FRAME_PATTERN.format(index=0)).rename(tmp_path / "v" / FRAME_PATTERN.format(index=1))
        with pytest.raises(SequenceLoadError):
            load_rgba_sequence(tmp_path / "v")

    def test_empty_directory(self, tmp_path):
        """A directory without frames should be rejected."""
        (tmp_path / "empty").mkdir()
        with pytest.raises(SequenceLoadError):
            load_rgba_sequence(tmp_path / "empty")

    def test_manifest_round_trip(self, tmp_path):
        """Entries should be read back in order."""
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        entries = [
            ManifestEntry(id="a", path="a", frames=1, height=8, width=8),
            ManifestEntry(id="b", path="b", frames=1, height=8, width=8, split="eval"),
        ]
        write_manifest(tmp_path / MANIFEST_FILENAME, entries)
        assert read_manifest(tmp_path / MANIFEST_FILENAME) == entries

    def test_manifest_duplicate_id(self, tmp_path):
        """Duplicate ids should be rejected."""
        entry = ManifestEntry(id="a", path="a", frames=1, height=8, width=8)
        write_manifest(tmp_path / MANIFEST_FILENAME, [entry, entry])
        with pytest.raises(ManifestError):
            read_manifest(tmp_path / MANIFEST_FILENAME, check_paths=False)

    def test_manifest_missing_directory(self, tmp_path):
        """Entries pointing at missing directories should be rejected."""
        write_manifest(
            tmp_path / MANIFEST_FILENAME,
            [ManifestEntry(id="a", path="nowhere", frames=1, height=8, width=8)],
        )
        with pytest.raises(ManifestError):
            read_manifest(tmp_path / MANIFEST_FILENAME)


class TestCompositing:
    """Unit tests for alpha conversions."""

    def test_premultiply_opaque_is_identity(self, rng):
        """alpha == 1 should leave colour unchanged."""
        image = rng.random((4, 4, 4))
        image[..., 3] = 1.0
        np.testing.assert_array_equal(premultiply(image), image)

    def test_premultiply_transparent_is_black(self, rng):
        """alpha == 0 should zero the colour."""
        image = rng.random((4, 4, 4))
        image[..., 3] = 0.0
        np.testing.assert_array_equal(premultiply(image)[..., :3], 0.0)

    def test_unpremultiply_inverts(self, rng):
        """The round trip should recover colour wherever alpha > 1/255."""
        image = rng.random((16, 16, 4))
        image[..., 3] = rng.uniform(2.0 / 255.0, 1.0, size=(16, 16))
        np.testing.assert_allclose(unpremultiply(premultiply(image)), image, atol=1e-6)

    def test_unpremultiply_zero_alpha(self):
        """Colour should be zero where alpha is zero."""
        image = np.array([[[0.3, 0.2, 0.1, 0.0]]])
        np.testing.assert_array_equal(unpremultiply(image)[..., :3], 0.0)

    def test_composite_over_half_alpha(self):
        """Half-transparent white over black should be mid grey."""
        image = np.array([[[1.0, 1.0, 1.0, 0.5]]])
        np.testing.assert_allclose(composite_over(image, (0.0, 0.0, 0.0)), [[[0.5, 0.5, 0.5]]])


class TestDatasetBuilder:
    """Unit tests for dataset generation and loading."""

    def test_build_and_load(self, micro_config, tmp_path):
        """Generated videos should all survive curation and load back with boxes."""
        data_dir = tmp_path / "data"
        kept = DatasetBuilder(micro_config, threads=2).build(data_dir)

        report = json.loads((data_dir / FILTER_REPORT_FILENAME).read_text())
        assert report["kept"] == report["total"] == micro_config.train_videos + micro_config.eval_videos
        assert len(kept) == report["kept"]

        train = load_split(data_dir, "train")
        assert train.frames.shape == (micro_config.train_videos, 4, 16, 16, 4)
        assert train.boxes.shape == (micro_config.train_videos, 4, 4)
        assert ((train.boxes >= 0) & (train.boxes <= 1)).all()
        assert len(load_split(data_dir, "eval", limit=1)) == 1

    def test_build_is_deterministic(self, micro_config, tmp_path):
        """Two builds with the same seed should write identical frames."""
        DatasetBuilder(micro_config).build(tmp_path / "a")
        DatasetBuilder(micro_config).build(tmp_path / "b")
        a = load_split(tmp_path / "a", "train")
        b = load_split(tmp_path / "b", "train")
        np.testing.assert_array_equal(a.frames, b.frames)
        assert a.captions == b.captions

    def test_video_seeds_distinct(self):
        """Per-video seeds should be reproducible and distinct."""
        seeds = video_seeds(0, 50)
        assert seeds == video_seeds(0, 50)
        assert len(set(seeds)) == 50

    def test_empty_split(self, tmp_path):
        """Loading a split with no entries should raise ManifestError."""
        write_manifest(tmp_path / MANIFEST_FILENAME, [])
        with pytest.raises(ManifestError):
            load_split(tmp_path, "train")
