"""Unit tests for evaluation metrics, the chroma-key baseline and the ablation report."""

import json

import numpy as np
import pytest

from src.amcm.boxes import BoxSequence, normalize_boxes
from src.dataio.service import VideoDataset
from src.evalkit.baseline import chroma_distance, chroma_key, composite_green
from src.evalkit.constants import GAP_MARKER, METHOD_CHROMA_KEY, METHOD_WITH_AMCM, METHOD_WITHOUT_AMCM
from src.evalkit.exceptions import MetricShapeError
from src.evalkit.metrics import (
    alpha_iou,
    artifact_escape_ratio,
    boundary_ring,
    edge_fringe_score,
    psnr,
    temporal_flicker,
)
from src.evalkit.schemas import MethodRow, MetricsReport
from src.evalkit.service import AblationRunner, eval_seeds, format_table, score_video, write_report
from src.evalkit.strategies import AMCMGeneration, ChromaKeyBaseline, methods_for
from src.exceptions import ConfigError

from tests.fixtures.sample_sprites import square_mask


class TestAlphaIoU:
    """Unit tests for mask IoU."""

    def test_half_overlap(self):
        """Two 4x4 squares offset by half their width overlap with IoU 1/3."""
        a = square_mask(8, 8, 0, 0, 3, 3)
        b = square_mask(8, 8, 2, 0, 5, 3)
        assert alpha_iou(a, b) == pytest.approx(1.0 / 3.0)

    def test_identical(self):
        a = square_mask(8, 8, 1, 1, 4, 4)
        assert alpha_iou(a, a) == 1.0

    def test_disjoint(self):
        assert alpha_iou(square_mask(8, 8, 0, 0, 1, 1), square_mask(8, 8, 5, 5, 6, 6)) == 0.0

    def test_both_empty(self):
        """Two empty masks are a perfect match."""
        assert alpha_iou(np.zeros((4, 4)), np.zeros((4, 4))) == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(MetricShapeError):
            alpha_iou(np.zeros((4, 4)), np.zeros((4, 5)))


class TestArtifactEscapeRatio:
    """Unit tests for alpha mass outside the constraint box."""

    @pytest.fixture
    def alphas(self):
        return square_mask(8, 8, 0, 0, 3, 3)[None]

    @pytest.fixture
    def boxes(self):
        return normalize_boxes(np.array([[0, 0, 3, 2]]), 8, 8)

    def test_quarter_escapes(self, alphas, boxes):
        """One row of a 4x4 square outside the box is a quarter of the mass."""
        assert artifact_escape_ratio(alphas, boxes, dilation=0) == pytest.approx(0.25)

    def test_monotone_in_dilation(self, alphas, boxes):
        """Growing the box should never increase the ratio."""
        ratios = [artifact_escape_ratio(alphas, boxes, d) for d in range(4)]
        assert all(a >= b for a, b in zip(ratios, ratios[1:]))
        assert ratios[1] == 0.0

    def test_no_alpha(self, boxes):
        """A fully transparent video has nothing to escape."""
        assert artifact_escape_ratio(np.zeros((1, 8, 8)), boxes) == 0.0

    def test_invalid_frame_is_unconstrained(self, alphas):
        """A frame without a box should contribute no escape."""
        seq = BoxSequence(boxes=np.zeros((1, 4)), valid=np.zeros(1, dtype=bool))
        assert artifact_escape_ratio(alphas, seq, dilation=0) == 0.0

    def test_frame_count_mismatch(self, alphas):
        with pytest.raises(MetricShapeError):
            artifact_escape_ratio(alphas, BoxSequence.repeat((0, 0, 1, 1), 2))


class TestPixelMetrics:
    """Unit tests for PSNR, edge fringe and flicker."""

    def test_psnr_uniform_error(self):
        """A uniform 0.1 error is 20 dB."""
        gt = np.full((4, 4, 3), 0.5)
        assert psnr(gt + 0.1, gt) == pytest.approx(20.0)

    def test_psnr_cap(self):
        """Identical images report the 99 dB cap."""
        gt = np.full((4, 4, 3), 0.5)
        assert psnr(gt, gt) == 99.0

    def test_boundary_ring(self):
        """The ring of a 4x4 square is its 12 border pixels."""
        assert boundary_ring(square_mask(8, 8, 2, 2, 5, 5) > 0.5).sum() == 12

    def test_edge_fringe(self):
        """Error on the ring should be averaged over ring pixels only."""
        gt = square_mask(8, 8, 2, 2, 5, 5)
        pred = gt.copy()
        pred[2, 2] = 0.0
        assert edge_fringe_score(pred, gt) == pytest.approx(1.0 / 12.0)
        assert edge_fringe_score(np.zeros((4, 4)), np.zeros((4, 4))) == 0.0

    def test_flicker(self):
        """Alternating frames flicker by the mean absolute change."""
        alphas = np.stack([np.zeros((2, 2)), np.ones((2, 2)), np.zeros((2, 2))])
        assert temporal_flicker(alphas) == 1.0
        assert temporal_flicker(alphas[:1]) == 0.0


class TestChromaKey:
    """Unit tests for the green-screen baseline."""

    def test_composite_green(self):
        """Half-transparent white over green is (0.5, 1, 0.5)."""
        pixel = np.array([[[1.0, 1.0, 1.0, 0.5]]])
        np.testing.assert_allclose(composite_green(pixel)[0, 0], [0.5, 1.0, 0.5])

    def test_key_colours(self):
        """Pure green keys out and pure red stays."""
        rgb = np.array([[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]])
        out = chroma_key(rgb)
        assert out[0, 0, 3] == 0.0
        assert out[0, 1, 3] == 1.0
        np.testing.assert_array_equal(out[..., :3], rgb)

    def test_round_trip_on_sprite(self, red_square_video):
        """Compositing a hard-edged red sprite over green and keying it should recover the matte."""
        video, _ = red_square_video
        keyed = chroma_key(composite_green(video.frames))
        assert alpha_iou(keyed[..., 3], video.frames[..., 3]) == 1.0

    def test_feather_softens_edges(self):
        """Feathering should produce fractional alpha at the matte edge."""
        rgb = np.zeros((5, 5, 3))
        rgb[..., 1] = 1.0
        rgb[2, 2] = (1.0, 0.0, 0.0)
        alpha = chroma_key(rgb, feather=True)[..., 3]
        assert alpha[2, 2] == pytest.approx(0.2)
        assert alpha[2, 1] == pytest.approx(0.2)

    @pytest.mark.parametrize("tolerance", [0.0, 1.0, -0.1])
    def test_tolerance_range(self, tolerance):
        """Tolerances outside (0, 1) are configuration errors."""
        with pytest.raises(ConfigError):
            chroma_key(np.zeros((2, 2, 3)), tolerance)

    def test_chroma_distance(self):
        np.testing.assert_allclose(chroma_distance(np.array([0.0, 0.0, 0.0])), 1.0)


class TestScoring:
    """Unit tests for per-video scores."""

    def test_perfect_prediction(self, red_square_video):
        """Ground truth against itself scores IoU 1, capped PSNR and no escape."""
        video, pixel = red_square_video
        frames = video.frames
        boxes = normalize_boxes(pixel, frames.shape[1], frames.shape[2])
        scores = score_video("v0", frames, frames, boxes, dilation=1)
        assert scores.alpha_iou == 1.0
        assert scores.psnr == 99.0
        assert scores.aer == 0.0
        assert scores.edge_fringe == 0.0

    def test_seeds_deterministic(self):
        """Eval seeds depend only on the run seed."""
        assert eval_seeds(3, 5) == eval_seeds(3, 5)
        assert eval_seeds(3, 5) != eval_seeds(4, 5)


class TestAblationReport:
    """Unit tests for method selection and report output."""

    @pytest.fixture
    def report(self):
        return MetricsReport(
            dataset="eval",
            seeds=[11, 12],
            config_hash="0123456789abcdef",
            requested=[METHOD_WITH_AMCM, METHOD_WITHOUT_AMCM],
            rows=[
                MethodRow(method=METHOD_WITH_AMCM, missing=True, reason="no AMCM checkpoint"),
                MethodRow(
                    method=METHOD_WITHOUT_AMCM, videos=2, alpha_iou=0.5, psnr=21.0, aer=0.1,
                    edge_fringe=0.2, flicker=0.05,
                ),
            ],
        )

    @pytest.fixture
    def dataset(self, red_square_video):
        video, _ = red_square_video
        return VideoDataset(
            ids=["v0"],
            frames=video.frames[None],
            captions=["a red square drifting right"],
            boxes=np.zeros((1, video.frames.shape[0], 4)),
        )

    def test_methods_for(self):
        """Names should map to their strategies in order."""
        methods = methods_for([METHOD_CHROMA_KEY, METHOD_WITH_AMCM], 0.3)
        assert isinstance(methods[0], ChromaKeyBaseline)
        assert methods[0].tolerance == 0.3
        assert isinstance(methods[1], AMCMGeneration)

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            methods_for(["sharpen"], 0.35)

    def test_missing_methods(self, report):
        assert report.missing_methods == [METHOD_WITH_AMCM]

    def test_table_marks_gaps(self, report):
        """A missing method shows the gap marker in every metric column."""
        lines = format_table(report).splitlines()
        missing_line = next(line for line in lines if line.startswith(METHOD_WITH_AMCM))
        assert missing_line.split()[1:] == [GAP_MARKER] * 6
        assert "21.00" in next(line for line in lines if line.startswith(METHOD_WITHOUT_AMCM))

    def test_write_report(self, report, tmp_path):
        """One JSON record per method plus the text table."""
        jsonl, table = write_report(report, tmp_path / "metrics")
        records = [json.loads(line) for line in jsonl.read_text().splitlines()]
        assert [r["method"] for r in records] == [METHOD_WITH_AMCM, METHOD_WITHOUT_AMCM]
        assert records[0]["missing"] is True
        assert records[1]["seeds"] == [11, 12]
        assert GAP_MARKER in table.read_text()

    def test_runner_without_pipeline(self, dataset, micro_config):
        """Every method should be reported missing when no backbone exists."""
        runner = AblationRunner(None, micro_config, show_progress=False)
        report = runner.run(dataset, methods_for([METHOD_WITH_AMCM, METHOD_CHROMA_KEY], 0.35), "eval")
        assert all(row.missing for row in report.rows)
        assert report.missing_methods == [METHOD_WITH_AMCM, METHOD_CHROMA_KEY]
        assert len(report.seeds) == 1
