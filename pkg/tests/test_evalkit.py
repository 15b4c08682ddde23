import itertools

import numpy as np
import pytest

from motionkit.errors import UndefinedRateError
from motionkit.evalkit import (
    JUDGE_METRIC_GUIDANCE,
    JudgeKind,
    Metric,
    Strength,
    Verdict,
    Winner,
    aggregate,
    append_verdict,
    build_judge_request,
    epe,
    preference_rate,
    read_verdicts,
    results_to_csv,
    results_to_json,
    strength_weight,
    track_bright_points,
    unwind_presented_winner,
)
from motionkit.overlay import compose_vlm_image
from motionkit.tracks import Track, TrackKind
from motionkit.volume import render_preview_video

from conftest import make_set, make_track, random_walk_track


def verdict(
    winner: Winner,
    strength: Strength,
    metric: Metric = Metric.OVERALL,
    judge: JudgeKind = JudgeKind.HUMAN,
    pair_id: str = "p0",
    category: str | None = None,
) -> Verdict:
    return Verdict(
        pair_id=pair_id,
        metric=metric,
        winner=winner,
        strength=strength,
        judge=judge,
        category=category,
    )


def tie(metric=Metric.OVERALL, judge=JudgeKind.HUMAN, category=None):
    return verdict(Winner.TIE, Strength.NONE, metric, judge, category=category)


def brute_force_rate(verdicts):
    """Independent re-summation with an explicit weight table.

    The share is reduced independently too: exact rationals rounded half to
    even onto the same 2^-30 grid the library publishes.
    """
    from fractions import Fraction

    weights = {"slight": 1, "moderate": 2, "strong": 3, "none": 0}
    s_a = s_b = 0
    for v in verdicts:
        w = weights[v.strength.value]
        if v.winner is Winner.A:
            s_a += w
        elif v.winner is Winner.B:
            s_b += w
    if s_a + s_b == 0:
        return s_a, s_b, None
    scaled = Fraction(100 * s_a * (1 << 30), s_a + s_b)
    floor_val = scaled.numerator // scaled.denominator
    remainder = scaled - floor_val
    if remainder > Fraction(1, 2) or (remainder == Fraction(1, 2) and floor_val % 2 == 1):
        floor_val += 1
    return s_a, s_b, floor_val / (1 << 30)


class TestStrengthWeight:
    def test_mapping(self):
        assert strength_weight(tie()) == 0
        assert strength_weight(verdict(Winner.A, Strength.STRONG)) == 3
        assert strength_weight(verdict(Winner.B, Strength.MODERATE)) == 2
        assert strength_weight(verdict(Winner.A, Strength.SLIGHT)) == 1

    def test_verdict_invariant(self):
        with pytest.raises(ValueError):
            verdict(Winner.TIE, Strength.STRONG)
        with pytest.raises(ValueError):
            verdict(Winner.A, Strength.NONE)


class TestPreferenceRate:
    def test_hand_fixture(self):
        verdicts = [
            verdict(Winner.A, Strength.STRONG),
            verdict(Winner.A, Strength.SLIGHT),
            verdict(Winner.B, Strength.MODERATE),
            tie(),
        ]
        result = preference_rate(verdicts)
        assert result.s_a == 4
        assert result.s_b == 2
        assert abs(result.rate_a_percent - 66.67) < 0.01
        assert result.n_ties == 1
        assert result.n_total == 4

    def test_sweep(self):
        result = preference_rate([verdict(Winner.A, Strength.STRONG)] * 3)
        assert result.rate_a_percent == 100.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        winners = [Winner.A, Winner.B, Winner.TIE]
        strengths = [Strength.SLIGHT, Strength.MODERATE, Strength.STRONG]
        for _ in range(500):
            verdicts = []
            for _ in range(int(rng.integers(1, 25))):
                w = winners[rng.integers(0, 3)]
                s = Strength.NONE if w is Winner.TIE else strengths[rng.integers(0, 3)]
                verdicts.append(verdict(w, s))
            expected = brute_force_rate(verdicts)
            if expected[2] is None:
                with pytest.raises(UndefinedRateError):
                    preference_rate(verdicts)
                continue
            result = preference_rate(verdicts)
            assert (result.s_a, result.s_b) == expected[:2]
            assert result.rate_a_percent == expected[2]

    def test_all_ties_error_carries_counts(self):
        with pytest.raises(UndefinedRateError) as err:
            preference_rate([tie(), tie(), tie()])
        assert err.value.n_ties == 3
        assert err.value.n_total == 3

    def test_single_metric_required(self):
        with pytest.raises(ValueError, match="single metric"):
            preference_rate(
                [verdict(Winner.A, Strength.SLIGHT), verdict(Winner.B, Strength.SLIGHT, Metric.PHOTO)]
            )

    def test_swap_symmetry_exact(self):
        rng = np.random.default_rng(1)
        strengths = [Strength.SLIGHT, Strength.MODERATE, Strength.STRONG]
        for _ in range(100):
            verdicts = []
            swapped = []
            for _ in range(int(rng.integers(2, 20))):
                w = [Winner.A, Winner.B, Winner.TIE][rng.integers(0, 3)]
                s = Strength.NONE if w is Winner.TIE else strengths[rng.integers(0, 3)]
                verdicts.append(verdict(w, s))
                flipped = {Winner.A: Winner.B, Winner.B: Winner.A, Winner.TIE: Winner.TIE}[w]
                swapped.append(verdict(flipped, s))
            try:
                rate = preference_rate(verdicts).rate_a_percent
            except UndefinedRateError:
                continue
            assert preference_rate(swapped).rate_a_percent == 100.0 - rate

    def test_permutation_duplication_tie_invariance(self):
        verdicts = [
            verdict(Winner.A, Strength.MODERATE),
            verdict(Winner.B, Strength.SLIGHT),
            verdict(Winner.A, Strength.STRONG),
        ]
        base = preference_rate(verdicts).rate_a_percent
        for perm in itertools.permutations(verdicts):
            assert preference_rate(list(perm)).rate_a_percent == base
        assert preference_rate(verdicts * 3).rate_a_percent == base
        assert preference_rate(verdicts + [tie()]).rate_a_percent == base


class TestAggregate:
    def test_grouping(self):
        verdicts = [
            verdict(Winner.A, Strength.STRONG, Metric.OBJECT_PROPERTY, JudgeKind.VLM),
            verdict(Winner.B, Strength.SLIGHT, Metric.OBJECT_PROPERTY, JudgeKind.VLM),
            verdict(Winner.A, Strength.SLIGHT, Metric.INTERACTION, JudgeKind.VLM),
            verdict(Winner.A, Strength.MODERATE, Metric.INTERACTION, JudgeKind.VLM),
            verdict(Winner.A, Strength.STRONG, Metric.OVERALL, JudgeKind.HUMAN),
            tie(Metric.OVERALL, JudgeKind.HUMAN),
        ]
        table = aggregate(verdicts)
        assert len(table) == 3
        assert table[(Metric.OBJECT_PROPERTY, JudgeKind.VLM, None)].rate_a_percent == 75.0
        assert table[(Metric.INTERACTION, JudgeKind.VLM, None)].rate_a_percent == 100.0
        assert table[(Metric.OVERALL, JudgeKind.HUMAN, None)].n_ties == 1

    def test_single_group_equals_ungrouped(self):
        verdicts = [
            verdict(Winner.A, Strength.STRONG),
            verdict(Winner.B, Strength.MODERATE),
        ]
        table = aggregate(verdicts)
        assert len(table) == 1
        assert table[(Metric.OVERALL, JudgeKind.HUMAN, None)] == preference_rate(verdicts)

    def test_all_tie_group_has_undefined_rate(self):
        table = aggregate([tie()])
        result = table[(Metric.OVERALL, JudgeKind.HUMAN, None)]
        assert result.rate_a_percent is None
        assert result.n_ties == 1

    def test_category_keys(self):
        verdicts = [
            verdict(Winner.A, Strength.SLIGHT, category="flow"),
            verdict(Winner.B, Strength.SLIGHT, category="collision"),
        ]
        table = aggregate(verdicts)
        assert set(key[2] for key in table) == {"flow", "collision"}

    def test_exports_deterministic(self):
        verdicts = [
            verdict(Winner.A, Strength.STRONG, Metric.OBJECT_PROPERTY, JudgeKind.VLM),
            verdict(Winner.B, Strength.SLIGHT, Metric.OVERALL, JudgeKind.HUMAN, category="flow"),
        ]
        table = aggregate(verdicts)
        assert results_to_json(table) == results_to_json(aggregate(verdicts))
        csv_bytes = results_to_csv(table)
        assert csv_bytes.startswith(b"metric,judge,category,")
        assert csv_bytes == results_to_csv(table)


class TestVerdictStore:
    def test_append_read_round_trip(self, tmp_path):
        path = tmp_path / "verdicts.jsonl"
        originals = [
            verdict(Winner.A, Strength.STRONG, Metric.INTERACTION, JudgeKind.VLM, "p1", "flow"),
            tie(Metric.OVERALL, JudgeKind.HUMAN, "collision"),
        ]
        for v in originals:
            append_verdict(path, v, session="s1", timestamp="2026-01-01T00:00:00+00:00")
        assert read_verdicts(path) == originals


class TestEpe:
    def test_identical_zero(self):
        traj = make_set([make_track(points=[(0.1, 0.2), (0.3, 0.4)])], width=100, height=100)
        assert epe(traj, traj) == 0.0

    def test_three_four_five(self):
        width = height = 100
        base = np.array([[0.2, 0.2], [0.4, 0.6]])
        offset = base + np.array([3 / width, 4 / height])
        a = make_set([make_track(points=base)], width=width, height=height)
        b = make_set([make_track(points=offset)], width=width, height=height)
        assert abs(epe(a, b) - 5.0) < 1e-9

    def test_matches_brute_force(self):
        rng = np.random.default_rng(3)
        width, height = 320, 240
        tracks_a = [make_track(f"t{i}", points=rng.uniform(0, 1, (6, 2))) for i in range(4)]
        tracks_b = [
            make_track(f"t{i}", points=np.clip(t.points + rng.normal(0, 0.01, t.points.shape), 0, 1))
            for i, t in enumerate(tracks_a)
        ]
        a = make_set(tracks_a, width=width, height=height)
        b = make_set(tracks_b, width=width, height=height)
        total = 0.0
        count = 0
        for ta, tb in zip(tracks_a, tracks_b):
            for pa, pb in zip(ta.points, tb.points):
                dx = (pa[0] - pb[0]) * width
                dy = (pa[1] - pb[1]) * height
                total += (dx * dx + dy * dy) ** 0.5
                count += 1
        assert abs(epe(a, b) - total / count) < 1e-12

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(4)
        sets = []
        for k in range(3):
            tracks = [make_track(f"t{i}", points=rng.uniform(0, 1, (5, 2))) for i in range(3)]
            sets.append(make_set(tracks, width=128, height=128))
        a, b, c = sets
        assert epe(a, b) == epe(b, a)
        assert epe(a, c) <= epe(a, b) + epe(b, c) + 1e-12

    def test_linear_scaling(self):
        rng = np.random.default_rng(5)
        pts_a = rng.uniform(0, 1, (7, 2))
        pts_b = rng.uniform(0, 1, (7, 2))
        small_a = make_set([make_track(points=pts_a)], width=100, height=100)
        small_b = make_set([make_track(points=pts_b)], width=100, height=100)
        big_a = make_set([make_track(points=pts_a)], width=300, height=300)
        big_b = make_set([make_track(points=pts_b)], width=300, height=300)
        assert abs(epe(big_a, big_b) - 3.0 * epe(small_a, small_b)) < 1e-9

    def test_shape_mismatch(self):
        a = make_set([make_track(points=[(0.1, 0.1), (0.2, 0.2)])])
        b = make_set([make_track(points=[(0.1, 0.1), (0.2, 0.2), (0.3, 0.3)])])
        with pytest.raises(ValueError):
            epe(a, b)
        c = make_set([make_track("other", points=[(0.1, 0.1), (0.2, 0.2)])])
        with pytest.raises(ValueError, match="id"):
            epe(a, c)


class TestBrightPointTracker:
    def test_static_disc(self):
        traj = make_set([make_track(points=[(0.5, 0.5)] * 6)], width=64, height=64)
        video = render_preview_video(traj, 64, 64, dot_radius=1.0)
        recovered = track_bright_points(video, [(32.0, 32.0)], search_radius=6.0)
        pts = recovered.tracks[0].points
        assert np.all(pts == pts[0])

    def test_moving_disc_low_epe(self):
        width = height = 96
        xs = np.linspace(20, 70, 10)
        track = make_track(points=np.column_stack([xs / width, np.full(10, 40.0 / height)]))
        traj = make_set([track], width=width, height=height)
        video = render_preview_video(traj, height, width, dot_radius=1.0)
        recovered = track_bright_points(
            video, [(20.0, 40.0)], search_radius=8.0, ids=[track.id], fps=traj.fps
        )
        assert epe(traj, recovered) < 1.0

    def test_two_separated_discs_do_not_cross(self):
        width = height = 96
        xs = np.linspace(20, 60, 8)
        top = make_track("a", points=np.column_stack([xs / width, np.full(8, 20.0 / height)]))
        bottom = make_track("b", points=np.column_stack([xs / width, np.full(8, 70.0 / height)]))
        traj = make_set([top, bottom], width=width, height=height)
        video = render_preview_video(traj, height, width, dot_radius=1.5)
        recovered = track_bright_points(
            video, [(20.0, 20.0), (20.0, 70.0)], search_radius=8.0, ids=["a", "b"]
        )
        ys_a = recovered.tracks[0].points[:, 1] * height
        ys_b = recovered.tracks[1].points[:, 1] * height
        assert np.all(ys_a < 40)
        assert np.all(ys_b > 50)

    def test_empty_video(self):
        with pytest.raises(ValueError):
            track_bright_points([], [(1.0, 1.0)])


class TestJudgeRequest:
    def _videos(self):
        rng = np.random.default_rng(6)
        video_a = [rng.integers(0, 255, (16, 16, 3), dtype=np.uint8) for _ in range(2)]
        video_b = [rng.integers(0, 255, (16, 16, 3), dtype=np.uint8) for _ in range(2)]
        return video_a, video_b

    def test_deterministic_for_seed(self):
        video_a, video_b = self._videos()
        context = np.zeros((16, 16, 3), dtype=np.uint8)
        traj = make_set([make_track(points=[(0.2, 0.2), (0.5, 0.5)])], width=16, height=16)
        overlay = compose_vlm_image(context, traj)
        first = build_judge_request(context, overlay, "p", video_a, video_b, Metric.OVERALL, seed=5)
        second = build_judge_request(context, overlay, "p", video_a, video_b, Metric.OVERALL, seed=5)
        assert first == second

    def test_swap_recorded_and_invertible(self):
        video_a, video_b = self._videos()
        context = np.zeros((16, 16, 3), dtype=np.uint8)
        overlay = b"png"
        seen = set()
        for seed in range(20):
            request = build_judge_request(
                context, overlay, "p", video_a, video_b, Metric.OVERALL, seed=seed
            )
            seen.add(request.swapped)
            from motionkit.overlay import encode_png

            expected_first = video_b if request.swapped else video_a
            assert request.video_first[0] == encode_png(expected_first[0])
            # Judge says the first video won; unwinding names the true candidate.
            unwound = unwind_presented_winner("first", request.swapped)
            assert unwound == (Winner.B if request.swapped else Winner.A)
        assert seen == {True, False}

    def test_metric_guidance_selected(self):
        video_a, video_b = self._videos()
        context = np.zeros((16, 16, 3), dtype=np.uint8)
        for metric in Metric:
            request = build_judge_request(
                context, b"png", "p", video_a, video_b, metric, seed=0
            )
            assert JUDGE_METRIC_GUIDANCE[metric] in request.instruction

    def test_missing_artifacts(self):
        video_a, video_b = self._videos()
        with pytest.raises(ValueError):
            build_judge_request(None, b"png", "p", video_a, video_b, Metric.OVERALL, 0)
        with pytest.raises(ValueError):
            build_judge_request(
                np.zeros((4, 4, 3), np.uint8), b"png", "p", [], video_b, Metric.OVERALL, 0
            )

    def test_unwind_validates(self):
        with pytest.raises(ValueError):
            unwind_presented_winner("left", False)
        assert unwind_presented_winner("tie", True) is Winner.TIE
        assert unwind_presented_winner("second", True) is Winner.A
