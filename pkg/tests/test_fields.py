import math

import numpy as np
import pytest

from conftest import make_chart, random_metric_field, random_tangent_field
from metricspace import (
    DiscretePath,
    MetricField,
    OptimizerOptions,
    QuadChart,
    TangentField,
    check_lipschitz_sqrtvol,
    check_theta_bound,
    check_theta_reference_independence,
    conformal_theta_oracle,
    eps_disc,
    l2_inner,
    l2_norm,
    path_energy,
    path_length,
    spd,
    theta_Y,
    theta_Y_details,
    volume,
)
from metricspace.errors import DomainError, StructuralError
from metricspace.generate import gen_path

FAST_OPTS = OptimizerOptions(K=12, max_iters=200)


def one_point_chart(n=2):
    return make_chart(n, 1, equal_weights=True)


def conformal_field_path(chart, f0, f1, segments):
    fs = np.linspace(f0, f1, segments + 1)
    eye = np.broadcast_to(np.eye(chart.n), (chart.size, chart.n, chart.n))
    return DiscretePath(chart, fs[:, None, None, None] * eye)


class TestL2Inner:
    def test_single_point_identity(self):
        chart = one_point_chart()
        g = MetricField(chart, np.eye(2)[None])
        h = TangentField(chart, np.eye(2)[None])
        assert l2_inner(g, h, h) == pytest.approx(2.0)

    def test_zero_field(self):
        chart = one_point_chart()
        g = MetricField(chart, np.eye(2)[None])
        assert l2_inner(g, TangentField.zero(chart), TangentField.zero(chart)) == 0.0

    def test_single_point_scaled_metric(self):
        chart = one_point_chart()
        g = MetricField(chart, (4 * np.eye(2))[None])
        h = TangentField(chart, np.eye(2)[None])
        # trace term 2/16 times density 4
        assert l2_inner(g, h, h) == pytest.approx(0.5, rel=1e-14)

    def test_bilinear_and_symmetric(self, rng):
        chart = make_chart(2, 6, rng)
        g = random_metric_field(rng, chart)
        h, k, m = (random_tangent_field(rng, chart) for _ in range(3))
        a, b = 1.7, -0.3
        combo = TangentField(chart, a * h.values + b * m.values)
        lhs = l2_inner(g, combo, k)
        rhs = a * l2_inner(g, h, k) + b * l2_inner(g, m, k)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
        assert l2_inner(g, h, k) == pytest.approx(l2_inner(g, k, h), rel=1e-12, abs=1e-12)

    def test_chart_mismatch_rejected(self, rng):
        g = random_metric_field(rng, make_chart(2, 3, rng))
        h = TangentField.zero(make_chart(2, 4, rng))
        with pytest.raises(StructuralError, match="fingerprint"):
            l2_inner(g, h, h)


class TestL2Norm:
    def test_zero(self):
        chart = one_point_chart()
        g = MetricField(chart, np.eye(2)[None])
        assert l2_norm(g, TangentField.zero(chart)) == 0.0

    def test_single_point_value(self):
        chart = one_point_chart()
        g = MetricField(chart, np.eye(2)[None])
        h = TangentField(chart, np.eye(2)[None])
        assert l2_norm(g, h) == pytest.approx(math.sqrt(2), rel=1e-14)

    def test_quadrature_additivity(self):
        one = QuadChart(n=2, ids=("a",), weights=np.array([1.0]))
        two = QuadChart(n=2, ids=("a", "b"), weights=np.array([0.5, 0.5]))
        g1 = MetricField(one, np.eye(2)[None])
        h1 = TangentField(one, np.eye(2)[None])
        g2 = MetricField(two, np.broadcast_to(np.eye(2), (2, 2, 2)).copy())
        h2 = TangentField(two, np.broadcast_to(np.eye(2), (2, 2, 2)).copy())
        assert l2_norm(g2, h2) == pytest.approx(l2_norm(g1, h1), rel=1e-15)

    def test_positive_definite(self, rng):
        chart = make_chart(3, 4, rng)
        g = random_metric_field(rng, chart)
        h = random_tangent_field(rng, chart)
        assert l2_norm(g, h) > 0.0


class TestVolume:
    def test_empty_region(self, rng):
        g = random_metric_field(rng, make_chart(2, 3, rng))
        assert volume(g, []) == 0.0

    def test_single_point_value(self):
        chart = one_point_chart()
        g = MetricField(chart, (4 * np.eye(2))[None])
        assert volume(g) == pytest.approx(4.0, rel=1e-14)

    def test_region_monotonicity(self, rng):
        chart = make_chart(2, 6, rng)
        g = random_metric_field(rng, chart)
        small = set(chart.ids[:2])
        big = set(chart.ids[:5])
        assert volume(g, small) <= volume(g, big) <= volume(g)

    def test_additivity(self, rng):
        chart = make_chart(2, 8, rng)
        g = random_metric_field(rng, chart)
        y1 = set(chart.ids[:5])
        y2 = set(chart.ids[3:])
        lhs = volume(g, y1 | y2) + volume(g, y1 & y2)
        rhs = volume(g, y1) + volume(g, y2)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_unknown_id_rejected(self, rng):
        g = random_metric_field(rng, make_chart(2, 3, rng))
        with pytest.raises(StructuralError):
            volume(g, ["nope"])


class TestPathLength:
    def test_constant_path(self, rng):
        chart = make_chart(2, 3, rng)
        g = random_metric_field(rng, chart)
        path = DiscretePath(chart, np.broadcast_to(g.values, (5,) + g.values.shape).copy())
        assert path_length(path) == 0.0

    def test_conformal_hand_integral(self):
        # one point, frames (1+t) I: integral of sqrt(2/(1+t)) is 2(2-sqrt 2)
        chart = one_point_chart()
        path = conformal_field_path(chart, 1.0, 2.0, 1000)
        assert path_length(path) == pytest.approx(2 * (2 - math.sqrt(2)), abs=1e-3)

    def test_reversal_exact(self, rng):
        path = gen_path(points=4, n=2, seed=5, segments=12)
        assert path_length(path.reverse()) == path_length(path)

    def test_concatenation_additive(self, rng):
        path = gen_path(points=3, n=2, seed=9, segments=16)
        first = DiscretePath(path.chart, path.frames[:9])
        second = DiscretePath(path.chart, path.frames[8:])
        total = path_length(first) + path_length(second)
        assert path_length(path) == pytest.approx(total, rel=1e-14)

    def test_energy_bounds_squared_length(self, rng):
        for seed in range(20):
            path = gen_path(points=2, n=2, seed=seed, segments=10)
            assert path_energy(path) >= path_length(path) ** 2 * (1 - 1e-12)

    def test_restated_volume_lipschitz(self, rng):
        # length >= |sqrt vol difference| * 4/sqrt(n) up to discretization
        for seed in range(20):
            path = gen_path(points=3, n=2, seed=seed, segments=24)
            g0, g1 = path.endpoints()
            gap = abs(math.sqrt(volume(g1)) - math.sqrt(volume(g0)))
            L = path_length(path)
            assert L >= gap * 4 / math.sqrt(2) - eps_disc(24, max(1.0, L))


class TestThetaY:
    def test_equal_fields_exact_zero(self, rng):
        chart = make_chart(2, 4, rng)
        g = random_metric_field(rng, chart)
        ref = random_metric_field(rng, chart)
        assert theta_Y(ref, g, g) == 0.0

    def test_one_point_conformal(self):
        chart = one_point_chart()
        eye = MetricField(chart, np.eye(2)[None])
        g1 = MetricField(chart, (2 * np.eye(2))[None])
        got = theta_Y(eye, eye, g1, opts=FAST_OPTS)
        assert got == pytest.approx(math.sqrt(2), rel=1e-2)

    def test_quadrature_additivity(self):
        one = QuadChart(n=2, ids=("a",), weights=np.array([1.0]))
        two = QuadChart(n=2, ids=("a", "b"), weights=np.array([0.5, 0.5]))
        eye1 = MetricField(one, np.eye(2)[None])
        dbl1 = MetricField(one, (2 * np.eye(2))[None])
        eye2 = MetricField(two, np.broadcast_to(np.eye(2), (2, 2, 2)).copy())
        dbl2 = MetricField(two, np.broadcast_to(2 * np.eye(2), (2, 2, 2)).copy())
        a = theta_Y(eye1, eye1, dbl1, opts=FAST_OPTS)
        b = theta_Y(eye2, eye2, dbl2, opts=FAST_OPTS)
        assert b == pytest.approx(a, rel=1e-12)

    def test_region_monotonicity(self, rng):
        chart = make_chart(2, 5, rng)
        ref = random_metric_field(rng, chart)
        g0 = random_metric_field(rng, chart, spread=2.0)
        g1 = random_metric_field(rng, chart, spread=2.0)
        small = theta_Y(ref, g0, g1, set(chart.ids[:2]), FAST_OPTS)
        big = theta_Y(ref, g0, g1, set(chart.ids[:4]), FAST_OPTS)
        full = theta_Y(ref, g0, g1, None, FAST_OPTS)
        assert 0.0 <= small <= big <= full

    def test_details_cover_region(self, rng):
        chart = make_chart(2, 4, rng)
        ref = random_metric_field(rng, chart)
        g0 = random_metric_field(rng, chart, spread=2.0)
        g1 = random_metric_field(rng, chart, spread=2.0)
        value, details = theta_Y_details(ref, g0, g1, set(chart.ids[:3]), FAST_OPTS)
        assert [d["id"] for d in details] == list(chart.ids[:3])
        recomputed = sum(d["weight"] * d["theta"] * d["density"] for d in details)
        assert value == pytest.approx(recomputed, rel=1e-12)


class TestLipschitzChecker:
    def test_constant_path(self, rng):
        chart = make_chart(2, 3, rng)
        g = random_metric_field(rng, chart)
        path = DiscretePath(chart, np.broadcast_to(g.values, (3,) + g.values.shape).copy())
        report = check_lipschitz_sqrtvol(path)
        assert report.passed and report.lhs == 0.0 and report.rhs == 0.0

    def test_conformal_equality_case(self):
        # pure-trace direction on a one-point chart: lhs == rhs == sqrt2 - 1
        chart = one_point_chart()
        path = conformal_field_path(chart, 1.0, 2.0, 1000)
        report = check_lipschitz_sqrtvol(path)
        assert report.passed
        assert report.lhs == pytest.approx(math.sqrt(2) - 1, rel=1e-9)
        assert abs(report.slack) <= 1e-6

    def test_strict_inequality_with_traceless_component(self):
        # rotate eigenvalues apart while keeping some volume change
        chart = one_point_chart()
        ts = np.linspace(0, 1, 400)
        frames = np.stack(
            [np.diag([1.0 + 0.5 * t, 1.0 + 0.5 * t - 0.4 * t]) for t in ts]
        )[:, None]
        report = check_lipschitz_sqrtvol(DiscretePath(chart, frames))
        assert report.passed
        assert report.slack > 1e-3

    def test_random_paths_pass(self):
        for seed in range(50):
            path = gen_path(points=3, n=2, seed=seed, segments=24)
            assert check_lipschitz_sqrtvol(path).passed

    def test_region_argument(self, rng):
        path = gen_path(points=4, n=2, seed=3, segments=16)
        sub = set(path.chart.ids[:2])
        assert check_lipschitz_sqrtvol(path, sub).passed


class TestThetaBoundChecker:
    def test_constant_path(self, rng):
        chart = make_chart(2, 2, rng)
        g = random_metric_field(rng, chart)
        path = DiscretePath(chart, np.broadcast_to(g.values, (3,) + g.values.shape).copy())
        report = check_theta_bound(path, g, FAST_OPTS)
        assert report.passed and report.lhs == 0.0

    def test_conformal_one_point_values(self):
        chart = one_point_chart()
        path = conformal_field_path(chart, 1.0, 2.0, 500)
        ref = MetricField(chart, np.eye(2)[None])
        report = check_theta_bound(path, ref, FAST_OPTS)
        assert report.passed
        assert report.lhs == pytest.approx(math.sqrt(2), rel=1e-2)
        L = 2 * (2 - math.sqrt(2))
        assert report.rhs == pytest.approx(L * (1 + math.sqrt(2) / 4 * L), rel=1e-3)

    def test_random_paths_pass(self):
        for seed in range(15):
            path = gen_path(points=2, n=2, seed=seed, segments=16)
            report = check_theta_bound(path, path.endpoints()[0], FAST_OPTS)
            assert report.passed, (seed, report.to_dict())


class TestReferenceIndependence:
    def test_same_reference_zero_gap(self, rng):
        chart = make_chart(2, 3, rng)
        ref = random_metric_field(rng, chart)
        g0 = random_metric_field(rng, chart, spread=2.0)
        g1 = random_metric_field(rng, chart, spread=2.0)
        report = check_theta_reference_independence(g0, g1, ref, ref, None, FAST_OPTS)
        assert report.passed and report.slack == 0.0

    def test_conformal_oracle_weights_cancel(self, rng):
        # closed form: theta^ref sqrt(det ref) is reference-free exactly
        for n in (1, 2, 3):
            g0 = spd(np.eye(n))
            ref_a = spd(1.3 * np.eye(n))
            ref_b = spd(4 * 1.3 * np.eye(n))
            va = conformal_theta_oracle(ref_a, g0, 1.0, 2.0) * math.sqrt(
                np.linalg.det(ref_a.mat)
            )
            vb = conformal_theta_oracle(ref_b, g0, 1.0, 2.0) * math.sqrt(
                np.linalg.det(ref_b.mat)
            )
            assert va == pytest.approx(vb, rel=1e-6)

    def test_random_references_agree(self, rng):
        chart = make_chart(2, 4, rng)
        g0 = random_metric_field(rng, chart, spread=2.0)
        g1 = random_metric_field(rng, chart, spread=2.0)
        ref_a = random_metric_field(rng, chart, spread=2.0)
        ref_b = random_metric_field(rng, chart, spread=2.0)
        report = check_theta_reference_independence(g0, g1, ref_a, ref_b, None, FAST_OPTS)
        assert report.passed
        assert report.details["relative_gap"] <= 1e-3


class TestReportContract:
    def test_pass_iff_slack_above_negative_tolerance(self):
        path = gen_path(points=2, n=2, seed=1, segments=12)
        report = check_lipschitz_sqrtvol(path)
        assert report.passed == (report.slack >= -report.tolerance)
        d = report.to_dict()
        assert set(d) == {"check", "lhs", "rhs", "slack", "pass", "tolerance", "details"}
