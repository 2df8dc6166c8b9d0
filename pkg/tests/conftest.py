import numpy as np
import pytest

from metricspace import MetricField, QuadChart, SpdMatrix, TangentField, spd, sym


def random_orthogonal(rng, n):
    a = rng.standard_normal((n, n))
    return np.linalg.eigh(a + a.T)[1]


def random_spd_mat(rng, n, spread=3.0):
    """Random SPD array with eigenvalues log-uniform in [1/spread, spread]."""
    if spread == 1.0:
        return np.eye(n)
    q = random_orthogonal(rng, n)
    lam = np.exp(rng.uniform(-np.log(spread), np.log(spread), size=n))
    m = (q * lam) @ q.T
    return 0.5 * (m + m.T)


def random_sym_mat(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * 0.5 * (a + a.T)


def random_spd(rng, n, spread=3.0) -> SpdMatrix:
    return spd(random_spd_mat(rng, n, spread))


def random_sym(rng, n, scale=1.0):
    return sym(random_sym_mat(rng, n, scale))


def make_chart(n, points, rng=None, equal_weights=False) -> QuadChart:
    ids = tuple(f"p{i:03d}" for i in range(points))
    if equal_weights or rng is None:
        w = np.full(points, 1.0 / points)
    else:
        w = rng.uniform(0.2, 1.5, size=points)
    return QuadChart(n=n, ids=ids, weights=w)


def random_metric_field(rng, chart, spread=3.0) -> MetricField:
    vals = np.stack([random_spd_mat(rng, chart.n, spread) for _ in range(chart.size)])
    return MetricField(chart, vals)


def random_tangent_field(rng, chart, scale=1.0) -> TangentField:
    vals = np.stack([random_sym_mat(rng, chart.n, scale) for _ in range(chart.size)])
    return TangentField(chart, vals)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
