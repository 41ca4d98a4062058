import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkahler.families import QHW, DomainError, Minkowski, RDeformed, Toeplitz, make_point
from qkahler.fock import Truncation
from qkahler.geometry import curvature_metric, kahler_potential, positivity_certificate

T64 = Truncation.with_dim(64)


def _qhw_metric_oracle(q, x, terms=300):
    """g = d/dx (x f'/f) for f(x) = sum x^n / [n]!_q, by term-wise series."""
    f = f1 = f2 = 0.0
    c = 1.0
    for n in range(terms):
        f += c * x ** n
        if n >= 1:
            f1 += n * c * x ** (n - 1)
        if n >= 2:
            f2 += n * (n - 1) * c * x ** (n - 2)
        c /= (1 - q ** (n + 1)) / (1 - q)
    return (f1 + x * f2) / f - x * f1 ** 2 / f ** 2


@pytest.mark.parametrize("z", [0, 0.3, 0.5j, -0.6 + 0.2j, 0.8])
def test_toeplitz_metric_closed_form(z):
    s = curvature_metric(Toeplitz(), T64, make_point(Toeplitz(), z))
    r2 = abs(z) ** 2
    assert s.metric[0, 0] == pytest.approx(1 / (1 - r2) ** 2, abs=1e-8)
    assert s.potential == pytest.approx(-np.log(1 - r2), abs=1e-12)
    assert s.theta[0] == pytest.approx(np.conj(z) / (1 - r2), abs=1e-10)
    assert s.route_gap <= 1e-6


def test_qhw_metric_series_oracle():
    q, z = 0.5, 0.7 - 0.4j
    s = curvature_metric(QHW(q, 1), Truncation.multi(80, 1), make_point(QHW(q, 1), z))
    assert s.metric[0, 0].real == pytest.approx(_qhw_metric_oracle(q, abs(z) ** 2), rel=1e-10)


def test_qhw_product_metric_is_diagonal():
    q = 0.5
    spec, t = QHW(q, 2), Truncation.multi(40, 2)
    z = [0.4, -0.5j]
    g = curvature_metric(spec, t, make_point(spec, z)).metric
    assert abs(g[0, 1]) <= 1e-12
    assert g[0, 0].real == pytest.approx(_qhw_metric_oracle(q, 0.16), rel=1e-10)
    assert g[1, 1].real == pytest.approx(_qhw_metric_oracle(q, 0.25), rel=1e-10)


def test_minkowski_metric_at_origin():
    # Phi = -lam log det(E - Z^dag Z) = lam |Z|^2 + O(|Z|^4)
    lam = 5
    s = curvature_metric(Minkowski(lam), Truncation.mink(2, 3), make_point(Minkowski(lam), np.zeros(4)))
    assert np.allclose(s.metric, lam * np.eye(4), atol=1e-8)


def test_minkowski_potential_closed_form():
    lam = 5
    Z = np.array([[0.1, 0.05j], [-0.03, 0.08]])
    phi = kahler_potential(Minkowski(lam), Truncation.mink(5, 8), make_point(Minkowski(lam), Z.ravel()))
    assert phi == pytest.approx(-lam * np.log(np.linalg.det(np.eye(2) - Z.conj().T @ Z).real), abs=1e-12)


def test_gauge_invariance():
    spec, t = RDeformed(0.5, (2.0, -2.0)), T64
    p = make_point(spec, 0.4 + 0.3j)
    c = 0.7 - 0.2j
    s0 = curvature_metric(spec, t, p)
    s1 = curvature_metric(spec, t, p, gauge=[c])
    assert np.allclose(s0.metric, s1.metric, atol=1e-12)
    assert s1.potential - s0.potential == pytest.approx(2 * (c * p.z).real, abs=1e-12)
    assert abs(s1.metric_fd - s0.metric_fd).max() <= 1e-6


def test_step_too_large_for_margin():
    with pytest.raises(DomainError):
        curvature_metric(Toeplitz(), T64, make_point(Toeplitz(), 0.99995))


def test_positivity_certificate():
    samples = [curvature_metric(Toeplitz(), T64, make_point(Toeplitz(), z)) for z in (0, 0.5, 0.7j)]
    rep = positivity_certificate(samples)
    assert rep.passed and rep.count == 3 and rep.min_eig == pytest.approx(1.0)
    assert not positivity_certificate(samples, margin=2.0).nondegenerate
    with pytest.raises(ValueError):
        positivity_certificate([])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=0.9), min_size=2, max_size=2))
def test_metric_hermitian_positive_routes_agree(z):
    spec, t = QHW(0.5, 2), Truncation.multi(30, 2)
    s = curvature_metric(spec, t, make_point(spec, z))
    assert np.abs(s.metric - s.metric.conj().T).max() <= 1e-12
    assert s.min_eig > 0
    assert s.route_gap <= 1e-6
