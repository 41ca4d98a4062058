import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkahler.families import QHW, Minkowski, Toeplitz, coherent_vector
from qkahler.fock import Truncation
from qkahler.polarization import build_generators, norm_vs_symbol_sup
from qkahler.quadrature import (
    QuadratureRule,
    identity_residual,
    isometry_gap,
    moment_match_measure,
    radial_grid,
    scalar_product_quadrature,
)

T8 = Truncation.with_dim(8)


@pytest.fixture(scope="module")
def toeplitz_rule():
    return moment_match_measure(Toeplitz(), T8, 32)


@pytest.fixture(scope="module")
def qhw_rule():
    return moment_match_measure(QHW(0.5, 1), Truncation.multi(7, 1), 32)


def test_rules_resolve_identity(toeplitz_rule, qhw_rule):
    for rule in (toeplitz_rule, qhw_rule):
        assert rule.residual <= 1e-6
        assert abs(identity_residual(rule) - rule.residual) <= 1e-12
        assert rule.node_count == 32


def test_zero_weight_rule():
    rule = QuadratureRule(Toeplitz(), T8, (np.linspace(0.1, 0.9, 4),), (np.zeros(4),), np.nan, False)
    assert identity_residual(rule) == pytest.approx(1.0)


def test_perturbed_weights_increase_residual(toeplitz_rule):
    w = toeplitz_rule.weights[0].copy()
    w[int(np.argmax(np.abs(w)))] += 1e-3
    bad = QuadratureRule(Toeplitz(), T8, toeplitz_rule.radii, (w,), np.nan, True)
    assert identity_residual(bad) > toeplitz_rule.residual


def test_angular_count_lower_bound(toeplitz_rule):
    with pytest.raises(ValueError):
        identity_residual(toeplitz_rule, angular_count=16)


def test_two_mode_tensor_rule():
    rule = moment_match_measure(QHW(0.5, 2), Truncation.multi(3, 2), 16)
    assert rule.residual <= 1e-6
    assert len(rule.radii) == 2


def test_rejects_unsupported():
    with pytest.raises(ValueError):
        moment_match_measure(Minkowski(4), Truncation.mink(1, 1), 16)
    with pytest.raises(ValueError):
        moment_match_measure(Toeplitz(), T8, 4)


def test_scalar_product_examples(toeplitz_rule):
    e0, e1 = np.eye(8)[0], np.eye(8)[1]
    res = toeplitz_rule.residual
    assert abs(scalar_product_quadrature(e0, e0, toeplitz_rule) - 1) <= res + 1e-15
    assert abs(scalar_product_quadrature(e0, e1, toeplitz_rule)) <= res + 1e-15
    k = coherent_vector(Toeplitz(), T8, 0.3)
    k /= np.linalg.norm(k)
    assert abs(scalar_product_quadrature(k, k, toeplitz_rule) - 1) <= res + 1e-15
    with pytest.raises(ValueError):
        scalar_product_quadrature(np.ones(3), np.ones(3), toeplitz_rule)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_scalar_product_within_residual(seed):
    rule = moment_match_measure(QHW(0.5, 1), Truncation.multi(7, 1), 32)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    w = rng.normal(size=8) + 1j * rng.normal(size=8)
    err = abs(scalar_product_quadrature(v, w, rule) - np.vdot(v, w))
    assert err <= rule.residual * np.linalg.norm(v) * np.linalg.norm(w)


@pytest.mark.parametrize("spec", [Toeplitz(), QHW(0.5, 1)], ids=["toeplitz", "qhw"])
def test_residual_does_not_grow_with_nodes(spec):
    trunc = T8 if spec.kind == "toeplitz" else Truncation.multi(7, 1)
    prev = None
    for n in (16, 32, 64):
        r = moment_match_measure(spec, trunc, n).residual
        if prev is not None:
            # both sit at the rounding floor; allow 10% plus that floor
            assert r <= 1.1 * prev + 1e-13
        prev = r


def test_isometry_gap_qhw():
    spec = QHW(0.75, 1)
    gen = build_generators(spec, Truncation.multi(255, 1))
    gap = isometry_gap(gen, None, radial_grid(spec, 0.999 * spec.radius(), 200))[0]
    assert gap <= 1e-2


def test_isometry_gap_toeplitz_floor():
    # the truncated symbol tends to (D-1)/D at the boundary: gap >= 1/D
    spec, D = Toeplitz(), 64
    gen = build_generators(spec, Truncation.with_dim(D))
    gap = isometry_gap(gen, None, radial_grid(spec, 0.99999, 100))[0]
    assert gap >= 1 / D - 1e-12
    assert gap <= 1 / D + 1e-3


def test_isometry_gap_zero_operator(toeplitz_rule):
    gen = build_generators(Toeplitz(), T8)
    assert isometry_gap(gen, toeplitz_rule, radial_grid(Toeplitz(), 0.9, 5), ops=[0 * gen.anns[0]]) == [0.0]


def test_mean_norm_inequality():
    spec = Toeplitz()
    gen = build_generators(spec, Truncation.with_dim(32))
    nrm, sup = norm_vs_symbol_sup(gen, 0, radial_grid(spec, 0.999, 50, angular_count=4))
    assert sup <= nrm + 1e-9
