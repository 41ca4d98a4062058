import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from qkahler.families import QHW, Minkowski, RDeformed, Toeplitz, coherent_vector, make_point
from qkahler.fock import Truncation, operator_norm
from qkahler.polarization import (
    build_generators,
    covariant_symbol,
    eigen_residual,
    norm_vs_symbol_sup,
    reconstruct_point,
    relation_residuals,
)

T64 = Truncation.with_dim(64)


@pytest.fixture(scope="module")
def toeplitz_gen():
    return build_generators(Toeplitz(), T64)


def test_generator_shapes_and_adjoints(toeplitz_gen):
    g = toeplitz_gen
    assert g.dim == 64 and g.labels == ("a1",)
    assert np.array_equal(g.creations[0].toarray(), g.anns[0].toarray().conj().T)
    q = build_generators(QHW(0.5, 3), Truncation.multi(2, 3))
    assert len(q.anns) == 3 and q.dim == 27
    m = build_generators(Minkowski(5), Truncation.mink(1, 1))
    assert m.labels == ("a11", "a12", "a21", "a22")
    with pytest.raises(ValueError):
        build_generators(QHW(0.5, 2), T64)


def test_toeplitz_is_the_shift(toeplitz_gen):
    a = toeplitz_gen.anns[0].toarray()
    assert np.array_equal(a, np.eye(64, k=1))


def test_qhw_lowering_weights():
    q = 0.5
    a = build_generators(QHW(q, 1), Truncation.multi(5, 1)).anns[0].toarray()
    qint = [(1 - q ** k) / (1 - q) for k in range(1, 6)]
    assert np.allclose(np.diag(a, 1), np.sqrt(qint), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 0.95), st.floats(0, 2 * np.pi))
def test_toeplitz_eigen_residual_exact(r, t):
    # (a - z)K has a single entry -z^D at the top level
    z = r * np.exp(1j * t)
    gen = build_generators(Toeplitz(), Truncation.with_dim(32))
    K = coherent_vector(Toeplitz(), Truncation.with_dim(32), z)
    ref = abs(z) ** 32 / np.linalg.norm(K)
    assert eigen_residual(gen, make_point(Toeplitz(), z))[0] == pytest.approx(ref, rel=1e-9, abs=1e-15)


def test_eigen_residual_small_inside(toeplitz_gen):
    for z in (0.5, -0.5j, 0.3 + 0.3j):
        assert eigen_residual(toeplitz_gen, make_point(Toeplitz(), z))[0] <= 1e-12
    gen = build_generators(QHW(0.5, 2), Truncation.multi(30, 2))
    assert max(eigen_residual(gen, make_point(QHW(0.5, 2), [0.5, -0.4j]))) <= 1e-12


def test_minkowski_eigen_residual_decreases_with_cutoff():
    spec = Minkowski(5)
    p = make_point(spec, [0.05, 0.01j, 0, 0.04])
    r1 = eigen_residual(build_generators(spec, Truncation.mink(2, 4)), p)
    r2 = eigen_residual(build_generators(spec, Truncation.mink(3, 6)), p)
    assert all(b < a / 10 for a, b in zip(r1, r2))


def test_covariant_symbols(toeplitz_gen):
    g = toeplitz_gen
    p = make_point(Toeplitz(), 0.5)
    assert covariant_symbol(g.anns[0], Toeplitz(), T64, p) == pytest.approx(0.5, abs=1e-15)
    assert covariant_symbol(g.creations[0] @ g.anns[0], Toeplitz(), T64, p) == pytest.approx(0.25, abs=1e-15)
    assert covariant_symbol(g.identity(), Toeplitz(), T64, p) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        covariant_symbol(sp.identity(3), Toeplitz(), T64, p)


def test_relation_residuals_toeplitz(toeplitz_gen):
    res = relation_residuals(toeplitz_gen)
    assert res["a a* = I"].interior == 0.0
    assert res["a a* = I"].full == pytest.approx(1.0, abs=1e-12)  # top level of the truncation
    assert res["a* a = I - |0><0|"].full == 0.0


def test_relation_residuals_rdeformed_and_qhw_diagonal():
    rgen = build_generators(RDeformed(0.3, (1.0, 0.5, -1.5)), Truncation.with_dim(40))
    assert max(r.interior for r in relation_residuals(rgen).values()) <= 1e-12
    qres = relation_residuals(build_generators(QHW(0.5, 2), Truncation.multi(12, 2)))
    for name, r in qres.items():
        if name.endswith("= 1") or name.startswith("["):
            assert r.interior <= 1e-12, name


def test_qhw_cross_relation_is_commutation():
    # a_i acts on its own mode only, so a_i a_j* = a_j* a_i and the
    # q-twisted residual equals (1 - q)||a_j* a_i|| on the interior
    q = 0.5
    gen = build_generators(QHW(q, 2), Truncation.multi(10, 2))
    a1, A2 = gen.anns[0], gen.creations[1]
    assert abs(a1 @ A2 - A2 @ a1).max() == 0
    res = relation_residuals(gen)["a1 a2* - q a2* a1 = 0"].interior
    assert res > 0.5


def test_rdeformed_matches_qhw_one_mode():
    q = 0.4
    r = build_generators(RDeformed.qhw_equivalent(q), Truncation.with_dim(20))
    h = build_generators(QHW(q, 1), Truncation.multi(19, 1))
    assert abs(r.anns[0] - h.anns[0]).max() <= 1e-15


def test_minkowski_generators_commute_on_interior():
    gen = build_generators(Minkowski(5), Truncation.mink(2, 3))
    assert max(r.interior for r in relation_residuals(gen, depth=2).values()) <= 1e-12


@pytest.mark.parametrize("q", [0.3, 0.75])
def test_qhw_norm_law(q):
    a = build_generators(QHW(q, 1), Truncation.multi(200, 1)).anns[0]
    assert operator_norm(a) == pytest.approx(1 / np.sqrt(1 - q), abs=1e-8)


def test_norm_vs_symbol_sup(toeplitz_gen):
    grid = [make_point(Toeplitz(), r) for r in np.linspace(0, 0.99, 30)]
    nrm, sup = norm_vs_symbol_sup(toeplitz_gen, 0, grid)
    assert nrm == pytest.approx(1.0, abs=1e-12)
    assert sup <= nrm + 1e-9
    with pytest.raises(ValueError):
        norm_vs_symbol_sup(toeplitz_gen, 0, [])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1.3), min_size=2, max_size=2))
def test_symbol_contraction_property(z):
    spec = QHW(0.5, 2)
    t = Truncation.multi(8, 2)
    gen = build_generators(spec, t)
    for i in range(2):
        nrm, sup = norm_vs_symbol_sup(gen, i, [make_point(spec, z)])
        assert sup <= nrm + 1e-9


def test_reconstruct_round_trip(toeplitz_gen):
    z = 0.3 + 0.2j
    K = coherent_vector(Toeplitz(), T64, z)
    assert reconstruct_point(K, toeplitz_gen).z == pytest.approx(z, abs=1e-14)
    e = np.zeros(64)
    e[5] = 1
    assert reconstruct_point(e, toeplitz_gen).z == 0
    with pytest.raises(ValueError):
        reconstruct_point(np.zeros(64), toeplitz_gen)
