import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkahler.families import (
    QHW,
    DomainError,
    Minkowski,
    RDeformed,
    Toeplitz,
    coherent_vector,
    format_complex,
    kernel,
    make_point,
    minkowski_delta,
    minkowski_norm_constant,
    parse_point,
    projector,
    q_integers,
    symbol_transform,
    truncation_tail,
)
from qkahler.fock import Mink, Truncation

T64 = Truncation.with_dim(64)


def _delta_oracle(lam, j, m, j1, j2, Z, consistent=True):
    """Direct transcription with math.gamma and (det Z)^m unexpanded."""
    f = math.factorial
    j, j1, j2 = Fraction(j), Fraction(j1), Fraction(j2)
    N = ((lam - 1) * (lam - 2) ** 2 * (lam - 3) * math.gamma(lam - 2) * math.gamma(lam - 3)
         * f(m) * f(int(m + 2 * j + 1)) / (f(int(2 * j + 1)) * math.gamma(m + lam - 1) * math.gamma(m + 2 * j + lam)))
    z11, z12, z21, z22 = np.asarray(Z, dtype=complex).ravel()
    ratio = math.sqrt(f(int(j + j1)) * f(int(j - j1)) / (f(int(j + j2)) * f(int(j - j2))))
    total = 0j
    S = int(max(0, j1 + j2))
    while S <= min(j + j1, j + j2):
        total += (math.comb(int(j + j2), S) * math.comb(int(j - j2), int(S - j1 - j2))
                  * z11 ** S * z12 ** int(j + j1 - S) * z21 ** int(j + j2 - S) * z22 ** int(S - j1 - j2))
        S += 1
    pref = (N * f(int(2 * j))) ** -0.5 if consistent else 1 / N
    return pref * (z11 * z22 - z12 * z21) ** m * ratio * total


# --- specs and points ---------------------------------------------------------------


def test_spec_validation():
    with pytest.raises(ValueError):
        QHW(1.5, 2)
    with pytest.raises(ValueError):
        QHW(0.5, 0)
    with pytest.raises(ValueError):
        Minkowski(3)
    with pytest.raises(ValueError):
        RDeformed(0.5, (1.0, 1.0))  # R(1) != 0
    with pytest.raises(ValueError):
        RDeformed(0.5, (-1.0, 1.0))  # R(0) <= 0
    assert RDeformed(0.5, (2.0, -2.0)).radius() == pytest.approx(math.sqrt(2))
    assert QHW(0.75).radius() == pytest.approx(2.0)


def test_point_validation_and_margin():
    p = make_point(Toeplitz(), 0.6)
    assert p.margin == pytest.approx(0.4)
    with pytest.raises(DomainError) as exc:
        make_point(Toeplitz(), 1.2)
    assert exc.value.margin == pytest.approx(-0.2)
    with pytest.raises(DomainError):
        make_point(Minkowski(4), [1.1, 0, 0, 0])
    with pytest.raises(ValueError):
        make_point(QHW(0.5, 2), [0.1])
    m = make_point(Minkowski(4), [0.5, 0, 0, 0.2])
    assert m.margin == pytest.approx(0.75)


def test_parse_and_format_round_trip():
    p = parse_point(Toeplitz(), "0.3+0.2i")
    assert p.z == 0.3 + 0.2j
    assert parse_point(Toeplitz(), str(p)).z == p.z
    assert format_complex(0.25) == "0.25"
    assert format_complex(1 - 2j) == "1-2i"
    q = parse_point(QHW(0.5, 2), "0.1, -0.2i")
    assert q.coords == (0.1, -0.2j)


# --- coherent vectors -------------------------------------------------------------------


def test_toeplitz_vacuum():
    K = coherent_vector(Toeplitz(), T64, 0)
    assert K[0] == 1 and np.all(K[1:] == 0)


def test_qhw_amplitudes():
    K = coherent_vector(QHW(0.5, 1), Truncation.multi(4, 1), 1.0)
    expect = [1, 1, 1 / math.sqrt(1.5), 1 / math.sqrt(1.5 * 1.75), 1 / math.sqrt(1.5 * 1.75 * 1.875)]
    assert np.allclose(K, expect, rtol=0, atol=1e-15)


def test_q_integers():
    assert np.allclose(q_integers(0.5, 3), [0, 1, 1.5, 1.75])


def test_qhw_multimode_is_product():
    spec, t = QHW(0.3, 2), Truncation.multi((3, 5))
    z = [0.4 - 0.1j, 0.7j]
    K = coherent_vector(spec, t, z)
    K1 = coherent_vector(QHW(0.3, 1), Truncation.multi(3, 1), z[0])
    K2 = coherent_vector(QHW(0.3, 1), Truncation.multi(5, 1), z[1])
    assert np.allclose(K, np.kron(K1, K2), atol=1e-15)


def test_rdeformed_amplitudes():
    spec = RDeformed(0.5, (2.0, -2.0))  # R(q^k) = 2 (1 - 2^-k)
    K = coherent_vector(spec, Truncation.with_dim(4), 0.5)
    r = [2 * (1 - 0.5 ** k) for k in (1, 2, 3)]
    expect = [1, 0.5 / math.sqrt(r[0]), 0.25 / math.sqrt(r[0] * r[1]), 0.125 / math.sqrt(r[0] * r[1] * r[2])]
    assert np.allclose(K, expect, atol=1e-15)


def test_minkowski_vacuum():
    spec, t = Minkowski(4), Truncation.mink(2, 3)
    K = coherent_vector(spec, t, np.zeros(4))
    assert K[t.index[Mink(0, 0, 0, 0)]] == pytest.approx(1.0, abs=1e-15)
    assert np.count_nonzero(np.abs(K) > 0) == 1
    assert minkowski_norm_constant(4, 0, 0) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("idx", [(0.5, 0, 0.5, 0.5), (0.5, 0, -0.5, 0.5), (1, 2, 0, -1), (1.5, 1, 0.5, -1.5),
                                 (2, 0, 1, 1), (0, 3, 0, 0)])
@pytest.mark.parametrize("norm", ["consistent", "literal"])
def test_minkowski_delta_oracle(idx, norm):
    Z = np.array([[0.3 + 0.1j, -0.2j], [0.15, 0.25 - 0.05j]])
    val = minkowski_delta(5, *idx, Z, normalization=norm)
    ref = _delta_oracle(5, *idx, Z, consistent=norm == "consistent")
    assert abs(val - ref) <= 1e-13 * max(1.0, abs(ref))


def test_minkowski_delta_diag_example():
    z = 0.4
    val = minkowski_delta(5, 0.5, 0, 0.5, 0.5, np.diag([z, 0]))
    assert val == pytest.approx(_delta_oracle(5, 0.5, 0, 0.5, 0.5, np.diag([z, 0])), abs=1e-15)
    with pytest.raises(ValueError):
        minkowski_delta(5, 0.5, 0, 1, 0, np.eye(2) * 0.1)


def test_minkowski_kernel_against_determinant():
    spec, t = Minkowski(5), Truncation.mink(5, 8)
    Z = np.array([[0.1, 0.05j], [-0.03, 0.08]])
    K = coherent_vector(spec, t, Z.ravel())
    oracle = np.linalg.det(np.eye(2) - Z.conj().T @ Z).real ** -5
    assert np.vdot(K, K).real == pytest.approx(oracle, rel=1e-12)


# --- kernels ---------------------------------------------------------------------------


def test_toeplitz_kernel_geometric_series():
    assert kernel(Toeplitz(), T64, 0, 0) == 1
    assert kernel(Toeplitz(), T64, 0.3, 0.5) == pytest.approx(1 / (1 - 0.15), abs=1e-12)


def test_qhw_kernel_q_exponential():
    # sum x^n / [n]!_q with x = conj(z) w, summed independently
    q, z, w = 0.5, 0.6 + 0.2j, -0.3 + 0.9j
    x = np.conj(z) * w
    ref, term = 0j, 1.0 + 0j
    for n in range(200):
        ref += term
        term *= x / ((1 - q ** (n + 1)) / (1 - q))
    assert kernel(QHW(q, 1), Truncation.multi(80, 1), z, w) == pytest.approx(ref, abs=1e-12)
    assert kernel(QHW(q, 1), Truncation.multi(5, 1), 0, 0) == 1


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(max_magnitude=0.9), st.complex_numbers(max_magnitude=0.9))
def test_kernel_conjugate_symmetric(z, w):
    spec = Toeplitz()
    assert kernel(spec, T64, z, w) == pytest.approx(np.conj(kernel(spec, T64, w, z)), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(max_magnitude=0.8), st.complex_numbers(max_magnitude=0.8))
def test_kernel_gram_psd(z, w):
    spec, t = QHW(0.5, 1), Truncation.multi(40, 1)
    pts = [z, w, 0.1]
    G = np.array([[kernel(spec, t, a, b) for b in pts] for a in pts])
    assert np.linalg.eigvalsh(0.5 * (G + G.conj().T)).min() >= -1e-10 * np.abs(G).max()


# --- projector / symbol transform / tail --------------------------------------------------


def test_projector_properties():
    P = projector(Toeplitz(), T64, 0.7)
    assert np.abs(P @ P - P).max() <= 1e-12
    assert np.abs(P - P.conj().T).max() <= 1e-15
    assert abs(np.trace(P) - 1) <= 1e-12
    P0 = projector(Toeplitz(), T64, 0)
    assert P0[0, 0] == 1 and np.count_nonzero(P0) == 1


def test_symbol_transform():
    e0 = np.zeros(64)
    e0[0] = 1
    assert symbol_transform(e0, Toeplitz(), T64, 0.4 + 0.1j) == 1
    v = coherent_vector(Toeplitz(), T64, 0.2)
    # <K(p)|K(0.2)> is the kernel
    assert symbol_transform(v, Toeplitz(), T64, 0.5j) == pytest.approx(kernel(Toeplitz(), T64, 0.5j, 0.2))
    with pytest.raises(ValueError):
        symbol_transform(np.ones(3), Toeplitz(), T64, 0)


def test_truncation_tail_geometric():
    # relative tail of sum |z|^2n from n=D: |z|^D up to the enlarged cutoff
    z = 0.5
    D = 16
    r = z ** 2
    ref = math.sqrt((r ** D - r ** (2 * D)) / (1 - r ** (2 * D)))
    assert truncation_tail(Toeplitz(), Truncation.with_dim(D), z) == pytest.approx(ref, rel=1e-10)
