"""Annihilation/creation operators, Berezin symbols and point reconstruction."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .families import (
    DegenerateKernelError,
    _check_trunc,
    _mode_coefficients,
    coherent_vector,
    make_point,
    q_integers,
)
from .fock import ConvergenceError, Mink, Truncation, adjoint, compress, operator_norm

__all__ = [
    "GeneratorSet",
    "Residual",
    "build_generators",
    "eigen_residual",
    "covariant_symbol",
    "relation_residuals",
    "norm_vs_symbol_sup",
    "reconstruct_point",
]


@dataclass(frozen=True)
class GeneratorSet:
    spec: object
    trunc: Truncation
    anns: tuple
    labels: tuple[str, ...]
    Q: object = None
    creations: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "creations", tuple(adjoint(a) for a in self.anns))

    @property
    def dim(self) -> int:
        return self.trunc.dim

    def identity(self):
        return sp.identity(self.dim, dtype=complex, format="csr")


def _lowering(weights: np.ndarray):
    """Sparse a with a|n> = w_n |n-1> for n >= 1."""
    D = weights.size
    return sp.diags(weights[1:].astype(complex), 1, shape=(D, D), format="csr")


def _mode_weights(spec, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    if spec.kind == "toeplitz":
        return (n > 0).astype(float)
    if spec.kind == "rdeformed":
        return np.concatenate([[0.0], np.sqrt(spec.r_values(n_max))])
    return np.sqrt(q_integers(spec.q, n_max))


def _minkowski_ops(lam: int, trunc: Truncation):
    half = Fraction(1, 2)
    idx = trunc.index
    # (sign of the (j+1/2, m-1) term, x/y factors for it, x/y factors for the (j-1/2, m) term, shifts)
    spec_rows = {
        "a11": (+1, (-1, -1), lambda j, j1, j2: ((j - j1 + 1, j - j2 + 1), (j + j1, j + j2))),
        "a12": (-1, (-1, +1), lambda j, j1, j2: ((j - j1 + 1, j + j2 + 1), (j + j1, j - j2))),
        "a21": (-1, (+1, -1), lambda j, j1, j2: ((j + j1 + 1, j - j2 + 1), (j - j1, j + j2))),
        "a22": (+1, (+1, +1), lambda j, j1, j2: ((j + j1 + 1, j + j2 + 1), (j - j1, j - j2))),
    }
    ops = []
    for label, (sign, (s1, s2), factors) in spec_rows.items():
        rows, cols, vals = [], [], []
        for col, b in enumerate(trunc.basis):
            j, m, j1, j2 = b.as_tuple()
            jf = float(j)
            (x1, y1), (x2, y2) = factors(jf, float(j1), float(j2))
            t1 = (j + half, m - 1, j1 + s1 * half, j2 + s2 * half)
            if m > 0 and Mink.admissible(*t1) and Mink(*t1) in idx:
                c1 = np.sqrt(x1 * y1 * m / ((2 * jf + 1) * (2 * jf + 2) * (m + lam - 2)))
                rows.append(idx[Mink(*t1)]); cols.append(col); vals.append(sign * c1)
            t2 = (j - half, m, j1 + s1 * half, j2 + s2 * half)
            if j > 0 and Mink.admissible(*t2) and Mink(*t2) in idx:
                c2 = np.sqrt(x2 * y2 * (m + 2 * jf + 1) / ((m + 2 * jf + lam - 1) * 2 * jf * (2 * jf + 1)))
                if c2 != 0:
                    rows.append(idx[Mink(*t2)]); cols.append(col); vals.append(c2)
        D = trunc.dim
        ops.append(sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(D, D)))
    return tuple(ops), tuple(spec_rows)


def build_generators(spec, trunc: Truncation) -> GeneratorSet:
    _check_trunc(spec, trunc)
    if spec.kind in ("toeplitz", "rdeformed"):
        a = _lowering(_mode_weights(spec, trunc.n_max))
        Q = None
        if spec.kind == "rdeformed":
            Q = sp.diags(spec.q ** np.arange(trunc.n_max + 1, dtype=float), 0, format="csr").astype(complex)
        return GeneratorSet(spec, trunc, (a,), ("a1",), Q)
    if spec.kind == "qhw":
        factors = [_lowering(_mode_weights(spec, k)) for k in trunc.k_max]
        eyes = [sp.identity(k + 1, dtype=complex, format="csr") for k in trunc.k_max]
        anns = []
        for i in range(spec.n):
            op = None
            for mu in range(spec.n):
                f = factors[mu] if mu == i else eyes[mu]
                op = f if op is None else sp.kron(op, f, format="csr")
            anns.append(op.tocsr())
        return GeneratorSet(spec, trunc, tuple(anns), tuple(f"a{i + 1}" for i in range(spec.n)))
    ops, labels = _minkowski_ops(int(spec.lam), trunc)
    return GeneratorSet(spec, trunc, ops, labels)


def _normalized(spec, trunc, p):
    K = coherent_vector(spec, trunc, p)
    nrm = np.linalg.norm(K)
    if not nrm > 0:
        raise DegenerateKernelError("vanishing self-kernel")
    return K / nrm


def eigen_residual(gen: GeneratorSet, p) -> list[float]:
    """||(a_i - z_i) K(p)|| / ||K(p)|| for every annihilation generator."""
    p = make_point(gen.spec, p.coords if hasattr(p, "coords") else p)
    k = _normalized(gen.spec, gen.trunc, p)
    return [float(np.linalg.norm(a @ k - z * k)) for a, z in zip(gen.anns, p.coords)]


def covariant_symbol(x, spec, trunc: Truncation, p) -> complex:
    """Berezin symbol <K(p)| x K(p)> / <K(p)|K(p)>."""
    k = _normalized(spec, trunc, p)
    if x.shape != (trunc.dim, trunc.dim):
        raise ValueError(f"operator of shape {x.shape} does not match dimension {trunc.dim}")
    return complex(np.vdot(k, x @ k))


class Residual(NamedTuple):
    interior: float
    full: float


def _norm(R, tol):
    # absolute floor well below every relation tolerance we check against
    try:
        return operator_norm(R, tol=tol, atol=1e-14)
    except ConvergenceError:
        # clustered top singular values: fall back to a Lanczos SVD
        if max(R.shape) <= 4096:
            return float(np.linalg.norm(R.toarray(), 2))
        return float(spla.svds(R, k=1, return_singular_vectors=False, tol=1e-10)[0])


def _residual(R, trunc, depth=1, tol=1e-12) -> Residual:
    R = sp.csr_matrix(R)
    R.eliminate_zeros()
    return Residual(_norm(compress(R, trunc.interior_mask(depth)), tol), _norm(R, tol))


def relation_residuals(gen: GeneratorSet, depth: int = 1) -> dict[str, Residual]:
    """Norms of the defining-relation defects, interior-compressed and on the full space."""
    spec, trunc = gen.spec, gen.trunc
    I = gen.identity()
    out = {}
    if spec.kind == "toeplitz":
        a, A = gen.anns[0], gen.creations[0]
        P0 = sp.csr_matrix(([1.0 + 0j], ([0], [0])), shape=I.shape)
        out["a a* = I"] = _residual(a @ A - I, trunc, depth)
        out["a* a = I - |0><0|"] = _residual(A @ a - (I - P0), trunc, depth)
    elif spec.kind == "rdeformed":
        a, A, Q, q = gen.anns[0], gen.creations[0], gen.Q, spec.q
        qs = q ** np.arange(trunc.n_max + 1, dtype=float)
        RQ = sp.diags(spec.R(qs).astype(complex), 0, format="csr")
        RqQ = sp.diags(spec.R(q * qs).astype(complex), 0, format="csr")
        out["a* a = R(Q)"] = _residual(A @ a - RQ, trunc, depth)
        out["a a* = R(qQ)"] = _residual(a @ A - RqQ, trunc, depth)
        out["a Q = q Q a"] = _residual(a @ Q - q * (Q @ a), trunc, depth)
        out["Q a* = q a* Q"] = _residual(Q @ A - q * (A @ Q), trunc, depth)
    elif spec.kind == "qhw":
        q, n = spec.q, spec.n
        for i in range(n):
            for j in range(n):
                R = gen.anns[i] @ gen.creations[j] - q * (gen.creations[j] @ gen.anns[i])
                if i == j:
                    R = R - I
                out[f"a{i + 1} a{j + 1}* - q a{j + 1}* a{i + 1} = {int(i == j)}"] = _residual(R, trunc, depth)
        for i in range(n):
            for j in range(i + 1, n):
                ai, aj = gen.anns[i], gen.anns[j]
                out[f"[a{i + 1}, a{j + 1}] = 0"] = _residual(ai @ aj - aj @ ai, trunc, depth)
    else:
        # no closed relations beyond commutativity of the polarization
        for i in range(4):
            for j in range(i + 1, 4):
                ai, aj = gen.anns[i], gen.anns[j]
                out[f"[{gen.labels[i]}, {gen.labels[j]}] = 0"] = _residual(ai @ aj - aj @ ai, trunc, depth)
    return out


def norm_vs_symbol_sup(gen: GeneratorSet, i, grid, tol: float = 1e-12) -> tuple[float, float]:
    """(||x||, sup over grid of |<x>|) for x = a_i or an explicit operator."""
    x = gen.anns[i] if isinstance(i, (int, np.integer)) else i
    if not len(grid):
        raise ValueError("empty grid")
    opnorm = operator_norm(x, tol=tol)
    sup = max(abs(covariant_symbol(x, gen.spec, gen.trunc, p)) for p in grid)
    return opnorm, float(sup)


def reconstruct_point(v, gen: GeneratorSet):
    """Phase point from the expectation values <v|a_i v>/<v|v>.

    Raises DomainError (carrying the raw coordinates) when the values fall
    outside the classical domain.
    """
    v = np.asarray(v, dtype=complex)
    nrm2 = np.vdot(v, v).real
    if not nrm2 > 0:
        raise ValueError("zero vector")
    coords = [np.vdot(v, a @ v) / nrm2 for a in gen.anns]
    return make_point(gen.spec, coords)


def mode_coefficients(spec, n_max):
    return _mode_coefficients(spec, n_max)
