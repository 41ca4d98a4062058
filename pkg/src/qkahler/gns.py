"""Coherent states as functionals and the finite GNS/Hardy shadow.

A coherent state is the vector state of a normalized coherent vector. The
Gram data of creation words can be computed two ways: algebraically (normal
order, then the Berezin symbol) and from ambient vectors b K(p); their
agreement is the finite form of the equivalence between the Hardy-type and
the auto-representation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .families import _as_point, coherent_vector
from .fock import adjoint, compress
from .normal_order import (
    AlgExpr,
    QHWRel,
    RDefRel,
    berezin_of_normal_form,
    evaluate_matrix,
    normal_order,
    parse_expr,
)
from .polarization import GeneratorSet, build_generators

__all__ = [
    "CoherentState",
    "GnsModel",
    "OrderImplicationReport",
    "relations_for",
    "state_eval",
    "coherence_residual",
    "theorem10_check",
    "build_hardy_gns",
    "gns_equivalence_check",
    "commutant_dimension",
    "density_rank",
    "vacuum_factorization_gap",
    "random_annihilation_poly",
]


def relations_for(spec):
    """Rewrite relations matching a family, or None when there are none."""
    if spec.kind == "toeplitz":
        return QHWRel(0.0, 1)
    if spec.kind == "qhw":
        return QHWRel(spec.q, spec.n)
    if spec.kind == "rdeformed":
        return RDefRel(spec.q, spec.coeffs)
    return None


@dataclass(frozen=True)
class CoherentState:
    spec: object
    trunc: object
    point: object
    gen: GeneratorSet = field(default=None, repr=False)
    vector: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = _as_point(self.spec, self.point)
        object.__setattr__(self, "point", p)
        if self.gen is None:
            object.__setattr__(self, "gen", build_generators(self.spec, self.trunc))
        K = coherent_vector(self.spec, self.trunc, p)
        object.__setattr__(self, "vector", K / np.linalg.norm(K))

    def matrix(self, x):
        if isinstance(x, str):
            x = parse_expr(x, modes=len(self.gen.anns))
        if isinstance(x, AlgExpr):
            return evaluate_matrix(x, self.gen)
        return x


def state_eval(omega: CoherentState, x) -> complex:
    """omega(x) = <K|x K>/<K|K> for an expression, expression text, or matrix."""
    X = omega.matrix(x)
    if X.shape != (omega.gen.dim, omega.gen.dim):
        raise ValueError(f"operator of shape {X.shape} does not match dimension {omega.gen.dim}")
    k = omega.vector
    return complex(np.vdot(k, X @ k))


def coherence_residual(omega: CoherentState, xs, ann_words) -> float:
    """max |omega(x a) - omega(x) omega(a)| over the product set."""
    xs = [omega.matrix(x) for x in xs]
    ann = [omega.matrix(a) for a in ann_words]
    if not xs or not ann:
        raise ValueError("need nonempty sets")
    k = omega.vector
    worst = 0.0
    for A in ann:
        Ak = A @ k
        wa = np.vdot(k, Ak)
        for X in xs:
            worst = max(worst, abs(np.vdot(k, X @ Ak) - np.vdot(k, X @ k) * wa))
    return float(worst)


def vacuum_factorization_gap(omega: CoherentState, ann_words) -> float:
    """max |omega(a* a) - |omega(a)|^2| over polarization elements a."""
    k = omega.vector
    worst = 0.0
    for a in ann_words:
        Ak = omega.matrix(a) @ k
        worst = max(worst, abs(np.vdot(Ak, Ak).real - abs(np.vdot(k, Ak)) ** 2))
    return float(worst)


# --- order implication on the polarization ---------------------------------------


def random_annihilation_poly(rng, modes: int, max_degree: int = 2) -> AlgExpr:
    """Random polynomial in the annihilators; draws degree, then per monomial
    the mode indices and the complex coefficient."""
    e = AlgExpr({})
    for deg in range(max_degree + 1):
        if rng.random() < 0.5 and deg > 0:
            continue
        w = tuple(sorted(f"a{int(i) + 1}" for i in rng.integers(0, modes, size=deg)))
        e = e + AlgExpr({w: complex(rng.normal(), rng.normal())})
    return e


@dataclass(frozen=True)
class OrderImplicationReport:
    trials: int
    premise_hits: int
    violations: int
    worst_margin: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def theorem10_check(omega: CoherentState, trials: int, rng, psd_tol: float = 1e-10,
                    slack: float = 1e-9) -> OrderImplicationReport:
    """Test sum a_j* a_j <= sum b_s* b_s  =>  sum |mu(a_j)|^2 <= sum |mu(b_s)|^2.

    a_j, b_s are random polynomials in the annihilators and mu = omega on
    them. The matrix order is tested on the interior compression. Half of
    the trials (coin flip first) build b from a rescaled unitary mix of the
    a's plus extra random terms, so the premise is hit often; the rest
    draw b independently.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    gen = omega.gen
    n = len(gen.anns)
    k = omega.vector
    hits = violations = 0
    worst = -np.inf
    for _ in range(trials):
        structured = rng.random() < 0.5
        J = int(rng.integers(1, 3))
        a = [random_annihilation_poly(rng, n) for _ in range(J)]
        if structured:
            t = rng.uniform(0.7, 1.5)
            U, _ = np.linalg.qr(rng.normal(size=(J, J)) + 1j * rng.normal(size=(J, J)))
            b = [sum((a[j].scale(t * U[s, j]) for j in range(J)), AlgExpr({})) for s in range(J)]
            b += [random_annihilation_poly(rng, n).scale(0.3) for _ in range(int(rng.integers(0, 2)))]
        else:
            b = [random_annihilation_poly(rng, n) for _ in range(int(rng.integers(1, 3)))]
        depth = max(e.max_word_length() for e in a + b)
        mask = gen.trunc.interior_mask(max(depth, 1))
        Ma = [evaluate_matrix(e, gen) for e in a]
        Mb = [evaluate_matrix(e, gen) for e in b]
        lhs = sum(adjoint(M) @ M for M in Ma)
        rhs = sum(adjoint(M) @ M for M in Mb)
        diff = compress(rhs - lhs, mask)
        diff = diff.toarray() if sp.issparse(diff) else diff
        if np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)).min() < -psd_tol:
            continue
        hits += 1
        sa = sum(abs(np.vdot(k, M @ k)) ** 2 for M in Ma)
        sb = sum(abs(np.vdot(k, M @ k)) ** 2 for M in Mb)
        worst = max(worst, sa - sb)
        if sa > sb + slack:
            violations += 1
    return OrderImplicationReport(trials, hits, violations, float(worst) if hits else 0.0)


# --- Hardy / GNS ---------------------------------------------------------------------


@dataclass(frozen=True)
class GnsModel:
    state: CoherentState
    words: tuple
    gram: np.ndarray
    basis: np.ndarray  # columns: coefficients of orthonormal classes over the words
    rank: int
    rank_tol: float
    actions: dict  # generator label -> matrix on the quotient basis


def _words(words, modes):
    out = []
    for w in words:
        out.append(parse_expr(w, modes=modes) if isinstance(w, str) else w)
    return out


def _algebraic_eval(omega: CoherentState, e: AlgExpr) -> complex:
    rel = relations_for(omega.spec)
    if rel is None:
        return state_eval(omega, e)
    return berezin_of_normal_form(normal_order(e, rel), omega.spec, omega.trunc, omega.point)


def build_hardy_gns(omega: CoherentState, words, rank_tol: float = 1e-10) -> GnsModel:
    """Quotient of creation words by the null space of G_ij = omega(b_i* b_j).

    Entries (and the generator actions [b] -> [x b]) are computed by normal
    ordering and evaluating symbols, not from the ambient vectors.
    """
    gen = omega.gen
    n = len(gen.anns)
    bs = _words(words, n)
    if not bs:
        raise ValueError("need at least one word")
    M = len(bs)
    G = np.array([[_algebraic_eval(omega, bs[i].adjoint() * bs[j]) for j in range(M)] for i in range(M)])
    lam, U = np.linalg.eigh(0.5 * (G + G.conj().T))
    if lam.min() < -1e-8 * max(lam.max(), 1.0):
        raise ValueError(f"Gram matrix is not positive semidefinite (min eigenvalue {lam.min():.3g})")
    keep = lam > rank_tol * lam.max()
    C = U[:, keep] / np.sqrt(lam[keep])
    actions = {}
    gens = [(f"a{i + 1}", AlgExpr.word(f"a{i + 1}")) for i in range(n)]
    gens += [(f"A{i + 1}", AlgExpr.word(f"A{i + 1}")) for i in range(n)]
    for label, x in gens:
        X = np.array([[_algebraic_eval(omega, bs[i].adjoint() * x * bs[j]) for j in range(M)] for i in range(M)])
        actions[label] = C.conj().T @ X @ C
    return GnsModel(omega, tuple(bs), G, C, int(keep.sum()), rank_tol, actions)


def gns_equivalence_check(model: GnsModel, gen: GeneratorSet | None = None) -> float:
    """Largest deviation between the model and the ambient vectors b_i K(p)/||K(p)||.

    Compares the Gram matrices and every generator's matrix on the
    orthonormal quotient basis.
    """
    omega = model.state
    gen = gen or omega.gen
    k = omega.vector
    V = np.stack([evaluate_matrix(b, gen) @ k for b in model.words], axis=1)
    worst = float(np.abs(V.conj().T @ V - model.gram).max())
    F = V @ model.basis
    for label, act in model.actions.items():
        i = int(label[1:]) - 1
        X = gen.anns[i] if label[0] == "a" else gen.creations[i]
        worst = max(worst, float(np.abs(F.conj().T @ (X @ F) - act).max()))
    return worst


def commutant_dimension(ops, tol: float = 1e-6) -> int:
    """dim {X : [X, x] = 0 for every x in ops}.

    ``ops`` is a GeneratorSet (its a_i and a_i* are used) or a list of
    matrices. Singular values of the stacked commutator map are taken from
    the eigenvalues of its Gram matrix; those below ``tol`` times the
    largest count. The rounding floor of that route is ~1e-8 relative.
    """
    if isinstance(ops, GeneratorSet):
        mats = list(ops.anns) + list(ops.creations)
    else:
        mats = list(ops)
    D = mats[0].shape[0]
    if D > 64:
        raise ValueError(f"dense commutant solve limited to D <= 64, got {D}")
    I = sp.identity(D, dtype=complex, format="csr")
    gram = sp.csr_matrix((D * D, D * D), dtype=complex)
    for x in mats:
        x = sp.csr_matrix(x)
        L = sp.kron(x.T, I) - sp.kron(I, x)  # vec(X x - x X), column-major vec
        gram = gram + (L.conj().T @ L)
    ev = np.linalg.eigvalsh(gram.toarray())
    sv = np.sqrt(np.clip(ev, 0.0, None))
    if sv.max() == 0:
        return D * D
    return int(np.sum(sv < tol * sv.max()))


def density_rank(omega: CoherentState, max_len: int | None = None) -> tuple[int, int]:
    """(rank of {b K(p)} over creation monomials b, dimension D).

    Monomials A_1^k1 ... A_N^kN with each k_i up to the mode cutoff (or
    total length up to ``max_len`` for one mode).
    """
    gen = omega.gen
    trunc = gen.trunc
    if trunc.kind == "mono":
        L = trunc.n_max if max_len is None else max_len
        exps = [(k,) for k in range(L + 1)]
    elif trunc.kind == "multi":
        exps = [b.k for b in trunc.basis]
    else:
        raise ValueError("density check implemented for Fock-type truncations")
    k = omega.vector
    vecs = []
    for e in exps:
        v = k
        for i, p in enumerate(e):
            for _ in range(p):
                v = gen.creations[i] @ v
        vecs.append(v)
    V = np.stack(vecs, axis=1)
    return int(np.linalg.matrix_rank(V)), trunc.dim
