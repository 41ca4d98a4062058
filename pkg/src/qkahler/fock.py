"""Truncated Hilbert-space substrate: basis labels, truncations, norms, Gram matrices.

State vectors are plain 1-d complex numpy arrays and operators are scipy.sparse
matrices (dense arrays are accepted wherever an operator is expected).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "Mono",
    "Multi",
    "Mink",
    "Truncation",
    "ConvergenceError",
    "enumerate_basis",
    "adjoint",
    "operator_norm",
    "gram_matrix",
    "compress",
]


@dataclass(frozen=True)
class Mono:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"Mono index must be nonnegative, got {self.n}")


@dataclass(frozen=True)
class Multi:
    k: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(x) for x in self.k))
        if any(x < 0 for x in self.k):
            raise ValueError(f"Multi index entries must be nonnegative, got {self.k}")


def _half(x) -> Fraction:
    f = Fraction(x).limit_denominator(2)
    if f != Fraction(x) or f.denominator not in (1, 2):
        raise ValueError(f"{x!r} is not a half-integer")
    return f


@dataclass(frozen=True)
class Mink:
    """Basis label |j m; j1 j2> of the Minkowski family."""

    j: Fraction
    m: int
    j1: Fraction
    j2: Fraction

    def __post_init__(self):
        for name in ("j", "j1", "j2"):
            object.__setattr__(self, name, _half(getattr(self, name)))
        if self.j < 0 or self.m < 0:
            raise ValueError(f"need j >= 0 and m >= 0, got {self}")
        for jk in (self.j1, self.j2):
            if not -self.j <= jk <= self.j or (self.j - jk).denominator != 1:
                raise ValueError(f"inadmissible Minkowski index {self}")

    @staticmethod
    def admissible(j, m, j1, j2) -> bool:
        if m < 0 or j < 0 or (2 * j).denominator != 1:
            return False
        return all(-j <= jk <= j and (j - jk).denominator == 1 for jk in (j1, j2))

    def as_tuple(self) -> tuple:
        return (self.j, self.m, self.j1, self.j2)


@dataclass(frozen=True)
class Truncation:
    """Finite truncation of the basis for one family kind.

    ``kind`` is ``"mono"`` (levels 0..n_max), ``"multi"`` (per-mode cutoffs
    ``k_max``) or ``"mink"`` (2j <= 2 j_max, m <= m_max).
    """

    kind: str
    n_max: int | None = None
    k_max: tuple[int, ...] | None = None
    j_max: Fraction | None = None
    m_max: int | None = None

    def __post_init__(self):
        if self.kind == "mono":
            if self.n_max is None or self.n_max < 0:
                raise ValueError("mono truncation needs n_max >= 0")
        elif self.kind == "multi":
            if not self.k_max or any(k < 0 for k in self.k_max):
                raise ValueError("multi truncation needs k_max entries >= 0")
            object.__setattr__(self, "k_max", tuple(int(k) for k in self.k_max))
        elif self.kind == "mink":
            if self.j_max is None or self.m_max is None or self.m_max < 0:
                raise ValueError("mink truncation needs j_max and m_max >= 0")
            object.__setattr__(self, "j_max", _half(self.j_max))
            if self.j_max < 0:
                raise ValueError("j_max must be >= 0")
        else:
            raise ValueError(f"unknown truncation kind {self.kind!r}")

    @classmethod
    def mono(cls, n_max: int) -> "Truncation":
        return cls("mono", n_max=int(n_max))

    @classmethod
    def with_dim(cls, dim: int) -> "Truncation":
        return cls.mono(dim - 1)

    @classmethod
    def multi(cls, k_max, modes: int | None = None) -> "Truncation":
        if np.isscalar(k_max):
            k_max = (int(k_max),) * (modes or 1)
        return cls("multi", k_max=tuple(k_max))

    @classmethod
    def mink(cls, j_max, m_max: int) -> "Truncation":
        return cls("mink", j_max=_half(j_max), m_max=int(m_max))

    @property
    def modes(self) -> int:
        return len(self.k_max) if self.kind == "multi" else 1

    @cached_property
    def basis(self) -> tuple:
        return tuple(_enumerate(self))

    @cached_property
    def index(self) -> dict:
        return {b: i for i, b in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def enlarged(self) -> "Truncation":
        """Bigger truncation used to measure tails: cutoffs doubled (mink: +2)."""
        if self.kind == "mono":
            return Truncation.mono(2 * self.n_max + 1)
        if self.kind == "multi":
            return Truncation.multi(tuple(2 * k + 1 for k in self.k_max))
        return Truncation.mink(self.j_max + 2, self.m_max + 2)

    def interior_mask(self, depth: int = 1) -> np.ndarray:
        """Boolean mask of basis vectors at least ``depth`` levels below every cutoff."""
        if self.kind == "mono":
            return np.arange(self.dim) <= self.n_max - depth
        if self.kind == "multi":
            kk = np.array([b.k for b in self.basis])
            return np.all(kk <= np.array(self.k_max) - depth, axis=1)
        two_j = np.array([int(2 * b.j) for b in self.basis])
        m = np.array([b.m for b in self.basis])
        return (two_j <= int(2 * self.j_max) - depth) & (m <= self.m_max - depth)

    def label(self) -> str:
        if self.kind == "mono":
            return f"mono(n_max={self.n_max})"
        if self.kind == "multi":
            return f"multi(k_max={list(self.k_max)})"
        return f"mink(j_max={self.j_max}, m_max={self.m_max})"


def _enumerate(trunc: Truncation):
    if trunc.kind == "mono":
        for n in range(trunc.n_max + 1):
            yield Mono(n)
    elif trunc.kind == "multi":
        for k in itertools.product(*(range(c + 1) for c in trunc.k_max)):
            yield Multi(k)
    else:
        for two_j in range(int(2 * trunc.j_max) + 1):
            j = Fraction(two_j, 2)
            for m in range(trunc.m_max + 1):
                for a in range(two_j + 1):
                    for b in range(two_j + 1):
                        yield Mink(j, m, -j + a, -j + b)


def enumerate_basis(trunc: Truncation) -> list:
    return list(trunc.basis)


def adjoint(A):
    if sp.issparse(A):
        return A.conj().T.tocsr()
    return np.asarray(A).conj().T


class ConvergenceError(RuntimeError):
    def __init__(self, message, iterate, residual):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


def operator_norm(A, tol: float = 1e-12, max_iter: int | None = None, atol: float = 0.0) -> float:
    """Largest singular value of ``A`` from the top eigenvalue of A^H A.

    Power iteration from the normalized all-ones vector, accelerated by
    keeping the iterates and taking the best Ritz value on their span
    (Lanczos with full reorthogonalization). Plain power steps converge only
    like 1/k when the top of the spectrum is clustered, as it is for the
    q-deformed shifts. Stops when the Ritz residual is below ``tol``
    relative to the eigenvalue (or below ``atol**2`` absolutely, for residual
    operators at rounding level). Raises ConvergenceError once the budget
    (10*D steps, at least 50) is spent.
    """
    if sp.issparse(A):
        A = A.tocsr()
        if A.nnz == 0 or not np.any(A.data):
            return 0.0
    else:
        A = np.asarray(A)
        if not np.any(A):
            return 0.0
    n = A.shape[1]
    if max_iter is None:
        max_iter = max(10 * n, 50)
    AH = adjoint(A)

    v = np.ones(n, dtype=complex) / np.sqrt(n)
    V = np.zeros((n, min(n, max_iter) + 1), dtype=complex)
    V[:, 0] = v
    alphas, betas = [], []
    theta, resid, ritz = 0.0, np.inf, v
    for k in range(min(n, max_iter)):
        w = AH @ (A @ V[:, k])
        alphas.append(np.vdot(V[:, k], w).real)
        # two passes of Gram-Schmidt keep the basis orthonormal to rounding
        for _ in range(2):
            Vk = V[:, : k + 1]
            w = w - Vk @ (Vk.T @ w.conj()).conj()
        beta = float(np.linalg.norm(w))
        theta, s = _tridiag_top(alphas, betas)
        resid = beta * abs(s[-1])
        ritz = V[:, : k + 1] @ s
        if theta > 0 and (resid <= tol * theta or resid <= atol**2):
            return float(np.sqrt(theta))
        if beta <= 1e-14 * max(theta, 1e-300):
            # invariant subspace reached: the Ritz value is exact
            return float(np.sqrt(max(theta, 0.0)))
        betas.append(beta)
        V[:, k + 1] = w / beta
    if len(alphas) == n:
        return float(np.sqrt(max(theta, 0.0)))
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps", ritz, resid / max(theta, 1e-300)
    )


def _tridiag_top(alphas, betas):
    """Largest eigenpair of the symmetric tridiagonal Lanczos matrix."""
    k = len(alphas)
    if k == 1:
        return alphas[0], np.ones(1)
    w, s = eigh_tridiagonal(np.array(alphas), np.array(betas), select="i", select_range=(k - 1, k - 1))
    return w[0], s[:, 0]


def gram_matrix(vs) -> np.ndarray:
    """G[i, j] = <v_i | v_j>, conjugate-linear in the first slot."""
    vs = [np.asarray(v) for v in vs]
    if not vs:
        return np.zeros((0, 0), dtype=complex)
    dims = {v.shape for v in vs}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch among vectors: {sorted(dims)}")
    V = np.stack(vs, axis=1)
    return V.conj().T @ V


def compress(A, mask: np.ndarray):
    """Restrict an operator to the coordinate subspace selected by ``mask``."""
    idx = np.flatnonzero(mask)
    if sp.issparse(A):
        return A.tocsr()[idx][:, idx]
    return np.asarray(A)[np.ix_(idx, idx)]
