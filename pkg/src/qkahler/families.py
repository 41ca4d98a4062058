"""Coherent-state families: Toeplitz, R-deformed, q-Heisenberg-Weyl, Minkowski.

Every family exposes unnormalized coherent vectors ``K(p)`` in a truncated
basis. Sums start at level 0 with ``K_0 = 1``, so ``K(0)`` is the vacuum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .fock import Mink, Truncation

__all__ = [
    "Toeplitz",
    "RDeformed",
    "QHW",
    "Minkowski",
    "PhasePoint",
    "DomainError",
    "DegenerateKernelError",
    "make_point",
    "parse_point",
    "format_complex",
    "coherent_vector",
    "coherent_jet",
    "kernel",
    "projector",
    "symbol_transform",
    "minkowski_norm_constant",
    "minkowski_delta",
    "truncation_tail",
    "q_integers",
]

DOMAIN_MARGIN = 1e-9


class DomainError(ValueError):
    """A phase point outside (or too close to the boundary of) its domain."""

    def __init__(self, message, coords=None, margin=None):
        super().__init__(message)
        self.coords = coords
        self.margin = margin


class DegenerateKernelError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Toeplitz:
    kind = "toeplitz"
    modes = 1
    trunc_kind = "mono"

    def radius(self) -> float:
        return 1.0


@dataclass(frozen=True)
class RDeformed:
    """Family built from a real polynomial R with R(1) = 0.

    ``coeffs`` are ascending: R(x) = c0 + c1 x + c2 x^2 + ...
    """

    q: float
    coeffs: tuple[float, ...]
    kind = "rdeformed"
    modes = 1
    trunc_kind = "mono"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if not self.coeffs:
            raise ValueError("R needs at least one coefficient")
        scale = sum(abs(c) for c in self.coeffs)
        if abs(self.R(1.0)) > 1e-12 * scale:
            raise ValueError(f"R(1) must vanish, got {self.R(1.0)}")
        if self.R(0.0) <= 0:
            raise ValueError("R(0) must be positive")

    @classmethod
    def qhw_equivalent(cls, q: float) -> "RDeformed":
        """R(x) = (1 - x)/(1 - q), which reproduces the one-mode q-oscillator."""
        return cls(q, (1.0 / (1.0 - q), -1.0 / (1.0 - q)))

    def R(self, x):
        out = 0.0 * np.asarray(x, dtype=float)
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def r_values(self, n_max: int) -> np.ndarray:
        """R(q^n) for n = 1..n_max; all must be positive."""
        vals = self.R(self.q ** np.arange(1, n_max + 1, dtype=float))
        if np.any(vals <= 0):
            bad = int(np.argmax(vals <= 0)) + 1
            raise ValueError(f"R(q^{bad}) = {vals[bad - 1]} is not positive")
        return vals

    def radius(self) -> float:
        return math.sqrt(self.R(0.0))


@dataclass(frozen=True)
class QHW:
    q: float
    n: int = 1
    kind = "qhw"
    trunc_kind = "multi"

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if self.n < 1:
            raise ValueError("need at least one mode")

    @property
    def modes(self) -> int:
        return self.n

    def radius(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.q)


@dataclass(frozen=True)
class Minkowski:
    lam: int
    kind = "minkowski"
    modes = 4
    trunc_kind = "mink"

    def __post_init__(self):
        if int(self.lam) != self.lam or self.lam < 4:
            raise ValueError(f"lambda must be an integer >= 4, got {self.lam}")

    def radius(self) -> float:
        return 1.0


@dataclass(frozen=True)
class PhasePoint:
    """Point of a family's classical domain.

    ``coords`` holds z (disc), (z_1..z_N) (polydisc) or (z11, z12, z21, z22).
    """

    kind: str
    coords: tuple[complex, ...]
    margin: float

    @property
    def z(self) -> complex:
        return self.coords[0]

    def matrix(self) -> np.ndarray:
        return np.array(self.coords, dtype=complex).reshape(2, 2)

    def __str__(self):
        return ",".join(format_complex(c) for c in self.coords)


_POINT_KIND = {"toeplitz": "disc", "rdeformed": "rdisc", "qhw": "polydisc", "minkowski": "mink"}


def domain_margin(spec, coords) -> float:
    coords = np.asarray(coords, dtype=complex)
    if spec.kind == "minkowski":
        Z = coords.reshape(2, 2)
        return float(np.linalg.eigvalsh(np.eye(2) - Z.conj().T @ Z).min())
    return float(spec.radius() - np.abs(coords).max())


def make_point(spec, value) -> PhasePoint:
    """Validate ``value`` against the domain of ``spec``."""
    coords = np.atleast_1d(np.asarray(value, dtype=complex)).ravel()
    if coords.size != spec.modes:
        raise ValueError(f"{spec.kind} points need {spec.modes} coordinates, got {coords.size}")
    if not np.all(np.isfinite(coords)):
        raise DomainError("non-finite coordinates", tuple(coords), None)
    margin = domain_margin(spec, coords)
    if margin < DOMAIN_MARGIN:
        raise DomainError(
            f"point {tuple(coords)} is outside the {spec.kind} domain (margin {margin:.3g})",
            tuple(complex(c) for c in coords),
            margin,
        )
    return PhasePoint(_POINT_KIND[spec.kind], tuple(complex(c) for c in coords), margin)


def _parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("i", "j")
    if not t:
        raise ValueError("empty complex literal")
    if t in ("j", "+j", "-j"):
        t = t.replace("j", "1j")
    return complex(t)


def parse_point(spec, text: str) -> PhasePoint:
    """Parse "a+bi", a comma-separated polydisc list, or four Z entries row-major."""
    parts = [s for s in text.split(",") if s.strip()]
    return make_point(spec, [_parse_complex(s) for s in parts])


def format_complex(c: complex, digits: int = 17) -> str:
    c = complex(c)
    re, im = f"{c.real:.{digits}g}", f"{abs(c.imag):.{digits}g}"
    if c.imag == 0:
        return re
    sign = "-" if c.imag < 0 else "+"
    return f"{re}{sign}{im}i"


def _check_trunc(spec, trunc: Truncation):
    if trunc.kind != spec.trunc_kind:
        raise ValueError(f"{spec.kind} needs a {spec.trunc_kind} truncation, got {trunc.kind}")
    if spec.kind == "qhw" and trunc.modes != spec.n:
        raise ValueError(f"qhw with {spec.n} modes needs {spec.n} cutoffs, got {trunc.modes}")


def q_integers(q: float, n_max: int) -> np.ndarray:
    """[0]_q, [1]_q, ..., [n_max]_q via [n+1] = 1 + q [n]."""
    out = np.zeros(n_max + 1)
    for n in range(1, n_max + 1):
        out[n] = 1.0 + q * out[n - 1]
    return out


def _mode_coefficients(spec, n_max: int) -> np.ndarray:
    """c_n with K_n = c_n z^n for a single mode."""
    if spec.kind == "toeplitz":
        return np.ones(n_max + 1)
    if spec.kind == "rdeformed":
        ratios = 1.0 / np.sqrt(spec.r_values(n_max))
    else:
        ratios = 1.0 / np.sqrt(q_integers(spec.q, n_max)[1:])
    return np.concatenate([[1.0], np.cumprod(ratios)])


def _mode_jet(c: np.ndarray, z: complex, derivative: bool):
    n = np.arange(c.size)
    pw = np.ones(c.size, dtype=complex)
    if c.size > 1:
        pw[1:] = np.cumprod(np.full(c.size - 1, complex(z)))
    K = c * pw
    if not derivative:
        return K, None
    dK = np.zeros(c.size, dtype=complex)
    dK[1:] = n[1:] * c[1:] * pw[:-1]
    return K, dK


# --- Minkowski family ---------------------------------------------------------


def minkowski_norm_constant(lam: int, j, m: int) -> float:
    """The Gamma-function constant N^lam_{jm} attached to level (j, m)."""
    return math.exp(_log_norm_constant(lam, Fraction(j), m))


def _log_norm_constant(lam: int, j: Fraction, m: int) -> float:
    tj = int(2 * j)
    return (
        math.log(lam - 1) + 2 * math.log(lam - 2) + math.log(lam - 3)
        + math.lgamma(lam - 2) + math.lgamma(lam - 3)
        + math.lgamma(m + 1) + math.lgamma(m + tj + 2)
        - math.lgamma(tj + 2) - math.lgamma(m + lam - 1) - math.lgamma(m + tj + lam)
    )


def _log_prefactor(lam: int, idx: Mink, normalization: str) -> float:
    j, m = idx.j, idx.m
    a, b = int(j + idx.j1), int(j - idx.j1)
    c, d = int(j + idx.j2), int(j - idx.j2)
    log_ratio = 0.5 * (math.lgamma(a + 1) + math.lgamma(b + 1) - math.lgamma(c + 1) - math.lgamma(d + 1))
    log_n = _log_norm_constant(lam, j, m)
    if normalization == "literal":
        return -log_n + log_ratio
    if normalization == "consistent":
        # eigen-consistent with the a_ij action: (N * (2j)!)^(-1/2)
        return -0.5 * (log_n + math.lgamma(int(2 * j) + 1)) + log_ratio
    raise ValueError(f"unknown normalization {normalization!r}")


def _minkowski_monomials(idx: Mink):
    """(coefficient, exponents of z11, z12, z21, z22) without the prefactor."""
    j, m = idx.j, idx.m
    tj = int(2 * j)
    a, c, d = int(j + idx.j1), int(j + idx.j2), int(j - idx.j2)
    lo, hi = max(0, a + c - tj), min(a, c)
    out = []
    for S in range(lo, hi + 1):
        base = math.comb(c, S) * math.comb(d, S - a - c + tj)
        e = (S, a - S, c - S, S - a - c + tj)
        for k in range(m + 1):
            coef = base * math.comb(m, k) * (-1) ** k
            out.append((coef, (e[0] + m - k, e[1] + k, e[2] + k, e[3] + m - k)))
    return out


def minkowski_delta(lam: int, j, m: int, j1, j2, Z, normalization: str = "consistent") -> complex:
    """Amplitude of |j m; j1 j2> in the Minkowski coherent vector at Z.

    ``normalization="literal"`` uses the bare inverse constant 1/N; the
    default divides by sqrt(N * (2j)!), the choice for which a_ij K = z_ij K.
    """
    if not Mink.admissible(Fraction(j), m, Fraction(j1), Fraction(j2)):
        raise ValueError(f"inadmissible index {(j, m, j1, j2)}")
    if int(lam) != lam or lam < 4:
        raise ValueError("lambda must be an integer >= 4")
    idx = Mink(j, m, j1, j2)
    z = np.asarray(Z, dtype=complex).ravel()
    total = 0j
    for coef, e in _minkowski_monomials(idx):
        total += coef * z[0] ** e[0] * z[1] ** e[1] * z[2] ** e[2] * z[3] ** e[3]
    return math.exp(_log_prefactor(int(lam), idx, normalization)) * total


@lru_cache(maxsize=16)
def _minkowski_table(lam: int, trunc: Truncation, normalization: str = "consistent"):
    rows, coefs, exps = [], [], []
    for i, idx in enumerate(trunc.basis):
        scale = math.exp(_log_prefactor(lam, idx, normalization))
        for coef, e in _minkowski_monomials(idx):
            rows.append(i)
            coefs.append(coef * scale)
            exps.append(e)
    return np.array(rows), np.array(coefs), np.array(exps, dtype=int).reshape(-1, 4)


def _minkowski_jet(lam, trunc, coords, derivative, normalization="consistent"):
    rows, coefs, exps = _minkowski_table(int(lam), trunc, normalization)
    z = np.asarray(coords, dtype=complex)
    emax = int(exps.max()) if exps.size else 0
    pw = np.ones((4, emax + 1), dtype=complex)
    for c in range(4):
        for e in range(1, emax + 1):
            pw[c, e] = pw[c, e - 1] * z[c]
    factors = pw[np.arange(4), exps]  # (terms, 4)
    terms = coefs * factors.prod(axis=1)
    D = trunc.dim
    K = np.bincount(rows, terms.real, D) + 1j * np.bincount(rows, terms.imag, D)
    if not derivative:
        return K, None
    dK = []
    for c in range(4):
        f = factors.copy()
        f[:, c] = exps[:, c] * pw[c, np.maximum(exps[:, c] - 1, 0)]
        t = coefs * f.prod(axis=1)
        dK.append(np.bincount(rows, t.real, D) + 1j * np.bincount(rows, t.imag, D))
    return K, dK


# --- vectors, kernels, projectors ---------------------------------------------


def coherent_jet(spec, trunc: Truncation, coords, derivative: bool = True):
    """Coherent amplitudes at raw coordinates plus their holomorphic partials.

    No domain check; returns ``(K, [dK/dz_mu ...])``.
    """
    _check_trunc(spec, trunc)
    coords = np.atleast_1d(np.asarray(coords, dtype=complex)).ravel()
    if spec.kind == "minkowski":
        return _minkowski_jet(spec.lam, trunc, coords, derivative)
    if spec.kind in ("toeplitz", "rdeformed"):
        K, dK = _mode_jet(_mode_coefficients(spec, trunc.n_max), coords[0], derivative)
        return K, ([dK] if derivative else None)
    parts = [
        _mode_jet(_mode_coefficients(spec, kmax), z, derivative)
        for kmax, z in zip(trunc.k_max, coords)
    ]
    K = _kron_all([p[0] for p in parts])
    if not derivative:
        return K, None
    dK = []
    for mu in range(len(parts)):
        vecs = [p[1] if i == mu else p[0] for i, p in enumerate(parts)]
        dK.append(_kron_all(vecs))
    return K, dK


def _kron_all(vecs):
    out = vecs[0]
    for v in vecs[1:]:
        out = np.kron(out, v)
    return out


def _as_point(spec, p) -> PhasePoint:
    if isinstance(p, PhasePoint):
        if p.kind != _POINT_KIND[spec.kind]:
            raise ValueError(f"{p.kind} point given for the {spec.kind} family")
        return p
    return make_point(spec, p)


def coherent_vector(spec, trunc: Truncation, p) -> np.ndarray:
    p = _as_point(spec, p)
    return coherent_jet(spec, trunc, p.coords, derivative=False)[0]


def kernel(spec, trunc: Truncation, p, p2) -> complex:
    return complex(np.vdot(coherent_vector(spec, trunc, p), coherent_vector(spec, trunc, p2)))


def projector(spec, trunc: Truncation, p) -> np.ndarray:
    """Dense rank-one orthogonal projector onto K(p)."""
    K = coherent_vector(spec, trunc, p)
    nrm2 = np.vdot(K, K).real
    if not nrm2 > 0:
        raise DegenerateKernelError("vanishing self-kernel")
    return np.outer(K, K.conj()) / nrm2


def symbol_transform(v, spec, trunc: Truncation, p) -> complex:
    """<K(p)|v>: the vector v realized as a function on phase space."""
    v = np.asarray(v)
    if v.shape != (trunc.dim,):
        raise ValueError(f"vector of shape {v.shape} does not match dimension {trunc.dim}")
    return complex(np.vdot(coherent_vector(spec, trunc, p), v))


def truncation_tail(spec, trunc: Truncation, p) -> float:
    """Relative norm of the part of K(p) cut off by ``trunc``.

    Measured against the enlarged truncation (doubled cutoffs; +2 for Minkowski).
    """
    big = trunc.enlarged()
    Kb = coherent_vector(spec, big, p)
    keep = np.array([big.index[b] for b in trunc.basis])
    mask = np.ones(big.dim, dtype=bool)
    mask[keep] = False
    return float(np.linalg.norm(Kb[mask]) / np.linalg.norm(Kb))
