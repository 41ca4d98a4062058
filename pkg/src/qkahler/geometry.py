"""Kahler data pulled back from the reproducing kernel.

The potential is Phi = log <K|K> and the metric its mixed Hessian
g_{mu nu-bar} = d_mu dbar_nu Phi. Two routes are computed: analytic
derivatives of the truncated series and central finite differences over the
2N real coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .families import DegenerateKernelError, DomainError, _as_point, coherent_jet

__all__ = [
    "KahlerSample",
    "PositivityReport",
    "kahler_potential",
    "curvature_metric",
    "positivity_certificate",
]


@dataclass(frozen=True)
class KahlerSample:
    point: object
    potential: float
    theta: np.ndarray
    metric: np.ndarray
    metric_fd: np.ndarray
    min_eig: float

    @property
    def route_gap(self) -> float:
        """Largest elementwise difference between the two metric routes."""
        return float(np.abs(self.metric - self.metric_fd).max())


@dataclass(frozen=True)
class PositivityReport:
    count: int
    min_eig: float
    tol: float
    margin: float
    positive: bool
    nondegenerate: bool

    @property
    def passed(self) -> bool:
        return self.positive and self.nondegenerate


def _gauged_jet(spec, trunc, coords, gauge, derivative=True):
    K, dK = coherent_jet(spec, trunc, coords, derivative)
    if gauge is None:
        return K, dK
    c = np.atleast_1d(np.asarray(gauge, dtype=complex))
    f = np.exp(np.dot(c, coords))
    if derivative:
        # d(fK) = f dK + (df) K with df = c_mu f
        dK = [f * d + c[mu] * f * K for mu, d in enumerate(dK)]
    return f * K, dK


def _phi(spec, trunc, coords, gauge=None) -> float:
    K, _ = _gauged_jet(spec, trunc, coords, gauge, derivative=False)
    S = np.vdot(K, K).real
    if not S > 0:
        raise DegenerateKernelError("vanishing self-kernel")
    return float(np.log(S))


def kahler_potential(spec, trunc, p, gauge=None) -> float:
    p = _as_point(spec, p)
    return _phi(spec, trunc, np.array(p.coords), gauge)


def _fd_metric(spec, trunc, z, h, gauge):
    n = z.size
    # real coordinates: x_mu at index mu, y_mu at index n + mu
    steps = np.concatenate([np.eye(n), 1j * np.eye(n)]).astype(complex)

    def f(*moves):
        w = z.copy()
        for k, s in moves:
            w = w + s * h * steps[k]
        return _phi(spec, trunc, w, gauge)

    f0 = f()
    H = np.zeros((2 * n, 2 * n))
    for a in range(2 * n):
        H[a, a] = (f((a, 1)) - 2 * f0 + f((a, -1))) / h**2
        for b in range(a + 1, 2 * n):
            H[a, b] = H[b, a] = (
                f((a, 1), (b, 1)) - f((a, 1), (b, -1)) - f((a, -1), (b, 1)) + f((a, -1), (b, -1))
            ) / (4 * h**2)
    X, Y = slice(0, n), slice(n, 2 * n)
    return 0.25 * ((H[X, X] + H[Y, Y]) + 1j * (H[X, Y] - H[Y, X]))


def curvature_metric(spec, trunc, p, h: float = 1e-4, gauge=None) -> KahlerSample:
    """Potential, connection form and metric at ``p``.

    ``gauge`` (a coefficient vector c) multiplies every amplitude by exp(c.z);
    the metric must not notice.
    """
    p = _as_point(spec, p)
    if p.margin <= 2 * h:
        raise DomainError(f"step {h} too large for domain margin {p.margin:.3g}", p.coords, p.margin)
    z = np.array(p.coords, dtype=complex)
    K, dK = _gauged_jet(spec, trunc, z, gauge)
    S = np.vdot(K, K).real
    if not S > 0:
        raise DegenerateKernelError("vanishing self-kernel")
    D = np.stack(dK)
    KdK = D.conj() @ K  # <d_nu K | K>
    G = D.conj() @ D.T  # G[nu, mu] = <d_nu K | d_mu K>
    theta = KdK.conj() / S  # <K | d_mu K> / S
    g = (G.T * S - np.outer(KdK.conj(), KdK)) / S**2
    g_fd = _fd_metric(spec, trunc, z, h, gauge)
    return KahlerSample(
        point=p,
        potential=float(np.log(S)),
        theta=theta,
        metric=g,
        metric_fd=g_fd,
        min_eig=float(np.linalg.eigvalsh(g).min()),
    )


def positivity_certificate(samples, tol: float = 1e-8, margin: float = 0.0) -> PositivityReport:
    """Metric positivity (min eigenvalue >= -tol) and nondegeneracy (> margin)."""
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    m = min(s.min_eig for s in samples)
    return PositivityReport(len(samples), float(m), tol, margin, m >= -tol, m > margin)
