"""Resolution of the identity by truncated moment matching.

For the rotation-invariant one-mode families the angular average of the
coherent projector P(r e^{i theta}) is diagonal with entries
d_n(r) = |K_n(r)|^2 / <K(r)|K(r)>, so a radial rule only has to satisfy
sum_i w_i d_n(r_i) = 1 for every level n. Several modes are handled as a
tensor product of one-mode rules.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .families import _as_point, _mode_coefficients, coherent_vector, make_point
from .fock import Truncation, operator_norm
from .polarization import covariant_symbol

__all__ = [
    "QuadratureRule",
    "QuadratureError",
    "moment_match_measure",
    "identity_residual",
    "scalar_product_quadrature",
    "isometry_gap",
    "radial_grid",
]


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Per-mode radial rules (radii, weights); rings are averaged uniformly in angle."""

    spec: object
    trunc: Truncation
    radii: tuple  # one array per mode
    weights: tuple  # one array per mode
    residual: float
    negative_weight_flag: bool

    @property
    def node_count(self) -> int:
        return int(np.prod([r.size for r in self.radii]))

    def nodes(self):
        """Radial nodes as phase points on the positive real axis (one mode)."""
        return [make_point(self.spec, [r] * self.spec.modes) for r in self.radii[0]]


def _mode_levels(trunc: Truncation) -> list[int]:
    if trunc.kind == "mono":
        return [trunc.n_max]
    if trunc.kind == "multi":
        return list(trunc.k_max)
    raise ValueError("quadrature is implemented for Fock-type truncations only")


def _radial_moments(c: np.ndarray, r: np.ndarray) -> np.ndarray:
    """d_n(r_i) as a (levels x nodes) array."""
    n = np.arange(c.size)[:, None]
    amp = (c[:, None] ** 2) * r[None, :] ** (2 * n)
    return amp / amp.sum(axis=0)


def _chebyshev_nodes(count: int, rmax: float) -> np.ndarray:
    k = np.arange(count)
    x = np.cos(np.pi * (2 * k + 1) / (2 * count))  # in (-1, 1)
    return np.sort(0.5 * rmax * (1 + x))


def moment_match_measure(spec, trunc: Truncation, radial_count: int, margin: float = 0.02,
                         nonneg_tol: float = 1e-10, angular_count: int | None = None) -> QuadratureRule:
    """Radial weights solving sum_i w_i d_n(r_i) = 1 for every level.

    Nonnegative least squares first; if it cannot fit the moments to
    ``nonneg_tol`` a signed least-squares solution is used and flagged.
    Raises QuadratureError when the resulting identity residual exceeds 1e-3.
    """
    if spec.kind not in ("toeplitz", "rdeformed", "qhw"):
        raise ValueError(f"no rotational reduction for the {spec.kind} family")
    levels = _mode_levels(trunc)
    if radial_count < max(levels) + 1:
        raise ValueError(f"need at least {max(levels) + 1} radial nodes, got {radial_count}")
    rmax = spec.radius() * (1 - margin)
    radii, weights, negative = [], [], False
    for n_max in levels:
        c = _mode_coefficients(spec, n_max)
        r = _chebyshev_nodes(radial_count, rmax)
        A = _radial_moments(c, r)
        b = np.ones(n_max + 1)
        w, rn = nnls(A, b)
        if rn > nonneg_tol:
            w = np.linalg.lstsq(A, b, rcond=None)[0]
            negative = negative or bool(np.any(w < 0))
        radii.append(r)
        weights.append(w)
    rule = QuadratureRule(spec, trunc, tuple(radii), tuple(weights), np.nan, negative)
    res = identity_residual(rule, angular_count)
    if res > 1e-3:
        raise QuadratureError(f"moment system not resolvable at this size (residual {res:.3g})")
    return QuadratureRule(spec, trunc, rule.radii, rule.weights, res, negative)


def _mode_average(spec, n_max: int, radii, weights, angular_count: int) -> np.ndarray:
    """sum_i w_i (1/M) sum_theta P(r_i e^{i theta}) for one mode, as a dense matrix."""
    c = _mode_coefficients(spec, n_max)
    n = np.arange(n_max + 1)
    theta = 2 * np.pi * np.arange(angular_count) / angular_count
    out = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    for r, w in zip(radii, weights):
        if w == 0:
            continue
        for t in theta:
            K = c * (r * np.exp(1j * t)) ** n
            out += (w / angular_count) * np.outer(K, K.conj()) / np.vdot(K, K).real
    return out


def identity_residual(rule: QuadratureRule, angular_count: int | None = None) -> float:
    """||sum_i w_i <P>_angle(r_i) - I|| with the angular average done explicitly."""
    levels = _mode_levels(rule.trunc)
    D = max(levels) + 1
    if angular_count is None:
        angular_count = 2 * D + 1
    if angular_count < 2 * D + 1:
        raise ValueError(f"angular_count must be >= {2 * D + 1}")
    S = np.ones((1, 1), dtype=complex)
    for n_max, r, w in zip(levels, rule.radii, rule.weights):
        S = np.kron(S, _mode_average(rule.spec, n_max, r, w, angular_count))
    return operator_norm(S - np.eye(S.shape[0]), tol=1e-12, atol=1e-15)


def _ring_points(rule, angular_count):
    """Product nodes (coords, weight) over all modes, angles included."""
    theta = 2 * np.pi * np.arange(angular_count) / angular_count
    per_mode = []
    for r, w in zip(rule.radii, rule.weights):
        pts = [(ri * np.exp(1j * t), wi / angular_count) for ri, wi in zip(r, w) if wi != 0 for t in theta]
        per_mode.append(pts)
    coords = [()]
    wts = [1.0]
    for pts in per_mode:
        coords = [c + (z,) for c in coords for z, _ in pts]
        wts = [a * b for a in wts for _, b in pts]
    return coords, wts


def scalar_product_quadrature(v, w, rule: QuadratureRule, angular_count: int | None = None) -> complex:
    """sum over nodes of weight * conj(<K|v>) <K|w> / <K|K>."""
    v, w = np.asarray(v), np.asarray(w)
    D = rule.trunc.dim
    if v.shape != (D,) or w.shape != (D,):
        raise ValueError("vector dimensions do not match the rule's truncation")
    if angular_count is None:
        angular_count = 2 * (max(_mode_levels(rule.trunc)) + 1) + 1
    total = 0j
    for z, wt in zip(*_ring_points(rule, angular_count)):
        K = coherent_vector(rule.spec, rule.trunc, z)
        total += wt * np.conj(np.vdot(K, v)) * np.vdot(K, w) / np.vdot(K, K).real
    return complex(total)


def radial_grid(spec, radius: float, radial_count: int, angular_count: int = 1):
    """Points r e^{i theta} with r evenly spaced in (0, radius], same value in every mode."""
    out = []
    for r in np.linspace(radius / radial_count, radius, radial_count):
        for t in 2 * np.pi * np.arange(angular_count) / angular_count:
            out.append(make_point(spec, [r * np.exp(1j * t)] * spec.modes))
    return out


def isometry_gap(gen, rule: QuadratureRule | None, grid, ops=None) -> list[float]:
    """|opnorm(x) - sup_grid |<x>|| for each coordinate generator (or each of ``ops``)."""
    if rule is not None and not rule.residual <= 1e-4:
        raise ValueError(f"rule residual {rule.residual:.3g} too large for the isometry test")
    ops = list(gen.anns) if ops is None else list(ops)
    grid = [_as_point(gen.spec, p) for p in grid]
    out = []
    for x in ops:
        opn = operator_norm(x, tol=1e-12)
        sup = max(abs(covariant_symbol(x, gen.spec, gen.trunc, p)) for p in grid)
        out.append(float(abs(opn - sup)))
    return out
