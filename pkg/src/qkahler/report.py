"""Run configuration, the verification sweep, and deterministic JSON reports."""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .families import QHW, Minkowski, RDeformed, Toeplitz, make_point, truncation_tail
from .fock import Truncation, compress, operator_norm
from .geometry import curvature_metric, positivity_certificate
from .gns import (
    CoherentState,
    build_hardy_gns,
    coherence_residual,
    commutant_dimension,
    gns_equivalence_check,
    relations_for,
    theorem10_check,
)
from .normal_order import evaluate_matrix, format_normal_form, normal_order, parse_expr, random_expr
from .polarization import build_generators, covariant_symbol, eigen_residual, relation_residuals
from .quadrature import identity_residual, moment_match_measure, scalar_product_quadrature

__all__ = ["ConfigError", "RunConfig", "CheckRecord", "VerificationReport", "run_verify", "dumps", "make_rng"]

SCHEMA_VERSION = 1
FAMILIES = ("toeplitz", "rdeformed", "qhw", "minkowski")
TOL_FIELDS = ("relation_tol", "eigen_tol", "geometry_tol")


class ConfigError(ValueError):
    """Invalid run configuration (exit status 2)."""


def make_rng(seed: int):
    """Counter-based generator (Philox) keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


def _env_tol() -> float | None:
    raw = os.environ.get("QKAHLER_TOL")
    if raw is None or raw == "":
        return None
    try:
        val = float(raw)
    except ValueError as exc:
        raise ConfigError(f"QKAHLER_TOL={raw!r} is not a number") from exc
    if not val > 0:
        raise ConfigError("QKAHLER_TOL must be positive")
    return val


@dataclass
class RunConfig:
    family: str = "toeplitz"
    q: float = 0.5
    R: tuple = ()
    modes: int = 1
    lam: int = 4
    dim: int = 64
    k_max: int = 16
    j_max: float = 3
    m_max: int = 6
    relation_tol: float | None = None
    eigen_tol: float | None = None
    geometry_tol: float | None = None
    rank_tol: float = 1e-10
    seed: int = 0
    samples: int = 8
    output: str | None = None

    def __post_init__(self):
        env = _env_tol()
        defaults = {"relation_tol": 1e-12, "eigen_tol": 1e-10, "geometry_tol": 1e-6}
        for name in TOL_FIELDS:
            if getattr(self, name) is None:
                setattr(self, name, env if env is not None else defaults[name])
        self.R = tuple(float(c) for c in self.R)
        self.validate()

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        for name in TOL_FIELDS + ("rank_tol",):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if self.family in ("rdeformed", "qhw") and not 0 < self.q < 1:
            raise ConfigError(f"q must lie in (0, 1), got {self.q}")
        if self.modes < 1:
            raise ConfigError("modes must be >= 1")
        if self.dim < 1 or self.k_max < 0 or self.m_max < 0 or self.j_max < 0:
            raise ConfigError("truncation cutoffs must be nonnegative (dim >= 1)")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        try:
            self.spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def spec(self):
        if self.family == "toeplitz":
            return Toeplitz()
        if self.family == "rdeformed":
            return RDeformed(self.q, self.R or (1 / (1 - self.q), -1 / (1 - self.q)))
        if self.family == "qhw":
            return QHW(self.q, self.modes)
        return Minkowski(self.lam)

    def trunc(self) -> Truncation:
        if self.family in ("toeplitz", "rdeformed"):
            return Truncation.with_dim(self.dim)
        if self.family == "qhw":
            return Truncation.multi(self.k_max, self.modes)
        return Truncation.mink(self.j_max, self.m_max)

    def echo(self) -> dict:
        d = asdict(self)
        d["R"] = list(d["R"])
        return d


@dataclass
class CheckRecord:
    name: str
    value: float
    tolerance: float
    passed: bool
    status: str = "ok"  # ok | failed | skipped | error
    detail: str = ""


@dataclass
class VerificationReport:
    config: dict
    checks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)  # kept out of the report file

    @property
    def overall_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "checks": [
                {
                    "name": c.name,
                    "value": c.value,
                    "tolerance": c.tolerance,
                    "passed": c.passed,
                    "status": c.status,
                    "detail": c.detail,
                }
                for c in self.checks
            ],
            "overall_pass": self.overall_pass,
        }

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            tag = "SKIP" if c.status == "skipped" else ("PASS" if c.passed else "FAIL")
            t = self.timings.get(c.name)
            tt = f" ({t:.2f}s)" if t is not None else ""
            lines.append(f"[{tag}] {c.name}: {_num(c.value)} (tol {_num(c.tolerance)}){tt}")
        lines.append(f"overall: {'PASS' if self.overall_pass else 'FAIL'}")
        return "\n".join(lines)


# --- deterministic JSON --------------------------------------------------------------


def _num(x) -> str:
    if isinstance(x, bool) or x is None:
        return "null" if x is None else ("true" if x else "false")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = f"{x:.17g}"
    if s in ("0", "-0"):
        return "0.0"
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def _str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with insertion-ordered keys and 17-significant-digit floats.

    Complex numbers become {"re": .., "im": ..}.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_str(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_num(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps({"re": float(obj.real), "im": float(obj.imag)}, indent, _level)
    if isinstance(obj, str):
        return _str(obj)
    return _num(obj)


# --- the sweep ----------------------------------------------------------------------


def _random_points(spec, rng, count: int, frac: float):
    """Seeded interior points; for each: radius fraction, then phases."""
    pts = []
    for _ in range(count):
        if spec.kind == "minkowski":
            Z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            Z *= frac * rng.uniform(0.2, 1.0) / np.linalg.norm(Z, 2)
            pts.append(make_point(spec, Z.ravel()))
        else:
            r = frac * spec.radius() * rng.uniform(0.0, 1.0, size=spec.modes)
            th = rng.uniform(0, 2 * np.pi, size=spec.modes)
            pts.append(make_point(spec, r * np.exp(1j * th)))
    return pts


def _small_trunc(spec) -> Truncation:
    """Truncations small enough for the dense commutant solve."""
    if spec.kind in ("toeplitz", "rdeformed"):
        return Truncation.with_dim(16)
    if spec.kind == "qhw":
        per = {1: 15, 2: 3, 3: 1}.get(spec.n, 1)
        return Truncation.multi(per, spec.n)
    return Truncation.mink(1, 2)


def _word_alphabet(gen):
    n = len(gen.anns)
    return [f"a{i + 1}" for i in range(n)] + [f"A{i + 1}" for i in range(n)]


def _random_words(rng, gen, count: int, max_len: int):
    """Random words over a_i, A_i: length first, then the letters."""
    alpha = _word_alphabet(gen)
    out = []
    for _ in range(count):
        L = int(rng.integers(0, max_len + 1))
        out.append("*".join(alpha[int(i)] for i in rng.integers(0, len(alpha), size=L)) or "I")
    return out


class _Runner:
    def __init__(self, report: VerificationReport):
        self.report = report

    def run(self, name, fn):
        t0 = time.perf_counter()
        try:
            recs = fn()
        except Exception as exc:  # recorded, not raised
            recs = [CheckRecord(name, float("nan"), float("nan"), False, "error", f"{type(exc).__name__}: {exc}")]
        elapsed = time.perf_counter() - t0
        for r in recs:
            self.report.timings[r.name] = elapsed
        self.report.checks.extend(recs)


def run_verify(config: RunConfig) -> VerificationReport:
    """Run every check for the configured family; module errors become failed checks."""
    spec, trunc = config.spec(), config.trunc()
    rng = make_rng(config.seed)
    report = VerificationReport(config.echo())
    runner = _Runner(report)
    gen = build_generators(spec, trunc)
    rel = relations_for(spec)
    # draw order: points for eigen/symbol checks, geometry points, rewriter
    # suite, coherence words, order-implication trials
    points = _random_points(spec, rng, config.samples, 0.5 if spec.kind != "minkowski" else 0.1)

    def relations():
        out = []
        for name, r in relation_residuals(gen).items():
            out.append(CheckRecord(f"relation: {name}", r.interior, config.relation_tol,
                                   r.interior <= config.relation_tol,
                                   "ok" if r.interior <= config.relation_tol else "failed",
                                   f"full-space residual {_num(r.full)}"))
        return out

    def eigen():
        worst = 0.0
        worst_res = 0.0
        for p in points:
            res = max(eigen_residual(gen, p))
            bound = 10 * truncation_tail(spec, trunc, p) + config.eigen_tol
            worst = max(worst, res / bound)
            worst_res = max(worst_res, res)
        return [CheckRecord("eigen_residual / (10 tail + eigen_tol)", worst, 1.0, worst <= 1.0,
                            "ok" if worst <= 1.0 else "failed", f"max residual {_num(worst_res)}")]

    def symbols():
        ident = gen.identity()
        dev = 0.0
        for p in points:
            dev = max(dev, abs(covariant_symbol(ident, spec, trunc, p) - 1))
            for i, a in enumerate(gen.anns):
                s = covariant_symbol(a, spec, trunc, p)
                s_star = covariant_symbol(gen.creations[i], spec, trunc, p)
                dev = max(dev, abs(s - p.coords[i]), abs(s_star - np.conj(s)))
        norms = [operator_norm(a) for a in gen.anns]
        contraction = max(
            abs(covariant_symbol(a, spec, trunc, p)) - nrm for p in points for a, nrm in zip(gen.anns, norms)
        )
        tol = config.eigen_tol + 10 * max(truncation_tail(spec, trunc, p) for p in points)
        return [
            CheckRecord("covariant symbol <a_i> = z_i, <I> = 1, <a*> = conj<a>", dev, tol, dev <= tol),
            CheckRecord("symbol contraction sup|<a>| - ||a||", contraction, 1e-9, contraction <= 1e-9),
        ]

    def geometry():
        gpts = _random_points(spec, rng, max(2, config.samples // 2), 0.4 if spec.kind != "minkowski" else 0.1)
        samples = [curvature_metric(spec, trunc, p) for p in gpts]
        gap = max(s.route_gap for s in samples)
        cert = positivity_certificate(samples, tol=1e-8)
        return [
            CheckRecord("metric: finite-difference vs analytic", gap, config.geometry_tol, gap <= config.geometry_tol),
            CheckRecord("metric: min eigenvalue", cert.min_eig, -1e-8, cert.passed,
                        detail="nondegenerate" if cert.nondegenerate else "degenerate"),
        ]

    def rewriter():
        if rel is None:
            return [CheckRecord("rewriter oracle", float("nan"), 1e-10, True, "skipped",
                                "no rewrite relations for this family")]
        worst = conf = 0.0
        for _ in range(50):
            e = random_expr(rng, rel, max_terms=4, max_len=4)
            nf = normal_order(e, rel, "leftmost")
            nf2 = normal_order(e, rel, "random", rng=rng)
            if set(nf.terms) != set(nf2.terms):
                conf = math.inf
            else:
                conf = max([conf] + [abs(nf.terms[k] - nf2.terms[k]) for k in nf.terms])
            mask = trunc.interior_mask(max(1, e.max_word_length()))
            M1 = compress(evaluate_matrix(e, gen), mask)
            M2 = compress(evaluate_matrix(parse_expr(format_normal_form(nf), modes=rel.modes), gen), mask)
            scale = max(abs(M1).max(), 1.0) if M1.nnz else 1.0
            diff = abs(M1 - M2).max() if (M1 - M2).nnz else 0.0
            worst = max(worst, diff / scale)
        return [
            CheckRecord("rewriter: matrix oracle (interior, relative)", worst, 1e-10, worst <= 1e-10),
            CheckRecord("rewriter: confluence of strategies", conf, 1e-12, conf <= 1e-12),
        ]

    omega = CoherentState(spec, trunc, points[0], gen=gen)

    def coherence():
        xs = _random_words(rng, gen, 20, 3)
        anns = [f"a{i + 1}" for i in range(len(gen.anns))]
        anns += [f"a{i + 1}*a{j + 1}" for i in range(len(gen.anns)) for j in range(i, len(gen.anns))]
        res = coherence_residual(omega, [parse_expr(x, len(gen.anns)) for x in xs],
                                 [parse_expr(a, len(gen.anns)) for a in anns])
        tol = max(config.eigen_tol, 1e3 * truncation_tail(spec, trunc, omega.point))
        return [CheckRecord("coherence residual", res, tol, res <= tol)]

    def order_implication():
        rep = theorem10_check(omega, 100, rng)
        return [CheckRecord("order implication violations", rep.violations, 0, rep.passed,
                            detail=f"{rep.premise_hits} premise hits in {rep.trials} trials")]

    def gns():
        if spec.kind == "minkowski":
            words = ["I"] + [f"A{i + 1}" for i in range(4)]
        else:
            n = len(gen.anns)
            words = ["I"] + [f"A{i + 1}^{k}" for i in range(n) for k in range(1, 5)]
        model = build_hardy_gns(omega, words, config.rank_tol)
        gap = gns_equivalence_check(model)
        tol = max(config.eigen_tol, 1e3 * truncation_tail(spec, trunc, omega.point))
        return [CheckRecord("GNS/Hardy equivalence", gap, tol, gap <= tol, detail=f"rank {model.rank}")]

    def commutant():
        small = _small_trunc(spec)
        d = commutant_dimension(build_generators(spec, small))
        return [CheckRecord("commutant dimension", d, 1, d == 1, detail=small.label())]

    def quadrature():
        if spec.kind == "minkowski" or (spec.kind == "qhw" and spec.n > 2):
            return [CheckRecord("identity quadrature", float("nan"), 1e-6, True, "skipped",
                                "no rotational reduction for this family")]
        small = Truncation.with_dim(8) if trunc.kind == "mono" else Truncation.multi(7 if spec.n == 1 else 3, spec.n)
        rule = moment_match_measure(spec, small, 32)
        res = identity_residual(rule)
        worst = 0.0
        for _ in range(10):
            v = rng.normal(size=small.dim) + 1j * rng.normal(size=small.dim)
            w = rng.normal(size=small.dim) + 1j * rng.normal(size=small.dim)
            err = abs(scalar_product_quadrature(v, w, rule) - np.vdot(v, w))
            worst = max(worst, err / (np.linalg.norm(v) * np.linalg.norm(w)))
        flag = "signed weights" if rule.negative_weight_flag else "nonnegative weights"
        return [
            CheckRecord("identity quadrature residual", res, 1e-6, res <= 1e-6, detail=flag),
            CheckRecord("quadrature scalar product / (|v||w|)", worst, max(res, 1e-12), worst <= max(res, 1e-12)),
        ]

    for name, fn in [
        ("relations", relations),
        ("eigen", eigen),
        ("symbols", symbols),
        ("geometry", geometry),
        ("rewriter", rewriter),
        ("coherence", coherence),
        ("order", order_implication),
        ("gns", gns),
        ("commutant", commutant),
        ("quadrature", quadrature),
    ]:
        runner.run(name, fn)
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(dumps(report.to_dict()) + "\n")
    return report
