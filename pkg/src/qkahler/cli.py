"""Command-line front end: ``qkahler <command> ...``.

Exit status: 0 success / all checks pass, 1 failed check or numerical error,
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .families import (
    QHW,
    RDeformed,
    Toeplitz,
    coherent_vector,
    format_complex,
    kernel,
    parse_point,
    truncation_tail,
)
from .fock import ConvergenceError, Truncation
from .geometry import curvature_metric
from .gns import CoherentState, build_hardy_gns, commutant_dimension, gns_equivalence_check, state_eval
from .normal_order import QHWRel, RDefRel, berezin_of_normal_form, format_normal_form, normal_order, parse_expr
from .polarization import build_generators, reconstruct_point
from .quadrature import identity_residual, moment_match_measure
from .report import ConfigError, RunConfig, dumps, run_verify

FAMILY_KEYS = ("family", "q", "R", "modes", "lam", "dim", "k_max", "j_max", "m_max")


class UsageError(Exception):
    pass


def _coeffs(text: str) -> tuple:
    try:
        return tuple(float(c) for c in text.split(",") if c.strip())
    except ValueError as exc:
        raise UsageError(f"bad coefficient list {text!r}") from exc


def _add_family(p: argparse.ArgumentParser):
    g = p.add_argument_group("family")
    g.add_argument("--family", choices=["toeplitz", "rdeformed", "qhw", "minkowski"])
    g.add_argument("--q", type=float)
    g.add_argument("--R", type=_coeffs, help="ascending coefficients c0,c1,... of R")
    g.add_argument("--modes", type=int)
    g.add_argument("--lam", type=int)
    g.add_argument("--dim", type=int, help="truncation dimension (one-mode families)")
    g.add_argument("--k-max", dest="k_max", type=int, help="per-mode cutoff (qhw)")
    g.add_argument("--j-max", dest="j_max", type=float)
    g.add_argument("--m-max", dest="m_max", type=int)
    p.add_argument("--config", help="JSON file mirroring the flags")
    p.add_argument("--seed", type=int)


def _config(args, extra=()) -> RunConfig:
    d = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config file must hold a JSON object")
    for key in FAMILY_KEYS + ("seed",) + tuple(extra):
        val = getattr(args, key, None)
        if val is not None:
            d[key] = val
    return RunConfig.from_dict(d)


def _value(c: complex):
    """Real numbers print as JSON numbers, complex ones as "a+bi" strings."""
    c = complex(c)
    if c.imag == 0:
        return c.real
    return format_complex(c)


def _print(obj):
    print(dumps(obj))


def cmd_verify(args) -> int:
    cfg = _config(args, extra=("samples", "output"))
    report = run_verify(cfg)
    print(report.summary())
    return 0 if report.overall_pass else 1


def cmd_family(args) -> int:
    cfg = _config(args)
    spec, trunc = cfg.spec(), cfg.trunc()
    p = parse_point(spec, args.point)
    K = coherent_vector(spec, trunc, p)
    out = {
        "family": spec.kind,
        "truncation": trunc.label(),
        "dim": trunc.dim,
        "point": str(p),
        "domain_margin": p.margin,
        "kernel": _value(kernel(spec, trunc, p, p)),
        "tail": truncation_tail(spec, trunc, p),
        "amplitudes": [_value(c) for c in K[: args.show]],
    }
    if args.point2:
        out["kernel_pair"] = _value(kernel(spec, trunc, p, parse_point(spec, args.point2)))
    _print(out)
    return 0


def cmd_symbol(args) -> int:
    cfg = _config(args)
    spec, trunc = cfg.spec(), cfg.trunc()
    omega = CoherentState(spec, trunc, parse_point(spec, args.point))
    _print(_value(state_eval(omega, parse_expr(args.op, modes=len(omega.gen.anns)))))
    return 0


def cmd_geometry(args) -> int:
    cfg = _config(args)
    spec, trunc = cfg.spec(), cfg.trunc()
    s = curvature_metric(spec, trunc, parse_point(spec, args.point), h=args.h)
    _print({
        "point": str(s.point),
        "potential": s.potential,
        "theta": [_value(t) for t in s.theta],
        "metric": [[_value(x) for x in row] for row in s.metric],
        "metric_fd": [[_value(x) for x in row] for row in s.metric_fd],
        "route_gap": s.route_gap,
        "min_eig": s.min_eig,
    })
    return 0


def cmd_rewrite(args) -> int:
    if args.relations == "qhw":
        if args.q is None:
            raise UsageError("--q is required")
        rel = QHWRel(args.q, args.modes or 1, cross=args.cross)
    elif args.relations == "toeplitz":
        rel = QHWRel(0.0, 1)
    else:
        if args.q is None or not args.R:
            raise UsageError("--q and --R are required for rdef relations")
        rel = RDefRel(args.q, args.R)
    nf = normal_order(parse_expr(args.expr, modes=rel.modes), rel)
    text = format_normal_form(nf)
    if not args.point:
        _print(text)
        return 0
    if args.relations == "qhw":
        spec, trunc = QHW(args.q, rel.modes), Truncation.multi(args.dim - 1, rel.modes)
    elif args.relations == "toeplitz":
        spec, trunc = Toeplitz(), Truncation.with_dim(args.dim)
    else:
        spec, trunc = RDeformed(args.q, args.R), Truncation.with_dim(args.dim)
    val = berezin_of_normal_form(nf, spec, trunc, parse_point(spec, args.point))
    _print({"normal_form": text, "symbol": _value(val)})
    return 0


def cmd_gns(args) -> int:
    cfg = _config(args)
    spec, trunc = cfg.spec(), cfg.trunc()
    omega = CoherentState(spec, trunc, parse_point(spec, args.point))
    words = [w.strip() for w in args.words.split(",") if w.strip()]
    model = build_hardy_gns(omega, words, args.rank_tol)
    out = {
        "words": words,
        "rank": model.rank,
        "gram": [[_value(x) for x in row] for row in model.gram],
        "equivalence_gap": gns_equivalence_check(model),
    }
    if args.commutant:
        out["commutant_dimension"] = commutant_dimension(omega.gen)
    _print(out)
    return 0


def cmd_identity(args) -> int:
    cfg = _config(args)
    spec, trunc = cfg.spec(), cfg.trunc()
    rule = moment_match_measure(spec, trunc, args.radial)
    _print({
        "family": spec.kind,
        "truncation": trunc.label(),
        "modes": [
            {"radii": list(r), "weights": list(w)} for r, w in zip(rule.radii, rule.weights)
        ],
        "residual": rule.residual,
        "identity_residual": identity_residual(rule, args.angular),
        "negative_weight_flag": rule.negative_weight_flag,
    })
    return 0


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    spec, trunc = cfg.spec(), cfg.trunc()
    kind, _, payload = args.state.partition(":")
    payload = payload.strip().strip('"')
    if kind == "coherent":
        v = coherent_vector(spec, trunc, parse_point(spec, payload))
    elif kind == "basis":
        idx = [int(i) for i in payload.split(",") if i.strip()]
        v = np.zeros(trunc.dim, dtype=complex)
        v[idx] = 1.0
    else:
        raise UsageError("--state must be coherent:<point> or basis:<i,j,...>")
    p = reconstruct_point(v, build_generators(spec, trunc))
    _print(str(p))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qkahler", description="Coherent-state quantization workbench")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the verification sweep")
    _add_family(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--output", "-o", help="write the JSON report here")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("family", help="coherent vector and kernel at a point")
    _add_family(p)
    p.add_argument("--point", required=True)
    p.add_argument("--point2")
    p.add_argument("--show", type=int, default=8, help="number of amplitudes to print")
    p.set_defaults(fn=cmd_family)

    p = sub.add_parser("symbol", help="Berezin symbol of an expression at a point")
    _add_family(p)
    p.add_argument("--op", required=True)
    p.add_argument("--point", required=True)
    p.set_defaults(fn=cmd_symbol)

    p = sub.add_parser("geometry", help="Kahler potential and metric at a point")
    _add_family(p)
    p.add_argument("--point", required=True)
    p.add_argument("--h", type=float, default=1e-4)
    p.set_defaults(fn=cmd_geometry)

    p = sub.add_parser("rewrite", help="normal-order an expression")
    p.add_argument("expr")
    p.add_argument("--relations", choices=["qhw", "rdef", "toeplitz"], required=True)
    p.add_argument("--q", type=float)
    p.add_argument("--R", type=_coeffs)
    p.add_argument("--modes", type=int)
    p.add_argument("--cross", choices=["commute", "literal"], default="commute")
    p.add_argument("--point", help="also print the Berezin symbol here")
    p.add_argument("--dim", type=int, default=64, help="per-mode truncation for --point")
    p.set_defaults(fn=cmd_rewrite)

    p = sub.add_parser("gns", help="Hardy/GNS model from creation words")
    _add_family(p)
    p.add_argument("--point", required=True)
    p.add_argument("--words", default="I,A1,A1^2")
    p.add_argument("--rank-tol", dest="rank_tol", type=float, default=1e-10)
    p.add_argument("--commutant", action="store_true")
    p.set_defaults(fn=cmd_gns)

    p = sub.add_parser("identity", help="moment-matched resolution of the identity")
    _add_family(p)
    p.add_argument("--radial", type=int, default=32)
    p.add_argument("--angular", type=int)
    p.set_defaults(fn=cmd_identity)

    p = sub.add_parser("reconstruct", help="phase point from a state")
    _add_family(p)
    p.add_argument("--state", required=True, help='coherent:"0.3+0.2i" or basis:0,9')
    p.set_defaults(fn=cmd_reconstruct)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, ConvergenceError, RuntimeError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
