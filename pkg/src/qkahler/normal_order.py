"""Expressions in the generators, normal ordering, and their symbols.

Words are tuples of tokens ``"a<i>"`` (annihilation), ``"A<i>"`` (creation)
and ``"Q"``; the empty word is the identity. Normal order puts creations
left, Q-powers in the middle and annihilations right, each block sorted by
mode index.
"""
from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .families import _as_point, coherent_vector

__all__ = [
    "ParseError",
    "AlgExpr",
    "QHWRel",
    "RDefRel",
    "ToeplitzRel",
    "NormalForm",
    "RewriteStats",
    "parse_expr",
    "normal_order",
    "evaluate_matrix",
    "berezin_of_normal_form",
    "format_expr",
    "format_normal_form",
    "random_expr",
]


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


# --- expressions ----------------------------------------------------------------


@dataclass(frozen=True)
class AlgExpr:
    """Finite sum of scalar-times-word terms."""

    terms: dict = field(default_factory=dict)

    @classmethod
    def scalar(cls, c) -> "AlgExpr":
        return cls({(): complex(c)}) if c != 0 else cls({})

    @classmethod
    def word(cls, *tokens) -> "AlgExpr":
        return cls({tuple(tokens): 1.0 + 0j})

    def __add__(self, other: "AlgExpr") -> "AlgExpr":
        out = defaultdict(complex, self.terms)
        for w, c in other.terms.items():
            out[w] += c
        return AlgExpr({w: c for w, c in out.items() if c != 0})

    def __neg__(self) -> "AlgExpr":
        return AlgExpr({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "AlgExpr") -> "AlgExpr":
        return self + (-other)

    def __mul__(self, other: "AlgExpr") -> "AlgExpr":
        out = defaultdict(complex)
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                out[w1 + w2] += c1 * c2
        return AlgExpr({w: c for w, c in out.items() if c != 0})

    def scale(self, c) -> "AlgExpr":
        return AlgExpr({w: c * v for w, v in self.terms.items() if c * v != 0})

    def __pow__(self, k: int) -> "AlgExpr":
        out = AlgExpr.scalar(1)
        for _ in range(k):
            out = out * self
        return out

    def adjoint(self) -> "AlgExpr":
        swap = {"a": "A", "A": "a", "Q": "Q"}
        return AlgExpr(
            {tuple(swap[t[0]] + t[1:] for t in reversed(w)): np.conj(c) for w, c in self.terms.items()}
        )

    def max_word_length(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def tokens(self) -> set:
        return {t for w in self.terms for t in w}


_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?|i(?![A-Za-z0-9]))"
    r"|(?P<gen>[aA][1-9]\d*|[aA]0\d*)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*()^]|·)"
    r")"
)


def _tokenize(text: str):
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            pos += len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "op" and val == "·":
            val = "*"
        out.append((kind, val, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    """Recursive descent: expr := term (('+'|'-') term)*; term := factor ('*' factor)*;
    factor := ('-'|'+') factor | atom ('^' int)?; atom := number | generator | '(' expr ')'."""

    def __init__(self, text: str, modes: int | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.modes = modes

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, val):
        kind, v, pos = self.take()
        if v != val:
            raise ParseError(f"expected {val!r}, found {v or 'end of input'!r}", pos)

    def parse(self) -> AlgExpr:
        e = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {v!r}", pos)
        return e

    def expr(self) -> AlgExpr:
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            _, op, _ = self.take()
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def term(self) -> AlgExpr:
        e = self.factor()
        while self.peek()[1] == "*":
            self.take()
            e = e * self.factor()
        return e

    def factor(self) -> AlgExpr:
        kind, v, pos = self.peek()
        if v in ("-", "+"):
            self.take()
            f = self.factor()
            return -f if v == "-" else f
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, v, pos = self.take()
            if kind != "num" or not v.isdigit():
                raise ParseError("exponent must be a nonnegative integer", pos)
            base = base ** int(v)
        return base

    def atom(self) -> AlgExpr:
        kind, v, pos = self.take()
        if kind == "num":
            if v.endswith("i"):
                mag = v[:-1] or "1"
                return AlgExpr.scalar(complex(0.0, float(mag)))
            return AlgExpr.scalar(float(v))
        if kind == "gen":
            idx = int(v[1:])
            if idx < 1 or (self.modes is not None and idx > self.modes):
                raise ParseError(f"unknown generator {v!r}", pos)
            return AlgExpr.word(v)
        if kind == "name":
            if v == "I":
                return AlgExpr.scalar(1)
            if v == "Q":
                return AlgExpr.word("Q")
            raise ParseError(f"unknown generator {v!r}", pos)
        if v == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {v or 'end of input'!r}", pos)


def parse_expr(text: str, modes: int | None = None) -> AlgExpr:
    """Parse a polynomial in a1..aN, A1..AN (creations), Q and I.

    Multiplication is ``*`` or the middle dot; ``^`` takes a nonnegative
    integer; ``2i`` and ``1.5`` are scalars, so ``0.3+0.2i`` is a complex
    literal.
    """
    return _Parser(text, modes).parse()


# --- relation sets and normal forms -------------------------------------------


@dataclass(frozen=True)
class QHWRel:
    """a_i A_i = q A_i a_i + I, creations/annihilations commute among themselves.

    For i != j the pair a_i A_j is swapped with factor 1 (``cross="commute"``,
    the mode-wise realization) or q (``cross="literal"``).
    """

    q: float
    n: int = 1
    cross: str = "commute"

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise ValueError(f"q must lie in [0, 1), got {self.q}")
        if self.n < 1:
            raise ValueError("need at least one mode")
        if self.cross not in ("commute", "literal"):
            raise ValueError(f"unknown cross rule {self.cross!r}")

    @property
    def modes(self) -> int:
        return self.n


def ToeplitzRel() -> QHWRel:
    """The shift relation a A = I is the q = 0 case."""
    return QHWRel(0.0, 1)


@dataclass(frozen=True)
class RDefRel:
    """a A = R(qQ), a Q = q Q a, Q A = q A Q for a polynomial R with R(1) = 0."""

    q: float
    coeffs: tuple[float, ...]
    modes = 1

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        scale = sum(abs(c) for c in self.coeffs) or 1.0
        if abs(sum(self.coeffs)) > 1e-12 * scale:
            raise ValueError("R(1) must vanish")


@dataclass
class RewriteStats:
    steps: int = 0
    max_terms: int = 0


@dataclass(frozen=True)
class NormalForm:
    """Map (k, p, l) -> coefficient for A^k Q^p a^l (multi-indices k, l)."""

    n: int
    terms: dict

    def word(self, key) -> tuple:
        k, p, l = key
        w = []
        for i, ki in enumerate(k):
            w += [f"A{i + 1}"] * ki
        w += ["Q"] * p
        for i, li in enumerate(l):
            w += [f"a{i + 1}"] * li
        return tuple(w)

    def to_expr(self) -> AlgExpr:
        return AlgExpr({self.word(key): c for key, c in self.terms.items()})

    def keys_sorted(self):
        return sorted(self.terms, reverse=True)


def _parse_token(t: str):
    return t[0], (int(t[1:]) if len(t) > 1 else 0)


def _out_of_order(t1: str, t2: str) -> bool:
    (k1, i1), (k2, i2) = _parse_token(t1), _parse_token(t2)
    rank = {"A": 0, "Q": 1, "a": 2}
    if rank[k1] != rank[k2]:
        return rank[k1] > rank[k2]
    return i1 > i2


def _rewrite_pair(t1: str, t2: str, rel):
    """Replacement terms [(coef, tokens)] for the adjacent out-of-order pair t1 t2."""
    (k1, i1), (k2, i2) = _parse_token(t1), _parse_token(t2)
    if k1 == k2:
        return [(1.0, (t2, t1))]
    if isinstance(rel, RDefRel):
        q = rel.q
        if (k1, k2) == ("a", "A"):
            return [(c * q**p, ("Q",) * p) for p, c in enumerate(rel.coeffs) if c != 0]
        return [(q, (t2, t1))]  # aQ -> q Q a, QA -> q A Q
    if (k1, k2) == ("a", "A"):
        if i1 == i2:
            out = [(1.0, ())]
            if rel.q != 0:
                out.insert(0, (rel.q, (t2, t1)))
            return out
        return [(rel.q if rel.cross == "literal" else 1.0, (t2, t1))]
    raise ValueError(f"cannot order {t1} {t2}")


def _check_tokens(e: AlgExpr, rel):
    for t in e.tokens():
        kind, idx = _parse_token(t)
        if kind == "Q" and not isinstance(rel, RDefRel):
            raise ValueError("Q is only a generator of the R-deformed relations")
        if kind in "aA" and not 1 <= idx <= rel.modes:
            raise ValueError(f"generator {t} outside {rel.modes} mode(s)")


def normal_order(e: AlgExpr, rel, strategy: str = "leftmost", rng=None, stats: RewriteStats | None = None,
                 purge_tol: float = 1e-14) -> NormalForm:
    """Rewrite ``e`` to normal order under ``rel``.

    ``strategy`` picks which out-of-order adjacent pair is rewritten:
    ``"leftmost"``, ``"rightmost"`` or ``"random"`` (needs ``rng``).
    Coefficients below ``purge_tol`` times the largest one are dropped.
    """
    if isinstance(rel, RDefRel) and rel.modes != 1:
        raise ValueError("R-deformed relations are single-mode")
    if strategy == "random" and rng is None:
        raise ValueError("random strategy needs an rng")
    _check_tokens(e, rel)
    stats = stats if stats is not None else RewriteStats()
    pending = defaultdict(complex, e.terms)
    done = defaultdict(complex)
    while pending:
        stats.max_terms = max(stats.max_terms, len(pending))
        nxt = defaultdict(complex)
        for w, c in pending.items():
            if c == 0:
                continue
            bad = [i for i in range(len(w) - 1) if _out_of_order(w[i], w[i + 1])]
            if not bad:
                done[w] += c
                continue
            if strategy == "leftmost":
                i = bad[0]
            elif strategy == "rightmost":
                i = bad[-1]
            else:
                i = bad[int(rng.integers(len(bad)))]
            stats.steps += 1
            for coef, rep in _rewrite_pair(w[i], w[i + 1], rel):
                nxt[w[:i] + rep + w[i + 2:]] += c * coef
        pending = nxt
    n = rel.modes
    terms = {}
    for w, c in done.items():
        k, l, p = [0] * n, [0] * n, 0
        for t in w:
            kind, idx = _parse_token(t)
            if kind == "A":
                k[idx - 1] += 1
            elif kind == "a":
                l[idx - 1] += 1
            else:
                p += 1
        key = (tuple(k), p, tuple(l))
        terms[key] = terms.get(key, 0j) + c
    big = max((abs(c) for c in terms.values()), default=0.0)
    terms = {key: c for key, c in terms.items() if abs(c) > purge_tol * big and c != 0}
    return NormalForm(n, terms)


# --- evaluation -------------------------------------------------------------------


def _token_matrix(t: str, gen):
    kind, idx = _parse_token(t)
    if kind == "Q":
        if gen.Q is None:
            raise ValueError("this family has no Q operator")
        return gen.Q
    if idx > len(gen.anns):
        raise ValueError(f"generator {t} outside the {len(gen.anns)} available")
    return gen.anns[idx - 1] if kind == "a" else gen.creations[idx - 1]


def evaluate_matrix(e, gen):
    """Literal left-to-right matrix evaluation of an expression or normal form."""
    if isinstance(e, NormalForm):
        e = e.to_expr()
    D = gen.dim
    out = sp.csr_matrix((D, D), dtype=complex)
    I = sp.identity(D, dtype=complex, format="csr")
    for w, c in e.terms.items():
        M = I
        for t in w:
            M = M @ _token_matrix(t, gen)
        out = out + c * M
    return out.tocsr()


def berezin_of_normal_form(nf: NormalForm, spec, trunc, p) -> complex:
    """Symbol sum_c conj(z)^k <Q^p> z^l; Q-powers are evaluated on K(p)."""
    p = _as_point(spec, p)
    z = np.array(p.coords, dtype=complex)
    qsym = {}
    total = 0j
    for (k, pw, l), c in nf.terms.items():
        if pw not in qsym:
            if pw == 0:
                qsym[pw] = 1.0
            else:
                K = coherent_vector(spec, trunc, p)
                w = np.abs(K) ** 2
                qsym[pw] = float(np.dot(w, spec.q ** (pw * np.arange(K.size))) / w.sum())
        total += c * np.prod(np.conj(z) ** np.array(k)) * qsym[pw] * np.prod(z ** np.array(l))
    return complex(total)


# --- printing -----------------------------------------------------------------------


def _fmt_real(x: float) -> str:
    return f"{x:.17g}"


def _fmt_coef(c: complex) -> tuple[str, str]:
    """(sign, magnitude text) for a coefficient."""
    c = complex(c)
    if c.imag == 0:
        return ("-" if c.real < 0 else "+"), _fmt_real(abs(c.real))
    if c.real == 0:
        return ("-" if c.imag < 0 else "+"), _fmt_real(abs(c.imag)) + "i"
    sign = "-" if c.imag < 0 else "+"
    return "+", f"({_fmt_real(c.real)}{sign}{_fmt_real(abs(c.imag))}i)"


def _fmt_word(w: tuple) -> str:
    if not w:
        return "I"
    parts, i = [], 0
    while i < len(w):
        j = i
        while j < len(w) and w[j] == w[i]:
            j += 1
        parts.append(w[i] if j - i == 1 else f"{w[i]}^{j - i}")
        i = j
    return "·".join(parts)


def _fmt_terms(items) -> str:
    out = []
    for w, c in items:
        sign, mag = _fmt_coef(c)
        body = f"{mag}·{_fmt_word(w)}"
        if not out:
            out.append(("-" if sign == "-" else "") + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out) if out else "0"


def format_normal_form(nf: NormalForm) -> str:
    """Terms by descending (k, p, l); coefficients with 17 significant digits."""
    return _fmt_terms((nf.word(key), nf.terms[key]) for key in nf.keys_sorted())


def format_expr(e: AlgExpr) -> str:
    return _fmt_terms(sorted(e.terms.items(), key=lambda kv: (len(kv[0]), kv[0])))


# --- random expressions --------------------------------------------------------------


def random_expr(rng, rel, max_terms: int = 4, max_len: int = 6) -> AlgExpr:
    """Random sum of up to ``max_terms`` words of length <= ``max_len``.

    Draw order: term count, then per term its length, tokens, and the real
    and imaginary parts of its coefficient.
    """
    alphabet = [f"a{i + 1}" for i in range(rel.modes)] + [f"A{i + 1}" for i in range(rel.modes)]
    if isinstance(rel, RDefRel):
        alphabet.append("Q")
    e = AlgExpr({})
    for _ in range(int(rng.integers(1, max_terms + 1))):
        length = int(rng.integers(0, max_len + 1))
        w = tuple(alphabet[int(i)] for i in rng.integers(0, len(alphabet), size=length))
        c = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        e = e + AlgExpr({w: c})
    return e
