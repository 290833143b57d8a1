"""Initial data as real 1-periodic trigonometric polynomials.

Grammar (whitespace-insensitive)::

    expr := ['+'|'-'] term (('+'|'-') term)*
    term := number | [number ['*']] func
    func := ('sin'|'cos') '(' integer ['*'] 'pi' ['*'] 'x' ')'

The integer in front of ``pi`` must be even: ``2k`` selects harmonic ``k``
on the period-1 circle.

>>> parse_init("0.5 + 0.2*cos(4*pi*x) - sin(2 pi x)").terms
(('const', 0.5, 0), ('cos', 0.2, 2), ('sin', -1.0, 1))
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InitSyntaxError, ResolutionError
from .spectral import SpectralField, dealias_cutoff

MAX_AMPLITUDE = 1e6

_KIND_ORDER = {"const": 0, "cos": 1, "sin": 2}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>sin|cos|pi|x)
  | (?P<op>[-+*()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class InitExpr:
    """Normalized term list: ``(kind, amplitude, harmonic)`` tuples sorted by
    kind then harmonic, with amplitudes merged and zero terms dropped."""

    terms: tuple = ()

    def __post_init__(self):
        for kind, amp, k in self.terms:
            if kind not in _KIND_ORDER:
                raise ValueError(f"unknown term kind {kind!r}")
            if not math.isfinite(amp):
                raise ValueError("amplitudes must be finite")
            if kind == "const" and k != 0:
                raise ValueError("constant terms carry harmonic 0")
            if kind != "const" and k < 1:
                raise ValueError("sin/cos terms need harmonic >= 1")

    @classmethod
    def from_terms(cls, terms) -> "InitExpr":
        merged: dict = {}
        for kind, amp, k in terms:
            key = (kind, int(k))
            merged[key] = merged.get(key, 0.0) + float(amp)
        items = sorted(merged.items(), key=lambda kv: (_KIND_ORDER[kv[0][0]], kv[0][1]))
        return cls(tuple((kind, amp, k) for (kind, k), amp in items if amp != 0.0))

    def __add__(self, other: "InitExpr") -> "InitExpr":
        return InitExpr.from_terms(self.terms + other.terms)

    @property
    def max_harmonic(self) -> int:
        return max((k for _, _, k in self.terms), default=0)

    def serialize(self) -> str:
        """Canonical text form; ``parse_init(e.serialize()) == e``."""
        if not self.terms:
            return "0"
        parts = []
        for i, (kind, amp, k) in enumerate(self.terms):
            sign = "-" if amp < 0 else "+"
            mag = repr(abs(amp))
            body = mag if kind == "const" else f"{mag}*{kind}({2 * k}*pi*x)"
            if i == 0:
                parts.append(body if sign == "+" else "-" + body)
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)

    def __str__(self):
        return self.serialize()


def _tokenize(text: str):
    pos = 0
    tokens = []
    raw = text.encode("utf-8")
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            offset = len(text[:pos].encode("utf-8"))
            raise InitSyntaxError(f"unexpected character {text[pos]!r}", offset)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), len(text[: m.start()].encode("utf-8"))))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, text: str, max_harmonic):
        self.tokens = _tokenize(text)
        self.i = 0
        self.max_harmonic = max_harmonic

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind, value=None):
        t = self.tok
        if t[0] != kind or (value is not None and t[1] != value):
            want = value if value is not None else kind
            got = t[1] or "end of input"
            raise InitSyntaxError(f"expected {want!r}, got {got!r}", t[2])
        return self.advance()

    def accept_op(self, value) -> bool:
        if self.tok[0] == "op" and self.tok[1] == value:
            self.advance()
            return True
        return False

    def parse(self):
        terms = []
        sign = 1.0
        if self.accept_op("-"):
            sign = -1.0
        else:
            self.accept_op("+")
        terms.append(self.term(sign))
        while self.tok[0] == "op" and self.tok[1] in "+-":
            sign = -1.0 if self.advance()[1] == "-" else 1.0
            terms.append(self.term(sign))
        if self.tok[0] != "end":
            raise InitSyntaxError(f"unexpected {self.tok[1]!r}", self.tok[2])
        return terms

    def term(self, sign):
        amp = 1.0
        t = self.tok
        if t[0] == "number":
            self.advance()
            amp = float(t[1])
            if not math.isfinite(amp) or abs(amp) > MAX_AMPLITUDE:
                raise InitSyntaxError(f"amplitude {t[1]} exceeds {MAX_AMPLITUDE:g}", t[2])
            had_star = self.accept_op("*")
            if self.tok[0] == "name" and self.tok[1] in ("sin", "cos"):
                return self.func(sign * amp)
            if had_star:
                raise InitSyntaxError("expected 'sin' or 'cos' after '*'", self.tok[2])
            return ("const", sign * amp, 0)
        if t[0] == "name" and t[1] in ("sin", "cos"):
            return self.func(sign * amp)
        got = t[1] or "end of input"
        raise InitSyntaxError(f"expected a number or sin/cos, got {got!r}", t[2])

    def func(self, amp):
        kind = self.advance()[1]
        self.expect("op", "(")
        num = self.tok
        if num[0] != "number" or not num[1].isdigit():
            raise InitSyntaxError("expected an integer multiple of pi", num[2])
        self.advance()
        mult = int(num[1])
        if mult % 2:
            raise InitSyntaxError(f"{mult}*pi*x is not 1-periodic; use an even multiple", num[2])
        harmonic = mult // 2
        if harmonic < 1:
            raise InitSyntaxError("harmonic must be at least 1", num[2])
        if self.max_harmonic is not None and harmonic > self.max_harmonic:
            raise InitSyntaxError(
                f"harmonic {harmonic} exceeds the limit {self.max_harmonic}", num[2]
            )
        self.accept_op("*")
        self.expect("name", "pi")
        self.accept_op("*")
        self.expect("name", "x")
        self.expect("op", ")")
        return (kind, amp, harmonic)


def parse_init(text: str, n_modes: int | None = None) -> InitExpr:
    """Parse ``text`` into a normalized :class:`InitExpr`.

    If ``n_modes`` is given, harmonics above the dealiasing cutoff ``N/3``
    are rejected at parse time.
    """
    limit = dealias_cutoff(n_modes) if n_modes is not None else None
    return InitExpr.from_terms(_Parser(text, limit).parse())


def realize(expr: InitExpr, n_modes: int) -> SpectralField:
    """Place the coefficients exactly: ``cos k -> 1/2`` at ``+-k``,
    ``sin k -> -i/2`` at ``+k`` (``+i/2`` at ``-k``), constants at mode 0."""
    cutoff = dealias_cutoff(n_modes)
    c = np.zeros(n_modes // 2 + 1, dtype=np.complex128)
    for kind, amp, k in expr.terms:
        if k > cutoff:
            raise ResolutionError(
                f"harmonic {k} exceeds the dealiasing cutoff {cutoff} for N={n_modes}", k
            )
        if kind == "const":
            c[0] += amp
        elif kind == "cos":
            c[k] += 0.5 * amp
        else:
            c[k] += -0.5j * amp
    return SpectralField(c)
