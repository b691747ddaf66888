"""Sparse multivariate polynomials with rational coefficients.

A monomial is a sorted tuple of variable names with repetition
(``("c5", "c5", "c13")`` is ``c5^2*c13``).  Variables sort in natural order,
so ``c5`` precedes ``c13``.  Terms print by degree, then lexicographically.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Union

Monomial = tuple[str, ...]
Number = Union[int, Fraction]

_CHUNK = re.compile(r"(\d+)")


def natural_key(name: str) -> tuple:
    parts = _CHUNK.split(name)
    return tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in parts if p != "")


def monomial_key(mono: Monomial) -> tuple:
    return (len(mono), tuple(natural_key(v) for v in mono))


def _mono(names: Iterable[str]) -> Monomial:
    return tuple(sorted(names, key=natural_key))


class Polynomial:
    """Immutable canonical polynomial: zero coefficients are never stored."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        clean: dict[Monomial, Fraction] = {}
        for mono, coeff in (terms or {}).items():
            key = _mono(mono)
            c = clean.get(key, Fraction(0)) + Fraction(coeff)
            if c:
                clean[key] = c
            else:
                clean.pop(key, None)
        self._terms = dict(sorted(clean.items(), key=lambda kv: monomial_key(kv[0])))
        self._hash = None

    @classmethod
    def const(cls, value: Number) -> Polynomial:
        return cls({(): value})

    @classmethod
    def var(cls, name: str) -> Polynomial:
        return cls({(name,): 1})

    @classmethod
    def parse(cls, text: str) -> Polynomial:
        return _Parser(text).parse()

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def variables(self) -> set[str]:
        return {v for mono in self._terms for v in mono}

    def degree(self) -> int:
        return max((len(m) for m in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    @staticmethod
    def _coerce(other) -> Polynomial:
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                key = _mono(m1 + m2)
                out[key] = out.get(key, Fraction(0)) + c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        result = Polynomial.const(1)
        for _ in range(n):
            result = result * self
        return result

    def multilinear(self) -> Polynomial:
        """Apply ``x^2 -> x`` to every variable (0/1-valued indicator algebra)."""
        out: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            key = tuple(dict.fromkeys(m))
            out[key] = out.get(key, Fraction(0)) + c
        return Polynomial(out)

    def evaluate(self, values: Mapping[str, float]) -> float:
        total = 0.0
        for mono, c in self._terms.items():
            term = float(c)
            for v in mono:
                term *= values[v]
            total += term
        return total

    def substitute(self, bindings: Mapping[str, Union[int, str]]) -> Polynomial:
        """Simultaneous substitution of 0, 1 or another variable name."""
        out: dict[Monomial, Fraction] = {}
        for mono, c in self._terms.items():
            names: list[str] = []
            dead = False
            for v in mono:
                b = bindings.get(v, v)
                if isinstance(b, str):
                    names.append(b)
                elif b == 0:
                    dead = True
                    break
                elif b == 1:
                    continue
                else:
                    raise ValueError(f"binding for {v!r} must be 0, 1 or a variable name, got {b!r}")
            if dead:
                continue
            key = _mono(names)
            out[key] = out.get(key, Fraction(0)) + c
        return Polynomial(out)

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for i, (mono, c) in enumerate(self._terms.items()):
            body = _format_monomial(mono)
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if not body:
                text = str(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{mag}*{body}"
            if i == 0:
                parts.append(text if sign == "+" else "-" + text)
            else:
                parts.append(f" {sign} {text}")
        return "".join(parts)

    def __repr__(self):
        return f"Polynomial({str(self)!r})"


def _format_monomial(mono: Monomial) -> str:
    out = []
    i = 0
    while i < len(mono):
        j = i
        while j < len(mono) and mono[j] == mono[i]:
            j += 1
        n = j - i
        out.append(mono[i] if n == 1 else f"{mono[i]}^{n}")
        i = j
    return "*".join(out)


_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(.))")


class _Parser:
    """Recursive descent over ``+ - * ^ ( )``, integers, fractions and names.

    Juxtaposition multiplies, so ``c14c15`` is not accepted but ``c14 c15``
    and ``c14*c15`` are.
    """

    def __init__(self, text: str):
        self.tokens = []
        for num, name, op in _TOKEN.findall(text):
            if num:
                self.tokens.append(("num", Fraction(num)))
            elif name:
                self.tokens.append(("name", name))
            elif op.strip():
                self.tokens.append(("op", op))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self) -> Polynomial:
        if not self.tokens:
            return Polynomial()
        p = self.expr()
        if self.pos != len(self.tokens):
            raise ValueError(f"unexpected token {self.peek()[1]!r}")
        return p

    def expr(self):
        sign = 1
        if self.peek() == ("op", "-"):
            self.take()
            sign = -1
        p = self.term() * sign
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.power()
        while True:
            kind, val = self.peek()
            if (kind, val) == ("op", "*"):
                self.take()
                p = p * self.power()
            elif kind in ("num", "name") or (kind, val) == ("op", "("):
                p = p * self.power()
            else:
                return p

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind != "num" or val.denominator != 1:
                raise ValueError("exponent must be a non-negative integer")
            return base ** int(val)
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return Polynomial.const(val)
        if kind == "name":
            return Polynomial.var(val)
        if (kind, val) == ("op", "("):
            p = self.expr()
            if self.take() != ("op", ")"):
                raise ValueError("missing ')'")
            return p
        raise ValueError(f"unexpected token {val!r}")
