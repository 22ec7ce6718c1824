"""Exact polynomials in (z, conj z) with Gaussian-rational coefficients."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np


def to_fraction(x) -> Fraction:
    """Convert an int, Fraction, decimal string or float to an exact Fraction.

    Floats are read through their shortest decimal representation, so 0.1
    becomes 1/10 rather than the nearest binary fraction.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ValueError(f"non-finite coefficient {x!r}")
        return Fraction(repr(float(x)))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


@dataclass(frozen=True)
class QQi:
    """Gaussian rational re + i*im with exact Fraction parts."""

    re: Fraction
    im: Fraction = Fraction(0)

    @staticmethod
    def of(x) -> "QQi":
        if isinstance(x, QQi):
            return x
        if isinstance(x, (complex, np.complexfloating)):
            return QQi(to_fraction(float(x.real)), to_fraction(float(x.imag)))
        return QQi(to_fraction(x))

    def __add__(self, other):
        o = QQi.of(other)
        return QQi(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-QQi.of(other))

    def __rsub__(self, other):
        return QQi.of(other) - self

    def __mul__(self, other):
        o = QQi.of(other)
        return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = QQi.of(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero coefficient")
        return self * QQi(o.re / den, -o.im / den)

    def conjugate(self) -> "QQi":
        return QQi(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def is_real(self) -> bool:
        return self.im == 0

    def __str__(self):
        return format_coeff(self)


ZERO = QQi(Fraction(0))
ONE = QQi(Fraction(1))
I_UNIT = QQi(Fraction(0), Fraction(1))


def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_coeff(c: QQi) -> str:
    """Parenthesised, parseable representation of a coefficient."""
    if c.im == 0:
        if c.re.denominator == 1 and c.re >= 0:
            return str(c.re.numerator)
        return f"({_frac_str(c.re)})"
    if c.re == 0:
        return f"({_frac_str(c.im)}*i)"
    sign = "+" if c.im > 0 else "-"
    return f"({_frac_str(c.re)} {sign} {_frac_str(abs(c.im))}*i)"


Key = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class Monomial:
    """coeff * prod z_j^holo[j] * conj(z_j)^anti[j]."""

    coeff: QQi
    holo: tuple[int, ...]
    anti: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.holo) + sum(self.anti)


class InteractionPoly:
    """Finite sum of monomials in l complex variables and their conjugates.

    Instances are immutable and kept in canonical form: no zero coefficients,
    monomials sorted by exponent pair.
    """

    __slots__ = ("l", "_terms")

    def __init__(self, l: int, terms: Mapping[Key, QQi] | Iterable[Monomial] = ()):
        if l < 1:
            raise ValueError("number of variables must be positive")
        self.l = int(l)
        acc: dict[Key, QQi] = {}
        if isinstance(terms, Mapping):
            items = terms.items()
        else:
            items = (((m.holo, m.anti), m.coeff) for m in terms)
        for (a, b), c in items:
            a, b = tuple(int(x) for x in a), tuple(int(x) for x in b)
            if len(a) != self.l or len(b) != self.l or min(a + b) < 0:
                raise ValueError(f"bad exponent vectors {a}, {b} for l={self.l}")
            acc[(a, b)] = acc.get((a, b), ZERO) + QQi.of(c)
        self._terms = {k: acc[k] for k in sorted(acc) if acc[k]}

    # construction helpers
    @classmethod
    def constant(cls, l: int, c) -> "InteractionPoly":
        z = (0,) * l
        return cls(l, {(z, z): QQi.of(c)})

    @classmethod
    def variable(cls, l: int, j: int, conjugate: bool = False) -> "InteractionPoly":
        e = tuple(1 if i == j else 0 for i in range(l))
        z = (0,) * l
        return cls(l, {((z, e) if conjugate else (e, z)): ONE})

    # basic protocol
    @property
    def terms(self) -> dict[Key, QQi]:
        return dict(self._terms)

    @property
    def monomials(self) -> tuple[Monomial, ...]:
        return tuple(Monomial(c, a, b) for (a, b), c in self._terms.items())

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, InteractionPoly):
            return NotImplemented
        return self.l == other.l and self._terms == other._terms

    def __hash__(self):
        return hash((self.l, tuple(self._terms.items())))

    def is_zero(self) -> bool:
        return not self._terms

    def degrees(self) -> set[int]:
        return {sum(a) + sum(b) for a, b in self._terms}

    def is_homogeneous(self, d: int) -> bool:
        return all(sum(a) + sum(b) == d for a, b in self._terms)

    def _check(self, other: "InteractionPoly"):
        if other.l != self.l:
            raise ValueError("polynomials in different numbers of variables")

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, InteractionPoly):
            other = InteractionPoly.constant(self.l, other)
        self._check(other)
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, ZERO) + c
        return InteractionPoly(self.l, acc)

    __radd__ = __add__

    def __neg__(self):
        return InteractionPoly(self.l, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, InteractionPoly):
            c = QQi.of(other)
            return InteractionPoly(self.l, {k: v * c for k, v in self._terms.items()})
        self._check(other)
        acc: dict[Key, QQi] = {}
        for (a1, b1), c1 in self._terms.items():
            for (a2, b2), c2 in other._terms.items():
                key = (tuple(x + y for x, y in zip(a1, a2)), tuple(x + y for x, y in zip(b1, b2)))
                acc[key] = acc.get(key, ZERO) + c1 * c2
        return InteractionPoly(self.l, acc)

    __rmul__ = __mul__

    def __pow__(self, p: int):
        if not isinstance(p, int) or p < 0:
            raise ValueError("only non-negative integer powers are polynomial")
        out = InteractionPoly.constant(self.l, 1)
        for _ in range(p):
            out = out * self
        return out

    def conj(self) -> "InteractionPoly":
        """Complex conjugate: conjugate coefficients and swap z with conj z."""
        return InteractionPoly(self.l, {(b, a): c.conjugate() for (a, b), c in self._terms.items()})

    def real_part(self) -> "InteractionPoly":
        return (self + self.conj()) * QQi(Fraction(1, 2))

    def imag_part(self) -> "InteractionPoly":
        """(P - conj P)/(2i), the polynomial whose values are Im P."""
        return (self - self.conj()) * QQi(Fraction(0), Fraction(-1, 2))

    def as_constant(self) -> QQi | None:
        if not self._terms:
            return ZERO
        if len(self._terms) == 1:
            (a, b), c = next(iter(self._terms.items()))
            if sum(a) + sum(b) == 0:
                return c
        return None

    # calculus
    def wirtinger(self, j: int, conjugate: bool = False) -> "InteractionPoly":
        """d/dz_j (or d/dconj(z_j) when conjugate=True), treating z and conj z as independent."""
        if not 0 <= j < self.l:
            raise IndexError(f"variable index {j} out of range for l={self.l}")
        acc: dict[Key, QQi] = {}
        for (a, b), c in self._terms.items():
            e = b if conjugate else a
            if e[j] == 0:
                continue
            e2 = tuple(x - 1 if i == j else x for i, x in enumerate(e))
            key = (a, e2) if conjugate else (e2, b)
            acc[key] = acc.get(key, ZERO) + c * e[j]
        return InteractionPoly(self.l, acc)

    def restrict_real(self) -> dict[tuple[int, ...], QQi]:
        """Coefficients of the polynomial obtained by setting z = conj z = y real."""
        acc: dict[tuple[int, ...], QQi] = {}
        for (a, b), c in self._terms.items():
            e = tuple(x + y for x, y in zip(a, b))
            acc[e] = acc.get(e, ZERO) + c
        return {e: c for e, c in acc.items() if c}

    # numerics
    def __call__(self, z) -> np.ndarray:
        """Evaluate on z of shape (l, ...) and return a complex array of shape (...)."""
        z = np.asarray(z, dtype=complex)
        if z.shape[0] != self.l:
            raise ValueError(f"expected leading dimension {self.l}, got {z.shape[0]}")
        zc = np.conj(z)
        powers: dict[tuple[int, int, bool], np.ndarray] = {}

        def pw(j, p, c):
            key = (j, p, c)
            if key not in powers:
                base = zc[j] if c else z[j]
                powers[key] = base if p == 1 else base ** p
            return powers[key]

        out = np.zeros(z.shape[1:], dtype=complex)
        for (a, b), c in self._terms.items():
            term = None
            for j in range(self.l):
                for p, cj in ((a[j], False), (b[j], True)):
                    if p:
                        term = pw(j, p, cj) if term is None else term * pw(j, p, cj)
            cc = complex(c)
            out = out + (cc if term is None else cc * term)
        return out

    # text
    def __str__(self):
        return self.pretty()

    def __repr__(self):
        return f"InteractionPoly(l={self.l}, '{self.pretty()}')"

    def pretty(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (a, b), c in self._terms.items():
            factors = []
            for j in range(self.l):
                if a[j]:
                    factors.append(f"z{j + 1}" + (f"^{a[j]}" if a[j] > 1 else ""))
            for j in range(self.l):
                if b[j]:
                    factors.append(f"conj(z{j + 1})" + (f"^{b[j]}" if b[j] > 1 else ""))
            if c == ONE and factors:
                s = "*".join(factors)
            elif c == -ONE and factors:
                s = "-" + "*".join(factors)
            else:
                s = "*".join([format_coeff(c)] + factors)
            parts.append(s)
        out = parts[0]
        for s in parts[1:]:
            out += (" - " + s[1:]) if s.startswith("-") else (" + " + s)
        return out
