"""Exact coefficient rings: rationals (gmpy2.mpq) and first-order dual numbers."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

Scalar = mpq

_SCALAR_TYPES = (int, type(mpq(0)))


def scalar(value) -> mpq:
    """Coerce ints, Fractions, mpq or strings like ``"-3/4"`` to an exact rational.

    Floats are rejected unless they are exactly representable halves/quarters
    etc.; we never silently round.
    """
    if isinstance(value, type(mpq(0))):
        return value
    if isinstance(value, bool):
        raise TypeError("refusing to coerce bool to a rational")
    if isinstance(value, int):
        return mpq(value)
    if isinstance(value, (Fraction, Rational)):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational literal")
        return mpq(text)
    if isinstance(value, float):
        frac = Fraction(value)
        if frac.denominator > 1 << 20:
            raise ValueError(f"float {value!r} is not an exact short rational")
        return mpq(frac.numerator, frac.denominator)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_scalar(q) -> str:
    q = scalar(q)
    return str(q)


class Dual:
    """``value + eps*ε`` with ε² = 0 and rational parts."""

    __slots__ = ("value", "eps")

    def __init__(self, value=0, eps=0):
        self.value = scalar(value)
        self.eps = scalar(eps)

    @staticmethod
    def _lift(other):
        if isinstance(other, Dual):
            return other
        if isinstance(other, _SCALAR_TYPES):
            return Dual(other, 0)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return Dual(self.value + o.value, self.eps + o.eps)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return Dual(self.value - o.value, self.eps - o.eps)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return Dual(o.value - self.value, o.eps - self.eps)

    def __neg__(self):
        return Dual(-self.value, -self.eps)

    def __mul__(self, other):
        if isinstance(other, _SCALAR_TYPES):
            return Dual(self.value * other, self.eps * other)
        if isinstance(other, Dual):
            return Dual(self.value * other.value,
                        self.value * other.eps + self.eps * other.value)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, _SCALAR_TYPES):
            return Dual(self.value / other, self.eps / other)
        if isinstance(other, Dual):
            if not other.value:
                raise ZeroDivisionError("division by a pure-ε dual number")
            inv = 1 / other.value
            return Dual(self.value * inv,
                        (self.eps * other.value - self.value * other.eps) * inv * inv)
        return NotImplemented

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o / self

    def __bool__(self):
        return bool(self.value) or bool(self.eps)

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self.value == o.value and self.eps == o.eps

    def __hash__(self):
        if not self.eps:
            return hash(self.value)
        return hash((self.value, self.eps))

    def __repr__(self):
        return f"Dual({self.value}, {self.eps})"


def value_part(c):
    return c.value if isinstance(c, Dual) else c


def eps_part(c):
    return c.eps if isinstance(c, Dual) else mpq(0)


def format_coeff(c):
    if isinstance(c, Dual):
        return {"value": format_scalar(c.value), "eps": format_scalar(c.eps)}
    return format_scalar(c)


def parse_coeff(obj):
    if isinstance(obj, dict):
        return Dual(scalar(obj["value"]), scalar(obj["eps"]))
    return scalar(obj)
