"""Weight-truncated multivariate polynomials and matrix z-series over an exact ring.

Variables are ``x[color, level]`` with weight ``level``; polynomials in the flat
coordinates use the same machinery with ``symbol="t"`` and level 1 only.

A :class:`TruncPoly` knows the weight ``trust`` up to which its coefficients
are exact.  Every operation propagates trust by the min-rule, so comparisons
are only ever made on coefficients that are actually known.
"""

from __future__ import annotations

import re
from functools import lru_cache
from itertools import product as iproduct

from gmpy2 import mpq

from .errors import NonInvertibleFlatMap, NonUnitConstantTerm, StructuralError, TrustExceeded
from .rings import Dual, eps_part, format_coeff, parse_coeff, value_part

ONE = ()


@lru_cache(maxsize=None)
def mono_weight(m) -> int:
    return sum(level * e for (_, level), e in m)


@lru_cache(maxsize=1 << 18)
def mono_mul(a, b):
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def mono_from_vars(*vars_):
    d = {}
    for v in vars_:
        d[v] = d.get(v, 0) + 1
    return tuple(sorted(d.items()))


def format_monomial(m, symbol="x") -> str:
    if not m:
        return "1"
    parts = []
    for (c, l), e in m:
        name = f"t[{c}]" if symbol == "t" else f"x[{c},{l}]"
        parts.append(name if e == 1 else f"{name}^{e}")
    return "*".join(parts)


_VAR_RE = re.compile(r"^([xt])\[(\d+)(?:,(\d+))?\](?:\^(\d+))?$")


def parse_monomial(text: str):
    text = text.strip()
    if text == "1":
        return ONE
    d = {}
    for part in text.split("*"):
        match = _VAR_RE.match(part.strip())
        if not match:
            raise ValueError(f"bad monomial factor {part!r}")
        sym, c, l, e = match.groups()
        level = int(l) if l is not None else 1
        if sym == "t" and l is not None:
            raise ValueError("t variables carry no level")
        var = (int(c), level)
        d[var] = d.get(var, 0) + (int(e) if e else 1)
    return tuple(sorted(d.items()))


class TruncPoly:
    """Polynomial in ``x[i,k]`` exact for all monomials of weight <= ``trust``."""

    __slots__ = ("coeffs", "trust", "n", "symbol")

    def __init__(self, coeffs=None, trust=0, n=1, symbol="x", *, clean=True):
        if trust < 0:
            raise ValueError("trust weight must be >= 0")
        self.trust = trust
        self.n = n
        self.symbol = symbol
        if coeffs is None:
            self.coeffs = {}
        elif clean:
            self.coeffs = {m: c for m, c in coeffs.items()
                           if c and mono_weight(m) <= trust}
        else:
            self.coeffs = coeffs

    # construction ---------------------------------------------------------
    @classmethod
    def zero(cls, n, trust, symbol="x"):
        return cls({}, trust, n, symbol, clean=False)

    @classmethod
    def const(cls, c, n, trust, symbol="x"):
        return cls({ONE: c} if c else {}, trust, n, symbol, clean=False)

    @classmethod
    def one(cls, n, trust, symbol="x"):
        return cls.const(mpq(1), n, trust, symbol)

    @classmethod
    def var(cls, color, level=1, *, n, trust, symbol="x", coeff=mpq(1)):
        if not 1 <= color <= n:
            raise StructuralError(f"color {color} outside 1..{n}")
        if level < 1:
            raise ValueError("levels start at 1")
        return cls({((((color, level), 1),)): coeff}, trust, n, symbol)

    def _check(self, other):
        if self.n != other.n:
            raise StructuralError(f"mismatched number of colors: {self.n} vs {other.n}")

    def _wrap(self, coeffs, trust=None):
        return TruncPoly(coeffs, self.trust if trust is None else trust, self.n,
                         self.symbol, clean=False)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, TruncPoly):
            self._check(other)
            trust = min(self.trust, other.trust)
            out = {m: c for m, c in self.coeffs.items() if mono_weight(m) <= trust}
            for m, c in other.coeffs.items():
                if mono_weight(m) > trust:
                    continue
                s = out.get(m)
                s = c if s is None else s + c
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
            return self._wrap(out, trust)
        if other == 0:
            return self
        return self + TruncPoly.const(other, self.n, self.trust, self.symbol)

    __radd__ = __add__

    def __neg__(self):
        return self._wrap({m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TruncPoly):
            self._check(other)
            trust = min(self.trust, other.trust)
            out = {}
            b_items = [(m, mono_weight(m), c) for m, c in other.coeffs.items()]
            for ma, ca in self.coeffs.items():
                wa = mono_weight(ma)
                if wa > trust:
                    continue
                for mb, wb, cb in b_items:
                    if wa + wb > trust:
                        continue
                    m = mono_mul(ma, mb)
                    s = out.get(m)
                    s = ca * cb if s is None else s + ca * cb
                    if s:
                        out[m] = s
                    else:
                        out.pop(m, None)
            return self._wrap(out, trust)
        if not other:
            return self._wrap({})
        return self._wrap({m: c * other for m, c in self.coeffs.items() if c * other})

    def __rmul__(self, other):
        if not other:
            return self._wrap({})
        return self._wrap({m: other * c for m, c in self.coeffs.items() if other * c})

    def __truediv__(self, other):
        if isinstance(other, TruncPoly):
            return self * other.invert()
        return self._wrap({m: c / other for m, c in self.coeffs.items()})

    def __pow__(self, e: int):
        if e < 0:
            return self.invert() ** (-e)
        result = TruncPoly.one(self.n, self.trust, self.symbol)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    # comparison -----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, TruncPoly):
            return (self.n == other.n and self.trust == other.trust
                    and self.coeffs == other.coeffs)
        if other == 0:
            return not self.coeffs
        return NotImplemented

    __hash__ = None

    def agrees_with(self, other, trust=None) -> bool:
        """Coefficient equality on all weights up to the common trust."""
        return (self - other).is_zero(trust)

    def is_zero(self, trust=None) -> bool:
        if trust is None:
            return not self.coeffs
        return all(mono_weight(m) > trust for m in self.coeffs)

    def __bool__(self):
        return bool(self.coeffs)

    def first_nonzero(self):
        if not self.coeffs:
            return None
        m = min(self.coeffs, key=lambda k: (mono_weight(k), k))
        return format_monomial(m, self.symbol)

    # structure ------------------------------------------------------------
    def constant_term(self):
        return self.coeffs.get(ONE, mpq(0))

    def coefficient(self, m):
        if isinstance(m, str):
            m = parse_monomial(m)
        if mono_weight(m) > self.trust:
            raise TrustExceeded(f"monomial {format_monomial(m, self.symbol)} beyond trust {self.trust}")
        return self.coeffs.get(m, mpq(0))

    def truncate(self, trust):
        if trust >= self.trust:
            return self
        return TruncPoly(self.coeffs, trust, self.n, self.symbol)

    def with_trust(self, trust):
        """Raise the declared trust; only valid when the caller knows the poly is exact."""
        return TruncPoly(dict(self.coeffs), trust, self.n, self.symbol, clean=False)

    def restrict(self, mode: str):
        if mode == "all":
            return self
        if mode == "odd":
            keep = lambda m: all(l % 2 == 1 for (_, l), _e in m)
        elif mode == "x1":
            keep = lambda m: all(l == 1 for (_, l), _e in m)
        else:
            raise ValueError(f"unknown restriction mode {mode!r}")
        return self._wrap({m: c for m, c in self.coeffs.items() if keep(m)})

    def derivative(self, color, level=1):
        var = (color, level)
        out = {}
        for m, c in self.coeffs.items():
            d = dict(m)
            e = d.get(var)
            if not e:
                continue
            if e == 1:
                del d[var]
            else:
                d[var] = e - 1
            out[tuple(sorted(d.items()))] = c * e
        return self._wrap(out, max(self.trust - level, 0))

    def map_coeffs(self, fn):
        return TruncPoly({m: fn(c) for m, c in self.coeffs.items()}, self.trust, self.n, self.symbol)

    def value_part(self):
        return self.map_coeffs(value_part)

    def eps_part(self):
        return self.map_coeffs(eps_part)

    def lift_dual(self):
        return self.map_coeffs(lambda c: c if isinstance(c, Dual) else Dual(c, 0))

    def rename(self, symbol):
        return TruncPoly(self.coeffs, self.trust, self.n, symbol, clean=False)

    def invert(self):
        """Multiplicative inverse; the constant term must be exactly 1."""
        c0 = self.constant_term()
        if value_part(c0) != 1:
            raise NonUnitConstantTerm(f"constant term {c0!r} is not 1")
        if c0 != 1:
            # dual unit 1 + cε: divide it out first
            inv0 = 1 / c0
            return (self * inv0).invert() * inv0
        u = TruncPoly.one(self.n, self.trust, self.symbol) - self
        result = TruncPoly.one(self.n, self.trust, self.symbol)
        power = result
        for _ in range(self.trust):
            power = power * u
            if not power:
                break
            result = result + power
        return result

    def max_weight(self):
        return max((mono_weight(m) for m in self.coeffs), default=-1)

    # serialisation --------------------------------------------------------
    def to_json(self):
        terms = {format_monomial(m, self.symbol): format_coeff(c)
                 for m, c in sorted(self.coeffs.items(), key=lambda kv: (mono_weight(kv[0]), kv[0]))}
        return {"n": self.n, "trust": self.trust, "symbol": self.symbol, "terms": terms}

    @classmethod
    def from_json(cls, obj):
        coeffs = {parse_monomial(k): parse_coeff(v) for k, v in obj["terms"].items()}
        return cls(coeffs, obj["trust"], obj["n"], obj.get("symbol", "x"))

    def __repr__(self):
        if not self.coeffs:
            return f"TruncPoly(0; trust={self.trust})"
        body = " + ".join(f"({c})*{format_monomial(m, self.symbol)}"
                          for m, c in sorted(self.coeffs.items(),
                                             key=lambda kv: (mono_weight(kv[0]), kv[0])))
        return f"TruncPoly({body}; trust={self.trust})"


# ---------------------------------------------------------------------------
# polynomial matrices (tuples of tuples of TruncPoly)


def pmat_zero(n, trust, symbol="x"):
    z = TruncPoly.zero(n, trust, symbol)
    return tuple(tuple(z for _ in range(n)) for _ in range(n))


def pmat_identity(n, trust, symbol="x"):
    return tuple(tuple(TruncPoly.const(mpq(1) if i == j else mpq(0), n, trust, symbol)
                       for j in range(n)) for i in range(n))


def pmat_from_scalars(M, n, trust, symbol="x"):
    return tuple(tuple(TruncPoly.const(M[i][j], n, trust, symbol) for j in range(n))
                 for i in range(n))


def pmat_add(A, B):
    return tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def pmat_sub(A, B):
    return tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def pmat_neg(A):
    return tuple(tuple(-a for a in row) for row in A)


def pmat_scale(A, c):
    return tuple(tuple(a * c for a in row) for row in A)


def pmat_transpose(A):
    return tuple(zip(*A))


def pmat_mul(A, B):
    n, m, p = len(A), len(B), len(B[0])
    if len(A[0]) != m:
        raise StructuralError("matrix dimension mismatch")
    out = []
    for i in range(n):
        row = []
        for k in range(p):
            acc = A[i][0] * B[0][k]
            for j in range(1, m):
                acc = acc + A[i][j] * B[j][k]
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def pmat_smul(A, S):
    """Poly matrix times scalar matrix."""
    n, m = len(A), len(S)
    p = len(S[0])
    out = []
    for i in range(n):
        row = []
        for k in range(p):
            acc = A[i][0] * S[0][k]
            for j in range(1, m):
                if S[j][k]:
                    acc = acc + A[i][j] * S[j][k]
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def smat_pmul(S, A):
    """Scalar matrix times poly matrix."""
    return pmat_transpose(pmat_smul(pmat_transpose(A), [list(r) for r in zip(*S)]))


def pmat_sum_entries(A):
    acc = None
    for row in A:
        for a in row:
            acc = a if acc is None else acc + a
    return acc


def pmat_is_zero(A, trust=None):
    return all(a.is_zero(trust) for row in A for a in row)


def pmat_first_nonzero(A):
    for i, row in enumerate(A):
        for j, a in enumerate(row):
            if a:
                return f"[{i + 1}][{j + 1}] {a.first_nonzero()}"
    return None


def pmat_map(A, fn):
    return tuple(tuple(fn(a) for a in row) for row in A)


def pmat_inverse(M):
    """Inverse of a polynomial matrix whose constant part is invertible."""
    n = len(M)
    C = [[M[i][j].constant_term() for j in range(n)] for i in range(n)]
    Cinv = inverse_scalar_matrix(C)
    trust = min(a.trust for row in M for a in row)
    nn = M[0][0].n
    sym = M[0][0].symbol
    CinvP = pmat_from_scalars(Cinv, nn, trust, sym)
    # M = C (I + C^-1 N)  =>  M^-1 = sum_k (-C^-1 N)^k C^-1
    N = pmat_sub(M, pmat_from_scalars(C, nn, trust, sym))
    X = pmat_neg(pmat_mul(CinvP, N))
    result = CinvP
    power = CinvP
    for _ in range(trust):
        power = pmat_mul(X, power)
        if pmat_is_zero(power):
            break
        result = pmat_add(result, power)
    return result


def inverse_scalar_matrix(M):
    """Exact Gauss-Jordan inverse over mpq or dual numbers.

    Pivots need a nonzero value part; raises NonInvertibleFlatMap if singular.
    """
    n = len(M)
    A = [[M[i][j] if isinstance(M[i][j], Dual) else mpq(M[i][j]) for j in range(n)]
         + [mpq(1) if i == j else mpq(0) for j in range(n)]
         for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if value_part(A[r][col])), None)
        if pivot is None:
            raise NonInvertibleFlatMap("singular linear part")
        A[col], A[pivot] = A[pivot], A[col]
        inv = 1 / A[col][col]
        A[col] = [a * inv for a in A[col]]
        for r in range(n):
            if r != col and A[r][col]:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [row[n:] for row in A]


def smat_mul(A, B):
    n, m, p = len(A), len(B), len(B[0])
    return [[sum((A[i][j] * B[j][k] for j in range(m)), mpq(0)) for k in range(p)]
            for i in range(n)]


def smat_transpose(A):
    return [list(r) for r in zip(*A)]


def smat_identity(n):
    return [[mpq(1) if i == j else mpq(0) for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# z-series


class ZSeries:
    """Power series sum_{l=0}^{Z} terms[l] z^l with TruncPoly coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms):
        terms = tuple(terms)
        if not terms:
            raise ValueError("ZSeries needs at least the z^0 term")
        trusts = {t.trust for t in terms}
        if len(trusts) != 1:
            w = min(trusts)
            terms = tuple(t.truncate(w) for t in terms)
        self.terms = terms

    @property
    def trust_order(self):
        return len(self.terms) - 1

    @property
    def trust_weight(self):
        return self.terms[0].trust

    def __getitem__(self, l):
        if l > self.trust_order:
            raise TrustExceeded(f"z^{l} beyond trust order {self.trust_order}")
        return self.terms[l]

    def __add__(self, other):
        z = min(self.trust_order, other.trust_order)
        return ZSeries(a + b for a, b in zip(self.terms[:z + 1], other.terms[:z + 1]))

    def __sub__(self, other):
        z = min(self.trust_order, other.trust_order)
        return ZSeries(a - b for a, b in zip(self.terms[:z + 1], other.terms[:z + 1]))

    def __mul__(self, other):
        z = min(self.trust_order, other.trust_order)
        out = []
        for l in range(z + 1):
            acc = self.terms[0] * other.terms[l]
            for a in range(1, l + 1):
                acc = acc + self.terms[a] * other.terms[l - a]
            out.append(acc)
        return ZSeries(out)

    def negate_z(self):
        return ZSeries(t if l % 2 == 0 else -t for l, t in enumerate(self.terms))

    def is_zero(self):
        return all(not t for t in self.terms)

    def __eq__(self, other):
        return isinstance(other, ZSeries) and self.terms == other.terms

    __hash__ = None


class MatrixSeries:
    """n x n matrix of z-series, stored as a tuple of coefficient matrices."""

    __slots__ = ("coeffs", "n")

    def __init__(self, coeffs, n=None):
        coeffs = tuple(tuple(tuple(row) for row in M) for M in coeffs)
        if not coeffs:
            raise ValueError("MatrixSeries needs the z^0 coefficient")
        if n is None:
            n = len(coeffs[0])
        for M in coeffs:
            if len(M) != n or any(len(row) != n for row in M):
                raise StructuralError("coefficient matrices must be n x n")
        trust = min(a.trust for M in coeffs for row in M for a in row)
        if any(a.trust != trust for M in coeffs for row in M for a in row):
            coeffs = tuple(pmat_map(M, lambda a: a.truncate(trust)) for M in coeffs)
        self.coeffs = coeffs
        self.n = n

    @classmethod
    def identity(cls, n, zorder, trust, nvars=None, symbol="x"):
        nv = n if nvars is None else nvars
        I = pmat_identity(n, trust, symbol)
        Z0 = pmat_zero(n, trust, symbol)
        if nv != n:
            I = pmat_map(I, lambda a: TruncPoly(a.coeffs, trust, nv, symbol))
            Z0 = pmat_map(Z0, lambda a: TruncPoly(a.coeffs, trust, nv, symbol))
        return cls([I] + [Z0] * zorder, n)

    @property
    def trust_order(self):
        return len(self.coeffs) - 1

    @property
    def trust_weight(self):
        return self.coeffs[0][0][0].trust

    def coeff(self, l):
        if l > self.trust_order:
            raise TrustExceeded(f"z^{l} beyond trust order {self.trust_order}")
        return self.coeffs[l]

    def entry(self, i, k) -> ZSeries:
        return ZSeries(M[i][k] for M in self.coeffs)

    def truncate_order(self, z):
        if z > self.trust_order:
            raise TrustExceeded(f"z^{z} beyond trust order {self.trust_order}")
        return MatrixSeries(self.coeffs[:z + 1], self.n)

    def _check(self, other):
        if self.n != other.n:
            raise StructuralError(f"dimension mismatch {self.n} vs {other.n}")

    def __add__(self, other):
        self._check(other)
        z = min(self.trust_order, other.trust_order)
        return MatrixSeries([pmat_add(a, b) for a, b in zip(self.coeffs[:z + 1], other.coeffs[:z + 1])], self.n)

    def __sub__(self, other):
        self._check(other)
        z = min(self.trust_order, other.trust_order)
        return MatrixSeries([pmat_sub(a, b) for a, b in zip(self.coeffs[:z + 1], other.coeffs[:z + 1])], self.n)

    def __mul__(self, other):
        return matrix_mul(self, other)

    def negate_z_transpose(self):
        return negate_z_transpose(self)

    def restrict(self, mode):
        return MatrixSeries([pmat_map(M, lambda a: a.restrict(mode)) for M in self.coeffs], self.n)

    def map_entries(self, fn):
        return MatrixSeries([pmat_map(M, fn) for M in self.coeffs], self.n)

    def value_part(self):
        return self.map_entries(TruncPoly.value_part)

    def eps_part(self):
        return self.map_entries(TruncPoly.eps_part)

    def is_zero(self):
        return all(pmat_is_zero(M) for M in self.coeffs)

    def first_nonzero(self):
        for l, M in enumerate(self.coeffs):
            hit = pmat_first_nonzero(M)
            if hit is not None:
                return f"z^{l} {hit}"
        return None

    def __eq__(self, other):
        return isinstance(other, MatrixSeries) and self.n == other.n and self.coeffs == other.coeffs

    __hash__ = None

    def to_json(self, name="psi"):
        out = {}
        for l, M in enumerate(self.coeffs):
            for i in range(self.n):
                for k in range(self.n):
                    out[f"{name}[{i + 1}][{k + 1}].z^{l}"] = M[i][k].to_json()
        return out

    @classmethod
    def from_json(cls, obj, n, name="psi"):
        pat = re.compile(rf"^{re.escape(name)}\[(\d+)\]\[(\d+)\]\.z\^(\d+)$")
        found = {}
        for key, val in obj.items():
            m = pat.match(key)
            if m:
                i, k, l = map(int, m.groups())
                found[(l, i - 1, k - 1)] = TruncPoly.from_json(val)
        zmax = max(l for l, _, _ in found)
        return cls([[[found[(l, i, k)] for k in range(n)] for i in range(n)]
                    for l in range(zmax + 1)], n)


def matrix_mul(M: MatrixSeries, N: MatrixSeries) -> MatrixSeries:
    M._check(N)
    z = min(M.trust_order, N.trust_order)
    out = []
    for l in range(z + 1):
        acc = None
        for a in range(l + 1):
            term = pmat_mul(M.coeffs[a], N.coeffs[l - a])
            acc = term if acc is None else pmat_add(acc, term)
        out.append(acc)
    return MatrixSeries(out, M.n)


def negate_z_transpose(M: MatrixSeries) -> MatrixSeries:
    """(i, j) entry at z^l of the result is (-1)^l times the (j, i) entry of M."""
    out = []
    for l, C in enumerate(M.coeffs):
        T = pmat_transpose(C)
        out.append(T if l % 2 == 0 else pmat_neg(T))
    return MatrixSeries(out, M.n)


def restrict_vars(p: TruncPoly, mode: str) -> TruncPoly:
    return p.restrict(mode)


def poly_mul(p: TruncPoly, q: TruncPoly) -> TruncPoly:
    return p * q


def poly_invert(p: TruncPoly) -> TruncPoly:
    return p.invert()


# ---------------------------------------------------------------------------
# composition and inversion of coordinate maps


def substitute_series(f: TruncPoly, mapping, trust=None, symbol="x") -> TruncPoly:
    """Substitute ``t[i] -> mapping[i-1]`` (level-1 variables of ``f``).

    Every image must have zero constant term; shift the coordinates first
    (see :func:`recenter`).  The result is exact up to
    ``min(f.trust, trust of the images)`` (or the requested ``trust`` if lower).
    """
    images = list(mapping)
    if any(l != 1 for m in f.coeffs for (_, l), _e in m):
        raise StructuralError("substitute_series expects level-1 variables in f")
    if len(images) < f.n:
        raise StructuralError("mapping must cover every variable of f")
    for g in images:
        if g.constant_term():
            raise TrustExceeded("image has a nonzero constant term; recenter before substituting")
    out_trust = min([f.trust] + [g.trust for g in images])
    if trust is not None:
        out_trust = min(out_trust, trust)
    nvars = images[0].n
    images = [g.truncate(out_trust) for g in images]
    powers = [[TruncPoly.one(nvars, out_trust, symbol)] for _ in images]
    result = TruncPoly.zero(nvars, out_trust, symbol)
    for m, c in f.coeffs.items():
        if mono_weight(m) > out_trust:
            continue
        term = TruncPoly.const(c, nvars, out_trust, symbol)
        for (color, _l), e in m:
            pw = powers[color - 1]
            while len(pw) <= e:
                pw.append(pw[-1] * images[color - 1])
            term = term * pw[e]
        result = result + term
    return result


def recenter(tmap):
    """Split t(x) into constants t(0) and the shifted map t(x) - t(0)."""
    constants = [g.constant_term() for g in tmap]
    shifted = [g - TruncPoly.const(c, g.n, g.trust, g.symbol) for g, c in zip(tmap, constants)]
    return shifted, constants


def linear_part(tmap):
    n = len(tmap)
    nvars = tmap[0].n
    return [[tmap[i].coeffs.get((((j + 1, 1), 1),), mpq(0)) for j in range(nvars)]
            for i in range(n)]


def jacobian(tmap):
    nvars = tmap[0].n
    return tuple(tuple(g.derivative(j + 1, 1) for j in range(nvars)) for g in tmap)


def invert_coordinate_map(tmap):
    """Invert ``t = t(x)`` (zero constant terms, invertible linear part) to ``x = x(t)``.

    Returns a list of polynomials in ``t[i]`` with the same trust.
    """
    n = len(tmap)
    if any(g.n != n for g in tmap):
        raise StructuralError("coordinate map must be square")
    if any(l != 1 for g in tmap for m in g.coeffs for (_, l), _e in m):
        raise StructuralError("coordinate maps are in level-1 variables only")
    if any(g.constant_term() for g in tmap):
        raise ValueError("coordinate map has constant terms; call recenter() first")
    trust = min(g.trust for g in tmap)
    L = linear_part(tmap)
    Linv = inverse_scalar_matrix(L)
    nonlinear = [TruncPoly({m: c for m, c in g.coeffs.items() if mono_weight(m) >= 2},
                           trust, n, "t") for g in tmap]
    tvars = [TruncPoly.var(i + 1, n=n, trust=trust, symbol="t") for i in range(n)]
    # x = L^-1 (t - N(x)); each pass fixes one more degree
    x = [sum((tvars[j] * Linv[i][j] for j in range(n) if Linv[i][j]),
             TruncPoly.zero(n, trust, "t")) for i in range(n)]
    for _ in range(trust):
        Nx = [substitute_series(h, x, symbol="t") for h in nonlinear]
        rhs = [tvars[j] - Nx[j] for j in range(n)]
        x = [sum((rhs[j] * Linv[i][j] for j in range(n) if Linv[i][j]),
                 TruncPoly.zero(n, trust, "t")) for i in range(n)]
    return x


def univariate(coeffs, trust, color=1, n=1, symbol="x"):
    """Shorthand builder: sum coeffs[d] * x[color,1]^d."""
    out = {}
    for d, c in enumerate(coeffs):
        if c:
            out[((((color, 1), d),)) if d else ONE] = mpq(c) if not isinstance(c, Dual) else c
    return TruncPoly(out, trust, n, symbol)
