"""Twisted loop algebra and loop group elements.

``sign="-"`` elements are s(ζ) = Σ s_l ζ^{-l} (they lower fermion modes by l,
so they act on the uncompleted Fock space); ``sign="+"`` elements are
r(ζ) = Σ r_l ζ^l (they raise modes and need an energy cutoff).  A level-l
matrix M is twisted when Mᵗ = (-1)^{l+1} M.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpq

from .errors import NotTwisted, StructuralError, TrustExceeded
from .rings import format_scalar, scalar
from .series import smat_identity, smat_mul, smat_transpose


def _freeze(matrix):
    rows = tuple(tuple(scalar(x) for x in row) for row in matrix)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise StructuralError("level matrices must be square")
    return rows


def twist_violations(level, matrix):
    sgn = 1 if level % 2 == 1 else -1
    n = len(matrix)
    return [(i, j) for i in range(n) for j in range(n)
            if matrix[j][i] != sgn * matrix[i][j]]


@dataclass(frozen=True)
class LoopAlgebraElement:
    sign: str
    terms: tuple  # ((level, matrix), ...) sorted by level
    n: int

    def __init__(self, sign, terms, n=None, *, check=True):
        if sign not in ("+", "-"):
            raise ValueError("sign must be '+' or '-'")
        merged = {}
        for level, M in terms:
            level = int(level)
            if level < 1:
                raise ValueError("levels start at 1")
            M = _freeze(M)
            if level in merged:
                old = merged[level]
                M = tuple(tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(old, M))
            merged[level] = M
        if n is None:
            if not merged:
                raise StructuralError("cannot infer n of an empty element")
            n = len(next(iter(merged.values())))
        for M in merged.values():
            if len(M) != n:
                raise StructuralError(f"matrix size {len(M)} does not match n={n}")
        cleaned = tuple((l, M) for l, M in sorted(merged.items())
                        if any(x for row in M for x in row))
        object.__setattr__(self, "sign", sign)
        object.__setattr__(self, "terms", cleaned)
        object.__setattr__(self, "n", n)
        if check:
            self.check_twisted()

    @classmethod
    def zero(cls, sign, n):
        return cls(sign, (), n)

    def check_twisted(self):
        for level, M in self.terms:
            bad = twist_violations(level, M)
            if bad:
                i, j = bad[0]
                raise NotTwisted(f"twist violation at level {level} "
                                 f"(entry [{i + 1}][{j + 1}])")

    @property
    def raises(self) -> bool:
        return self.sign == "+"

    @property
    def max_level(self) -> int:
        return max((l for l, _ in self.terms), default=0)

    def level(self, l):
        for lev, M in self.terms:
            if lev == l:
                return M
        return tuple(tuple(mpq(0) for _ in range(self.n)) for _ in range(self.n))

    def is_zero(self):
        return not self.terms

    def shift_terms(self):
        """(mode shift, matrix) pairs for the fermionic action: v^{(j)}_k -> M_ij v^{(i)}_{k+d}."""
        d = 1 if self.sign == "+" else -1
        return tuple((d * l, M) for l, M in self.terms)

    def scaled(self, c):
        c = scalar(c)
        return LoopAlgebraElement(self.sign, [(l, [[c * x for x in row] for row in M])
                                              for l, M in self.terms], self.n, check=False)

    def split_levels(self):
        return [LoopAlgebraElement(self.sign, [(l, M)], self.n, check=False) for l, M in self.terms]

    def z_coefficients(self, order):
        """Coefficient matrices of a(z) with ζ -> 1/z: power |l| of z^{∓l} for l <= order."""
        out = [[[mpq(0)] * self.n for _ in range(self.n)] for _ in range(order + 1)]
        for l, M in self.terms:
            if l <= order:
                out[l] = [list(r) for r in M]
        return out

    def to_json(self):
        return {"sign": self.sign,
                "terms": [{"level": l, "matrix": [[format_scalar(x) for x in row] for row in M]}
                          for l, M in self.terms]}

    @classmethod
    def from_json(cls, obj, n=None):
        terms = [(t["level"], t["matrix"]) for t in obj.get("terms", [])]
        return cls(obj["sign"], terms, n)


@dataclass(frozen=True)
class LoopGroupElement:
    """Ordered product exp(a_1) exp(a_2) ... exp(a_m); a_m acts first."""

    factors: tuple = field(default=())
    n: int = 1

    def __init__(self, factors=(), n=None):
        factors = tuple(factors)
        if n is None:
            if not factors:
                raise StructuralError("cannot infer n of the identity; pass n")
            n = factors[0].n
        if any(f.n != n for f in factors):
            raise StructuralError("all factors must have the same n")
        object.__setattr__(self, "factors", tuple(f for f in factors if not f.is_zero()))
        object.__setattr__(self, "n", n)

    @classmethod
    def identity(cls, n):
        return cls((), n)

    def __mul__(self, other):
        return LoopGroupElement(self.factors + other.factors, self.n)

    def inverse(self):
        return LoopGroupElement(tuple(f.scaled(-1) for f in reversed(self.factors)), self.n)

    @property
    def direction(self):
        signs = {f.sign for f in self.factors}
        if not signs:
            return "identity"
        return signs.pop() if len(signs) == 1 else "mixed"

    def ordering_certified(self) -> bool:
        """True when every raising factor sits left of every lowering factor.

        Then A ψ|0⟩ is computed exactly with a finite energy cut.
        """
        seen_lowering = False
        for f in self.factors:
            if not f.raises:
                seen_lowering = True
            elif seen_lowering:
                return False
        return True

    def check_twisted(self, zorder):
        """Verify A(-ζ)ᵗA(ζ) = Id up to ζ-order ``zorder`` for each one-sided factor and product."""
        for f in self.factors:
            f.check_twisted()
        for sign in ("+", "-"):
            part = [f for f in self.factors if f.sign == sign]
            if not part:
                continue
            C = series_of_product(part, zorder, self.n)
            D = twisted_product_defect(C, self.n)
            for l, M in enumerate(D):
                if any(x for row in M for x in row):
                    raise NotTwisted(f"A(-ζ)ᵗA(ζ) != Id at order {l}")
        return True

    def to_json(self):
        return {"n": self.n, "factors": [f.to_json() for f in self.factors]}

    @classmethod
    def from_json(cls, obj, n=None):
        n = obj.get("n", n)
        return cls([LoopAlgebraElement.from_json(f, n) for f in obj.get("factors", [])], n)


def _smat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _series_mul(A, B, order, n):
    out = []
    for l in range(order + 1):
        acc = [[mpq(0)] * n for _ in range(n)]
        for a in range(l + 1):
            acc = _smat_add(acc, smat_mul(A[a], B[l - a]))
        out.append(acc)
    return out


def series_exp(a: LoopAlgebraElement, order):
    """exp(a(ζ)) as a power series in ζ^{±1} (one-sided), coefficients 0..order."""
    n = a.n
    X = a.z_coefficients(order)
    result = [smat_identity(n)] + [[[mpq(0)] * n for _ in range(n)] for _ in range(order)]
    power = [row[:] for row in result]
    for p in range(1, order + 1):
        power = _series_mul(power, X, order, n)
        power = [[[x / p for x in row] for row in M] for M in power]
        result = [_smat_add(r, q) for r, q in zip(result, power)]
    return result


def series_of_product(factors, order, n):
    """Coefficients of exp(a_1(ζ)) ... exp(a_m(ζ)) for factors of one sign."""
    result = [smat_identity(n)] + [[[mpq(0)] * n for _ in range(n)] for _ in range(order)]
    for f in factors:
        result = _series_mul(result, series_exp(f, order), order, n)
    return result


def twisted_product_defect(C, n):
    """Coefficients of C(-ζ)ᵗ C(ζ) - Id."""
    order = len(C) - 1
    Cm = [smat_transpose(M) if l % 2 == 0 else [[-x for x in row] for row in smat_transpose(M)]
          for l, M in enumerate(C)]
    P = _series_mul(Cm, C, order, n)
    I = smat_identity(n)
    P[0] = [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(P[0], I)]
    return P


def series_log(C, order, n):
    """log(Id + X) for X = C - Id with no constant term, up to ``order``."""
    X = [[[mpq(0)] * n for _ in range(n)]] + [[list(r) for r in M] for M in C[1:order + 1]]
    while len(X) < order + 1:
        X.append([[mpq(0)] * n for _ in range(n)])
    result = [[[mpq(0)] * n for _ in range(n)] for _ in range(order + 1)]
    power = [smat_identity(n)] + [[[mpq(0)] * n for _ in range(n)] for _ in range(order)]
    for p in range(1, order + 1):
        power = _series_mul(power, X, order, n)
        sgn = mpq(1 if p % 2 == 1 else -1, p)
        result = [_smat_add(r, [[sgn * x for x in row] for row in q]) for r, q in zip(result, power)]
    return result


def group_from_series(sign, coefficients, zorder, n=None):
    """Factor Id + Σ_{i>=1} C_i ζ^{±i} as exp(log C) up to ζ-order ``zorder``.

    ``coefficients[i-1]`` is C_i.  Coefficients beyond ``zorder`` cannot be
    represented and raise TrustExceeded.
    """
    mats = [[[scalar(x) for x in row] for row in M] for M in coefficients]
    if n is None:
        n = len(mats[0])
    nonzero_levels = [i + 1 for i, M in enumerate(mats) if any(x for row in M for x in row)]
    if nonzero_levels and max(nonzero_levels) > zorder:
        raise TrustExceeded(f"series has terms beyond z-order {zorder}")
    C = [smat_identity(n)] + mats[:zorder]
    while len(C) < zorder + 1:
        C.append([[mpq(0)] * n for _ in range(n)])
    D = twisted_product_defect(C, n)
    for l, M in enumerate(D):
        if any(x for row in M for x in row):
            raise NotTwisted(f"series is not twisted at order {l}")
    L = series_log(C, zorder, n)
    elem = LoopAlgebraElement(sign, [(l, L[l]) for l in range(1, zorder + 1)], n)
    return LoopGroupElement([elem], n)
