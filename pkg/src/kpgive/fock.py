"""Energy-truncated n-component semi-infinite wedge space.

Basis vectors v^{(j)}_k (k a half-integer) are relabeled by the integer
*position* ``pos = n*(k - 1/2) + (j - 1)``.  The vacuum fills every negative
position.  A :class:`FockState` stores the occupied non-negative positions
(particles) and the empty negative ones (holes); its wedge monomial is written
in strictly decreasing position order with coefficient +1.

Energies are stored doubled so they stay integral.  Modes passed to the public
API are half-integers (``Fraction``, ``mpq``, ``"-1/2"``...).
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

from gmpy2 import mpq

from .errors import StructuralError, TrustExceeded
from .rings import Dual, format_coeff, scalar, value_part
from .series import TruncPoly, mono_mul, mono_weight


# ---------------------------------------------------------------------------
# positions and modes


def mode2_of(k) -> int:
    """Doubled mode 2k of a half-integer k; rejects integers."""
    q = scalar(k) * 2
    if q.denominator != 1 or q.numerator % 2 == 0:
        raise ValueError(f"mode {k} is not a half-integer")
    return int(q.numerator)


def position(n, color, mode2) -> int:
    return n * ((mode2 - 1) // 2) + (color - 1)


def color_of(n, pos) -> int:
    return pos % n + 1


def mode2_at(n, pos) -> int:
    return 2 * (pos // n) + 1


def _half(mode2):
    return Fraction(mode2, 2)


class FockState(NamedTuple):
    n: int
    particles: tuple  # sorted positions >= 0
    holes: tuple  # sorted positions < 0

    @classmethod
    def vacuum(cls, n):
        return cls(n, (), ())

    @classmethod
    def from_modes(cls, n, particles=None, holes=None):
        """Build from ``{color: [modes]}`` dictionaries (modes as half-integers)."""
        ps, hs = [], []
        for color, modes in (particles or {}).items():
            for k in modes:
                m2 = mode2_of(k)
                if m2 < 0:
                    raise ValueError("particle modes are positive")
                ps.append(position(n, color, m2))
        for color, modes in (holes or {}).items():
            for k in modes:
                m2 = mode2_of(k)
                if m2 > 0:
                    raise ValueError("hole modes are negative")
                hs.append(position(n, color, m2))
        if len(set(ps)) != len(ps) or len(set(hs)) != len(hs):
            raise ValueError("repeated mode")
        return cls(n, tuple(sorted(ps)), tuple(sorted(hs)))

    def is_occupied(self, pos) -> bool:
        if pos >= 0:
            i = bisect_left(self.particles, pos)
            return i < len(self.particles) and self.particles[i] == pos
        i = bisect_left(self.holes, pos)
        return not (i < len(self.holes) and self.holes[i] == pos)

    def charge(self):
        return _charge(self)

    def energy2(self) -> int:
        return _energy2(self)

    def total_charge(self) -> int:
        return len(self.particles) - len(self.holes)

    def modes(self, color):
        """(particle modes, hole modes) of one color as sorted Fractions."""
        p = [_half(mode2_at(self.n, x)) for x in self.particles if color_of(self.n, x) == color]
        h = [_half(mode2_at(self.n, x)) for x in self.holes if color_of(self.n, x) == color]
        return sorted(p), sorted(h)

    def dump(self) -> str:
        parts = []
        for c in range(1, self.n + 1):
            p, h = self.modes(c)
            items = []
            if p:
                items.append("p[" + ",".join(str(x) for x in p) + "]")
            if h:
                items.append("h[" + ",".join(str(x) for x in h) + "]")
            parts.append(f"c{c}:" + (",".join(items) if items else "-"))
        return ";".join(parts)

    def describe(self) -> str:
        ch = ",".join(str(c) for c in self.charge())
        return f"{self.dump()} charge=({ch}) energy={Fraction(self.energy2(), 2)}"

    def to_json(self):
        out = {}
        for c in range(1, self.n + 1):
            p, h = self.modes(c)
            out[str(c)] = {"particles": [str(x) for x in p], "holes": [str(x) for x in h]}
        return {"n": self.n, "colors": out, "charge": list(self.charge()),
                "energy": str(Fraction(self.energy2(), 2))}

    @classmethod
    def from_json(cls, obj):
        n = obj["n"]
        colors = obj["colors"]
        return cls.from_modes(n, {int(c): v["particles"] for c, v in colors.items()},
                              {int(c): v["holes"] for c, v in colors.items()})


@lru_cache(maxsize=1 << 16)
def _charge(st):
    ch = [0] * st.n
    for p in st.particles:
        ch[p % st.n] += 1
    for h in st.holes:
        ch[h % st.n] -= 1
    return tuple(ch)


@lru_cache(maxsize=1 << 16)
def _energy2(st):
    n = st.n
    return sum(mode2_at(n, p) for p in st.particles) - sum(mode2_at(n, h) for h in st.holes)


def _count_above(st, pos) -> int:
    """Number of occupied positions strictly greater than ``pos``."""
    above = len(st.particles) - bisect_right(st.particles, pos)
    if pos < 0:
        gap = -1 - pos
        holes_in = len(st.holes) - bisect_right(st.holes, pos)
        above += gap - holes_in
    return above


def wedge(st, pos):
    """v_pos ∧ st as (sign, state), or None."""
    if st.is_occupied(pos):
        return None
    sign = -1 if _count_above(st, pos) % 2 else 1
    if pos >= 0:
        ps = list(st.particles)
        ps.insert(bisect_left(ps, pos), pos)
        return sign, FockState(st.n, tuple(ps), st.holes)
    hs = list(st.holes)
    hs.remove(pos)
    return sign, FockState(st.n, st.particles, tuple(hs))


def contract(st, pos):
    """ι(v_pos*) st as (sign, state), or None."""
    if not st.is_occupied(pos):
        return None
    sign = -1 if _count_above(st, pos) % 2 else 1
    if pos >= 0:
        ps = list(st.particles)
        ps.remove(pos)
        return sign, FockState(st.n, tuple(ps), st.holes)
    hs = list(st.holes)
    hs.insert(bisect_left(hs, pos), pos)
    return sign, FockState(st.n, st.particles, tuple(hs))


# ---------------------------------------------------------------------------
# basis-state kernels; each returns a tuple of (state, scalar)


@lru_cache(maxsize=1 << 18)
def psi_kernel(st, sign, color, mode2):
    if sign == "+":
        r = wedge(st, position(st.n, color, -mode2))
    else:
        r = contract(st, position(st.n, color, mode2))
    if r is None:
        return ()
    return ((r[1], r[0]),)


@lru_cache(maxsize=1 << 20)
def shift_kernel(st, d, M):
    """Leibniz action of v^{(j)}_b -> Σ_i M[i][j] v^{(i)}_{b+d} (normal ordered at d = 0)."""
    n = st.n
    out = {}

    def add(state, c):
        s = out.get(state, 0) + c
        if s:
            out[state] = s
        else:
            out.pop(state, None)

    lowest_empty = st.holes[0] if st.holes else 0
    lo = lowest_empty - n * d - n
    hole_set = set(st.holes)
    sources = [q for q in range(min(lo, 0), 0) if q not in hole_set]
    sources.extend(st.particles)
    for q in sources:
        j = q % n
        for i in range(n):
            c = M[i][j]
            if not c or (d == 0 and i == j):
                continue
            p = q + n * d + (i - j)
            if st.is_occupied(p):
                continue
            s1, st1 = contract(st, q)
            r = wedge(st1, p)
            if r is None:
                continue
            add(r[1], c * s1 * r[0])
    if d == 0:
        ch = _charge(st)
        diag = sum(M[j][j] * ch[j] for j in range(n))
        if diag:
            add(st, diag)
    return tuple(out.items())


def _alpha_matrix(n, i, j):
    return tuple(tuple(mpq(1) if (a == i - 1 and b == j - 1) else mpq(0) for b in range(n))
                 for a in range(n))


@lru_cache(maxsize=1 << 18)
def q_kernel(st, color, exponent):
    """Q_color^{±1} on a basis state via the commutation rules with ψ."""
    n = st.n
    # ops rebuilding st from the vacuum: contract every hole, then wedge every particle
    ops = [("-", h) for h in st.holes] + [("+", p) for p in st.particles]
    cur = FockState.vacuum(n)
    c = 1
    for kind, pos in ops:
        s, cur = (contract if kind == "-" else wedge)(cur, pos)
        c *= s
    assert cur == st
    i = color - 1
    if exponent == 1:
        s0, cur = wedge(FockState.vacuum(n), i)
    else:
        s0, cur = contract(FockState.vacuum(n), i - n)
    c *= s0
    for kind, pos in ops:
        if pos % n == i:
            pos += exponent * n
        else:
            c = -c
        r = (contract if kind == "-" else wedge)(cur, pos)
        if r is None:
            return ()
        s, cur = r
        c *= s
    return ((cur, c),)


# ---------------------------------------------------------------------------
# vectors


def _mul(coeff, k):
    return coeff * k


class FockVector:
    """Finite linear combination of basis states.

    ``energy_cut`` (doubled) is the energy up to which components are exact;
    ``None`` means the vector is exact in every component.  ``certified`` is
    False when a lowering operator acted after an energy truncation, so exactness
    below the cut is no longer guaranteed and must be checked by stabilization.
    """

    __slots__ = ("terms", "n", "energy_cut", "certified")

    def __init__(self, terms, n, energy_cut=None, certified=True, *, clean=True):
        if clean:
            terms = {s: c for s, c in terms.items()
                     if c and (energy_cut is None or s.energy2() <= energy_cut)}
        self.terms = terms
        self.n = n
        self.energy_cut = energy_cut
        self.certified = certified

    @classmethod
    def basis(cls, state, coeff=mpq(1), energy_cut=None):
        return cls({state: coeff}, state.n, energy_cut)

    @classmethod
    def vacuum(cls, n, energy_cut=None):
        return cls.basis(FockState.vacuum(n), mpq(1), energy_cut)

    @classmethod
    def zero(cls, n, energy_cut=None):
        return cls({}, n, energy_cut, clean=False)

    def _meta(self, other):
        if self.n != other.n:
            raise StructuralError("vectors have different numbers of colors")
        cuts = [c for c in (self.energy_cut, other.energy_cut) if c is not None]
        return (min(cuts) if cuts else None), (self.certified and other.certified)

    def __add__(self, other):
        cut, cert = self._meta(other)
        out = dict(self.terms)
        for s, c in other.terms.items():
            t = out.get(s)
            out[s] = c if t is None else t + c
        return FockVector(out, self.n, cut, cert)

    def __neg__(self):
        return FockVector({s: -c for s, c in self.terms.items()}, self.n, self.energy_cut,
                          self.certified, clean=False)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k):
        return FockVector({s: c * k for s, c in self.terms.items()}, self.n, self.energy_cut,
                          self.certified)

    __rmul__ = scale

    def with_cut(self, cut):
        if self.energy_cut is not None and cut is not None and cut > self.energy_cut:
            raise TrustExceeded(f"cannot raise energy cut {self.energy_cut} to {cut}")
        return FockVector(self.terms, self.n, cut, self.certified)

    def is_zero(self):
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        return (isinstance(other, FockVector) and self.n == other.n
                and self.terms == other.terms)

    __hash__ = None

    def agrees_with(self, other, cut=None):
        """Equality on all components of doubled energy <= cut (default: common cut)."""
        if cut is None:
            cut, _ = self._meta(other)
        diff = (self - other).terms
        return all(cut is not None and s.energy2() > cut for s in diff)

    def max_energy2(self):
        return max((s.energy2() for s in self.terms), default=None)

    def charges(self):
        return {s.charge() for s in self.terms}

    def value_part(self):
        return FockVector({s: value_part(c) for s, c in self.terms.items()}, self.n,
                          self.energy_cut, self.certified)

    def eps_part(self):
        return FockVector({s: (c.eps if isinstance(c, Dual) else mpq(0))
                           for s, c in self.terms.items()}, self.n, self.energy_cut, self.certified)

    def to_json(self):
        out = []
        for s in sorted(self.terms, key=lambda s: (s.energy2(), s.holes, s.particles)):
            c = self.terms[s]
            out.append({"state": s.dump(), "charge": list(s.charge()),
                        "energy": str(Fraction(s.energy2(), 2)),
                        "coeff": c.to_json() if isinstance(c, TruncPoly) else format_coeff(c)})
        return out

    def __repr__(self):
        body = " + ".join(f"({c})|{s.dump()}⟩" for s, c in list(self.terms.items())[:6])
        more = " + ..." if len(self.terms) > 6 else ""
        return f"FockVector[{self.energy_cut}]({body or '0'}{more})"


def _nonzero(terms):
    return {s: c for s, c in terms.items() if c}


def apply_kernel(v, kernel, *args, cut="keep", delta=None):
    """Apply a basis-state kernel linearly; ``cut`` overrides the output energy cut.

    ``delta`` is the (doubled) energy change of the kernel when it is the same
    for every output, which lets whole states be skipped against the cut.
    """
    cut = v.energy_cut if cut == "keep" else cut
    out = {}
    for st, c in v.terms.items():
        if delta is not None and cut is not None and st.energy2() + delta > cut:
            continue
        for st2, k in kernel(st, *args):
            if delta is None and cut is not None and st2.energy2() > cut:
                continue
            t = c * k
            prev = out.get(st2)
            out[st2] = t if prev is None else prev + t
    return FockVector(_nonzero(out), v.n, cut, v.certified, clean=False)


# ---------------------------------------------------------------------------
# operators


def apply_psi(sign, color, mode, v: FockVector) -> FockVector:
    """ψ^{+(j)}_k wedges v^{(j)}_{-k}; ψ^{-(j)}_k contracts v^{(j)}_k."""
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    _check_color(v.n, color)
    m2 = mode2_of(mode)
    return apply_kernel(v, psi_kernel, sign, color, m2, delta=-m2)


def apply_Q(color, exponent, v: FockVector) -> FockVector:
    _check_color(v.n, color)
    if exponent not in (1, -1):
        raise ValueError("exponent must be +1 or -1")
    cut = v.energy_cut
    if cut is not None:
        # Q_i^{±1} shifts doubled energy by 1 ± 2k_i; take the worst case over
        # every charge k_i that can occur below the cut
        bound = int(cut ** 0.5) + 1
        cut += min(1 + exponent * 2 * c for c in range(-bound, bound + 1))
    return apply_kernel(v, q_kernel, color, exponent, cut=cut)


def apply_Q_power(exponents, v):
    """Q_1^{k_1} ... Q_n^{k_n} v (Q_n acts first)."""
    for color in range(len(exponents), 0, -1):
        e = exponents[color - 1]
        for _ in range(abs(e)):
            v = apply_Q(color, 1 if e > 0 else -1, v)
    return v


def charge_state(exponents):
    """The basis state ±Q_1^{k_1}...Q_n^{k_n}|0⟩ and its sign."""
    n = len(exponents)
    v = apply_Q_power(exponents, FockVector.vacuum(n))
    (st, c), = v.terms.items()
    return st, c


def apply_alpha(i, j, k, v: FockVector) -> FockVector:
    _check_color(v.n, i)
    _check_color(v.n, j)
    return apply_kernel(v, shift_kernel, -int(k), _alpha_matrix(v.n, i, j), delta=-2 * int(k))


def apply_shift(d, M, v):
    M = tuple(tuple(scalar(x) for x in row) for row in M)
    return apply_kernel(v, shift_kernel, d, M, delta=2 * d)


def apply_loop_algebra(a, v: FockVector, cut="keep") -> FockVector:
    """Leibniz action of a twisted loop algebra element (ζ^l raises modes by l)."""
    if a.n != v.n:
        raise StructuralError("loop element and vector have different n")
    out = None
    for d, M in a.shift_terms():
        part = apply_kernel(v, shift_kernel, d, M, cut=cut, delta=2 * d)
        out = part if out is None else out + part
    if out is None:
        return FockVector.zero(v.n, v.energy_cut if cut == "keep" else cut)
    return out


@dataclass(frozen=True)
class Tangent:
    """The first-order factor (1 + ε a), used for exact directional derivatives."""

    a: object

    @property
    def raises(self):
        return self.a.raises

    @property
    def n(self):
        return self.a.n


def _eps(c):
    return Dual(0, value_part(c))


def apply_factors(factors, v: FockVector, energy_cut=None) -> FockVector:
    """Apply exp(a_1) ... exp(a_m) (right to left) with the truncation policy.

    Raising exponentials are infinite sums and are cut at ``energy_cut``; that
    is exact as long as no lowering factor acts afterwards.  Otherwise the
    result is marked uncertified and must pass a stabilization check.
    """
    factors = list(factors)
    cur = v
    truncated = v.energy_cut is not None
    certified = v.certified
    for idx in range(len(factors) - 1, -1, -1):
        f = factors[idx]
        lowering_left = any(not g.raises for g in factors[:idx])
        if not f.raises and truncated:
            certified = False
        if isinstance(f, Tangent):
            step = apply_loop_algebra(f.a, cur)
            base = {s: (c if isinstance(c, Dual) else Dual(c, 0)) for s, c in cur.terms.items()}
            cur = (FockVector(base, cur.n, cur.energy_cut, cur.certified)
                   + FockVector({s: _eps(c) for s, c in step.terms.items()}, cur.n, step.energy_cut))
        elif f.raises:
            if energy_cut is None:
                raise TrustExceeded("a raising factor needs a finite energy cut")
            cur = _exp_raising(f, cur, energy_cut)
            truncated = True
        else:
            cur = _exp_lowering(f, cur)
        if truncated and not lowering_left and energy_cut is not None:
            cur = FockVector(cur.terms, cur.n, energy_cut, cur.certified)
    if energy_cut is not None and (cur.energy_cut is None or cur.energy_cut > energy_cut):
        cur = FockVector(cur.terms, cur.n, energy_cut, cur.certified)
    return FockVector(cur.terms, cur.n, cur.energy_cut, certified and cur.certified, clean=False)


def apply_loop_group(A, v: FockVector, energy_cut=None) -> FockVector:
    if A.n != v.n:
        raise StructuralError("group element and vector have different n")
    return apply_factors(A.factors, v, energy_cut)


def _exp_raising(a, v, cut):
    v = FockVector(v.terms, v.n, cut if v.energy_cut is None else min(cut, v.energy_cut),
                   v.certified)
    result = v
    term = v
    p = 0
    while not term.is_zero():
        p += 1
        term = apply_loop_algebra(a, term, cut=cut).scale(mpq(1, p))
        result = result + term
    return result


def _exp_lowering(a, v):
    result = v
    term = v
    p = 0
    while not term.is_zero():
        p += 1
        term = apply_loop_algebra(a, term).scale(mpq(1, p))
        result = result + term
        if p > 10_000:
            raise RuntimeError("lowering exponential failed to terminate")
    return result


def _check_color(n, color):
    if not 1 <= color <= n:
        raise StructuralError(f"color {color} outside 1..{n}")


# ---------------------------------------------------------------------------
# bosonic vertex operators


_REGIMES = ("all", "odd", "x1")


def _levels(W, regime):
    if regime == "all":
        return range(1, W + 1)
    if regime == "odd":
        return range(1, W + 1, 2)
    if regime == "x1":
        return range(1, min(W, 1) + 1)
    raise ValueError(f"unknown regime {regime!r}")


def _poly_times_var(p: TruncPoly, var, k):
    """k * x[var] * p with trust preserved."""
    out = {}
    w = var[1]
    mv = ((var, 1),)
    for m, c in p.coeffs.items():
        if mono_weight(m) + w <= p.trust:
            out[mono_mul(m, mv)] = c * k
    return TruncPoly(out, p.trust, p.n, p.symbol, clean=False)


def _lift_poly(c, n, trust):
    if isinstance(c, TruncPoly):
        return c
    return TruncPoly.const(c, n, trust)


def _formal_exp(v, n, W, regime, direction, cut):
    """exp(Σ_{j,k} x^{(j)}_k α^{(j)}_{±k}) v with x-weight truncation W."""
    sgn = -1 if direction == "+" else 1
    gens = [((j, k), _alpha_matrix(n, j, j), sgn * k)
            for j in range(1, n + 1) for k in _levels(W, regime)]
    terms = {s: _lift_poly(c, n, W) for s, c in v.terms.items()}
    result = dict(terms)
    p = 0
    while terms:
        p += 1
        inv = mpq(1, p)
        nxt = {}
        for st, c in terms.items():
            e = st.energy2()
            for var, M, d in gens:
                if cut is not None and e + 2 * d > cut:
                    continue
                for st2, k in shift_kernel(st, d, M):
                    t = _poly_times_var(c, var, k * inv)
                    if not t.coeffs:
                        continue
                    prev = nxt.get(st2)
                    nxt[st2] = t if prev is None else prev + t
        terms = {s: c for s, c in nxt.items() if c.coeffs}
        for s, c in terms.items():
            prev = result.get(s)
            result[s] = c if prev is None else prev + c
    return result


def apply_gamma_plus(v: FockVector, W, regime="all") -> FockVector:
    """Π_j Γ^{(j)}_+(x^{(j)}) v with coefficients in x truncated at weight W.

    Terminates because each α_k (k > 0) lowers energy.  The output is exact in
    every state whose energy plus twice its weight budget stays within the input
    cut; callers pairing against a bra should prefer :func:`pair_gamma_plus`.
    """
    res = _formal_exp(v, v.n, W, regime, "+", None)
    return FockVector(res, v.n, v.energy_cut, v.certified)


def apply_gamma_minus(v: FockVector, W, regime="all", cut=None) -> FockVector:
    """Π_j Γ^{(j)}_-(x^{(j)}) v; raises energy by at most 2W."""
    res = _formal_exp(v, v.n, W, regime, "-", cut)
    return FockVector(res, v.n, cut, v.certified)


@lru_cache(maxsize=4096)
def bra_expansion(state, W, regime="all"):
    """Components of Γ_-(x)|state⟩: ⟨state|Γ_+(x)|s⟩ is the coefficient of s."""
    v = FockVector.basis(state)
    return tuple(_formal_exp(v, state.n, W, regime, "-", None).items())


def pair_gamma_plus(bra: FockState, v: FockVector, W, regime="all", sign=1) -> TruncPoly:
    """⟨bra|Γ_+(x)|v⟩ truncated at x-weight W.

    Needs v exact up to doubled energy ``bra.energy2() + 2W``.
    """
    need = bra.energy2() + 2 * W
    if v.energy_cut is not None and v.energy_cut < need:
        raise TrustExceeded(f"pairing at weight {W} needs energy cut {need}, have {v.energy_cut}")
    acc = TruncPoly.zero(v.n, W)
    items = []
    for st, poly in bra_expansion(bra, W, regime):
        c = v.terms.get(st)
        if c is not None:
            items.append((poly, c))
    out = {}
    for poly, c in items:
        for m, a in poly.coeffs.items():
            t = a * c
            prev = out.get(m)
            out[m] = t if prev is None else prev + t
    acc = TruncPoly(out, W, v.n)
    return acc if sign == 1 else -acc


def apply_gamma(direction, params, v: FockVector, cut=None) -> FockVector:
    """exp(Σ params[(j,k)] α^{(j)}_{±k}) with scalar or TruncPoly parameters.

    ``direction="+"`` uses α_k (lowering, always finite); ``"-"`` uses α_{-k}
    and needs either a cut or TruncPoly parameters of bounded weight.
    """
    n = v.n
    sgn = -1 if direction == "+" else 1
    gens = [(c, _alpha_matrix(n, j, j), sgn * k) for (j, k), c in params.items() if c]
    poly = any(isinstance(c, TruncPoly) for c, _, _ in gens)
    if direction == "-" and cut is None and not poly:
        raise TrustExceeded("Γ_- with scalar parameters needs an energy cut")
    out_cut = cut if cut is not None else v.energy_cut
    result = v if cut is None else v.with_cut(min(cut, v.energy_cut) if v.energy_cut is not None else cut)
    term = result
    p = 0
    while not term.is_zero():
        p += 1
        acc = {}
        inv = mpq(1, p)
        for st, c in term.terms.items():
            e = st.energy2()
            for g, M, d in gens:
                if out_cut is not None and e + 2 * d > out_cut:
                    continue
                for st2, k in shift_kernel(st, d, M):
                    t = c * (g * (k * inv))
                    prev = acc.get(st2)
                    acc[st2] = t if prev is None else prev + t
        term = FockVector(_nonzero(acc), n, out_cut, clean=False)
        result = result + term
        if p > 10_000:
            raise RuntimeError("Γ expansion failed to terminate")
    return result


# ---------------------------------------------------------------------------
# coefficients, bilinear identity, enumeration


def extract_coefficient(v: FockVector, s: FockState):
    if s.n != v.n:
        raise StructuralError("state and vector have different n")
    if v.energy_cut is not None and s.energy2() > v.energy_cut:
        raise TrustExceeded(f"state energy {Fraction(s.energy2(), 2)} above cut "
                            f"{Fraction(v.energy_cut, 2)}")
    return v.terms.get(s, mpq(0))


def bilinear_defect(tau: FockVector, cut=None):
    """Σ_p (v_p ∧ τ) ⊗ ι(v_p*) τ on all components exact at the given cut.

    A component (s1, s2) is exact when energy(s1) + energy(s2) <= cut, because
    it only collects pairs of τ-components with the same energy sum.  Returns
    a dict ``(s1, s2) -> coefficient`` holding the nonzero exact entries.
    """
    if cut is None:
        cut = tau.energy_cut
    if cut is None:
        cut = tau.max_energy2() or 0
        cut *= 2
    states = list(tau.terms)
    if not states:
        return {}
    lo = min([s.holes[0] for s in states if s.holes] + [0])
    hi = max([s.particles[-1] for s in states if s.particles] + [-1])
    out = {}
    for p in range(lo, hi + 1):
        plus = []
        minus = []
        for st, c in tau.terms.items():
            r = wedge(st, p)
            if r:
                plus.append((r[1], c * r[0]))
            r = contract(st, p)
            if r:
                minus.append((r[1], c * r[0]))
        for s1, c1 in plus:
            e1 = s1.energy2()
            for s2, c2 in minus:
                if e1 + s2.energy2() > cut:
                    continue
                key = (s1, s2)
                t = out.get(key, 0) + c1 * c2
                if t:
                    out[key] = t
                else:
                    out.pop(key, None)
    return out


def _partitions(total, max_part=None):
    if max_part is None:
        max_part = total
    if total == 0:
        yield ()
        return
    for first in range(min(total, max_part), 0, -1):
        for rest in _partitions(total - first, first):
            yield (first,) + rest


def _color_positions(n, color, charge, partition):
    """(particles, holes) positions of one color from its charge and partition."""
    length = len(partition)
    occ = {partition[i] - (i + 1) + charge for i in range(length)}
    tail_top = charge - length - 1  # every m <= tail_top is occupied
    ms = sorted(occ | set(range(0, tail_top + 1)))
    particles = [n * m + color - 1 for m in ms if m >= 0]
    holes = [n * m + color - 1 for m in range(tail_top + 1, 0) if m not in occ]
    return particles, holes


def enumerate_basis(n, energy_cut, charge=None):
    """All basis states with doubled energy <= energy_cut (in one charge sector if given)."""
    if charge is None:
        charges = []
        bound = int(energy_cut ** 0.5) + 1
        def rec(prefix, left):
            if len(prefix) == n:
                if sum(prefix) == 0:
                    charges.append(tuple(prefix))
                return
            for c in range(-bound, bound + 1):
                if c * c <= left:
                    rec(prefix + [c], left - c * c)
        rec([], energy_cut)
    else:
        if len(charge) != n:
            raise StructuralError("charge vector length must equal n")
        charges = [tuple(charge)]
    out = []
    for ch in charges:
        base = sum(c * c for c in ch)
        if base > energy_cut:
            continue
        budget = (energy_cut - base) // 2
        # distribute partition sizes among colors
        def rec2(color, left, parts):
            if color > n:
                ps, hs = [], []
                for c, lam in enumerate(parts, start=1):
                    p, h = _color_positions(n, c, ch[c - 1], lam)
                    ps += p
                    hs += h
                out.append(FockState(n, tuple(sorted(ps)), tuple(sorted(hs))))
                return
            for size in range(left + 1):
                for lam in _partitions(size):
                    rec2(color + 1, left - size, parts + [lam])
        rec2(1, budget, [])
    return out


# ---------------------------------------------------------------------------
# vertex operators


def psi_field_coefficients(sign, color, w: FockState, powers):
    """Coefficients of z^ℓ in ψ^{±(i)}(z)|w⟩ = Σ_m ψ_m z^{-m-1/2}|w⟩."""
    v = FockVector.basis(w)
    return {l: apply_kernel(v, psi_kernel, sign, color, -2 * l - 1, cut=None, delta=2 * l + 1)
            for l in powers}


def vertex_field_coefficients(sign, color, w: FockState, powers, cut):
    """Coefficients of z^ℓ in Q_i^{±1} z^{±α_0} Γ_-(±[z]) Γ_+(∓[z^{-1}]) |w⟩.

    Evaluated at z = 1: a term's z-power is half the net energy change of the
    two Γ factors, shifted by ±k_i from z^{±α_0}.  Powers whose Γ-part would
    need energies above ``cut`` raise TrustExceeded.
    """
    n = w.n
    e = 1 if sign == "+" else -1
    ch = w.charge()[color - 1]
    e0 = w.energy2()
    top = max(powers) - e * ch
    if e0 + 2 * top > cut:
        raise TrustExceeded(f"vertex power {max(powers)} needs energy cut {e0 + 2 * top}")
    kmax_plus = max(1, e0 // 2 + 1)
    plus = {(color, k): mpq(-e, k) for k in range(1, kmax_plus + 1)}
    v = apply_gamma("+", plus, FockVector.basis(w))
    kmax_minus = max(1, (cut - 0) // 2 + 1)
    minus = {(color, k): mpq(e, k) for k in range(1, kmax_minus + 1)}
    v = apply_gamma("-", minus, v, cut=cut)
    out = {}
    for l in powers:
        p = l - e * ch
        target = e0 + 2 * p
        part = FockVector({s: c for s, c in v.terms.items() if s.energy2() == target}, n, None)
        out[l] = apply_kernel(part, q_kernel, color, e, cut=None)
    return out
