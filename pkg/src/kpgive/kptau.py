"""Tau-function components and wave matrices of a loop-group orbit point A|0⟩.

All pairings ⟨bra|Γ_+(x) v⟩ are computed on the bra side (see
:func:`kpgive.fock.pair_gamma_plus`), so Fock vectors only ever carry scalar
or dual-number coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from gmpy2 import mpq

from .errors import NonUnitConstantTerm, StructuralError, TrustExceeded
from .fock import (FockVector, Tangent, apply_factors, apply_gamma_plus, apply_kernel, apply_psi,
                   charge_state, extract_coefficient, pair_gamma_plus, psi_kernel)
from .loop import LoopGroupElement, series_of_product
from .rings import value_part
from .series import MatrixSeries, TruncPoly, pmat_scale, pmat_zero


@dataclass(frozen=True)
class Cutoffs:
    """Truncation parameters.

    ``E`` doubled energy cut, ``W`` x-weight, ``Z`` z-order, ``T`` t-degree,
    ``D`` θ depth.  With ``trim`` the energy cut actually used is the smallest
    one that is provably exact for the requested (W, Z); ``E`` then only acts
    as a budget.  ``trim=False`` forces the cut to ``E``.
    """

    E: int = 24
    W: int = 4
    Z: int = 4
    T: int = 6
    D: int = 4
    trim: bool = True

    def __post_init__(self):
        for name in ("E", "W", "Z", "T", "D"):
            if getattr(self, name) < 0:
                raise ValueError(f"cutoff {name} must be non-negative")

    @classmethod
    def default_for(cls, W, Z, T=6, D=None):
        return cls(E=2 * (W + Z + 1) + 4, W=W, Z=Z, T=T, D=Z if D is None else D)

    def bumped(self, by=4):
        return replace(self, E=self.E + by, trim=False)

    def to_json(self):
        return {"energy2": self.E, "xweight": self.W, "zorder": self.Z, "tdegree": self.T,
                "thetaDepth": self.D, "trim": self.trim}


def _factors(A, tangent=None):
    factors = list(A.factors)
    if tangent is not None and not tangent.is_zero():
        if tangent.n != A.n:
            raise StructuralError("tangent direction and group element have different n")
        factors.append(Tangent(tangent))
    return factors


def _ordering_exact(factors):
    seen_lowering = False
    for f in factors:
        if isinstance(f, Tangent):
            continue
        if not f.raises:
            seen_lowering = True
        elif seen_lowering:
            return False
    return True


def _energy_cut(cut_need, cutoffs: Cutoffs, factors):
    if cutoffs.E < cut_need:
        raise TrustExceeded(f"energy budget {cutoffs.E} below the {cut_need} needed "
                            f"for x-weight {cutoffs.W}")
    if cutoffs.trim and _ordering_exact(factors):
        return cut_need
    return cutoffs.E


def orbit_vector(A, cutoffs: Cutoffs, *, tangent=None, start=None, need=None):
    """A·(1 + ε tangent)·start (default start = |0⟩) at the cut required for ``need``."""
    factors = _factors(A, tangent)
    start = FockVector.vacuum(A.n) if start is None else start
    cut = _energy_cut(need if need is not None else 2 * cutoffs.W, cutoffs, factors)
    if not any(f.raises for f in factors):
        v = apply_factors(factors, start, None)
        return FockVector(v.terms, v.n, cut, v.certified)
    return apply_factors(factors, start, cut)


# ---------------------------------------------------------------------------
# tau


@dataclass
class TauComponent:
    charge: tuple
    value: TruncPoly
    certified: bool = True

    def to_json(self):
        return {"charge": list(self.charge), "value": self.value.to_json(),
                "certified": self.certified}


def tau(A: LoopGroupElement, charge=None, cutoffs: Cutoffs = Cutoffs(), *, regime="all",
        method="pair", tangent=None) -> TauComponent:
    """τ_k(x) = ⟨0|Q_n^{-k_n}...Q_1^{-k_1} Γ_+(x) A|0⟩ truncated at x-weight W."""
    n = A.n
    charge = tuple(charge) if charge is not None else (0,) * n
    if len(charge) != n:
        raise StructuralError("charge vector length must equal n")
    W = cutoffs.W
    if sum(charge) != 0:
        return TauComponent(charge, TruncPoly.zero(n, W))
    bra, sign = charge_state(charge)
    need = bra.energy2() + 2 * W
    v = orbit_vector(A, cutoffs, tangent=tangent, need=need)
    if method == "pair":
        value = pair_gamma_plus(bra, v, W, regime, sign=int(sign))
    elif method == "direct":
        g = apply_gamma_plus(v, W, regime)
        value = extract_coefficient(g, bra)
        if not isinstance(value, TruncPoly):
            value = TruncPoly.const(value, n, W)
        value = value.truncate(W) if sign == 1 else -value.truncate(W)
    else:
        raise ValueError(f"unknown method {method!r}")
    return TauComponent(charge, value, v.certified)


def tau0(A, cutoffs, *, regime="all", tangent=None):
    t = tau(A, None, cutoffs, regime=regime, tangent=tangent)
    c = t.value.constant_term()
    if value_part(c) != 1:
        raise NonUnitConstantTerm(f"τ₀(0) = {c}, expected 1")
    return t


# ---------------------------------------------------------------------------
# wave matrices


@dataclass
class WaveMatrix:
    sign: str
    psi: MatrixSeries
    cutoffs: Cutoffs
    regime: str = "all"
    certified: bool = True

    @property
    def n(self):
        return self.psi.n

    def coeff(self, l):
        return self.psi.coeff(l)

    def to_json(self):
        return {"sign": self.sign, "regime": self.regime, "certified": self.certified,
                "cutoffs": self.cutoffs.to_json(), "entries": self.psi.to_json("psi")}


def _charge_bra(n, color, exponent):
    ch = [0] * n
    ch[color - 1] = exponent
    return charge_state(ch)


def _numerators(A, sign, cutoffs, regime, tangent, powers, build):
    """Matrix of pairings ⟨Q_i^{±1}0|Γ_+ · build(k, ℓ)⟩ for each z-power ℓ."""
    n = A.n
    W = cutoffs.W
    bra_exp = 1 if sign == "+" else -1
    bras = [_charge_bra(n, i, bra_exp) for i in range(1, n + 1)]
    need = 1 + 2 * W
    certified = True
    rows = {}
    for l in powers:
        M = [[None] * n for _ in range(n)]
        for k in range(1, n + 1):
            v = build(k, l, need)
            if v is None:
                for i in range(n):
                    M[i][k - 1] = TruncPoly.zero(n, W)
                continue
            certified &= v.certified
            for i, (bra, s) in enumerate(bras):
                M[i][k - 1] = pair_gamma_plus(bra, v, W, regime, sign=int(s))
        rows[l] = M
    return rows, certified


def _normalize(rows, t0):
    inv = t0.invert()
    return {l: tuple(tuple(e * inv for e in row) for row in M) for l, M in rows.items()}


def wave_psi(A: LoopGroupElement, sign="+", cutoffs: Cutoffs = Cutoffs(), *, regime="all",
             tangent=None) -> WaveMatrix:
    """Ψ^±_{ik}(A,x,z) = ⟨0|Γ_+(x) Q_i^{∓1} A ψ^{±(k)}(z)|0⟩ / τ₀, z-orders 0..Z."""
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    n = A.n
    factors = _factors(A, tangent)
    t0 = tau0(A, cutoffs, regime=regime, tangent=tangent)

    def build(k, l, need):
        start = apply_psi(sign, k, Fraction(-2 * l - 1, 2), FockVector.vacuum(n))
        cut = _energy_cut(need, cutoffs, factors)
        if not any(f.raises for f in factors):
            v = apply_factors(factors, start, None)
            return FockVector(v.terms, v.n, cut, v.certified)
        return apply_factors(factors, start, cut)

    rows, cert = _numerators(A, sign, cutoffs, regime, tangent, range(cutoffs.Z + 1), build)
    rows = _normalize(rows, t0.value)
    psi = MatrixSeries([rows[l] for l in range(cutoffs.Z + 1)], n)
    return WaveMatrix(sign, psi, cutoffs, regime, cert and t0.certified)


@dataclass
class LaurentMatrix:
    """Matrix series with finitely many z-powers ``lo..hi`` (all exact within trust)."""

    coeffs: dict
    n: int
    lo: int
    hi: int

    def coeff(self, l):
        if l > self.hi:
            return pmat_zero(self.n, self.trust)
        if l < self.lo:
            raise TrustExceeded(f"z^{l} below computed range {self.lo}")
        return self.coeffs[l]

    @property
    def trust(self):
        return next(iter(self.coeffs.values()))[0][0].trust


def wave_phi(A: LoopGroupElement, sign="+", cutoffs: Cutoffs = Cutoffs(), *, regime="all",
             min_power=None) -> LaurentMatrix:
    """Φ^±_{ik}(A,x,z) = ⟨0|Γ_+(x) Q_i^{∓1} ψ^{±(k)}(z) A|0⟩ / τ₀.

    z-powers above W vanish within trust; powers down to ``min_power``
    (default -Z) are computed, which costs an energy cut of 2(W + |min_power|).
    """
    n = A.n
    W = cutoffs.W
    lo = -cutoffs.Z if min_power is None else min_power
    t0 = tau0(A, cutoffs, regime=regime)
    u = orbit_vector(A, cutoffs, need=2 * W + 2 * max(0, -lo))

    def build(k, l, need):
        # ψ_m with m = -l - 1/2 shifts doubled energy by 2l + 1
        if 2 * l + 1 > need:
            return None
        cut = None if u.energy_cut is None else u.energy_cut + 2 * l + 1
        return apply_kernel(u, psi_kernel, sign, k, -2 * l - 1, cut=cut)

    rows, cert = _numerators(A, sign, cutoffs, regime, None, range(lo, W + 1), build)
    rows = _normalize(rows, t0.value)
    return LaurentMatrix(rows, n, lo, W)


def loop_series_z(A: LoopGroupElement, order):
    """A(z) = A(ζ = 1/z) for a one-directional A: dict power -> scalar matrix."""
    direction = A.direction
    if direction == "mixed":
        raise StructuralError("A(z) expansion implemented for one-directional A only")
    n = A.n
    if direction == "identity":
        return {0: [[mpq(int(i == j)) for j in range(n)] for i in range(n)]}
    C = series_of_product(A.factors, order, n)
    sgn = 1 if direction == "-" else -1
    return {sgn * l: M for l, M in enumerate(C)}


def wave03_residual(A: LoopGroupElement, sign="+", cutoffs: Cutoffs = Cutoffs(), *,
                    regime="all"):
    """Ψ - Φ·A(z) on z-orders 0..Z for one-directional A (list of pmat residuals)."""
    n = A.n
    W, Z = cutoffs.W, cutoffs.Z
    direction = A.direction
    if direction == "mixed":
        raise StructuralError("wave03 check needs a one-directional A")
    psi = wave_psi(A, sign, cutoffs, regime=regime)
    if sign == "+":
        Az = loop_series_z(A, max(W, Z) + 1)
    else:
        # ψ^- transforms with A(z)^{-1ᵗ} = A(-z) for twisted A
        Az = {p: ([[(-1) ** (p % 2) * x for x in row] for row in M]) for p, M in
              loop_series_z(A, max(W, Z) + 1).items()}
    phi = wave_phi(A, sign, cutoffs, regime=regime, min_power=0)
    out = []
    for l in range(Z + 1):
        acc = [list(r) for r in psi.coeff(l)]
        for p, M in Az.items():
            q = l - p
            if q > W:
                continue
            if q < phi.lo:
                continue
            P = phi.coeff(q)
            for i in range(n):
                for k in range(n):
                    s = None
                    for j in range(n):
                        if M[j][k]:
                            t = P[i][j] * M[j][k]
                            s = t if s is None else s + t
                    if s is not None:
                        acc[i][k] = acc[i][k] - s
        out.append(tuple(tuple(r) for r in acc))
    return out


def orthogonality_defect(A: LoopGroupElement, cutoffs: Cutoffs = Cutoffs()) -> MatrixSeries:
    """Ψ(z)Ψ(-z)ᵗ - Id with x restricted to odd levels."""
    psi = wave_psi(A, "+", cutoffs, regime="odd").psi
    prod = psi * psi.negate_z_transpose()
    ident = MatrixSeries.identity(A.n, prod.trust_order, prod.trust_weight)
    return prod - ident


def psi_minus_defect(A: LoopGroupElement, cutoffs: Cutoffs = Cutoffs()) -> MatrixSeries:
    """Ψ⁻(z) - Ψ⁺(-z) with x restricted to odd levels.

    With rows labelled by the Q color and columns by the ψ color, duality gives
    Ψ⁻ = (Ψ⁺ᵗ)⁻¹ and orthogonality turns this into Ψ⁺(-z); the transposed form
    Ψ⁺(-z)ᵗ corresponds to the opposite index convention for Ψ⁻.
    """
    plus = wave_psi(A, "+", cutoffs, regime="odd").psi
    minus = wave_psi(A, "-", cutoffs, regime="odd").psi
    flipped = MatrixSeries([pmat_scale(plus.coeff(l), -1 if l % 2 else 1)
                            for l in range(plus.trust_order + 1)], plus.n)
    return minus - flipped


def stabilization_diff(compute, cutoffs: Cutoffs, by=4):
    """Run ``compute(cutoffs)`` at E and E+by with forced cuts; return (a, b, equal)."""
    base = replace(cutoffs, trim=False)
    a = compute(base)
    b = compute(base.bumped(by))
    return a, b, a == b
