"""Genus-zero Givental/Lee flows and their KP-side counterparts.

Four independent routes to the first-order change of the potential F under
A -> A exp(εa):

* ``lee-theta``: Lee's formulas in the θ-vectors, as functions of t, composed
  with t(x₁);
* ``lee-psi``: the same formulas rewritten in the Ψ_k;
* ``kp``: the flat-coordinate derivative of F fed with the KP flow of Ψ;
* ``dual``: the whole Fock/τ/Ψ pipeline rerun over dual numbers with the factor
  (1 + εa), F recomputed and its derivative taken with t frozen.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from gmpy2 import mpq

from .errors import StructuralError, TrustExceeded, VerificationFailed
from .frobenius import potential, theta_series
from .kptau import Cutoffs, wave_psi
from .loop import LoopAlgebraElement, LoopGroupElement  # noqa: F401  (re-exported)
from .series import (MatrixSeries, TruncPoly, jacobian, pmat_add, pmat_inverse, pmat_mul,
                     pmat_neg, pmat_scale, pmat_smul, pmat_sub, pmat_sum_entries,
                     pmat_transpose, pmat_zero, recenter, substitute_series)

__all__ = [
    "LoopAlgebraElement", "LoopGroupElement", "DerivativeReport", "lee_sF", "lee_rF",
    "lee_dF_psi", "kp_dPsi", "uniform_dPsi", "flat_derivative", "dual_derivative",
    "dual_frozen_dF", "verify_main_theorem",
]


def _row_dot(u, S, v):
    """Σ_ij u_i S_ij v_j for polynomial row vectors u, v and a scalar matrix S."""
    acc = None
    n = len(u)
    for i in range(n):
        for j in range(n):
            c = S[i][j]
            if c:
                t = u[i] * v[j] * c
                acc = t if acc is None else acc + t
    if acc is None:
        acc = (u[0] * v[0]) * 0
    return acc


def _require_sign(a, sign):
    if a.sign != sign:
        raise StructuralError(f"expected a {sign}-type loop algebra element")
    a.check_twisted()


# ---------------------------------------------------------------------------
# Lee's formulas in θ


def lee_sF(s: LoopAlgebraElement, theta_t) -> TruncPoly:
    """s.F = −½θ⁰s₃θ⁰ᵗ + θ⁰s₂θ¹ᵗ − θ⁰s₁θ²ᵗ + ½θ¹s₁θ¹ᵗ."""
    _require_sign(s, "-")
    th = theta_t.theta_t if hasattr(theta_t, "theta_t") else theta_t
    if s.max_level > 3:
        warnings.warn("levels of s above 3 do not contribute to s.F and are ignored",
                      stacklevel=2)
    if len(th) < 3:
        raise TrustExceeded("s.F needs θ up to depth 2")
    s1, s2, s3 = s.level(1), s.level(2), s.level(3)
    half = mpq(1, 2)
    out = _row_dot(th[0], s3, th[0]) * (-half)
    out = out + _row_dot(th[0], s2, th[1])
    out = out - _row_dot(th[0], s1, th[2])
    out = out + _row_dot(th[1], s1, th[1]) * half
    return out


def lee_rF(r: LoopAlgebraElement, theta_t) -> TruncPoly:
    """r.F = Σ_l (−θ^{l+3}r_lθ⁰ᵗ + θ^{l+2}r_lθ¹ᵗ + ½Σ_{m+m'=l−1}(−1)^{m'+1}θ^{m+2}r_lθ^{m'+2,t})."""
    _require_sign(r, "+")
    th = theta_t.theta_t if hasattr(theta_t, "theta_t") else theta_t
    if r.max_level + 3 >= len(th):
        raise TrustExceeded(f"r.F at level {r.max_level} needs θ up to depth {r.max_level + 3}")
    half = mpq(1, 2)
    out = _row_dot(th[0], r.level(1), th[0]) * 0
    for l, R in r.terms:
        out = out - _row_dot(th[l + 3], R, th[0])
        out = out + _row_dot(th[l + 2], R, th[1])
        for m in range(l):
            mp = l - 1 - m
            sign = 1 if (mp + 1) % 2 == 0 else -1
            out = out + _row_dot(th[m + 2], R, th[mp + 2]) * (half * sign)
    return out


# ---------------------------------------------------------------------------
# the same in Ψ


def _bracket(P0, M):
    """[Ψ₀ᵗ M Ψ₀], the sum of all entries."""
    return pmat_sum_entries(pmat_mul(pmat_mul(pmat_transpose(P0), M), P0))


def _psi_coeffs(psi):
    return psi.psi if hasattr(psi, "psi") else psi


def lee_dF_psi(a: LoopAlgebraElement, psi) -> TruncPoly:
    """Lee's a.F written through Ψ₀, Ψ₁, … (x₁ regime)."""
    a.check_twisted()
    P = _psi_coeffs(psi).restrict("x1")
    half = mpq(1, 2)
    T = pmat_transpose
    if a.sign == "-":
        if a.max_level > 3:
            warnings.warn("levels of s above 3 do not contribute to s.F and are ignored",
                          stacklevel=2)
        s1, s2, s3 = a.level(1), a.level(2), a.level(3)
        P0, P1, P2 = P.coeff(0), P.coeff(1), P.coeff(2)
        terms = [
            pmat_neg(pmat_mul(pmat_smul(P2, s1), T(P0))),
            pmat_mul(pmat_smul(P1, s1), T(P1)),
            pmat_neg(pmat_mul(pmat_smul(P0, s1), T(P2))),
            pmat_neg(pmat_mul(pmat_smul(P1, s2), T(P0))),
            pmat_mul(pmat_smul(P0, s2), T(P1)),
            pmat_neg(pmat_mul(pmat_smul(P0, s3), T(P0))),
        ]
        inner = terms[0]
        for t in terms[1:]:
            inner = pmat_add(inner, t)
        return _bracket(P0, inner) * half
    out = None
    P0 = P.coeff(0)
    for l, R in a.terms:
        inner = None
        for i in range(l + 4):
            t = pmat_mul(pmat_smul(P.coeff(l + 3 - i), R), T(P.coeff(i)))
            if i % 2:
                t = pmat_neg(t)
            inner = t if inner is None else pmat_add(inner, t)
        val = _bracket(P0, inner) * (-half)
        out = val if out is None else out + val
    if out is None:
        return pmat_sum_entries(P0) * 0
    return out


# ---------------------------------------------------------------------------
# KP flows of Ψ


def kp_dPsi(a: LoopAlgebraElement, psi) -> MatrixSeries:
    """First-order change of Ψ under A -> A exp(εa).

    s-type: s.Ψ_k = Σ_{i<k} Ψ_i s_{k−i}.  r-type (per level ℓ, summed):
    Ψ_{ℓ+k} r − Σ_{p=1}^{ℓ} Σ_{q=0}^{ℓ−p} (−1)^{ℓ−p−q} Ψ_q r Ψᵗ_{ℓ−p−q} Ψ_{p+k}.
    The r-type formula assumes Ψ in the odd-restricted regime.
    """
    a.check_twisted()
    P = _psi_coeffs(psi)
    Z = P.trust_order
    n = P.n
    if a.sign == "-":
        out = []
        for k in range(Z + 1):
            acc = pmat_scale(P.coeff(0), 0)
            for l, S in a.terms:
                if l <= k:
                    acc = pmat_add(acc, pmat_smul(P.coeff(k - l), S))
            out.append(acc)
        return MatrixSeries(out, n)
    top = Z - a.max_level
    if top < 0:
        raise TrustExceeded(f"z-order {Z} too small for r-level {a.max_level}")
    out = []
    for k in range(top + 1):
        acc = None
        for l, R in a.terms:
            term = pmat_smul(P.coeff(l + k), R)
            for p in range(1, l + 1):
                for q in range(0, l - p + 1):
                    b = l - p - q
                    t = pmat_mul(pmat_mul(pmat_smul(P.coeff(q), R), pmat_transpose(P.coeff(b))),
                                 P.coeff(p + k))
                    term = pmat_sub(term, t) if b % 2 == 0 else pmat_add(term, t)
            acc = term if acc is None else pmat_add(acc, term)
        out.append(acc)
    return MatrixSeries(out, n)


def uniform_dPsi(a: LoopAlgebraElement, psi) -> MatrixSeries:
    """Ψ̇ = Ψg − (Ψ g Ψ(−z)ᵗ)₋ Ψ with g = a(ζ = 1/z), via Laurent arithmetic."""
    P = _psi_coeffs(psi)
    Z = P.trust_order
    n = P.n
    if a.sign == "-":
        g = {l: S for l, S in a.terms}
    else:
        g = {-l: R for l, R in a.terms}
    lmax = a.max_level if a.sign == "+" else 0
    top = Z - lmax
    if top < 0:
        raise TrustExceeded(f"z-order {Z} too small for level {a.max_level}")
    psi_c = {k: P.coeff(k) for k in range(Z + 1)}
    psi_mt = {k: (pmat_transpose(M) if k % 2 == 0 else pmat_neg(pmat_transpose(M)))
              for k, M in psi_c.items()}

    def lmul_scalar(A, G):
        out = {}
        for i, M in A.items():
            for j, S in G.items():
                t = pmat_smul(M, S)
                out[i + j] = t if i + j not in out else pmat_add(out[i + j], t)
        return out

    def lmul(A, B, keep):
        out = {}
        for i, M in A.items():
            for j, N in B.items():
                if not keep(i + j):
                    continue
                t = pmat_mul(M, N)
                out[i + j] = t if i + j not in out else pmat_add(out[i + j], t)
        return out

    Pg = lmul_scalar(psi_c, g)
    X = lmul(Pg, psi_mt, lambda p: p < 0)
    XP = lmul(X, psi_c, lambda p: 0 <= p <= top)
    out = []
    for k in range(top + 1):
        acc = Pg.get(k)
        if acc is None:
            acc = pmat_scale(psi_c[0], 0)
        if k in XP:
            acc = pmat_sub(acc, XP[k])
        out.append(acc)
    return MatrixSeries(out, n)


def flat_derivative(psi, dpsi) -> TruncPoly:
    """½[Ψ₀ᵗ(−Ψ̇₃Ψ₀ᵗ + Ψ̇₂Ψ₁ᵗ − Ψ̇₁Ψ₂ᵗ + Ψ̇₀Ψ₃ᵗ)Ψ₀] (x₁ regime)."""
    P = _psi_coeffs(psi).restrict("x1")
    D = _psi_coeffs(dpsi).restrict("x1")
    T = pmat_transpose
    inner = pmat_neg(pmat_mul(D.coeff(3), T(P.coeff(0))))
    inner = pmat_add(inner, pmat_mul(D.coeff(2), T(P.coeff(1))))
    inner = pmat_sub(inner, pmat_mul(D.coeff(1), T(P.coeff(2))))
    inner = pmat_add(inner, pmat_mul(D.coeff(0), T(P.coeff(3))))
    return _bracket(P.coeff(0), inner) * mpq(1, 2)


# ---------------------------------------------------------------------------
# dual-number oracle


def dual_wave(A: LoopGroupElement, a: LoopAlgebraElement, cutoffs: Cutoffs, regime="odd"):
    """Ψ(A·(1 + εa)) over dual numbers."""
    a.check_twisted()
    return wave_psi(A, "+", cutoffs, regime=regime, tangent=a)


def dual_derivative(A: LoopGroupElement, a: LoopAlgebraElement, cutoffs: Cutoffs,
                    regime="odd") -> MatrixSeries:
    """ε-part of Ψ(A·(1 + εa)), i.e. ∂/∂ε Ψ(A exp(εa)) at ε = 0."""
    if a.is_zero():
        psi = wave_psi(A, "+", cutoffs, regime=regime).psi
        return psi.map_entries(lambda e: e * 0)
    return dual_wave(A, a, cutoffs, regime).psi.eps_part()


def dual_frozen_dF(dual_psi) -> TruncPoly:
    """∂F/∂ε at fixed flat coordinates from a dual-number Ψ (x₁ regime).

    Ḟ(x₁) − Σ_i ∂F/∂t^i · ṫ^i(x₁), with ∂F/∂t obtained through the inverse
    Jacobian of t(x₁).  Exact up to weight W − 1.
    """
    P = _psi_coeffs(dual_psi).restrict("x1")
    th = theta_series(P, 3)
    n = th.n
    F = sum((th.flat_map[i] * th.theta[2][i] - th.theta[3][i] for i in range(n)),
            TruncPoly.zero(n, th.trust)) * mpq(1, 2)
    F_val, F_eps = F.value_part(), F.eps_part()
    t_val = [t.value_part() for t in th.flat_map]
    t_eps = [t.eps_part() for t in th.flat_map]
    J = jacobian(t_val)
    Jinv = pmat_inverse(J)
    grad_x = [F_val.derivative(j + 1, 1) for j in range(n)]
    out = F_eps
    for i in range(n):
        dFdt = None
        for j in range(n):
            t = Jinv[j][i] * grad_x[j]
            dFdt = t if dFdt is None else dFdt + t
        out = out - dFdt * t_eps[i]
    return out


# ---------------------------------------------------------------------------
# report and main-theorem check


@dataclass
class DerivativeReport:
    side: str
    dF: TruncPoly
    dPsi: object = None
    residuals: dict = field(default_factory=dict)
    legs: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.residuals.values())

    def to_json(self):
        out = {"side": self.side, "dF": self.dF.to_json(),
               "residuals_zero": dict(self.residuals),
               "legs": {k: v.to_json() for k, v in self.legs.items()}}
        if self.dPsi is not None:
            out["dPsi"] = self.dPsi.to_json("dpsi")
        return out


def _common(p, q):
    w = min(p.trust, q.trust)
    return p.truncate(w), q.truncate(w)


def _zero_within(p, q):
    a, b = _common(p, q)
    return (a - b).is_zero(), (a - b)


def _series_agree(A: MatrixSeries, B: MatrixSeries):
    z = min(A.trust_order, B.trust_order)
    diff = A.truncate_order(z) - B.truncate_order(z)
    return diff.is_zero(), diff


def lee_theta_composed(a, frob, theta) -> TruncPoly:
    """Lee's θ-formula in recentered t, composed back with t̃(x₁)."""
    val = lee_sF(a, frob) if a.sign == "-" else lee_rF(a, frob)
    shifted, _ = recenter(theta.flat_map)
    return substitute_series(val, shifted, symbol="x")


def compute_legs(A: LoopGroupElement, a: LoopAlgebraElement, cutoffs: Cutoffs):
    """Every leg of the main-theorem comparison; returns (legs, psis)."""
    if A.n != a.n:
        raise StructuralError("A and a have different n")
    a.check_twisted()
    A.check_twisted(cutoffs.Z)
    psi_odd = wave_psi(A, "+", cutoffs, regime="odd")
    P = psi_odd.psi
    parts = a.split_levels() if a.sign == "+" else [a]
    # KP flow of Ψ, per level (linearity of the tangent action)
    kp = None
    for part in parts:
        d = kp_dPsi(part, P)
        kp = d if kp is None else kp + d
    dual_psi = dual_wave(A, a, cutoffs, regime="odd")
    dual = dual_psi.psi.eps_part()
    theta = theta_series(P, max(3, min(cutoffs.D, P.trust_order)))
    frob = potential(theta, cutoffs.T)
    legs = {
        "kp": flat_derivative(P, kp),
        "lee-psi": lee_dF_psi(a, P),
        "lee-theta": lee_theta_composed(a, frob, theta),
        "dual": dual_frozen_dF(dual_psi.psi),
        "kp-dual-psi": flat_derivative(P, dual),
    }
    return legs, {"psi": P, "kp": kp, "dual": dual}


def verify_main_theorem(A: LoopGroupElement, a: LoopAlgebraElement, cutoffs: Cutoffs,
                        raise_on_failure=True) -> DerivativeReport:
    legs, series = compute_legs(A, a, cutoffs)
    residuals = {}
    first = None
    ok, diff = _series_agree(series["kp"], series["dual"])
    residuals["dPsi kp = dual"] = ok
    if not ok:
        first = ("dPsi kp = dual", diff.first_nonzero())
    ref = legs["lee-psi"]
    for name in ("kp", "kp-dual-psi", "lee-theta", "dual"):
        ok, d = _zero_within(legs[name], ref)
        residuals[f"dF {name} = lee-psi"] = ok
        if not ok and first is None:
            first = (f"dF {name} = lee-psi", d.first_nonzero())
    report = DerivativeReport("kp-flat", legs["kp"], series["kp"], residuals, legs)
    if first is not None and raise_on_failure:
        raise VerificationFailed(f"residual {first[0]} nonzero at {first[1]}",
                                 residual=report, first_nonzero=first[1])
    return report
