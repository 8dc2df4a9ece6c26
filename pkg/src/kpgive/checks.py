"""Exhaustive operator-identity suites on truncated Fock spaces.

Each suite returns a :class:`SuiteResult`; ``first_failure`` describes the
first basis state on which an identity failed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from gmpy2 import mpq

from .fock import (FockVector, apply_alpha, apply_gamma, apply_psi, apply_Q, bilinear_defect,
                   enumerate_basis, psi_field_coefficients, vertex_field_coefficients)
from .series import TruncPoly


@dataclass
class SuiteResult:
    name: str
    checked: int
    ok: bool
    first_failure: str | None = None

    def to_json(self):
        return {"name": self.name, "checked": self.checked, "all_zero": self.ok,
                "first_failure": self.first_failure}


class _Tally:
    def __init__(self, name):
        self.name = name
        self.checked = 0
        self.failure = None

    def check(self, cond, describe):
        self.checked += 1
        if not cond and self.failure is None:
            self.failure = describe()

    def result(self):
        return SuiteResult(self.name, self.checked, self.failure is None, self.failure)


def _modes(kmax):
    return [Fraction(m, 2) for m in range(-2 * kmax + 1, 2 * kmax, 2)]


def clifford_suite(n, energy_cut, kmax=Fraction(5, 2)):
    """{ψ^+_k, ψ^-_l} = δ δ_{k,-l}, {ψ^+,ψ^+} = {ψ^-,ψ^-} = 0 on every basis state."""
    tally = _Tally("clifford")
    modes = _modes(int(kmax + Fraction(1, 2)))
    for w in enumerate_basis(n, energy_cut):
        v = FockVector.basis(w)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                for k in modes:
                    for l in modes:
                        for s1, s2 in (("+", "-"), ("+", "+"), ("-", "-")):
                            r = (apply_psi(s1, i, k, apply_psi(s2, j, l, v))
                                 + apply_psi(s2, j, l, apply_psi(s1, i, k, v)))
                            expect = v if (s1 != s2 and i == j and k == -l) else FockVector.zero(n)
                            tally.check(r == expect,
                                        lambda: f"{w.dump()}: psi{s1}({i},{k}) psi{s2}({j},{l})")
    return tally.result()


def oscillator_suite(n, energy_cut, kmax=3):
    """[α^{(i)}_k, α^{(j)}_{-l}] = k δ_ij δ_kl on every basis state."""
    tally = _Tally("oscillator")
    for w in enumerate_basis(n, energy_cut):
        v = FockVector.basis(w)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                for k in range(1, kmax + 1):
                    for l in range(1, kmax + 1):
                        r = (apply_alpha(i, i, k, apply_alpha(j, j, -l, v))
                             - apply_alpha(j, j, -l, apply_alpha(i, i, k, v)))
                        expect = v.scale(k) if (i == j and k == l) else FockVector.zero(n)
                        tally.check(r == expect, lambda: f"{w.dump()}: [a{i}_{k}, a{j}_-{l}]")
        for i in range(1, n + 1):
            tally.check(apply_alpha(i, i, 0, v) == v.scale(w.charge()[i - 1]),
                        lambda: f"{w.dump()}: alpha0 eigenvalue")
    return tally.result()


def q_suite(n, energy_cut, kmax=Fraction(5, 2)):
    """Q_iψ^{±(j)}_k = (−1)^{δ_ij+1} ψ^{±(j)}_{k∓δ_ij} Q_i, Q_iQ_j = −Q_jQ_i, Q_i^{-1}Q_i = 1."""
    tally = _Tally("Q-relations")
    modes = _modes(int(kmax + Fraction(1, 2)))
    for w in enumerate_basis(n, energy_cut):
        v = FockVector.basis(w)
        for i in range(1, n + 1):
            tally.check(apply_Q(i, -1, apply_Q(i, 1, v)) == v, lambda: f"{w.dump()}: Q^-1 Q")
            for j in range(1, n + 1):
                if i != j:
                    qq = apply_Q(i, 1, apply_Q(j, 1, v)) + apply_Q(j, 1, apply_Q(i, 1, v))
                    tally.check(qq.is_zero(), lambda: f"{w.dump()}: Q{i}Q{j} anticommute")
                d = 1 if i == j else 0
                sign = 1 if i == j else -1
                for k in modes:
                    for s in "+-":
                        shifted = k - d if s == "+" else k + d
                        lhs = apply_Q(i, 1, apply_psi(s, j, k, v))
                        rhs = apply_psi(s, j, shifted, apply_Q(i, 1, v)).scale(sign)
                        tally.check(lhs == rhs, lambda: f"{w.dump()}: Q{i} psi{s}({j},{k})")
    return tally.result()


def vertex_suite(n, energy_cut, powers=range(-6, 5)):
    """Coefficientwise ψ^{±(i)}(z)|w⟩ = Q_i^{±1} z^{±α_0} Γ_-(±[z]) Γ_+(∓[z^{-1}]) |w⟩."""
    tally = _Tally("vertex")
    powers = list(powers)
    for w in enumerate_basis(n, energy_cut):
        for color in range(1, n + 1):
            ch = w.charge()[color - 1]
            for sign in "+-":
                e = 1 if sign == "+" else -1
                cut = w.energy2() + 2 * max(0, max(powers) - e * ch)
                lhs = psi_field_coefficients(sign, color, w, powers)
                rhs = vertex_field_coefficients(sign, color, w, powers, cut)
                for l in powers:
                    tally.check(lhs[l] == rhs[l], lambda: f"{w.dump()}: psi{sign}({color}) z^{l}")
    return tally.result()


def _gamma_params(color, var_color, n, W):
    return {(color, k): TruncPoly.var(var_color, k, n=n, trust=W) for k in range(1, W + 1)}


def _gamma_factor(n, W):
    """γ(s, s') = exp(Σ k s_k s'_k) with s = x[1,·], s' = x[2,·]."""
    arg = TruncPoly.zero(n, W)
    for k in range(1, W + 1):
        arg = arg + TruncPoly.var(1, k, n=n, trust=W) * TruncPoly.var(2, k, n=n, trust=W) * k
    out = TruncPoly.one(n, W)
    term = TruncPoly.one(n, W)
    for p in range(1, W + 1):
        term = term * arg * mpq(1, p)
        out = out + term
    return out


def gamma_suite(n, energy_cut, W=4):
    """Γ^{(j)}_+(s)Γ^{(k)}_-(s') = γ(s,s')^{δ_jk} Γ^{(k)}_-(s')Γ^{(j)}_+(s) with formal s, s'."""
    tally = _Tally("gamma")
    nv = max(n, 2)
    gamma = _gamma_factor(nv, W)
    for w in enumerate_basis(n, energy_cut):
        v = FockVector({w: TruncPoly.one(nv, W)}, n)
        for j in range(1, n + 1):
            for k in range(1, n + 1):
                s = _gamma_params(j, 1, nv, W)
                sp = _gamma_params(k, 2, nv, W)
                lhs = apply_gamma("+", s, apply_gamma("-", sp, v))
                rhs = apply_gamma("-", sp, apply_gamma("+", s, v))
                if j == k:
                    rhs = FockVector({st: c * gamma for st, c in rhs.terms.items()}, n)
                tally.check(lhs == rhs, lambda: f"{w.dump()}: Gamma+({j}) Gamma-({k})")
    return tally.result()


def bilinear_suite(taus):
    """Bilinear identity defect for each (label, τ) pair."""
    tally = _Tally("bilinear")
    for label, tau in taus:
        d = bilinear_defect(tau)
        tally.check(not d, lambda: f"{label}: {len(d)} nonzero components")
    return tally.result()
