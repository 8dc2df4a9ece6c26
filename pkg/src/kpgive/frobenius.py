"""θ-vectors, flat coordinates and the genus-zero potential built from Ψ."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from gmpy2 import mpq

from .errors import InconsistentInput, NonInvertibleFlatMap, TrustExceeded
from .series import (TruncPoly, invert_coordinate_map, jacobian, linear_part, recenter,
                     inverse_scalar_matrix, substitute_series)


def _to_x1(p: TruncPoly) -> TruncPoly:
    """Keep only x[i,1] monomials; they become the level-1 variables of a flat chart."""
    return p.restrict("x1")


@dataclass
class ThetaData:
    theta: list  # theta[d][i], polynomials in x[i,1]
    flat_map: list  # t^i(x1) = theta[1][i]
    jacobian: tuple
    n: int

    @property
    def depth(self):
        return len(self.theta) - 1

    @property
    def trust(self):
        return self.theta[0][0].trust

    def to_json(self):
        out = {}
        for d, row in enumerate(self.theta):
            for i, p in enumerate(row):
                out[f"theta[{d}][{i + 1}]"] = p.to_json()
        for i, p in enumerate(self.flat_map):
            out[f"flat_map[{i + 1}]"] = p.to_json()
        return out


def theta_series(psi, D=None) -> ThetaData:
    """θ^{(d)} = (1,…,1)Ψ₀ᵗΨ_d in the x₁-only regime, for d = 0..D."""
    series = psi.psi if hasattr(psi, "psi") else psi
    n = series.n
    D = series.trust_order if D is None else D
    if D > series.trust_order:
        raise TrustExceeded(f"θ depth {D} beyond z-order {series.trust_order}")
    coeffs = [tuple(tuple(_to_x1(e) for e in row) for row in series.coeff(d)) for d in range(D + 1)]
    P0 = coeffs[0]
    u = [sum(P0[k][1:], P0[k][0]) for k in range(n)]
    theta = []
    for d in range(D + 1):
        Pd = coeffs[d]
        theta.append([sum((u[k] * Pd[k][i] for k in range(1, n)), u[0] * Pd[0][i])
                      for i in range(n)])
    for i, p in enumerate(theta[0]):
        if p != TruncPoly.one(n, p.trust):
            raise InconsistentInput(f"θ^(0)_{i + 1} = {p!r} is not 1 within trust; "
                                    "A is not twisted or the cutoffs are inconsistent")
    flat = list(theta[1]) if D >= 1 else []
    jac = jacobian(flat) if flat else ()
    return ThetaData(theta, flat, jac, n)


@dataclass
class FrobeniusData:
    F_x: TruncPoly
    F_t: TruncPoly
    theta_t: list  # theta_t[d][i], polynomials in recentered t
    basepoint: list  # t(0), the shift removed before inversion
    x_of_t: list
    n: int

    @property
    def trust(self):
        return self.F_t.trust

    def low_degree_terms(self):
        """Degree <= 2 part of F_t: reported but irrelevant for WDVV."""
        return {m: c for m, c in self.F_t.coeffs.items() if sum(e for _, e in m) <= 2}

    def to_json(self):
        return {"F_x": self.F_x.to_json(), "F_t": self.F_t.to_json(),
                "basepoint": [str(c) for c in self.basepoint],
                "theta_t": {f"theta[{d}][{i + 1}]": p.to_json()
                            for d, row in enumerate(self.theta_t) for i, p in enumerate(row)}}


def flat_inverse(theta: ThetaData):
    """(x₁ as series in recentered t̃, t(0)); raises if the flat map is singular."""
    shifted, base = recenter(theta.flat_map)
    try:
        inverse_scalar_matrix(linear_part(shifted))
    except NonInvertibleFlatMap:
        raise NonInvertibleFlatMap("flat map t(x₁) has a singular Jacobian at the origin") from None
    return invert_coordinate_map(shifted), base


def potential(theta: ThetaData, T=None) -> FrobeniusData:
    """F = ½ Σ_i (t^i θ^{(2)}_i − θ^{(3)}_i) in x₁ and in recentered flat coordinates."""
    if theta.depth < 3:
        raise TrustExceeded("the potential needs θ up to depth 3")
    n = theta.n
    F_x = sum((theta.flat_map[i] * theta.theta[2][i] - theta.theta[3][i] for i in range(n)),
              TruncPoly.zero(n, theta.trust)) * mpq(1, 2)
    x_of_t, base = flat_inverse(theta)
    trust = theta.trust if T is None else min(theta.trust, T)
    F_t = substitute_series(F_x, x_of_t, trust=trust, symbol="t")
    theta_t = [[substitute_series(p, x_of_t, trust=trust, symbol="t") for p in row]
               for row in theta.theta]
    return FrobeniusData(F_x, F_t, theta_t, base, x_of_t, n)


def _d(p, *idx):
    for i in idx:
        p = p.derivative(i, 1)
    return p


def third_derivatives(F: TruncPoly, n):
    out = {}
    for k, l, m in product(range(1, n + 1), repeat=3):
        key = tuple(sorted((k, l, m)))
        if key not in out:
            out[key] = _d(F, *key)
    return lambda k, l, m: out[tuple(sorted((k, l, m)))]


@dataclass
class DefectSummary:
    checked: int
    all_zero: bool
    first_nonzero: object = None
    trust: int = 0

    def to_json(self):
        return {"max_monomials_checked": self.checked, "all_zero": self.all_zero,
                "first_nonzero": self.first_nonzero, "trust": self.trust}


def summarize(defects) -> DefectSummary:
    """defects: iterable of (label, TruncPoly)."""
    checked = 0
    trust = None
    for label, p in defects:
        checked += 1
        trust = p.trust if trust is None else min(trust, p.trust)
        if p:
            return DefectSummary(checked, False, f"{label}: {p.first_nonzero()}", p.trust)
    return DefectSummary(checked, True, None, trust or 0)


def _dot(terms):
    terms = iter(terms)
    acc = next(terms)
    for t in terms:
        acc = acc + t
    return acc


def wdvv_defect(f, n=None):
    """Σ_m F_{klm}F_{mpq} − Σ_m F_{plm}F_{mkq} for every (k,l,p,q), identity metric."""
    F = f.F_t if isinstance(f, FrobeniusData) else f
    n = F.n if n is None else n
    F3 = third_derivatives(F, n)
    out = []
    for k, l, p, q in product(range(1, n + 1), repeat=4):
        lhs = _dot(F3(k, l, m) * F3(m, p, q) for m in range(1, n + 1))
        rhs = _dot(F3(p, l, m) * F3(m, k, q) for m in range(1, n + 1))
        out.append(((k, l, p, q), lhs - rhs))
    return out


def gradient_defect(f: FrobeniusData):
    """∂F/∂t^m − θ^{(2)}_m for each m."""
    out = []
    for m in range(1, f.n + 1):
        d = _d(f.F_t, m)
        out.append((m, d - f.theta_t[2][m - 1].truncate(d.trust)))
    return out


def trr_defect(f: FrobeniusData, s):
    """∂²θ^{(s)}_i/∂t^k∂t^l − Σ_m F_{klm} ∂θ^{(s-1)}_i/∂t^m for all (k, l, i)."""
    if s < 2:
        raise ValueError("TRR needs s >= 2")
    if s >= len(f.theta_t):
        raise TrustExceeded(f"θ depth {len(f.theta_t) - 1} too small for s={s}")
    n = f.n
    F3 = third_derivatives(f.F_t, n)
    out = []
    for k, l, i in product(range(1, n + 1), repeat=3):
        lhs = _d(f.theta_t[s][i - 1], k, l)
        rhs = _dot(F3(k, l, m) * _d(f.theta_t[s - 1][i - 1], m) for m in range(1, n + 1))
        out.append(((k, l, i), lhs - rhs))
    return out


def frobenius_from_psi(psi, cutoffs=None, D=None):
    D = D if D is not None else (cutoffs.D if cutoffs is not None else None)
    th = theta_series(psi, D)
    return th, potential(th, None if cutoffs is None else cutoffs.T)
