"""Independent reference constructions used to derive frozen expectations."""

from gmpy2 import mpq

from kpgive.series import MatrixSeries, TruncPoly, pmat_zero


def compositions(l):
    if l == 0:
        yield ()
        return
    for first in range(1, l + 1):
        for rest in compositions(l - first):
            yield (first,) + rest


def factorial(k):
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def exp_coefficient(var, l, n, W, sign=1):
    """z^l coefficient of exp(sign Σ_m var(m) z^m) via ordered compositions of l."""
    total = TruncPoly.zero(n, W)
    for parts in compositions(l):
        term = TruncPoly.one(n, W)
        for m in parts:
            term = term * var(m) * sign
        total = total + term * mpq(1, factorial(len(parts)))
    return total


def exp_diag(n, Z, W, sign=1, levels=None):
    """diag_k exp(sign Σ_m x[k,m] z^m); ``levels`` filters which x[k,m] appear."""
    coeffs = []
    for l in range(Z + 1):
        M = [list(r) for r in pmat_zero(n, W)]
        for k in range(1, n + 1):
            def var(m, k=k):
                if levels is not None and not levels(m):
                    return TruncPoly.zero(n, W)
                return TruncPoly.var(k, m, n=n, trust=W)
            M[k - 1][k - 1] = exp_coefficient(var, l, n, W, sign)
        coeffs.append(M)
    return MatrixSeries(coeffs, n)
