import pytest
from gmpy2 import mpq

from oracles import factorial
from kpgive.errors import InconsistentInput, NonInvertibleFlatMap
from kpgive.frobenius import (frobenius_from_psi, gradient_defect, potential, summarize,
                              theta_series, trr_defect, wdvv_defect)
from kpgive.kptau import Cutoffs, wave_psi
from kpgive.loop import LoopAlgebraElement, LoopGroupElement
from kpgive.sampling import Shape, sample_group
from kpgive.series import MatrixSeries, TruncPoly

SAMPLED = [
    (2, Shape(2, (("-", (1,)),))),
    (3, Shape(2, (("+", (1, 2)), ("-", (1, 2))))),
    (5, Shape(3, (("-", (1, 2)),))),
    (7, Shape(3, (("+", (1,)), ("-", (1,))))),
]


def cubic(n, T=6):
    ts = [TruncPoly.var(i, n=n, trust=T, symbol="t") for i in range(1, n + 1)]
    return sum((t ** 3 * mpq(1, 6) for t in ts), TruncPoly.zero(n, T, "t"))


def identity_data(n, W=5, Z=5):
    psi = wave_psi(LoopGroupElement.identity(n), "+", Cutoffs.default_for(W, Z), regime="x1")
    return frobenius_from_psi(psi, Cutoffs.default_for(W, Z))


def sampled_data(seed, shape, W=4, Z=5):
    cut = Cutoffs(E=24, W=W, Z=Z, D=Z)
    psi = wave_psi(sample_group(seed, shape), "+", cut, regime="x1")
    return frobenius_from_psi(psi, cut)


def all_zero(defects):
    return summarize(defects).all_zero


def test_theta_identity():
    th, _ = identity_data(2)
    for d in range(th.depth + 1):
        for i in range(2):
            x = TruncPoly.var(i + 1, n=2, trust=5)
            assert th.theta[d][i] == x ** d * mpq(1, factorial(d))
    assert th.flat_map == [TruncPoly.var(i, n=2, trust=5) for i in (1, 2)]
    assert [[e.constant_term() for e in row] for row in th.jacobian] == [[1, 0], [0, 1]]


@pytest.mark.parametrize("seed,shape", SAMPLED)
def test_theta_zero_is_all_ones(seed, shape):
    th, _ = sampled_data(seed, shape)
    assert all(p == TruncPoly.one(shape.n, p.trust) for p in th.theta[0])


def test_potential_identity():
    _, f = identity_data(3, W=6, Z=4)
    assert f.F_t == cubic(3)
    assert f.low_degree_terms() == {}
    assert all_zero(gradient_defect(f))


def test_wdvv_diagonal_cubic():
    assert all_zero(wdvv_defect(cubic(3)))


def test_wdvv_detects_cross_term():
    t1, t2, t3 = (TruncPoly.var(i, n=3, trust=6, symbol="t") for i in (1, 2, 3))
    summary = summarize(wdvv_defect(cubic(3) + t1 * t2 * t3))
    assert not summary.all_zero and summary.first_nonzero


@pytest.mark.parametrize("seed,shape", SAMPLED)
def test_wdvv_sampled(seed, shape):
    _, f = sampled_data(seed, shape)
    assert all_zero(wdvv_defect(f))


@pytest.mark.parametrize("seed,shape", SAMPLED)
def test_gradient_and_trr_sampled(seed, shape):
    _, f = sampled_data(seed, shape)
    assert all_zero(gradient_defect(f))
    for s in (2, 3):
        assert all_zero(trr_defect(f, s))


def test_trr_identity_and_precondition():
    _, f = identity_data(2)
    assert all_zero(trr_defect(f, 2))
    with pytest.raises(ValueError):
        trr_defect(f, 1)


def test_third_derivatives_symmetric():
    _, f = sampled_data(*SAMPLED[2])
    F = f.F_t
    for a, b, c in [(1, 2, 3), (2, 1, 3), (3, 2, 1)]:
        assert F.derivative(a).derivative(b).derivative(c) == F.derivative(1).derivative(2).derivative(3)


def test_non_twisted_input_rejected():
    bad = LoopAlgebraElement("+", [(1, [[0, 1], [0, 0]])], 2, check=False)
    cut = Cutoffs(E=20, W=3, Z=4)
    psi = wave_psi(LoopGroupElement([bad], 2), "+", cut, regime="x1")
    with pytest.raises(InconsistentInput):
        theta_series(psi, 4)


def test_singular_flat_map():
    # Ψ constant in z: θ^(1) = 0, so t(x₁) has no linear part
    n, W = 2, 3
    I = [[TruncPoly.const(mpq(int(i == j)), n, W) for j in range(n)] for i in range(n)]
    Z0 = [[TruncPoly.zero(n, W) for _ in range(n)] for _ in range(n)]
    th = theta_series(MatrixSeries([I, Z0, Z0, Z0], n), 3)
    with pytest.raises(NonInvertibleFlatMap):
        potential(th)


def test_recentering_recorded():
    _, f = sampled_data(*SAMPLED[1])
    assert len(f.basepoint) == 2
    assert all(g.constant_term() == 0 for g in f.x_of_t)


def test_json_keys():
    th, f = identity_data(2, W=3, Z=3)
    keys = th.to_json()
    assert "theta[2][1]" in keys and "flat_map[2]" in keys
    assert set(f.to_json()) >= {"F_x", "F_t"}
