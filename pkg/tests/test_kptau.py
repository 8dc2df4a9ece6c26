import pytest
from gmpy2 import mpq

from oracles import exp_coefficient, exp_diag
from kpgive.errors import NonUnitConstantTerm
from kpgive.kptau import (Cutoffs, orthogonality_defect, psi_minus_defect, stabilization_diff, tau,
                          tau0, wave03_residual, wave_phi, wave_psi)
from kpgive.loop import LoopAlgebraElement, LoopGroupElement
from kpgive.sampling import Shape, sample_group
from kpgive.series import MatrixSeries, TruncPoly, inverse_scalar_matrix

C = Cutoffs(E=20, W=3, Z=3)

SHAPES = [
    Shape(2, (("-", (1,)),)),
    Shape(2, (("+", (1, 2)),)),
    Shape(2, (("+", (1,)), ("-", (1, 2)))),
    Shape(3, (("-", (1, 2)),)),
]


def identity(n):
    return LoopGroupElement.identity(n)


def test_tau_identity():
    assert tau(identity(2), None, C).value == TruncPoly.one(2, C.W)
    assert tau(identity(3), (1, -1, 0), C).value.is_zero()


def test_tau_vanishes_off_total_charge_zero():
    A = sample_group(1, SHAPES[2])
    assert tau(A, (1, 0), C).value.is_zero()


def test_tau_one_color_raising_is_exponential():
    # exp(cζ + dζ³) acts as exp(c α_{-1} + d α_{-3}); pairing with Γ_+ gives exp(c x1 + 3d x3)
    c, d = mpq(2, 3), mpq(-1, 2)
    A = LoopGroupElement([LoopAlgebraElement("+", [(1, [[c]]), (3, [[d]])], 1)], 1)
    cut = Cutoffs(E=20, W=5, Z=1)
    x1 = TruncPoly.var(1, 1, n=1, trust=5)
    x3 = TruncPoly.var(1, 3, n=1, trust=5)
    u = x1 * c + x3 * (3 * d)
    expected = sum((exp_coefficient(lambda m: u if m == 1 else TruncPoly.zero(1, 5), l, 1, 5)
                    for l in range(6)), TruncPoly.zero(1, 5))
    assert tau(A, None, cut).value == expected


def test_tau_lowering_one_color():
    A = LoopGroupElement([LoopAlgebraElement("-", [(1, [[mpq(5, 2)]])], 1)], 1)
    t = tau0(A, Cutoffs(E=12, W=4, Z=1))
    assert t.value.constant_term() == 1


@pytest.mark.parametrize("shape", SHAPES)
def test_pair_and_direct_agree(shape):
    A = sample_group(11, shape)
    for charge in [None, (1, -1) + (0,) * (shape.n - 2)]:
        p = tau(A, charge, C, method="pair")
        d = tau(A, charge, C, method="direct")
        assert p.value == d.value


def test_lowering_left_of_raising_breaks_unit_constant():
    r = LoopAlgebraElement("+", [(1, [[1, 0], [0, 1]])], 2)
    s = LoopAlgebraElement("-", [(1, [[1, 0], [0, 1]])], 2)
    with pytest.raises(NonUnitConstantTerm):
        tau0(LoopGroupElement([s, r], 2), C)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_psi_identity(n):
    cut = Cutoffs.default_for(3, 4)
    assert wave_psi(identity(n), "+", cut).psi == exp_diag(n, 4, 3)
    assert wave_psi(identity(n), "-", cut).psi == exp_diag(n, 4, 3, sign=-1)


@pytest.mark.parametrize("seed", range(4))
def test_psi_constant_term_invertible(seed):
    A = sample_group(seed, SHAPES[seed % len(SHAPES)])
    P0 = wave_psi(A, "+", C).coeff(0)
    inverse_scalar_matrix([[e.constant_term() for e in row] for row in P0])


@pytest.mark.parametrize("shape", SHAPES)
def test_orthogonality(shape):
    assert orthogonality_defect(sample_group(2, shape), C).is_zero()


def test_orthogonality_identity():
    assert orthogonality_defect(identity(2), C).is_zero()


def test_orthogonality_detects_non_twisted():
    bad = LoopAlgebraElement("-", [(1, [[0, 1], [0, 0]])], 2, check=False)
    assert not orthogonality_defect(LoopGroupElement([bad], 2), C).is_zero()


@pytest.mark.parametrize("shape", SHAPES)
def test_psi_minus_is_psi_plus_at_minus_z(shape):
    assert psi_minus_defect(sample_group(4, shape), C).is_zero()


def test_phi_identity():
    phi = wave_phi(identity(2), "+", C, min_power=0)
    psi = wave_psi(identity(2), "+", C)
    for l in range(C.Z + 1):
        assert phi.coeff(l) == psi.coeff(l)
    zero_x = [[e.constant_term() for e in row] for row in phi.coeff(0)]
    assert zero_x == [[1, 0], [0, 1]]


@pytest.mark.parametrize("shape", [SHAPES[0], SHAPES[1], SHAPES[3]])
@pytest.mark.parametrize("sign", "+-")
def test_wave03_residual(shape, sign):
    A = sample_group(6, shape)
    for M in wave03_residual(A, sign, C):
        assert all(e.is_zero() for row in M for e in row)


def test_stabilization_bit_identical():
    A = sample_group(8, SHAPES[2])
    a, b, same = stabilization_diff(lambda c: wave_psi(A, "+", c).psi, C)
    assert same and a == b


def test_report_json_round_trip():
    w = wave_psi(sample_group(9, SHAPES[0]), "+", C)
    back = MatrixSeries.from_json(w.to_json()["entries"], 2)
    assert back == w.psi
