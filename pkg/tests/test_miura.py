import numpy as np
import pytest

from qoper.bethe import solve_bethe
from qoper.cartan import Twist, cartan_matrix
from qoper.errors import InvalidInputError, VerificationError
from qoper.miura import (
    RationalMatrix,
    SLnRep,
    associated_gl2,
    build_miura_connection,
    canonical_form_sln,
    canonical_target,
    canonical_tq_sl2,
    check_miura_plucker,
    q_wronskian,
    qgauge,
    random_lower_unipotent,
    sample_points,
    sl2_gauge_to_Z,
    tq_residues,
)
from qoper.poly import Poly, RationalFn, qshift
from qoper.qqsystem import QQInstance, QQSolution, complete_solution, random_instance

PTS = np.array([0.37 + 0.81j, -1.13 + 0.24j, 1.61 - 0.45j, 0.2 - 1.3j])


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


@pytest.fixture
def a1_solution(a1_instance):
    return solve_bethe(a1_instance, [1], with_solutions=True)[0][1]


@pytest.fixture
def a2_pair(rng):
    inst = random_instance(cartan_matrix("A", 2), rng, lambda_degrees=[1, 2])
    return inst, solve_bethe(inst, [1, 1], with_solutions=True)[0][1]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_sln_rep_relations(n):
    rep = SLnRep(n)
    assert max(rep.bracket_errors().values()) < 1e-12
    for i in range(1, n):
        assert np.isclose(np.linalg.det(rep.s(i)), 1)
        assert np.allclose(rep.torus(2.0, i) @ rep.e(i) @ np.linalg.inv(rep.torus(2.0, i)), 4 * rep.e(i))


def test_miura_qplus_one_has_lambda_entry(a1_instance):
    a = build_miura_connection(a1_instance, [Poly.one()])
    assert a.is_upper_triangular()
    assert rel(a[0, 1](PTS), a1_instance.lam(1)(PTS)) < 1e-12
    assert np.allclose(np.linalg.det(a(PTS)), 1)


def test_miura_a2_shape(a2_pair):
    inst, sol = a2_pair
    a = build_miura_connection(inst, sol.q_plus)
    assert a.n == 3 and a.is_upper_triangular()
    lam = inst.lam(1)(PTS) * inst.lam(2)(PTS)
    assert rel(a[0, 2](PTS), lam) < 1e-12
    assert np.allclose(np.linalg.det(a(PTS)), 1)


def test_rational_matrix_round_trip(a2_pair):
    inst, sol = a2_pair
    a = build_miura_connection(inst, sol.q_plus)
    b = RationalMatrix.from_json(a.to_json())
    assert rel(b(PTS), a(PTS)) < 1e-12
    assert rel(qgauge(a, RationalMatrix.identity(3), inst.q)(PTS), a(PTS)) < 1e-14


def test_plucker_pass_a1_a2(a1_instance, a1_solution, a2_pair):
    assert check_miura_plucker(a1_instance, a1_solution).passed
    inst, sol = a2_pair
    report = check_miura_plucker(inst, sol, samples=20)
    assert report.passed and max(report.errors.values()) < 1e-9


def test_plucker_fails_for_perturbed_qminus(a2_pair):
    inst, sol = a2_pair
    bad = QQSolution(sol.q_plus, (sol.q_minus[0] + 0.01, sol.q_minus[1]))
    report = check_miura_plucker(inst, bad)
    assert not report.passed and report.errors[1] > 1e-6


def test_associated_gl2_determinants(a2_pair):
    inst, sol = a2_pair
    for i in (1, 2):
        data = associated_gl2(inst, sol, i)
        assert np.allclose(np.linalg.det(data.A_tilde(PTS)), data.det_tilde)
        assert np.allclose(np.linalg.det(data.cal_A(PTS)), 1)
        j = 3 - i
        g_j = sol.q_plus[j - 1].scale(inst.twist[j])
        g_j = qshift(g_j, inst.q)(PTS) / sol.q_plus[j - 1](PTS)
        assert rel(np.linalg.det(data.A(PTS)), g_j) < 1e-12


def test_sl2_gauge_and_wronskian(a1_instance, a1_solution):
    qp, qm = a1_solution.q_plus[0], a1_solution.q_minus[0]
    _, report = sl2_gauge_to_Z(a1_instance, qp, qm)
    assert report.passed
    assert q_wronskian(0.6, 1.7, qp, qm).allclose(a1_instance.lam(1), 1e-10)
    _, bad = sl2_gauge_to_Z(a1_instance, qp, qm + 0.05, strict=False)
    assert not bad.passed
    with pytest.raises(VerificationError):
        sl2_gauge_to_Z(a1_instance, qp, qm + 0.05)


def test_tq_qplus_one(a1_instance):
    T = canonical_tq_sl2(a1_instance, Poly.one())
    lam, q = a1_instance.lam(1), a1_instance.q
    assert rel(T(PTS), 0.6 / lam(q * PTS) + 1 / (0.6 * lam(PTS))) < 1e-12
    assert tq_residues(a1_instance, Poly.one()) == []


def test_tq_residues(a1_instance, a1_solution):
    qp = a1_solution.q_plus[0]
    ((pole, res),) = tq_residues(a1_instance, qp)
    assert abs(pole - qp.roots()[0] / 1.7) < 1e-12 and abs(res) < 1e-8
    ((_, res_bad),) = tq_residues(a1_instance, Poly.from_roots([qp.roots()[0] + 0.1]))
    assert abs(res_bad) > 1e-3


def test_canonical_form_n2_matches_tq(a1_instance, a1_solution, rng):
    a = build_miura_connection(a1_instance, a1_solution.q_plus)
    _, (T,) = canonical_form_sln(a, a1_instance)
    tq = canonical_tq_sl2(a1_instance, a1_solution.q_plus[0])
    lam = a1_instance.lam(1)(PTS)
    # canonical coordinate is normalized as Lambda^2 times the TQ transfer function
    assert rel(T(PTS), lam**2 * tq(PTS)) < 1e-9
    g = random_lower_unipotent(2, rng)
    _, (T2,) = canonical_form_sln(qgauge(a, g, a1_instance.q), a1_instance)
    assert rel(T2(PTS), T(PTS)) < 1e-9


def test_canonical_form_n3_shape(rng):
    # Lambda_2 = z would force a zero root of Q-^2 shared with Lambda_2, which is degenerate
    c = cartan_matrix("A", 2)
    inst = QQInstance(c, 1.6 + 0.2j, (Poly.from_roots([0.8 + 0.1j]), Poly.from_roots([1.3j])), Twist((0.7 + 0.3j, 1.2 - 0.2j)))
    sol = solve_bethe(inst, [1, 0], with_solutions=True)[0][1]
    a = build_miura_connection(inst, sol.q_plus)
    up, T = canonical_form_sln(a, inst)
    assert len(T) == 2
    target = canonical_target(inst, T)
    lhs = qgauge(a, up, inst.q)
    pts = sample_points(a.poles(), inst.q, 20, 3)
    assert rel(lhs(pts), target(pts)) < 1e-9
    for i in range(3):
        assert all(up[i, j].is_zero() for j in range(i + 1, 3))
        assert rel(up[i, i](pts), np.ones(len(pts))) < 1e-12


def test_canonical_form_rejects_non_miura(a1_instance):
    a = RationalMatrix.constant(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InvalidInputError):
        canonical_form_sln(a, a1_instance)


def test_reconstructed_closed_form_connection(a1_instance):
    w = (1 - 0.36 * 1.7) / 0.64
    sol = complete_solution(a1_instance, [Poly.from_roots([w])])
    assert check_miura_plucker(a1_instance, sol).passed
    a = build_miura_connection(a1_instance, sol.q_plus)
    assert isinstance(a[0, 0], RationalFn)


def test_plucker_g2_large_exponents():
    # node 2 carries (Q+^1)^3, where expanded rational entries would lose digits
    inst = random_instance(cartan_matrix("G", 2), np.random.default_rng(109), lambda_degrees=[3, 1])
    sols = solve_bethe(inst, [2, 2], with_solutions=True)
    assert sols
    for _, sol in sols:
        assert check_miura_plucker(inst, sol).passed
