import json

import numpy as np
import pytest

from qoper.bethe import solve_bethe
from qoper.cartan import Twist, cartan_matrix
from qoper.errors import ConsistencyError, InfeasibleDegreesError, InvalidInputError
from qoper.poly import Poly
from qoper.qqsystem import (
    QQInstance,
    QQSolution,
    check_nondegenerate,
    complete_solution,
    cyclic_coxeter_shift,
    feasible_degrees,
    qminus_degree,
    qq_residual,
    qq_rhs,
    random_instance,
    reconstruct_qminus,
    relative_qq_residual,
    reorder_gauge,
)

Z1, Q, ZETA = 1.0, 1.7, 0.6
W_A1 = Z1 * (1 - ZETA**2 * Q) / (1 - ZETA**2)


def a2_instance(rng):
    return random_instance(cartan_matrix("A", 2), rng, lambda_degrees=[1, 1])


def test_qplus_one_closed_form(a1_instance):
    (qm,) = reconstruct_qminus(a1_instance, [Poly.one()])
    expected = Poly([-Z1 / (ZETA - 1 / ZETA), 1 / (ZETA - Q / ZETA)])
    assert qm.allclose(expected, 1e-12)


def test_closed_form_root_residual(a1_instance):
    sol = complete_solution(a1_instance, [Poly.from_roots([W_A1])])
    assert max(r.max_abs() for r in qq_residual(a1_instance, sol)) < 1e-10


def test_non_bethe_qplus_is_inconsistent(a1_instance):
    with pytest.raises(ConsistencyError):
        reconstruct_qminus(a1_instance, [Poly.from_roots([W_A1 + 0.1])])


def test_zero_qminus_residual_is_minus_rhs(rng):
    inst = a2_instance(rng)
    qp = [Poly.from_roots([0.3]), Poly.from_roots([1.2j])]
    sol = QQSolution(tuple(qp), (Poly(), Poly()))
    for i, res in enumerate(qq_residual(inst, sol), start=1):
        assert res.allclose(-qq_rhs(inst, qp, i), 1e-14)


def test_a2_trivial_qplus(rng):
    inst = a2_instance(rng)
    sol = complete_solution(inst, [Poly.one(), Poly.one()])
    assert relative_qq_residual(inst, sol) < 1e-12


def test_degree_identity_examples():
    a1 = lambda d: QQInstance(cartan_matrix("A", 1), Q, (Poly.from_roots(np.arange(1, d + 1) * 0.9),), Twist((ZETA,)))
    assert qminus_degree(a1(1), [0]) == [1]
    assert qminus_degree(a1(2), [1]) == [1]
    a2 = QQInstance(cartan_matrix("A", 2), Q, (Poly.from_roots([1]), Poly.from_roots([2])), Twist((2, 3)))
    assert qminus_degree(a2, [1, 1]) == [1, 1]
    with pytest.raises(InfeasibleDegreesError):
        qminus_degree(a1(1), [2])
    assert (2,) not in feasible_degrees(a1(1), 2)


@pytest.mark.parametrize("key", [("A", 2), ("B", 2), ("G", 2), ("A", 3)])
def test_pipeline_degree_identity_holds_exactly(key, rng):
    inst = random_instance(cartan_matrix(*key), rng, 2)
    m = feasible_degrees(inst, 1)[0]
    for _, sol in solve_bethe(inst, m, with_solutions=True)[:3]:
        assert [p.degree for p in sol.q_plus] == list(m)
        pred = qminus_degree(inst, m)
        assert [p.degree for p in sol.q_minus] == pred


def test_nondegeneracy_witness_and_pass():
    q = 2.0
    w = 0.7
    inst = QQInstance(cartan_matrix("A", 1), q, (Poly.from_roots([q * w]),), Twist((ZETA,)))
    rep = check_nondegenerate(inst, QQSolution((Poly.from_roots([w]),), (Poly.one(),)))
    assert not rep.passed
    (node,) = [c for c in rep.failures() if c.kind == "node"]
    assert any(abs(n) == 1 for _, _, n in node.witnesses)
    inst = QQInstance(cartan_matrix("A", 1), q, (Poly.from_roots([1.0]),), Twist((ZETA,)))
    rep = check_nondegenerate(inst, QQSolution((Poly.from_roots([5.0]),), (Poly.from_roots([3.3]),)), window=10)
    assert rep.passed


def test_instance_validation():
    c = cartan_matrix("A", 1)
    with pytest.raises(InvalidInputError):
        QQInstance(c, Q, (Poly([1, 2]),), Twist((ZETA,)))  # not monic
    with pytest.raises(InvalidInputError):
        QQInstance(c, Q, (Poly.one(),), Twist((ZETA,)))  # constant
    with pytest.raises(InvalidInputError):
        QQInstance(c, 1.0, (Poly.z(),), Twist((ZETA,)))
    with pytest.raises(InvalidInputError):
        QQInstance(c, Q, (Poly.z(),), Twist((Q,)))  # zeta^2 = q^2
    with pytest.raises(InvalidInputError):
        QQInstance.from_json({"q": [1, 0]})


def test_json_round_trip(rng):
    inst = a2_instance(rng)
    sol = solve_bethe(inst, [1, 1], with_solutions=True)[0][1]
    inst2 = QQInstance.from_json(json.loads(json.dumps(inst.to_json())))
    sol2 = QQSolution.from_json(json.loads(json.dumps(sol.to_json())))
    assert inst2.q == inst.q and inst2.twist == inst.twist
    assert relative_qq_residual(inst2, sol2) < 1e-9


@pytest.fixture
def a2_solution(rng):
    inst = a2_instance(rng)
    return inst, solve_bethe(inst, [1, 1], with_solutions=True)[0][1]


def test_reorder_identity_and_swap(a2_solution):
    inst, sol = a2_solution
    same_inst, same_sol = reorder_gauge(inst, sol, (1, 2))
    for a, b in zip(same_sol.q_plus + same_sol.q_minus, sol.q_plus + sol.q_minus):
        assert a.allclose(b, 1e-12)
    new_inst, new_sol = reorder_gauge(inst, sol, (2, 1))
    assert new_inst.cartan.ordering == (2, 1)
    assert relative_qq_residual(new_inst, new_sol) < 1e-10
    back_inst, back_sol = reorder_gauge(new_inst, new_sol, (1, 2))
    assert relative_qq_residual(back_inst, back_sol) < 1e-10
    for a, b in zip(back_sol.q_plus, sol.q_plus):
        assert a.allclose(b, 1e-9)


def test_cyclic_shift(a2_solution, a1_instance):
    inst, sol = a2_solution
    i1, s1 = cyclic_coxeter_shift(inst, sol)
    assert i1.cartan.ordering == (2, 1) and relative_qq_residual(i1, s1) < 1e-10
    i2, s2 = cyclic_coxeter_shift(i1, s1)
    # full cycle is a uniform z -> z/q substitution
    q = inst.q
    for a, b in zip(s2.q_plus, sol.q_plus):
        assert np.allclose(sorted(a.roots(), key=abs), sorted(b.roots() * q, key=abs))
    for a, b in zip(i2.lambdas, inst.lambdas):
        assert np.allclose(a.roots(), b.roots() * q)
    a1sol = complete_solution(a1_instance, [Poly.from_roots([W_A1])])
    j, t = cyclic_coxeter_shift(a1_instance, a1sol)
    assert j.cartan.ordering == (1,) and relative_qq_residual(j, t) < 1e-10
