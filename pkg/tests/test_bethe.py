from math import comb

import numpy as np
import pytest

from qoper.bethe import (
    BetheRoots,
    SolverConfig,
    bethe_residual,
    factor_sl2_lambda,
    max_bethe_residual,
    same_roots,
    sl2_familiar_residual,
    solve_bethe,
    solve_qq_bruteforce,
)
from qoper.cartan import Twist, cartan_matrix
from qoper.errors import BudgetExceededError, InfeasibleDegreesError, InvalidInputError
from qoper.poly import Poly
from qoper.qqsystem import QQInstance, check_nondegenerate, random_instance, relative_qq_residual

W_A1 = (1 - 0.36 * 1.7) / (1 - 0.36)


def test_closed_form_root(a1_instance):
    (sol,) = solve_bethe(a1_instance, [1])
    assert abs(sol.roots[0][0] - W_A1) < 1e-10
    assert max_bethe_residual(a1_instance, sol) < 1e-10
    assert max_bethe_residual(a1_instance, BetheRoots(((W_A1 + 0.1,),))) > 1e-3


def test_empty_degrees(a1_instance, rng):
    ((roots_, sol),) = solve_bethe(a1_instance, [0], with_solutions=True)
    assert roots_.degrees == (0,) and sol.q_minus[0].degree == 1
    inst = random_instance(cartan_matrix("A", 2), rng, 2)
    assert bethe_residual(inst, BetheRoots(((), ()))) == [[], []]


def test_infeasible_degrees(a1_instance):
    with pytest.raises(InfeasibleDegreesError):
        solve_bethe(a1_instance, [2])


@pytest.mark.parametrize("L", [1, 2, 3, 4])
def test_a1_solution_count_is_binomial(L, rng):
    # generic twist, L distinct evaluation points: C(L, m) Bethe states in each sector
    inst = random_instance(cartan_matrix("A", 1), rng, lambda_degrees=[L])
    for m in range(L + 1):
        sols = solve_bethe(inst, [m], with_solutions=True)
        assert len(sols) == comb(L, m)
        for _, sol in sols:
            assert relative_qq_residual(inst, sol) < 1e-9


def test_familiar_form_strings():
    q, zeta = 1.6, 0.7 + 0.2j
    z1, z2 = 0.9 + 0.3j, -1.4
    lam = Poly.from_roots([z1, z1 / q, z2])
    inst = QQInstance(cartan_matrix("A", 1), q, (lam,), Twist((zeta,)))
    zs, rs = factor_sl2_lambda(lam, q)
    assert sorted(rs) == [1, 2]
    for sol in solve_bethe(inst, [2]):
        assert max(abs(x) for x in sl2_familiar_residual(inst, sol)) < 1e-8
    with pytest.raises(InvalidInputError):
        sl2_familiar_residual(inst, solve_bethe(inst, [1])[0], [z1], [1])


def test_l1_familiar_form(a1_instance):
    (sol,) = solve_bethe(a1_instance, [1])
    assert abs(sl2_familiar_residual(a1_instance, sol, [1.0], [1])[0]) < 1e-10


def test_a2_unit_lambdas_agree_with_bruteforce():
    inst = QQInstance(cartan_matrix("A", 2), 1.7, (Poly([-1, 1]), Poly([-1, 1])), Twist((0.6, 1.3 + 0.4j)))
    ours = solve_bethe(inst, [1, 1])
    oracle = [
        BetheRoots.from_q_plus(s.q_plus) for s in solve_qq_bruteforce(inst, [1, 1]) if check_nondegenerate(inst, s).passed
    ]
    assert len(ours) == len(oracle) > 0
    for a in oracle:
        assert any(same_roots(a, b) for b in ours)


def test_bruteforce_recovers_closed_form(a1_instance):
    sols = solve_qq_bruteforce(a1_instance, [1])
    assert any(abs(s.q_plus[0].roots()[0] - W_A1) < 1e-8 for s in sols)
    (lin,) = solve_qq_bruteforce(a1_instance, [0])
    assert lin.q_plus[0].degree == 0 and lin.q_minus[0].degree == 1
    with pytest.raises(BudgetExceededError):
        solve_qq_bruteforce(random_instance(cartan_matrix("A", 3), np.random.default_rng(1), 3), [2, 2, 2], budget=4)


def test_solver_is_deterministic(rng):
    inst = random_instance(cartan_matrix("B", 2), rng, 2)
    a = solve_bethe(inst, [1, 1], SolverConfig(seed=7))
    b = solve_bethe(inst, [1, 1], SolverConfig(seed=7))
    assert len(a) == len(b) and all(same_roots(x, y, 1e-12) for x, y in zip(a, b))


def test_config_validation():
    with pytest.raises(InvalidInputError):
        SolverConfig(tol=1e-3, dedupe_tol=1e-4)
    with pytest.raises(InvalidInputError):
        SolverConfig(max_iter=0)


def test_polish_roots_refines_and_guards(a1_instance):
    from qoper.bethe import polish_roots

    near = BetheRoots(((W_A1 + 1e-8,),))
    assert abs(polish_roots(a1_instance, near).roots[0][0] - W_A1) < 1e-13
    far = BetheRoots(((W_A1 + 0.3,),))
    assert polish_roots(a1_instance, far) is far
