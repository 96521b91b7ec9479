import numpy as np
import pytest
from hypothesis import given, strategies as st

from qoper.backlund import (
    backlund_chain,
    backlund_mu,
    backlund_transform,
    certify_full_ztwist,
    lemma72_errors,
    lemma73_check,
    verify_backlund_gauge,
)
from qoper.bethe import solve_bethe
from qoper.cartan import Twist, cartan_matrix, weyl_word_twist
from qoper.errors import GenericityError, InvalidInputError, VerificationError
from qoper.miura import SLnRep
from qoper.poly import Poly
from qoper.qqsystem import QQInstance, QQSolution, complete_solution, random_instance, relative_qq_residual


@pytest.fixture
def a1_solution(a1_instance):
    return solve_bethe(a1_instance, [1], with_solutions=True)[0][1]


@pytest.fixture
def a2_pair(rng):
    inst = random_instance(cartan_matrix("A", 2), rng, lambda_degrees=[2, 1])
    return inst, solve_bethe(inst, [1, 1], with_solutions=True)[0][1]


def test_a1_step_and_involution(a1_instance, a1_solution):
    step = backlund_transform(a1_instance, a1_solution, 1)
    assert np.isclose(step.post_twist[1], 1 / 0.6)
    assert step.post_solution.q_plus[0].allclose(a1_solution.q_minus[0].monic(), 1e-12)
    # new Q- is proportional to the old Q+
    qm_new = step.post_solution.q_minus[0]
    assert qm_new.monic().allclose(a1_solution.q_plus[0], 1e-9)
    back = backlund_transform(step.post_instance, step.post_solution, 1)
    assert back.post_solution.q_plus[0].allclose(a1_solution.q_plus[0], 1e-8)
    assert np.isclose(back.post_twist[1], 0.6)
    assert verify_backlund_gauge(step).passed


def test_a2_step_residual_and_gauge(a2_pair):
    inst, sol = a2_pair
    for i in (1, 2):
        step = backlund_transform(inst, sol, i)
        assert step.residual < 1e-9
        assert relative_qq_residual(step.post_instance, step.post_solution) < 1e-9
        assert verify_backlund_gauge(step).passed
        assert step.mu.num.degree == 1  # single neighbour with m+ = 1


def test_mu_definition(a2_pair):
    inst, sol = a2_pair
    mu = backlund_mu(inst, sol, 1)
    z = np.array([0.3 + 0.9j, -1.2 + 0.1j])
    expect = sol.q_plus[1](z) / (sol.q_plus[0](z) * sol.q_minus[0](z))
    assert np.allclose(mu(z), expect)


def test_step_rejects_non_solution(a1_instance, a1_solution):
    bad = QQSolution(a1_solution.q_plus, (a1_solution.q_minus[0] + 0.1,))
    with pytest.raises(VerificationError):
        backlund_transform(a1_instance, bad, 1)


cpx = st.complex_numbers(min_magnitude=0.1, max_magnitude=3, allow_nan=False, allow_infinity=False)


@given(cpx, cpx, st.integers(1, 3), st.integers(1, 3))
def test_lemma72_identities(u, v, i, j):
    if abs(1 + u * v) < 1e-3:
        return
    errs = lemma72_errors(SLnRep(4), u, v, i, j)
    scale = max(1.0, abs(u) ** 2, abs(v) ** 2, abs(1 / (1 + u * v)) ** 2) * 10.0
    assert max(errs.values()) < 1e-12 * scale


def test_lemma72_singular():
    with pytest.raises(InvalidInputError):
        lemma72_errors(SLnRep(2), 1.0, -1.0, 1, 1)


def test_empty_and_single_chain(a1_instance, a1_solution):
    empty = backlund_chain(a1_instance, a1_solution, [])
    assert empty.steps == [] and empty.final_solution is a1_solution
    chain = backlund_chain(a1_instance, a1_solution, [1])
    assert chain.verification["passed"]
    b_plus, report = certify_full_ztwist(chain)
    assert report["passed"] and report["upper_triangular"]


def test_w0_chain_and_certificate(a2_pair):
    inst, sol = a2_pair
    chain = backlund_chain(inst, sol, [1, 2, 1])
    assert len(chain.steps) == 3 and chain.verification["passed"]
    assert np.allclose(chain.final_instance.twist.zetas, weyl_word_twist(inst.twist, [1, 2, 1], inst.cartan).zetas)
    b_plus, report = certify_full_ztwist(chain)
    assert report["passed"] and report["error"] < 1e-7 and b_plus.is_upper_triangular()


def test_chain_argument_checks(a2_pair):
    inst, sol = a2_pair
    with pytest.raises(InvalidInputError):
        backlund_chain(inst, sol, [1, 1])
    with pytest.raises(InvalidInputError):
        backlund_chain(inst, sol, [3])
    with pytest.raises(InvalidInputError):
        certify_full_ztwist(backlund_chain(inst, sol, [1, 2]))


def engineered_failing_instance():
    """A2 data where the first step of [1, 2, 1] violates the step hypotheses.

    With Q+ = 1 the root of Q-^1 is ``a (xi~ - xi q) / (xi~ - xi)`` for ``Lambda_1 = z - a``;
    placing the root of Lambda_2 at ``q`` times it makes the two q-related.
    """
    c = cartan_matrix("A", 2)
    q, twist, a = 1.6 + 0.1j, Twist((0.8 + 0.3j, 1.3 - 0.2j)), 0.9 + 0.2j
    probe = QQInstance(c, q, (Poly.from_roots([a]), Poly.from_roots([1.0])), twist)
    xi, xt = probe.xi()
    w = a * (xt[0] - xi[0] * q) / (xt[0] - xi[0])
    inst = probe.replace(lambdas=(Poly.from_roots([a]), Poly.from_roots([q * w])))
    return inst, complete_solution(inst, [Poly.one(), Poly.one()]), w


def test_engineered_failure_reports_witness():
    inst, sol, w = engineered_failing_instance()
    assert relative_qq_residual(inst, sol) < 1e-12
    assert abs(sol.q_minus[0].roots()[0] - w) < 1e-12
    report = lemma73_check(inst, sol, 1)
    assert not report.passed and [f.kind for f in report.failures()] == ["qminus_vs_lambda"]
    with pytest.raises(GenericityError) as info:
        backlund_chain(inst, sol, [1, 2, 1])
    assert info.value.step == 0
    assert any(abs(n) == 1 for _, _, n in info.value.witnesses)


def test_double_step_from_trivial_qplus(a1_instance):
    ((_, sol),) = solve_bethe(a1_instance, [0], with_solutions=True)
    step = backlund_transform(a1_instance, sol, 1)
    assert step.post_solution.q_plus[0].degree == 1 and step.post_solution.q_minus[0].degree == 0
    back = backlund_transform(step.post_instance, step.post_solution, 1)
    assert back.post_solution.q_plus[0].degree == 0
