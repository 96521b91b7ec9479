import numpy as np
import pytest
from hypothesis import given, strategies as st

from qoper.errors import DegenerateError, InvalidInputError
from qoper.poly import (
    Poly,
    RationalFn,
    partial_fractions_simple,
    q_distinct,
    q_relation,
    qshift,
    rational_equal,
    residue,
    roots,
)

cpx = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)
polys = st.lists(cpx, min_size=1, max_size=5).map(Poly)
points = np.array([0.3 + 0.7j, -1.1 + 0.2j, 1.9 - 0.4j, 0.05j])


def close(a, b, tol=1e-9):
    a, b = np.asarray(a), np.asarray(b)
    return np.allclose(a, b, rtol=tol, atol=tol * max(1.0, np.max(np.abs(b), initial=0.0)))


@given(polys, polys, polys)
def test_ring_axioms_pointwise(p, r, s):
    assert close(((p + r) * s)(points), p(points) * s(points) + r(points) * s(points))
    assert close((p * r)(points), (r * p)(points))
    assert close(((p * r) * s)(points), (p * (r * s))(points))
    assert (p - p).is_zero


@given(polys, st.lists(cpx, min_size=2, max_size=4).filter(lambda c: abs(c[-1]) > 0.2))
def test_divmod_identity(p, dc):
    d = Poly(dc)
    quot, rem = p.divmod(d)
    assert rem.degree < d.degree or rem.is_zero
    assert close((quot * d + rem)(points), p(points), 1e-8)


@given(polys, st.integers(-2, 3))
def test_qshift_matches_evaluation(p, k):
    q = 1.3 - 0.4j
    assert close(qshift(p, q, k)(points), p(q**k * points))


def test_constructors_and_json():
    p = Poly.from_roots([1, 2j], leading=3)
    assert p.degree == 2 and p.lc == 3
    assert Poly.from_json(p.to_json()).allclose(p)
    assert Poly([1, 0, 0]).degree == 0
    assert Poly().is_zero and Poly().degree == -1
    assert p.monic().is_monic()
    assert Poly([0, 0, 1]).derivative().allclose(Poly([0, 2]))


@pytest.mark.parametrize("degree", [1, 3, 6, 10])
def test_roots_recover_known_roots(degree, rng):
    w = np.exp(rng.uniform(-0.7, 0.7, degree)) * np.exp(2j * np.pi * rng.uniform(size=degree))
    found = roots(Poly.from_roots(w))
    for x in w:
        assert np.min(np.abs(found - x)) < 1e-9


def test_q_distinct_and_relation():
    q = 1.7
    assert not q_distinct(2.0, 2.0 * q**3, q)
    assert q_relation(2.0 * q ** -2, 2.0, q)[2] == -2
    assert q_distinct(1.0, 1.3, q)
    assert q_relation(1.0, 1.3, q) is None
    with pytest.raises(InvalidInputError):
        q_distinct(0.0, 1.0, q)


def test_rational_arithmetic_pointwise():
    f = RationalFn(Poly([1, 2]), Poly.from_roots([0.5, -1j]))
    g = RationalFn(Poly([0, 1j, 1]), Poly.from_roots([2.0]))
    z = points
    assert close((f + g)(z), f(z) + g(z))
    assert close((f * g)(z), f(z) * g(z))
    assert close((f / g)(z), f(z) / g(z))
    assert close((f - 3)(z), f(z) - 3)
    assert close(f.qshift(1.5)(z), f(1.5 * z))
    assert close((f**2)(z), f(z) ** 2)
    assert rational_equal(f * g / g, f)


def test_cancellation_and_as_poly():
    p = Poly.from_roots([1.0, 2.0, 3j])
    f = RationalFn(p, Poly.from_roots([2.0]))
    assert len(f.den_roots) == 1 and len(f.cancel().den_roots) == 0
    assert f.as_poly().allclose(Poly.from_roots([1.0, 3j]))
    with pytest.raises(ValueError):
        RationalFn(p, Poly.from_roots([5.0])).as_poly()
    assert (f - f).is_zero


def test_partial_fractions_simple():
    poles = [0.5, -1.0 + 1j, 2j]
    num = Poly([1, -2, 0, 1, 1])
    f = RationalFn(num, Poly.from_roots(poles))
    quot, res = partial_fractions_simple(f, poles)
    z = points
    recon = quot(z) + sum(r / (z - p) for r, p in zip(res, poles))
    assert close(recon, f(z))
    labelled = partial_fractions_simple(f, {"a": poles[:1], "b": poles[1:]})[1]
    assert np.allclose(labelled["a"] + labelled["b"], res)
    with pytest.raises(DegenerateError):
        partial_fractions_simple(RationalFn(num, Poly.from_roots([1.0, 1.0 + 1e-12])), [1.0, 1.0 + 1e-12])


def test_residue_contour_matches_formula():
    poles = [0.5, -1.0 + 1j, 2j]
    f = RationalFn(Poly([3, 1, 1]), Poly.from_roots(poles))
    _, res = partial_fractions_simple(f, poles)
    for p, r in zip(poles, res):
        assert abs(residue(f, p) - r) < 1e-12
    # no pole there
    assert abs(residue(f, 1.5)) < 1e-12


def test_small_examples():
    assert ((Poly.z() + 1) * (Poly.z() - 1)).allclose(Poly([-1, 0, 1]))
    assert Poly([-1, 0, 1])(2) == 3
    zero = Poly.z().scale(0)
    assert zero.is_zero and zero.degree == -1
    assert qshift(Poly.z(), 2, 1).allclose(Poly([0, 2]))
    assert qshift(Poly([1, 0, 1]), 2, -1).allclose(Poly([1, 0, 0.25]))
    assert np.allclose(sorted(roots(Poly([-1, 0, 1])).real), [-1, 1])
    assert np.allclose(roots(Poly.from_roots([3, 3])), [3, 3], atol=1e-6)
    assert not q_distinct(8, 1, 2, window=5)
    assert q_distinct(1, 5, 3, window=10)
    assert not q_distinct(1.2, 1.2, 3)


def test_partial_fraction_textbook_cases():
    quot, res = partial_fractions_simple(RationalFn(Poly.one(), Poly([-1, 0, 1])), [1, -1])
    assert quot.is_zero and np.allclose(res, [0.5, -0.5])
    quot, res = partial_fractions_simple(RationalFn(Poly([0, 0, 1]), Poly([-1, 1])), [1])
    assert quot.allclose(Poly([1, 1])) and np.allclose(res, [1])


def test_degree8_roots_reexpand(rng):
    p = Poly(np.concatenate([rng.normal(size=8) + 1j * rng.normal(size=8), [1]]))
    assert np.max(np.abs(Poly.from_roots(roots(p)).coeffs - p.coeffs)) < 1e-9
