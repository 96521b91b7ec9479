"""QQ-system instances and solutions, residuals, nondegeneracy and Q- reconstruction.

The QQ-system at node ``i`` reads::

    xi~_i Q-^i(z) Q+^i(qz) - xi_i Q-^i(qz) Q+^i(z)
        = Lambda_i(z) prod_{j>i} Q+^j(qz)^{-a_ji} prod_{j<i} Q+^j(z)^{-a_ji}

where ``<`` and ``>`` refer to positions in the Coxeter ordering.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cartan import (
    CartanData,
    Twist,
    cartan_matrix,
    check_q,
    check_twist_assumption,
    compute_xi,
    positive_roots,
    simple_root_values,
)
from .errors import (
    ConsistencyError,
    InfeasibleDegreesError,
    InvalidInputError,
    ResonanceError,
)
from .poly import Poly, RationalFn, partial_fractions_simple, q_distinct, q_relation, qshift, roots

log = logging.getLogger(__name__)

TWIST_WINDOW = 32
RESIDUAL_TOL = 1e-9
CONSISTENCY_TOL = 1e-7
RESONANCE_TOL = 1e-10
DISTINCT_WINDOW = 20
DISTINCT_TOL = 1e-8
ZERO_ROOT_TOL = 1e-7


def _cpx_json(x: complex) -> list:
    return [float(complex(x).real), float(complex(x).imag)]


def _cpx_from_json(x) -> complex:
    try:
        re, im = x
        return complex(float(re), float(im))
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad complex encoding: {x!r}") from exc


@dataclass(frozen=True)
class QQInstance:
    """Problem data: Cartan data, ``q``, monic ``Lambda_i`` and twist."""

    cartan: CartanData
    q: complex
    lambdas: tuple
    twist: Twist

    def __post_init__(self):
        object.__setattr__(self, "q", complex(self.q))
        object.__setattr__(self, "lambdas", tuple(self.lambdas))
        r = self.cartan.rank
        if len(self.lambdas) != r or len(self.twist) != r:
            raise InvalidInputError("need one Lambda and one zeta per node")
        for i, lam in enumerate(self.lambdas, start=1):
            if not isinstance(lam, Poly) or lam.degree < 1:
                raise InvalidInputError(f"Lambda_{i} must be a nonconstant Poly")
            if abs(lam.lc - 1) > 1e-9:
                raise InvalidInputError(f"Lambda_{i} must be monic")
        check_q(self.q)
        bad = [c for c in check_twist_assumption(self.twist, self.q, self.cartan, TWIST_WINDOW) if not c.passed]
        if bad:
            c = bad[0]
            raise InvalidInputError(
                f"twist assumption fails at node {c.node}: value {c.value} is q^{c.nearest_power}"
            )

    @property
    def rank(self) -> int:
        return self.cartan.rank

    def lam(self, i: int) -> Poly:
        return self.lambdas[i - 1]

    def xi(self) -> tuple[list[complex], list[complex]]:
        return compute_xi(self.twist, self.cartan)

    def replace(self, **kw) -> "QQInstance":
        data = dict(cartan=self.cartan, q=self.q, lambdas=self.lambdas, twist=self.twist)
        data.update(kw)
        return QQInstance(**data)

    def to_json(self) -> dict:
        return {
            "cartan": self.cartan.to_json(),
            "q": _cpx_json(self.q),
            "lambdas": [lam.to_json() for lam in self.lambdas],
            "zetas": [_cpx_json(z) for z in self.twist.zetas],
            "ordering": list(self.cartan.ordering),
        }

    @classmethod
    def from_json(cls, data: dict) -> "QQInstance":
        try:
            c = data["cartan"]
            ordering = data.get("ordering", c.get("ordering"))
            cartan = cartan_matrix(c["lie_type"], int(c["rank"]), ordering)
            return cls(
                cartan,
                _cpx_from_json(data["q"]),
                tuple(Poly.from_json(p) for p in data["lambdas"]),
                Twist(tuple(_cpx_from_json(z) for z in data["zetas"])),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed instance: {exc}") from exc


@dataclass(frozen=True)
class QQSolution:
    """Tuples of ``Q+^i`` (monic) and ``Q-^i`` in node order."""

    q_plus: tuple
    q_minus: tuple

    def __post_init__(self):
        object.__setattr__(self, "q_plus", tuple(self.q_plus))
        object.__setattr__(self, "q_minus", tuple(self.q_minus))
        if len(self.q_plus) != len(self.q_minus):
            raise InvalidInputError("q_plus and q_minus lengths differ")

    def to_json(self) -> dict:
        return {"q_plus": [p.to_json() for p in self.q_plus], "q_minus": [p.to_json() for p in self.q_minus]}

    @classmethod
    def from_json(cls, data: dict) -> "QQSolution":
        try:
            return cls(
                tuple(Poly.from_json(p) for p in data["q_plus"]),
                tuple(Poly.from_json(p) for p in data["q_minus"]),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed solution: {exc}") from exc


# --------------------------------------------------------------------------- residuals


def qq_rhs(instance: QQInstance, q_plus: Sequence[Poly], i: int) -> Poly:
    """``f_i(z) = Lambda_i(z) prod_{j>i} Q+^j(qz)^{-a_ji} prod_{j<i} Q+^j(z)^{-a_ji}``."""
    c, q = instance.cartan, instance.q
    f = instance.lam(i)
    for j in range(1, c.rank + 1):
        e = -c.a(j, i)
        if j == i or e == 0:
            continue
        base = qshift(q_plus[j - 1], q, 1) if c.after(j, i) else q_plus[j - 1]
        f = f * base**e
    return f


def qq_residual(instance: QQInstance, solution: QQSolution) -> list[Poly]:
    """Coefficient residual of the QQ-system at every node."""
    q = instance.q
    xi, xt = instance.xi()
    out = []
    for i in range(1, instance.rank + 1):
        qp, qm = solution.q_plus[i - 1], solution.q_minus[i - 1]
        lhs = xt[i - 1] * (qm * qshift(qp, q)) - xi[i - 1] * (qshift(qm, q) * qp)
        out.append(lhs - qq_rhs(instance, solution.q_plus, i))
    return out


def relative_qq_residual(instance: QQInstance, solution: QQSolution) -> float:
    """Max over nodes of ``max|residual coeff| / max|rhs coeff|``."""
    worst = 0.0
    for i, res in enumerate(qq_residual(instance, solution), start=1):
        scale = qq_rhs(instance, solution.q_plus, i).max_abs()
        worst = max(worst, res.max_abs() / scale)
    return worst


# --------------------------------------------------------------------------- degrees


def qminus_degree(instance: QQInstance, m_plus: Sequence[int]) -> list[int]:
    """``m-_i = deg Lambda_i - m+_i - sum_{j != i} a_ji m+_j``; negative values are rejected."""
    c = instance.cartan
    if len(m_plus) != c.rank or any(int(m) < 0 for m in m_plus):
        raise InvalidInputError("m_plus must list one nonnegative degree per node")
    out = []
    for i in range(1, c.rank + 1):
        m = instance.lam(i).degree - m_plus[i - 1]
        m -= sum(c.a(j, i) * m_plus[j - 1] for j in range(1, c.rank + 1) if j != i)
        out.append(int(m))
    if min(out) < 0:
        raise InfeasibleDegreesError(f"m_plus={list(m_plus)} predicts negative Q- degrees {out}")
    return out


def feasible_degrees(instance: QQInstance, max_m: int = 2) -> list[tuple]:
    """All ``m_plus`` with entries in ``0..max_m``, not all zero, and ``m- >= 0``."""
    out = []
    for m in itertools.product(range(max_m + 1), repeat=instance.rank):
        if sum(m) == 0:
            continue
        try:
            qminus_degree(instance, m)
        except InfeasibleDegreesError:
            continue
        out.append(m)
    return out


# --------------------------------------------------------------------------- nondegeneracy


@dataclass(frozen=True)
class Constraint:
    kind: str
    nodes: tuple
    passed: bool
    witnesses: tuple = ()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "nodes": list(self.nodes),
            "passed": self.passed,
            "witnesses": [[_cpx_json(u), _cpx_json(v), int(n)] for u, v, n in self.witnesses],
        }


@dataclass(frozen=True)
class NondegReport:
    entries: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list[Constraint]:
        return [e for e in self.entries if not e.passed]

    def to_json(self) -> dict:
        return {"passed": self.passed, "entries": [e.to_json() for e in self.entries]}


def _roots_or_empty(p: Poly) -> list[complex]:
    return list(roots(p)) if p.degree >= 1 else []


def _cross_witnesses(us, vs, q, window, tol) -> list:
    out = []
    for u in us:
        for v in vs:
            w = q_relation(u, v, q, window, tol)
            if w is not None:
                out.append(w)
    return out


def _coprime_witnesses(us, vs, tol=1e-8) -> list:
    return [(u, v, 0) for u in us for v in vs if abs(u - v) <= tol * max(1.0, abs(u), abs(v))]


def check_nondegenerate(
    instance: QQInstance, solution: QQSolution, window: int = DISTINCT_WINDOW, tol: float = DISTINCT_TOL
) -> NondegReport:
    """Report on every nondegeneracy constraint with q-power witnesses."""
    c, q, r = instance.cartan, instance.q, instance.rank
    entries = []
    for t in check_twist_assumption(instance.twist, q, c, max(window, 1)):
        entries.append(Constraint("twist", (t.node,), t.passed))
    for i, p in enumerate(solution.q_plus, start=1):
        entries.append(Constraint("monic", (i,), p.is_monic(1e-9)))

    rp = [_roots_or_empty(p) for p in solution.q_plus]
    rm = [_roots_or_empty(p) for p in solution.q_minus]
    rl = [_roots_or_empty(p) for p in instance.lambdas]

    for i in range(1, r + 1):
        # simple roots, Q+ and Q- coprime, and the SL(2) condition against rho_i's roots
        wit = _coprime_witnesses(rp[i - 1], rm[i - 1])
        # Q+^i(z) and Q+^i(qz) must be coprime: no zero root, no q-related pair
        wit += [(w, w, 0) for w in rp[i - 1] if abs(w) <= ZERO_ROOT_TOL]
        for a, b in itertools.combinations(rp[i - 1], 2):
            hit = q_relation(a, b, q, window, tol)
            if hit is not None:
                wit.append(hit)
        rho_roots = list(rl[i - 1])
        for j in c.neighbours(i):
            rho_roots += ([w / q for w in rp[j - 1]] if c.after(j, i) else rp[j - 1])
        wit += _cross_witnesses(rp[i - 1], rho_roots, q, window, tol)
        entries.append(Constraint("node", (i,), not wit, tuple(wit)))

    for i, j, k in itertools.product(range(1, r + 1), repeat=3):
        if i == j or c.a(i, k) == 0 or c.a(j, k) == 0:
            continue
        wit = []
        wit += _cross_witnesses(rp[j - 1], rm[j - 1], q, window, tol)
        wit += _cross_witnesses(rp[j - 1] + rm[j - 1], rl[k - 1], q, window, tol)
        wit += _cross_witnesses(rp[i - 1], rp[j - 1], q, window, tol)
        wit += _cross_witnesses(rp[i - 1], rl[k - 1], q, window, tol)
        entries.append(Constraint("triple", (i, j, k), not wit, tuple(wit)))
    return NondegReport(tuple(entries))


# --------------------------------------------------------------------------- reconstruction


def _deflate(p: Poly, w: complex) -> Poly:
    quot, _ = p.divmod(Poly([-w, 1]))
    return quot


def reconstruct_node(instance: QQInstance, q_plus: Sequence[Poly], i: int, plus_roots=None) -> Poly:
    """Q-^i from Q+ by partial fractions of ``f_i / (Q+^i(z) Q+^i(qz))``."""
    q = instance.q
    xi_all, xt_all = instance.xi()
    xi, xt = xi_all[i - 1], xt_all[i - 1]
    qp = q_plus[i - 1]
    f = qq_rhs(instance, q_plus, i)
    if qp.degree == 0:
        h = f.scale(1 / (qp.lc * qp.lc))
        res_z = []
        w = []
    else:
        w = list(plus_roots) if plus_roots is not None else list(roots(qp))
        frac = RationalFn(f, qp * qshift(qp, q))
        h, res = partial_fractions_simple(frac, {"z": w, "qz": [x / q for x in w]})
        res_z = res["z"]
        for k, (b, c_over_q) in enumerate(zip(res["z"], res["qz"])):
            c_k = q * c_over_q
            lhs, rhs = b / xt, -c_k / xi
            gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
            if gap > CONSISTENCY_TOL:
                raise ConsistencyError(
                    f"node {i}, root {w[k]}: residues inconsistent (relative gap {gap:.2e}); "
                    "Q+ does not satisfy the Bethe equations"
                )
    coeffs = []
    for m, s in enumerate(h.coeffs):
        den = xt - xi * q**m
        if abs(den) <= RESONANCE_TOL * max(abs(xt), abs(xi * q**m)):
            raise ResonanceError(f"node {i}: xi~ - xi q^{m} vanishes")
        coeffs.append(s / den)
    qm = Poly(coeffs) * qp
    for k, b in enumerate(res_z):
        qm = qm + _deflate(qp, w[k]).scale(b / xt)
    return _truncate_to_degree(qm, _predicted_degree(instance, q_plus, i))


def _predicted_degree(instance: QQInstance, q_plus: Sequence[Poly], i: int) -> int:
    c = instance.cartan
    m = instance.lam(i).degree - q_plus[i - 1].degree
    return m - sum(c.a(j, i) * q_plus[j - 1].degree for j in range(1, c.rank + 1) if j != i)


def _truncate_to_degree(p: Poly, m: int) -> Poly:
    """Drop cancellation noise above the degree fixed by the degree identity."""
    c = p.coeffs
    if m < 0 or c.size <= m + 1:
        return p
    if np.max(np.abs(c[m + 1 :])) > ZERO_ROOT_TOL * np.max(np.abs(c)):
        return p
    return Poly(c[: m + 1])


def reconstruct_qminus(instance: QQInstance, q_plus: Sequence[Poly], plus_roots=None) -> list[Poly]:
    """Unique ``Q-^i`` solving the QQ-system for the given ``Q+^i`` (no monic normalization)."""
    if len(q_plus) != instance.rank:
        raise InvalidInputError("need one Q+ per node")
    for i, p in enumerate(q_plus, start=1):
        if not p.is_monic(1e-9):
            raise InvalidInputError(f"Q+^{i} must be monic")
    return [
        reconstruct_node(instance, q_plus, i, None if plus_roots is None else plus_roots[i - 1])
        for i in range(1, instance.rank + 1)
    ]


def complete_solution(instance: QQInstance, q_plus: Sequence[Poly], plus_roots=None) -> QQSolution:
    return QQSolution(tuple(q_plus), tuple(reconstruct_qminus(instance, q_plus, plus_roots)))


# --------------------------------------------------------------------------- gauge maps between orderings


def _shift_gauge(instance: QQInstance, solution: QQSolution, cartan: CartanData, d: Sequence[int]):
    """Substitute ``z -> q^{d_i} z`` at node ``i`` and renormalize to the QQ-system of ``cartan``."""
    q, r = instance.q, instance.rank
    c_scale, lam_scale, lambdas, qp_new, shifted_m = [], [], [], [], []
    for i in range(1, r + 1):
        lam = qshift(instance.lam(i), q, d[i - 1])
        lam_scale.append(lam.lc)
        lambdas.append(lam.monic())
        p = qshift(solution.q_plus[i - 1], q, d[i - 1])
        c_scale.append(p.lc)
        qp_new.append(p.monic())
        shifted_m.append(qshift(solution.q_minus[i - 1], q, d[i - 1]))
    old = instance.cartan
    xi_old, _ = compute_xi(instance.twist, old)
    xi_new, _ = compute_xi(instance.twist, cartan)
    qm_new = []
    for i in range(1, r + 1):
        k = 1 + 0j
        for j in range(1, r + 1):
            if j != i:
                k *= c_scale[j - 1] ** (-old.a(j, i))
        alpha = xi_old[i - 1] / xi_new[i - 1]
        qm_new.append(shifted_m[i - 1].scale(alpha * c_scale[i - 1] / (lam_scale[i - 1] * k)))
    new_instance = QQInstance(cartan, q, tuple(lambdas), instance.twist)
    return new_instance, QQSolution(tuple(qp_new), tuple(qm_new))


def order_indicator(cartan: CartanData, j: int, i: int) -> int:
    """``b_ji = 1`` when node ``j`` comes after node ``i`` in the ordering, else 0."""
    return int(cartan.after(j, i))


def reorder_shifts(old: CartanData, new: CartanData) -> list[int]:
    """Integer exponents ``d_i`` with ``D^i = q^{d_i}``; node 1 is the basepoint.

    Along each Dynkin edge ``p -> c`` (breadth first from node 1) the equation at
    ``p`` forces ``d_c = d_p + b_cp(old) - b_cp(new)``.
    """
    r = old.rank
    d = [None] * r
    d[0] = 0
    queue = [1]
    while queue:
        p = queue.pop(0)
        for c in old.neighbours(p):
            if d[c - 1] is None:
                d[c - 1] = d[p - 1] + order_indicator(old, c, p) - order_indicator(new, c, p)
                queue.append(c)
    if any(x is None for x in d):
        raise InvalidInputError("Dynkin diagram is disconnected")
    return d


def reorder_gauge(instance: QQInstance, solution: QQSolution, new_ordering: Sequence[int]):
    """Gauge-equivalent instance and solution for the QQ-system written in ``new_ordering``."""
    new = instance.cartan.with_ordering(new_ordering)
    d = reorder_shifts(instance.cartan, new)
    return _shift_gauge(instance, solution, new, d)


def cyclic_coxeter_shift(instance: QQInstance, solution: QQSolution):
    """Rotate ``(i1, ..., ir) -> (i2, ..., ir, i1)`` and shift node ``i1`` by ``z -> z/q``."""
    order = instance.cartan.ordering
    new = instance.cartan.with_ordering(order[1:] + order[:1])
    d = [0] * instance.rank
    d[order[0] - 1] = -1
    return _shift_gauge(instance, solution, new, d)


# --------------------------------------------------------------------------- random instances


def random_instance(
    cartan: CartanData,
    rng: np.random.Generator,
    max_lambda_degree: int = 3,
    lambda_degrees: Sequence[int] | None = None,
    margin: float = 0.05,
) -> QQInstance:
    """Random generic instance: roots on an annulus, ``|q|`` in [1.4, 2], twist away from ``q^Z``.

    ``margin`` bounds the relative distance of ``alpha(Z)`` from ``q^Z`` for every
    positive root, so twists reflected along Weyl words remain usable.
    """
    r = cartan.rank
    proots = positive_roots(cartan)
    for _ in range(1000):
        q = rng.uniform(1.4, 2.0) * np.exp(1j * rng.uniform(-0.3, 0.3))
        degs = lambda_degrees or [int(rng.integers(1, max_lambda_degree + 1)) for _ in range(r)]
        lambdas = []
        for dgr in degs:
            rad = np.exp(rng.uniform(np.log(0.5), np.log(2.0), dgr))
            ang = rng.uniform(0, 2 * np.pi, dgr)
            lambdas.append(Poly.from_roots(rad * np.exp(1j * ang)))
        zetas = np.exp(rng.uniform(-0.8, 0.8, r) + 1j * rng.uniform(-np.pi, np.pi, r))
        twist = Twist(tuple(complex(z) for z in zetas))
        vals = simple_root_values(twist, cartan)
        ok = True
        for root in proots:
            x = np.prod([v**n for v, n in zip(vals, root)])
            if not q_distinct(x, 1.0, q, TWIST_WINDOW, margin):
                ok = False
                break
        if ok:
            return QQInstance(cartan, complex(q), tuple(lambdas), twist)
    raise RuntimeError("could not draw a generic instance")
