"""Backlund transformations of QQ-system solutions and chains along Weyl words.

A step at node ``i`` replaces ``Q+^i`` by (the monic normalization of) ``Q-^i``
and the twist by ``s_i(Z)``.  On the connection side it is the q-gauge
``A -> e^{mu_i(qz) f_i} A(z) e^{-mu_i(z) f_i}`` with
``mu_i = prod_{j != i} (Q+^j)^{-a_ji} / (Q+^i Q-^i)``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cartan import Twist, is_reduced, positive_roots, weyl_reflect_twist
from .bethe import BetheRoots, polish_roots
from .errors import CellError, GenericityError, InvalidInputError, QoperError, VerificationError
from .miura import (
    RationalMatrix,
    SLnRep,
    _rel_err,
    _require_type_a,
    build_miura_connection,
    product,
    sample_points,
)
from .poly import Poly, RationalFn, q_relation, roots
from .qqsystem import (
    DISTINCT_TOL,
    DISTINCT_WINDOW,
    RESIDUAL_TOL,
    ZERO_ROOT_TOL,
    Constraint,
    NondegReport,
    QQInstance,
    QQSolution,
    _cpx_json,
    check_nondegenerate,
    complete_solution,
    relative_qq_residual,
)

log = logging.getLogger(__name__)

BACKLUND_GAUGE_TOL = 1e-8
HIGHEST_WEIGHT_TOL = 1e-8
CERTIFY_TOL = 1e-7
PIVOT_TOL = 1e-10

_ZERO = RationalFn(Poly())
_ONE = RationalFn(Poly.one())


# --------------------------------------------------------------------------- single step


def backlund_mu(instance: QQInstance, solution: QQSolution, i: int) -> RationalFn:
    """``mu_i = prod_{j != i} (Q+^j)^{-a_ji} / (Q+^i Q-^i)``."""
    c = instance.cartan
    num = Poly.one()
    for j in range(1, c.rank + 1):
        if j != i and c.a(j, i) != 0:
            num = num * solution.q_plus[j - 1] ** (-c.a(j, i))
    return RationalFn(num, solution.q_plus[i - 1] * solution.q_minus[i - 1])


def _roots(p: Poly) -> list[complex]:
    return list(roots(p)) if p.degree >= 1 else []


def lemma73_check(
    instance: QQInstance, solution: QQSolution, i: int, window: int = DISTINCT_WINDOW, tol: float = DISTINCT_TOL
) -> NondegReport:
    """Hypotheses for a step at node ``i``.

    Roots of ``Q-^i`` must be nonzero, pairwise q-distinct, and q-distinct from
    the roots of ``Lambda_k`` (``a_ik != 0``) and of ``Q+^j`` (``j != i`` adjacent
    to such a ``k``).
    """
    c, q = instance.cartan, instance.q
    qm = _roots(solution.q_minus[i - 1])
    entries = []
    own = [(w, w, 0) for w in qm if abs(w) <= ZERO_ROOT_TOL]
    for a, b in itertools.combinations(qm, 2):
        hit = q_relation(a, b, q, window, tol)
        if hit is not None:
            own.append(hit)
    entries.append(Constraint("qminus_simple", (i,), not own, tuple(own)))
    ks = [k for k in range(1, c.rank + 1) if c.a(i, k) != 0]
    for k in ks:
        wit = [h for u in qm for v in _roots(instance.lam(k)) if (h := q_relation(u, v, q, window, tol)) is not None]
        entries.append(Constraint("qminus_vs_lambda", (i, k), not wit, tuple(wit)))
    js = sorted({j for j in range(1, c.rank + 1) if j != i for k in ks if c.a(j, k) != 0})
    for j in js:
        wit = [
            h for u in qm for v in _roots(solution.q_plus[j - 1]) if (h := q_relation(u, v, q, window, tol)) is not None
        ]
        entries.append(Constraint("qminus_vs_qplus", (i, j), not wit, tuple(wit)))
    return NondegReport(tuple(entries))


@dataclass(frozen=True)
class BacklundStep:
    index: int
    mu: RationalFn
    pre_instance: QQInstance
    post_instance: QQInstance
    pre_solution: QQSolution
    post_solution: QQSolution
    nondeg_report: NondegReport
    scale: complex
    residual: float

    @property
    def pre_twist(self) -> Twist:
        return self.pre_instance.twist

    @property
    def post_twist(self) -> Twist:
        return self.post_instance.twist

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "mu": self.mu.to_json(),
            "pre_twist": [_cpx_json(z) for z in self.pre_twist.zetas],
            "post_twist": [_cpx_json(z) for z in self.post_twist.zetas],
            "pre_solution": self.pre_solution.to_json(),
            "post_solution": self.post_solution.to_json(),
            "normalization": _cpx_json(self.scale),
            "post_residual": self.residual,
            "nondegenerate": self.nondeg_report.passed,
        }


def backlund_transform(
    instance: QQInstance, solution: QQSolution, i: int, tol: float = RESIDUAL_TOL, step: int | None = None
) -> BacklundStep:
    """Swap ``Q+^i`` with ``Q-^i`` and reflect the twist at node ``i``.

    The new ``Q+^i`` is ``Q-^i`` divided by its leading coefficient (logged).
    ``Q-`` is rebuilt at every node, since the reflected twist changes every
    ``xi_j``.  Raises :class:`GenericityError` when the hypotheses or the
    nondegeneracy of the result fail.
    """
    if not 1 <= i <= instance.rank:
        raise InvalidInputError(f"node {i} outside 1..{instance.rank}")
    pre_res = relative_qq_residual(instance, solution)
    if pre_res >= tol:
        raise VerificationError(f"input is not a QQ solution (residual {pre_res:.2e})")
    hyp = lemma73_check(instance, solution, i)
    if not hyp.passed:
        wit = [w for e in hyp.failures() for w in e.witnesses]
        raise GenericityError(f"step at node {i}: hypotheses fail ({[e.kind for e in hyp.failures()]})", step, wit)

    mu = backlund_mu(instance, solution, i)
    old_minus = solution.q_minus[i - 1]
    scale = old_minus.lc
    log.debug("backlund node %d: new Q+ normalized by 1/%s", i, scale)
    new_plus = list(solution.q_plus)
    new_plus[i - 1] = old_minus.monic()
    post_instance = instance.replace(twist=weyl_reflect_twist(instance.twist, i, instance.cartan))
    post = complete_solution(post_instance, new_plus)
    res = relative_qq_residual(post_instance, post)
    # the swapped Q+^i inherits reconstruction error; refining its roots keeps composed steps at full accuracy
    polished = polish_roots(post_instance, BetheRoots.from_q_plus(new_plus))
    try:
        alt = complete_solution(post_instance, polished.q_plus(), [list(ws) for ws in polished.roots])
        alt_res = relative_qq_residual(post_instance, alt)
    except QoperError:
        alt_res = np.inf
    if alt_res < res:
        post, res = alt, alt_res
    if res >= tol:
        raise VerificationError(f"step at node {i}: new residual {res:.2e}")
    report = check_nondegenerate(post_instance, post)
    if not report.passed:
        wit = [w for e in report.failures() for w in e.witnesses]
        raise GenericityError(f"step at node {i}: result is degenerate", step, wit)
    return BacklundStep(i, mu, instance, post_instance, solution, post, report, complex(scale), float(res))


def _exp_f(rep: SLnRep, i: int, x: np.ndarray) -> np.ndarray:
    """``exp(x f_i)`` at each value of ``x``."""
    out = np.broadcast_to(np.eye(rep.n, dtype=complex), np.shape(x) + (rep.n, rep.n)).copy()
    out[..., i, i - 1] = x
    return out


@dataclass
class StepGaugeReport:
    error: float
    tol: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.error < self.tol

    def to_json(self) -> dict:
        return {"check": "backlund_gauge", "passed": self.passed, "error": self.error, "tol": self.tol}


def verify_backlund_gauge(
    step: BacklundStep, rep: SLnRep | None = None, samples: int = 20, seed: int = 0, tol: float = BACKLUND_GAUGE_TOL
) -> StepGaugeReport:
    """Check ``e^{mu(qz) f_i} A(z) e^{-mu(z) f_i} = A'(z)`` at sample points (type A)."""
    rep = _require_type_a(step.pre_instance, rep)
    q = step.pre_instance.q
    a = build_miura_connection(step.pre_instance, step.pre_solution.q_plus, rep, samples=0)
    b = build_miura_connection(step.post_instance, step.post_solution.q_plus, rep, samples=0)
    poles = a.poles() + b.poles() + list(step.mu.den_roots)
    pts = sample_points(poles, q, samples, seed, shifts=1)
    lhs = _exp_f(rep, step.index, step.mu(q * pts)) @ a(pts) @ _exp_f(rep, step.index, -step.mu(pts))
    return StepGaugeReport(_rel_err(lhs, b(pts)), tol, samples)


def lemma72_errors(rep: SLnRep, u: complex, v: complex, i: int, j: int) -> dict:
    """Deviation in the three exponential identities for ``sl(n)`` generators.

    * ``u^{h_i} e^{v e_j} = e^{u^{a_ij} v e_j} u^{h_i}``
    * ``u^{h_i} e^{v f_j} = e^{u^{-a_ij} v f_j} u^{h_i}``
    * ``e^{u e_i} e^{v f_i} = e^{v/(1+uv) f_i} (1+uv)^{h_i} e^{u/(1+uv) e_i}`` for ``uv != -1``
    """
    if abs(1 + u * v) < 1e-12:
        raise InvalidInputError("uv = -1 is singular")
    one = np.eye(rep.n)
    a = rep.cartan_entry(i, j)
    t = rep.torus(u, i)
    e1 = np.abs(t @ (one + v * rep.e(j)) - (one + u**a * v * rep.e(j)) @ t).max()
    e2 = np.abs(t @ (one + v * rep.f(j)) - (one + u ** (-a) * v * rep.f(j)) @ t).max()
    w = 1 + u * v
    lhs = (one + u * rep.e(i)) @ (one + v * rep.f(i))
    rhs = (one + v / w * rep.f(i)) @ rep.torus(w, i) @ (one + u / w * rep.e(i))
    return {"torus_e": float(e1), "torus_f": float(e2), "ef_swap": float(np.abs(lhs - rhs).max())}


# --------------------------------------------------------------------------- chains


@dataclass
class BacklundChain:
    word: tuple
    steps: list
    instance: QQInstance
    solution: QQSolution
    b_minus: RationalMatrix | None = None
    verification: dict = field(default_factory=dict)

    @property
    def final_instance(self) -> QQInstance:
        return self.steps[-1].post_instance if self.steps else self.instance

    @property
    def final_solution(self) -> QQSolution:
        return self.steps[-1].post_solution if self.steps else self.solution

    def to_json(self) -> dict:
        return {
            "word": list(self.word),
            "steps": [s.to_json() for s in self.steps],
            "final_twist": [_cpx_json(z) for z in self.final_instance.twist.zetas],
            "b_minus": None if self.b_minus is None else self.b_minus.to_json(),
            "verification": self.verification,
        }


def _torus_rational(rep: SLnRep, i: int, t: RationalFn) -> RationalMatrix:
    n = rep.n
    out = [[_ONE if a == b else _ZERO for b in range(n)] for a in range(n)]
    out[i - 1][i - 1] = t
    out[i][i] = t.inverse()
    return RationalMatrix(out)


def _exp_f_rational(rep: SLnRep, i: int, x: RationalFn) -> RationalMatrix:
    n = rep.n
    out = [[_ONE if a == b else _ZERO for b in range(n)] for a in range(n)]
    out[i][i - 1] = x
    return RationalMatrix(out)


def _minors(m: np.ndarray, k: int) -> np.ndarray:
    """All ``k x k`` minors of the first ``k`` columns (the image of ``e_1 ^ ... ^ e_k``)."""
    rows = list(itertools.combinations(range(m.shape[-2]), k))
    return np.stack([np.linalg.det(m[..., list(r), :k]) for r in rows], axis=-1)


def backlund_chain(
    instance: QQInstance,
    solution: QQSolution,
    word: Sequence[int],
    rep: SLnRep | None = None,
    samples: int = 20,
    seed: int = 0,
    build_b_minus: bool | None = None,
) -> BacklundChain:
    """Apply steps along ``word`` consumed right to left (``i_k`` first).

    For type A, also assembles
    ``b_-(z) = e^{-mu f_{i_k}} ... e^{-mu f_{i_1}} prod_j (Qbar^j)^{h_j}``
    (each ``mu`` taken at its own step) and checks
    ``b_-(qz) w(Z) v = A(z) b_-(z) v`` on the highest-weight vectors
    ``e_1 ^ ... ^ e_k`` at sample points.
    """
    word = tuple(int(i) for i in word)
    if any(not 1 <= i <= instance.rank for i in word):
        raise InvalidInputError(f"word {list(word)} uses a node outside 1..{instance.rank}")
    if not is_reduced(word, instance.cartan):
        raise InvalidInputError(f"word {list(word)} is not reduced")
    steps = []
    inst, sol = instance, solution
    for pos, i in enumerate(reversed(word)):
        step = backlund_transform(inst, sol, i, step=pos)
        steps.append(step)
        inst, sol = step.post_instance, step.post_solution
    chain = BacklundChain(word, steps, instance, solution)
    if build_b_minus is None:
        build_b_minus = instance.cartan.lie_type == "A"
    if not build_b_minus:
        return chain

    rep = _require_type_a(instance, rep)
    pieces = [_exp_f_rational(rep, s.index, -s.mu) for s in steps]
    qbar = chain.final_solution.q_plus
    pieces += [_torus_rational(rep, j, RationalFn(qbar[j - 1])) for j in range(1, instance.rank + 1)]
    b_minus = product(pieces, rep.n)
    chain.b_minus = b_minus

    q = instance.q
    a = build_miura_connection(instance, solution.q_plus, rep, samples=0)
    pts = sample_points(a.poles() + b_minus.poles(), q, samples, seed, shifts=1)
    wz = rep.twist_matrix(chain.final_instance.twist.zetas)
    lhs = b_minus(q * pts) @ wz
    rhs = a(pts) @ b_minus(pts)
    errs = [_rel_err(_minors(lhs, k), _minors(rhs, k)) for k in range(1, rep.n)]
    worst = max(errs, default=0.0)
    chain.verification = {
        "check": "highest_weight",
        "passed": worst < HIGHEST_WEIGHT_TOL,
        "errors": errs,
        "tol": HIGHEST_WEIGHT_TOL,
        "samples": samples,
    }
    if worst >= HIGHEST_WEIGHT_TOL:
        raise VerificationError(f"b_- fails the highest-weight identity (err {worst:.2e})")
    return chain


# --------------------------------------------------------------------------- full Z-twist


def _antidiagonal(n: int) -> np.ndarray:
    return np.eye(n)[::-1].astype(complex)


def _lu_rational(x: RationalMatrix, pts: np.ndarray):
    """Doolittle ``X = L1 U1`` over rational functions; raises CellError on a vanishing pivot."""
    n = x.n
    L = [[_ONE if i == j else _ZERO for j in range(n)] for i in range(n)]
    U = [[_ZERO] * n for _ in range(n)]
    scale = max(float(np.abs(x(pts)).max()), 1e-300)
    for k in range(n):
        for j in range(k, n):
            acc = x[k, j]
            for s in range(k):
                if not L[k][s].is_zero() and not U[s][j].is_zero():
                    acc = acc - L[k][s] * U[s][j]
            U[k][j] = acc
        piv = U[k][k]
        if piv.is_zero() or float(np.abs(piv(pts)).max()) <= PIVOT_TOL * scale:
            raise CellError(f"leading minor {k + 1} vanishes: b_- is not in the open Bruhat cell")
        inv = piv.inverse()
        for i in range(k + 1, n):
            acc = x[i, k]
            for s in range(k):
                if not L[i][s].is_zero() and not U[s][k].is_zero():
                    acc = acc - L[i][s] * U[s][k]
            L[i][k] = acc * inv
    return L, U


def certify_full_ztwist(
    chain: BacklundChain, rep: SLnRep | None = None, samples: int = 20, seed: int = 0, tol: float = CERTIFY_TOL
) -> tuple[RationalMatrix, dict]:
    """Factor ``b_- = b_+ w0 n_+`` and check ``A(z) = b_+(qz) Z b_+(z)^{-1}`` at samples."""
    inst = chain.instance
    rep = _require_type_a(inst, rep)
    if len(chain.word) != len(positive_roots(inst.cartan)):
        raise InvalidInputError("chain word is not a reduced word for w0")
    if chain.b_minus is None:
        raise InvalidInputError("chain has no b_- (type A chain with build_b_minus required)")
    n, q = rep.n, inst.q
    J = _antidiagonal(n)
    x = RationalMatrix.constant(J.T) @ chain.b_minus
    pts = sample_points(x.poles(), q, samples, seed, shifts=1)
    L1, U1 = _lu_rational(x, pts)
    # X = L1 U1 = (L1 D)(D^{-1} U1) with D = diag(U1); b_+ = J (L1 D) J^{-1}
    lower = [[L1[i][j] * U1[j][j] if j <= i else _ZERO for j in range(n)] for i in range(n)]
    b_plus = RationalMatrix.constant(J) @ RationalMatrix(lower) @ RationalMatrix.constant(J.T)
    a = build_miura_connection(inst, chain.solution.q_plus, rep, samples=0)
    pts = sample_points(a.poles() + b_plus.poles(), q, samples, seed + 1, shifts=1)
    Z = rep.twist_matrix(inst.twist.zetas)
    rhs = b_plus(q * pts) @ Z @ np.linalg.inv(b_plus(pts))
    err = _rel_err(a(pts), rhs)
    report = {
        "check": "full_ztwist",
        "passed": err < tol,
        "error": err,
        "tol": tol,
        "samples": samples,
        "upper_triangular": b_plus.is_upper_triangular(),
    }
    if err >= tol:
        raise VerificationError(f"A(z) = b_+(qz) Z b_+(z)^-1 fails (err {err:.2e})")
    return b_plus, report
