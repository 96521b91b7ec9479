"""Bethe equations: residuals, a multi-start Newton solver and a brute-force oracle.

At node ``i`` and root ``w`` of ``Q+^i`` the equation reads::

    Theta_i Q+^i(qw) / Q+^i(w/q)
        = - Lambda_i(w) prod_{j>i} Q+^j(qw)^{e_j} prod_{j<i} Q+^j(w)^{e_j}
          / (Lambda_i(w/q) prod_{j>i} Q+^j(w)^{e_j} prod_{j<i} Q+^j(w/q)^{e_j})

with ``Theta_i = prod_j zeta_j^{a_ji}`` and ``e_j = -a_ji``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import BudgetExceededError, DegenerateError, InvalidInputError, QoperError
from .poly import Poly, annulus_points, qshift, roots
from .qqsystem import (
    QQInstance,
    QQSolution,
    check_nondegenerate,
    complete_solution,
    qminus_degree,
    qq_rhs,
    relative_qq_residual,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BetheRoots:
    """Per-node tuples of Bethe roots; ``roots[i-1]`` belongs to node ``i``."""

    roots: tuple

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(tuple(complex(w) for w in ws) for ws in self.roots))

    @property
    def degrees(self) -> tuple:
        return tuple(len(ws) for ws in self.roots)

    def q_plus(self) -> list[Poly]:
        return [Poly.from_roots(ws) for ws in self.roots]

    def flat(self) -> np.ndarray:
        return np.array([w for ws in self.roots for w in ws], dtype=complex)

    def to_json(self) -> list:
        return [[[w.real, w.imag] for w in ws] for ws in self.roots]

    @classmethod
    def from_q_plus(cls, q_plus: Sequence[Poly]) -> "BetheRoots":
        return cls(tuple(tuple(roots(p)) if p.degree >= 1 else () for p in q_plus))


@dataclass(frozen=True)
class SolverConfig:
    seed: int = 0
    starts_per_degree: int = 64
    max_iter: int = 80
    max_step: float = 0.5
    tol: float = 1e-9
    dedupe_tol: float = 1e-6
    collision_tol: float = 1e-6
    mode: str = "log"
    max_rounds: int = 12
    quiet_rounds: int = 3

    def __post_init__(self):
        if min(self.starts_per_degree, self.max_iter) <= 0 or min(self.max_step, self.tol, self.dedupe_tol) <= 0:
            raise InvalidInputError("solver settings must be positive")
        if self.dedupe_tol <= self.tol:
            raise InvalidInputError("dedupe tolerance must exceed residual tolerance")


def theta(instance: QQInstance, i: int) -> complex:
    c = instance.cartan
    out = 1 + 0j
    for j in range(1, c.rank + 1):
        out *= instance.twist[j] ** c.a(j, i)
    return out


def _sides(instance: QQInstance, q_plus: Sequence[Poly], i: int, w: complex) -> tuple[complex, complex, complex]:
    """``(LHS, N, D)`` with the Bethe equation reading ``LHS = -N / D``."""
    c, q = instance.cartan, instance.q
    lhs = theta(instance, i) * q_plus[i - 1](q * w) / q_plus[i - 1](w / q)
    num = instance.lam(i)(w)
    den = instance.lam(i)(w / q)
    for j in range(1, c.rank + 1):
        e = -c.a(j, i)
        if j == i or e == 0:
            continue
        p = q_plus[j - 1]
        if c.after(j, i):
            num *= p(q * w) ** e
            den *= p(w) ** e
        else:
            num *= p(w) ** e
            den *= p(w / q) ** e
    return lhs, num, den


def bethe_residual(instance: QQInstance, roots_: BetheRoots, tol: float = 1e-12) -> list[list[complex]]:
    """``LHS - RHS`` of the Bethe equation at every root, grouped by node."""
    if len(roots_.roots) != instance.rank:
        raise InvalidInputError("need one root list per node")
    q_plus = roots_.q_plus()
    out = []
    for i, ws in enumerate(roots_.roots, start=1):
        qp = q_plus[i - 1]
        row = []
        for w in ws:
            scale = max(1.0, qp.norm() * max(1.0, abs(w)) ** qp.degree)
            if abs(qp(w / instance.q)) <= tol * scale:
                raise DegenerateError(f"Q+^{i}(w/q) vanishes at root {w}")
            lhs, num, den = _sides(instance, q_plus, i, w)
            if abs(den) <= tol * max(1.0, abs(num)):
                raise DegenerateError(f"right-hand denominator vanishes at node {i}, root {w}")
            row.append(complex(lhs + num / den))
        out.append(row)
    return out


def max_bethe_residual(instance: QQInstance, roots_: BetheRoots) -> float:
    vals = [abs(x) for row in bethe_residual(instance, roots_) for x in row]
    return max(vals, default=0.0)


# --------------------------------------------------------------------------- SL(2) familiar form


def factor_sl2_lambda(lam: Poly, q: complex, window: int = 20, tol: float = 1e-8):
    """Split ``Lambda`` into q-strings ``prod_{j<r_p} (z - q^{-j} z_p)``; returns ``(z_p, r_p)``."""
    rs = list(roots(lam))
    if any(abs(w) == 0 for w in rs):
        raise InvalidInputError("familiar form needs nonzero roots of Lambda")
    zs, reps = [], []
    while rs:
        # pick a string head: a root w with no q*w among remaining roots
        head = next(w for w in rs if not any(abs(u - q * w) <= tol * abs(u) for u in rs))
        chain = [head]
        rs.remove(head)
        while True:
            nxt = next((u for u in rs if abs(u - chain[-1] / q) <= tol * abs(u)), None)
            if nxt is None:
                break
            chain.append(nxt)
            rs.remove(nxt)
        zs.append(head)
        reps.append(len(chain))
    from .poly import q_distinct

    for a in range(len(zs)):
        for b in range(a + 1, len(zs)):
            if not q_distinct(zs[a], zs[b], q, window, tol):
                raise InvalidInputError("Lambda is not factorable into mutually q-distinct strings")
    return zs, reps


def sl2_familiar_residual(
    instance: QQInstance, roots_: BetheRoots, z_p: Sequence[complex] | None = None, r_p: Sequence[int] | None = None
) -> list[complex]:
    """Residuals of the SL(2) equations written with string data ``(z_p, r_p)``.

    ``q^r prod_p (w - q^{1-r_p} z_p)/(w - q z_p) + zeta^2 q^m prod_j (q w_k - w_j)/(w_k - q w_j)``.
    """
    if instance.rank != 1 or instance.cartan.lie_type != "A":
        raise InvalidInputError("familiar form is for A1 data")
    q = instance.q
    if z_p is None or r_p is None:
        z_p, r_p = factor_sl2_lambda(instance.lam(1), q)
    expected = Poly.from_roots([q ** (-j) * zp for zp, rp in zip(z_p, r_p) for j in range(rp)])
    if not expected.allclose(instance.lam(1), 1e-9):
        raise InvalidInputError("Lambda does not match the supplied string data")
    ws = list(roots_.roots[0])
    if any(w == 0 for w in ws):
        raise InvalidInputError("familiar form needs nonzero Bethe roots")
    zeta = instance.twist[1]
    m, r = len(ws), sum(r_p)
    out = []
    for wk in ws:
        left = q**r
        for zp, rp in zip(z_p, r_p):
            left *= (wk - q ** (1 - rp) * zp) / (wk - q * zp)
        right = zeta**2 * q**m
        for wj in ws:
            right *= (q * wk - wj) / (wk - q * wj)
        out.append(complex(left + right))
    return out


# --------------------------------------------------------------------------- Newton solver


class _LogSystem:
    """Vectorized ``F(x) = Log R(e^x)`` and its Jacobian over a batch of starts."""

    def __init__(self, instance: QQInstance, degrees: Sequence[int]):
        self.instance = instance
        self.degrees = list(degrees)
        self.offsets = np.concatenate([[0], np.cumsum(self.degrees)]).astype(int)
        self.size = int(self.offsets[-1])
        c, q = instance.cartan, instance.q
        self.log_const = np.zeros(self.size, dtype=complex)
        # terms: (node i, node j, shift c, exponent e): adds e * sum_l log(c w_k - w_l^j)
        self.terms = []
        self.lambda_terms = []
        for i in range(1, c.rank + 1):
            if self.degrees[i - 1] == 0:
                continue
            sl = self._sl(i)
            # -LHS / RHS = -Theta Q+^i(qw) Lambda(w/q) D / (Q+^i(w/q) Lambda(w) N) equals 1 at a root
            self.log_const[sl] = np.log(-theta(instance, i))
            self.terms += [(i, i, q, 1), (i, i, 1 / q, -1)]
            self.lambda_terms += [(i, 1 / q, 1), (i, 1.0, -1)]
            for j in range(1, c.rank + 1):
                e = -c.a(j, i)
                if j == i or e == 0 or self.degrees[j - 1] == 0:
                    continue
                if c.after(j, i):
                    self.terms += [(i, j, 1.0, e), (i, j, q, -e)]
                else:
                    self.terms += [(i, j, 1 / q, e), (i, j, 1.0, -e)]

    def _sl(self, i: int) -> slice:
        return slice(self.offsets[i - 1], self.offsets[i])

    def parts(self, x: np.ndarray):
        """Split ``-R = P / Q``: returns ``log P, log Q`` (S, M) and their x-Jacobians (S, M, M)."""
        s = x.shape[0]
        w = np.exp(x)
        logs = [np.zeros((s, self.size), dtype=complex) for _ in range(2)]
        jacs = [np.zeros((s, self.size, self.size), dtype=complex) for _ in range(2)]
        logs[0] += self.log_const
        for i, j, cst, e in self.terms:
            side, e = (0, e) if e > 0 else (1, -e)
            si, sj = self._sl(i), self._sl(j)
            wk = w[:, si][:, :, None]
            wl = w[:, sj][:, None, :]
            diff = cst * wk - wl
            logs[side][:, si] += e * np.sum(np.log(diff), axis=2)
            idx = np.arange(si.start, si.stop)
            jacs[side][:, idx, idx] += e * np.sum(cst * wk / diff, axis=2)
            jacs[side][:, si, sj] += -e * wl / diff
        for i, cst, e in self.lambda_terms:
            side, e = (0, e) if e > 0 else (1, -e)
            si = self._sl(i)
            lam = self.instance.lam(i)
            arg = cst * w[:, si]
            val = lam(arg)
            logs[side][:, si] += e * np.log(val)
            idx = np.arange(si.start, si.stop)
            jacs[side][:, idx, idx] += e * arg * lam.derivative()(arg) / val
        return logs[0], logs[1], jacs[0], jacs[1]

    def evaluate(self, x: np.ndarray, mode: str = "log"):
        """Residual and Jacobian for a batch ``x`` of shape (S, M)."""
        lp, lq, jp, jq = self.parts(x)
        if mode == "log":
            f = lp - lq
            # principal branch of Log(-R); the Jacobian is branch independent
            return f.real + 1j * np.angle(np.exp(1j * f.imag)), jp - jq
        if mode == "ratio":
            r = np.exp(lp - lq)
            return r - 1, r[:, :, None] * (jp - jq)
        p, qv = np.exp(lp), np.exp(lq)
        return p - qv, p[:, :, None] * jp - qv[:, :, None] * jq


def _solve_batch(jac: np.ndarray, rhs: np.ndarray):
    try:
        return np.linalg.solve(jac, rhs[:, :, None])[:, :, 0], np.ones(len(rhs), bool)
    except np.linalg.LinAlgError:
        out = np.zeros_like(rhs)
        ok = np.ones(len(rhs), bool)
        for s in range(len(rhs)):
            try:
                out[s] = np.linalg.solve(jac[s], rhs[s])
            except np.linalg.LinAlgError:
                ok[s] = False
        return out, ok


def _newton(system: _LogSystem, x: np.ndarray, cfg: SolverConfig):
    alive = np.ones(len(x), bool)
    conv = np.zeros(len(x), bool)
    with np.errstate(all="ignore"):
        for _ in range(cfg.max_iter):
            act = alive & ~conv
            if not np.any(act):
                break
            xa = x[act]
            f, jac = system.evaluate(xa, cfg.mode)
            bad = ~np.all(np.isfinite(f), axis=1) | ~np.all(np.isfinite(jac), axis=(1, 2))
            f = np.where(bad[:, None], 0, f)
            jac = np.where(bad[:, None, None], np.eye(system.size), jac)
            step, ok = _solve_batch(jac, -f)
            ok &= ~bad & np.all(np.isfinite(step), axis=1)
            norm = np.max(np.abs(step), axis=1)
            factor = np.minimum(1.0, cfg.max_step / np.maximum(norm, 1e-300))
            xa = xa + factor[:, None] * step
            done = ok & (norm < 1e-13)
            idx = np.nonzero(act)[0]
            x[idx] = xa
            alive[idx[~ok]] = False
            conv[idx[done]] = True
            # keep roots off zero and infinity
            alive &= np.all(np.abs(x.real) < 30, axis=1)
    return x, conv & alive


def polish_roots(instance: QQInstance, roots_: BetheRoots, config: SolverConfig | None = None, max_move: float = 1e-6):
    """Newton-refine approximate Bethe roots; returns the input when refinement fails or wanders."""
    cfg = config or SolverConfig()
    flat = roots_.flat()
    if flat.size == 0 or np.any(np.abs(flat) < 1e-12):
        return roots_
    system = _LogSystem(instance, roots_.degrees)
    x, ok = _newton(system, np.log(flat)[None, :].astype(complex), cfg)
    if not ok[0]:
        return roots_
    w = np.exp(x[0])
    if np.max(np.abs(w - flat) / np.maximum(1.0, np.abs(flat))) > max_move:
        return roots_
    return BetheRoots(tuple(tuple(w[system._sl(i)]) for i in range(1, instance.rank + 1)))


def _match(a: np.ndarray, b: np.ndarray) -> float:
    """Largest relative distance under the best pairing of two root lists."""
    if a.size == 0:
        return 0.0
    dist = np.abs(a[:, None] - b[None, :]) / np.maximum(1.0, np.maximum(np.abs(a)[:, None], np.abs(b)[None, :]))
    r, c = linear_sum_assignment(dist)
    return float(np.max(dist[r, c]))


def same_roots(a: BetheRoots, b: BetheRoots, tol: float = 1e-6) -> bool:
    """Equality up to permutation of roots within each node."""
    if a.degrees != b.degrees:
        return False
    return all(_match(np.array(x), np.array(y)) <= tol for x, y in zip(a.roots, b.roots))


def _sort_key(b: BetheRoots):
    return tuple((round(w.real, 8), round(w.imag, 8)) for ws in b.roots for w in sorted(ws, key=lambda u: (u.real, u.imag)))


def _start_radii(instance: QQInstance) -> tuple[float, float]:
    mods = [abs(w) for lam in instance.lambdas for w in roots(lam) if abs(w) > 0]
    if not mods:
        return 0.25, 4.0
    return min(mods) / 3.0, max(mods) * 3.0


def _anchor_points(instance: QQInstance) -> np.ndarray:
    """Roots of every Lambda times ``q^{k/2}``, ``|k| <= 2``; seeds for alternate rounds."""
    base = [w for lam in instance.lambdas for w in roots(lam) if abs(w) > 0]
    h = np.sqrt(instance.q)
    return np.array([w * h**k for w in base for k in range(-2, 3)], dtype=complex)


def solve_bethe(
    instance: QQInstance, degrees: Sequence[int], config: SolverConfig | None = None, with_solutions: bool = False
):
    """Multi-start Newton on the Bethe equations in log-coordinates of the roots.

    Returns the verified, deduplicated root sets sorted canonically.  With
    ``with_solutions=True`` the reconstructed :class:`QQSolution` objects are
    returned alongside.
    """
    cfg = config or SolverConfig()
    degrees = [int(m) for m in degrees]
    qminus_degree(instance, degrees)
    total = sum(degrees)
    if total == 0:
        empty = BetheRoots(tuple(() for _ in degrees))
        sol = complete_solution(instance, empty.q_plus())
        return [(empty, sol)] if with_solutions else [empty]
    system = _LogSystem(instance, degrees)
    rng = np.random.default_rng(cfg.seed)
    n_starts = cfg.starts_per_degree * total
    rmin, rmax = _start_radii(instance)
    out: list = []
    rejected: list[BetheRoots] = []
    quiet = 0
    # rounds of fresh starts until `quiet_rounds` consecutive rounds add nothing
    anchors = _anchor_points(instance)
    for rnd in range(cfg.max_rounds):
        if rnd % 2 == 0 or not anchors.size:
            x0 = np.log(annulus_points(n_starts * total, rng, rmin, rmax)).reshape(n_starts, total)
        else:
            pick = anchors[rng.integers(anchors.size, size=(n_starts, total))]
            spread = np.exp(rng.uniform(np.log(0.003), np.log(0.5), size=pick.shape))
            noise = spread * (rng.normal(size=pick.shape) + 1j * rng.normal(size=pick.shape))
            x0 = np.log(pick) + noise
        x, ok = _newton(system, x0, cfg)
        cands = [
            BetheRoots(tuple(tuple(np.exp(row[system._sl(i)])) for i in range(1, instance.rank + 1)))
            for row in x[ok]
        ]
        cands.sort(key=_sort_key)
        new = 0
        for cand in cands:
            if any(same_roots(cand, u, cfg.dedupe_tol) for u, _ in out):
                continue
            if any(same_roots(cand, u, cfg.dedupe_tol) for u in rejected):
                continue
            result = _validate(instance, cand, cfg)
            if result is None:
                rejected.append(cand)
            else:
                out.append(result)
                new += 1
        quiet = 0 if new else quiet + 1
        if quiet >= cfg.quiet_rounds:
            break
    if rejected:
        log.debug("rejected %d candidate root sets (collided, degenerate or unpolished)", len(rejected))
    if not out:
        log.info("no convergent start for degrees %s", degrees)
    out.sort(key=lambda rs: _sort_key(rs[0]))
    return out if with_solutions else [r for r, _ in out]


def _validate(instance: QQInstance, cand: BetheRoots, cfg: SolverConfig):
    for ws in cand.roots:
        arr = np.array(ws)
        for a in range(len(arr)):
            for b in range(a + 1, len(arr)):
                if abs(arr[a] - arr[b]) <= cfg.collision_tol * max(1.0, abs(arr[a])):
                    return None
    try:
        if max_bethe_residual(instance, cand) >= cfg.tol:
            return None
        sol = complete_solution(instance, cand.q_plus(), [list(ws) for ws in cand.roots])
        if relative_qq_residual(instance, sol) >= cfg.tol:
            return None
        if not check_nondegenerate(instance, sol).passed:
            return None
    except QoperError:
        return None
    return cand, sol


# --------------------------------------------------------------------------- brute-force oracle


def _batched_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise polynomial products for arrays (S, n) and (S, m)."""
    s, n = a.shape
    m = b.shape[1]
    out = np.zeros((s, n + m - 1), dtype=complex)
    for k in range(n):
        out[:, k : k + m] += a[:, k : k + 1] * b
    return out


def _batched_pow(a: np.ndarray, e: int) -> np.ndarray:
    out = np.ones((a.shape[0], 1), dtype=complex)
    for _ in range(e):
        out = _batched_mul(out, a)
    return out


class _CoefficientSystem:
    """QQ-system as polynomial equations in the unknown coefficients."""

    def __init__(self, instance: QQInstance, m_plus: Sequence[int]):
        self.instance = instance
        self.m_plus = list(m_plus)
        self.m_minus = qminus_degree(instance, m_plus)
        r = instance.rank
        self.slices = []
        pos = 0
        for i in range(r):
            a, b = pos, pos + self.m_plus[i]
            c = b + self.m_minus[i] + 1
            self.slices.append((slice(a, b), slice(b, c)))
            pos = c
        self.size = pos
        xi, xt = instance.xi()
        self.xi, self.xt = xi, xt
        q = instance.q
        self.qpow = [q ** np.arange(max(self.m_plus[i], self.m_minus[i]) + 1) for i in range(r)]

    def polys(self, x: np.ndarray, i: int):
        sp, sm = self.slices[i - 1]
        plus = np.concatenate([x[:, sp], np.ones((x.shape[0], 1))], axis=1)
        minus = x[:, sm]
        return plus, minus

    def _shift(self, p: np.ndarray, i: int) -> np.ndarray:
        q = self.instance.q
        return p * q ** np.arange(p.shape[1])

    def residual(self, x: np.ndarray) -> np.ndarray:
        inst, c = self.instance, self.instance.cartan
        out = []
        plus = [self.polys(x, i)[0] for i in range(1, inst.rank + 1)]
        for i in range(1, inst.rank + 1):
            qp, qm = self.polys(x, i)
            lhs = self.xt[i - 1] * _batched_mul(qm, self._shift(qp, i)) - self.xi[i - 1] * _batched_mul(
                self._shift(qm, i), qp
            )
            rhs = np.broadcast_to(inst.lam(i).coeffs, (x.shape[0], inst.lam(i).degree + 1)).astype(complex)
            for j in range(1, inst.rank + 1):
                e = -c.a(j, i)
                if j == i or e == 0:
                    continue
                base = self._shift(plus[j - 1], j) if c.after(j, i) else plus[j - 1]
                rhs = _batched_mul(rhs, _batched_pow(base, e))
            n = max(lhs.shape[1], rhs.shape[1])
            res = np.zeros((x.shape[0], n), dtype=complex)
            res[:, : lhs.shape[1]] += lhs
            res[:, : rhs.shape[1]] -= rhs
            out.append(res)
        return np.concatenate(out, axis=1)

    def jacobian(self, x: np.ndarray, h: float = 1e-7) -> np.ndarray:
        base = self.residual(x)
        cols = []
        for k in range(self.size):
            step = h * np.maximum(1.0, np.abs(x[:, k]))
            xp = x.copy()
            xp[:, k] += step
            cols.append((self.residual(xp) - base) / step[:, None])
        return np.stack(cols, axis=2), base


def solve_qq_bruteforce(
    instance: QQInstance,
    degrees: Sequence[int],
    starts: int = 400,
    seed: int = 0,
    max_iter: int = 100,
    budget: int = 8,
) -> list[QQSolution]:
    """Coefficient-space multi-start Newton on the QQ-system.

    Independent of the Bethe-root route: unknowns are the non-leading
    coefficients of every monic ``Q+^i`` and all coefficients of ``Q-^i``.
    Converged points are clustered by their ``Q+`` coefficients.
    """
    system = _CoefficientSystem(instance, degrees)
    if system.size > budget:
        raise BudgetExceededError(f"{system.size} unknown coefficients exceed the budget of {budget}")
    rng = np.random.default_rng(seed)
    s = starts
    x = np.zeros((s, system.size), dtype=complex)
    rmin, rmax = _start_radii(instance)
    for i in range(1, instance.rank + 1):
        sp, sm = system.slices[i - 1]
        m = system.m_plus[i - 1]
        if m:
            w = annulus_points(s * m, rng, rmin, rmax).reshape(s, m)
            for row in range(s):
                x[row, sp] = Poly.from_roots(w[row]).coeffs[:-1]
        x[:, sm] = rng.normal(size=(s, sm.stop - sm.start)) + 1j * rng.normal(size=(s, sm.stop - sm.start))
    alive = np.ones(s, bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            jac, res = system.jacobian(x)
            step, ok = _solve_batch(jac, -res)
            ok &= np.all(np.isfinite(step), axis=1)
            alive &= ok
            norm = np.max(np.abs(step), axis=1)
            scale = np.maximum(1.0, np.max(np.abs(x), axis=1))
            factor = np.minimum(1.0, scale / np.maximum(norm, 1e-300))
            x = np.where(alive[:, None], x + factor[:, None] * step, x)
            alive &= np.all(np.abs(x) < 1e8, axis=1)
        res = system.residual(x)
    scale = np.array([max(instance.lam(i).max_abs(), 1.0) for i in range(1, instance.rank + 1)]).max()
    good = alive & (np.max(np.abs(res), axis=1) < 1e-10 * scale * np.maximum(1.0, np.max(np.abs(x), axis=1)) ** 2)
    sols: list[QQSolution] = []
    keys: list[BetheRoots] = []
    for row in x[good]:
        qp, qm = [], []
        for i in range(1, instance.rank + 1):
            sp, sm = system.slices[i - 1]
            qp.append(Poly(np.concatenate([row[sp], [1]])))
            qm.append(Poly(row[sm]))
        try:
            key = BetheRoots.from_q_plus(qp)
        except QoperError:
            continue
        if any(same_roots(key, k, 1e-6) for k in keys):
            continue
        keys.append(key)
        sols.append(QQSolution(tuple(qp), tuple(qm)))
    order = sorted(range(len(sols)), key=lambda k: _sort_key(keys[k]))
    return [sols[k] for k in order]
