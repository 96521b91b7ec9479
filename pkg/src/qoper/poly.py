"""Dense complex polynomials and rational functions in one variable ``z``.

Coefficients are stored in ascending powers.  Trailing coefficients below
``TRIM_TOL * max|c|`` are dropped; the zero polynomial has degree ``-1``.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateError, InvalidInputError, VerificationError

TRIM_TOL = 1e-12
ROOT_RESIDUAL_TOL = 1e-12
POLE_SEPARATION_TOL = 1e-8
ZERO_TOL = 1e-7


def _trim(c: np.ndarray) -> np.ndarray:
    if c.size == 0:
        return c
    scale = np.max(np.abs(c))
    if scale == 0:
        return c[:0]
    keep = np.nonzero(np.abs(c) > TRIM_TOL * scale)[0]
    return c[: keep[-1] + 1]


class Poly:
    """Immutable dense polynomial with complex coefficients (ascending powers)."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[complex] = (), *, trim: bool = True):
        c = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs, dtype=complex).ravel()
        if trim:
            c = _trim(c)
        c.setflags(write=False)
        self._c = c

    # construction helpers
    @classmethod
    def const(cls, a: complex) -> "Poly":
        return cls([a])

    @classmethod
    def z(cls) -> "Poly":
        return cls([0, 1])

    @classmethod
    def one(cls) -> "Poly":
        return cls([1])

    @classmethod
    def from_roots(cls, roots: Iterable[complex], leading: complex = 1) -> "Poly":
        c = np.array([leading], dtype=complex)
        for w in roots:
            c = np.concatenate([[0], c]) - complex(w) * np.concatenate([c, [0]])
        return cls(c)

    @classmethod
    def from_json(cls, data) -> "Poly":
        try:
            return cls([complex(re, im) for re, im in data])
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad polynomial encoding: {data!r}") from exc

    # basic properties
    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return self._c.size - 1

    def is_zero(self) -> bool:
        return self._c.size == 0

    @property
    def lc(self) -> complex:
        return complex(self._c[-1]) if self._c.size else 0j

    def norm(self) -> float:
        """l1 norm of the coefficient vector."""
        return float(np.sum(np.abs(self._c)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._c))) if self._c.size else 0.0

    def is_monic(self, tol: float = 1e-12) -> bool:
        return not self.is_zero() and abs(self.lc - 1) <= tol

    def monic(self) -> "Poly":
        if self.is_zero():
            raise InvalidInputError("zero polynomial has no monic normalization")
        return Poly(self._c / self._c[-1])

    def to_json(self) -> list:
        return [[float(x.real), float(x.imag)] for x in self._c]

    def __repr__(self) -> str:
        return f"Poly({[complex(x) for x in self._c]})"

    # arithmetic
    @staticmethod
    def _coerce(other) -> "Poly":
        if isinstance(other, Poly):
            return other
        if np.isscalar(other):
            return Poly([other])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = max(self._c.size, other._c.size)
        c = np.zeros(n, dtype=complex)
        c[: self._c.size] += self._c
        c[: other._c.size] += other._c
        return Poly(c)

    __radd__ = __add__

    def __neg__(self):
        return Poly(-self._c, trim=False)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return Poly()
        return Poly(np.convolve(self._c, other._c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return self.scale(1 / complex(other))
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise InvalidInputError("negative powers of a Poly are rational functions")
        out = Poly.one()
        for _ in range(int(k)):
            out = out * self
        return out

    def scale(self, a: complex) -> "Poly":
        return Poly(self._c * complex(a))

    def __call__(self, z):
        """Horner evaluation; accepts scalars or numpy arrays."""
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for c in self._c[::-1]:
            acc = acc * z + c
        return acc if acc.ndim else complex(acc)

    def derivative(self) -> "Poly":
        if self._c.size <= 1:
            return Poly()
        return Poly(self._c[1:] * np.arange(1, self._c.size))

    def qshift(self, q: complex, k: int = 1) -> "Poly":
        """Return ``p(q^k z)``."""
        return qshift(self, q, k)

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        """Long division ``self = quot * other + rem`` with ``deg rem < deg other``."""
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        num = self._c.copy()
        d = other._c
        m = d.size - 1
        if num.size - 1 < m:
            return Poly(), self
        quot = np.zeros(num.size - m, dtype=complex)
        for k in range(num.size - 1, m - 1, -1):
            coef = num[k] / d[-1]
            quot[k - m] = coef
            num[k - m : k + 1] -= coef * d
        return Poly(quot), Poly(num[:m])

    def allclose(self, other: "Poly", tol: float = 1e-9) -> bool:
        diff = (self - other).max_abs()
        scale = max(self.max_abs(), other.max_abs(), 1e-300)
        return diff <= tol * scale

    def roots(self) -> np.ndarray:
        return roots(self)


def qshift(p: Poly, q: complex, k: int = 1) -> Poly:
    """``p(q^k z)``: coefficient ``c_m -> q^{km} c_m``."""
    q = complex(q)
    if q == 0:
        raise InvalidInputError("q must be nonzero")
    if p.is_zero():
        return p
    powers = (q ** int(k)) ** np.arange(p.coeffs.size)
    return Poly(p.coeffs * powers)


def _residual_bound(p: Poly, w: np.ndarray) -> np.ndarray:
    return ROOT_RESIDUAL_TOL * p.norm() * np.maximum(1.0, np.abs(w)) ** p.degree


def _newton_polish(p: Poly, w: np.ndarray, iters: int = 8) -> np.ndarray:
    dp = p.derivative()
    w = w.copy()
    for _ in range(iters):
        val = p(w)
        der = dp(w)
        ok = np.abs(der) > 0
        step = np.zeros_like(w)
        step[ok] = val[ok] / der[ok]
        cand = w - step
        better = np.abs(p(cand)) < np.abs(val)
        w = np.where(better, cand, w)
        if not np.any(better):
            break
    return w


def _aberth(p: Poly, iters: int = 500) -> np.ndarray:
    c = p.coeffs / p.lc
    n = p.degree
    radius = 1 + np.max(np.abs(c[:-1]))
    w = radius * 0.5 * np.exp(2j * np.pi * (np.arange(n) + 0.25) / n)
    dp = p.derivative()
    for _ in range(iters):
        ratio = p(w) / dp(w)
        diff = w[:, None] - w[None, :]
        np.fill_diagonal(diff, 1)
        inv = 1 / diff
        np.fill_diagonal(inv, 0)
        corr = ratio / (1 - ratio * inv.sum(axis=1))
        w = w - corr
        if np.all(np.abs(corr) <= 1e-15 * np.maximum(1, np.abs(w))):
            break
    return w


def roots(p: Poly) -> np.ndarray:
    """All complex roots with multiplicity.

    Companion-matrix eigenvalues polished by Newton; Aberth iteration is the
    fallback when the eigen-solver fails or leaves a residual above the bound.
    """
    if p.degree < 1:
        raise InvalidInputError("roots need a polynomial of degree >= 1")
    c = p.coeffs / p.lc
    n = p.degree
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1]
    try:
        w = np.linalg.eigvals(comp)
        if not np.all(np.isfinite(w)):
            raise np.linalg.LinAlgError("non-finite eigenvalues")
    except np.linalg.LinAlgError:
        w = _aberth(p)
    w = _newton_polish(p, w)
    if not np.all(np.abs(p(w)) <= 1e3 * _residual_bound(p, w)):
        alt = _newton_polish(p, _aberth(p))
        if np.max(np.abs(p(alt)) / _residual_bound(p, alt)) < np.max(np.abs(p(w)) / _residual_bound(p, w)):
            w = alt
    return np.array(sorted(w, key=lambda x: (round(x.real, 12), round(x.imag, 12))))


def q_distinct(u: complex, v: complex, q: complex, window: int = 20, tol: float = 1e-8) -> bool:
    """True iff ``min_{|n|<=N} |u - q^n v| / max(|u|, |q^n v|) > tol``."""
    return q_distance(u, v, q, window)[0] > tol


def q_distance(u: complex, v: complex, q: complex, window: int = 20) -> tuple[float, int]:
    """Smallest relative gap between ``u`` and ``q^n v`` and the minimizing ``n``."""
    u, v, q = complex(u), complex(v), complex(q)
    if u == 0 or v == 0 or q == 0:
        raise InvalidInputError("q-distinctness needs nonzero arguments")
    best, best_n = np.inf, 0
    for n in range(-window, window + 1):
        w = q**n * v
        d = abs(u - w) / max(abs(u), abs(w))
        if d < best:
            best, best_n = d, n
    return float(best), best_n


def q_relation(u: complex, v: complex, q: complex, window: int = 20, tol: float = 1e-8):
    """Witness ``(u, v, n)`` when ``u`` and ``v`` are not q-distinct, else ``None``.

    A (numerically) zero value is q-related only to another zero.
    """
    zu, zv = abs(u) <= ZERO_TOL, abs(v) <= ZERO_TOL
    if zu or zv:
        return (complex(u), complex(v), 0) if zu and zv else None
    d, n = q_distance(u, v, q, window)
    return (complex(u), complex(v), n) if d <= tol else None


# --------------------------------------------------------------------------- rational functions


ROOT_MATCH_TOL = 1e-10
CANCEL_TOL = 1e-10
ZERO_SUM_TOL = 1e-13


def _match_roots(a: Sequence[complex], b: Sequence[complex], tol: float = ROOT_MATCH_TOL):
    """Split two root multisets into (common, only_a, only_b) with tolerance matching."""
    rest = list(a)
    common, only_b = [], []
    for x in b:
        k = next((k for k, y in enumerate(rest) if abs(x - y) <= tol * max(1.0, abs(x))), None)
        if k is None:
            only_b.append(x)
        else:
            common.append(rest.pop(k))
    return common, rest, only_b


def _deflate_root(p: Poly, r: complex) -> Poly:
    """Quotient of ``p`` by ``(z - r)``, remainder dropped."""
    c = p.coeffs[::-1]
    out = np.empty(len(c) - 1, dtype=complex)
    acc = 0j
    for k in range(len(c) - 1):
        acc = acc * r + c[k]
        out[k] = acc
    return Poly(out[::-1])


def _vanishes_at(p: Poly, r: complex, tol: float) -> bool:
    scale = float(np.sum(np.abs(p.coeffs) * np.abs(r) ** np.arange(len(p.coeffs))))
    return abs(p(r)) <= tol * scale


class RationalFn:
    """Quotient ``num / den`` with ``den`` monic and kept as its multiset of roots.

    Tracking denominator roots lets sums use the true lcm, lets common factors
    cancel by deflation, and keeps evaluation in product form.  Arithmetic
    cancels a denominator root whenever the numerator vanishes there to
    relative precision ``CANCEL_TOL``.
    """

    __slots__ = ("num", "den_roots", "_den")

    def __init__(self, num, den=None, *, den_roots=None):
        num = num if isinstance(num, Poly) else Poly([num])
        if den_roots is not None:
            self.num, self.den_roots, self._den = num, tuple(complex(r) for r in den_roots), None
            return
        den = Poly.one() if den is None else (den if isinstance(den, Poly) else Poly([den]))
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        lc = den.lc
        self.num = num.scale(1 / lc) if lc != 1 else num
        self._den = den.scale(1 / lc) if lc != 1 else den
        self.den_roots = tuple(complex(r) for r in roots(self._den)) if den.degree >= 1 else ()

    @property
    def den(self) -> Poly:
        if self._den is None:
            self._den = Poly.from_roots(self.den_roots)
        return self._den

    @classmethod
    def from_json(cls, data) -> "RationalFn":
        return cls(Poly.from_json(data["num"]), Poly.from_json(data["den"]))

    def to_json(self) -> dict:
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    def __repr__(self):
        return f"RationalFn(num={self.num!r}, den={self.den!r})"

    @staticmethod
    def _coerce(other):
        if isinstance(other, RationalFn):
            return other
        if isinstance(other, Poly) or np.isscalar(other):
            return RationalFn(other)
        return NotImplemented

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        d = np.ones_like(z)
        for r in self.den_roots:
            d = d * (z - r)
        return self.num(z) / d

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def _reduced(self, tol: float = CANCEL_TOL) -> "RationalFn":
        if self.num.is_zero():
            return RationalFn(Poly(), den_roots=())
        num, keep = self.num, []
        for r in self.den_roots:
            if num.degree >= 1 and _vanishes_at(num, r, tol):
                num = _deflate_root(num, r)
            else:
                keep.append(r)
        return RationalFn(num, den_roots=keep)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        common, only_a, only_b = _match_roots(self.den_roots, other.den_roots)
        t1 = self.num * Poly.from_roots(only_b)
        t2 = other.num * Poly.from_roots(only_a)
        s = t1 + t2
        if s.max_abs() <= ZERO_SUM_TOL * max(t1.max_abs(), t2.max_abs()):
            return RationalFn(Poly(), den_roots=())
        return RationalFn(s, den_roots=common + only_a + only_b)._reduced()

    __radd__ = __add__

    def __neg__(self):
        return RationalFn(-self.num, den_roots=self.den_roots)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return RationalFn(Poly(), den_roots=())
        out = RationalFn(self.num * other.num, den_roots=self.den_roots + other.den_roots)
        if not self.den_roots and not other.den_roots:
            return out
        return out._reduced()

    __rmul__ = __mul__

    def inverse(self) -> "RationalFn":
        if self.is_zero():
            raise ZeroDivisionError("inverse of the zero rational function")
        lc = self.num.lc
        new_roots = roots(self.num) if self.num.degree >= 1 else ()
        return RationalFn(Poly.from_roots(self.den_roots).scale(1 / lc), den_roots=new_roots)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        k = int(k)
        base = self if k >= 0 else self.inverse()
        return RationalFn(base.num ** abs(k), den_roots=base.den_roots * abs(k))

    def qshift(self, q: complex, k: int = 1) -> "RationalFn":
        """Return ``f(q^k z)``."""
        f = q**k
        d = len(self.den_roots)
        return RationalFn(qshift(self.num, q, k).scale(f ** (-d)), den_roots=[r / f for r in self.den_roots])

    def degree_bound(self) -> int:
        return max(self.num.degree, 0) + len(self.den_roots)

    def cancel(self, tol: float = 1e-7) -> "RationalFn":
        """Drop denominator roots where the numerator vanishes to relative ``tol``."""
        return self._reduced(tol)

    def as_poly(self, tol: float = 1e-9) -> Poly:
        """Exact polynomial quotient, or ``ValueError`` if a remainder survives."""
        num = self.num
        for r in self.den_roots:
            if num.degree < 1 or not _vanishes_at(num, r, tol):
                raise ValueError("rational function is not a polynomial")
            num = _deflate_root(num, r)
        return num


def as_rational(x) -> RationalFn:
    return x if isinstance(x, RationalFn) else RationalFn(x)


# --------------------------------------------------------------------------- sampling


def annulus_points(n: int, rng: np.random.Generator, rmin: float = 0.5, rmax: float = 2.0) -> np.ndarray:
    """``n`` points, log-uniform radius in ``[rmin, rmax]``, uniform angle."""
    r = np.exp(rng.uniform(np.log(rmin), np.log(rmax), n))
    t = rng.uniform(0, 2 * np.pi, n)
    return r * np.exp(1j * t)


def draw_samples(
    n: int,
    seed: int = 0,
    ok: Callable[[complex], bool] | None = None,
    rmin: float = 0.5,
    rmax: float = 2.0,
    max_tries: int = 50,
) -> np.ndarray:
    """Deterministic sample points; points rejected by ``ok`` are redrawn (bounded)."""
    rng = np.random.default_rng(seed)
    out = []
    tries = 0
    while len(out) < n:
        if tries > max_tries * max(n, 1):
            raise VerificationError("could not draw sample points away from poles")
        z = complex(annulus_points(1, rng, rmin, rmax)[0])
        tries += 1
        if ok is None or ok(z):
            out.append(z)
    return np.array(out)


def away_from(points: Sequence[complex], margin: float = 1e-3) -> Callable[[complex], bool]:
    pts = np.asarray(list(points), dtype=complex)

    def ok(z: complex) -> bool:
        return pts.size == 0 or bool(np.min(np.abs(pts - z)) > margin * max(1.0, abs(z)))

    return ok


def rational_equal(f: RationalFn, g: RationalFn, seed: int = 0, tol: float = 1e-9) -> bool:
    """Sampling identity test at ``deg_num + deg_den + 7`` points (both sides)."""
    n = f.degree_bound() + g.degree_bound() + 7
    poles = []
    for h in (f, g):
        poles.extend(h.den_roots)
    pts = draw_samples(n, seed, away_from(poles, 1e-4))
    a, b = f(pts), g(pts)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return bool(np.max(np.abs(a - b)) <= tol * scale)


# --------------------------------------------------------------------------- partial fractions


def _flatten_poles(poles) -> tuple[list[complex], Callable]:
    if isinstance(poles, Mapping):
        keys = list(poles)
        sizes = [len(poles[k]) for k in keys]
        flat = [complex(p) for k in keys for p in poles[k]]

        def unflatten(vals):
            out, pos = {}, 0
            for k, s in zip(keys, sizes):
                out[k] = list(vals[pos : pos + s])
                pos += s
            return out

        return flat, unflatten
    flat = [complex(p) for p in poles]
    return flat, list


def partial_fractions_simple(f: RationalFn, poles=None, check: bool = True):
    """Split ``f = poly_part + sum_p res_p / (z - p)`` for simple poles.

    ``poles`` may be a sequence or a mapping ``label -> sequence``; residues come
    back in the same shape.  If omitted the poles are the roots of ``f.den``.
    Residues are ``num(p) / den'(p)``.
    """
    if poles is None:
        poles = list(f.den_roots)
    flat, unflatten = _flatten_poles(poles)
    if len(flat) != f.den.degree:
        raise DegenerateError(f"{len(flat)} poles supplied for a denominator of degree {f.den.degree}")
    for a, b in itertools.combinations(flat, 2):
        if abs(a - b) <= POLE_SEPARATION_TOL * max(1.0, abs(a), abs(b)):
            raise DegenerateError(f"clustered poles {a} and {b}")
    dden = f.den.derivative()
    quot, _ = f.num.divmod(f.den)
    res = [complex(f.num(p) / dden(p)) for p in flat]
    if check and flat:
        n = 2 * max(f.num.degree, f.den.degree, 0) + 7
        pts = draw_samples(n, 12345, away_from(flat, 1e-3))
        recon = quot(pts) + sum(r / (pts - p) for r, p in zip(res, flat))
        exact = f(pts)
        scale = max(np.max(np.abs(exact)), 1e-300)
        err = np.max(np.abs(recon - exact)) / scale
        if err > 1e-9:
            raise VerificationError(f"partial fraction reconstruction error {err:.2e}")
    return quot, unflatten(res)


def residue(f: RationalFn, p: complex, radius: float | None = None, nodes: int = 64) -> complex:
    """Residue of ``f`` at ``p`` by the trapezoid rule on a small circle.

    The default radius is a quarter of the distance from ``p`` to the nearest
    other pole, so the result does not depend on how ``f.den`` is factored.
    """
    p = complex(p)
    if radius is None:
        others = [w for w in f.den_roots if abs(w - p) > 1e-5 * max(1.0, abs(p))]
        gap = min((abs(w - p) for w in others), default=max(1.0, abs(p)))
        radius = 0.25 * min(gap, max(1.0, abs(p)))
    t = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    return complex(np.mean(radius * t * f(p + radius * t)))
