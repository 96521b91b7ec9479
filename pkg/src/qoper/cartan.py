"""Cartan data, twists and Weyl-group bookkeeping.

Conventions: ``a[i][j] = <alpha_j, alpha_i^vee>`` (Kac convention), simple roots
numbered as in Bourbaki.  Node labels passed to public functions are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError

_MIN_RANK = {"A": 1, "B": 2, "C": 2, "D": 3}
_EXCEPTIONAL = {"E": (6, 7, 8), "F": (4,), "G": (2,)}

ROOT_OF_UNITY_TOL = 1e-9
ROOT_OF_UNITY_MAX_ORDER = 64


def _build_matrix(lie_type: str, r: int) -> np.ndarray:
    a = 2 * np.eye(r, dtype=int)
    if lie_type in "ABC":
        for i in range(r - 1):
            a[i, i + 1] = a[i + 1, i] = -1
        if lie_type == "B":
            a[r - 1, r - 2] = -2  # alpha_r short
        elif lie_type == "C":
            a[r - 2, r - 1] = -2  # alpha_r long
    elif lie_type == "D":
        for i in range(r - 2):
            a[i, i + 1] = a[i + 1, i] = -1
        a[r - 3, r - 1] = a[r - 1, r - 3] = -1
    elif lie_type == "E":
        # Bourbaki: 1-3-4-5-6(-7-8), with 2 attached to 4.
        edges = [(1, 3), (3, 4), (4, 5), (5, 6), (2, 4)]
        edges += [(6, 7)] if r >= 7 else []
        edges += [(7, 8)] if r >= 8 else []
        for i, j in edges:
            a[i - 1, j - 1] = a[j - 1, i - 1] = -1
    elif lie_type == "F":
        a[0, 1] = a[1, 0] = -1
        a[2, 3] = a[3, 2] = -1
        a[1, 2] = -1
        a[2, 1] = -2  # alpha_1, alpha_2 long
    elif lie_type == "G":
        a[0, 1] = -3  # alpha_1 short
        a[1, 0] = -1
    return a


@dataclass(frozen=True)
class CartanData:
    """Lie type, Cartan matrix and a Coxeter ordering of the simple roots."""

    lie_type: str
    rank: int
    cartan: tuple
    ordering: tuple

    def __post_init__(self):
        r = self.rank
        a = np.asarray(self.cartan, dtype=int)
        if a.shape != (r, r):
            raise InvalidInputError("cartan matrix has wrong shape")
        if np.any(np.diag(a) != 2):
            raise InvalidInputError("diagonal entries must equal 2")
        off = a - 2 * np.eye(r, dtype=int)
        if np.any(off > 0) or np.any((off == 0) != (off.T == 0)):
            raise InvalidInputError("off-diagonal entries must be <= 0 with symmetric zero pattern")
        if sorted(self.ordering) != list(range(1, r + 1)):
            raise InvalidInputError(f"ordering {self.ordering} is not a permutation of 1..{r}")

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.cartan, dtype=int)

    def a(self, i: int, j: int) -> int:
        """Entry a_ij for 1-based labels."""
        return int(self.cartan[i - 1][j - 1])

    def position(self, i: int) -> int:
        """Position of node ``i`` inside the ordering."""
        return self.ordering.index(i)

    def after(self, j: int, i: int) -> bool:
        """True when node ``j`` comes later than node ``i`` in the ordering."""
        return self.position(j) > self.position(i)

    def neighbours(self, i: int) -> list[int]:
        return [j for j in range(1, self.rank + 1) if j != i and self.a(j, i) != 0]

    def with_ordering(self, ordering: Sequence[int]) -> "CartanData":
        return CartanData(self.lie_type, self.rank, self.cartan, tuple(int(x) for x in ordering))

    def to_json(self) -> dict:
        return {"lie_type": self.lie_type, "rank": self.rank, "ordering": list(self.ordering)}


def cartan_matrix(lie_type: str, rank: int, ordering: Sequence[int] | None = None) -> CartanData:
    """Return :class:`CartanData` for a simple type, default ordering ``(1..r)``.

    >>> cartan_matrix("A", 2).cartan
    ((2, -1), (-1, 2))
    """
    t = str(lie_type).upper()
    r = int(rank)
    if t in _MIN_RANK:
        if r < _MIN_RANK[t]:
            raise InvalidInputError(f"type {t} needs rank >= {_MIN_RANK[t]}")
    elif t in _EXCEPTIONAL:
        if r not in _EXCEPTIONAL[t]:
            raise InvalidInputError(f"no simple type {t}{r}")
    else:
        raise InvalidInputError(f"unknown Lie type {lie_type!r}")
    a = _build_matrix(t, r)
    order = tuple(range(1, r + 1)) if ordering is None else tuple(int(x) for x in ordering)
    return CartanData(t, r, tuple(tuple(int(x) for x in row) for row in a), order)


@dataclass(frozen=True)
class Twist:
    """Twist element ``Z = prod zeta_i^{alpha_i^vee}``."""

    zetas: tuple

    def __post_init__(self):
        z = tuple(complex(x) for x in self.zetas)
        if any(x == 0 for x in z):
            raise InvalidInputError("twist parameters must be nonzero")
        object.__setattr__(self, "zetas", z)

    def __len__(self):
        return len(self.zetas)

    def __getitem__(self, i: int) -> complex:
        """1-based access."""
        return self.zetas[i - 1]


def _check_index(i: int, cartan: CartanData):
    if not 1 <= i <= cartan.rank:
        raise InvalidInputError(f"node index {i} outside 1..{cartan.rank}")


def weyl_reflect_twist(twist: Twist, i: int, cartan: CartanData) -> Twist:
    """Twist of ``s_i(Z)``: ``zeta_i -> zeta_i^{-1} prod_{j != i} zeta_j^{-a_ji}``."""
    _check_index(i, cartan)
    z = list(twist.zetas)
    new = 1 / z[i - 1]
    for j in range(1, cartan.rank + 1):
        if j != i:
            new *= z[j - 1] ** (-cartan.a(j, i))
    z[i - 1] = new
    return Twist(tuple(z))


def reflect_coroot_exponents(exponents: np.ndarray, i: int, cartan: CartanData) -> np.ndarray:
    """Action of ``s_i`` on coordinates in the coroot basis.

    Independent integer route used to cross-check twist reflections via
    ``s_i(alpha_j^vee) = alpha_j^vee - a_ji alpha_i^vee``.
    """
    e = np.array(exponents, dtype=complex)
    out = e.copy()
    out[i - 1] = -e[i - 1] - sum(cartan.a(j, i) * e[j - 1] for j in range(1, cartan.rank + 1) if j != i)
    return out


def check_q(q: complex) -> None:
    """Reject ``q = 0`` and (numerical) roots of unity."""
    q = complex(q)
    if q == 0:
        raise InvalidInputError("q must be nonzero")
    for n in range(1, ROOT_OF_UNITY_MAX_ORDER + 1):
        if abs(q**n - 1) < ROOT_OF_UNITY_TOL:
            raise InvalidInputError(f"q is numerically a root of unity (q^{n} = 1)")


def simple_root_values(twist: Twist, cartan: CartanData) -> list[complex]:
    """``alpha_j(Z) = prod_i zeta_i^{a_ij}`` for each node ``j``."""
    r = cartan.rank
    out = []
    for j in range(1, r + 1):
        v = 1 + 0j
        for i in range(1, r + 1):
            v *= twist[i] ** cartan.a(i, j)
        out.append(v)
    return out


@dataclass(frozen=True)
class TwistCheck:
    node: int
    value: complex
    nearest_power: int
    distance: float
    passed: bool


def check_twist_assumption(
    twist: Twist, q: complex, cartan: CartanData, window: int = 32, tol: float = 1e-9
) -> list[TwistCheck]:
    """Check ``prod_i zeta_i^{a_ij}`` stays off ``q^Z`` for ``|n| <= window``.

    Distance is measured relatively, ``|x - q^n| / max(|x|, |q^n|)``.
    """
    if window < 1:
        raise InvalidInputError("window must be >= 1")
    check_q(q)
    q = complex(q)
    report = []
    for j, x in enumerate(simple_root_values(twist, cartan), start=1):
        best_n, best = 0, np.inf
        for n in range(-window, window + 1):
            qn = q**n
            d = abs(x - qn) / max(abs(x), abs(qn))
            if d < best:
                best_n, best = n, d
        report.append(TwistCheck(j, x, best_n, float(best), bool(best > tol)))
    return report


def compute_xi(twist: Twist, cartan: CartanData) -> tuple[list[complex], list[complex]]:
    """Return ``(xi, xi_tilde)`` lists in node order.

    ``xi~_i = zeta_i prod_{j>i} zeta_j^{a_ji}``, ``xi_i = zeta_i^{-1} prod_{j<i} zeta_j^{-a_ji}``,
    with ``<`` and ``>`` taken in the ordering.
    """
    r = cartan.rank
    xi, xt = [], []
    for i in range(1, r + 1):
        t = twist[i]
        s = 1 / twist[i]
        for j in range(1, r + 1):
            if j == i:
                continue
            if cartan.after(j, i):
                t *= twist[j] ** cartan.a(j, i)
            else:
                s *= twist[j] ** (-cartan.a(j, i))
        xi.append(s)
        xt.append(t)
    return xi, xt


def root_action_matrix(i: int, cartan: CartanData) -> np.ndarray:
    """Integer matrix of ``s_i`` on the simple-root basis: ``s_i(alpha_j) = alpha_j - a_ij alpha_i``."""
    r = cartan.rank
    m = np.eye(r, dtype=int)
    for j in range(r):
        m[i - 1, j] -= cartan.matrix[i - 1, j]
    return m


def positive_roots(cartan: CartanData) -> list[tuple]:
    """Positive roots in simple-root coordinates, by closure under reflections."""
    r = cartan.rank
    simple = [tuple(int(k == j) for k in range(r)) for j in range(r)]
    mats = [root_action_matrix(i, cartan) for i in range(1, r + 1)]
    seen = set(simple)
    frontier = list(simple)
    while frontier:
        nxt = []
        for root in frontier:
            v = np.array(root)
            for m in mats:
                w = tuple(int(x) for x in m @ v)
                if all(x >= 0 for x in w) and w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return sorted(seen, key=lambda x: (sum(x), x))


def word_matrix(word: Sequence[int], cartan: CartanData) -> np.ndarray:
    """Matrix of ``s_{w1} s_{w2} ... s_{wk}`` on the simple-root basis."""
    m = np.eye(cartan.rank, dtype=int)
    for i in word:
        _check_index(i, cartan)
        m = m @ root_action_matrix(i, cartan)
    return m


def is_reduced(word: Sequence[int], cartan: CartanData) -> bool:
    """A word is reduced iff each letter is a right ascent of the preceding prefix."""
    m = np.eye(cartan.rank, dtype=int)
    for i in word:
        _check_index(i, cartan)
        if np.any(m[:, i - 1] < 0):
            return False
        m = m @ root_action_matrix(i, cartan)
    return True


def reduced_word_w0(cartan: CartanData) -> list[int]:
    """Lexicographically least reduced word for the longest Weyl element.

    At each step the smallest right ascent ``s_i`` of the current prefix ``w``
    (``w(alpha_i) > 0``) is appended; every reduced prefix extends to ``w0``.
    """
    r = cartan.rank
    length = len(positive_roots(cartan))
    m = np.eye(r, dtype=int)
    word = []
    for _ in range(length):
        for i in range(1, r + 1):
            if np.all(m[:, i - 1] >= 0):
                word.append(i)
                m = m @ root_action_matrix(i, cartan)
                break
    return word


def weyl_word_twist(twist: Twist, word: Sequence[int], cartan: CartanData) -> Twist:
    """Twist of ``w(Z)`` for ``w = s_{w1} ... s_{wk}`` (rightmost letter acts first)."""
    for i in reversed(list(word)):
        twist = weyl_reflect_twist(twist, i, cartan)
    return twist


def dynkin_distances(cartan: CartanData, base: int = 1) -> list[int]:
    """Graph distances from ``base`` in the Dynkin diagram (breadth first)."""
    r = cartan.rank
    dist = [-1] * r
    dist[base - 1] = 0
    queue = [base]
    while queue:
        i = queue.pop(0)
        for j in cartan.neighbours(i):
            if dist[j - 1] < 0:
                dist[j - 1] = dist[i - 1] + 1
                queue.append(j)
    if min(dist) < 0:
        raise InvalidInputError("Dynkin diagram is disconnected")
    return dist
