"""Monic polynomial families, modified derivatives and Wronskians.

Polynomials are coefficient vectors indexed by power.  The modified
derivative ``D^l = (1/l!) d^l/dx^l`` maps ``c_m x^m`` to
``binom(m, l) c_m x^(m-l)``, so Wronskian entries stay integer-weighted.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from itertools import permutations
from math import comb
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

SYMBOLIC_MAX_L = 4


class Polynomial:
    """Real polynomial ``sum_m coeffs[m] x^m`` (trailing zeros trimmed)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[float]):
        c = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
        nz = np.flatnonzero(c)
        self.coeffs = c[: nz[-1] + 1].copy() if nz.size else np.zeros(1)

    @property
    def degree(self) -> int:
        """Highest power with a nonzero coefficient (``-1`` for the zero polynomial)."""
        return len(self.coeffs) - 1 if self.coeffs.any() else -1

    @property
    def leading(self) -> float:
        return float(self.coeffs[-1])

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)

    def __add__(self, other):
        return Polynomial(npoly.polyadd(self.coeffs, other.coeffs))

    def __sub__(self, other):
        return Polynomial(npoly.polysub(self.coeffs, other.coeffs))

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(npoly.polymul(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Polynomial) and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"


def modified_derivative(p: Polynomial, order: int) -> Polynomial:
    """``D^order p``: the ``order``-th derivative divided by ``order!``."""
    if order < 0:
        raise ValueError("derivative order must be >= 0")
    c = p.coeffs
    if order >= len(c):
        return Polynomial([0.0])
    weights = np.array([comb(m, order) for m in range(order, len(c))], dtype=np.float64)
    return Polynomial(weights * c[order:])


def _monomial(n: int) -> Polynomial:
    c = np.zeros(n)
    c[n - 1] = 1.0
    return Polynomial(c)


def _hermite_monic_list(count: int) -> list:
    # monic orthogonal for e^{-x^2}: h_{k+1} = x h_k - (k/2) h_{k-1}
    out = [Polynomial([1.0]), Polynomial([0.0, 1.0])]
    x = Polynomial([0.0, 1.0])
    while len(out) < count:
        k = len(out) - 1
        out.append(x * out[k] - out[k - 1] * (k / 2.0))
    return out[:count]


class CompleteFamily:
    """Sequence ``p_1, p_2, ...`` of monic polynomials with ``deg p_n = n - 1``.

    Members are generated on demand and memoised; the cache is guarded by a
    lock so concurrent readers see a consistent list.
    """

    def __init__(self, name: str, generator: Callable[[int], list], members: Sequence[Polynomial] | None = None):
        self.name = name
        self._generator = generator
        self._members: list = list(members or [])
        self._lock = threading.Lock()

    @classmethod
    def monomial(cls) -> "CompleteFamily":
        return cls("monomial", lambda count: [_monomial(n) for n in range(1, count + 1)])

    @classmethod
    def hermite_monic(cls) -> "CompleteFamily":
        return cls("hermite-monic", _hermite_monic_list)

    @classmethod
    def custom(cls, polys: Sequence[Sequence[float] | Polynomial], name: str = "custom") -> "CompleteFamily":
        members = [p if isinstance(p, Polynomial) else Polynomial(p) for p in polys]
        for n, p in enumerate(members, start=1):
            _check_member(p, n)
        tag = f"{name}:" + ";".join(",".join(repr(float(c)) for c in p.coeffs) for p in members)

        def gen(count):
            if count > len(members):
                raise ValueError(f"custom family has only {len(members)} members, {count} requested")
            return members[:count]

        return cls(tag, gen, members)

    @classmethod
    def by_name(cls, name: str) -> "CompleteFamily":
        if name == "monomial":
            return cls.monomial()
        if name in ("hermite-monic", "hermite"):
            return cls.hermite_monic()
        raise ValueError(f"unknown polynomial family {name!r}")

    def members(self, count: int) -> list:
        if len(self._members) < count:
            with self._lock:
                if len(self._members) < count:
                    fresh = self._generator(count)
                    for n, p in enumerate(fresh, start=1):
                        _check_member(p, n)
                    self._members = fresh
        return self._members[:count]

    def __getitem__(self, n: int) -> Polynomial:
        """``p_n`` (1-based)."""
        if n < 1:
            raise IndexError("families are indexed from 1")
        return self.members(n)[n - 1]

    def __eq__(self, other):
        return isinstance(other, CompleteFamily) and other.name == self.name

    def __hash__(self):
        return hash(("CompleteFamily", self.name))

    def __repr__(self):
        return f"CompleteFamily({self.name.split(':')[0]!r})"


def _check_member(p: Polynomial, n: int):
    if p.degree != n - 1 or p.leading != 1.0:
        raise ValueError(f"p_{n} must be monic of degree {n - 1}, got {p}")


@dataclass(frozen=True)
class IncreasingMap:
    """Strictly increasing ``t: {1..L} -> {1..K}`` stored as its values."""

    values: tuple

    def __post_init__(self):
        v = tuple(int(x) for x in self.values)
        object.__setattr__(self, "values", v)
        if any(v[i] >= v[i + 1] for i in range(len(v) - 1)):
            raise ValueError(f"{v} is not strictly increasing")
        if v and v[0] < 1:
            raise ValueError(f"{v} has values below 1")

    def check(self, K: int) -> "IncreasingMap":
        if self.values and self.values[-1] > K:
            raise ValueError(f"{self.values} does not land in 1..{K}")
        return self

    @property
    def L(self) -> int:
        return len(self.values)

    def complement(self, K: int) -> "IncreasingMap":
        self.check(K)
        s = set(self.values)
        return IncreasingMap(tuple(k for k in range(1, K + 1) if k not in s))

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _as_map(t) -> tuple:
    return t.values if isinstance(t, IncreasingMap) else IncreasingMap(tuple(t)).values


def wronskian_matrix_polys(fam: CompleteFamily, t) -> list:
    """Rows ``[D^(l-1) p_t(k)]_{l=1..L}`` for each ``k``."""
    t = _as_map(t)
    L = len(t)
    return [[modified_derivative(fam[n], l) for l in range(L)] for n in t]


def wronskian_polynomial(fam: CompleteFamily, t) -> Polynomial:
    """``Wr(P_t; x)`` as a polynomial, by Leibniz expansion (small ``L`` only)."""
    rows = wronskian_matrix_polys(fam, t)
    L = len(rows)
    if L == 0:
        return Polynomial([1.0])
    total = np.zeros(1)
    for perm in permutations(range(L)):
        inv = sum(1 for i in range(L) for j in range(i + 1, L) if perm[i] > perm[j])
        term = np.array([1.0])
        for k in range(L):
            term = npoly.polymul(term, rows[k][perm[k]].coeffs)
        total = npoly.polyadd(total, -term if inv % 2 else term)
    return Polynomial(total)


def derivative_table(fam: CompleteFamily, K: int, L: int, x) -> np.ndarray:
    """``tab[n-1, l, i] = D^l p_n(x_i)`` for ``n <= K``, ``l < L``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    tab = np.empty((K, L, x.shape[0]))
    for n in range(1, K + 1):
        p = fam[n]
        for l in range(L):
            tab[n - 1, l] = modified_derivative(p, l)(x)
    return tab


def wronskian_degree(t) -> int:
    """Degree bound of ``Wr(P_t)``: ``sum(t(k) - 1) - L(L-1)/2``."""
    t = _as_map(t)
    L = len(t)
    return sum(v - 1 for v in t) - L * (L - 1) // 2


def wronskian(fam: CompleteFamily, t, x):
    """Evaluate ``Wr(P_t; x)`` (scalar or array ``x``).

    Exact polynomial expansion for ``L <= 4``; a stacked numeric
    determinant per point otherwise.
    """
    t = _as_map(t)
    if len(t) <= SYMBOLIC_MAX_L:
        return wronskian_polynomial(fam, t)(x)
    scalar = np.ndim(x) == 0
    tab = derivative_table(fam, max(t), len(t), x)
    mats = np.transpose(tab[np.array(t) - 1], (2, 0, 1))
    vals = np.linalg.det(mats)
    return float(vals[0]) if scalar else vals


def wronskian_batch(fam: CompleteFamily, maps: Sequence, x, K: int) -> np.ndarray:
    """``out[i, j] = Wr(P_{maps[i]}; x_j)`` for maps of a common length."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    maps = [_as_map(t) for t in maps]
    if not maps:
        return np.zeros((0, x.shape[0]))
    L = len(maps[0])
    if L <= SYMBOLIC_MAX_L:
        return np.array([wronskian_polynomial(fam, t)(x) for t in maps])
    tab = derivative_table(fam, K, L, x)
    idx = np.array(maps) - 1
    mats = np.transpose(tab[idx], (0, 3, 1, 2))
    return np.linalg.det(mats)


def confluent_vandermonde(M: Sequence[int], q: Sequence[int], b: int, fam: CompleteFamily, points) -> np.ndarray:
    """``K x K`` confluent Vandermonde matrix for population ``M``.

    ``points[j]`` holds the ``M[j]`` locations of species ``j``.  Column
    blocks are ``[D^(l-1) p_n(x)]`` for ``l = 1..L_j``, species-major then
    particle-major; rows run over ``n = 1..K``.
    """
    if len(points) != len(M) or len(q) != len(M):
        raise ValueError("need one point list and one charge per species")
    L = [b * qj for qj in q]
    K = sum(m * l for m, l in zip(M, L))
    cols = []
    for Mj, Lj, pts in zip(M, L, points):
        pts = np.atleast_1d(np.asarray(pts, dtype=np.float64))
        if pts.shape[0] != Mj:
            raise ValueError(f"species with M={Mj} got {pts.shape[0]} points")
        if Mj == 0:
            continue
        tab = derivative_table(fam, K, Lj, pts)
        for m in range(Mj):
            for l in range(Lj):
                cols.append(tab[:, l, m])
    return np.column_stack(cols) if cols else np.zeros((0, 0))


def interaction_product(M, q, b, points) -> float:
    """Signed double product that ``det V^M`` equals (confluent Vandermonde identity)."""
    L = [b * qj for qj in q]
    pts = [np.atleast_1d(np.asarray(p, dtype=np.float64)) for p in points]
    out = 1.0
    for j in range(len(M)):
        x = pts[j]
        for m in range(M[j]):
            for n in range(m + 1, M[j]):
                out *= (x[n] - x[m]) ** (L[j] ** 2)
    for j in range(len(M)):
        for k in range(j + 1, len(M)):
            for m in range(M[j]):
                for n in range(M[k]):
                    out *= (pts[k][n] - pts[j][m]) ** (L[j] * L[k])
    return out
