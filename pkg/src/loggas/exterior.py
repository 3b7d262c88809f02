"""Sparse exterior algebra over R^K with Berezin integration.

Basis words are 64-bit integers (bit ``k - 1`` set means ``e_k`` present),
so ``K <= 63``.  A :class:`Form` stores a sorted array of words and a
matching coefficient array; coefficients come from any
:class:`~loggas.rings.ScalarRing`.  Real-valued forms run entirely inside the
kernels of :mod:`loggas._accel`; other rings reuse the kernels for pair
enumeration and do the coefficient arithmetic in Python.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _accel
from .rings import REALS, ScalarRing

MAX_DIM = 63


class DimensionError(ValueError):
    pass


def _check_dim(K):
    if not (0 <= K <= MAX_DIM):
        raise DimensionError(f"dimension K={K} outside 0..{MAX_DIM}")


def word(generators: Iterable[int], K: int) -> int:
    """Bit word for a set of 1-based generators."""
    bits = 0
    for g in generators:
        if not 1 <= g <= K:
            raise DimensionError(f"generator e_{g} outside 1..{K}")
        bits |= 1 << (g - 1)
    return bits


def generators(bits: int) -> tuple:
    out = []
    k = 1
    while bits:
        if bits & 1:
            out.append(k)
        bits >>= 1
        k += 1
    return tuple(out)


def grade(bits: int) -> int:
    return int(bits).bit_count()


@dataclass(frozen=True)
class BasisWord:
    """A basis element ``e_{i1} ^ ... ^ e_{iL}`` with ``i1 < ... < iL``."""

    bits: int
    K: int

    def __post_init__(self):
        _check_dim(self.K)
        if self.bits < 0 or self.bits >> self.K:
            raise DimensionError(f"word {self.bits:#x} has generators beyond K={self.K}")

    @classmethod
    def of(cls, gens: Iterable[int], K: int) -> "BasisWord":
        return cls(word(gens, K), K)

    @classmethod
    def volume(cls, K: int) -> "BasisWord":
        return cls((1 << K) - 1, K)

    @property
    def grade(self) -> int:
        return grade(self.bits)

    def generators(self) -> tuple:
        return generators(self.bits)


def _permutation_sign(seq) -> int:
    """Sign of the sorting permutation of ``seq``; 0 on repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


class Form:
    """Element of the exterior algebra of R^K with coefficients in ``ring``."""

    __slots__ = ("K", "ring", "_keys", "_vals")

    def __init__(self, K: int, terms: Mapping[int, object] | None = None, ring: ScalarRing = REALS):
        _check_dim(K)
        self.K = K
        self.ring = ring
        terms = terms or {}
        keys = np.fromiter((int(k) for k in terms), dtype=np.int64, count=len(terms))
        if keys.size and (keys.min() < 0 or (keys >> K).any()):
            raise DimensionError(f"basis word outside dimension K={K}")
        if ring is REALS:
            vals = np.fromiter((float(v) for v in terms.values()), dtype=np.float64, count=len(terms))
            self._keys, self._vals = _accel.normalize_real(keys, vals)
        else:
            self._set_generic(keys, list(terms.values()))

    def _set_generic(self, keys, vals):
        ring = self.ring
        acc: dict = {}
        for k, v in zip(keys.tolist(), vals):
            v = ring.coerce(v)
            acc[k] = ring.add(acc[k], v) if k in acc else v
        items = sorted(((k, v) for k, v in acc.items() if not ring.is_zero(v)), key=lambda kv: kv[0])
        self._keys = np.array([k for k, _ in items], dtype=np.int64)
        vals_arr = np.empty(len(items), dtype=object)
        for i, (_, v) in enumerate(items):
            vals_arr[i] = v
        self._vals = vals_arr

    @classmethod
    def _raw(cls, K, ring, keys, vals):
        """Build from already-normalised (sorted, merged, nonzero) arrays."""
        f = cls.__new__(cls)
        f.K, f.ring, f._keys, f._vals = K, ring, keys, vals
        return f

    # constructors -----------------------------------------------------------

    @classmethod
    def zero(cls, K, ring=REALS):
        return cls(K, {}, ring)

    @classmethod
    def one(cls, K, ring=REALS):
        return cls(K, {0: ring.one}, ring)

    @classmethod
    def basis(cls, K, gens: Sequence[int], coeff=None, ring=REALS):
        """``coeff * e_{g1} ^ e_{g2} ^ ...`` in the order given (not necessarily sorted)."""
        coeff = ring.one if coeff is None else ring.coerce(coeff)
        s = _permutation_sign(gens)
        if s == 0:
            return cls.zero(K, ring)
        if s < 0:
            coeff = ring.neg(coeff)
        return cls(K, {word(gens, K): coeff}, ring)

    @classmethod
    def from_generators(cls, K, terms: Mapping[tuple, object], ring=REALS):
        """Sum of ``c * e_{g1} ^ ... ^ e_{gL}`` for each ``(g1, ..., gL): c``."""
        out = cls.zero(K, ring)
        for gens, c in terms.items():
            out = out + cls.basis(K, gens, c, ring)
        return out

    # accessors --------------------------------------------------------------

    @property
    def terms(self) -> dict:
        return dict(zip(self._keys.tolist(), self._vals.tolist()))

    def __len__(self):
        return int(self._keys.shape[0])

    def __iter__(self):
        return iter(self.terms.items())

    def coefficient(self, gens_or_word) -> object:
        w = gens_or_word if isinstance(gens_or_word, int) else word(gens_or_word, self.K)
        i = np.searchsorted(self._keys, w)
        if i < len(self._keys) and self._keys[i] == w:
            return self._vals[i]
        return self.ring.zero

    def grades(self) -> set:
        return set(np.bitwise_count(self._keys).tolist())

    def component(self, g: int) -> "Form":
        mask = np.bitwise_count(self._keys) == g
        return Form._raw(self.K, self.ring, self._keys[mask], self._vals[mask])

    def is_homogeneous(self, g: int | None = None) -> bool:
        gs = self.grades()
        if not gs:
            return True
        return len(gs) == 1 and (g is None or gs == {g})

    def is_zero(self) -> bool:
        return len(self) == 0

    # arithmetic -------------------------------------------------------------

    def _check(self, other: "Form"):
        if not isinstance(other, Form):
            raise TypeError(f"expected Form, got {type(other).__name__}")
        if other.K != self.K:
            raise DimensionError(f"dimension mismatch: K={self.K} vs K={other.K}")
        if other.ring != self.ring:
            raise TypeError("forms over different scalar rings")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        if self.ring is REALS:
            k, v = _accel.normalize_real(np.r_[self._keys, other._keys], np.r_[self._vals, other._vals])
            return Form._raw(self.K, REALS, k, v)
        out = Form.__new__(Form)
        out.K, out.ring = self.K, self.ring
        out._set_generic(np.r_[self._keys, other._keys], list(self._vals) + list(other._vals))
        return out

    def __neg__(self) -> "Form":
        if self.ring is REALS:
            return Form._raw(self.K, REALS, self._keys, -self._vals)
        vals = np.empty(len(self), dtype=object)
        for i, v in enumerate(self._vals):
            vals[i] = self.ring.neg(v)
        return Form._raw(self.K, self.ring, self._keys, vals)

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, c) -> "Form":
        """Multiply every coefficient by the ring element (or real) ``c``."""
        ring = self.ring
        if ring is REALS:
            c = float(c)
            if c == 0.0:
                return Form.zero(self.K)
            return Form._raw(self.K, REALS, self._keys, self._vals * c)
        c = ring.coerce(c)
        return Form(self.K, {k: ring.mul(c, v) for k, v in self.terms.items()}, ring)

    def map_coefficients(self, fn, ring: ScalarRing) -> "Form":
        """Apply ``fn`` to each coefficient, producing a form over ``ring``."""
        return Form(self.K, {k: fn(v) for k, v in self.terms.items()}, ring)

    def __xor__(self, other: "Form") -> "Form":
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        if self.K != other.K or self.ring != other.ring:
            return False
        if not np.array_equal(self._keys, other._keys):
            return False
        if self.ring is REALS:
            return bool(np.array_equal(self._vals, other._vals))
        return all(a == b for a, b in zip(self._vals, other._vals))

    __hash__ = None

    def allclose(self, other: "Form", rtol=1e-12, atol=0.0) -> bool:
        """Real forms only: same support up to negligible terms, close coefficients."""
        diff = self - other
        if diff.is_zero():
            return True
        scale = max(np.abs(self._vals).max(initial=0.0), np.abs(other._vals).max(initial=0.0))
        return bool(np.abs(diff._vals).max() <= atol + rtol * scale)

    def __repr__(self):
        if not len(self):
            return f"Form(K={self.K}, 0)"
        parts = []
        for k, v in self.terms.items():
            gens = generators(k)
            name = "^".join(f"e{g}" for g in gens) if gens else "1"
            parts.append(f"{v!r}*{name}")
        return f"Form(K={self.K}, " + " + ".join(parts) + ")"


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def wedge(a: Form, b: Form, prune_gap: int = 0) -> Form:
    """Exterior product ``a ^ b``.

    ``prune_gap > 0`` drops product terms whose grade ``g`` satisfies
    ``0 < K - g < prune_gap``; callers that only need the top grade use it
    when no remaining factor has grade below ``prune_gap``.
    """
    a._check(b)
    K = a.K
    if not len(a) or not len(b):
        return Form.zero(K, a.ring)
    if a.ring is REALS:
        k, v = _accel.wedge_real(a._keys, a._vals, b._keys, b._vals, K, prune_gap)
        return Form._raw(K, REALS, k, v)
    ring = a.ring
    ia, ib, sign, out = _accel.wedge_pairs(a._keys, b._keys, K, prune_gap)
    keys, vals = [], []
    av, bv = a._vals, b._vals
    n = out.shape[0]
    p = 0
    while p < n:
        w = out[p]
        acc = ring.zero
        while p < n and out[p] == w:
            prod = ring.mul(av[ia[p]], bv[ib[p]])
            acc = ring.add(acc, prod) if sign[p] > 0 else ring.sub(acc, prod)
            p += 1
        if not ring.is_zero(acc):
            keys.append(w)
            vals.append(acc)
    varr = np.empty(len(vals), dtype=object)
    for i, v in enumerate(vals):
        varr[i] = v
    return Form._raw(K, ring, np.array(keys, dtype=np.int64), varr)


def wedge_all(forms: Sequence[Form], K: int | None = None, ring: ScalarRing = REALS) -> Form:
    """Left-to-right wedge of a sequence (the empty product is ``1``)."""
    if not forms:
        if K is None:
            raise ValueError("need K for an empty wedge product")
        return Form.one(K, ring)
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def berezin_partial(a: Form, k: int) -> Form:
    """``d/de_k``: move ``e_k`` to the front (sign ``(-1)^(alpha-1)``) and drop it."""
    if not 1 <= k <= a.K:
        raise DimensionError(f"generator index k={k} outside 1..{a.K}")
    bit = 1 << (k - 1)
    hit = (a._keys & bit) != 0
    keys = a._keys[hit]
    below = np.bitwise_count(keys & (bit - 1)).astype(np.int64)
    new_keys = keys ^ bit
    vals = a._vals[hit]
    odd = (below & 1) == 1
    ring = a.ring
    if ring is REALS:
        vals = np.where(odd, -vals, vals)
        return Form._raw(a.K, REALS, *_accel.normalize_real(new_keys, vals))
    out = {}
    for w, v, o in zip(new_keys.tolist(), vals, odd.tolist()):
        out[w] = ring.neg(v) if o else v
    return Form(a.K, out, ring)


def berezin_full(a: Form):
    """``Integral a d(eps_vol)``: the coefficient of ``e_1 ^ ... ^ e_K``."""
    return a.coefficient((1 << a.K) - 1)


def berezin_iterated(a: Form, order: Sequence[int] | None = None):
    """Apply ``d/de_{k1}`` first, then ``d/de_{k2}``, ...; default ``1..K``.

    Returns the grade-0 coefficient of the result.
    """
    order = range(1, a.K + 1) if order is None else order
    for k in order:
        a = berezin_partial(a, k)
    return a.coefficient(0)


def _check_increasing(t: Sequence[int], K: int):
    t = tuple(int(v) for v in t)
    if any(t[i] >= t[i + 1] for i in range(len(t) - 1)):
        raise ValueError(f"map {t} is not strictly increasing")
    if t and (t[0] < 1 or t[-1] > K):
        raise ValueError(f"map {t} does not land in 1..{K}")
    return t


def _word_sign(a: int, b: int) -> int:
    """Sign of ``eps_a ^ eps_b`` (disjoint sorted words) relative to ``eps_{a|b}``."""
    inv = 0
    rest = b
    while rest:
        low = rest & -rest
        inv += (a & ~((low << 1) - 1)).bit_count()
        rest ^= low
    return -1 if inv & 1 else 1


def complement(t: Sequence[int], K: int) -> tuple:
    s = set(t)
    return tuple(k for k in range(1, K + 1) if k not in s)


def sgn_increasing(t: Sequence[int], K: int) -> int:
    """``Integral eps_t ^ eps_t' d(eps_vol)`` where ``t'`` is the complement of ``t``."""
    t = _check_increasing(t, K)
    tc = complement(t, K)
    return _word_sign(word(t, K), word(tc, K))


def sgn_map_tuple(maps: Sequence[Sequence[int]], K: int) -> int:
    """Berezin integral of the wedge of the ``eps`` blocks of each map, in order.

    Zero when two ranges overlap or when the ranges fail to cover ``1..K``
    (the product is then not of top grade).
    """
    acc = 0
    sign = 1
    for t in maps:
        t = _check_increasing(t, K)
        w = word(t, K)
        if acc & w:
            return 0
        sign *= _word_sign(acc, w)
        acc |= w
    return sign if acc == (1 << K) - 1 else 0


def exp_form(w: Form, top_only: bool = False) -> Form:
    """``e^w = sum_m w^m / m!`` for ``w`` with only even grades >= 2.

    With ``top_only`` the intermediate powers drop terms that can no longer
    reach grade ``K`` and only the top-grade component is returned.
    """
    gs = w.grades()
    if any(g == 0 or g % 2 for g in gs):
        raise ValueError(f"exp_form needs even grades >= 2, got grades {sorted(gs)}")
    K, ring = w.K, w.ring
    one = Form.one(K, ring)
    if not gs:
        return one.component(K) if top_only else one
    min_grade = min(gs)
    prune = min_grade if top_only else 0
    total = one
    power = one
    m = 0
    while True:
        m += 1
        power = wedge(power, w, prune_gap=prune)
        if power.is_zero():
            break
        if ring is REALS:
            power = Form._raw(K, REALS, power._keys, power._vals / m)
        else:
            power = power.map_coefficients(lambda c: ring.div_int(c, m), ring)
        total = total + power
    return total.component(K) if top_only else total


# ---------------------------------------------------------------------------
# Pfaffians and hyperpfaffians
# ---------------------------------------------------------------------------


class AntisymmetricMatrix:
    """Antisymmetric ``n x n`` matrix stored as its strict upper triangle."""

    __slots__ = ("n", "upper")

    def __init__(self, n: int, upper: Sequence[float]):
        upper = np.asarray(upper, dtype=np.float64).ravel()
        if upper.shape[0] != n * (n - 1) // 2:
            raise ValueError(f"need {n * (n - 1) // 2} upper entries for n={n}")
        self.n = n
        self.upper = upper

    @classmethod
    def from_dense(cls, a) -> "AntisymmetricMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square matrix")
        if not np.array_equal(a, -a.T):
            raise ValueError("matrix is not antisymmetric")
        iu = np.triu_indices(a.shape[0], 1)
        return cls(a.shape[0], a[iu])

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        a[iu] = self.upper
        return a - a.T

    def __getitem__(self, ij):
        i, j = ij
        if i == j:
            return 0.0
        if i > j:
            return -self[j, i]
        return self.upper[i * self.n - i * (i + 1) // 2 + (j - i - 1)]

    def to_form(self) -> Form:
        """The 2-form ``sum_{i<j} a_ij e_i ^ e_j`` (its hyperpfaffian is ``Pf``)."""
        iu, ju = np.triu_indices(self.n, 1)
        keys = (np.int64(1) << iu.astype(np.int64)) | (np.int64(1) << ju.astype(np.int64))
        return Form._raw(self.n, REALS, *_accel.normalize_real(keys, self.upper.copy()))


def pfaffian(a) -> float:
    """Pfaffian by expansion along the first row, memoised on the index set."""
    if not isinstance(a, AntisymmetricMatrix):
        a = AntisymmetricMatrix.from_dense(a)
    n = a.n
    if n % 2:
        raise ValueError(f"Pfaffian of odd-order ({n}) matrix")
    dense = a.to_dense()

    @lru_cache(maxsize=None)
    def pf(mask: int) -> float:
        if mask == 0:
            return 1.0
        idx = [i for i in range(n) if mask >> i & 1]
        i = idx[0]
        total = 0.0
        for pos, j in enumerate(idx[1:]):
            aij = dense[i, j]
            if aij == 0.0:
                continue
            sub = pf(mask & ~(1 << i) & ~(1 << j))
            total += -aij * sub if pos % 2 else aij * sub
        return total

    return pf((1 << n) - 1)


def hyperpfaffian(w: Form, k: int):
    """``PF(w)`` for a homogeneous ``k``-form with ``k | K``: top coefficient of ``e^w``."""
    if k <= 0 or w.K % k:
        raise ValueError(f"hyperpfaffian needs k | K (k={k}, K={w.K})")
    if not w.is_homogeneous(k):
        raise ValueError(f"form is not homogeneous of grade {k}")
    if k % 2:
        # an odd-grade form squares to zero; only K == k survives
        return berezin_full(w) if w.K == k else w.ring.zero
    return berezin_full(exp_form(w, top_only=True))


def increasing_maps(L: int, K: int):
    """All strictly increasing maps ``1..L -> 1..K`` in lexicographic order."""
    return combinations(range(1, K + 1), L)
