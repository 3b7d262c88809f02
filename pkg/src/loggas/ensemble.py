"""Partition functions of multicomponent log-gases as Berezin integrals.

For ``beta = b^2`` and charges ``q_j`` each species contributes a form
``omega_j`` on ``R^K`` (``K = bN``, ``L_j = b q_j``):

* ``L_j`` even: ``omega_j = sum_t c_t eps_t`` with
  ``c_t = int e^{-beta q_j U} Wr(P_t; x) dx`` over increasing maps ``t``;
* ``L_j`` odd: ``omega_j = sum_{t,u} A_tu eps_t ^ eps_u`` with
  ``A_tu = 1/2 int int w(x) w(y) Wr(P_t; x) Wr(P_u; y) sgn(y - x)``.

The grand canonical partition function is the top-grade coefficient of
``exp(sum_j zeta_j omega_j)``, a polynomial in the fugacities whose ``z^M``
coefficient is the canonical ``Z_M``.  An odd species enters through
``zeta_j = z_j^2`` (each ``omega_j`` term places two particles), so the
multidegree counts particles.  The Laplace-expansion path computes the same
``Z_M`` by summing over map tuples directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb, factorial, prod
from typing import Optional, Sequence

import numpy as np

from . import _accel
from .cache import CoefficientCache, coefficient_key
from .exterior import (
    Form,
    _word_sign,
    berezin_full,
    exp_form,
    pfaffian,
    wedge,
    word,
)
from .poly import CompleteFamily, wronskian_batch, wronskian_degree
from .quadrature import (
    DEFAULT_SCHEME,
    Potential,
    QuadratureError,
    QuadratureScheme,
    WeightedMeasure,
    integrate_multidim,
    integrate_weighted_batch,
    sgn_kernel_matrix,
)
from .rings import MonomialAlgebra, PolynomialRing, REALS, SparsePolynomial

LAPLACE_TUPLE_CAP = 2_000_000


class SpecError(ValueError):
    """An ensemble violates a hypothesis of the Berezin representation."""


@dataclass(frozen=True)
class EnsembleSpec:
    """``beta = b^2``, distinct positive integer charges ``q``, total charge ``N``."""

    b: int
    q: tuple
    N: int
    potential: Potential = field(default_factory=Potential)
    family: CompleteFamily = field(default_factory=CompleteFamily.monomial)
    scheme: QuadratureScheme = DEFAULT_SCHEME

    def __post_init__(self):
        q = tuple(int(v) for v in self.q)
        object.__setattr__(self, "q", q)
        if int(self.b) != self.b or self.b < 1:
            raise SpecError(f"b must be a positive integer (beta = b^2), got {self.b!r}")
        if not q or any(v < 1 for v in q):
            raise SpecError(f"charges must be positive integers, got {q}")
        if len(set(q)) != len(q):
            raise SpecError(f"charges must be pairwise distinct, got {q}")
        if self.N < 0:
            raise SpecError("total charge N must be >= 0")
        if self.K % 2:
            raise SpecError(f"K = bN = {self.K} is odd; the representation needs K even")
        if self.K > 63:
            raise SpecError(f"K = {self.K} exceeds the supported dimension 63")
        odd = [j for j, L in enumerate(self.L) if L % 2]
        if len(odd) > 1:
            raise SpecError(
                f"L_j = b q_j is odd for species {odd}; the representation allows at most one odd L_j"
            )

    @property
    def beta(self) -> int:
        return self.b * self.b

    @property
    def K(self) -> int:
        return self.b * self.N

    @property
    def L(self) -> tuple:
        return tuple(self.b * v for v in self.q)

    @property
    def J(self) -> int:
        return len(self.q)

    @property
    def odd_species(self) -> Optional[int]:
        for j, L in enumerate(self.L):
            if L % 2:
                return j
        return None

    @property
    def species_order(self) -> tuple:
        """Internal species order: the odd species (if any) first."""
        odd = self.odd_species
        if odd is None:
            return tuple(range(self.J))
        return (odd,) + tuple(j for j in range(self.J) if j != odd)

    def measure(self, j: int) -> WeightedMeasure:
        return WeightedMeasure(self.potential, float(self.beta * self.q[j]))

    def check_population(self, M) -> tuple:
        M = tuple(int(v) for v in M)
        if len(M) != self.J or any(v < 0 for v in M):
            raise SpecError(f"population {M} must have {self.J} nonnegative entries")
        if sum(m * qj for m, qj in zip(M, self.q)) != self.N:
            raise SpecError(f"population {M} has total charge != N = {self.N}")
        return M


def admissible_populations(spec: EnsembleSpec) -> list:
    """All ``M >= 0`` with ``M . q = N``, in decreasing lexicographic order."""
    out = []

    def rec(j, rest, prefix):
        if j == spec.J - 1:
            if rest % spec.q[j] == 0:
                out.append(tuple(prefix + [rest // spec.q[j]]))
            return
        for m in range(rest // spec.q[j], -1, -1):
            rec(j + 1, rest - m * spec.q[j], prefix + [m])

    rec(0, spec.N, [])
    return out


# ---------------------------------------------------------------------------
# fugacity polynomials
# ---------------------------------------------------------------------------


class FugacityMonomials(MonomialAlgebra):
    """Exponent vectors of ``z``, truncated once ``sum weight_j deg_j > N``."""

    def __init__(self, weights: Sequence[int], cap: int):
        self.weights = tuple(int(w) for w in weights)
        self.cap = int(cap)
        self.one_key = (0,) * len(self.weights)

    def multiply(self, a, b):
        key = tuple(x + y for x, y in zip(a, b))
        if sum(w * d for w, d in zip(self.weights, key)) > self.cap:
            return None
        return key

    def sort_key(self, key):
        return tuple(-d for d in key)

    def format_key(self, key):
        parts = [f"z{j + 1}^{d}" if d > 1 else f"z{j + 1}" for j, d in enumerate(key) if d]
        return "*".join(parts) or "1"

    def __eq__(self, other):
        return isinstance(other, FugacityMonomials) and (self.weights, self.cap) == (other.weights, other.cap)

    def __hash__(self):
        return hash(("FugacityMonomials", self.weights, self.cap))


class FugacityPolynomial(SparsePolynomial):
    """Polynomial in ``z_1..z_J``; keys are exponent tuples (multidegrees)."""

    __slots__ = ()

    def __call__(self, z) -> float:
        z = np.asarray(z, dtype=np.float64)
        return float(sum(c * np.prod(z ** np.array(k)) for k, c in self.terms.items()))

    def multidegrees(self) -> list:
        return list(self.terms)


def fugacity_ring(spec: EnsembleSpec, convention: str = "pair") -> PolynomialRing:
    weights = [
        2 * qj if (convention == "literal" and L % 2) else qj for qj, L in zip(spec.q, spec.L)
    ]
    return PolynomialRing(FugacityMonomials(weights, spec.N), FugacityPolynomial, "fugacity")


# ---------------------------------------------------------------------------
# omega forms
# ---------------------------------------------------------------------------


@dataclass
class OmegaForm:
    """``omega_j`` with the integrals it was built from.

    ``integrals`` maps ``t`` (even species) or ``(t, u)`` (odd species) to
    the coefficient integral; ``errors`` holds the quadrature bounds.
    """

    form: Form
    species: int
    grade: int
    odd: bool
    maps: tuple
    integrals: dict
    errors: dict

    def __post_init__(self):
        if not self.form.is_homogeneous(self.grade):
            raise ValueError(f"omega form is not homogeneous of grade {self.grade}")


def _scheme_key(spec: EnsembleSpec) -> str:
    return spec.scheme.key


def _wr_degree(spec, L):
    return max(spec.K, L * (spec.K - L))


def _cached_values(cache, keys):
    if cache is None:
        return None
    vals = [cache.get(k) for k in keys]
    if any(v is None for v in vals):
        return None
    return np.array([v[0] for v in vals]), np.array([v[1] for v in vals])


def _locate_failure(fn, labels, err):
    for i, lab in enumerate(labels):
        try:
            fn(i)
        except QuadratureError as inner:
            raise QuadratureError(f"{inner} (coefficient for map {lab})", inner.estimate, inner.error_bound) from err
    raise err


def omega_keys(spec: EnsembleSpec, j: int) -> list:
    """Cache keys of every coefficient integral of ``omega_j``, with their map labels."""
    L = spec.L[j]
    maps = list(combinations(range(1, spec.K + 1), L))
    common = dict(
        family=spec.family.name,
        potential=spec.potential.key,
        exponent=float(spec.beta * spec.q[j]),
        K=spec.K,
        scheme=_scheme_key(spec),
    )
    if L % 2 == 0:
        return [(t, coefficient_key(t=t, **common)) for t in maps]
    return [((t, u), coefficient_key(t=t, u=u, **common)) for t in maps for u in maps]


def even_coefficients(spec: EnsembleSpec, j: int, cache: Optional[CoefficientCache] = None):
    """``(maps, values, errors)`` for ``c_t = int w_j Wr(P_t)``."""
    L = spec.L[j]
    labelled = omega_keys(spec, j)
    maps = [t for t, _ in labelled]
    keys = [k for _, k in labelled]
    hit = _cached_values(cache, keys)
    if hit is not None:
        return maps, hit[0], hit[1]
    m = spec.measure(j)
    deg = _wr_degree(spec, L)

    def fs(x, sel=None):
        chosen = maps if sel is None else [maps[sel]]
        return wronskian_batch(spec.family, chosen, x, spec.K)

    try:
        vals, err = integrate_weighted_batch(fs, m, spec.scheme, deg)
    except QuadratureError as exc:
        _locate_failure(lambda i: integrate_weighted_batch(lambda x: fs(x, i), m, spec.scheme, deg), maps, exc)
    errs = np.full(len(maps), err)
    if cache is not None:
        cache.put_many(zip(keys, vals, errs))
    return maps, vals, errs


def odd_coefficients(spec: EnsembleSpec, j: int, cache: Optional[CoefficientCache] = None):
    """``(maps, A, err)`` with ``A[a, b]`` the half sgn-kernel integral for ``(t_a, t_b)``."""
    L = spec.L[j]
    labelled = omega_keys(spec, j)
    maps = list(combinations(range(1, spec.K + 1), L))
    n = len(maps)
    keys = [k for _, k in labelled]
    hit = _cached_values(cache, keys)
    if hit is not None:
        return maps, hit[0].reshape(n, n), hit[1].reshape(n, n)
    m = spec.measure(j)
    deg = _wr_degree(spec, L)

    def fs(x):
        return wronskian_batch(spec.family, maps, x, spec.K)

    A, err = sgn_kernel_matrix(fs, fs, m, spec.scheme, deg)
    errs = np.full((n, n), err)
    if cache is not None:
        cache.put_many(zip(keys, A.ravel(), errs.ravel()))
    return maps, A, errs


def _words(maps, K):
    return np.array([word(t, K) for t in maps], dtype=np.int64)


def build_omega_even(spec: EnsembleSpec, j: int, cache: Optional[CoefficientCache] = None) -> OmegaForm:
    """``omega_j = sum_t c_t eps_t`` for a species with even ``L_j``."""
    L = spec.L[j]
    if L % 2:
        raise ValueError(f"species {j} has odd L = {L}; use build_omega_odd")
    maps, vals, errs = even_coefficients(spec, j, cache)
    keys, v = _accel.normalize_real(_words(maps, spec.K), vals)
    form = Form._raw(spec.K, REALS, keys, v)
    return OmegaForm(form, j, L, False, tuple(maps), dict(zip(maps, vals.tolist())), dict(zip(maps, errs.tolist())))


def build_omega_odd(spec: EnsembleSpec, j: int, cache: Optional[CoefficientCache] = None) -> OmegaForm:
    """``omega_j = sum_{(t,u)} A_tu eps_t ^ eps_u`` for the species with odd ``L_j``.

    Every ordered pair is accumulated separately; overlapping pairs vanish
    in the wedge and mirror pairs add with equal sign.
    """
    L = spec.L[j]
    if L % 2 == 0:
        raise ValueError(f"species {j} has even L = {L}; use build_omega_even")
    maps, A, errs = odd_coefficients(spec, j, cache)
    w = _words(maps, spec.K)
    ia, ib = np.nonzero((w[:, None] & w[None, :]) == 0)
    sign = _accel.wedge_sign(w[ia], w[ib], spec.K)
    keys, v = _accel.normalize_real(w[ia] | w[ib], sign * A[ia, ib])
    form = Form._raw(spec.K, REALS, keys, v)
    integrals = {(maps[a], maps[b]): float(A[a, b]) for a in range(len(maps)) for b in range(len(maps))}
    errors = {(maps[a], maps[b]): float(errs[a, b]) for a in range(len(maps)) for b in range(len(maps))}
    return OmegaForm(form, j, 2 * L, True, tuple(maps), integrals, errors)


def build_omegas(spec: EnsembleSpec, cache: Optional[CoefficientCache] = None) -> list:
    """``[omega_1, ..., omega_J]`` in input species order."""
    return [
        build_omega_odd(spec, j, cache) if L % 2 else build_omega_even(spec, j, cache)
        for j, L in enumerate(spec.L)
    ]


def _fugacity_exponent(L: int, convention: str) -> int:
    if convention not in ("pair", "literal"):
        raise ValueError(f"unknown fugacity convention {convention!r}")
    return 2 if (L % 2 and convention == "pair") else 1


def assemble_omega(spec: EnsembleSpec, omegas: Sequence[OmegaForm], z=None, convention: str = "pair") -> Form:
    """``omega(z) = sum_j zeta_j omega_j``.

    ``zeta_j = z_j`` for even ``L_j``; for the odd species ``zeta_j = z_j^2``
    under the ``"pair"`` convention and ``z_j`` under ``"literal"``.
    ``z=None`` gives fugacity-polynomial coefficients; otherwise a real form.
    """
    if z is None:
        ring = fugacity_ring(spec, convention)
        out = Form.zero(spec.K, ring)
        for om in omegas:
            e = _fugacity_exponent(spec.L[om.species], convention)
            key = tuple(e if i == om.species else 0 for i in range(spec.J))
            mono = ring.monomial(key)
            lifted = om.form.map_coefficients(lambda c, mono=mono: mono * c, ring)
            out = out + lifted
        return out
    z = [float(v) for v in z]
    if len(z) != spec.J:
        raise ValueError(f"need {spec.J} fugacities, got {len(z)}")
    out = Form.zero(spec.K)
    for om in omegas:
        e = _fugacity_exponent(spec.L[om.species], convention)
        out = out + om.form.scale(z[om.species] ** e)
    return out


def _power_table(w: Form, count: int, min_grade: int) -> list:
    """``[w^0/0!, w^1/1!, ..., w^count/count!]`` with top-only pruning."""
    out = [Form.one(w.K)]
    for m in range(1, count + 1):
        nxt = wedge(out[-1], w, prune_gap=min_grade)
        out.append(Form._raw(w.K, REALS, nxt._keys, nxt._vals / m))
    return out


def _grade_vectors(grades, K):
    """All exponent vectors ``m`` with ``sum m_j grades_j = K``."""
    out = []

    def rec(j, rest, prefix):
        if j == len(grades):
            if rest == 0:
                out.append(tuple(prefix))
            return
        for m in range(rest // grades[j] + 1):
            rec(j + 1, rest - m * grades[j], prefix + [m])

    rec(0, K, [])
    return out


def partition_grand(spec: EnsembleSpec, omegas: Optional[Sequence[OmegaForm]] = None, *,
                    method: str = "symbolic", convention: str = "pair",
                    cache: Optional[CoefficientCache] = None) -> FugacityPolynomial:
    """``Z_N(z) = int exp(omega(z)) d(eps_vol)`` as a fugacity polynomial.

    ``method="symbolic"`` exponentiates ``omega(z)`` over the fugacity ring.
    ``method="sliced"`` uses ``exp(sum zeta_j omega_j) = prod_j exp(zeta_j omega_j)``
    and wedges real power tables, which is faster for larger ``K``.
    """
    if omegas is None:
        omegas = build_omegas(spec, cache)
    ring = fugacity_ring(spec, convention)
    if spec.K == 0:
        return ring.one
    if method == "symbolic":
        w = assemble_omega(spec, omegas, None, convention)
        result = berezin_full(exp_form(w, top_only=True))
        if ring.is_zero(result):
            result = ring.zero
    elif method == "sliced":
        grades = [om.grade for om in omegas]
        min_grade = min(grades)
        tables = {}
        terms = {}
        for mvec in _grade_vectors(grades, spec.K):
            acc = Form.one(spec.K)
            for om, m in zip(omegas, mvec):
                if m == 0:
                    continue
                tab = tables.get(om.species)
                if tab is None or len(tab) <= m:
                    tab = tables[om.species] = _power_table(om.form, spec.K // om.grade, min_grade)
                acc = wedge(acc, tab[m], prune_gap=min_grade)
            c = float(berezin_full(acc))
            key = tuple(m * _fugacity_exponent(spec.L[om.species], convention) for om, m in zip(omegas, mvec))
            if c != 0.0:
                terms[key] = c
        result = FugacityPolynomial(ring.algebra, terms)
    else:
        raise ValueError(f"unknown method {method!r}")
    if convention == "pair":
        for key in result.terms:
            if sum(d * qj for d, qj in zip(key, spec.q)) != spec.N:
                raise AssertionError(f"multidegree {key} has total charge != N")
    return result


def partition_canonical(spec: EnsembleSpec, M, omegas=None, *, method: str = "symbolic",
                        cache: Optional[CoefficientCache] = None, grand: Optional[FugacityPolynomial] = None) -> float:
    """``Z_M``: the ``z^M`` coefficient of ``Z_N(z)``."""
    M = spec.check_population(M)
    if spec.N == 0:
        return 1.0
    if grand is None:
        grand = partition_grand(spec, omegas, method=method, cache=cache)
    return grand.coefficient(M)


# ---------------------------------------------------------------------------
# Laplace-expansion path
# ---------------------------------------------------------------------------


def laplace_tuple_count(spec: EnsembleSpec, M) -> int:
    return prod(comb(spec.K, L) ** m for L, m in zip(spec.L, M))


def partition_canonical_laplace(spec: EnsembleSpec, M, omegas=None, *, pf_inner: str = "shared",
                                cap: int = LAPLACE_TUPLE_CAP, cache: Optional[CoefficientCache] = None) -> float:
    """``Z_M`` by the Laplace expansion of the confluent Vandermonde determinant.

    ``Z_M = (1/prod M_j!) sum_{tuples} sgn(tuple) prod (1-D integrals)``.
    For an odd species the product of its particles' integrals is replaced
    by ``Pf[int int sgn(y - x) w w Wr_t(x) Wr_u(y)]`` over its maps, taken
    from the shared sgn-kernel integrals (``pf_inner="shared"``) or from a
    fresh multidimensional integral (``pf_inner="multidim"``, at most two
    particles of the odd species).
    """
    M = spec.check_population(M)
    if spec.N == 0:
        return 1.0
    count = laplace_tuple_count(spec, M)
    if count > cap:
        raise ValueError(
            f"{count} map tuples exceed the cap {cap}; use the Berezin path (partition_canonical)"
        )
    if omegas is None:
        omegas = build_omegas(spec, cache)
    K = spec.K
    full = (1 << K) - 1
    slots = []  # (species, word list, coefficient list) per particle, odd species first
    odd = spec.odd_species
    for j in spec.species_order:
        om = omegas[j]
        words = [word(t, K) for t in om.maps]
        if om.odd:
            slots.extend([(j, words, None)] * M[j])
        else:
            vals = [om.integrals[t] for t in om.maps]
            slots.extend([(j, words, vals)] * M[j])

    if odd is not None and M[odd]:
        om = omegas[odd]
        n = len(om.maps)
        if pf_inner == "shared":
            A2 = np.empty((n, n))
            for a, t in enumerate(om.maps):
                for b_, u in enumerate(om.maps):
                    A2[a, b_] = 2.0 * om.integrals[(t, u)]

            def odd_factor(idx):
                sub = A2[np.ix_(idx, idx)]
                return pfaffian(0.5 * (sub - sub.T))
        elif pf_inner == "multidim":
            if M[odd] > 2:
                raise ValueError("multidimensional Pf inner integral supports at most two odd-species particles")
            odd_factor = _multidim_odd_factor(spec, odd, om.maps)
        else:
            raise ValueError(f"unknown pf_inner {pf_inner!r}")
    else:
        def odd_factor(idx):
            return 1.0

    total = 0.0
    n_slots = len(slots)
    # depth-first over particle slots; sign accumulated incrementally
    stack = [(0, 0, 1, 1.0, ())]
    while stack:
        depth, acc, sign, value, odd_idx = stack.pop()
        if depth == n_slots:
            if acc == full:
                total += sign * value * (odd_factor(list(odd_idx)) if odd_idx else 1.0)
            continue
        j, words, vals = slots[depth]
        for i, w in enumerate(words):
            if acc & w:
                continue
            s = _word_sign(acc, w)
            if vals is None:
                stack.append((depth + 1, acc | w, sign * int(s), value, odd_idx + (i,)))
            else:
                stack.append((depth + 1, acc | w, sign * int(s), value * vals[i], odd_idx))
    return total / prod(factorial(m) for m in M)


def _multidim_odd_factor(spec, j, maps):
    m = spec.measure(j)

    def factor(idx):
        if not idx:
            return 1.0
        ta, tb = maps[idx[0]], maps[idx[1]]

        def h(X):
            wa = wronskian_batch(spec.family, [ta], X[:, 0], spec.K)[0]
            wb = wronskian_batch(spec.family, [tb], X[:, 1], spec.K)[0]
            return np.sign(X[:, 1] - X[:, 0]) * wa * wb

        deg = max(wronskian_degree(ta), wronskian_degree(tb))
        return integrate_multidim(h, [m, m], spec.scheme, kinks=True, degree=deg).value

    return factor


# ---------------------------------------------------------------------------
# population law
# ---------------------------------------------------------------------------


def population_probability(spec: EnsembleSpec, z, omegas=None, *, grand: Optional[FugacityPolynomial] = None,
                           cache: Optional[CoefficientCache] = None) -> dict:
    """``prob(M) = z^M Z_M / Z_N(z)`` for every admissible ``M``."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (spec.J,) or np.any(z <= 0):
        raise ValueError("fugacities must be positive, one per species")
    if grand is None:
        grand = partition_grand(spec, omegas, cache=cache)
    weights = {M: float(np.prod(z ** np.array(M))) * grand.coefficient(M) for M in admissible_populations(spec)}
    ZN = sum(weights.values())
    if not ZN > 0:
        raise ArithmeticError(f"Z_N(z) = {ZN} is not positive")
    return {M: v / ZN for M, v in weights.items()}
