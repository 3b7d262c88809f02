"""Correlation functions by measure insertion.

Adding point masses ``eta_j = sum_l c^j_l delta_{zeta^j_l}`` to each species
measure turns the partition function into a generating function in the
insertion coefficients ``c``: the coefficient of ``prod c^j_l`` (each to the
first power) is ``sum_M z^M Z_M R_{M,m}(zeta)``.  Dividing by ``Z_N(z)``
gives the grand canonical ``R_{N,m}``; taking the ``z^M`` part and dividing
by ``Z_M`` gives the canonical ``R_{M,m}``.

Only species with even ``L_j`` are supported; for the odd species the
oracle integrates the canonical correlation directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .cache import CoefficientCache
from .ensemble import (
    EnsembleSpec,
    FugacityMonomials,
    FugacityPolynomial,
    OmegaForm,
    SpecError,
    build_omegas,
    partition_grand,
)
from .exterior import Form, berezin_full, exp_form, wedge, wedge_all, word
from .poly import wronskian_batch
from .rings import MonomialAlgebra, PolynomialRing, SparsePolynomial


class UnsupportedSpeciesError(NotImplementedError):
    """Insertion formulas are only available when every ``L_j`` is even."""


@dataclass(frozen=True)
class InsertionSet:
    """Insertion points per species; ``points[j]`` lists ``zeta^j_1..zeta^j_{m_j}``."""

    points: tuple

    def __post_init__(self):
        pts = tuple(tuple(float(x) for x in p) for p in self.points)
        object.__setattr__(self, "points", pts)

    @classmethod
    def single(cls, J: int, j: int, zeta: float) -> "InsertionSet":
        return cls(tuple((zeta,) if i == j else () for i in range(J)))

    @property
    def m(self) -> tuple:
        return tuple(len(p) for p in self.points)

    @property
    def labels(self) -> list:
        """``(species, index)`` of every insertion coefficient, in label order."""
        return [(j, l) for j, p in enumerate(self.points) for l in range(len(p))]

    @property
    def full_mask(self) -> int:
        return (1 << len(self.labels)) - 1


class InsertionMonomials(MonomialAlgebra):
    """Subsets of insertion labels (bit masks); ``c^2 = 0``."""

    one_key = 0

    def multiply(self, a, b):
        return None if a & b else a | b

    def format_key(self, key):
        return "*".join(f"c{i}" for i in range(key.bit_length()) if key >> i & 1) or "1"

    def __eq__(self, other):
        return isinstance(other, InsertionMonomials)

    def __hash__(self):
        return hash("InsertionMonomials")


class InsertionPolynomial(SparsePolynomial):
    """Multilinear polynomial in the insertion coefficients."""

    __slots__ = ()


class TensorMonomials(MonomialAlgebra):
    """Pairs ``(z-multidegree, c-mask)``: fugacity monomials times insertion monomials."""

    def __init__(self, fugacity: FugacityMonomials):
        self.fugacity = fugacity
        self.insertion = InsertionMonomials()
        self.one_key = (fugacity.one_key, 0)

    def multiply(self, a, b):
        c = self.insertion.multiply(a[1], b[1])
        if c is None:
            return None
        z = self.fugacity.multiply(a[0], b[0])
        return None if z is None else (z, c)

    def sort_key(self, key):
        return (self.fugacity.sort_key(key[0]), key[1])

    def format_key(self, key):
        return f"{self.fugacity.format_key(key[0])}|{self.insertion.format_key(key[1])}"

    def __eq__(self, other):
        return isinstance(other, TensorMonomials) and other.fugacity == self.fugacity

    def __hash__(self):
        return hash(("TensorMonomials", self.fugacity))


def _check_even(spec: EnsembleSpec):
    odd = spec.odd_species
    if odd is not None:
        raise UnsupportedSpeciesError(
            f"species {odd} has odd L = {spec.L[odd]}; insertion formulas need every L_j even. "
            "Use oracle.direct_correlation for the canonical correlation."
        )


def _check_insertions(spec: EnsembleSpec, ins: InsertionSet):
    if len(ins.points) != spec.J:
        raise ValueError(f"need insertion points for {spec.J} species, got {len(ins.points)}")


def insertion_forms(spec: EnsembleSpec, ins: InsertionSet) -> list:
    """``[(species, point, Form)]`` with ``Form = e^{-beta q_j U(zeta)} sum_t Wr(P_t; zeta) eps_t``."""
    out = []
    for j, pts in enumerate(ins.points):
        if not pts:
            continue
        L = spec.L[j]
        maps = list(combinations(range(1, spec.K + 1), L))
        words = {t: word(t, spec.K) for t in maps}
        m = spec.measure(j)
        x = np.array(pts)
        wr = wronskian_batch(spec.family, maps, x, spec.K)  # (n_maps, n_pts)
        wts = m.weight(x)
        for l, zeta in enumerate(pts):
            coeffs = wr[:, l] * wts[l]
            out.append((j, zeta, Form(spec.K, {words[t]: c for t, c in zip(maps, coeffs)})))
    return out


def omega_with_insertions(spec: EnsembleSpec, ins: InsertionSet, omegas: Optional[Sequence[OmegaForm]] = None,
                          z=None, *, cache: Optional[CoefficientCache] = None) -> Form:
    """``sum_j zeta_j (omega_j^nu + omega_j^eta)`` with the insertion coefficients symbolic.

    ``z=None`` keeps the fugacities symbolic (tensor ring); numeric ``z``
    gives a form over the insertion ring alone.
    """
    _check_even(spec)
    _check_insertions(spec, ins)
    if omegas is None:
        omegas = build_omegas(spec, cache)
    fug = FugacityMonomials(spec.q, spec.N)
    if z is None:
        ring = PolynomialRing(TensorMonomials(fug), InsertionPolynomial, "fugacity-insertion")

        def scalar(j, mask):
            key = tuple(1 if i == j else 0 for i in range(spec.J))
            return ring.monomial((key, mask))
    else:
        z = [float(v) for v in z]
        if len(z) != spec.J:
            raise ValueError(f"need {spec.J} fugacities, got {len(z)}")
        ring = PolynomialRing(InsertionMonomials(), InsertionPolynomial, "insertion")

        def scalar(j, mask):
            return ring.monomial(mask, z[j])

    out = Form.zero(spec.K, ring)
    for om in omegas:
        s = scalar(om.species, 0)
        out = out + om.form.map_coefficients(lambda c, s=s: s * c, ring)
    label_of = {lab: i for i, lab in enumerate(ins.labels)}
    counters = [0] * spec.J
    for j, _, f in insertion_forms(spec, ins):
        bit = 1 << label_of[(j, counters[j])]
        counters[j] += 1
        s = scalar(j, bit)
        out = out + f.map_coefficients(lambda c, s=s: s * c, ring)
    return out


def _top_room(spec: EnsembleSpec, ins: InsertionSet) -> int:
    return spec.K - sum(m * L for m, L in zip(ins.m, spec.L))


def _explicit_wedge(spec, ins, omegas, z):
    """``int exp(omega^nu(z)) ^ wedge_{j,l} z_j Ins_{j,l} d(eps_vol)`` with real ``z``."""
    room = _top_room(spec, ins)
    nu = Form.zero(spec.K)
    for om in omegas:
        nu = nu + om.form.scale(z[om.species])
    ex = exp_form(nu).component(room)
    blocks = [f.scale(z[j]) for j, _, f in insertion_forms(spec, ins)]
    return float(berezin_full(wedge(ex, wedge_all(blocks, spec.K))))


def _explicit_wedge_symbolic(spec, ins, omegas):
    """Same wedge with symbolic fugacities; returns a fugacity polynomial."""
    room = _top_room(spec, ins)
    fug = FugacityMonomials(spec.q, spec.N)
    ring = PolynomialRing(fug, FugacityPolynomial, "fugacity")

    def lift(f, j):
        key = tuple(1 if i == j else 0 for i in range(spec.J))
        mono = ring.monomial(key)
        return f.map_coefficients(lambda c: mono * c, ring)

    nu = Form.zero(spec.K, ring)
    for om in omegas:
        nu = nu + lift(om.form, om.species)
    ex = exp_form(nu).component(room)
    blocks = [lift(f, j) for j, _, f in insertion_forms(spec, ins)]
    acc = ex
    for blk in blocks:
        acc = wedge(acc, blk)
    out = berezin_full(acc)
    return out if isinstance(out, FugacityPolynomial) else ring.zero


def correlation_grand(spec: EnsembleSpec, ins: InsertionSet, z, omegas=None, *, method: str = "extract",
                      grand: Optional[FugacityPolynomial] = None, cache: Optional[CoefficientCache] = None) -> float:
    """``R_{N,m}(zeta)`` at numeric fugacities.

    ``method="extract"`` takes the ``prod c`` coefficient of the inserted
    partition function; ``method="wedge"`` wedges ``exp(omega^nu)`` with the
    insertion forms explicitly.  Both divide by ``Z_N(z)``.
    """
    _check_even(spec)
    _check_insertions(spec, ins)
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (spec.J,) or np.any(z <= 0):
        raise ValueError("fugacities must be positive, one per species")
    if not ins.labels:
        return 1.0
    if _top_room(spec, ins) < 0:
        return 0.0
    if omegas is None:
        omegas = build_omegas(spec, cache)
    if grand is None:
        grand = partition_grand(spec, omegas)
    ZN = grand(z)
    if method == "extract":
        w = omega_with_insertions(spec, ins, omegas, z)
        top = berezin_full(exp_form(w, top_only=True))
        num = top.coefficient(ins.full_mask) if isinstance(top, SparsePolynomial) else 0.0
    elif method == "wedge":
        num = _explicit_wedge(spec, ins, omegas, z)
    else:
        raise ValueError(f"unknown method {method!r}")
    return num / ZN


def correlation_canonical(spec: EnsembleSpec, ins: InsertionSet, M, omegas=None, *, method: str = "extract",
                          grand: Optional[FugacityPolynomial] = None,
                          cache: Optional[CoefficientCache] = None) -> float:
    """``R_{M,m}(zeta)``: the ``z^M prod c`` coefficient divided by ``Z_M``."""
    _check_even(spec)
    _check_insertions(spec, ins)
    M = spec.check_population(M)
    if any(mj > Mj for mj, Mj in zip(ins.m, M)):
        raise SpecError(f"insertion pattern {ins.m} exceeds population {M}")
    if not ins.labels:
        return 1.0
    if omegas is None:
        omegas = build_omegas(spec, cache)
    if grand is None:
        grand = partition_grand(spec, omegas)
    ZM = grand.coefficient(M)
    if method == "extract":
        w = omega_with_insertions(spec, ins, omegas, None)
        top = berezin_full(exp_form(w, top_only=True))
        num = top.coefficient((M, ins.full_mask)) if isinstance(top, SparsePolynomial) else 0.0
    elif method == "wedge":
        num = _explicit_wedge_symbolic(spec, ins, omegas).coefficient(M)
    else:
        raise ValueError(f"unknown method {method!r}")
    return num / ZM
