"""Commutative scalar rings used as form coefficients.

A ring object supplies ``zero``, ``one``, ``add``, ``mul``, ``neg``,
``is_zero``, ``from_int`` and ``div_int``.  Real numbers are plain Python
floats; polynomial rings wrap :class:`SparsePolynomial`, whose monomials are
multiplied by a pluggable *monomial algebra* (which may truncate).
"""

from __future__ import annotations

from typing import Any, Hashable, Optional


class ScalarRing:
    """Interface shared by every coefficient ring."""

    name = "abstract"

    @property
    def zero(self):
        raise NotImplementedError

    @property
    def one(self):
        raise NotImplementedError

    def add(self, a, b):
        return a + b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def is_zero(self, a) -> bool:
        raise NotImplementedError

    def from_int(self, n: int):
        out = self.zero
        unit = self.one if n >= 0 else self.neg(self.one)
        for _ in range(abs(n)):
            out = self.add(out, unit)
        return out

    def div_int(self, a, n: int):
        raise NotImplementedError

    def coerce(self, x):
        """Lift a real number into the ring."""
        raise NotImplementedError


class RealRing(ScalarRing):
    name = "real"

    @property
    def zero(self):
        return 0.0

    @property
    def one(self):
        return 1.0

    def is_zero(self, a):
        return a == 0.0

    def from_int(self, n):
        return float(n)

    def div_int(self, a, n):
        return a / n

    def coerce(self, x):
        return float(x)

    def __repr__(self):
        return "REALS"


REALS = RealRing()


class MonomialAlgebra:
    """Multiplication rule for monomial keys.

    ``multiply`` returns ``None`` when the product is truncated to zero.
    """

    one_key: Hashable = ()

    def multiply(self, a, b) -> Optional[Hashable]:
        raise NotImplementedError

    def sort_key(self, key):
        return key

    def format_key(self, key) -> str:
        return repr(key)


class SparsePolynomial:
    """Sparse polynomial ``{monomial key: real coefficient}`` over an algebra.

    Zero coefficients are never stored, so ``==`` is semantic equality.
    """

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: MonomialAlgebra, terms: Optional[dict] = None):
        self.algebra = algebra
        clean = {k: float(v) for k, v in (terms or {}).items() if v != 0.0}
        self.terms = dict(sorted(clean.items(), key=lambda kv: algebra.sort_key(kv[0])))

    def _new(self, terms):
        return type(self)(self.algebra, terms)

    @classmethod
    def constant(cls, algebra, c=1.0):
        return cls(algebra, {algebra.one_key: c})

    @classmethod
    def monomial(cls, algebra, key, c=1.0):
        return cls(algebra, {key: c})

    def _lift(self, other):
        if isinstance(other, SparsePolynomial):
            if other.algebra != self.algebra:
                raise ValueError("polynomials over different monomial algebras")
            return other
        return self._new({self.algebra.one_key: float(other)})

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0.0) + v
        return self._new(out)

    __radd__ = __add__

    def __neg__(self):
        return self._new({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, SparsePolynomial):
            c = float(other)
            return self._new({k: v * c for k, v in self.terms.items()})
        other = self._lift(other)
        out: dict = {}
        mul = self.algebra.multiply
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                k = mul(ka, kb)
                if k is not None:
                    out[k] = out.get(k, 0.0) + va * vb
        return self._new(out)

    __rmul__ = __mul__

    def __truediv__(self, c):
        c = float(c)
        return self._new({k: v / c for k, v in self.terms.items()})

    def __eq__(self, other):
        if isinstance(other, SparsePolynomial):
            return self.algebra == other.algebra and self.terms == other.terms
        if isinstance(other, (int, float)):
            return self == self._lift(other)
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def is_zero(self):
        return not self.terms

    def coefficient(self, key) -> float:
        return self.terms.get(key, 0.0)

    def keys(self):
        return list(self.terms)

    def isclose(self, other, rtol=1e-12, atol=0.0) -> bool:
        other = self._lift(other)
        for k in set(self.terms) | set(other.terms):
            a, b = self.coefficient(k), other.coefficient(k)
            if abs(a - b) > atol + rtol * max(abs(a), abs(b)):
                return False
        return True

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = [f"{v:.17g}*{self.algebra.format_key(k)}" for k, v in self.terms.items()]
        return " + ".join(parts)


class PolynomialRing(ScalarRing):
    """Ring whose elements are ``element_type`` polynomials over ``algebra``."""

    def __init__(self, algebra: MonomialAlgebra, element_type=SparsePolynomial, name="poly"):
        self.algebra = algebra
        self.element_type = element_type
        self.name = name

    @property
    def zero(self):
        return self.element_type(self.algebra, {})

    @property
    def one(self):
        return self.element_type.constant(self.algebra, 1.0)

    def is_zero(self, a):
        return a.is_zero()

    def from_int(self, n):
        return self.element_type.constant(self.algebra, float(n))

    def div_int(self, a, n):
        return a / n

    def coerce(self, x: Any):
        if isinstance(x, SparsePolynomial):
            return x
        return self.element_type.constant(self.algebra, float(x))

    def monomial(self, key, c=1.0):
        return self.element_type.monomial(self.algebra, key, c)

    def __eq__(self, other):
        return isinstance(other, PolynomialRing) and other.algebra == self.algebra

    def __hash__(self):
        return hash(("PolynomialRing", self.algebra))

    def __repr__(self):
        return f"PolynomialRing({self.name})"
