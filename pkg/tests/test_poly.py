import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loggas.exterior import sgn_map_tuple
from loggas.poly import (
    CompleteFamily,
    IncreasingMap,
    Polynomial,
    confluent_vandermonde,
    interaction_product,
    modified_derivative,
    wronskian,
    wronskian_batch,
    wronskian_polynomial,
)

MONO = CompleteFamily.monomial()
HERM = CompleteFamily.hermite_monic()


def test_modified_derivative_examples():
    p = Polynomial([0, 1, 0, 1])  # x^3 + x
    assert modified_derivative(p, 0) == p
    assert modified_derivative(p, 2) == Polynomial([0, 3])
    assert modified_derivative(Polynomial([0, 0, 1]), 1) == Polynomial([0, 2])
    assert modified_derivative(p, 5).degree == -1
    with pytest.raises(ValueError):
        modified_derivative(p, -1)


def test_families_are_monic_and_graded():
    for fam in (MONO, HERM):
        for n, p in enumerate(fam.members(10), start=1):
            assert p.degree == n - 1
            assert p.leading == 1.0


def test_hermite_family_is_orthogonal():
    x, w = np.polynomial.hermite.hermgauss(30)
    ps = HERM.members(8)
    gram = np.array([[np.sum(w * p(x) * q(x)) for q in ps] for p in ps])
    off = gram - np.diag(np.diag(gram))
    assert np.abs(off).max() < 1e-12


def test_custom_family_validation():
    fam = CompleteFamily.custom([[1.0], [2.0, 1.0], [0.0, 0.0, 1.0]])
    assert fam[2](1.0) == 3.0
    with pytest.raises(ValueError):
        CompleteFamily.custom([[1.0], [0.0, 2.0]])
    with pytest.raises(ValueError):
        fam.members(4)


def test_increasing_map():
    t = IncreasingMap((1, 3))
    assert t.complement(4).values == (2, 4)
    with pytest.raises(ValueError):
        IncreasingMap((2, 2))
    with pytest.raises(ValueError):
        IncreasingMap((1, 5)).check(4)


def test_wronskian_examples():
    x = np.linspace(-2, 2, 9)
    assert np.allclose(wronskian(MONO, (1, 2), x), 1.0)
    assert np.allclose(wronskian(MONO, (2, 3), x), x**2)
    for fam in (MONO, HERM):
        for L in range(1, 7):
            assert np.allclose(wronskian(fam, tuple(range(1, L + 1)), x), 1.0)


def test_wronskian_symbolic_matches_numeric(rng):
    x = rng.uniform(-2, 2, 7)
    for t in [(1, 3, 4, 6), (2, 3, 5, 7), (1, 2, 5, 8)]:
        sym = wronskian_polynomial(HERM, t)(x)
        tab = np.array([[[np.polynomial.polynomial.polyval(xi, modified_derivative(HERM[n], l).coeffs)
                          for l in range(len(t))] for n in t] for xi in x])
        assert np.allclose(sym, np.linalg.det(tab), rtol=1e-10)


def test_wronskian_batch_large_L(rng):
    x = rng.uniform(-1, 1, 5)
    maps = [(1, 2, 3, 4, 6), (1, 3, 4, 5, 7)]
    batch = wronskian_batch(MONO, maps, x, 7)
    for row, t in zip(batch, maps):
        assert np.allclose(row, wronskian_polynomial(MONO, t)(x), rtol=1e-9)


def test_confluent_vandermonde_examples():
    V = confluent_vandermonde((1, 1), (1, 2), 1, MONO, [[0.0], [2.0]])
    assert np.allclose(V, [[1, 1, 0], [0, 2, 1], [0, 4, 4]])
    assert np.isclose(np.linalg.det(V), 4.0)
    assert np.linalg.det(confluent_vandermonde((1,), (1,), 1, MONO, [[0.7]])) == 1.0
    with pytest.raises(ValueError):
        confluent_vandermonde((2,), (1,), 1, MONO, [[0.0]])


def test_confluent_vandermonde_single_species_b2(rng):
    x = rng.uniform(-2, 2, 2)
    V = confluent_vandermonde((2, 0), (1, 3), 2, MONO, [x, []])
    assert np.isclose(np.linalg.det(V), (x[1] - x[0]) ** 4, rtol=1e-9)


def _random_case(rng):
    while True:
        b = int(rng.integers(1, 3))
        J = int(rng.integers(1, 3))
        q = tuple(sorted(rng.choice(np.arange(1, 4), size=J, replace=False).tolist()))
        M = tuple(int(v) for v in rng.integers(0, 3, size=J))
        K = sum(m * b * qj for m, qj in zip(M, q))
        if 1 <= K <= 8:
            pts = [rng.uniform(-2, 2, m) for m in M]
            return M, q, b, pts


@pytest.mark.parametrize("fam", [MONO, HERM], ids=["monomial", "hermite"])
def test_confluent_vandermonde_identity(fam, rng):
    for _ in range(100):
        M, q, b, pts = _random_case(rng)
        det = np.linalg.det(confluent_vandermonde(M, q, b, fam, pts))
        ref = interaction_product(M, q, b, pts)
        assert abs(det - ref) <= 1e-9 * max(abs(ref), 1e-300) or abs(det - ref) < 1e-12


def test_laplace_expansion_matches_determinant(rng):
    # sum over map tuples of sgn * prod Wr equals det V
    for M, q, b in [((2,), (1,), 2), ((1, 1), (1, 2), 1), ((2, 1), (1, 2), 1), ((1, 1), (2, 1), 2)]:
        L = [b * qj for qj in q]
        K = sum(m * l for m, l in zip(M, L))
        if K > 6:
            continue
        pts = [rng.uniform(-1.5, 1.5, m) for m in M]
        slots = [(j, pts[j][i]) for j in range(len(M)) for i in range(M[j])]
        total = 0.0
        choices = [list(itertools.combinations(range(1, K + 1), L[j])) for j, _ in slots]
        for tup in itertools.product(*choices):
            s = sgn_map_tuple(tup, K)
            if s:
                total += s * np.prod([wronskian(HERM, t, x) for t, (_, x) in zip(tup, slots)])
        det = np.linalg.det(confluent_vandermonde(M, q, b, HERM, pts))
        assert np.isclose(total, det, rtol=1e-9, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3, unique=True))
def test_family_independence_of_determinant(xs):
    pts = [np.array(xs[:2]), np.array(xs[2:])]
    a = np.linalg.det(confluent_vandermonde((2, 1), (1, 2), 1, MONO, pts))
    b = np.linalg.det(confluent_vandermonde((2, 1), (1, 2), 1, HERM, pts))
    assert np.isclose(a, b, rtol=1e-9, atol=1e-12)
