from math import pi, sqrt

import numpy as np
import pytest

from loggas.correlations import (
    InsertionSet,
    UnsupportedSpeciesError,
    correlation_canonical,
    correlation_grand,
    insertion_forms,
)
from loggas.ensemble import EnsembleSpec, SpecError, build_omegas, partition_grand, population_probability
from loggas.oracle import direct_correlation

CHARGE_TWO = EnsembleSpec(1, (2,), 4)
MIXED = EnsembleSpec(2, (1, 3), 4)


@pytest.fixture(scope="module")
def charge_two():
    omegas = build_omegas(CHARGE_TWO)
    return omegas, partition_grand(CHARGE_TWO, omegas)


@pytest.fixture(scope="module")
def mixed():
    omegas = build_omegas(MIXED)
    return omegas, partition_grand(MIXED, omegas)


def gauss_legendre(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def test_insertion_set_bookkeeping():
    ins = InsertionSet(((0.1, 0.2), (), (3.0,)))
    assert ins.m == (2, 0, 1)
    assert ins.labels == [(0, 0), (0, 1), (2, 0)]
    assert ins.full_mask == 0b111
    assert InsertionSet.single(2, 1, 0.5).points == ((), (0.5,))


def test_insertion_forms_are_point_evaluations(charge_two):
    omegas, _ = charge_two
    ins = InsertionSet(((0.5,),))
    ((j, zeta, f),) = insertion_forms(CHARGE_TWO, ins)
    assert (j, zeta) == (0, 0.5)
    # monomial Wronskians: Wr(1,2) = 1 and Wr(2,3) = x^2, times e^{-x^2}
    w = np.exp(-zeta**2)
    assert np.isclose(f.coefficient((1, 2)), w, rtol=1e-15)
    assert np.isclose(f.coefficient((2, 3)), zeta**2 * w, rtol=1e-15)


def test_single_particle_density_closed_form(charge_two):
    omegas, grand = charge_two
    # R(x) = e^{-x^2} int (x - y)^4 e^{-y^2} dy / Z with Z = 3 pi / 2
    for zeta in (0.0, 1.0, -1.0, 0.37):
        ins = InsertionSet(((zeta,),))
        R = correlation_canonical(CHARGE_TWO, ins, (2,), omegas, grand=grand)
        ref = np.exp(-zeta**2) * sqrt(pi) * (zeta**4 + 3 * zeta**2 + 0.75) / (1.5 * pi)
        assert np.isclose(R, ref, rtol=1e-12)


def test_lone_particle_density():
    spec = EnsembleSpec(1, (2,), 2)
    for zeta in (0.0, 0.8):
        R = correlation_canonical(spec, InsertionSet(((zeta,),)), (1,))
        assert np.isclose(R, np.exp(-zeta**2) / sqrt(pi), rtol=1e-13)


def test_density_integrates_to_particle_count(charge_two):
    omegas, grand = charge_two
    x, w = gauss_legendre(-9, 9, 120)
    R = [correlation_canonical(CHARGE_TWO, InsertionSet(((v,),)), (2,), omegas, grand=grand) for v in x]
    assert np.isclose(np.dot(w, R), 2.0, rtol=1e-10)


def test_pair_density_marginalises(charge_two):
    omegas, grand = charge_two
    x, w = gauss_legendre(-9, 9, 120)
    zeta = 0.3
    pair = [correlation_canonical(CHARGE_TWO, InsertionSet(((zeta, v),)), (2,), omegas, grand=grand) for v in x]
    one = correlation_canonical(CHARGE_TWO, InsertionSet(((zeta,),)), (2,), omegas, grand=grand)
    assert np.isclose(np.dot(w, pair), (2 - 1) * one, rtol=1e-10)


@pytest.mark.parametrize("zeta", [0.0, 1.0, -1.0])
def test_density_matches_direct_integration(charge_two, zeta):
    omegas, grand = charge_two
    R = correlation_canonical(CHARGE_TWO, InsertionSet(((zeta,),)), (2,), omegas, grand=grand)
    ref = direct_correlation(CHARGE_TWO, (2,), (1,), [[zeta]])
    assert abs(R - ref.value) <= 1e-6


def test_single_species_grand_equals_canonical(charge_two):
    omegas, grand = charge_two
    ins = InsertionSet(((0.2, -0.9),))
    a = correlation_grand(CHARGE_TWO, ins, (1.7,), omegas, grand=grand)
    b = correlation_canonical(CHARGE_TWO, ins, (2,), omegas, grand=grand)
    assert np.isclose(a, b, rtol=1e-12)


@pytest.mark.parametrize("points", [((0.3,), ()), ((), (0.4,)), ((0.1, -0.6), ()), ((0.5,), (-0.2,))])
def test_extraction_and_wedge_paths_agree(mixed, points):
    omegas, grand = mixed
    ins = InsertionSet(points)
    for z in [(1.0, 1.0), (0.6, 2.2)]:
        a = correlation_grand(MIXED, ins, z, omegas, grand=grand, method="extract")
        b = correlation_grand(MIXED, ins, z, omegas, grand=grand, method="wedge")
        assert np.isclose(a, b, rtol=1e-12, atol=1e-15)
    M = (1, 1) if ins.m[1] else (4, 0)
    a = correlation_canonical(MIXED, ins, M, omegas, grand=grand, method="extract")
    b = correlation_canonical(MIXED, ins, M, omegas, grand=grand, method="wedge")
    assert np.isclose(a, b, rtol=1e-12, atol=1e-15)


def test_grand_density_integrates_to_expected_count(mixed):
    omegas, grand = mixed
    z = (0.8, 1.5)
    x, w = gauss_legendre(-10, 10, 120)
    probs = population_probability(MIXED, z, grand=grand)
    for j in range(2):
        R = [correlation_grand(MIXED, InsertionSet.single(2, j, v), z, omegas, grand=grand) for v in x]
        expected = sum(M[j] * p for M, p in probs.items())
        assert np.isclose(np.dot(w, R), expected, rtol=1e-9)


def test_mixed_canonical_matches_direct(mixed):
    omegas, grand = mixed
    for pts, m in [(((0.4,), ()), (1, 0)), (((), (-0.3,)), (0, 1))]:
        R = correlation_canonical(MIXED, InsertionSet(pts), (1, 1), omegas, grand=grand)
        ref = direct_correlation(MIXED, (1, 1), m, [list(p) for p in pts])
        assert abs(R - ref.value) <= 1e-6 * max(1.0, abs(ref.value))


def test_odd_species_is_unsupported():
    spec = EnsembleSpec(1, (1, 2), 4)
    with pytest.raises(UnsupportedSpeciesError):
        correlation_grand(spec, InsertionSet.single(2, 1, 0.0), (1.0, 1.0))


def test_insertion_validation(charge_two):
    omegas, grand = charge_two
    with pytest.raises(SpecError):
        correlation_canonical(CHARGE_TWO, InsertionSet(((0.0, 1.0, 2.0),)), (2,), omegas, grand=grand)
    assert correlation_canonical(CHARGE_TWO, InsertionSet(((),)), (2,), omegas, grand=grand) == 1.0
    with pytest.raises(ValueError):
        correlation_grand(CHARGE_TWO, InsertionSet(((0.0,),)), (0.0,), omegas, grand=grand)
