from math import erf, pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loggas.quadrature import (
    DEFAULT_SCHEME,
    MAX_MC_DIM,
    MAX_QUAD_DIM,
    Potential,
    PotentialError,
    QuadratureError,
    QuadratureScheme,
    WeightedMeasure,
    auto_radius,
    integrate_multidim,
    integrate_sgn_kernel,
    integrate_weighted,
    integrate_weighted_batch,
    sgn_kernel_matrix,
)

GAUSS = Potential.gaussian()


def gm(exponent=1.0, atoms=()):
    return WeightedMeasure(GAUSS, exponent, atoms)


# --- single integrals ----------------------------------------------------------


def test_gaussian_moments():
    assert np.isclose(integrate_weighted(lambda x: np.ones_like(x), gm(4.0)), sqrt(pi / 2), rtol=1e-13)
    assert np.isclose(integrate_weighted(lambda x: x**2, gm(2.0)), sqrt(pi) / 2, rtol=1e-13)
    assert abs(integrate_weighted(lambda x: x**3, gm(1.0))) < 1e-14


def test_batch_shapes_and_error_bound():
    vals, err = integrate_weighted_batch(lambda x: np.vstack([np.ones_like(x), x**2]), gm(2.0))
    assert vals.shape == (2,)
    assert np.allclose(vals, [sqrt(pi), sqrt(pi) / 2], rtol=1e-13)
    assert 0.0 <= err < 1e-12


def test_adaptive_matches_panels():
    s = QuadratureScheme(method="adaptive", rtol=1e-12)
    f = lambda x: x**4 + 1.0  # noqa: E731
    assert np.isclose(integrate_weighted(f, gm(1.0), s), integrate_weighted(f, gm(1.0)), rtol=1e-11)


def test_point_masses_add():
    m = gm(2.0, atoms=[(0.5, 2.0), (-1.0, 0.25)])
    got = integrate_weighted(lambda x: x**2 + 1.0, m)
    assert np.isclose(got, sqrt(pi) / 2 + sqrt(pi) + 2.0 * 1.25 + 0.25 * 2.0, rtol=1e-13)
    atoms_only = WeightedMeasure(GAUSS, None, [(2.0, 3.0)])
    assert integrate_weighted(lambda x: x, atoms_only) == 6.0


def test_polynomial_and_tabulated_potentials():
    quartic = Potential.polynomial([0, 0, 0, 0, 1])
    from scipy.special import gamma

    assert np.isclose(integrate_weighted(lambda x: np.ones_like(x), WeightedMeasure(quartic, 1.0)),
                      2 * gamma(1.25), rtol=1e-12)
    box = Potential.tabulated([-1.0, 1.0], [0.0, 0.0])
    assert np.isclose(integrate_weighted(lambda x: np.ones_like(x), WeightedMeasure(box, 1.0),
                                         QuadratureScheme(radius=1.0)), 2.0, rtol=1e-12)


def test_potential_validation():
    with pytest.raises(PotentialError):
        Potential.gaussian(0.0)
    with pytest.raises(PotentialError):
        Potential.polynomial([0, 0, -1])
    with pytest.raises(PotentialError):
        Potential.polynomial([0, 1, 0, 1])
    with pytest.raises(PotentialError):
        Potential.tabulated([1.0, 0.0], [0.0, 0.0])
    with pytest.raises(PotentialError):
        Potential("cubic")
    with pytest.raises(ValueError):
        WeightedMeasure(GAUSS, -1.0)


def test_auto_radius_grows_with_degree_and_slow_tails_fail():
    r0 = auto_radius(gm(1.0), 0)
    r8 = auto_radius(gm(1.0), 8)
    assert 6.0 < r0 < r8 < 12.0
    flat = Potential.polynomial([0.0, 0.0, 1e-6])
    with pytest.raises(PotentialError):
        auto_radius(WeightedMeasure(flat, 1.0), 0)


def test_non_convergence_raises_with_estimate():
    s = QuadratureScheme(radius=8.0, min_panels=1, max_subdivisions=2, order=2)
    with pytest.raises(QuadratureError) as info:
        integrate_weighted(lambda x: np.cos(40 * x), gm(1.0), s)
    assert info.value.estimate is not None


def test_doubling_radius_does_not_change_result():
    m = gm(2.0)
    f = lambda x: x**6  # noqa: E731
    a = integrate_weighted(f, m, QuadratureScheme(radius=12.0))
    b = integrate_weighted(f, m, QuadratureScheme(radius=24.0, max_subdivisions=1024))
    assert np.isclose(a, b, rtol=1e-12)
    assert np.isclose(a, 15 * sqrt(pi) / 8, rtol=1e-12)


# --- sgn kernel -------------------------------------------------------------------


def test_sgn_kernel_closed_forms():
    m = gm(2.0)
    one = lambda x: np.ones_like(x)  # noqa: E731
    assert abs(integrate_sgn_kernel(one, one, m)) < 1e-14
    # with D = Y - X, E[X | D] = -D/2, so the kernel reduces to -E|D|/4 times pi
    got = integrate_sgn_kernel(lambda x: x, one, m)
    assert np.isclose(got, -sqrt(2 * pi) / 4, rtol=1e-12)
    ref = integrate_multidim(lambda X: 0.5 * X[:, 0] * np.sign(X[:, 1] - X[:, 0]), [m, m], kinks=True)
    assert np.isclose(got, ref.value, rtol=1e-10)


def test_sgn_kernel_atoms_only():
    m = WeightedMeasure(GAUSS, None, [(0.0, 1.0), (1.0, 2.0)])
    one = lambda x: np.ones_like(x)  # noqa: E731
    assert integrate_sgn_kernel(one, one, m) == 0.0
    assert integrate_sgn_kernel(one, lambda x: x, m) == 1.0


def test_sgn_kernel_zero_sign_at_coincident_atoms():
    m = WeightedMeasure(GAUSS, None, [(0.3, 1.0)])
    assert integrate_sgn_kernel(lambda x: x, lambda x: x, m) == 0.0


def test_sgn_kernel_matches_sector_quadrature(rng):
    m = gm(2.0, atoms=[(0.4, 0.5)])
    fs = lambda x: np.vstack([np.ones_like(x), x, x**3])  # noqa: E731
    gs = lambda x: np.vstack([x**2, x**4 - 1.0])  # noqa: E731
    A, err = sgn_kernel_matrix(fs, gs, m, degree=6)
    mc = m.continuous()
    for i, f in enumerate([lambda x: 1.0 + 0 * x, lambda x: x, lambda x: x**3]):
        for j, g in enumerate([lambda x: x**2, lambda x: x**4 - 1.0]):
            cc = integrate_multidim(lambda X: 0.5 * f(X[:, 0]) * g(X[:, 1]) * np.sign(X[:, 1] - X[:, 0]),
                                    [mc, mc], kinks=True).value
            # mixed atom terms in closed form via one-dimensional integrals
            xa = integrate_multidim(lambda Y: g(Y[:, 0]) * np.sign(Y[:, 0] - 0.4), [mc], breakpoints=[0.4]).value
            ax = integrate_multidim(lambda X: f(X[:, 0]) * np.sign(0.4 - X[:, 0]), [mc], breakpoints=[0.4]).value
            ref = cc + 0.5 * 0.5 * f(0.4) * xa + 0.5 * 0.5 * g(0.4) * ax
            assert np.isclose(A[i, j], ref, rtol=1e-8, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_sgn_kernel_antisymmetry(cf, cg):
    m = gm(1.5)
    f = lambda x: np.polynomial.polynomial.polyval(x, cf)  # noqa: E731
    g = lambda x: np.polynomial.polynomial.polyval(x, cg)  # noqa: E731
    a = integrate_sgn_kernel(f, g, m, degree=2)
    b = integrate_sgn_kernel(g, f, m, degree=2)
    assert np.isclose(a, -b, rtol=1e-10, atol=1e-12)


# --- multidimensional integrals ----------------------------------------------------


def test_multidim_closed_forms():
    m = gm(2.0)
    sq = integrate_multidim(lambda X: (X[:, 0] - X[:, 1]) ** 2, [m, m])
    assert np.isclose(sq.value, pi, rtol=1e-12)
    ab = integrate_multidim(lambda X: np.abs(X[:, 0] - X[:, 1]), [m, m], kinks=True, exchangeable=[0, 0])
    assert np.isclose(ab.value, sqrt(2 * pi), rtol=1e-10)
    assert ab.error < 1e-9
    quartic = integrate_multidim(lambda X: (X[:, 0] - X[:, 1]) ** 4, [gm(4.0), gm(4.0)], exchangeable=[0, 0])
    assert np.isclose(quartic.value, 3 * pi / 8, rtol=1e-12)


def test_multidim_breakpoint():
    m = gm(2.0)
    got = integrate_multidim(lambda X: np.abs(X[:, 0] - 0.5), [m], breakpoints=[0.5])
    x0 = 0.5
    ref = np.exp(-x0**2) + x0 * sqrt(pi) * erf(x0)
    assert np.isclose(got.value, ref, rtol=1e-11)


def test_multidim_mixed_exchangeability():
    m1, m2 = gm(1.0), gm(2.0)
    h = lambda X: np.abs(X[:, 0] - X[:, 1]) * np.abs(X[:, 0] - X[:, 2]) * np.abs(X[:, 1] - X[:, 2]) ** 2  # noqa: E731
    a = integrate_multidim(h, [m1, m2, m2], kinks=True, exchangeable=[0, 1, 1])
    b = integrate_multidim(h, [m1, m2, m2], kinks=True)
    assert np.isclose(a.value, b.value, rtol=1e-9)


def test_multidim_paranoid_agrees():
    m = gm(2.0)
    h = lambda X: np.abs(X[:, 0] - X[:, 1])  # noqa: E731
    p = integrate_multidim(h, [m, m], kinks=True, paranoid=True)
    assert p.method == "quadrature-fixed"
    assert np.isclose(p.value, sqrt(2 * pi), rtol=1e-9)


def test_dimension_caps():
    m = gm(1.0)
    with pytest.raises(ValueError):
        integrate_multidim(lambda X: X[:, 0], [m] * (MAX_QUAD_DIM + 1))
    with pytest.raises(ValueError):
        integrate_multidim(lambda X: X[:, 0], [m] * (MAX_MC_DIM + 1), method="montecarlo")


def test_monte_carlo_is_deterministic_and_honest():
    m = gm(2.0)
    h = lambda X: (X[:, 0] - X[:, 1]) ** 2  # noqa: E731
    a = integrate_multidim(h, [m, m], method="montecarlo", n_samples=100_000, seed=7)
    b = integrate_multidim(h, [m, m], method="montecarlo", n_samples=100_000, seed=7)
    c = integrate_multidim(h, [m, m], method="montecarlo", n_samples=100_000, seed=8)
    assert a.value == b.value
    assert a.value != c.value
    assert abs(a.value - pi) < 4 * a.error


def test_monte_carlo_tabulated_sampler():
    quartic = Potential.polynomial([0, 0, 0.5, 0, 0.25])
    m = WeightedMeasure(quartic, 1.0)
    ref = integrate_multidim(lambda X: X[:, 0] ** 2 + X[:, 1] ** 2, [m, m])
    mc = integrate_multidim(lambda X: X[:, 0] ** 2 + X[:, 1] ** 2, [m, m], method="montecarlo",
                            n_samples=200_000, seed=3)
    assert abs(mc.value - ref.value) < 4 * mc.error


def test_default_scheme_is_panels():
    assert DEFAULT_SCHEME.method == "panels"
    with pytest.raises(ValueError):
        QuadratureScheme(method="simpson")
