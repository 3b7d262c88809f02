"""Brute-force reference values straight from the Boltzmann factor.

Nothing here touches the exterior algebra: partition functions and
correlations are integrated directly over particle positions, and the
single-species gaussian case has a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, log, pi
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .ensemble import EnsembleSpec, SpecError
from .quadrature import MAX_MC_DIM, MAX_QUAD_DIM, integrate_multidim


@dataclass(frozen=True)
class Configuration:
    """Particle positions; ``x[j]`` holds the ``M_j`` locations of species ``j``."""

    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in self.x))

    def check(self, M) -> "Configuration":
        if len(self.x) != len(M) or any(len(v) != m for v, m in zip(self.x, M)):
            raise ValueError(f"configuration sizes {[len(v) for v in self.x]} do not match population {tuple(M)}")
        return self


@dataclass(frozen=True)
class OracleResult:
    value: float
    error_bound: float
    method: str

    def __post_init__(self):
        if not self.error_bound >= 0:
            raise ValueError("error bound must be nonnegative")

    def agrees(self, other: float, rtol: float = 0.0, sigmas: float = 1.0) -> bool:
        """``|value - other| <= sigmas * error_bound + rtol * |value|``."""
        return abs(self.value - other) <= sigmas * self.error_bound + rtol * abs(self.value)


def _columns(spec: EnsembleSpec, counts) -> list:
    """Species label of each coordinate, species-major."""
    return [j for j, c in enumerate(counts) for _ in range(c)]


def _pair_exponent(spec: EnsembleSpec, j: int, k: int) -> int:
    return spec.beta * spec.q[j] * spec.q[k]


def _interaction(spec: EnsembleSpec, species: Sequence[int], X: np.ndarray) -> np.ndarray:
    """``prod_{a<b} |x_a - x_b|^{beta q_a q_b}`` over the columns of ``X``."""
    out = np.ones(X.shape[0])
    d = len(species)
    for a in range(d):
        for b in range(a + 1, d):
            out *= np.abs(X[:, b] - X[:, a]) ** _pair_exponent(spec, species[a], species[b])
    return out


def boltzmann_factor(spec: EnsembleSpec, M, cfg: Configuration) -> float:
    """Unnormalised density: pair interactions times ``prod e^{-beta q_j U(x)}``."""
    M = spec.check_population(M)
    cfg.check(M)
    species = _columns(spec, M)
    if not species:
        return 1.0
    X = np.concatenate([v for v in cfg.x])[None, :]
    weight = np.prod([spec.measure(j).weight(X[0, i]) for i, j in enumerate(species)])
    return float(_interaction(spec, species, X)[0] * weight)


def _has_kinks(spec, species_a, species_b=None):
    pairs = []
    if species_b is None:
        pairs = [(a, b) for i, a in enumerate(species_a) for b in species_a[i + 1:]]
    else:
        pairs = [(a, b) for a in species_a for b in species_b]
    return any(_pair_exponent(spec, a, b) % 2 for a, b in pairs)


def direct_partition(spec: EnsembleSpec, M, *, method: str = "quadrature", n_samples: int = 400_000,
                     seed: int = 0, shards: int = 4, paranoid: bool = False) -> OracleResult:
    """``Z_M = (1/prod M_j!) int Omega_M`` by direct integration over positions."""
    M = spec.check_population(M)
    species = _columns(spec, M)
    d = len(species)
    if d == 0:
        return OracleResult(1.0, 0.0, "closed-form")
    cap = MAX_MC_DIM if method == "montecarlo" else MAX_QUAD_DIM
    if d > cap:
        raise ValueError(f"{d} particles exceed the {method} cap of {cap}")
    measures = [spec.measure(j) for j in species]

    def h(X):
        return _interaction(spec, species, X)

    degree = sum(_pair_exponent(spec, species[0], j) for j in species[1:]) + 2
    res = integrate_multidim(
        h, measures, spec.scheme, kinks=_has_kinks(spec, species), exchangeable=species,
        degree=degree, method=method, n_samples=n_samples, seed=seed, shards=shards, paranoid=paranoid,
    )
    norm = float(np.prod([factorial(m) for m in M]))
    return OracleResult(float(res.value) / norm, float(res.error) / norm, res.method)


def direct_correlation(spec: EnsembleSpec, M, m, points, *, Z: Optional[OracleResult] = None,
                       method: str = "quadrature", n_samples: int = 400_000, seed: int = 0,
                       shards: int = 4, paranoid: bool = False) -> OracleResult:
    """``R_{M,m}(xi) = (1/Z_M) prod 1/(M_j - m_j)! int Omega_M(xi, y) dy``.

    ``points[j]`` holds the ``m_j`` fixed positions of species ``j``; the
    remaining ``M_j - m_j`` particles are integrated out.
    """
    M = spec.check_population(M)
    m = tuple(int(v) for v in m)
    if len(m) != spec.J or any(a < 0 or a > b for a, b in zip(m, M)):
        raise SpecError(f"insertion pattern {m} must satisfy 0 <= m <= M = {M}")
    fixed = Configuration(points).check(m)
    if Z is None:
        Z = direct_partition(spec, M, method=method, n_samples=n_samples, seed=seed, shards=shards,
                             paranoid=paranoid)
    fixed_species = _columns(spec, m)
    xi = np.concatenate(fixed.x) if fixed_species else np.zeros(0)
    free = [Mj - mj for Mj, mj in zip(M, m)]
    free_species = _columns(spec, free)
    norm = float(np.prod([factorial(f) for f in free]))
    fixed_weight = float(np.prod([spec.measure(j).weight(x) for j, x in zip(fixed_species, xi)]))
    fixed_int = _interaction(spec, fixed_species, xi[None, :])[0] if fixed_species else 1.0
    if not free_species:
        val = fixed_weight * fixed_int / norm
        rel_z = Z.error_bound / abs(Z.value)
        return OracleResult(val / Z.value, abs(val / Z.value) * rel_z, Z.method)
    measures = [spec.measure(j) for j in free_species]

    def h(Y):
        out = np.full(Y.shape[0], fixed_weight * fixed_int)
        out *= _interaction(spec, free_species, Y)
        for a, ja in enumerate(free_species):
            for xv, jb in zip(xi, fixed_species):
                out *= np.abs(Y[:, a] - xv) ** _pair_exponent(spec, ja, jb)
        return out

    kinks = _has_kinks(spec, free_species)
    breaks = tuple(xi.tolist()) if fixed_species and _has_kinks(spec, free_species, fixed_species) else ()
    degree = sum(_pair_exponent(spec, free_species[0], j) for j in free_species[1:] + fixed_species) + 2
    res = integrate_multidim(
        h, measures, spec.scheme, kinks=kinks, breakpoints=breaks, exchangeable=free_species,
        degree=degree, method=method, n_samples=n_samples, seed=seed, shards=shards, paranoid=paranoid,
    )
    val = float(res.value) / norm / Z.value
    err = abs(val) * (float(res.error) / max(abs(float(res.value)), 1e-300) + Z.error_bound / abs(Z.value))
    return OracleResult(val, err, res.method)


def mehta_reference(N: int, gamma: float) -> float:
    """``int prod_{i<j} |x_i - x_j|^{2 gamma} prod e^{-x_i^2/2} dx`` over ``R^N``."""
    if N < 1 or not gamma > 0:
        raise ValueError("need N >= 1 and gamma > 0")
    j = np.arange(1, N + 1)
    return float(np.exp(0.5 * N * log(2 * pi) + np.sum(gammaln(1 + j * gamma)) - N * gammaln(1 + gamma)))


def gaussian_partition_reference(spec: EnsembleSpec, M) -> float:
    """Closed-form ``Z_M`` when only one species is populated and ``U`` is gaussian."""
    M = spec.check_population(M)
    occupied = [j for j, v in enumerate(M) if v]
    if spec.potential.kind != "gaussian" or len(occupied) != 1:
        raise ValueError("closed form needs a gaussian potential and a single populated species")
    j = occupied[0]
    n = M[j]
    gamma = 0.5 * spec.beta * spec.q[j] ** 2
    a = spec.beta * spec.q[j] / (2.0 * spec.potential.sigma**2)
    scale = (2.0 * a) ** (-0.5 * n - 0.5 * gamma * n * (n - 1))
    return mehta_reference(n, gamma) * scale / factorial(n)
