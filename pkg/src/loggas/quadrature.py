"""Weighted measures on the line and the integration engine.

Single integrals ``int f dnu + sum c f(zeta)`` use composite Gauss-Legendre
panels on ``[-R, R]``, doubled until stable (or scipy's adaptive QUADPACK
when ``method="adaptive"``).  The sgn-kernel double integral is reduced to a
single integral of a cumulative inner integral, which avoids integrating
across the ``x = y`` kink.  Multidimensional integrals use tensor-product
Gauss-Legendre rules, split into ordered sectors when the integrand has
``|x_i - x_j|`` kinks, or importance-sampled Monte Carlo.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product
from math import factorial, pi, sqrt
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate as sp_integrate
from scipy.special import roots_legendre

MAX_QUAD_DIM = 4
MAX_MC_DIM = 8
_TAIL_LOG = np.log(1e16)
_R_MAX = 400.0
_CHUNK = 1 << 20


class QuadratureError(ArithmeticError):
    """Non-convergence; carries the best estimate and its error bound."""

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class Potential:
    """External potential ``U``.

    ``gaussian``: ``U(x) = x^2 / (2 sigma^2)``.  ``polynomial``: power
    coefficients.  ``tabulated``: linear interpolation of ``(xs, us)``; the
    weight is taken to vanish outside the table.
    """

    kind: str = "gaussian"
    sigma: float = 1.0
    coefficients: tuple = ()
    xs: tuple = ()
    us: tuple = ()

    def __post_init__(self):
        if self.kind == "gaussian":
            if not self.sigma > 0:
                raise PotentialError("gaussian scale sigma must be positive")
        elif self.kind == "polynomial":
            c = tuple(float(v) for v in self.coefficients)
            object.__setattr__(self, "coefficients", c)
            if len(c) < 2 or c[-1] <= 0 or (len(c) - 1) % 2:
                raise PotentialError("polynomial potential needs even degree and positive leading term")
        elif self.kind == "tabulated":
            xs = tuple(float(v) for v in self.xs)
            us = tuple(float(v) for v in self.us)
            object.__setattr__(self, "xs", xs)
            object.__setattr__(self, "us", us)
            if len(xs) < 2 or len(xs) != len(us) or any(b <= a for a, b in zip(xs, xs[1:])):
                raise PotentialError("tabulated potential needs increasing xs and matching us")
        else:
            raise PotentialError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def gaussian(cls, sigma=1.0):
        return cls("gaussian", sigma=float(sigma))

    @classmethod
    def polynomial(cls, coefficients):
        return cls("polynomial", coefficients=tuple(coefficients))

    @classmethod
    def tabulated(cls, xs, us):
        return cls("tabulated", xs=tuple(xs), us=tuple(us))

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "gaussian":
            return x * x / (2.0 * self.sigma**2)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(x, self.coefficients)
        xs = np.asarray(self.xs)
        u = np.interp(x, xs, np.asarray(self.us))
        return np.where((x < xs[0]) | (x > xs[-1]), np.inf, u)

    @property
    def key(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian(sigma={self.sigma!r})"
        if self.kind == "polynomial":
            return f"polynomial{self.coefficients!r}"
        digest = hashlib.sha256(repr((self.xs, self.us)).encode()).hexdigest()[:16]
        return f"tabulated({digest})"


@dataclass(frozen=True)
class WeightedMeasure:
    """``e^{-exponent U(x)} dx`` plus point masses ``(zeta, c)``.

    ``exponent=None`` means no continuous part.
    """

    potential: Potential
    exponent: Optional[float]
    atoms: tuple = ()

    def __post_init__(self):
        if self.exponent is not None and not self.exponent > 0:
            raise ValueError("weight exponent must be positive")
        atoms = tuple((float(z), float(c)) for z, c in self.atoms)
        if any(not np.isfinite(c) for _, c in atoms):
            raise ValueError("point-mass coefficients must be finite")
        object.__setattr__(self, "atoms", atoms)

    def weight(self, x):
        if self.exponent is None:
            return np.zeros_like(np.asarray(x, dtype=np.float64))
        return np.exp(-self.exponent * self.potential(x))

    def continuous(self) -> "WeightedMeasure":
        return WeightedMeasure(self.potential, self.exponent)


@dataclass(frozen=True)
class QuadratureScheme:
    """Integration settings.

    ``method``: ``"panels"`` (composite Gauss-Legendre, doubled until stable)
    or ``"adaptive"`` (QUADPACK).  ``radius=None`` picks ``R`` from the
    weight's tail.  ``max_subdivisions`` caps the panel count / QUADPACK
    subintervals.
    """

    method: str = "panels"
    radius: Optional[float] = None
    rtol: float = 1e-12
    max_subdivisions: int = 512
    order: int = 20
    min_panels: int = 8
    multidim_rtol: float = 1e-9

    def __post_init__(self):
        if self.method not in ("panels", "adaptive"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("truncation radius must be positive")
        if not 0 < self.rtol < 1 or not 0 < self.multidim_rtol < 1:
            raise ValueError("tolerances must lie in (0, 1)")
        if self.max_subdivisions < self.min_panels:
            raise ValueError("max_subdivisions below min_panels")

    @property
    def key(self) -> str:
        return (
            f"{self.method}|R={self.radius!r}|rtol={self.rtol!r}|"
            f"max={self.max_subdivisions}|order={self.order}|min={self.min_panels}"
        )


DEFAULT_SCHEME = QuadratureScheme()


# ---------------------------------------------------------------------------
# truncation radius
# ---------------------------------------------------------------------------


def auto_radius(measure: WeightedMeasure, degree: int = 0) -> float:
    """Smallest ``R`` with ``w(x)(1+|x|)^degree < 1e-16 * peak`` for ``|x| >= R``."""
    if measure.exponent is None:
        return 1.0
    grid = np.linspace(0.0, _R_MAX, 16001)
    both = np.concatenate([-grid[::-1], grid])
    with np.errstate(over="ignore", invalid="ignore"):
        logw = -measure.exponent * measure.potential(both)
    logw = np.where(np.isnan(logw), -np.inf, logw)
    g = logw + degree * np.log1p(np.abs(both))
    peak = g.max()
    if not np.isfinite(peak):
        raise PotentialError("weight vanishes everywhere on the search grid")
    big = np.flatnonzero(g >= peak - _TAIL_LOG)
    R = float(np.abs(both[big]).max())
    if R >= _R_MAX * 0.999:
        raise PotentialError(
            f"weight tail does not decay fast enough (degree {degree}) within |x| <= {_R_MAX}"
        )
    return max(R + 0.25, 1.0)


def scheme_radius(s: QuadratureScheme, measures: Sequence[WeightedMeasure], degree: int) -> float:
    if s.radius is not None:
        return float(s.radius)
    return max(auto_radius(m, degree) for m in measures)


# ---------------------------------------------------------------------------
# single integrals
# ---------------------------------------------------------------------------


def _panel_rule(a, b, panels, order):
    xi, wi = leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    w = (half[:, None] * wi[None, :]).ravel()
    return x, w, edges


def _as_rows(vals, n_x):
    vals = np.asarray(vals, dtype=np.float64)
    if vals.ndim == 0:
        return np.full((1, n_x), float(vals))
    return vals.reshape(-1, n_x) if vals.ndim > 1 else vals[None, :]


def integrate_weighted_batch(fs: Callable, m: WeightedMeasure, s: QuadratureScheme = DEFAULT_SCHEME,
                             degree: int = 0):
    """``int f_i dnu + sum_a c_a f_i(zeta_a)`` for every row of ``fs(x)``.

    ``fs`` maps a point array of shape ``(n,)`` to values ``(n_f, n)``.
    Returns ``(values, error_bound)`` with ``values`` of shape ``(n_f,)``.
    """
    atoms_val = 0.0
    if m.atoms:
        z = np.array([a for a, _ in m.atoms])
        c = np.array([c for _, c in m.atoms])
        atoms_val = _as_rows(fs(z), z.shape[0]) @ c
    if m.exponent is None:
        return np.atleast_1d(atoms_val), 0.0
    R = scheme_radius(s, [m], degree)
    if s.method == "adaptive":
        vals, err = _adaptive_batch(fs, m, s, R)
        return vals + atoms_val, err
    prev = None
    panels = s.min_panels
    while panels <= s.max_subdivisions:
        x, w, _ = _panel_rule(-R, R, panels, s.order)
        wx = w * m.weight(x)
        F = _as_rows(fs(x), x.shape[0])
        cur = F @ wx
        scale = np.abs(F) @ wx
        if prev is not None:
            diff = np.abs(cur - prev)
            if np.all(diff <= s.rtol * scale + 1e-300):
                return cur + atoms_val, float(diff.max(initial=0.0))
        prev = cur
        panels *= 2
    raise QuadratureError(
        f"panel quadrature did not converge with {s.max_subdivisions} panels",
        estimate=prev + atoms_val,
        error_bound=float(np.abs(cur - prev).max(initial=0.0)) if prev is not None else None,
    )


def _adaptive_batch(fs, m, s, R):
    probe = _as_rows(fs(np.zeros(1)), 1)
    out = np.empty(probe.shape[0])
    worst = 0.0
    for i in range(probe.shape[0]):
        def integrand(x, i=i):
            return float(_as_rows(fs(np.array([x])), 1)[i, 0] * m.weight(x))

        val, err, info = sp_integrate.quad(
            integrand, -R, R, epsabs=0.0, epsrel=max(s.rtol, 5e-14), limit=s.max_subdivisions, full_output=1
        )[:3]
        if err > max(s.rtol, 5e-14) * max(abs(val), 1e-300) * 10 and "message" in info:
            raise QuadratureError("adaptive quadrature did not converge", estimate=val, error_bound=err)
        out[i] = val
        worst = max(worst, err)
    return out, worst


def integrate_weighted(f: Callable, m: WeightedMeasure, s: QuadratureScheme = DEFAULT_SCHEME,
                       degree: int = 0) -> float:
    """``int f(x) e^{-exponent U(x)} dx + sum c f(zeta)``."""
    vals, _ = integrate_weighted_batch(lambda x: f(x), m, s, degree)
    return float(vals[0])


# ---------------------------------------------------------------------------
# sgn-kernel double integrals
# ---------------------------------------------------------------------------


def _cumulative_on_nodes(fs, weight, R, panels, order):
    """Outer nodes/weights and ``F_i(y) = int_{-R}^{y} w f_i`` at those nodes."""
    xi, wi = leggauss(order)
    x, wts, edges = _panel_rule(-R, R, panels, order)
    wf = _as_rows(fs(x), x.shape[0]) * weight(x)
    n_f = wf.shape[0]
    panel_int = (wf * wts).reshape(n_f, panels, order).sum(axis=2)
    starts = np.concatenate([np.zeros((n_f, 1)), np.cumsum(panel_int, axis=1)[:, :-1]], axis=1)
    a = edges[:-1][:, None]
    y = x.reshape(panels, order)
    half = 0.5 * (y - a)
    inner = (a + half)[:, :, None] + half[:, :, None] * xi[None, None, :]
    inner_w = half[:, :, None] * wi[None, None, :]
    flat = inner.ravel()
    vals = _as_rows(fs(flat), flat.shape[0]) * weight(flat)
    partial = (vals.reshape(n_f, panels, order, order) * inner_w[None]).sum(axis=3)
    F = starts[:, :, None] + partial
    total = panel_int.sum(axis=1)
    return x, wts, F.reshape(n_f, -1), total


def _cumulative_at(fs, weight, R, panels, order, points):
    """``int_{-R}^{z} w f_i`` at arbitrary points ``z``."""
    xi, wi = leggauss(order)
    x, wts, edges = _panel_rule(-R, R, panels, order)
    wf = _as_rows(fs(x), x.shape[0]) * weight(x)
    n_f = wf.shape[0]
    panel_int = (wf * wts).reshape(n_f, panels, order).sum(axis=2)
    cum = np.concatenate([np.zeros((n_f, 1)), np.cumsum(panel_int, axis=1)], axis=1)
    z = np.clip(np.asarray(points, dtype=np.float64), -R, R)
    p = np.clip(np.searchsorted(edges, z, side="right") - 1, 0, panels - 1)
    a = edges[p]
    half = 0.5 * (z - a)
    nodes = (a + half)[:, None] + half[:, None] * xi[None, :]
    vals = _as_rows(fs(nodes.ravel()), nodes.size) * weight(nodes.ravel())
    part = (vals.reshape(n_f, z.shape[0], order) * (half[:, None] * wi[None, :])[None]).sum(axis=2)
    return cum[:, p] + part


def sgn_kernel_matrix(fs: Callable, gs: Callable, m: WeightedMeasure, s: QuadratureScheme = DEFAULT_SCHEME,
                      degree: int = 0):
    """``A[i, j] = 1/2 int int f_i(x) g_j(y) sgn(y - x) dmu(x) dmu(y)``.

    ``mu`` is the continuous weight plus the point masses of ``m``.  Computed
    as ``1/2 int g_j(y) [2 F_i(y) - F_i(inf)] w(y) dy`` with ``F_i`` the
    cumulative inner integral.  Returns ``(matrix, error_bound)``.
    """
    if s.radius is None and m.exponent is None:
        R = 1.0
    else:
        R = scheme_radius(s, [m], degree)
    scale = _sgn_kernel_scale(fs, gs, m, R, s)
    prev = None
    panels = s.min_panels
    while panels <= s.max_subdivisions:
        cur = _sgn_kernel_once(fs, gs, m, R, panels, s.order)
        if prev is not None:
            diff = np.abs(cur - prev).max(initial=0.0)
            if diff <= s.rtol * max(scale, 1e-300) * 10 or m.exponent is None:
                return cur, float(diff)
        prev = cur
        panels *= 2
    raise QuadratureError(
        f"sgn-kernel quadrature did not converge with {s.max_subdivisions} panels",
        estimate=prev, error_bound=float(np.abs(cur - prev).max()) if prev is not None else None,
    )


def _sgn_kernel_scale(fs, gs, m, R, s):
    """``1/2 int|f| dmu * int|g| dmu`` maximised over rows; bounds every entry."""
    total_f = total_g = 0.0
    if m.exponent is not None:
        x, w, _ = _panel_rule(-R, R, 4 * s.min_panels, s.order)
        wx = w * m.weight(x)
        total_f = np.abs(_as_rows(fs(x), x.shape[0])) @ wx
        total_g = np.abs(_as_rows(gs(x), x.shape[0])) @ wx
    if m.atoms:
        z = np.array([a for a, _ in m.atoms])
        c = np.abs(np.array([c for _, c in m.atoms]))
        total_f = total_f + np.abs(_as_rows(fs(z), z.shape[0])) @ c
        total_g = total_g + np.abs(_as_rows(gs(z), z.shape[0])) @ c
    return 0.5 * float(np.max(total_f, initial=0.0)) * float(np.max(total_g, initial=0.0))


def _sgn_kernel_once(fs, gs, m, R, panels, order):
    weight = m.weight
    y, wts, F, Finf = _cumulative_on_nodes(fs, weight, R, panels, order)
    _, _, Gc, Ginf = _cumulative_on_nodes(gs, weight, R, panels, order)
    G = _as_rows(gs(y), y.shape[0]) * (wts * weight(y))
    out = 0.5 * (2.0 * F - Finf[:, None]) @ G.T
    if not m.atoms:
        return out
    z = np.array([a for a, _ in m.atoms])
    c = np.array([c for _, c in m.atoms])
    fz = _as_rows(fs(z), z.shape[0])
    gz = _as_rows(gs(z), z.shape[0])
    if m.exponent is not None:
        Fz = _cumulative_at(fs, weight, R, panels, order, z)
        Gz = _cumulative_at(gs, weight, R, panels, order, z)
        # continuous x, atomic y
        out += 0.5 * (2.0 * Fz - Finf[:, None]) @ (gz * c).T
        # atomic x, continuous y
        out += 0.5 * (fz * c) @ (Ginf[:, None] - 2.0 * Gz).T
    sg = np.sign(z[None, :] - z[:, None])  # sgn(zeta_b - zeta_a)
    out += 0.5 * (fz * c) @ sg @ (gz * c).T
    return out


def integrate_sgn_kernel(f: Callable, g: Callable, m: WeightedMeasure, s: QuadratureScheme = DEFAULT_SCHEME,
                         degree: int = 0) -> float:
    """``1/2 int int w(x) w(y) f(x) g(y) sgn(y - x) dx dy`` (plus point-mass terms)."""
    mat, _ = sgn_kernel_matrix(f, g, m, s, degree)
    return float(mat[0, 0])


# ---------------------------------------------------------------------------
# multidimensional integrals
# ---------------------------------------------------------------------------


@dataclass
class MultiResult:
    value: float
    error: float
    method: str
    evaluations: int = 0
    detail: dict = field(default_factory=dict)


def _ordered_rule(a, b, k, xi, wi):
    """Nested rule for ``a < x_1 < ... < x_k < b``: nodes ``(n^k, k)``, weights."""
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    lower = np.full(1, float(a))
    for _ in range(k):
        half = 0.5 * (b - lower)[:, None]
        x = lower[:, None] + half * (xi[None, :] + 1.0)
        w = wts[:, None] * half * wi[None, :]
        n = xi.shape[0]
        pts = np.concatenate([np.repeat(pts, n, axis=0), x.reshape(-1, 1)], axis=1)
        wts = w.ravel()
        lower = x.ravel()
    return pts, wts


def _box_rule(edges, xi, wi):
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        xs.append(a + half * (xi + 1.0))
        ws.append(half * wi)
    return np.concatenate(xs), np.concatenate(ws)


def _distinct_arrangements(labels):
    """Distinct orderings of a label multiset."""
    counts = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    out = []

    def rec(prefix, remaining):
        if not any(remaining.values()):
            out.append(tuple(prefix))
            return
        for lab in sorted(remaining):
            if remaining[lab]:
                remaining[lab] -= 1
                prefix.append(lab)
                rec(prefix, remaining)
                prefix.pop()
                remaining[lab] += 1

    rec([], dict(counts))
    return out


def _sector_rules(d, edges, kinks, exchangeable, xi, wi):
    """Yield rule pieces covering ``[-R, R]^d``.

    With kinks, each coordinate is assigned an interval between consecutive
    edges; coordinates sharing an interval are integrated over ordered
    simplices.  Exchangeable coordinates only need canonical (nondecreasing)
    interval assignments, each weighted by ``prod_label n_label!``.
    """
    n_int = len(edges) - 1
    if not kinks:
        x1, w1 = _box_rule(edges, xi, wi)
        yield ("box", [x1] * d, [w1] * d)
        return
    labels = list(exchangeable) if exchangeable is not None else list(range(d))
    classes = {}
    for coord, lab in enumerate(labels):
        classes.setdefault(lab, []).append(coord)
    class_list = sorted(classes.items(), key=lambda kv: kv[1][0])
    factor = 1
    for _, coords in class_list:
        factor *= factorial(len(coords))
    simplex_cache = {}
    per_class = [combinations_with_replacement(range(n_int), len(c)) for _, c in class_list]
    for choice in product(*[list(it) for it in per_class]):
        groups = {}
        for (_, coords), ivs in zip(class_list, choice):
            for coord, iv in zip(coords, ivs):
                groups.setdefault(iv, []).append(coord)
        pieces = []
        for iv, coords in sorted(groups.items()):
            key = (iv, len(coords))
            if key not in simplex_cache:
                simplex_cache[key] = _ordered_rule(edges[iv], edges[iv + 1], len(coords), xi, wi)
            arrangements = _distinct_arrangements([labels[c] for c in coords])
            pieces.append((coords, arrangements, simplex_cache[key]))
        for pick in product(*[p[1] for p in pieces]):
            parts = []
            for (coords, _, (pts, wts)), arrangement in zip(pieces, pick):
                pool = {}
                for c in coords:
                    pool.setdefault(labels[c], []).append(c)
                order = [pool[lab].pop(0) for lab in arrangement]
                parts.append((order, pts, wts))
            yield ("sector", parts, factor)


def _evaluate_piece(kind, a, b, h, weights, d):
    total = 0.0
    abs_total = 0.0
    count = 0
    if kind == "box":
        xs, ws = a, b
        sizes = [x.shape[0] for x in xs]
        n_tot = int(np.prod(sizes))
        for start in range(0, n_tot, _CHUNK):
            idx = np.unravel_index(np.arange(start, min(n_tot, start + _CHUNK)), sizes)
            X = np.column_stack([xs[i][idx[i]] for i in range(d)])
            W = np.prod([ws[i][idx[i]] for i in range(d)], axis=0)
            v = h(X) * W * weights(X)
            total += v.sum()
            abs_total += np.abs(v).sum()
            count += X.shape[0]
        return total, abs_total, count
    parts = a
    sizes = [p[1].shape[0] for p in parts]
    n_tot = int(np.prod(sizes))
    for start in range(0, n_tot, _CHUNK):
        idx = np.unravel_index(np.arange(start, min(n_tot, start + _CHUNK)), sizes)
        X = np.empty((idx[0].shape[0], d))
        W = np.ones(idx[0].shape[0])
        for (order, pts, wts), ix in zip(parts, idx):
            X[:, order] = pts[ix]
            W *= wts[ix]
        v = h(X) * W * weights(X) * b
        total += v.sum()
        abs_total += np.abs(v).sum()
        count += X.shape[0]
    return total, abs_total, count


def _quad_multidim(h, measures, R, breakpoints, kinks, exchangeable, panels, order, nodes_fn):
    d = len(measures)
    grid = np.linspace(-R, R, panels + 1)
    extra = [float(p) for p in breakpoints if -R < p < R]
    edges = np.unique(np.concatenate([grid, extra]))
    xi, wi = nodes_fn(order)

    def weights(X):
        out = np.ones(X.shape[0])
        for i, m in enumerate(measures):
            out *= m.weight(X[:, i])
        return out

    total = abs_total = 0.0
    count = 0
    for kind, a, b in _sector_rules(d, edges, kinks, exchangeable, xi, wi):
        t, at, c = _evaluate_piece(kind, a, b, h, weights, d)
        total += t
        abs_total += at
        count += c
    return total, abs_total, count


def _leggauss_np(n):
    return leggauss(n)


def _leggauss_scipy(n):
    x, w = roots_legendre(n)
    return np.asarray(x), np.asarray(w)


def _quad_levels(d):
    """(panels, nodes per panel) refinement ladder by dimension."""
    if d <= 3:
        return ((8, 8), (8, 12), (16, 12), (16, 16))
    return ((8, 8), (8, 12), (12, 12))


def integrate_multidim(h: Callable, measures: Sequence[WeightedMeasure], s: QuadratureScheme = DEFAULT_SCHEME,
                       *, kinks: bool = False, breakpoints: Sequence[float] = (),
                       exchangeable: Optional[Sequence] = None, degree: int = 8,
                       method: str = "quadrature", n_samples: int = 400_000, seed: int = 0,
                       shards: int = 4, paranoid: bool = False) -> MultiResult:
    """``int h(x) prod_i w_i(x_i) dx`` over ``R^d``.

    ``kinks`` declares ``|x_i - x_j|`` non-smoothness; the domain is then
    split into ordered sectors.  ``breakpoints`` are fixed coordinate values
    where ``h`` may kink (e.g. ``|x - zeta|``).  ``exchangeable`` labels
    coordinates that ``h`` treats symmetrically, so only distinct sectors
    are integrated (with multiplicity).  ``method="montecarlo"`` samples
    each coordinate from its own weight and reports a standard error.
    """
    d = len(measures)
    if d == 0:
        return MultiResult(float(h(np.zeros((1, 0)))[0]), 0.0, "closed-form", 1)
    if method == "montecarlo":
        if d > MAX_MC_DIM:
            raise ValueError(f"dimension {d} exceeds the Monte Carlo cap {MAX_MC_DIM}")
        return _monte_carlo(h, measures, s, degree, n_samples, seed, shards)
    if method != "quadrature":
        raise ValueError(f"unknown multidimensional method {method!r}")
    if d > MAX_QUAD_DIM:
        raise ValueError(f"dimension {d} exceeds the quadrature cap {MAX_QUAD_DIM}; use Monte Carlo")
    R = scheme_radius(s, measures, degree)
    if paranoid:
        lo, _, _ = _quad_multidim(h, measures, R, breakpoints, kinks, exchangeable, 10, 9, _leggauss_scipy)
        hi, _, n = _quad_multidim(h, measures, R, breakpoints, kinks, exchangeable, 10, 13, _leggauss_scipy)
        return MultiResult(hi, abs(hi - lo), "quadrature-fixed", n, {"panels": 10, "order": 13, "R": R})
    prev = None
    evals = 0
    for panels, order in _quad_levels(d):
        cur, scale, n = _quad_multidim(h, measures, R, breakpoints, kinks, exchangeable, panels, order, _leggauss_np)
        evals += n
        if prev is not None:
            err = abs(cur - prev)
            if err <= s.multidim_rtol * max(scale, 1e-300):
                return MultiResult(cur, err, "quadrature", evals, {"panels": panels, "order": order, "R": R})
        prev = cur
    detail = {"panels": panels, "order": order, "R": R, "converged": False}
    return MultiResult(cur, abs(cur - prev), "quadrature", evals, detail)


class _Sampler:
    """Draws from the normalised weight of one measure; returns density ratios."""

    def __init__(self, m: WeightedMeasure, s: QuadratureScheme, degree: int):
        self.m = m
        pot = m.potential
        if pot.kind == "gaussian":
            self.var = pot.sigma**2 / m.exponent
            self.norm = sqrt(2 * pi * self.var)
            self.grid = None
            return
        R = scheme_radius(s, [m], degree)
        self.grid = np.linspace(-R, R, 8193)
        w = m.weight(self.grid)
        cell = 0.5 * (w[1:] + w[:-1]) * np.diff(self.grid)
        self.cdf = np.concatenate([[0.0], np.cumsum(cell)])
        self.total = self.cdf[-1]
        self.cdf /= self.total
        self.cell_density = cell / self.total / np.diff(self.grid)

    def draw(self, rng, n):
        """Samples and ``w(x) / q(x)`` where ``q`` is the sampling density."""
        if self.grid is None:
            x = rng.normal(0.0, sqrt(self.var), n)
            return x, np.full(n, self.norm)
        u = rng.random(n)
        x = np.interp(u, self.cdf, self.grid)
        cell = np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, len(self.cell_density) - 1)
        q = self.cell_density[cell]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(q > 0, self.m.weight(x) / q, 0.0)
        return x, ratio


def _monte_carlo(h, measures, s, degree, n_samples, seed, shards):
    samplers = [_Sampler(m, s, degree) for m in measures]
    seeds = np.random.SeedSequence(seed).spawn(shards)
    per = [n_samples // shards + (1 if i < n_samples % shards else 0) for i in range(shards)]

    def run(i):
        rng = np.random.default_rng(seeds[i])
        n = per[i]
        X = np.empty((n, len(measures)))
        ratio = np.ones(n)
        for k, smp in enumerate(samplers):
            X[:, k], r = smp.draw(rng, n)
            ratio *= r
        v = h(X) * ratio
        return v.sum(), (v * v).sum(), n

    with ThreadPoolExecutor(max_workers=shards) as pool:
        results = list(pool.map(run, range(shards)))
    s1 = sum(r[0] for r in results)
    s2 = sum(r[1] for r in results)
    n = sum(r[2] for r in results)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    return MultiResult(mean, sqrt(var / n), "monte-carlo", n, {"seed": seed, "shards": shards})
