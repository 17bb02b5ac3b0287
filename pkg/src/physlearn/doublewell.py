"""Overdamped particle in the tilted quartic well ``V(x) = x^2 (x^2 - 1) - lam x``.

Dynamics ``dx = -V'(x) dt + sqrt(2 D) dW`` so the stationary density is
``exp(-V/D)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .core import NumericalAbort, RngStream, Trajectory, as_generator, ensemble_map, n_steps_for

# |lam| at which the left (or right) minimum merges with the barrier top
SADDLE_NODE_BIAS = 4.0 / (3.0 * math.sqrt(6.0))
DEFAULT_GRID = np.linspace(-2.5, 2.5, 5001)


@dataclass
class DoubleWell:
    lam: float = 0.0
    D: float = 0.05

    def __post_init__(self):
        if self.D < 0:
            raise ValueError("D must be non-negative")


def potential(x, lam):
    x = np.asarray(x, dtype=float)
    return x * x * (x * x - 1.0) - lam * x


def force(x, lam):
    """``-V'(x)``."""
    x = np.asarray(x, dtype=float)
    return -(4.0 * x ** 3 - 2.0 * x - lam)


def _as_schedule(bias):
    if callable(bias):
        return bias
    value = float(bias)
    return lambda t: value


def simulate(well: DoubleWell, bias_schedule=None, x0=-1 / math.sqrt(2), dt=1e-3, t_end=10.0,
             rng=None, record_every=1) -> Trajectory:
    """Euler-Maruyama path (or block of paths when ``x0`` is an array).

    ``bias_schedule`` is a function ``lam(t)``; ``None`` uses ``well.lam``.
    """
    lam_of_t = _as_schedule(well.lam if bias_schedule is None else bias_schedule)
    x = np.array(x0, dtype=float, ndmin=1).copy()
    single = np.ndim(x0) == 0
    n = n_steps_for(dt, t_end)
    gen = as_generator(rng if rng is not None else 0)
    amp = math.sqrt(2.0 * well.D * dt)
    keep = list(range(0, n + 1, record_every))
    if keep[-1] != n:
        keep.append(n)
    out = np.empty((len(keep), x.size))
    out[0] = x
    k = 1
    for i in range(n):
        t = i * dt
        x = x + force(x, lam_of_t(t)) * dt
        if amp:
            x = x + amp * gen.standard_normal(x.size)
        if not np.all(np.isfinite(x)):
            raise NumericalAbort("double-well state diverged", t=(i + 1) * dt,
                                 state=x[~np.isfinite(x)][:5].tolist())
        if k < len(keep) and keep[k] == i + 1:
            out[k] = x
            k += 1
    times = np.array(keep) * dt
    data = out[:, 0] if single else out
    return Trajectory(times, {"x": data}, rng if isinstance(rng, RngStream) else None)


def stationary_density(well: DoubleWell, grid=DEFAULT_GRID):
    """Normalised ``exp(-V/D)`` on ``grid``."""
    if not well.D > 0:
        raise ValueError("stationary density needs D > 0 (D = 0 is a point mass)")
    grid = np.asarray(grid, dtype=float)
    log_w = -potential(grid, well.lam) / well.D
    w = np.exp(log_w - log_w.max())
    return w / integrate.simpson(w, x=grid)


def partition_function(lam, D, lo=-3.0, hi=3.0):
    """``int exp(-V/D) dx`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda x: math.exp(-float(potential(x, lam)) / D), lo, hi,
                            epsabs=0, epsrel=1e-12, limit=400,
                            points=[-1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)])
    return val


def well_masses(well: DoubleWell, grid=DEFAULT_GRID):
    """``(P(x < 0), P(x > 0))`` under the stationary density."""
    grid = np.asarray(grid, dtype=float)
    p = stationary_density(well, grid)
    cdf = integrate.cumulative_trapezoid(p, grid, initial=0.0)
    left = float(np.interp(0.0, grid, cdf))
    return left, float(cdf[-1] - left)


def mean_vs_bias(D, lambda_grid, grid=DEFAULT_GRID):
    """Stationary ``<x>`` for each bias in ``lambda_grid``."""
    grid = np.asarray(grid, dtype=float)
    out = []
    for lam in np.atleast_1d(lambda_grid):
        p = stationary_density(DoubleWell(float(lam), D), grid)
        out.append(integrate.simpson(grid * p, x=grid))
    return np.array(out)


def sample_stationary(well: DoubleWell, n, rng, grid=DEFAULT_GRID, stratified=True):
    """Draw ``n`` positions from the stationary density by inverse CDF.

    ``stratified`` places one uniform in each of ``n`` equal slices of [0, 1),
    which removes the binomial scatter of the well occupations.
    """
    grid = np.asarray(grid, dtype=float)
    p = stationary_density(well, grid)
    cdf = integrate.cumulative_trapezoid(p, grid, initial=0.0)
    cdf /= cdf[-1]
    gen = as_generator(rng)
    u = gen.random(n)
    if stratified:
        u = (np.arange(n) + u) / n
        gen.shuffle(u)
    return np.interp(u, cdf, grid)


def stable_points(lam):
    """Left and right minima of V, by bracketed root finding on V'."""
    if abs(lam) >= SADDLE_NODE_BIAS:
        raise ValueError("no bistability: |lambda| beyond the saddle-node value")
    dv = lambda x: 4.0 * x ** 3 - 2.0 * x - lam
    c = 1.0 / math.sqrt(6.0)
    span = 2.0 + abs(lam)
    left = optimize.brentq(dv, -span, -c, xtol=1e-14, rtol=1e-15)
    right = optimize.brentq(dv, c, span, xtol=1e-14, rtol=1e-15)
    return left, right


def kramers_barrier(lam):
    """Energy splitting ``V(x*) - V(y*)`` between the left and right minima."""
    left, right = stable_points(lam)
    return float(potential(left, lam) - potential(right, lam))


def total_variation(samples, density_grid, density, bins):
    """TV distance between a sample histogram and a density on shared bins."""
    edges = np.asarray(bins, dtype=float)
    counts, _ = np.histogram(samples, bins=edges)
    emp = counts / max(len(np.ravel(samples)), 1)
    cdf = integrate.cumulative_trapezoid(density, density_grid, initial=0.0)
    cdf /= cdf[-1]
    model = np.diff(np.interp(edges, density_grid, cdf))
    # mass outside the binned range counts fully against the fit
    outside = (1.0 - emp.sum()) + (1.0 - model.sum())
    return 0.5 * (np.abs(emp - model).sum() + outside)


def ensemble_final(well: DoubleWell, bias_schedule, x0_sampler, dt, t_end, n_paths, rng,
                   workers=1):
    """Final positions of ``n_paths`` independent paths; ``x0_sampler(n, gen)``."""

    def block(size, gen):
        x0 = x0_sampler(size, gen)
        tr = simulate(well, bias_schedule, x0, dt, t_end, gen, record_every=n_steps_for(dt, t_end))
        return {"x": tr["x"][-1]}

    return ensemble_map(block, n_paths, rng, workers=workers)["x"]
