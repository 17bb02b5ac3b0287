"""Continuous-time feedback learning of a single weight on a NOT time series.

The weight obeys ``dw = [L x n_T (1 - n^2) - gamma_w w] dt + 2 sqrt(D) dW`` with
``n`` the switch's mean output. For NOT (``x n_T = -1``) and ``n`` at its
sigmoid mean this is gradient flow in

    V(w) = gamma_w w^2 / 2 + (2 L / beta) tanh(beta w / 2)

and the noise amplitude makes ``exp(-V / 2D)`` the exact stationary density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import expit

from .core import NumericalAbort, RngStream, Trajectory, ensemble_map, n_steps_for
from .observer import ReadoutModel, conditional_step

DEFAULT_GRID = np.linspace(-3.0, 3.0, 6001)


def learning_scale(eta, beta):
    """``L = eta beta / 4``."""
    return eta * beta / 4


@dataclass
class ContinuousLearner:
    L: float = 1.0
    gamma_w: float = 1.0
    D: float = 0.05
    beta: float = 2.0
    readout: ReadoutModel = field(default_factory=lambda: ReadoutModel.from_Gamma(1.0))
    switch_rate: float = 200.0

    def __post_init__(self):
        if self.L < 0:
            raise ValueError("L must be non-negative")
        if self.gamma_w <= 0 or self.D <= 0 or self.beta <= 0:
            raise ValueError("gamma_w, D and beta must be positive")


def ou_prior_density(gamma_w, D, grid=DEFAULT_GRID):
    """Stationary density of the feedback-free weight, variance ``2 D / gamma_w``."""
    if gamma_w <= 0 or D <= 0:
        raise ValueError("gamma_w and D must be positive")
    var = 2.0 * D / gamma_w
    grid = np.asarray(grid, dtype=float)
    return np.exp(-grid ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)


def learning_potential(w, x, L, gamma_w, beta):
    """``gamma_w w^2/2 + (2L/(beta x)) tanh(beta w x/2)``; equal for ``x = +-1``."""
    if x not in (-1, 1):
        raise ValueError("x must be +-1")
    w = np.asarray(w, dtype=float)
    return gamma_w * w ** 2 / 2 + 2.0 * L / (beta * x) * np.tanh(beta * w * x / 2)


def not_drift(w, learner: ContinuousLearner, x=1.0):
    """Closed-form NOT drift ``-L sech^2(beta w x / 2) - gamma_w w``."""
    w = np.asarray(w, dtype=float)
    return -learner.L / np.cosh(learner.beta * w * x / 2) ** 2 - learner.gamma_w * w


def weight_fixed_points(a):
    """Roots of ``sech^2(v) + a v = 0``; for ``a > 0`` there is exactly one, in ``[-1/a, 0)``."""
    if not a > 0:
        raise ValueError("a must be positive")
    f = lambda v: 1.0 / math.cosh(v) ** 2 + a * v
    return [optimize.brentq(f, -1.0 / a, 0.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)]


def fixed_point_parameter(learner: ContinuousLearner):
    """``a = 2 gamma_w / (L beta)`` such that ``w* = 2 v* / beta``."""
    return 2.0 * learner.gamma_w / (learner.L * learner.beta)


def fixed_point_weight(learner: ContinuousLearner):
    if learner.L == 0:
        return 0.0
    return 2.0 * weight_fixed_points(fixed_point_parameter(learner))[0] / learner.beta


def stationary_weight_density(learner: ContinuousLearner, x=1, grid=DEFAULT_GRID):
    """Normalised ``exp(-V(w) / 2D)`` on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    logp = -learning_potential(grid, x, learner.L, learner.gamma_w, learner.beta) / (2 * learner.D)
    p = np.exp(logp - logp.max())
    return p / integrate.simpson(p, x=grid)


def density_variance(grid, density):
    mean = integrate.simpson(grid * density, x=grid)
    return float(integrate.simpson((grid - mean) ** 2 * density, x=grid))


def square_signal(period):
    """Training input ``x(t) = +-1`` alternating every half ``period``; starts at +1."""
    return lambda t: np.where(np.floor(2.0 * np.asarray(t, dtype=float) / period) % 2 == 0, 1.0, -1.0)


def simulate_continuous_not(learner: ContinuousLearner, dt=0.01, t_end=10.0, rng=None,
                            n_paths=1, mode="closed_form", w0=None, signal_period=20.0,
                            record_every=None, workers=1) -> Trajectory:
    """Weight paths under NOT feedback; channels ``w``, ``n_c`` and (coupled) ``I_oc``.

    ``closed_form`` uses the instantaneous sigmoid mean ``n = tanh(beta w x / 2)``.
    ``coupled`` instead drives the observer's conditional mean with rates
    ``mu = s expit(beta w x)``, ``nu = s expit(-beta w x)`` (``s`` = switch_rate),
    so ``n_c`` relaxes towards the sigmoid mean under measurement noise.
    ``w0=None`` draws initial weights from :func:`ou_prior_density`.
    """
    if mode not in ("closed_form", "coupled"):
        raise ValueError("mode must be 'closed_form' or 'coupled'")
    if rng is None:
        rng = RngStream(0)
    n = n_steps_for(dt, t_end)
    step_every = n if record_every is None else record_every
    keep = np.unique(np.r_[np.arange(0, n + 1, step_every), n])
    xs = square_signal(signal_period)(np.arange(n + 1) * dt)
    amp = 2.0 * math.sqrt(learner.D * dt)
    sq = math.sqrt(dt)
    L, g, beta = learner.L, learner.gamma_w, learner.beta
    model = learner.readout

    def block(size, gen):
        if w0 is None:
            w = gen.standard_normal(size) * math.sqrt(2 * learner.D / g)
        else:
            w = np.full(size, float(w0))
        nc = np.tanh(beta * w * xs[0] / 2)
        io = np.zeros(size)
        out = {k: np.empty((keep.size, size)) for k in ("w", "n_c", "I_oc")}
        out["w"][0], out["n_c"][0], out["I_oc"][0] = w, nc, io
        k = 1
        for i in range(n):
            x = xs[i]
            n_T = -x
            if mode == "closed_form":
                nc = np.tanh(beta * w * x / 2)
            feedback = L * x * n_T * (1.0 - nc ** 2)
            if mode == "coupled":
                act = beta * w * x
                mu = learner.switch_rate * expit(act)
                nu = learner.switch_rate * expit(-act)
                nc, io = conditional_step(nc, io, mu, nu, model, dt,
                                          gen.standard_normal(size) * sq, (i + 1) * dt)
            w = w + (feedback - g * w) * dt + amp * gen.standard_normal(size)
            if not np.all(np.isfinite(w)):
                raise NumericalAbort("weight diverged", t=(i + 1) * dt)
            if k < keep.size and keep[k] == i + 1:
                out["w"][k], out["n_c"][k], out["I_oc"][k] = w, nc, io
                k += 1
        return out

    res = ensemble_map(block, n_paths, rng, block_size=2048, workers=workers)
    if mode == "closed_form":
        res.pop("I_oc")
    if n_paths == 1:
        res = {k: v[:, 0] for k, v in res.items()}
    return Trajectory(keep * dt, res, rng)


def histogram_tv(samples, grid, density, bins=20, span=None):
    """Total variation between a sample histogram and a density on ``bins`` equal bins.

    ``span`` defaults to the central range holding all but 1e-4 of the density.
    """
    cdf = integrate.cumulative_trapezoid(density, grid, initial=0.0)
    cdf /= cdf[-1]
    if span is None:
        span = (np.interp(5e-5, cdf, grid), np.interp(1 - 5e-5, cdf, grid))
    edges = np.linspace(span[0], span[1], bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    emp = counts / np.size(samples)
    model = np.diff(np.interp(edges, grid, cdf))
    outside = (1.0 - emp.sum()) + (1.0 - model.sum())
    return float(0.5 * (np.abs(emp - model).sum() + outside))
