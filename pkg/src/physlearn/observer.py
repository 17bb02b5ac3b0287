"""Partially observed switches: Bayes readout, conditional-mean filter, QPC dot model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import NumericalAbort, RngStream, Trajectory, as_generator, ensemble_map, n_steps_for
from .switch import dot_rate_preset  # noqa: F401  (re-exported preset)

ESCAPE_TOL = 1e-6
CLAMP = 1e-12


@dataclass
class ReadoutModel:
    """Gaussian readout ``P(x|n)`` and its continuous-time limit.

    ``Gamma`` is derived as ``2 kappa^2 / gamma``. ``decay_exponent`` picks the
    filter decay ``-r**decay_exponent * I``.
    """

    chi: float = 1.0
    Delta: float = 1.0
    kappa: float = 40.0
    gamma: float = 320.0
    r: float = 20.0
    decay_exponent: int = 2

    def __post_init__(self):
        if self.Delta <= 0 or self.gamma <= 0 or self.r <= 0:
            raise ValueError("Delta, gamma and r must be positive")

    @property
    def Gamma(self):
        return 2.0 * self.kappa ** 2 / self.gamma

    @classmethod
    def from_Gamma(cls, Gamma, kappa=40.0, r=20.0, **kw):
        return cls(kappa=kappa, gamma=2.0 * kappa ** 2 / Gamma, r=r, **kw)


@dataclass
class DotQpcModel:
    Gamma_in: float = 1.0
    Gamma_out: float = 1.0
    chi_meas: float = 1.0
    eta: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        if self.Gamma_in < 0 or self.Gamma_out < 0:
            raise ValueError("tunnelling rates must be non-negative")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")


def bayes_update(prior, x, chi, Delta):
    """Posterior ``(p_minus, p_plus)`` after one Gaussian readout ``x``."""
    p_minus, p_plus = (float(p) for p in prior)
    if Delta == math.inf:
        return p_minus, p_plus
    # log-likelihood ratio of n=+1 over n=-1
    llr = 2.0 * chi * x / Delta
    if p_plus == 0.0 or p_minus == 0.0:
        return p_minus, p_plus
    post_plus = float(expit(llr + math.log(p_plus) - math.log(p_minus)))
    return 1.0 - post_plus, post_plus


def readout_stats(p_plus, chi, Delta):
    """Mean and variance of the unconditioned readout."""
    if not 0 <= p_plus <= 1:
        raise ValueError("p_plus must lie in [0, 1]")
    return chi * (2 * p_plus - 1), Delta + 4 * chi ** 2 * p_plus * (1 - p_plus)


def _clamp_interval(z, lo, hi, t):
    bad = (z < lo - ESCAPE_TOL) | (z > hi + ESCAPE_TOL) | ~np.isfinite(z)
    if np.any(bad):
        raise NumericalAbort("filtered state left its interval; reduce dt", t=t,
                             state=z[bad][:5].tolist())
    return np.clip(z, lo + CLAMP, hi - CLAMP)


def conditional_step(n_c, I_oc, mu, nu, model: ReadoutModel, dt, dW, t=0.0, rate_scale=1.0):
    """One Euler-Maruyama step of the conditional mean and the filtered current.

    ``mu`` and ``nu`` may be arrays (per-path rates). The innovation ``dW`` is
    shared by both equations.
    """
    drift_n = rate_scale * (mu * (1.0 - n_c) - nu * (1.0 + n_c))
    n_new = n_c + drift_n * dt + math.sqrt(model.Gamma / 2) * (1.0 - n_c ** 2) * dW
    decay = model.r ** model.decay_exponent
    I_new = (I_oc + (-decay * I_oc + model.r * model.kappa * n_c) * dt
             + model.r * model.kappa * math.sqrt(2.0 / model.Gamma) * dW)
    return _clamp_interval(n_new, -1.0, 1.0, t), I_new


def simulate_conditional(mu, nu, model: ReadoutModel, t_end, dt, rng, n0=0.0, I0=0.0,
                         n_paths=None, record_every=1, rate_scale=1.0, workers=1) -> Trajectory:
    """Conditional mean ``n_c`` and filtered current ``I_oc`` under constant rates.

    With ``n_paths`` the channels carry one column per path.
    """
    if not model.Gamma > 0:
        raise ValueError("Gamma must be positive")
    n = n_steps_for(dt, t_end)
    keep = np.unique(np.r_[np.arange(0, n + 1, record_every), n])
    sq = math.sqrt(dt)

    def block(size, gen):
        nc = np.full(size, float(n0))
        io = np.full(size, float(I0))
        out_n = np.empty((keep.size, size))
        out_i = np.empty((keep.size, size))
        out_n[0], out_i[0] = nc, io
        k = 1
        for i in range(n):
            dW = gen.standard_normal(size) * sq
            nc, io = conditional_step(nc, io, mu, nu, model, dt, dW, (i + 1) * dt, rate_scale)
            if k < keep.size and keep[k] == i + 1:
                out_n[k], out_i[k] = nc, io
                k += 1
        return {"n_c": out_n, "I_oc": out_i}

    times = keep * dt
    if n_paths is None:
        res = block(1, as_generator(rng))
        return Trajectory(times, {"n_c": res["n_c"][:, 0], "I_oc": res["I_oc"][:, 0]},
                          rng if isinstance(rng, RngStream) else None)
    res = ensemble_map(block, n_paths, rng, block_size=2048, workers=workers)
    return Trajectory(times, res, rng)


def master_mean(mu, nu, n0, t):
    """Solution of ``dn/dt = mu (1 - n) - nu (1 + n)``."""
    total = mu + nu
    n_inf = (mu - nu) / total
    return n_inf + (n0 - n_inf) * np.exp(-total * np.asarray(t, dtype=float))


def simulate_dot_qpc(model: DotQpcModel, t_end, dt, rng, s0=0.5, n_paths=None,
                     record_every=1, workers=1) -> Trajectory:
    """Conditional dot occupation ``s_c`` and QPC current ``I_c`` (one value per step)."""
    n = n_steps_for(dt, t_end)
    keep = np.unique(np.r_[np.arange(0, n + 1, record_every), n])
    sq = math.sqrt(dt)

    def block(size, gen):
        s = np.full(size, float(s0))
        out_s = np.empty((keep.size, size))
        out_i = np.empty((keep.size, size))
        out_s[0] = s
        out_i[0] = model.eta * (1 - 2 * model.epsilon * s)
        k = 1
        for i in range(n):
            dW = gen.standard_normal(size) * sq
            current = model.eta * (1 - 2 * model.epsilon * s) + math.sqrt(model.eta) * dW / dt
            s = s + (model.Gamma_in * (1 - s) - model.Gamma_out * s) * dt \
                - 2 * model.chi_meas * s * (1 - s) * dW
            s = _clamp_interval(s, 0.0, 1.0, (i + 1) * dt)
            if k < keep.size and keep[k] == i + 1:
                out_s[k], out_i[k] = s, current
                k += 1
        return {"s_c": out_s, "I_c": out_i}

    times = keep * dt
    if n_paths is None:
        res = block(1, as_generator(rng))
        return Trajectory(times, {k: v[:, 0] for k, v in res.items()},
                          rng if isinstance(rng, RngStream) else None)
    return Trajectory(times, ensemble_map(block, n_paths, rng, block_size=2048, workers=workers),
                      rng)


def dot_mean_occupation(Gamma_in, Gamma_out, s0, t):
    """Average dot occupation from the rate equation."""
    total = Gamma_in + Gamma_out
    s_inf = Gamma_in / total
    return s_inf + (s0 - s_inf) * np.exp(-total * np.asarray(t, dtype=float))
