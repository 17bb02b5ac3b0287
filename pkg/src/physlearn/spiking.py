"""Limit-cycle spiking neurons built from a switch coupled to a damped oscillator.

State ``(v, x, y)``: ``v`` relaxes towards ``-tanh(x)`` at rate ``2 gamma cosh(x)``
(the mean-field two-state switch with ``mu = gamma e^-x``, ``nu = gamma e^x``),
and ``x, y`` form an oscillator kicked by ``chi (v - epsilon)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.special import expit

from .core import NumericalAbort, RngStream, Trajectory, as_generator, n_steps_for

# cosh overflows past this; the relaxation is instantaneous long before
_X_CAP = 700.0


@dataclass
class SpikingNeuron:
    gamma: float = 1.0
    kappa: float = 1.0
    chi: float = 40.0
    epsilon: float = 0.1
    sigma: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0 or self.kappa <= 0:
            raise ValueError("gamma and kappa must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


@dataclass
class LifSynapse:
    """Leaky integrator ``dJ = -k^2 J dt + k sum_l w_l h_tau (1 + v_l) dt + k sqrt(sigma) dW``."""

    k: float = 0.01
    weights: np.ndarray = field(default_factory=lambda: np.ones(1))
    tau: float = 20.0
    alpha: float = 1.0
    J0: float = 0.0
    beta_s: float = 1.0
    sigma: float = 0.0
    J: float = 0.0

    def __post_init__(self):
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if self.k <= 0 or self.alpha <= 0:
            raise ValueError("k and alpha must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


@dataclass
class PeriodStats:
    periods: np.ndarray
    mean: float
    variance: float
    wald_mean: float
    wald_shape: float

    def wald(self):
        """Frozen scipy inverse-Gaussian with the moment-matched parameters."""
        return stats.invgauss(self.wald_mean / self.wald_shape, scale=self.wald_shape)


def _on_grid(schedule, times, default):
    if schedule is None:
        return np.full(times.size, float(default))
    if not callable(schedule):
        return np.full(times.size, float(schedule))
    values = np.asarray(schedule(times), dtype=float)
    if values.shape != times.shape:
        values = np.array([float(schedule(t)) for t in times])
    return values


def simulate_neuron(neuron: SpikingNeuron, dt=1e-3, t_end=100.0, rng=None, chi_schedule=None,
                    eps_schedule=None, state0=(0.0, 0.1, 0.0), mode="mean_field",
                    record_every=1) -> Trajectory:
    """Integrate one neuron; returns channels ``v, x, y``.

    ``v`` uses the exact exponential update for frozen ``x`` (its relaxation is
    stiff when ``|x|`` is large); ``x, y`` use Euler-Maruyama with the thermal
    force ``sqrt(sigma) dW`` on ``y``. ``mode="jump"`` replaces the mean-field
    ``v`` by a telegraph variable flipping with probability ``1 - exp(-rate dt)``.
    ``chi_schedule``/``eps_schedule`` are functions of time (vectorised or not).
    """
    if mode not in ("mean_field", "jump"):
        raise ValueError("mode must be 'mean_field' or 'jump'")
    n = n_steps_for(dt, t_end)
    grid = np.arange(n) * dt
    chi = _on_grid(chi_schedule, grid, neuron.chi)
    eps = _on_grid(eps_schedule, grid, neuron.epsilon)
    gen = as_generator(rng if rng is not None else 0)
    noise = gen.standard_normal(n) * math.sqrt(neuron.sigma * dt) if neuron.sigma else np.zeros(n)
    uniforms = gen.random(n) if mode == "jump" else None
    keep = np.unique(np.r_[np.arange(0, n + 1, record_every), n])
    out = np.empty((keep.size, 3))
    v, x, y = (float(s) for s in state0)
    if mode == "jump":
        v = 1.0 if v >= 0 else -1.0
    out[0] = v, x, y
    g, kap = neuron.gamma, neuron.kappa
    k = 1
    for i in range(n):
        xc = min(abs(x), _X_CAP)
        if mode == "mean_field":
            v_eq = -math.tanh(x)
            v = v_eq + (v - v_eq) * math.exp(-2.0 * g * math.cosh(xc) * dt)
        else:
            rate = g * math.exp(-x if v < 0 else x) if xc < _X_CAP else math.inf
            if uniforms[i] < -math.expm1(-rate * dt):
                v = -v
        x, y = x + y * dt, y + (-x - kap * y + chi[i] * (v - eps[i])) * dt + noise[i]
        if not (math.isfinite(x) and math.isfinite(y)):
            raise NumericalAbort("neuron state diverged", t=(i + 1) * dt, state=[v, x, y])
        if k < keep.size and keep[k] == i + 1:
            out[k] = v, x, y
            k += 1
    return Trajectory(keep * dt, {"v": out[:, 0], "x": out[:, 1], "y": out[:, 2]},
                      rng if isinstance(rng, RngStream) else None)


def amplitude(x):
    """Oscillation amplitude estimate ``sqrt(2) * std(x)``."""
    return float(np.sqrt(2.0) * np.std(x))


def spike_times(x, times, band=None):
    """Upward zero crossings of ``x`` with hysteresis and linear interpolation.

    A crossing counts only if ``x`` dipped below ``-band`` since the last one;
    ``band`` defaults to a tenth of :func:`amplitude`.
    """
    x = np.asarray(x, dtype=float)
    times = np.asarray(times, dtype=float)
    if band is None:
        band = 0.1 * amplitude(x)
    up = np.flatnonzero((x[:-1] < 0) & (x[1:] >= 0))
    below = np.r_[0, np.cumsum(x < -band)]
    out = []
    last = 0
    for i in up:
        if below[i + 1] - below[last] > 0:
            frac = -x[i] / (x[i + 1] - x[i])
            out.append(times[i] + frac * (times[i + 1] - times[i]))
            last = i + 1
    return np.array(out)


def period_statistics(x, times, band=None) -> PeriodStats:
    """Cycle periods from :func:`spike_times` and a moment-matched Wald fit."""
    crossings = spike_times(x, times, band)
    if crossings.size < 2:
        raise ValueError("no cycles: fewer than two upward crossings")
    periods = np.diff(crossings)
    mean = float(periods.mean())
    var = float(periods.var(ddof=1)) if periods.size > 1 else 0.0
    shape = mean ** 3 / var if var > 0 else math.inf
    return PeriodStats(periods, mean, var, mean, shape)


def wald_gof(periods, bins=20):
    """Chi-square p-value of a moment-matched inverse Gaussian on equiprobable bins."""
    periods = np.asarray(periods, dtype=float)
    mean, var = periods.mean(), periods.var(ddof=1)
    shape = mean ** 3 / var
    dist = stats.invgauss(mean / shape, scale=shape)
    edges = dist.ppf(np.linspace(0.0, 1.0, bins + 1))
    edges[0], edges[-1] = 0.0, np.inf
    observed, _ = np.histogram(periods, edges)
    expected = periods.size / bins
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    # two fitted parameters
    return float(stats.chi2.sf(chi2, bins - 3))


def wald_pdf(T, r_star, sigma):
    """Period density with mean ``2 pi`` and variance ``2 pi sigma / r_star``."""
    if sigma <= 0 or r_star <= 0:
        raise ValueError("sigma and r_star must be positive")
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise ValueError("T must be positive")
    shape = 4.0 * math.pi ** 2 * r_star / sigma
    return stats.invgauss.pdf(T, 2.0 * math.pi / shape, scale=shape)


def limit_cycle_radius(chi, kappa, psi0):
    """Averaged radial fixed point ``4 chi cos(psi0) / (pi kappa)``."""
    c = math.cos(psi0)
    if c <= 0:
        raise ValueError("no limit cycle in averaged theory (cos psi0 <= 0)")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return 4.0 * chi * c / (math.pi * kappa)


def radial_rate(r, chi, kappa, psi0):
    """Averaged ``dr/dt``."""
    return -kappa * r / 2.0 + 2.0 * chi * math.cos(psi0) / math.pi


def self_consistent_radius(chi, kappa, gamma):
    """Solve ``r = 4 chi cos(psi0)/(pi kappa)`` with ``cos(psi0) = ln(r/gamma)/r``.

    Returns ``(r, psi0)`` on the branch ``0 < cos(psi0) <= 1`` (largest root).
    """
    c = 4.0 * chi / (math.pi * kappa)
    f = lambda r: r * r - c * math.log(r / gamma)
    r_min = math.sqrt(c / 2.0)
    if r_min <= gamma or f(r_min) >= 0:
        raise ValueError("no self-consistent limit cycle for these parameters")
    hi = r_min
    while f(hi) < 0:
        hi *= 2.0
    r = optimize.brentq(f, r_min, hi, xtol=1e-12)
    cos_psi = math.log(r / gamma) / r
    if not 0 < cos_psi <= 1:
        raise ValueError("self-consistent root outside the physical branch")
    return r, math.acos(cos_psi)


def dissipation_rate(kappa, r):
    """Power lost by the oscillator on a cycle of radius ``r``: ``kappa r^2 / 2``."""
    return kappa * r * r / 2.0


def turn_off(t, tau, alpha):
    """Gate ``h_tau(t) = 1 / (1 + exp(alpha (t - tau)))``."""
    return expit(-alpha * (np.asarray(t, dtype=float) - tau))


def lif_step(synapse: LifSynapse, v_inputs, t, dt, dW, J=None):
    """One Euler-Maruyama step of the synaptic current; returns the new ``J``."""
    J = synapse.J if J is None else J
    v_inputs = np.atleast_1d(np.asarray(v_inputs, dtype=float))
    if v_inputs.shape != synapse.weights.shape:
        raise ValueError("one input per weight expected")
    h = turn_off(t, synapse.tau, synapse.alpha)
    drive = float(np.dot(synapse.weights, 1.0 + v_inputs)) * h
    k = synapse.k
    return J + (-k * k * J + k * drive) * dt + k * math.sqrt(synapse.sigma) * dW


def threshold_coupling(J, chi_base, beta_s, J0):
    """``chi_base / (1 + exp(-beta_s (J - J0)))``."""
    return chi_base * expit(beta_s * (np.asarray(J, dtype=float) - J0))


def rate_encode(M, chi_base, theta):
    """Coupling schedule ``chi_base (1 + theta M(t))`` for a +-1 signal ``M``."""
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    return lambda t: chi_base * (1.0 + theta * np.asarray(M(t), dtype=float))


def square_wave(period):
    """``sign(sin(2 pi t / period))`` with the zeros mapped to +1."""
    def M(t):
        s = np.sign(np.sin(2.0 * math.pi * np.asarray(t, dtype=float) / period))
        return np.where(s == 0, 1.0, s)
    return M


def decode_rate(spikes, edges):
    """Bits from windowed mean inter-spike intervals: shorter period -> +1.

    The decision threshold is midway between the fastest and slowest window.
    """
    spikes = np.asarray(spikes, dtype=float)
    isi = np.diff(spikes)
    mids = spikes[:-1] + isi / 2
    means = np.full(len(edges) - 1, np.nan)
    for i in range(len(edges) - 1):
        sel = (mids >= edges[i]) & (mids < edges[i + 1])
        if sel.any():
            means[i] = isi[sel].mean()
    cut = (np.nanmin(means) + np.nanmax(means)) / 2
    return np.where(means < cut, 1, -1)


@dataclass
class FeedforwardConfig:
    chi: float = 20.0
    kappa: float = 1.0
    gamma: float = 1.0
    epsilon: float = 0.1
    k: float = 0.01
    beta_s: float = 1.0
    lam: float = 10.0
    period: float = 5.0
    tau: float = 20.0
    alpha: float = 1.0
    w: float = 1.0
    J0: float = 0.0
    sigma: float = 0.0
    dt: float = 1e-3
    t_end: float = 60.0


def simulate_feedforward_pair(config: FeedforwardConfig, rng) -> Trajectory:
    """Pre-synaptic signal ``tanh(lam sin(2 pi t / T))`` -> LIF -> thresholded neuron.

    Channels ``v_pre, J, chi_post, v_post, x_post``. The post neuron starts near
    its rest point with a small random displacement drawn from ``rng``.
    """
    c = config
    n = n_steps_for(c.dt, c.t_end)
    times = np.arange(n + 1) * c.dt
    m = np.tanh(c.lam * np.sin(2.0 * math.pi * times / c.period))
    h = turn_off(times, c.tau, c.alpha)
    gen = as_generator(rng)
    x, y = gen.uniform(-0.1, 0.1, 2)
    v = -math.tanh(x)
    sq = math.sqrt(c.sigma * c.dt)
    dW = gen.standard_normal((n, 2)) * sq if c.sigma else np.zeros((n, 2))
    out = np.empty((n + 1, 4))
    J = 0.0
    out[0] = J, c.chi * expit(c.beta_s * (J - c.J0)), v, x
    for i in range(n):
        chi = c.chi * expit(c.beta_s * (J - c.J0))
        v_eq = -math.tanh(x)
        v = v_eq + (v - v_eq) * math.exp(-2.0 * c.gamma * math.cosh(min(abs(x), _X_CAP)) * c.dt)
        x, y = x + y * c.dt, y + (-x - c.kappa * y + chi * (v - c.epsilon)) * c.dt + dW[i, 0]
        J = J + (-c.k ** 2 * J + c.k * c.w * h[i] * (1.0 + m[i])) * c.dt + c.k * dW[i, 1]
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(J)):
            raise NumericalAbort("feed-forward state diverged", t=(i + 1) * c.dt, state=[J, v, x, y])
        out[i + 1] = J, chi, v, x
    return Trajectory(times, {"v_pre": m, "J": out[:, 0], "chi_post": out[:, 1],
                              "v_post": out[:, 2], "x_post": out[:, 3]},
                      rng if isinstance(rng, RngStream) else None)


def post_fired(traj: Trajectory, min_spikes=3, band=0.5):
    """True when the post-synaptic oscillator completes ``min_spikes`` cycles."""
    return spike_times(traj["x_post"], traj.times, band).size >= min_spikes
