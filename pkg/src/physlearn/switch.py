"""Two-state inhomogeneous Markov activation switch.

State ``n`` is -1 or +1; ``mu`` is the -1 -> +1 rate and ``nu`` the +1 -> -1 rate.
Jump paths are sampled exactly by thinning against a constant ceiling, so no
time step enters any of the switching statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .core import RngStream, Trajectory, as_generator, ensemble_map

SCHEDULE_KINDS = ("constant", "linear_ramp", "sigmoid", "step", "dot_tanh")


@dataclass
class TwoStateSwitch:
    mu: float
    nu: float
    E0: float = 1.0
    n: int = -1

    def __post_init__(self):
        if self.mu < 0 or self.nu < 0:
            raise ValueError("rates must be non-negative")
        if self.n not in (-1, 1):
            raise ValueError("n must be -1 or +1")

    @property
    def energy(self):
        return self.n * self.E0 / 2


@dataclass(frozen=True)
class RateSchedule:
    """Time-dependent rates ``mu(t), nu(t)`` built from base rates.

    ``linear_ramp``, ``sigmoid``: rates interpolate towards the swapped pair,
    ``mu(t) = mu + f(t)(nu - mu)``. ``step``: both rates multiplied by
    ``1 + a*theta(t - t0)``. ``dot_tanh``: quantum-dot preset with the gate swept
    linearly, ``x = t / tau``.
    """

    kind: str
    mu: float
    nu: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.mu < 0 or self.nu < 0:
            raise ValueError("rates must be non-negative")
        if self.kind == "linear_ramp" and not self.params.get("tau", 0) > 0:
            raise ValueError("linear_ramp needs tau > 0")
        if self.kind == "step" and self.params.get("a", 0.0) < -1:
            raise ValueError("step amplitude a must be >= -1")

    @classmethod
    def constant(cls, mu, nu):
        return cls("constant", mu, nu)

    @classmethod
    def linear_ramp(cls, mu, nu, tau):
        return cls("linear_ramp", mu, nu, {"tau": tau})

    @classmethod
    def sigmoid(cls, mu, nu, t0, slope=1.0):
        return cls("sigmoid", mu, nu, {"t0": t0, "slope": slope})

    @classmethod
    def step(cls, mu, nu, t0, a):
        return cls("step", mu, nu, {"t0": t0, "a": a})

    @classmethod
    def dot_tanh(cls, gamma, b, c, tau=1.0):
        return cls("dot_tanh", gamma, gamma, {"b": b, "c": c, "tau": tau})

    def fraction(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "linear_ramp":
            # held at 1 after the ramp so the swapped rates persist
            return np.clip(t / self.params["tau"], 0.0, 1.0)
        if self.kind == "sigmoid":
            z = self.params.get("slope", 1.0) * (t - self.params["t0"])
            return 0.5 * (1.0 + np.tanh(z / 2))
        return np.zeros_like(t)

    def rates(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "step":
            g = 1.0 + self.params["a"] * (t >= self.params["t0"])
            return self.mu * g, self.nu * g
        if self.kind == "dot_tanh":
            x = t / self.params.get("tau", 1.0)
            return dot_rate_preset(self.mu, self.params["b"], self.params["c"], x)
        f = self.fraction(t)
        return self.mu + f * (self.nu - self.mu), self.nu - f * (self.nu - self.mu)

    def rates_at(self, t: float):
        """Scalar ``(mu(t), nu(t))``; same values as :meth:`rates` without array overhead."""
        kind, mu, nu = self.kind, self.mu, self.nu
        if kind == "constant":
            return mu, nu
        if kind == "step":
            g = 1.0 + self.params["a"] * (t >= self.params["t0"])
            return mu * g, nu * g
        if kind == "dot_tanh":
            x = t / self.params.get("tau", 1.0)
            return mu * (1.0 + math.tanh(self.params["b"] * x + self.params["c"])) / 2, mu
        if kind == "linear_ramp":
            f = min(max(t / self.params["tau"], 0.0), 1.0)
        else:
            f = 0.5 * (1.0 + math.tanh(self.params.get("slope", 1.0) * (t - self.params["t0"]) / 2))
        return mu + f * (nu - mu), nu - f * (nu - mu)

    def ceiling(self):
        """Upper bound on ``mu(t) + nu(t)`` over all t."""
        if self.kind == "step":
            return (self.mu + self.nu) * (1.0 + max(self.params["a"], 0.0))
        if self.kind == "dot_tanh":
            return 2.0 * self.mu
        return self.mu + self.nu


def dot_rate_preset(gamma, b, c, x):
    """Quantum-dot gate response: ``mu = gamma (1 + tanh(b x + c)) / 2``, ``nu = gamma``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    mu = gamma * (1.0 + np.tanh(b * np.asarray(x, dtype=float) + c)) / 2
    return mu, np.full_like(mu, float(gamma))


def steady_state(mu, nu):
    """Detailed-balance occupations ``(p_minus, p_plus)``."""
    total = mu + nu
    if not total > 0:
        raise ValueError("mu + nu must be positive for a steady state")
    return nu / total, mu / total


def ramp_propagate(mu, nu, tau):
    """Occupations at the end of a linear rate swap started from steady state."""
    total = mu + nu
    if not total > 0 or not tau > 0:
        raise ValueError("need mu + nu > 0 and tau > 0")
    x = total * tau
    # (1 - e^{-x}) / x, stable for tiny x
    g = -math.expm1(-x) / x
    p_minus = mu / total + (nu - mu) / total * g
    return p_minus, 1.0 - p_minus


def swap_statistics(mu, nu, tau):
    """``(Pr(s=0), Pr(s=1), Pr(s=-1))`` for a linear swap of duration ``tau``.

    ``s = 0`` means no event of the combined (rate ``mu + nu``) Poisson clock;
    otherwise ``s`` is the state set by the last such event. The three values
    sum to one.
    """
    total = mu + nu
    if not total > 0 or not tau > 0:
        raise ValueError("need mu + nu > 0 and tau > 0")
    eta = math.exp(-total * tau)
    tail = (nu - mu) / total * (1.0 + math.expm1(-total * tau) / (total * tau))
    pr_up = mu / total * (1 - eta) + tail
    pr_down = nu / total * (1 - eta) - tail
    return eta, pr_up, pr_down


def mean_work(mu, nu, E0):
    """Mean work per trial for a completed rate swap, ``E0 (nu - mu)/(nu + mu)``."""
    if not mu + nu > 0:
        raise ValueError("mu + nu must be positive")
    return E0 * (nu - mu) / (nu + mu)


def mean_energy_change_finite(mu, nu, E0, tau):
    """Exact mean of ``E(tau) - E(0)`` for the linear swap at finite ``tau``.

    Tends to :func:`mean_work` as ``(mu + nu) tau -> inf``; the correction is
    ``1 - (1 - e^{-(mu+nu)tau}) / ((mu+nu) tau)``.
    """
    x = (mu + nu) * tau
    return mean_work(mu, nu, E0) * (1.0 + math.expm1(-x) / x)


def wait_time_survival(rate_fn, t, breakpoints=()):
    """Survival ``exp(-int_0^t rate)`` by adaptive quadrature."""
    if t <= 0:
        return 1.0
    pts = [p for p in breakpoints if 0 < p < t] or None
    val, _ = integrate.quad(rate_fn, 0.0, t, points=pts, epsabs=1e-12, epsrel=1e-10, limit=200)
    return float(math.exp(-val))


def _sample_block(schedule, n0, t_end, gen, record_occupation=False):
    """Vectorised thinning over a block of paths; returns final-state statistics."""
    m = n0.size
    n = n0.astype(np.int8).copy()
    t = np.zeros(m)
    ceiling = schedule.ceiling()
    fired = np.zeros(m, dtype=bool)
    up = np.zeros(m, dtype=np.int64)
    down = np.zeros(m, dtype=np.int64)
    occ = np.zeros(m)
    if ceiling <= 0:
        occ[:] = np.where(n > 0, t_end, 0.0)
        return {"n": n, "fired": fired, "up": up, "down": down, "occ_plus": occ}
    active = np.arange(m)
    while active.size:
        t_new = t[active] + gen.exponential(1.0 / ceiling, active.size)
        u = gen.random(active.size)
        stop = t_new >= t_end
        if record_occupation:
            span = np.minimum(t_new, t_end) - t[active]
            occ[active] += np.where(n[active] > 0, span, 0.0)
        go = active[~stop]
        tg = t_new[~stop]
        ug = u[~stop]
        mu_t, nu_t = schedule.rates(tg)
        out_rate = np.where(n[go] < 0, mu_t, nu_t)
        fired[go] = True
        jump = ug * ceiling < out_rate
        j = go[jump]
        up[j] += n[j] < 0
        down[j] += n[j] > 0
        n[j] = -n[j]
        t[go] = tg
        active = go
    return {"n": n, "fired": fired, "up": up, "down": down, "occ_plus": occ}


def sample_ensemble(schedule: RateSchedule, t_end, n_paths, rng: RngStream, n0=None,
                    record_occupation=False, workers=1):
    """Final states (and jump counts) of ``n_paths`` independent switches.

    ``n0`` is a fixed initial state, or ``None`` to draw it from the steady state
    of the schedule's rates at t=0.
    """
    mu0, nu0 = (float(r) for r in schedule.rates(0.0))

    def block(size, gen):
        if n0 is None:
            _, p_plus = steady_state(mu0, nu0)
            start = np.where(gen.random(size) < p_plus, 1, -1)
        else:
            start = np.full(size, int(n0))
        res = _sample_block(schedule, start, t_end, gen, record_occupation)
        res["n0"] = start
        return res

    return ensemble_map(block, n_paths, rng, workers=workers)


def simulate_path(switch: TwoStateSwitch, schedule: RateSchedule, t_end, rng) -> Trajectory:
    """Event-sampled path of ``n(t)``: the initial point, every jump, and ``t_end``."""
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    gen = as_generator(rng)
    ceiling = schedule.ceiling()
    t, n = 0.0, switch.n
    times, states = [0.0], [n]
    while ceiling > 0:
        t += gen.exponential(1.0 / ceiling)
        if t >= t_end:
            break
        mu_t, nu_t = schedule.rates_at(t)
        if gen.random() * ceiling < (mu_t if n < 0 else nu_t):
            n = -n
            times.append(t)
            states.append(n)
    if times[-1] < t_end:
        times.append(t_end)
        states.append(n)
    return Trajectory(np.array(times), {"n": np.array(states, dtype=float)},
                      rng if isinstance(rng, RngStream) else None)


def path_value(traj: Trajectory, t):
    """Value of a piecewise-constant event trajectory at times ``t``."""
    idx = np.searchsorted(traj.times, np.asarray(t, dtype=float), side="right") - 1
    return traj["n"][np.clip(idx, 0, len(traj) - 1)]


def occupation_fraction(traj: Trajectory):
    """Fraction of time spent in ``n = +1``."""
    dt = np.diff(traj.times)
    return float(np.sum(dt * (traj["n"][:-1] > 0)) / (traj.times[-1] - traj.times[0]))
