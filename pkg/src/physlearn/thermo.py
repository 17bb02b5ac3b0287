"""Per-trial thermodynamic bookkeeping for learning, and a Jarzynski check on the double well."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, ensemble_map, n_steps_for, write_csv
from .doublewell import DoubleWell, force, partition_function, sample_stationary

LEDGER_HEADER = ["trial", "d_eps", "d_energy", "d_entropy", "d_free"]


def trial_energy_change(eta, n_T, E0, delta_eps):
    """``-2 eta n_T E0 d_eps``."""
    return -2.0 * eta * n_T * E0 * delta_eps


def trial_entropy_change(eta, n_T, beta, A, delta_eps):
    """``eta n_T beta A d_eps``."""
    return eta * n_T * beta * A * delta_eps


@dataclass
class ThermoLedger:
    """Rows of ``(d_eps, d_energy, d_entropy, d_free)``, one per trial.

    ``beta_th=None`` marks a device ("quantum") ledger where ``beta`` is not an
    inverse temperature; there ``d_free`` is left as NaN.
    """

    beta_th: float | None = 1.0
    rows: list = field(default_factory=list)

    def __post_init__(self):
        if self.beta_th is not None and not self.beta_th > 0:
            raise ValueError("beta_th must be positive (or None for a quantum ledger)")

    @property
    def thermal(self):
        return self.beta_th is not None

    def __len__(self):
        return len(self.rows)

    def as_array(self):
        return np.array(self.rows, dtype=float).reshape(-1, 4)

    def cumulative(self):
        return np.cumsum(self.as_array(), axis=0)

    def to_csv(self, path):
        write_csv(path, LEDGER_HEADER, [[i, *row] for i, row in enumerate(self.rows)])


def ledger_step(ledger: ThermoLedger, eta, n_T, E0, beta, A, delta_eps):
    """Append one trial and return the new row."""
    d_energy = trial_energy_change(eta, n_T, E0, delta_eps)
    d_entropy = trial_entropy_change(eta, n_T, beta, A, delta_eps)
    d_free = d_energy - d_entropy / ledger.beta_th if ledger.thermal else math.nan
    row = (float(delta_eps), float(d_energy), float(d_entropy), float(d_free))
    ledger.rows.append(row)
    return row


def jackknife_mean(values, n_blocks=1000):
    """Delete-one-block jackknife standard error of the sample mean."""
    values = np.asarray(values, dtype=float)
    n_blocks = min(values.size, n_blocks)
    if n_blocks < 2:
        return math.inf
    blocks = np.array_split(values, n_blocks)
    sums = np.array([b.sum() for b in blocks])
    counts = np.array([b.size for b in blocks])
    loo = (sums.sum() - sums) / (counts.sum() - counts)
    return float(math.sqrt((n_blocks - 1) / n_blocks * np.sum((loo - loo.mean()) ** 2)))


@dataclass
class JarzynskiResult:
    lhs: float
    rhs: float
    stderr: float
    delta_F: float
    mean_work: float
    n_traj: int

    @property
    def z_score(self):
        return (self.lhs - self.rhs) / self.stderr if self.stderr > 0 else math.inf


def linear_protocol(lam0, lam1, tau):
    """``lam(t)`` rising linearly from ``lam0`` to ``lam1`` over ``tau``."""
    return lambda t: lam0 + (lam1 - lam0) * min(max(t / tau, 0.0), 1.0)


def work_samples(protocol, beta_th, tau, n_traj, dt, rng: RngStream, workers=1):
    """Per-path work ``sum_k (dV/dlam) dlam`` along Euler-Maruyama double-well paths.

    Each step first changes ``lam`` at fixed ``x`` (work ``-x dlam``) and then
    moves ``x`` at fixed ``lam``. Initial positions are thermal at ``lam(0)``.
    """
    D = 1.0 / beta_th
    n = n_steps_for(dt, tau)
    lams = np.array([protocol(k * dt) for k in range(n + 1)])
    amp = math.sqrt(2.0 * D * dt)

    def block(size, gen):
        x = sample_stationary(DoubleWell(lams[0], D), size, gen, stratified=False)
        w = np.zeros(size)
        for k in range(n):
            w -= x * (lams[k + 1] - lams[k])
            x = x + force(x, lams[k + 1]) * dt + amp * gen.standard_normal(size)
        return {"w": w}

    return ensemble_map(block, n_traj, rng, workers=workers)["w"]


def jarzynski_check(protocol, beta_th, tau, n_traj, dt, rng: RngStream, workers=1):
    """Compare ``E[exp(-beta w)]`` with ``exp(-beta dF)`` for a bias protocol.

    ``dF`` comes from quadrature of the double-well partition function. A
    small ``n_traj`` only widens ``stderr``.
    """
    w = work_samples(protocol, beta_th, tau, n_traj, dt, rng, workers)
    return jarzynski_from_work(w, protocol, beta_th, tau)


def jarzynski_from_work(w, protocol, beta_th, tau):
    """Jarzynski comparison for precomputed work samples ``w``."""
    w = np.asarray(w, dtype=float)
    D = 1.0 / beta_th
    z0 = partition_function(protocol(0.0), D)
    z1 = partition_function(protocol(tau), D)
    delta_F = -D * math.log(z1 / z0)
    # shift by the minimum work to keep the exponentials in range
    w_min = w.min()
    expw = np.exp(-beta_th * (w - w_min))
    scale = math.exp(-beta_th * w_min)
    lhs = float(expw.mean() * scale)
    stderr = jackknife_mean(expw) * scale
    return JarzynskiResult(lhs, math.exp(-beta_th * delta_F), stderr, delta_F,
                           float(w.mean()), int(w.size))
