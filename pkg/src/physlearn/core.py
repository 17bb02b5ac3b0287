"""Seeded random streams, trajectories and the generic stochastic integrators.

Every stochastic routine in the package takes an :class:`RngStream`. A stream is
addressed by ``(root_seed, stream_id)`` plus the ids of the streams it was
spawned from, so the same address always yields the same numbers no matter in
which order (or on which thread) ensembles are evaluated.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "NumericalAbort",
    "RngStream",
    "Trajectory",
    "as_generator",
    "ensemble_map",
    "sde_integrate",
    "jump_sample",
    "n_steps_for",
    "write_csv",
]

DEFAULT_BLOCK = 4096


class NumericalAbort(RuntimeError):
    """Raised when an integration produces a non-finite or out-of-range state.

    ``diagnostics`` carries the offending state and time so callers (the CLI in
    particular) can dump it next to the run outputs.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class RngStream:
    root_seed: int
    stream_id: int = 0
    parent: tuple = ()

    def __post_init__(self):
        if self.stream_id < 0:
            raise ValueError("stream_id must be non-negative")

    @property
    def key(self):
        return tuple(self.parent) + (self.stream_id,)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.root_seed % 2**64, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.root_seed, stream_id, self.key)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(int(rng)).generator()


@dataclass
class Trajectory:
    """Time series of named channels.

    Channel arrays have the time axis first; an ensemble stores paths along a
    second axis.
    """

    times: np.ndarray
    channels: dict = field(default_factory=dict)
    seed: RngStream | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        for name, values in list(self.channels.items()):
            arr = np.asarray(values, dtype=float)
            if arr.shape[:1] != self.times.shape:
                raise ValueError(
                    f"channel {name!r} has {arr.shape[0] if arr.ndim else 0} points, "
                    f"expected {self.times.size}"
                )
            self.channels[name] = arr

    def __getitem__(self, name):
        return self.channels[name]

    def __len__(self):
        return self.times.size

    def to_csv(self, path):
        names = list(self.channels)
        for name in names:
            if self.channels[name].ndim != 1:
                raise ValueError("only single-path trajectories serialize to CSV")
        rows = np.column_stack([self.times] + [self.channels[n] for n in names])
        write_csv(path, ["t"] + names, rows)


def write_csv(path, header, rows):
    """CSV with one header line and 17 significant digits per float."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def n_steps_for(dt, t_end):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < dt:
        raise ValueError("t_end must be at least dt")
    # guard against t_end/dt landing a hair above an integer
    return int(math.ceil(t_end / dt - 1e-9))


def ensemble_map(fn: Callable, n_paths: int, rng: RngStream, block_size: int = DEFAULT_BLOCK,
                 workers: int = 1) -> dict:
    """Run ``fn(n, generator)`` over fixed-size blocks of paths and stitch results.

    Block ``b`` always draws from ``rng.child(b)``, so the result is identical for
    any ``workers`` count. ``fn`` returns a mapping of arrays whose last axis
    indexes paths.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    sizes = [min(block_size, n_paths - start) for start in range(0, n_paths, block_size)]

    def job(b):
        return fn(sizes[b], rng.child(b).generator())

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(b) for b in range(len(sizes))]
    return {k: np.concatenate([np.asarray(p[k]) for p in parts], axis=-1) for k in parts[0]}


def sde_integrate(drift, diffusion, x0, dt, t_end, rng, names=None) -> Trajectory:
    """Fixed-step Ito Euler-Maruyama for ``dx = a(x, t) dt + b(x, t) dW``.

    ``diffusion`` returns either the diagonal noise amplitudes (same shape as the
    state) or a ``(d, m)`` matrix multiplying ``m`` Wiener increments.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    n = n_steps_for(dt, t_end)
    gen = as_generator(rng)
    sq = math.sqrt(dt)
    out = np.empty((n + 1, x.size))
    out[0] = x
    t = 0.0
    for i in range(n):
        a = np.asarray(drift(x, t), dtype=float)
        b = np.asarray(diffusion(x, t), dtype=float)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise NumericalAbort("non-finite drift or diffusion", state=x.tolist(), t=t)
        if b.ndim == 2:
            dw = gen.standard_normal(b.shape[1]) * sq
            x = x + a * dt + b @ dw
        else:
            x = x + a * dt + b * gen.standard_normal(x.size) * sq
        t = (i + 1) * dt
        out[i + 1] = x
    if names is None:
        names = ["x"] if x.size == 1 else [f"x{i}" for i in range(x.size)]
    times = np.arange(n + 1) * dt
    return Trajectory(times, {nm: out[:, i] for i, nm in enumerate(names)},
                      rng if isinstance(rng, RngStream) else None)


def jump_sample(rate: Callable, t0: float, t_max: float, rng, ceiling: float):
    """First event time of an inhomogeneous Poisson process, by thinning.

    Returns ``None`` when nothing happens before ``t_max``. ``rate`` must stay
    below ``ceiling`` on ``[t0, t_max]``; a violation aborts because the thinned
    sample would be silently wrong.
    """
    if ceiling < 0:
        raise ValueError("ceiling must be non-negative")
    if ceiling == 0:
        return None
    gen = as_generator(rng)
    t = t0
    while True:
        t += gen.exponential(1.0 / ceiling)
        if t >= t_max:
            return None
        r = rate(t)
        if r > ceiling * (1 + 1e-12) or r < 0:
            raise NumericalAbort("rate outside [0, ceiling]; thinning invalid", t=t, rate=r,
                                 ceiling=ceiling)
        if gen.random() * ceiling < r:
            return t


def survival_from_samples(samples, t_grid, t_max=np.inf):
    """Empirical survival ``P(T > t)`` with ``None`` treated as censored at ``t_max``."""
    arr = np.array([np.inf if s is None else s for s in samples], dtype=float)
    return np.array([(arr > t).mean() for t in np.atleast_1d(t_grid)])

