"""Stochastic binary perceptrons trained by sampled-error feedback.

A unit switches ON (+1) with probability ``expit(beta * A)``, ``A = xi . w + b``,
so its trial-averaged output is ``tanh(beta A / 2)``. Each epoch samples the
units ``n_samples`` times at frozen weights and applies one feedback update.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core import RngStream, as_generator, write_csv

NOT_DATA = (((-1.0,), 1), ((1.0,), -1))
XOR_DATA = (((-1.0, -1.0), -1), ((-1.0, 1.0), 1), ((1.0, -1.0), 1), ((1.0, 1.0), -1))


@dataclass(frozen=True)
class Datum:
    xi: tuple
    n_T: int

    def __post_init__(self):
        if any(c not in (-1, 1) for c in self.xi) or self.n_T not in (-1, 1):
            raise ValueError("components and label must be +-1")


@dataclass
class PerceptronNet:
    """Layers of ``(weights, biases)``; ``weights`` has shape ``(n_in, n_out)``."""

    layers: list
    beta: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        self.layers = [(np.array(w, dtype=float, ndmin=2), np.array(b, dtype=float, ndmin=1))
                       for w, b in self.layers]
        for (w, b), nxt in zip(self.layers, self.layers[1:] + [None]):
            if w.shape[1] != b.shape[0]:
                raise ValueError("bias length must match layer width")
            if nxt is not None and nxt[0].shape[0] != w.shape[1]:
                raise ValueError("layer dimensions do not chain")

    def copy(self):
        return PerceptronNet([(w.copy(), b.copy()) for w, b in self.layers], self.beta, self.eta)

    def flat(self):
        return np.concatenate([np.r_[w.ravel(), b] for w, b in self.layers])


@dataclass
class TrainingRecord:
    datum: list = field(default_factory=list)
    n_bar: list = field(default_factory=list)
    eps_est: list = field(default_factory=list)
    eps_before: list = field(default_factory=list)
    eps_after: list = field(default_factory=list)
    activation: list = field(default_factory=list)
    weights: list = field(default_factory=list)

    def __len__(self):
        return len(self.eps_est)

    def moving_average(self, window=50):
        e = np.asarray(self.eps_est)
        c = np.r_[0.0, np.cumsum(e)]
        idx = np.arange(1, e.size + 1)
        lo = np.maximum(idx - window, 0)
        return (c[idx] - c[lo]) / (idx - lo)

    def to_csv(self, path):
        n_w = len(self.weights[0]) if self.weights else 0
        header = ["epoch", "datum", "eps_est", "eps_before", "eps_after"] + [f"p{i}" for i in range(n_w)]
        rows = [[k, self.datum[k], self.eps_est[k], self.eps_before[k], self.eps_after[k],
                 *self.weights[k]] for k in range(len(self))]
        write_csv(path, header, rows)


def fire_probability(weights, bias, xi, beta):
    """``1 / (1 + exp(-beta A))`` with ``A = xi . w + b``."""
    A = np.dot(np.asarray(xi, dtype=float), np.asarray(weights, dtype=float)) + bias
    return expit(beta * A)


def mean_output(A, beta):
    """Trial-averaged output ``2 p1 - 1 = tanh(beta A / 2)``."""
    return np.tanh(beta * np.asarray(A, dtype=float) / 2)


def mean_error(n_bar, n_T):
    """``(1 - n_T n_bar) / 2``."""
    return (1.0 - n_T * np.asarray(n_bar, dtype=float)) / 2


def estimate_unit(p1, n_samples, gen):
    """Sampled ``(n_bar, stderr of p1)`` from ``n_samples`` Bernoulli trials."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    p_hat = gen.binomial(n_samples, p1) / n_samples
    return 2 * p_hat - 1, np.sqrt(p_hat * (1 - p_hat) / n_samples)


# single layer --------------------------------------------------------------


def single_layer_exact_error(net: PerceptronNet, datum: Datum):
    w, b = net.layers[0]
    A = np.dot(datum.xi, w[:, 0]) + b[0]
    return float(mean_error(mean_output(A, net.beta), datum.n_T))


def epoch_estimate(net: PerceptronNet, datum: Datum, n_samples, rng):
    """Sampled ``(n_bar per output unit, eps_bar, stderr of p1)`` at frozen weights."""
    gen = as_generator(rng)
    w, b = net.layers[0]
    p1 = expit(net.beta * (np.asarray(datum.xi, dtype=float) @ w + b))
    n_bar, stderr = estimate_unit(p1, n_samples, gen)
    return n_bar, float(mean_error(n_bar[-1], datum.n_T)), stderr


def single_layer_update(net: PerceptronNet, datum: Datum, n_bar, label=None):
    """Increments ``(dw, db)`` with ``dw = eta n_T beta (1 - n_bar^2) xi / 4``."""
    n_T = datum.n_T if label is None else label
    g = net.eta * n_T * net.beta * (1.0 - np.atleast_1d(n_bar) ** 2) / 4
    return np.outer(np.asarray(datum.xi, dtype=float), g), g


def _train_loop(net, data, epochs, n_samples, gen, step):
    rec = TrainingRecord()
    for _ in range(epochs):
        k = int(gen.integers(len(data)))
        step(net, data[k], n_samples, gen, rec)
        rec.datum.append(k)
        rec.weights.append(net.flat())
    return rec


def train_not(beta=1.0, eta=1.0, n_samples=200, epochs=500, w0=0.01, b0=1.0,
              rng: RngStream | int = 0):
    """Train a single unit on NOT: ``(-1 -> +1), (+1 -> -1)``."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    net = PerceptronNet([([[w0]], [b0])], beta, eta)
    data = [Datum(xi, n_T) for xi, n_T in NOT_DATA]
    gen = as_generator(rng)

    def step(net, d, n_samples, gen, rec):
        w, b = net.layers[0]
        before = single_layer_exact_error(net, d)
        n_bar, eps, _ = epoch_estimate(net, d, n_samples, gen)
        dw, db = single_layer_update(net, d, n_bar)
        rec.activation.append(float(np.dot(d.xi, w[:, 0]) + b[0]))
        w += dw
        b += db
        rec.n_bar.append(n_bar.copy())
        rec.eps_est.append(eps)
        rec.eps_before.append(before)
        rec.eps_after.append(single_layer_exact_error(net, d))

    return net, _train_loop(net, data, epochs, n_samples, gen, step)


# two-layer XOR --------------------------------------------------------------


def xor_net(wh=((-5.0, 8.0), (-2.0, 3.0)), wo=(-2.0, -3.0), bh=(-1.0, -3.0), bo=-1.0,
            beta=1.0, eta=1.0):
    """2-2-1 network; ``wh[i][j]`` connects input ``i`` to hidden unit ``j``."""
    return PerceptronNet([(wh, bh), (np.reshape(wo, (2, 1)), [bo])], beta, eta)


def _check_xor(net):
    if len(net.layers) != 2 or net.layers[0][0].shape != (2, 2) or net.layers[1][0].shape != (2, 1):
        raise ValueError("expected a 2-2-1 network")


def xor_forward(net: PerceptronNet, xi, n_samples, rng):
    """Sampled ``(n_bar_h, n_bar_o)``.

    Each trial draws binary hidden outputs, and the output unit fires on those
    sampled values; the returned numbers are trial averages.
    """
    _check_xor(net)
    gen = as_generator(rng)
    (wh, bh), (wo, bo) = net.layers
    ph = expit(net.beta * (np.asarray(xi, dtype=float) @ wh + bh))
    h = np.where(gen.random((n_samples, 2)) < ph, 1.0, -1.0)
    po = expit(net.beta * (h @ wo[:, 0] + bo[0]))
    o = np.where(gen.random(n_samples) < po, 1.0, -1.0)
    return h.mean(axis=0), float(o.mean())


def xor_backward(net: PerceptronNet, xi, label, n_bar_h, n_bar_o):
    """Increments ``(d_wh, d_bh, d_wo, d_bo)`` from the mean-field chain rule.

    ``d_wo = eta n_T beta (1 - n_o^2) n_h / 4`` and
    ``d_wh_ij = eta n_T beta^2 (1 - n_o^2) wo_j (1 - n_hj^2) xi_i / 8``; biases
    use the same rules with a constant input of 1.
    """
    _check_xor(net)
    beta, eta = net.beta, net.eta
    wo = net.layers[1][0][:, 0]
    n_bar_h = np.asarray(n_bar_h, dtype=float)
    g_o = eta * label * beta * (1.0 - n_bar_o ** 2) / 4
    d_wo = g_o * n_bar_h
    d_bo = g_o
    g_h = eta * label * beta ** 2 * (1.0 - n_bar_o ** 2) * wo * (1.0 - n_bar_h ** 2) / 8
    d_wh = np.outer(np.asarray(xi, dtype=float), g_h)
    return d_wh, g_h, d_wo, d_bo


def xor_mean_field(net: PerceptronNet, xi):
    """Mean-field ``(n_h, n_o)``: hidden averages fed to the output unit."""
    (wh, bh), (wo, bo) = net.layers
    n_h = mean_output(np.asarray(xi, dtype=float) @ wh + bh, net.beta)
    n_o = mean_output(n_h @ wo[:, 0] + bo[0], net.beta)
    return n_h, float(n_o)


def xor_exact_output(net: PerceptronNet, xi):
    """Exact ``n_bar_o`` of the sampled network, enumerating hidden states."""
    (wh, bh), (wo, bo) = net.layers
    ph = expit(net.beta * (np.asarray(xi, dtype=float) @ wh + bh))
    total = 0.0
    for h in itertools.product((-1.0, 1.0), repeat=2):
        h = np.array(h)
        prob = np.prod(np.where(h > 0, ph, 1 - ph))
        total += prob * mean_output(h @ wo[:, 0] + bo[0], net.beta)
    return float(total)


def xor_exact_error(net: PerceptronNet, datum: Datum):
    return float(mean_error(xor_exact_output(net, datum.xi), datum.n_T))


def train_xor(net: PerceptronNet | None = None, n_samples=200, epochs=3000,
              rng: RngStream | int = 0):
    """Feedback training on the four XOR points, one random point per epoch."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    net = xor_net() if net is None else net.copy()
    _check_xor(net)
    data = [Datum(xi, n_T) for xi, n_T in XOR_DATA]
    gen = as_generator(rng)

    def step(net, d, n_samples, gen, rec):
        before = xor_exact_error(net, d)
        n_h, n_o = xor_forward(net, d.xi, n_samples, gen)
        d_wh, d_bh, d_wo, d_bo = xor_backward(net, d.xi, d.n_T, n_h, n_o)
        (wh, bh), (wo, bo) = net.layers
        wh += d_wh
        bh += d_bh
        wo[:, 0] += d_wo
        bo += d_bo
        rec.n_bar.append(np.r_[n_h, n_o])
        rec.eps_est.append(float(mean_error(n_o, d.n_T)))
        rec.eps_before.append(before)
        rec.eps_after.append(xor_exact_error(net, d))

    return net, _train_loop(net, data, epochs, n_samples, gen, step)


def classifies_xor(net: PerceptronNet):
    """True when the exact mean output has the right sign on all four inputs."""
    return all(np.sign(xor_exact_output(net, xi)) == n_T for xi, n_T in XOR_DATA)
