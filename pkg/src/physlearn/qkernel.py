"""Single-photon kernel embedding: binary data as temporal-mode coefficient vectors.

The temporal modes are orthonormal, so every overlap is a plain dot product of
coefficient vectors and the modes never need to be built as functions of time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import RngStream, as_generator

NORM_TOL = 1e-12


@dataclass(frozen=True)
class ModeVector:
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty vector")
        if abs(float(c @ c) - 1.0) > NORM_TOL:
            raise ValueError("mode vector must have unit norm")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def normalized(cls, values):
        v = np.asarray(values, dtype=float)
        return cls(v / np.linalg.norm(v))

    def __len__(self):
        return self.coefficients.size


@dataclass(frozen=True)
class Detection:
    """Monotone detection law ``p1 = f(A)`` with its inverse.

    ``identity`` gives ``p1 = A``; ``exponential`` gives ``p1 = 1 - exp(-c A)``.
    """

    kind: str = "identity"
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "exponential"):
            raise ValueError("kind must be 'identity' or 'exponential'")
        if self.kind == "exponential" and not self.c > 0:
            raise ValueError("c must be positive")

    def forward(self, A):
        if self.kind == "identity":
            return A
        return -math.expm1(-self.c * A)

    def inverse(self, p):
        if self.kind == "identity":
            return p
        return -math.log1p(-p) / self.c

    def inverse_slope(self, p):
        if self.kind == "identity":
            return 1.0
        return 1.0 / (self.c * (1.0 - p))


@dataclass
class KernelEstimate:
    exact: float
    estimate: float
    shots: int
    stderr: float
    eta: float
    clamped: bool = False

    @property
    def normalized(self):
        """Estimate divided by the efficiency, i.e. the squared mode overlap."""
        return self.estimate / self.eta


def encode(xi) -> ModeVector:
    """``nu_j = xi_j / sqrt(N)`` for a +-1 vector ``xi``."""
    xi = np.asarray(xi, dtype=float)
    if xi.size == 0:
        raise ValueError("cannot encode an empty vector")
    if not np.all(np.isin(xi, (-1.0, 1.0))):
        raise ValueError("components must be +-1")
    return ModeVector(xi / math.sqrt(xi.size))


def overlap_probability(w: ModeVector, nu: ModeVector, eta=1.0):
    """Detection probability ``eta (w . nu)^2``."""
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if not isinstance(w, ModeVector) or not isinstance(nu, ModeVector):
        raise TypeError("arguments must be ModeVector instances")
    if len(w) != len(nu):
        raise ValueError("mode vectors differ in length")
    # compensated sums, renormalised so the orthogonal and parallel limits are exact
    a, b = w.coefficients, nu.coefficients
    dot = math.fsum(a * b)
    cos2 = dot * dot / (math.fsum(a * a) * math.fsum(b * b))
    return eta * min(cos2, 1.0)


def sample_kernel(w: ModeVector, nu: ModeVector, eta, shots, rng, f: Detection = Detection()):
    """Estimate ``A`` from ``shots`` Bernoulli detections at ``p1 = f(A)``.

    The estimate is ``f^-1(p_hat)``; a ``p_hat`` outside ``f``'s range on
    ``[0, eta]`` is clamped and flagged. ``stderr`` is the delta-method value.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    A = overlap_probability(w, nu, eta)
    p1 = min(max(f.forward(A), 0.0), 1.0)
    gen = as_generator(rng)
    p_hat = gen.binomial(int(shots), p1) / shots
    p_max = f.forward(eta)
    clamped = p_hat > p_max
    p_use = min(p_hat, p_max)
    # one shot never fills [0, 1) exactly under the exponential law
    if f.kind == "exponential" and p_use >= 1.0:
        p_use, clamped = math.nextafter(1.0, 0.0), True
    estimate = f.inverse(p_use)
    stderr = math.sqrt(p_use * (1 - p_use) / shots) * f.inverse_slope(p_use)
    return KernelEstimate(A, float(estimate), int(shots), float(stderr), eta, bool(clamped))


def exact_kernel_matrix(data, eta=1.0):
    """``eta (xi_i . xi_j / N)^2`` for all pairs."""
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise ValueError("data must all have the same dimension")
    G = X @ X.T / X.shape[1]
    return eta * G * G


def kernel_matrix(data, eta=1.0, shots=1000, rng=None, f: Detection = Detection()):
    """Symmetric matrix of sampled kernels; ``shots=None`` returns the exact matrix.

    Pair ``(i, j)``, ``i <= j``, draws from its own child stream, so entries do
    not depend on evaluation order.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise ValueError("data must all have the same dimension")
    if shots is None:
        return exact_kernel_matrix(X, eta)
    rng = RngStream(0) if rng is None else rng
    modes = [encode(x) for x in X]
    n = len(modes)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            stream = rng.child(i * n + j)
            K[i, j] = K[j, i] = sample_kernel(modes[i], modes[j], eta, shots, stream, f).estimate
    return K
