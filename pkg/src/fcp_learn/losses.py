"""Smooth loss models: value, gradient and a gradient-Lipschitz bound.

Every model is bound to its data at construction and exposes

* ``value(beta)``
* ``gradient(beta)``
* ``value_and_gradient(beta)``
* ``lipschitz_bound()`` -- a constant ``M`` valid both for the full gradient
  (Euclidean norm) and for each partial derivative along its own coordinate.
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import CLASSIFICATION, Dataset


class LossModel:
    """Base class.  Subclasses implement ``value_and_gradient`` and ``lipschitz_bound``."""

    dim: int

    def value_and_gradient(self, beta):
        raise NotImplementedError

    def value(self, beta):
        return self.value_and_gradient(beta)[0]

    def gradient(self, beta):
        return self.value_and_gradient(beta)[1]

    def lipschitz_bound(self):
        raise NotImplementedError

    def _check(self, beta):
        beta = np.asarray(beta, dtype=float).reshape(-1)
        if beta.shape[0] != self.dim:
            raise ValueError(f"expected a parameter vector of length {self.dim}, got {beta.shape[0]}")
        return beta


def spectral_norm_sq(X):
    """Largest eigenvalue of ``X.T @ X``."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return 0.0
    return float(np.linalg.norm(X, 2) ** 2)


class SquaredLoss(LossModel):
    """Least squares ``(1/2n) * ||y - X beta||^2``."""

    def __init__(self, data: Dataset):
        self.data = data
        self.dim = data.p
        self._M = None

    def value_and_gradient(self, beta):
        beta = self._check(beta)
        X, y = self.data.X, self.data.y
        r = y - X @ beta
        n = self.data.n
        return 0.5 * float(r @ r) / n, -(X.T @ r) / n

    def lipschitz_bound(self):
        if self._M is None:
            self._M = spectral_norm_sq(self.data.X) / self.data.n
        return self._M


class QuadraticLoss(LossModel):
    """``0.5 * (beta - center)' H (beta - center)`` for symmetric PSD ``H``.

    Its minimum value is 0, attained at ``center``.
    """

    def __init__(self, H, center):
        self.H = np.array(H, dtype=float, ndmin=2)
        self.center = np.array(center, dtype=float).reshape(-1)
        if self.H.shape != (self.center.size, self.center.size):
            raise ValueError("H must be square and match center")
        self.dim = self.center.size

    def value_and_gradient(self, beta):
        d = self._check(beta) - self.center
        g = self.H @ d
        return 0.5 * float(d @ g), g

    def lipschitz_bound(self):
        return float(np.max(np.linalg.eigvalsh(self.H)))


@dataclass(frozen=True)
class SmoothingParams:
    """Proximal smoothing of a max over the dual box ``[0, 1]``.

    ``mu`` is the smoothing weight and ``u0`` the proximal centre.
    """

    mu: float
    delta: float = 0.25
    u0: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 <= self.u0 <= 1:
            raise ValueError("u0 must lie in [0, 1]")

    @classmethod
    def for_sample_size(cls, n, delta=0.25, u0=0.0):
        """``mu = n ** (-delta)``."""
        return cls(mu=float(n) ** (-delta), delta=delta, u0=u0)


def smoothed_box_max(z, mu, u0=0.0):
    """Vectorised ``max_{u in [0,1]} u*z - (mu/2)(u - u0)^2``.

    Returns ``(value, u_star)`` with ``u_star = clip(u0 + z/mu, 0, 1)``.
    """
    z = np.asarray(z, dtype=float)
    u = np.clip(u0 + z / mu, 0.0, 1.0)
    return u * z - 0.5 * mu * (u - u0) ** 2, u


def smoothed_hinge_scalar(z, sp: SmoothingParams):
    value, u = smoothed_box_max(z, sp.mu, sp.u0)
    return float(value), float(u)


class SmoothedSVMLoss(LossModel):
    """``rho*||beta||^2 + (1/n) sum_i h_mu(1 - y_i x_i' beta)`` with the smoothed hinge ``h_mu``.

    The gradient is ``2 rho beta - (1/n) sum_i u*_i y_i x_i``.  Its Lipschitz
    constant is ``2 rho + ||A||^2 / mu`` where ``A`` has rows ``y_i x_i / sqrt(n)``
    and ``||.||`` is the spectral norm.
    """

    def __init__(self, data: Dataset, sp: SmoothingParams, rho=0.0):
        if data.kind != CLASSIFICATION:
            raise ValueError("smoothed SVM loss needs a classification dataset")
        if rho < 0:
            raise ValueError("rho must be nonnegative")
        self.data = data
        self.sp = sp
        self.rho = float(rho)
        self.dim = data.p
        self._YX = data.y[:, None] * data.X
        self._M = None

    def margins_deficit(self, beta):
        return 1.0 - self._YX @ beta

    def value_and_gradient(self, beta):
        beta = self._check(beta)
        n = self.data.n
        h, u = smoothed_box_max(self.margins_deficit(beta), self.sp.mu, self.sp.u0)
        value = self.rho * float(beta @ beta) + float(np.sum(h)) / n
        grad = 2.0 * self.rho * beta - (self._YX.T @ u) / n
        return value, grad

    def dual_matrix_norm_sq(self):
        """``||A||^2`` with ``A = [y_i x_i / sqrt(n)]``."""
        return spectral_norm_sq(self._YX) / self.data.n

    def lipschitz_bound(self):
        if self._M is None:
            self._M = 2.0 * self.rho + self.dual_matrix_norm_sq() / self.sp.mu
        return self._M


@dataclass(frozen=True)
class MLPArchitecture:
    """Fully connected ReLU network with a single linear output.

    ``layer_sizes = (d, h_1, ..., h_L, 1)``.  Parameters are packed layer by
    layer as the weight matrix (fan_out x fan_in, row-major) followed by the bias.
    """

    layer_sizes: Sequence[int]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise ValueError("layer_sizes needs at least two positive entries")
        if sizes[-1] != 1:
            raise ValueError("the output layer must have a single unit")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_params(self):
        s = self.layer_sizes
        return sum((s[i] + 1) * s[i + 1] for i in range(len(s) - 1))

    def unpack(self, beta):
        beta = np.asarray(beta, dtype=float).reshape(-1)
        if beta.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {beta.size}")
        layers, k = [], 0
        s = self.layer_sizes
        for fan_in, fan_out in zip(s[:-1], s[1:]):
            W = beta[k:k + fan_in * fan_out].reshape(fan_out, fan_in)
            k += fan_in * fan_out
            b = beta[k:k + fan_out]
            k += fan_out
            layers.append((W, b))
        return layers


def mlp_forward_batch(arch: MLPArchitecture, beta, X):
    """Network outputs for the rows of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != arch.layer_sizes[0]:
        raise ValueError(f"inputs have {X.shape[1]} features, network expects {arch.layer_sizes[0]}")
    layers = arch.unpack(beta)
    h = X
    for W, b in layers[:-1]:
        h = np.maximum(h @ W.T + b, 0.0)
    W, b = layers[-1]
    return (h @ W.T + b)[:, 0]


def mlp_forward(arch: MLPArchitecture, beta, x):
    return float(mlp_forward_batch(arch, beta, np.asarray(x, dtype=float).reshape(1, -1))[0])


class MLPSquaredLoss(LossModel):
    """``(1/2n) sum_i (y_i - F(x_i, beta))^2`` for a ReLU network ``F``.

    Gradients come from backpropagation with the ReLU derivative at 0 taken
    as 0.  No closed-form Lipschitz constant exists, so :meth:`lipschitz_bound`
    samples gradient-difference ratios inside the box ``||beta||_inf <= radius``
    and inflates the largest by ``safety``.
    """

    def __init__(self, arch: MLPArchitecture, data: Dataset, radius=1.0, n_probes=200,
                 safety=1.2, seed=0):
        if data.p != arch.layer_sizes[0]:
            raise ValueError("dataset dimension does not match network input size")
        self.arch = arch
        self.data = data
        self.dim = arch.n_params
        self.radius = float(radius)
        self.n_probes = int(n_probes)
        self.safety = float(safety)
        self.seed = seed
        self._M = None

    def value_and_gradient(self, beta):
        beta = self._check(beta)
        layers = self.arch.unpack(beta)
        n = self.data.n
        acts = [self.data.X]
        pre = []
        h = self.data.X
        for W, b in layers[:-1]:
            z = h @ W.T + b
            pre.append(z)
            h = np.maximum(z, 0.0)
            acts.append(h)
        W, b = layers[-1]
        out = (h @ W.T + b)[:, 0]
        resid = out - self.data.y
        value = 0.5 * float(resid @ resid) / n

        grads = []
        delta = (resid / n)[:, None]
        for li in range(len(layers) - 1, -1, -1):
            W, _ = layers[li]
            grads.append((delta.T @ acts[li], delta.sum(axis=0)))
            if li > 0:
                delta = (delta @ W) * (pre[li - 1] > 0.0)
        grads.reverse()
        flat = np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in grads])
        return value, flat

    def lipschitz_bound(self):
        if self._M is None:
            self._M = self.safety * self.estimate_lipschitz()
        return self._M

    def estimate_lipschitz(self):
        rng = np.random.default_rng(self.seed)
        R, p = self.radius, self.dim
        best = 0.0
        for _ in range(self.n_probes):
            b1 = rng.uniform(-R, R, p)
            b2 = np.clip(b1 + rng.normal(0.0, 0.1 * R, p), -R, R)
            g1, g2 = self.gradient(b1), self.gradient(b2)
            step = np.linalg.norm(b1 - b2)
            if step > 0:
                best = max(best, np.linalg.norm(g1 - g2) / step)
            # along a single coordinate
            j = rng.integers(p)
            b3 = b1.copy()
            b3[j] = np.clip(b1[j] + rng.normal(0.0, 0.1 * R), -R, R)
            h = abs(b3[j] - b1[j])
            if h > 0:
                best = max(best, abs(self.gradient(b3)[j] - g1[j]) / h)
        return best
