"""Minimax concave penalty (MCP) and related scalar operators.

The penalty is

    P(t) = integral_0^|t| [a*lam - s]_+ / a ds

which equals ``lam*|t| - t**2/(2a)`` for ``|t| <= a*lam`` and the constant
``a*lam**2/2`` beyond the knot ``a*lam``.  It splits as ``h1(t) + lam*|t|``
where ``h1`` is concave and has a ``1/a``-Lipschitz derivative.

All functions accept scalars or numpy arrays and are closed-form.
"""
from dataclasses import dataclass

import numpy as np


class KinkError(ValueError):
    """Raised when a derivative is requested at a point where it does not exist."""


@dataclass(frozen=True)
class PenaltyParams:
    lam: float
    a: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not (np.isfinite(self.a) and self.a > 0):
            raise ValueError(f"a must be positive, got {self.a}")

    @property
    def knot(self):
        """Magnitude ``a*lam`` beyond which the penalty is flat."""
        return self.a * self.lam

    @property
    def cap(self):
        """Saturated penalty value ``a*lam**2/2``."""
        return 0.5 * self.a * self.lam ** 2


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def mcp_value(theta, params):
    t = np.abs(np.asarray(theta, dtype=float))
    inner = params.lam * t - t ** 2 / (2.0 * params.a)
    return _out(np.where(t <= params.knot, inner, params.cap), theta)


def mcp_total(beta, params):
    """Sum of the penalty over the coordinates of ``beta``."""
    return float(np.sum(mcp_value(np.asarray(beta, dtype=float), params)))


def mcp_derivative(theta, params):
    """Derivative ``sign(t) * [a*lam - |t|]_+ / a``.

    Raises
    ------
    KinkError
        If any entry of ``theta`` is exactly zero; use
        :func:`mcp_subdifferential_at_zero` there instead.
    """
    t = np.asarray(theta, dtype=float)
    if np.any(t == 0.0):
        raise KinkError("penalty is not differentiable at 0; use the subdifferential interval")
    d = np.sign(t) * np.maximum(params.knot - np.abs(t), 0.0) / params.a
    return _out(d, theta)


def mcp_subdifferential_at_zero(params):
    """Return the interval ``(-lam, lam)`` as a ``(low, high)`` pair."""
    return (-params.lam, params.lam)


def mcp_second_derivative(theta, params):
    """Second derivative of the penalty, or ``None`` at ``0`` and at the knot."""
    t = abs(float(theta))
    if t == 0.0 or t == params.knot:
        return None
    return -1.0 / params.a if t < params.knot else 0.0


def h1_value(theta, params):
    t = np.asarray(theta, dtype=float)
    at = np.abs(t)
    v = np.where(at < params.knot, -t ** 2 / (2.0 * params.a), params.cap - params.lam * at)
    return _out(v, theta)


def h1_derivative(theta, params):
    t = np.asarray(theta, dtype=float)
    d = np.where(np.abs(t) < params.knot, -t / params.a, -params.lam * np.sign(t))
    return _out(d, theta)


def soft_threshold(x, t):
    """``sign(x) * max(|x| - t, 0)``, the minimiser of ``(b - x)**2/2 + t*|b|``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be nonnegative")
    x_arr = np.asarray(x, dtype=float)
    return _out(np.sign(x_arr) * np.maximum(np.abs(x_arr) - t, 0.0), x)


def in_exclusion_zone(beta, params):
    """Boolean mask of coordinates with magnitude strictly inside ``(0, a*lam)``."""
    b = np.abs(np.asarray(beta, dtype=float))
    return (b > 0.0) & (b < params.knot)
