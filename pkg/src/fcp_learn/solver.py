"""First-order solver for ``f(beta) + sum_j P(|beta_j|)`` with the MCP ``P``.

Each iteration does one of two things:

* if some coordinate has magnitude in the open interval ``(0, a*lam)``, the
  lowest such coordinate takes a trust-region step of radius ``gamma`` on the
  linearised loss plus the exact penalty;
* otherwise every coordinate moves at once.  Zero coordinates take a
  soft-threshold step and coordinates at or beyond the knot take a plain
  gradient step of size ``alpha_hat``.

The run stops when no coordinate lies in ``(0, a*lam)`` and the full step
would move the iterate by less than ``gamma``.  With ``a < 1/M`` and
``alpha_hat < 2/M`` the stopping point is a ``gamma_hat``-approximate
stationary point whose coordinates avoid ``(0, a*lam)``.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .penalty import (
    PenaltyParams,
    h1_derivative,
    in_exclusion_zone,
    mcp_total,
)

CRITERIA_MET = "criteria_met"
MAX_ITER = "max_iter"
NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverConfig:
    gamma_hat: float
    alpha_hat: float
    M: float
    max_iter: Optional[int] = None  # None: 10x the worst-case iteration bound

    def __post_init__(self):
        for name in ("gamma_hat", "alpha_hat", "M"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not self.alpha_hat < 2.0 / self.M:
            raise ValueError(f"alpha_hat={self.alpha_hat} must be below 2/M={2.0 / self.M}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be positive")

    @classmethod
    def for_loss(cls, loss, gamma_hat, alpha_hat=None, max_iter=None):
        """Build a config from ``loss.lipschitz_bound()``; ``alpha_hat`` defaults to ``1/M``."""
        M = loss.lipschitz_bound()
        return cls(gamma_hat=gamma_hat, alpha_hat=1.0 / M if alpha_hat is None else alpha_hat,
                   M=M, max_iter=max_iter)

    @property
    def gamma(self):
        return min(self.gamma_hat / (2.0 * self.M), self.alpha_hat * self.gamma_hat)

    @property
    def certificate_tol(self):
        """Residual level guaranteed at a regular stop, ``max(2 M gamma, gamma/alpha_hat)``."""
        return max(2.0 * self.M * self.gamma, self.gamma / self.alpha_hat)


@dataclass(frozen=True)
class S3oncCertificate:
    first_order_residual: float
    exclusion_zone_ok: bool
    tolerance: float

    @property
    def passes(self):
        return self.exclusion_zone_ok and self.first_order_residual <= self.tolerance


@dataclass
class SolverResult:
    beta: np.ndarray
    iterations: int
    objective_trace: list = field(repr=False)
    terminated_by: str
    certificate: Optional[S3oncCertificate]
    best_beta: np.ndarray = field(repr=False)
    suboptimality_witness: float
    params: PenaltyParams = None
    gamma: float = None

    @property
    def objective(self):
        return self.objective_trace[-1]

    @property
    def initial_objective(self):
        return self.objective_trace[0]


def penalized_objective(loss, beta, params):
    return loss.value(beta) + mcp_total(beta, params)


def iteration_bound(initial_objective, params: PenaltyParams, cfg: SolverConfig, lower_bound=0.0):
    """Worst-case iteration count for a run from an objective of ``initial_objective``.

    ``lower_bound`` must not exceed the minimum of the penalised objective.
    """
    M = cfg.M
    rate = min(1.0 / (2.0 * params.a) - M / 2.0, M / 2.0, 1.0 / cfg.alpha_hat - M / 2.0)
    if rate <= 0:
        raise ValueError("bound requires a < 1/M and alpha_hat < 2/M")
    gap = max(initial_objective - lower_bound, 0.0)
    return math.ceil(gap / (rate * cfg.gamma ** 2)) + 1


def _mcp_scalar(c, params):
    t = abs(c)
    return params.lam * t - t * t / (2.0 * params.a) if t <= params.knot else params.cap


def case1_step(beta, grad, idx, params: PenaltyParams, gamma):
    """New value of coordinate ``idx`` from the one-dimensional trust-region model.

    Minimises ``grad[idx]*b + P(|b|)`` over ``|b - beta[idx]| <= gamma``; the
    minimiser lies in ``{0, beta[idx] - gamma, beta[idx] + gamma}``.  Ties go to
    0, then to the smaller magnitude.
    """
    b, g = float(beta[idx]), float(grad[idx])
    candidates = [b - gamma, b + gamma]
    if abs(b) <= gamma:
        candidates.insert(0, 0.0)
    best, best_val = None, np.inf
    for c in candidates:
        val = g * c + _mcp_scalar(c, params)
        if val < best_val or (val == best_val and best != 0.0 and abs(c) < abs(best)):
            best, best_val = c, val
    return best


def case2_step(beta, grad, cfg: SolverConfig, params: PenaltyParams):
    """Simultaneous update when no coordinate lies strictly inside ``(0, a*lam)``."""
    beta = np.asarray(beta, dtype=float)
    if np.any(in_exclusion_zone(beta, params)):
        raise AssertionError("case2_step called with a coordinate inside (0, a*lam)")
    a_hat = cfg.alpha_hat
    zero = beta == 0.0
    out = beta - a_hat * grad
    gz = grad[zero]
    out[zero] = a_hat * np.maximum(np.abs(gz) - params.lam, 0.0) * np.sign(-gz)
    return out


def stationarity_residual(beta, grad, params: PenaltyParams):
    """Per-coordinate minimal-norm element of the subdifferential of the objective."""
    beta = np.asarray(beta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    r = np.empty_like(beta)
    zero = beta == 0.0
    # at 0: h1'(0) = 0 and the l1 part contributes anything in [-lam, lam]
    gz = grad[zero] + h1_derivative(beta[zero], params)
    r[zero] = gz + np.clip(-gz, -params.lam, params.lam)
    nz = ~zero
    b = beta[nz]
    r[nz] = grad[nz] + np.sign(b) * np.maximum(params.knot - np.abs(b), 0.0) / params.a
    return r


def check_s3onc(beta, loss, params: PenaltyParams, tol) -> S3oncCertificate:
    """Check first-order stationarity (up to ``tol``) and the exclusion zone at ``beta``."""
    beta = np.asarray(beta, dtype=float)
    grad = loss.gradient(beta)
    res = float(np.linalg.norm(stationarity_residual(beta, grad, params)))
    zone_ok = not bool(np.any(in_exclusion_zone(beta, params)))
    return S3oncCertificate(res, zone_ok, float(tol))


def run(loss, params: PenaltyParams, cfg: SolverConfig, beta0,
        callback: Optional[Callable] = None) -> SolverResult:
    """Run the solver from ``beta0``.

    ``callback(k, beta, objective)`` is invoked for every iterate, starting
    with ``k = 0``; returning ``True`` stops the run early (reported as
    ``max_iter``).
    """
    if not params.a < 1.0 / cfg.M:
        raise ValueError(f"penalty a={params.a} must be below 1/M={1.0 / cfg.M}")
    beta = np.array(beta0, dtype=float).reshape(-1)
    if beta.size != loss.dim:
        raise ValueError(f"beta0 has length {beta.size}, loss expects {loss.dim}")
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta0 must be finite")

    gamma = cfg.gamma
    fval, grad = loss.value_and_gradient(beta)
    obj = fval + mcp_total(beta, params)
    trace = [obj]
    if not (np.isfinite(obj) and np.all(np.isfinite(grad))):
        return SolverResult(beta, 0, trace, NUMERICAL_FAILURE, None, beta.copy(), obj, params, gamma)
    max_iter = cfg.max_iter
    if max_iter is None:
        max_iter = 10 * iteration_bound(obj, params, cfg, lower_bound=min(0.0, obj))
    best_beta, best_obj = beta.copy(), obj
    stop_early = callback is not None and callback(0, beta, obj)

    k = 0
    status = MAX_ITER
    while k < max_iter and not stop_early:
        zone = in_exclusion_zone(beta, params)
        if zone.any():
            idx = int(np.argmax(zone))
            new = beta.copy()
            new[idx] = case1_step(beta, grad, idx, params, gamma)
        else:
            new = case2_step(beta, grad, cfg, params)
            if np.linalg.norm(new - beta) < gamma:
                status = CRITERIA_MET
                break
        beta = new
        k += 1
        fval, grad = loss.value_and_gradient(beta)
        obj = fval + mcp_total(beta, params)
        trace.append(obj)
        if not (np.isfinite(obj) and np.all(np.isfinite(grad))):
            status = NUMERICAL_FAILURE
            break
        if obj < best_obj:
            best_beta, best_obj = beta.copy(), obj
        if callback is not None and callback(k, beta, obj):
            break

    cert = None
    if status != NUMERICAL_FAILURE:
        res = float(np.linalg.norm(stationarity_residual(beta, grad, params)))
        cert = S3oncCertificate(res, not bool(np.any(in_exclusion_zone(beta, params))),
                                cfg.certificate_tol)
    return SolverResult(beta, k, trace, status, cert, best_beta, best_obj, params, gamma)
