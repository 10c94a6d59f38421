"""Proximal gradient (ISTA) for ``f(beta) + lam * ||beta||_1``.

Used to warm-start the MCP solver.  The step is fixed at ``1/M`` and no
momentum is applied, so the objective is nonincreasing along the iterates.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .penalty import soft_threshold


class NumericalFailure(FloatingPointError):
    """A loss or gradient evaluation returned a non-finite value."""

    def __init__(self, message, iteration):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


@dataclass(frozen=True)
class LassoConfig:
    step: Optional[float] = None  # defaults to 1/M
    tol: float = 1e-7
    max_iter: int = 100_000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")


@dataclass
class LassoResult:
    beta: np.ndarray
    converged: bool
    iterations: int
    residual: float
    objective_trace: list = field(repr=False, default_factory=list)

    @property
    def objective(self):
        return self.objective_trace[-1]


def l1_objective(loss, beta, lam):
    return loss.value(beta) + lam * float(np.sum(np.abs(beta)))


def solve_lasso(loss, lam, cfg: LassoConfig = LassoConfig(), beta0=None) -> LassoResult:
    """Minimise ``loss(beta) + lam * ||beta||_1`` by ISTA.

    Stops when the fixed-point residual
    ``||beta - S(beta - step*grad, step*lam)||_inf`` drops to ``cfg.tol``.
    ``lam = 0`` gives plain gradient descent.

    The loss is assumed convex; nothing checks this.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    M = loss.lipschitz_bound()
    step = cfg.step if cfg.step is not None else 1.0 / M
    if step > 1.0 / M * (1 + 1e-12):
        raise ValueError(f"step {step} exceeds 1/M = {1.0 / M}")
    beta = np.zeros(loss.dim) if beta0 is None else np.array(beta0, dtype=float).reshape(-1)
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta0 must be finite")

    fval, grad = loss.value_and_gradient(beta)
    obj = fval + lam * float(np.sum(np.abs(beta)))
    trace = [obj]
    residual = np.inf
    for k in range(cfg.max_iter):
        if not (np.isfinite(fval) and np.all(np.isfinite(grad))):
            raise NumericalFailure("non-finite loss or gradient", k)
        new = soft_threshold(beta - step * grad, step * lam)
        residual = float(np.max(np.abs(new - beta))) if beta.size else 0.0
        if residual <= cfg.tol:
            return LassoResult(beta, True, k, residual, trace)
        beta = new
        fval, grad = loss.value_and_gradient(beta)
        trace.append(fval + lam * float(np.sum(np.abs(beta))))
    if not (np.isfinite(fval) and np.all(np.isfinite(grad))):
        raise NumericalFailure("non-finite loss or gradient", cfg.max_iter)
    new = soft_threshold(beta - step * grad, step * lam)
    residual = float(np.max(np.abs(new - beta))) if beta.size else 0.0
    return LassoResult(beta, residual <= cfg.tol, cfg.max_iter, residual, trace)
