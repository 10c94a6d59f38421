"""MCP-regularised training of a small ReLU network on synthetic regression data.

Inputs are uniform on ``[0, 1]^d`` and responses are ``g(x) + noise`` for a
polynomial ``g``.  The network is trained with the MCP solver from a small
Gaussian initialisation, and snapshots along the trajectory relate the
penalised training objective to the test error.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .data import REGRESSION, Dataset
from .losses import MLPArchitecture, MLPSquaredLoss, mlp_forward_batch
from .penalty import PenaltyParams
from . import solver

# g(x) = 1 + 2 x1 x2 - 1.5 x3^2 + x4, as (coefficient, exponent per input)
DEFAULT_POLY = ((1.0, (0, 0, 0, 0)), (2.0, (1, 1, 0, 0)), (-1.5, (0, 0, 2, 0)), (1.0, (0, 0, 0, 1)))


@dataclass(frozen=True)
class NNExperimentConfig:
    arch: MLPArchitecture = MLPArchitecture((4, 16, 16, 1))
    n_train: int = 60
    n_test: int = 500
    noise_sd: float = 0.1
    poly: tuple = DEFAULT_POLY
    init_sd: float = 0.1
    lam: float = 0.05
    a_scale: float = 0.5  # penalty a = a_scale / M
    gamma_hat: float = 1e-2
    alpha_scale: float = 1.0  # alpha_hat = alpha_scale / M
    max_iter: int = 20_000
    lipschitz_radius: float = 1.0
    lipschitz_probes: int = 100
    seed: int = 7

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("sample sizes must be positive")
        if self.noise_sd < 0 or self.init_sd < 0:
            raise ValueError("noise_sd and init_sd must be nonnegative")
        if not 0 < self.a_scale < 1:
            raise ValueError("a_scale must lie in (0, 1) so that a < 1/M")
        if not 0 < self.alpha_scale < 2:
            raise ValueError("alpha_scale must lie in (0, 2) so that alpha_hat < 2/M")
        d = self.arch.layer_sizes[0]
        for _, powers in self.poly:
            if len(powers) != d:
                raise ValueError("polynomial exponents must match the input dimension")

    @property
    def d(self):
        return self.arch.layer_sizes[0]


def polynomial(poly, X):
    X = np.asarray(X, dtype=float)
    out = np.zeros(X.shape[0])
    for coef, powers in poly:
        out += coef * np.prod(X ** np.asarray(powers, dtype=float), axis=1)
    return out


def generate_regression_data(cfg: NNExperimentConfig, replication_index=0):
    ss = np.random.SeedSequence([cfg.seed, replication_index])
    out = []
    for child, n in zip(ss.spawn(2), (cfg.n_train, cfg.n_test)):
        rng = np.random.default_rng(child)
        X = rng.uniform(0.0, 1.0, (n, cfg.d))
        y = polynomial(cfg.poly, X)
        if cfg.noise_sd > 0:
            y = y + rng.normal(0.0, cfg.noise_sd, n)
        out.append(Dataset(X, y, kind=REGRESSION, seed=cfg.seed,
                           meta={"replication": replication_index}))
    return tuple(out)


@dataclass
class NNProblem:
    loss: MLPSquaredLoss
    params: PenaltyParams
    solver_cfg: solver.SolverConfig
    beta0: np.ndarray
    train: Dataset
    test: Dataset


def setup(cfg: NNExperimentConfig, replication_index=0) -> NNProblem:
    """Data, loss, penalty, solver settings and initial weights for one replication."""
    train, test = generate_regression_data(cfg, replication_index)
    loss = MLPSquaredLoss(cfg.arch, train, radius=cfg.lipschitz_radius,
                          n_probes=cfg.lipschitz_probes, seed=cfg.seed)
    M = loss.lipschitz_bound()
    params = PenaltyParams(cfg.lam, cfg.a_scale / M)
    scfg = solver.SolverConfig(cfg.gamma_hat, cfg.alpha_scale / M, M, max_iter=cfg.max_iter)
    init_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, replication_index, 1]))
    beta0 = init_rng.normal(0.0, cfg.init_sd, cfg.arch.n_params)
    return NNProblem(loss, params, scfg, beta0, train, test)


def test_mse(arch, beta, data: Dataset):
    r = mlp_forward_batch(arch, beta, data.X) - data.y
    return float(np.mean(r ** 2))


def train_fcp_nn(cfg: NNExperimentConfig, replication_index=0) -> solver.SolverResult:
    prob = setup(cfg, replication_index)
    return solver.run(prob.loss, prob.params, prob.solver_cfg, prob.beta0)


@dataclass
class Snapshot:
    stop_objective: float
    objective: float
    test_mse: float
    iteration: int
    reached: bool


def suboptimality_vs_generalization_sweep(cfg: NNExperimentConfig, stop_objectives: Sequence[float],
                                          replication_index=0, problem: Optional[NNProblem] = None):
    """Test error of the first iterate whose objective drops below each level.

    ``stop_objectives`` must be decreasing.  ``-inf`` stands for the terminal
    iterate.  Levels the run never reaches are filled with the terminal
    iterate and flagged ``reached=False``.

    Returns ``(snapshots, result)``.
    """
    levels = [float(s) for s in stop_objectives]
    if any(b >= a for a, b in zip(levels, levels[1:])):
        raise ValueError("stop_objectives must be strictly decreasing")
    prob = problem if problem is not None else setup(cfg, replication_index)
    arch = cfg.arch
    taken = {}

    def record(k, beta, obj):
        for i, level in enumerate(levels):
            if i not in taken and obj < level and np.isfinite(level):
                taken[i] = Snapshot(level, obj, test_mse(arch, beta, prob.test), k, True)

    result = solver.run(prob.loss, prob.params, prob.solver_cfg, prob.beta0, callback=record)
    terminal_mse = test_mse(arch, result.beta, prob.test)
    snaps = []
    for i, level in enumerate(levels):
        if i in taken:
            snaps.append(taken[i])
        else:
            snaps.append(Snapshot(level, result.objective, terminal_mse, result.iterations,
                                  not np.isfinite(level)))
    return snaps, result


def relative_levels(initial_objective, fractions):
    """Stop levels ``fraction * initial_objective`` followed by the terminal iterate."""
    return [f * initial_objective for f in fractions] + [-np.inf]


DEFAULT_FRACTIONS = (0.9, 0.7, 0.5, 0.35, 0.25)


@dataclass
class SweepRecord:
    replication: int
    snapshots: list
    terminated_by: str
    exclusion_zone_ok: bool
    best_le_initial: bool
    iterations: int
    checks: dict = field(default_factory=dict)


def run_replication(cfg: NNExperimentConfig, replication_index, fractions=DEFAULT_FRACTIONS):
    prob = setup(cfg, replication_index)
    init = solver.penalized_objective(prob.loss, prob.beta0, prob.params)
    snaps, result = suboptimality_vs_generalization_sweep(
        cfg, relative_levels(init, fractions), problem=prob)
    cert = result.certificate
    return SweepRecord(replication_index, snaps, result.terminated_by,
                       bool(cert is not None and cert.exclusion_zone_ok),
                       result.suboptimality_witness <= result.initial_objective,
                       result.iterations,
                       {"residual": cert.first_order_residual if cert else float("nan"),
                        "s3onc_pass": bool(cert is not None and cert.passes)})


def _task(args):
    return run_replication(*args)


def run_sweeps(cfg: NNExperimentConfig, replications, fractions=DEFAULT_FRACTIONS, threads=1):
    tasks = [(cfg, r, tuple(fractions)) for r in range(replications)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_task, tasks))
    return [_task(t) for t in tasks]


def median_trend(records):
    """Medians over replications of objective and test MSE at each snapshot position."""
    obj = np.array([[s.objective for s in r.snapshots] for r in records])
    mse = np.array([[s.test_mse for s in r.snapshots] for r in records])
    return np.median(obj, axis=0), np.median(mse, axis=0)
