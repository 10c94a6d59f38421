"""Command-line front end.

    fcp-learn svm-bench --p-grid 100,200 --replications 20 --out results/
    fcp-learn nn-train --replications 20 --out results/
    fcp-learn solve data.csv --loss squared --lambda 0.5 --a 0.2 --out results/
    fcp-learn check data.csv --beta results/solution.csv --lambda 0.5 --a 0.2 --out results/

Settings come from an optional ``key=value`` file (``--config``) and are
overridden by flags.  Exit codes: 0 success, 1 invalid input, 2 partial
experiment failure, 3 certificate failure.
"""
import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from . import __version__, nn_experiment, solver, svm_bench
from .data import CLASSIFICATION, REGRESSION, Dataset
from .lasso import LassoConfig, solve_lasso
from .losses import SmoothedSVMLoss, SmoothingParams, SquaredLoss
from .penalty import PenaltyParams

log = logging.getLogger("fcp_learn")

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL, EXIT_CERT = 0, 1, 2, 3
COMMANDS = ("svm-bench", "nn-train", "solve", "check")


class InvalidInput(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    command: str
    seed: int
    output_path: str
    threads: int = 1
    config_path: Optional[str] = None


def fmt(x):
    """17 significant digits so values round-trip exactly."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def read_config(path):
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInput(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def write_csv(path, header_meta, columns, rows):
    buf = io.StringIO()
    buf.write(f"# fcp_learn {__version__}\n")
    for key in sorted(header_meta):
        buf.write(f"# {key}={fmt(header_meta[key])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_data_csv(path, response=None, kind=REGRESSION):
    """Load a CSV (``#`` comment lines allowed) into a :class:`Dataset`.

    The response column is ``response`` if given, else the first column.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(lines))
    if len(rows) < 2:
        raise InvalidInput(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    col = 0 if response is None else (header.index(response) if response in header else -1)
    if col < 0:
        raise InvalidInput(f"{path}: response column {response!r} not found in {header}")
    values = []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(header):
            raise InvalidInput(f"{path}: data row {lineno} has {len(row)} fields, header has {len(header)}")
        try:
            values.append([float(v) for v in row])
        except ValueError as exc:
            raise InvalidInput(f"{path}: data row {lineno}: {exc}") from exc
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{path}: non-finite values")
    y = arr[:, col]
    X = np.delete(arr, col, axis=1)
    try:
        return Dataset(X, y, kind=kind)
    except ValueError as exc:
        raise InvalidInput(f"{path}: {exc}") from exc


def read_beta_csv(path):
    """Read a coefficient vector written by ``solve`` (column ``beta``) or a bare column."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(lines))
    if rows and "beta" in [h.strip() for h in rows[0]]:
        col = [h.strip() for h in rows[0]].index("beta")
        rows = rows[1:]
    else:
        col = -1
    try:
        return np.array([float(r[col]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise InvalidInput(f"{path}: {exc}") from exc


# -- argument handling -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="key=value settings file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--threads", type=int)


def _penalty_flags(p):
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--alpha-hat", type=float)
    p.add_argument("--gamma-hat", type=float)


def build_parser():
    parser = _Parser(prog="fcp-learn", description="MCP-penalised sparse estimation tools")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("svm-bench", help="high-dimensional SVM simulation")
    _common(b)
    _penalty_flags(b)
    b.add_argument("--p-grid")
    b.add_argument("--replications", type=int)
    b.add_argument("--rho", type=float)
    b.add_argument("--lambda-l1", type=float)
    b.add_argument("--n-train", type=int)
    b.add_argument("--n-test", type=int)

    n = sub.add_parser("nn-train", help="MCP-regularised ReLU network sweep")
    _common(n)
    _penalty_flags(n)
    n.add_argument("--replications", type=int)

    for name, helptext in (("solve", "fit one penalised model"), ("check", "certify a coefficient vector")):
        s = sub.add_parser(name, help=helptext)
        _common(s)
        _penalty_flags(s)
        s.add_argument("data", help="CSV with a response column and feature columns")
        s.add_argument("--response", help="response column name (default: first column)")
        s.add_argument("--loss", choices=("squared", "smoothed_hinge"))
        if name == "check":
            s.add_argument("--beta", required=True, help="coefficient CSV")
            s.add_argument("--tol", type=float)
    return parser


def resolve(args, defaults):
    """Merge defaults, config file and flags (flags win)."""
    settings = dict(defaults)
    if getattr(args, "config", None):
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            raise InvalidInput(f"cannot read config: {exc}") from exc
        unknown = set(cfg) - set(defaults)
        if unknown:
            raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
        settings.update(cfg)
    for key in defaults:
        v = getattr(args, key, None)
        if v is not None:
            settings[key] = v
    return settings


def _typed(settings, key, kind):
    try:
        return kind(settings[key])
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"bad value for {key}: {settings[key]!r}") from exc


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _manifest(command, settings):
    threads = _typed(settings, "threads", int)
    if threads < 1:
        raise InvalidInput("threads must be at least 1")
    out = settings["out"]
    os.makedirs(out, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise InvalidInput(f"output directory {out} is not writable")
    return RunManifest(command, _typed(settings, "seed", int), out, threads, settings.get("config"))


# -- commands ----------------------------------------------------------------

SVM_DEFAULTS = dict(seed=20240101, out=".", threads=1, config=None, p_grid="100", replications=20,
                    n_train=100, n_test=1000, rho=0.1, lambda_l1=0.1, lam=0.25, a=0.3,
                    gamma_hat=1e-3, alpha_hat=None)


def cmd_svm_bench(args):
    s = resolve(args, SVM_DEFAULTS)
    try:
        p_grid = _int_list(s["p_grid"])
    except ValueError as exc:
        raise InvalidInput(f"bad p_grid: {s['p_grid']!r}") from exc
    if not p_grid or any(p < 1 for p in p_grid):
        raise InvalidInput(f"p_grid entries must be positive, got {p_grid}")
    if s["alpha_hat"] is not None:
        raise InvalidInput("svm-bench sets alpha_hat to 1/M per replication; it cannot be set")
    try:
        cfg = svm_bench.SimConfig(p=p_grid[0], n_train=_typed(s, "n_train", int),
                                  n_test=_typed(s, "n_test", int),
                                  replications=_typed(s, "replications", int), seed=_typed(s, "seed", int))
        hyper = svm_bench.SVMHyper(rho_l2=_typed(s, "rho", float), lam_l1=_typed(s, "lambda_l1", float),
                                   lam_fcp=_typed(s, "lam", float), a_fcp=_typed(s, "a", float),
                                   gamma_hat=_typed(s, "gamma_hat", float))
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    m = _manifest("svm-bench", s)
    report = svm_bench.run_benchmark(cfg, p_grid, hyper, threads=m.threads)
    meta = {**{k: v for k, v in report.config.items()}, "p_grid": ",".join(map(str, p_grid)),
            "seed": m.seed, "smoothing_error_bound": report.smoothing_error_bound}
    detail = [(r.variant, r.p, r.replication, r.seed, r.test_error, r.iterations, r.objective,
               r.effective_a) for r in report.records]
    write_csv(os.path.join(m.output_path, "svm_bench.csv"), meta,
              ["variant", "p", "replication", "seed", "test_error", "iterations", "objective",
               "effective_a"], detail)
    summary = [(r.variant, r.p, r.mean_error_percent, r.se_percent) for r in report.rows]
    write_csv(os.path.join(m.output_path, "svm_bench_summary.csv"), meta,
              ["variant", "p", "mean", "se"], summary)
    for r in report.rows:
        print(f"{r.variant:6s} p={r.p:5d} error={r.mean_error_percent:6.2f}% se={r.se_percent:5.2f}%")
    failures = [r for r in report.records if not r.ok]
    for r in failures:
        print(f"failed: {r.variant} p={r.p} replication={r.replication}: {r.reason}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


NN_DEFAULTS = dict(seed=7, out=".", threads=1, config=None, replications=20, lam=0.05, a=None,
                   gamma_hat=1e-2, alpha_hat=None)


def cmd_nn_train(args):
    s = resolve(args, NN_DEFAULTS)
    reps = _typed(s, "replications", int)
    if reps < 1:
        raise InvalidInput("replications must be positive")
    if s["a"] is not None or s["alpha_hat"] is not None:
        raise InvalidInput("nn-train derives a and alpha_hat from the sampled Lipschitz bound; "
                           "they cannot be set")
    try:
        cfg = nn_experiment.NNExperimentConfig(lam=_typed(s, "lam", float),
                                               gamma_hat=_typed(s, "gamma_hat", float),
                                               seed=_typed(s, "seed", int))
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    m = _manifest("nn-train", s)
    records = nn_experiment.run_sweeps(cfg, reps, threads=m.threads)
    rows = [(snap.objective, snap.test_mse, rec.replication) for rec in records for snap in rec.snapshots]
    meta = {"seed": m.seed, "replications": reps, "lambda": cfg.lam, "a_scale": cfg.a_scale,
            "gamma_hat": cfg.gamma_hat, "alpha_scale": cfg.alpha_scale, "n_train": cfg.n_train,
            "n_test": cfg.n_test, "noise_sd": cfg.noise_sd, "init_sd": cfg.init_sd,
            "layer_sizes": "-".join(map(str, cfg.arch.layer_sizes)),
            "fractions": ",".join(map(fmt, nn_experiment.DEFAULT_FRACTIONS))}
    write_csv(os.path.join(m.output_path, "nn_sweep.csv"), meta, ["objective", "test_mse", "replication"], rows)
    bad = [r for r in records if not r.exclusion_zone_ok]
    print(f"{reps} replications, exclusion zone held in {reps - len(bad)}")
    return EXIT_PARTIAL if bad else EXIT_OK


MODEL_DEFAULTS = dict(seed=0, out=".", threads=1, config=None, lam=None, a=None, gamma_hat=1e-6,
                      alpha_hat=None, loss="squared", response=None, tol=None)


def _model(s, data_path):
    loss_name = s["loss"]
    if loss_name not in ("squared", "smoothed_hinge"):
        raise InvalidInput(f"unknown loss {loss_name!r}")
    kind = CLASSIFICATION if loss_name == "smoothed_hinge" else REGRESSION
    data = read_data_csv(data_path, s["response"], kind)
    loss = SquaredLoss(data) if kind == REGRESSION else SmoothedSVMLoss(
        data, SmoothingParams.for_sample_size(data.n))
    if s["lam"] is None or s["a"] is None:
        raise InvalidInput("--lambda and --a are required")
    try:
        params = PenaltyParams(_typed(s, "lam", float), _typed(s, "a", float))
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    M = loss.lipschitz_bound()
    if M <= 0:
        raise InvalidInput("loss has zero curvature bound (all-zero features?)")
    if not params.a < 1.0 / M:
        raise InvalidInput(f"a={params.a} must be below 1/M={1.0 / M:.6g} for this data")
    alpha = 1.0 / M if s["alpha_hat"] is None else _typed(s, "alpha_hat", float)
    try:
        cfg = solver.SolverConfig(_typed(s, "gamma_hat", float), alpha, M)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    return loss, params, cfg


def cmd_solve(args):
    s = resolve(args, MODEL_DEFAULTS)
    loss, params, cfg = _model(s, args.data)
    m = _manifest("solve", s)
    start = solve_lasso(loss, params.lam, LassoConfig())
    result = solver.run(loss, params, cfg, start.beta)
    cert = result.certificate
    meta = {"seed": m.seed, "loss": s["loss"], "lambda": params.lam, "a": params.a,
            "gamma_hat": cfg.gamma_hat, "alpha_hat": cfg.alpha_hat, "M": cfg.M,
            "terminated_by": result.terminated_by, "iterations": result.iterations,
            "residual": cert.first_order_residual if cert else float("nan"),
            "exclusion_zone_ok": bool(cert and cert.exclusion_zone_ok),
            "certificate_pass": bool(cert and cert.passes), "objective": result.objective}
    write_csv(os.path.join(m.output_path, "solution.csv"), meta, ["j", "beta"],
              list(enumerate(result.beta)))
    print(f"certificate residual={fmt(meta['residual'])} exclusion_zone_ok={fmt(meta['exclusion_zone_ok'])} "
          f"iterations={result.iterations}")
    return EXIT_OK if meta["certificate_pass"] else EXIT_CERT


def cmd_check(args):
    s = resolve(args, MODEL_DEFAULTS)
    loss, params, cfg = _model(s, args.data)
    beta = read_beta_csv(args.beta)
    if beta.size != loss.dim:
        raise InvalidInput(f"beta has {beta.size} entries, data has {loss.dim} features")
    tol = cfg.gamma_hat if s["tol"] is None else _typed(s, "tol", float)
    m = _manifest("check", s)
    cert = solver.check_s3onc(beta, loss, params, tol)
    meta = {"seed": m.seed, "loss": s["loss"], "lambda": params.lam, "a": params.a, "tol": tol}
    write_csv(os.path.join(m.output_path, "check.csv"), meta,
              ["residual", "exclusion_zone_ok", "tolerance", "pass"],
              [(cert.first_order_residual, cert.exclusion_zone_ok, cert.tolerance, cert.passes)])
    print(f"certificate residual={fmt(cert.first_order_residual)} "
          f"exclusion_zone_ok={fmt(cert.exclusion_zone_ok)} pass={fmt(cert.passes)}")
    return EXIT_OK if cert.passes else EXIT_CERT


HANDLERS = {"svm-bench": cmd_svm_bench, "nn-train": cmd_nn_train, "solve": cmd_solve, "check": cmd_check}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return HANDLERS[args.command](args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
