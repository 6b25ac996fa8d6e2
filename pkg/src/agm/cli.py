"""``agm`` command line: solve, project and gen."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .problems import (
    BuildError,
    Dataset,
    build_elastic_net_ls,
    build_f1_svm,
    build_lpboost,
    build_svm_dual_smoothed,
    build_svm_dual_unsmoothed,
    build_svm_primal_smoothed,
)
from .solvers import AdaptiveLConfig, ConfigurationError, ProbeLimitError, SolverConfig, run_agm
from .subproblems import ElasticNetBall, FeasibilityError, elastic_net_ball_project, solve_box_hyperplane

log = logging.getLogger("agm")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2

PROBLEMS = ("svm", "lpboost", "elastic-net", "f1svm")
SCHEMES = ("primal-smooth", "dual-smooth", "dual-raw")


class InputError(Exception):
    """Bad configuration or data; maps to exit code 1."""


# ---------------------------------------------------------------- config


def _truthy(text):
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def read_config_file(path):
    """``key = value`` lines; keys use the long flag names without dashes."""
    conf = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputError(f"{path}:{lineno}: expected key=value")
        conf[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return conf


def _positive(name, value, allow_zero=False):
    if value is None:
        return
    ok = value >= 0 if allow_zero else value > 0
    if not (ok and math.isfinite(value)):
        flag = "lambda" if name == "lam" else name.replace("_", "-")
        raise InputError(f"--{flag} must be {'nonnegative' if allow_zero else 'positive'}, got {value}")


def validate_run(args):
    if args.problem not in PROBLEMS:
        raise InputError(f"--problem must be one of {PROBLEMS}")
    if args.scheme not in SCHEMES:
        raise InputError(f"--scheme must be one of {SCHEMES}")
    if args.memory not in ("inf", "one"):
        raise InputError("--memory must be inf or one")
    if args.l_mode not in ("fixed", "adaptive"):
        raise InputError("--l-mode must be fixed or adaptive")
    for name in ("lam", "epsilon", "l_init"):
        _positive(name, getattr(args, name))
    _positive("gap_tol", args.gap_tol)
    _positive("gamma", args.gamma, allow_zero=True)
    if args.nu is not None and not 0 < args.nu <= 1:
        raise InputError("--nu must lie in (0, 1]")
    for name in ("gamma_d", "gamma_u"):
        if not getattr(args, name) >= 1:
            raise InputError(f"--{name.replace('_', '-')} must be at least 1")
    if args.gamma_d * args.gamma_u <= 1:
        raise InputError("γ_d·γ_u must exceed 1")
    if args.max_iter < 1:
        raise InputError("--max-iter must be at least 1")
    if args.data is None:
        raise InputError("--data is required")


# ---------------------------------------------------------------- solve


def _build(args, X, y):
    data = Dataset(X, y)
    if args.problem == "svm":
        if args.scheme == "primal-smooth":
            return build_svm_primal_smoothed(data, args.lam, args.epsilon)
        if args.scheme == "dual-smooth":
            return build_svm_dual_smoothed(data, args.lam, args.epsilon)
        return build_svm_dual_unsmoothed(data, args.lam)
    if args.problem == "lpboost":
        nu = args.nu if args.nu is not None else 1.0
        return build_lpboost(X, args.lam, nu, args.epsilon)
    if args.problem == "elastic-net":
        return build_elastic_net_ls(data, args.lam, args.gamma)
    return build_f1_svm(data, args.lam, args.epsilon)


def _final_weights(args, built, result):
    if args.problem == "svm" and args.scheme != "primal-smooth":
        return built.info["primal_map"](result.x)
    return result.x


def run_solve(args):
    validate_run(args)
    try:
        X, y = io.read_libsvm(args.data)
    except OSError as exc:
        raise InputError(f"cannot read data: {exc}") from None
    except io.ParseError as exc:
        raise InputError(str(exc)) from None
    if args.problem in ("svm", "f1svm"):
        y = np.where(y > 0, 1.0, -1.0)
    try:
        built = _build(args, X, y)
    except (BuildError, ValueError) as exc:
        raise InputError(str(exc)) from None
    if args.l_mode == "fixed" and built.L_theory is None:
        raise InputError(f"no Lipschitz constant is available for {args.problem}; use --l-mode adaptive")

    config = SolverConfig(
        l_mode=args.l_mode,
        L=built.L_theory,
        adaptive=AdaptiveLConfig(args.gamma_d, args.gamma_u, args.l_init),
        max_iter=args.max_iter,
        gap_tol=args.gap_tol,
        stall_tol=None if args.no_stall or (built.tracker is not None and args.gap_tol is not None) else 1e-12,
        record_timing=not args.no_timing,
    )
    try:
        result = run_agm(built.problem, built.x0, args.memory, config, built.tracker)
    except (ConfigurationError, ProbeLimitError) as exc:
        raise InputError(str(exc)) from None

    w = _final_weights(args, built, result)
    bias = built.bias(w) if built.bias is not None else 0.0
    if args.out:
        io.write_model(args.out, w, args.lam, bias)
    if args.trace:
        base = Path(args.trace)
        io.write_trace_csv(base.with_suffix(".csv"), result.trace)
        io.write_trace_jsonl(base.with_suffix(".jsonl"), result.trace)
    last = result.trace.rows[-1] if len(result.trace) else None
    J = built.objective(w)
    gap = last.gap if last is not None else math.nan
    print(f"reason={result.reason} iterations={result.iterations} J={J:.12g} gap={gap:.6g} bias={bias:.12g}")
    if result.reason == "max_iter":
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _solve_job(args):
    try:
        return run_solve(args)
    except InputError as exc:
        print(f"agm: {exc}", file=sys.stderr)
        return EXIT_INPUT


def cmd_solve(args, parser):
    configs = args.config or []
    if len(configs) <= 1:
        return _solve_job(args)
    runs = []
    for path in configs:
        runs.append(_parse_with_config(parser, _strip_configs(args.argv), read_config_file(path)))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_solve_job, runs))
    else:
        codes = [_solve_job(r) for r in runs]
    if EXIT_INPUT in codes:
        return EXIT_INPUT
    return EXIT_NOT_CONVERGED if EXIT_NOT_CONVERGED in codes else EXIT_OK


# ---------------------------------------------------------------- project


def read_ball_instance(path):
    """First line ``gamma r``; the remaining numbers form g."""
    values = io.read_vector(path)
    if values.shape[0] < 3:
        raise io.ParseError(path, 1, "need 'gamma r' followed by at least one entry")
    return ElasticNetBall(float(values[0]), float(values[1])), values[2:]


def ball_multiplier(g, w, gamma):
    nz = np.flatnonzero(w)
    if nz.size == 0:
        return float(np.max(np.abs(g)) / gamma - 1.0) if gamma > 0 else 0.0
    i = nz[np.argmax(np.abs(w[nz]))]
    return float((abs(g[i]) - abs(w[i])) / (abs(w[i]) + gamma))


def cmd_project(args):
    try:
        if args.kind == "qp":
            qp = io.read_qp(args.file)
            alpha, mult = solve_box_hyperplane(qp)
        else:
            ball, g = read_ball_instance(args.file)
            alpha = elastic_net_ball_project(g, ball)
            mult = 0.0 if ball.level(g) <= ball.r else ball_multiplier(g, alpha, ball.gamma)
    except OSError as exc:
        raise InputError(f"cannot read {args.file}: {exc}") from None
    except (io.ParseError, FeasibilityError, ValueError) as exc:
        raise InputError(str(exc)) from None
    lines = [f"multiplier {mult:.17g}"] + [f"{v:.17g}" for v in alpha]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- gen


def unit_ball_points(rng, n, p):
    g = rng.standard_normal((n, p))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.uniform(size=(n, 1)) ** (1.0 / p)


def generate(kind, n, p, rng, balance=0.5, noise=0.1):
    """Synthetic rows in the unit ball with labels or regression targets."""
    X = unit_ball_points(rng, n, p)
    w = rng.standard_normal(p)
    w /= np.linalg.norm(w)
    scores = X @ w
    if kind == "regression":
        return X, scores + noise * rng.standard_normal(n)
    n_pos = int(round(balance * n))
    order = np.argsort(-scores, kind="stable")
    y = -np.ones(n)
    y[order[:n_pos]] = 1.0
    if kind == "noisy":
        flip = rng.uniform(size=n) < noise
        y[flip] = -y[flip]
    return X, y


def cmd_gen(args):
    if args.n < 2 or args.p < 1:
        raise InputError("--n must be at least 2 and --p at least 1")
    if not 0 < args.balance < 1:
        raise InputError("--balance must lie in (0, 1)")
    _positive("noise", args.noise, allow_zero=True)
    rng = np.random.default_rng(args.seed)
    X, y = generate(args.kind, args.n, args.p, rng, args.balance, args.noise)
    io.write_libsvm(args.out, X, y)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(prog="agm", description="Accelerated gradient methods for regularized risk minimization.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="train a model and export its convergence trace")
    solve.add_argument("--config", action="append", help="key=value file; flags win; repeat to run several configs")
    solve.add_argument("--problem", default="svm", help="|".join(PROBLEMS))
    solve.add_argument("--scheme", default="primal-smooth", help="|".join(SCHEMES))
    solve.add_argument("--memory", default="inf", help="inf|one")
    solve.add_argument("--l-mode", default="adaptive", help="fixed|adaptive")
    solve.add_argument("--lambda", dest="lam", type=float, default=1e-2)
    solve.add_argument("--epsilon", type=float, default=1e-2)
    solve.add_argument("--gamma", type=float, default=1.0, help="elastic-net L1 weight")
    solve.add_argument("--nu", type=float, default=None, help="LPBoost cap")
    solve.add_argument("--gamma-d", type=float, default=2.0)
    solve.add_argument("--gamma-u", type=float, default=2.0)
    solve.add_argument("--l-init", type=float, default=1.0)
    solve.add_argument("--gap-tol", type=float, default=None)
    solve.add_argument("--max-iter", type=int, default=1000)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--data")
    solve.add_argument("--out", help="model file")
    solve.add_argument("--trace", help="trace path; .csv and .jsonl files are written")
    solve.add_argument("--no-stall", action="store_true", help="never stop on a stalled objective")
    solve.add_argument("--no-timing", action="store_true", help="record elapsed_ms as 0 for bitwise reproducible traces")
    solve.add_argument("--jobs", type=int, default=1)

    project = sub.add_parser("project", help="solve a projection instance from a text file")
    project.add_argument("file")
    project.add_argument("--kind", choices=("qp", "elastic-ball"), default="qp")
    project.add_argument("--out")

    gen = sub.add_parser("gen", help="write synthetic LibSVM data")
    gen.add_argument("--kind", choices=("separable", "noisy", "regression"), default="separable")
    gen.add_argument("--n", type=int, default=200)
    gen.add_argument("--p", type=int, default=10)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--balance", type=float, default=0.5)
    gen.add_argument("--noise", type=float, default=0.1)
    gen.add_argument("--out", required=True)
    return parser


def _strip_configs(argv):
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--config":
            skip = True
            continue
        if tok.startswith("--config="):
            continue
        out.append(tok)
    return out


_FLAG_KEYS = {"lambda": "lam"}


def _parse_with_config(parser, argv, conf):
    subparser = parser._subparsers._group_actions[0].choices["solve"]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in conf.items():
        dest = _FLAG_KEYS.get(key, key)
        if dest not in known or dest in ("config", "help"):
            raise InputError(f"unknown config key {key!r}")
        action = known[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = _truthy(value)
        else:
            try:
                defaults[dest] = action.type(value) if action.type else value
            except ValueError:
                raise InputError(f"bad value for {key}: {value!r}") from None
    saved = {d: known[d].default for d in defaults}
    subparser.set_defaults(**defaults)
    try:
        args = parser.parse_args(argv)
    finally:
        subparser.set_defaults(**saved)
    args.argv = argv
    return args


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="agm: %(message)s")
    try:
        if args.command == "solve":
            if args.config and len(args.config) == 1:
                args = _parse_with_config(parser, argv, read_config_file(args.config[0]))
            args.argv = argv
            return cmd_solve(args, parser)
        if args.command == "project":
            return cmd_project(args)
        return cmd_gen(args)
    except InputError as exc:
        print(f"agm: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
