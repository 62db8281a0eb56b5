"""Command-line entry point: ``gaussmax <subcommand> [options]``.

Subcommands: ``simulate``, ``pickands``, ``lawtable``, ``experiment`` and
``validate-model``.  Every subcommand accepts ``--config FILE`` holding a
JSON object; keys are the long option names (with ``_`` for ``-``) except
for ``experiment``, whose file is the full experiment description.  Unknown
keys are an error.  Flags given on the command line win over the file.

Seed precedence: ``--seed`` > ``GAUSSMAX_SEED`` > config ``seed`` > 0.

Exit codes: 0 success (all gates pass), 1 a tolerance gate failed,
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import covmodels, gpsim, limitlaws, maxstats, pickands, streams

EXIT_OK, EXIT_GATE, EXIT_USAGE = 0, 1, 2
SEED_ENV = "GAUSSMAX_SEED"

EXPERIMENT_KEYS = {"theorem", "model", "T", "reps", "seed", "theta", "r", "h", "u", "grid",
                   "H_alpha", "one_sided", "backend", "eps", "ks_tol", "max_points"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_seed(text, source: str) -> int:
    try:
        seed = int(str(text), 10)
    except ValueError:
        raise UsageError(f"{source}: seed must be a decimal integer, got {text!r}") from None
    if not (0 <= seed < 2 ** 64):
        raise UsageError(f"{source}: seed must fit in an unsigned 64-bit integer")
    return seed


def resolve_seed(flag, config_value) -> int:
    """Seed from the flag, else the environment, else the config, else 0."""
    if flag is not None:
        return _parse_seed(flag, "--seed")
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip() != "":
        return _parse_seed(env.strip(), SEED_ENV)
    if config_value is not None:
        return _parse_seed(config_value, "config seed")
    return 0


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return data


def _merge_config(args, allowed: set) -> Optional[int]:
    """Fill unset options from ``--config``; return the config seed, if any."""
    if args.config is None:
        return None
    data = _load_json(args.config)
    unknown = sorted(set(data) - allowed - {"seed"})
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    for key, value in data.items():
        if key != "seed" and getattr(args, key) is None:
            setattr(args, key, value)
    return data.get("seed")


def _threads(value) -> int:
    if value is None:
        return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)
    if int(value) < 1:
        raise UsageError("--threads must be >= 1")
    return int(value)


def _model_from_args(args) -> covmodels.CorrelationModel:
    if args.family is None or args.alpha is None:
        raise UsageError("--family and --alpha are required")
    spec = {"family": args.family, "alpha": float(args.alpha)}
    if args.r is not None:
        spec["r"] = float(args.r)
    if args.table is not None:
        spec["table"] = args.table
    try:
        return maxstats.model_from_spec(spec)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _print_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, default=maxstats._json_default) + "\n")


# --- subcommands --------------------------------------------------------------

def _add_model_flags(p):
    p.add_argument("--family", choices=["weak", "b1", "b2", "table"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--table", help="CSV file with header lag,value")


def cmd_simulate(args) -> int:
    cfg_seed = _merge_config(args, {"family", "alpha", "r", "table", "T", "step", "replication",
                                    "backend", "out", "embedding_cache"})
    seed = resolve_seed(args.seed, cfg_seed)
    model = _model_from_args(args)
    if args.T is None or args.step is None:
        raise UsageError("--T and --step are required")
    grid = gpsim.GridSpec(float(args.T), float(args.step))
    rep = int(args.replication or 0)
    stream = streams.RngStream(seed, rep)
    backend = args.backend or "circulant"
    if backend == "cholesky":
        path = gpsim.cholesky_path(model, grid, stream)
        m = None
    else:
        if args.embedding_cache:
            emb = gpsim.EmbeddingCache(args.embedding_cache).get(model, grid)
        else:
            emb = gpsim.build_embedding(model, grid)
        path = gpsim.sample_path(emb, stream)
        m = emb.m
    if args.out:
        gpsim.write_path_csv(path, args.out)
    _print_json({"seed": seed, "replication": rep, "n": grid.n, "step": grid.step, "m": m,
                 "backend": backend, "max_abs": gpsim.path_max(path), "max": gpsim.path_max(path, False)})
    return EXIT_OK


def cmd_pickands(args) -> int:
    cfg_seed = _merge_config(args, {"alpha", "lambdas", "delta_t", "reps", "csv"})
    seed = resolve_seed(args.seed, cfg_seed)
    if args.alpha is None:
        raise UsageError("--alpha is required")
    sched = None
    if args.lambdas is not None:
        raw = args.lambdas
        items = raw if isinstance(raw, list) else str(raw).split(",")
        try:
            sched = [float(v) for v in items]
        except ValueError:
            raise UsageError(f"--lambdas must be a comma separated list of numbers, got {raw!r}") from None
    est = pickands.estimate_H(float(args.alpha), sched,
                              None if args.delta_t is None else float(args.delta_t),
                              int(args.reps or 2_000_000), seed)
    lines = ["lambda,H_lambda,ci"] + [f"{lam!r},{h!r},{c!r}" for lam, h, c in est.rows()]
    table = "\n".join(lines) + "\n"
    sys.stdout.write(table)
    sys.stdout.write(f"H_hat,{est.H_hat!r},{est.ci!r}\n")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(table)
    return EXIT_OK


def lawtable_rows(law: limitlaws.LimitLaw, start: float, stop: float, step: float):
    if not (step > 0):
        raise UsageError("--step must be positive")
    if stop < start:
        raise UsageError("--to must not be below --from")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    xs = start + step * np.arange(count)
    return xs, np.asarray(law.cdf(xs), dtype=float)


def cmd_lawtable(args) -> int:
    _merge_config(args, {"law", "r", "quad_order", "start", "stop", "step", "out"})
    if args.law is None or args.start is None or args.stop is None or args.step is None:
        raise UsageError("--law, --from, --to and --step are required")
    try:
        law = limitlaws.LimitLaw(args.law, r=float(args.r or 0.0),
                                 quad_order=int(args.quad_order or limitlaws.DEFAULT_QUAD_ORDER))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    xs, ys = lawtable_rows(law, float(args.start), float(args.stop), float(args.step))
    # repr of a rounded x keeps 0.5-step grids free of float noise
    text = "x,cdf\n" + "".join(f"{round(float(x), 12)!r},{float(y)!r}\n" for x, y in zip(xs, ys))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def experiment_config(data: dict, seed_flag=None, threads: int = 1) -> maxstats.ExperimentConfig:
    """Strictly validated :class:`ExperimentConfig` from a JSON object."""
    unknown = sorted(set(data) - EXPERIMENT_KEYS)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    for key in ("theorem", "model", "T", "reps"):
        if key not in data:
            raise UsageError(f"missing config key: {key}")
    if not isinstance(data["model"], dict):
        raise UsageError("config key model must be an object")
    try:
        model = maxstats.model_from_spec(data["model"])
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    except ValueError as exc:
        raise UsageError(f"model: {exc}") from None
    kw = {}
    grid = data.get("grid")
    if grid is not None:
        if not isinstance(grid, dict) or set(grid) - {"a", "step"} or len(grid) != 1:
            raise UsageError("config key grid must be {\"a\": value} or {\"step\": value}")
        if "a" in grid:
            kw["grid_a"] = float(grid["a"])
        else:
            kw["grid_step"] = float(grid["step"])
    H = data.get("H_alpha")
    if H is not None:
        if H in maxstats.H_SOURCES:
            kw["H_source"] = H
        elif isinstance(H, (int, float)) and not isinstance(H, bool):
            kw["H_alpha"] = float(H)
            kw["H_source"] = "classical"
        else:
            raise UsageError(f"config key H_alpha must be a number or one of {maxstats.H_SOURCES}")
    for key in ("theta", "r", "h", "u", "eps", "ks_tol"):
        if key in data:
            kw[key] = float(data[key])
    for key in ("one_sided",):
        if key in data:
            kw[key] = bool(data[key])
    if "backend" in data:
        kw["backend"] = str(data["backend"])
    if "max_points" in data:
        kw["max_points"] = int(data["max_points"])
    try:
        return maxstats.ExperimentConfig(
            theorem=str(data["theorem"]), model=model, T=float(data["T"]), reps=int(data["reps"]),
            seed=resolve_seed(seed_flag, data.get("seed")), workers=threads, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_experiment(args) -> int:
    if args.config is None:
        raise UsageError("experiment requires --config FILE")
    cfg = experiment_config(_load_json(args.config), args.seed, _threads(args.threads))
    try:
        report = maxstats.run_experiment(cfg)
    except maxstats.RegimeMismatch as exc:
        raise UsageError(str(exc)) from None
    except limitlaws.NoSolution as exc:
        raise UsageError(f"threshold: {exc}") from None
    if args.out_csv:
        report.write_csv(args.out_csv)
    text = report.summary_json()
    if args.out_json:
        with open(args.out_json, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
    sys.stdout.write(text + "\n")
    return EXIT_OK if report.passed else EXIT_GATE


def cmd_validate_model(args) -> int:
    _merge_config(args, {"family", "alpha", "r", "table", "grid_step", "t_max"})
    model = _model_from_args(args)
    step = float(args.grid_step or 0.25)
    t_max = float(args.t_max or 1e4)
    rep = covmodels.validate_polya(model, step, t_max)
    reg = covmodels.regime_diagnostics(model)
    _print_json({"model": model.describe(), "status": rep.status, "passed": rep.passed,
                 "is_correlation": rep.is_correlation, "reason": rep.reason,
                 "first_violation_lag": rep.first_violation_lag,
                 "regime": reg.classification, "limit_estimate": reg.limit_estimate})
    return EXIT_OK if rep.is_correlation else EXIT_GATE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gaussmax", description="Extremes of stationary Gaussian processes.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate one sample path")
    _add_model_flags(s)
    s.add_argument("--T", type=float)
    s.add_argument("--step", type=float)
    s.add_argument("--replication", type=int)
    s.add_argument("--backend", choices=["circulant", "cholesky"])
    s.add_argument("--out", help="write the path as CSV t,value")
    s.add_argument("--embedding-cache", dest="embedding_cache")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("pickands", help="Monte Carlo Pickands constant")
    s.add_argument("--alpha", type=float)
    s.add_argument("--lambdas", help="comma separated window lengths")
    s.add_argument("--delta-t", dest="delta_t", type=float)
    s.add_argument("--reps", type=int)
    s.add_argument("--csv", help="also write the lambda table as CSV")
    s.set_defaults(func=cmd_pickands)

    s = sub.add_parser("lawtable", help="tabulate a limit CDF")
    s.add_argument("--law", choices=list(limitlaws.LimitLaw.KINDS))
    s.add_argument("--r", type=float)
    s.add_argument("--quad-order", dest="quad_order", type=int)
    s.add_argument("--from", dest="start", type=float)
    s.add_argument("--to", dest="stop", type=float)
    s.add_argument("--step", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_lawtable)

    s = sub.add_parser("experiment", help="run a limit-theorem experiment")
    s.add_argument("--out-csv", dest="out_csv")
    s.add_argument("--out-json", dest="out_json")
    s.add_argument("--threads", type=int)
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("validate-model", help="check a correlation model")
    _add_model_flags(s)
    s.add_argument("--grid-step", dest="grid_step", type=float)
    s.add_argument("--t-max", dest="t_max", type=float)
    s.set_defaults(func=cmd_validate_model)

    for name, sp in sub.choices.items():
        sp.add_argument("--config")
        sp.add_argument("--seed")
    return p


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(
                ["simulate", "pickands", "lawtable", "experiment", "validate-model"]))
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"gaussmax: error: {exc}\n")
        return EXIT_USAGE
    except (ValueError, gpsim.EmbeddingFailure, gpsim.FactorizationFailure) as exc:
        sys.stderr.write(f"gaussmax: error: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
