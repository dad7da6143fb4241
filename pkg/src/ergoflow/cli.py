"""``ergoflow`` command line: constants, experiment registry, runs and path dumps."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .estimators import EnsembleResult, run_ensemble
from .experiments import REGISTRY, parse_law
from .stable_ml import constants

CONFIG_KEYS = {"experiment", "alpha", "law", "horizon", "n_samples", "paths", "seed", "workers",
               "out", "format", "check", "tol", "checkpoint", "state", "form", "substeps", "r",
               "p", "n_grid"}
EXIT_USAGE, EXIT_CHECK = 2, 1


class UsageError(Exception):
    pass


def _number(s: str):
    """Accept ``1e6`` style integers as well as floats."""
    v = float(s)
    return int(v) if v.is_integer() and abs(v) < 2 ** 62 else v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ergoflow", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("constants", help="print the constant table as JSON")
    c.add_argument("--alpha", type=float, required=True)

    sub.add_parser("list", help="list experiments with parameters and targets")

    r = sub.add_parser("run", help="run a named experiment")
    r.add_argument("experiment", nargs="?")
    r.add_argument("--config", help="JSON file of parameters; flags override it")
    r.add_argument("--alpha", type=float)
    r.add_argument("--law")
    r.add_argument("--horizon", "--n", dest="horizon", type=_number)
    r.add_argument("--n-samples", dest="n_samples", type=_number)
    r.add_argument("--paths", type=_number)
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--out")
    r.add_argument("--format", choices=("csv", "json"))
    r.add_argument("--check", action="store_true", default=None)
    r.add_argument("--tol", type=float)
    r.add_argument("--checkpoint", help="JSON-lines file of finished paths (resumable)")
    r.add_argument("--state", type=int)
    r.add_argument("--form", choices=("i", "ii"))
    r.add_argument("--substeps", type=int)
    r.add_argument("--r", type=float)
    r.add_argument("--p", type=float)
    r.add_argument("--n-grid", dest="n_grid", type=int)

    d = sub.add_parser("dump", help="simulate one path and write it as JSON (or an orbit as CSV)")
    d.add_argument("kind", choices=("renewal", "subordinator", "ml", "orbit"))
    d.add_argument("--alpha", type=float, default=0.5)
    d.add_argument("--law", default="pareto")
    d.add_argument("--horizon", type=_number, default=100)
    d.add_argument("--seed", type=int)
    d.add_argument("--out")
    return ap


def _seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("ERGOFLOW_SEED")
    if env is None:
        raise UsageError("no seed: pass --seed or set ERGOFLOW_SEED")
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"ERGOFLOW_SEED must be an integer, got {env!r}")


def resolve_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config: {e}")
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(cfg) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for key in CONFIG_KEYS - {"experiment"}:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if args.experiment:
        cfg["experiment"] = args.experiment
    name = cfg.get("experiment")
    if name not in REGISTRY:
        raise UsageError(f"unknown experiment {name!r}; see `ergoflow list`")
    exp = REGISTRY[name]
    params = dict(exp.defaults)
    for key, v in cfg.items():
        if key in exp.defaults or key in ("alpha", "law"):
            params[key] = v
    if not 0 < float(params["alpha"]) < 1:
        raise UsageError("alpha must lie in (0, 1)")
    params["alpha"] = float(params["alpha"])
    if "law" in params:
        try:
            parse_law(params["law"], params["alpha"])
        except (ValueError, KeyError) as e:
            raise UsageError(str(e))
    if int(params.get("paths", 1)) < 1:
        raise UsageError("paths must be at least 1")
    cfg["params"] = params
    cfg["seed"] = _seed(cfg.get("seed"))
    return cfg


def check_result(exp, res: EnsembleResult, tol: float | None) -> bool:
    mean, target = res.mean, res.target
    kind = exp.check
    if kind == "decreasing":
        b = res.blocks
        return len(b) >= 2 and all(x > y for x, y in zip(b, b[1:]))
    if kind == "magnitude":
        return 0.1 <= mean / target <= 10.0
    if kind == "abs":
        return abs(mean - target) <= (tol if tol is not None else exp.extra.get("tol", 0.0))
    if kind == "rel" or tol is not None:
        t = tol if tol is not None else exp.extra["tol"]
        return abs(mean - target) <= t * abs(target)
    return res.z is not None and abs(res.z) <= 3.0


def emit_results(res: EnsembleResult, fmt: str, out: str | None) -> None:
    text = res.to_csv() if fmt == "csv" else res.to_json()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    exp = REGISTRY[cfg["experiment"]]
    p = cfg["params"]
    fn = exp.build(p)
    res = run_ensemble(fn, int(p["paths"]), cfg["seed"], int(cfg.get("workers", 1)),
                       target=float(exp.target(p)), experiment=exp.name, alpha=p["alpha"],
                       horizon=p.get("horizon"), checkpoint=cfg.get("checkpoint"))
    if res.mean is not None and not math.isfinite(res.mean):
        res.status = "divergent"
    ok = True
    if cfg.get("check"):
        ok = check_result(exp, res, cfg.get("tol"))
        res.status = "pass" if ok else "fail"
    emit_results(res, cfg.get("format", "json"), cfg.get("out"))
    return 0 if ok else EXIT_CHECK


def cmd_list() -> int:
    width = max(len(n) for n in REGISTRY)
    for name, e in REGISTRY.items():
        params = ", ".join(f"{k}={v}" for k, v in e.defaults.items())
        print(f"{name:<{width}}  target: {e.target_text}")
        print(f"{'':<{width}}  {e.summary}; defaults: {params}")
    return 0


def cmd_dump(args) -> int:
    from . import renewal, shift_models, stable_ml
    from .estimators import path_rng

    rng = path_rng(_seed(args.seed), 0)
    if args.kind == "orbit":
        w = shift_models.markov_orbit(parse_law(args.law, args.alpha), int(args.horizon), rng)
        x = w.markov_word()[: int(args.horizon)]
        y = shift_models.markov_to_event(x)
        n_tilde = shift_models.event_to_increment(y)
        lines = ["n,state,Y_n,N_n"] + [f"{i},{x[i]},{y[i]},{n_tilde[i]}" for i in range(x.size)]
        text = "\n".join(lines) + "\n"
    else:
        spec = stable_ml.StableSpec.canonical(args.alpha)
        if args.kind == "renewal":
            path = renewal.simulate_renewal(parse_law(args.law, args.alpha), rng, T=float(args.horizon)).path
        elif args.kind == "subordinator":
            path = stable_ml.simulate_subordinator(spec, np.linspace(0, float(args.horizon), 1025), rng)
        else:
            path = stable_ml.simulate_ml_path(spec, 1e-3, float(args.horizon), rng)
        text = path.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "constants":
            if not 0 < args.alpha < 1:
                raise UsageError("alpha must lie in (0, 1)")
            print(json.dumps(constants(args.alpha).as_dict(), indent=2))
            return 0
        if args.command == "list":
            return cmd_list()
        if args.command == "dump":
            return cmd_dump(args)
        return cmd_run(args)
    except UsageError as e:
        print(f"ergoflow: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
