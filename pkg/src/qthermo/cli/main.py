"""``qthermo run <experiment>``: config-driven, seeded experiments with a JSON run record.

Exit codes: 0 all checks pass, 1 a check failed, 2 config/schema error,
3 numerical failure inside a module.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
import time
from importlib import resources

import jsonschema
import numpy as np

from .. import __version__
from ..errors import QThermoError, ValidationError
from ..kernels import BACKEND
from . import experiments as ex
from .presets import PRESETS, preset

EXIT_OK, EXIT_CHECK, EXIT_SCHEMA, EXIT_NUMERICAL = 0, 1, 2, 3

RUNNERS = {
    "gibbs": ex.run_gibbs,
    "work-identities": ex.run_work_identities,
    "finite-bath": ex.run_finite_bath,
    "availability": ex.run_availability,
    "entropy-f": ex.run_entropy_f,
    "p-entropy": ex.run_p_entropy,
    "jarzynski": ex.run_jarzynski,
    "crooks": ex.run_crooks,
    "arrow-of-time": ex.run_arrow,
    "measurement-bounds": ex.run_measurement,
    "landauer": ex.run_landauer,
    "property-suite": ex.run_property_suite,
}


class ConfigError(Exception):
    pass


def load_schema() -> dict:
    return json.loads(resources.files("qthermo.cli").joinpath("schema.json").read_text())


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(experiment, config_path=None, preset_name=None, seed=None, beta=None, H=None) -> dict:
    cfg = {"experiment": experiment}
    if preset_name:
        try:
            cfg = _merge(cfg, preset(preset_name))
        except KeyError:
            raise ConfigError(f"unknown preset {preset_name!r}; available: {', '.join(sorted(PRESETS))}") from None
    if config_path:
        try:
            with open(config_path) as fh:
                cfg = _merge(cfg, json.load(fh))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if cfg.get("experiment") != experiment:
        raise ConfigError(f"config is for experiment {cfg.get('experiment')!r}, not {experiment!r}")
    if seed is not None:
        cfg["seed"] = int(seed)
    if beta is not None:
        cfg.setdefault("system", {})["beta"] = float(beta)
    if H is not None:
        cfg.setdefault("system", {})["H"] = H
    try:
        jsonschema.Draft202012Validator(load_schema()).validate(cfg)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None
    return cfg


def config_hash(cfg: dict) -> str:
    hashed = {k: v for k, v in cfg.items() if k != "output"}
    blob = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def output_dir(cfg, cli_out, digest) -> str:
    env = os.environ.get("QTHERMO_OUT")
    if env:
        return env
    if cli_out:
        return cli_out
    if cfg.get("output", {}).get("dir"):
        return cfg["output"]["dir"]
    return os.path.join("runs", f"{cfg['experiment']}-{digest[:10]}")


def execute(cfg: dict, out_dir: str, tolerance_scale: float = 1.0, threads: int = 1):
    """Run a validated config; returns ``(record, exit_code)``.  The record is also written to disk."""
    digest = config_hash(cfg)
    tol = cfg.get("tolerances", {})
    ctx = ex.Context(out_dir, cfg.get("seed", 0), tol.get("scale", 1.0) * tolerance_scale,
                     tol.get("overrides"), threads)
    start = time.perf_counter()
    status, error = EXIT_OK, None
    try:
        RUNNERS[cfg["experiment"]](cfg, ctx)
    except ValidationError as exc:
        status, error = EXIT_SCHEMA, f"{type(exc).__name__}: {exc}"
    except (QThermoError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        status, error = EXIT_NUMERICAL, f"{type(exc).__module__}.{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - start
    if status == EXIT_OK and not all(c["pass"] for c in ctx.checks):
        status = EXIT_CHECK
    record = {
        "experiment": cfg["experiment"],
        "config_hash": digest,
        "version": __version__,
        "backend": BACKEND,
        "seed": cfg.get("seed", 0),
        "wall_time_s": wall,
        "checks": ctx.checks,
        "results": ex._jsonable(ctx.results),
        "artifacts": list(ctx.artifacts),
        "exit_code": status,
        "error": error,
    }
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "run_record.json"), "w", newline="\n") as fh:
        json.dump(record, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return record, status


def _print_record(record, stream=sys.stdout):
    for c in record["checks"]:
        flag = "PASS" if c["pass"] else "FAIL"
        print(f"{flag} {c['name']}: lhs={c['lhs']:.12g} rhs={c['rhs']:.12g} "
              f"residual={c['residual']:.3e} tol={c['tolerance']:.1e}", file=stream)
    if record["error"]:
        print(f"ERROR {record['error']}", file=stream)
    print(f"exit {record['exit_code']} ({len(record['artifacts'])} artifacts, "
          f"wall {record['wall_time_s']:.2f}s)", file=stream)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qthermo", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment", choices=sorted(RUNNERS))
    run.add_argument("--config", metavar="PATH")
    run.add_argument("--preset", metavar="NAME")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", metavar="DIR")
    run.add_argument("--tolerance-scale", type=float, default=1.0, metavar="X")
    run.add_argument("--threads", type=int, default=1, metavar="N")
    run.add_argument("--beta", type=float, help="override system.beta")
    run.add_argument("--H", help="override system.H (e.g. diag:0,1)")
    run.add_argument("--quiet", action="store_true")
    sub.add_parser("presets", help="list named presets")
    sub.add_parser("schema", help="print the config JSON schema")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name in sorted(PRESETS):
            print(f"{name}\t{PRESETS[name]['experiment']}")
        return EXIT_OK
    if args.command == "schema":
        print(json.dumps(load_schema(), indent=1))
        return EXIT_OK
    try:
        if args.tolerance_scale <= 0:
            raise ConfigError("--tolerance-scale must be positive")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = resolve_config(args.experiment, args.config, args.preset, args.seed, args.beta, args.H)
    except ConfigError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    out = output_dir(cfg, args.out, config_hash(cfg))
    record, status = execute(cfg, out, args.tolerance_scale, args.threads)
    if not args.quiet:
        _print_record(record)
        print(f"record: {os.path.join(out, 'run_record.json')}")
    return status


if __name__ == "__main__":
    sys.exit(main())
