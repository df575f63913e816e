"""Command-line entry point: free-form runs, sweeps and the pinned figure experiments."""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from .artifacts import jsonable, write_json
from .ensemble import EnsembleError
from .experiments import (
    FIGURES,
    ExperimentSpec,
    figure_path,
    load_document,
    run_experiment,
    series_configs,
    summarize,
    write_artifacts,
)
from .field import ConfigurationError
from .params import DomainError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
SWEEPS = {
    "sweep-area": ("theta0", "fig3"),
    "sweep-damping": ("gamma_par", "damping"),
    "sweep-temperature": ("beta", "fig4"),
    "sweep-gamma0": ("gamma0", "fig5"),
}
DEFAULT_FULL_N_TRAJ = 4000


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML document or manifest.json to start from")
    p.add_argument("--out", help="artifact directory (default: runs/<command>)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--n-traj", type=int, help="trajectories per ensemble")
    p.add_argument("--paper-scale", action="store_true", help="use the full trajectory count of the experiment")
    p.add_argument("--deterministic", action="store_true", help="switch all noise off")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="repeatable config override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sitsqueeze", description="Positive-P pulse squeezing in a two-level medium.")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("run", help="one ensemble from a config"))
    for name, (axis, _) in SWEEPS.items():
        p = sub.add_parser(name, help=f"sweep along {axis}")
        _common(p)
        p.add_argument("--values", help="comma-separated sweep values (areas in units of pi)")
    for name in FIGURES:
        _common(sub.add_parser(name, help=f"pinned experiment {name}"))
    return parser


def _apply_flags(config, spec: ExperimentSpec, args):
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"run.master_seed={args.seed}")
    if args.paper_scale:
        overrides.append(f"run.n_traj={spec.full_n_traj or DEFAULT_FULL_N_TRAJ}")
    if args.n_traj is not None:
        overrides.append(f"run.n_traj={args.n_traj}")
    if args.deterministic:
        overrides.append("run.noise=false")
    return config.with_overrides(overrides) if overrides else config


def prepare(args) -> tuple:
    """(base config, experiment spec) for the parsed arguments."""
    cmd = args.command
    if cmd in FIGURES:
        path = args.config or figure_path(cmd)
    elif cmd in SWEEPS:
        path = args.config or figure_path(SWEEPS[cmd][1])
    else:
        path = args.config or figure_path("default")
    config, spec = load_document(path)
    if cmd == "run":
        spec = ExperimentSpec(name="run", full_n_traj=spec.full_n_traj, title=spec.title)
    elif cmd in SWEEPS:
        values = None
        if getattr(args, "values", None):
            try:
                values = [float(v) for v in args.values.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigurationError(f"bad --values: {exc}") from exc
        spec = spec.with_axis(SWEEPS[cmd][0], values)
    config = _apply_flags(config, spec, args)
    # fail early on any invalid series
    for _, cfg in series_configs(config, spec):
        cfg.validate()
    return config, spec


def _error(out: Path | None, code: int, kind: str, exc: Exception, diagnostics: dict | None = None) -> int:
    payload = {"error": kind, "message": str(exc), "exit_code": code}
    if diagnostics:
        payload["diagnostics"] = diagnostics
    if code == EXIT_NUMERIC:
        payload["traceback"] = traceback.format_exception_only(type(exc), exc)
    print(json.dumps(jsonable(payload), default=str), file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "error.json", payload)
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out) if args.out else Path("runs") / args.command
    try:
        config, spec = prepare(args)
    except (ConfigurationError, DomainError) as exc:
        return _error(out, EXIT_CONFIG, "invalid_config", exc)
    try:
        result = run_experiment(config, spec, args.workers, log=lambda m: print(m, file=sys.stderr))
    except ConfigurationError as exc:
        return _error(out, EXIT_CONFIG, "invalid_config", exc)
    except EnsembleError as exc:
        return _error(out, EXIT_NUMERIC, "numerical_failure", exc, exc.diagnostics)
    except (FloatingPointError, ArithmeticError, ValueError) as exc:
        return _error(out, EXIT_NUMERIC, "numerical_failure", exc)
    try:
        paths = write_artifacts(result, out, args.command)
    except OSError as exc:
        return _error(None, EXIT_CONFIG, "unwritable_output", exc)
    report = {"out": str(out), "files": {k: str(v) for k, v in paths.items()}, "summary": summarize(result)}
    print(json.dumps(jsonable(report), default=str, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
