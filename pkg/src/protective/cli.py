"""Command-line front end.

    protective run <config>        run the scenario named in the config
    protective sweep <config>      tau-sweep table for the config's setup
    protective verify              built-in acceptance suite + shipped configs
    protective list-scenarios

Exit codes: 0 success, 1 failed verdict, 2 config error, 3 missing input
file, 4 unwritable output, 5 numerical failure during a run.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time

from . import acceptance
from .config import (
    ScenarioConfig,
    build_system_from,
    load_config,
    matrix_array,
    observable_from,
    pointer_from,
    setup_from,
    state_from,
    with_seed,
)
from .errors import ConfigError, ProtectiveError
from .linalg import HermitianOperator, set_tolerance_profile
from .measurement import PointerPreparation
from .model import build_apparatus, build_system
from .report import ScenarioReport, Table
from .scenarios import (
    SCENARIOS,
    scenario_adiabatic_retune,
    scenario_protective,
    scenario_sweep,
    scenario_tomography,
    scenario_two_box,
    scenario_von_neumann,
)

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_MISSING, EXIT_OUTPUT, EXIT_NUMERICAL = range(6)


class _MissingInput(Exception):
    pass


class _OutputFailure(Exception):
    pass


def run_scenario(cfg: ScenarioConfig) -> ScenarioReport:
    """Execute the scenario a validated config describes."""
    kind = cfg.scenario
    if kind == "sweep":
        return sweep_config(cfg)
    system = build_system_from(cfg)
    if kind == "protective":
        return scenario_protective(setup_from(cfg), state_from(cfg, system), pointer_from(cfg))
    if kind == "two_box":
        tb = cfg["two_box"]
        return scenario_two_box(
            cfg["system"]["params"]["epsilon"], tuple(cfg["switch"]["tau_grid"]),
            apparatus=build_apparatus(**cfg["apparatus"]), pointer=pointer_from(cfg),
            vn_apparatus=build_apparatus(tb["vn_n_points"], tb["vn_dq"], cfg["apparatus"]["mass_parameter"]),
            vn_pointer=PointerPreparation(0.0, tb["vn_width_sigma"]),
            coupling_strength=cfg["von_neumann"]["coupling_strength"])
    if kind == "tomography":
        specs = cfg["observables"] or ["sigma_x", "sigma_y", "sigma_z"]
        return scenario_tomography(system, cfg["tomography"]["target_index"],
                                   [observable_from(cfg, s) for s in specs], cfg["switch"]["tau"],
                                   apparatus=build_apparatus(**cfg["apparatus"]), pointer=pointer_from(cfg))
    if kind == "retune":
        rt = cfg["retune"]
        h_end = build_system(HermitianOperator(matrix_array(rt["h_end"]), name="retune.h_end"))
        return scenario_adiabatic_retune(system, h_end, rt["ramp_steps"], rt["ramp_time"], rt["level"])
    if kind == "von_neumann":
        return scenario_von_neumann(system, build_apparatus(**cfg["apparatus"]), observable_from(cfg),
                                    state_from(cfg, system), pointer_from(cfg),
                                    cfg["von_neumann"]["coupling_strength"])
    raise ConfigError([f"scenario: {kind!r} cannot be run"])


def sweep_config(cfg: ScenarioConfig) -> ScenarioReport:
    if cfg.scenario == "retune":
        raise ConfigError(["scenario: retune has no apparatus and cannot be swept"])
    grid = cfg["switch"]["tau_grid"]
    if len(grid) < 4:
        raise ConfigError([f"switch.tau_grid: a sweep needs at least 4 points, got {len(grid)}"])
    return scenario_sweep(setup_from(cfg), grid)


def _render(report: ScenarioReport, fmt: str, command: str) -> str:
    if fmt == "json":
        return report.dumps()
    if command == "sweep":
        return report.table("convergence").to_csv()
    return report.to_csv()


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise _OutputFailure(f"cannot write output {path}: {exc.strerror}") from exc


def _load(path: str, seed: int | None) -> ScenarioConfig:
    try:
        cfg = load_config(path)
    except OSError as exc:
        raise _MissingInput(f"cannot read config {path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise ConfigError([f"<file>: not valid UTF-8 ({exc.reason})"]) from exc
    if seed is not None and seed != cfg.seed:
        cfg = with_seed(cfg, seed)
    return cfg


def _cmd_config(args, command: str) -> int:
    cfg = _load(args.config, args.seed)
    report = run_scenario(cfg) if command == "run" else sweep_config(cfg)
    default_fmt = "csv" if command == "sweep" else cfg["output"]["format"]
    fmt = args.format or default_fmt
    _emit(_render(report, fmt, command), args.output or cfg["output"]["path"])
    for v in report.verdicts:
        print(v.line(), file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERDICT


def _cmd_verify(args) -> int:
    started = time.perf_counter()
    verdicts = acceptance.run_all(seed=args.seed or 0)
    lines = [v.line() for v in verdicts]
    for path in acceptance.shipped_configs():
        cfg = load_config(path)
        report = run_scenario(cfg)
        for v in report.verdicts:
            verdicts.append(dataclasses.replace(v, claim_id=f"{path.name}:{v.claim_id}"))
            lines.append(verdicts[-1].line())
    elapsed = time.perf_counter() - started
    report = ScenarioReport("verify", tables=(Table("verdicts", ("id", "passed", "value"),
                                                    tuple((v.claim_id, v.passed, v.value) for v in verdicts)),),
                            verdicts=tuple(verdicts), parameters={"seed": args.seed or 0})
    print("\n".join(lines))
    print(f"{sum(v.passed for v in verdicts)}/{len(verdicts)} verdicts passed in {elapsed:.1f}s")
    if args.output:
        _emit(_render(report, args.format or "json", "verify"), args.output)
    return EXIT_OK if report.passed else EXIT_VERDICT


def _cmd_list(args) -> int:
    width = max(map(len, SCENARIOS))
    for name, text in SCENARIOS.items():
        print(f"{name:<{width}}  {text}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), help="report format")
    common.add_argument("--seed", type=int, help="seed for randomized checks (unsigned 64-bit)")
    common.add_argument("--tolerance-profile", choices=("default", "strict"), default="default")

    parser = argparse.ArgumentParser(prog="protective", description="Protective measurement simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run the scenario described by a config"),
                       ("sweep", "tau-sweep convergence table for a config")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("config", help="path to a YAML scenario config")
    sub.add_parser("verify", parents=[common], help="run the acceptance suite and the shipped configs")
    sub.add_parser("list-scenarios", parents=[common], help="list the available scenarios")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print(f"error: --seed must be an unsigned 64-bit integer, got {args.seed}", file=sys.stderr)
        return EXIT_CONFIG
    set_tolerance_profile(args.tolerance_profile)
    try:
        if args.command in ("run", "sweep"):
            return _cmd_config(args, args.command)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_list(args)
    except _MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigError as exc:
        print("error: invalid config\n" + "\n".join(f"  {e}" for e in exc.errors), file=sys.stderr)
        return EXIT_CONFIG
    except _OutputFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    except ProtectiveError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        set_tolerance_profile("default")


if __name__ == "__main__":
    sys.exit(main())
