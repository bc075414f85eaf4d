#!/usr/bin/env python3
"""Command-line front end for the concavity lab.

Every command reads a JSON run config, runs one pipeline and writes a JSON
report (``--out`` or stdout). Exit codes: 0 pass, 1 error or failed verdict,
2 run whose inputs break the theorem hypotheses.
"""

from __future__ import annotations

import logging
import os
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import typer

from . import body as body_lib
from . import measure as measure_lib
from .config import RunConfig, default_log_level, load_config
from .errors import ConfigError
from .operator import RHO_CSV_HEADER, assemble, solve_rho_bar
from .quad import QuadratureSpec, interior_grid, moments
from .report import (HOLDS, INCONCLUSIVE, VIOLATED, dumps, hypothesis_flags,
                     report_meta, write_csv, write_json)
from .scan import (CURVE_CSV_HEADER, ScanCurve, oracle_power, scan_b,
                   scan_dim_bm, scan_log_concavity)
from .verify import run_all

PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_FLAGGED = 2

logger = logging.getLogger(__name__)


def _load_workspace_env() -> None:
    """Load .env variables so CLI defaults match the shell the lab runs in."""

    env_path = PROJECT_ROOT / ".env"
    if not env_path.exists():
        return

    try:
        for raw_line in env_path.read_text(encoding="utf-8").splitlines():
            line = raw_line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, value = line.split("=", 1)
            key = key.strip()
            if not key.startswith("CONCAVITY_LAB_") or key in os.environ:
                continue
            os.environ[key] = value.strip().strip('"').strip("'")
    except OSError:
        return


_load_workspace_env()

app = typer.Typer(help="Concavity power lab for log-concave measures on planar convex bodies")


@dataclass
class LabContext:
    threads: int
    log_level: str


@dataclass
class CommandOutcome:
    exit_code: int
    report: Dict[str, Any]


@app.callback()
def _init(
    ctx: typer.Context,
    threads: int = typer.Option(
        1,
        "--threads",
        min=1,
        envvar="CONCAVITY_LAB_THREADS",
        help="Worker cap for scan/verify/oracle fan-out",
    ),
    log_level: Optional[str] = typer.Option(
        None,
        "--log-level",
        help="Log level name (default: CONCAVITY_LAB_LOG_LEVEL or WARNING)",
    ),
) -> None:
    """Populate reusable configuration on the Typer context."""

    level = (log_level or default_log_level()).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = LabContext(threads=threads, log_level=level)


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def _inputs(config: RunConfig) -> Tuple[measure_lib.MeasureModel, body_lib.Body2D, QuadratureSpec]:
    m = measure_lib.from_descriptor(config.measure)
    K = body_lib.from_descriptor(config.body)
    return m, K, QuadratureSpec(config.resolution.M, config.resolution.S)


def _meta(config: RunConfig) -> Dict[str, Any]:
    return report_meta(
        config_hash=config.config_hash(),
        resolution=asdict(config.resolution),
        tolerance=config.tolerance,
        seed=config.seed,
    )


def _exit_code(flags: List[str], holds: bool) -> int:
    if flags:
        return EXIT_FLAGGED
    return EXIT_OK if holds else EXIT_FAILED


def cmd_power(config: RunConfig, *, threads: int = 1, write_outputs: bool = True) -> CommandOutcome:
    m, K, spec = _inputs(config)
    flags = hypothesis_flags(m, K)
    grid = interior_grid(m, K, spec)
    moment_set = moments(m, K, spec, grid=grid)
    system = assemble(m, K, config.resolution.N, spec, mu_K=moment_set.mu_K)
    solution = solve_rho_bar(system)

    report: Dict[str, Any] = {
        "command": "power",
        "measure": m.descriptor,
        "body": K.descriptor,
        **solution.summary(),
        "S": spec.S,
        "moments": moment_set.to_dict(),
        "projection_error": K.projection_error,
        "flags": flags,
        "meta": _meta(config),
    }
    if write_outputs:
        if config.outputs.rho_csv:
            write_csv(Path(config.outputs.rho_csv), RHO_CSV_HEADER, solution.to_csv_rows())
        if config.outputs.frame_csv:
            write_csv(Path(config.outputs.frame_csv), body_lib.FRAME_CSV_HEADER, system.frame.to_csv_rows())
    return CommandOutcome(_exit_code(flags, True), report)


def cmd_verify(config: RunConfig, *, threads: int = 1, write_outputs: bool = True) -> CommandOutcome:
    m, K, spec = _inputs(config)
    flags = hypothesis_flags(m, K)
    system = assemble(m, K, config.resolution.N, spec)
    solution = solve_rho_bar(system)
    checks = run_all(
        m, K, spec, config.resolution.N, tolerance=config.tolerance, threads=threads, system=system, solution=solution
    )
    counts = {verdict: sum(check.verdict == verdict for check in checks) for verdict in (HOLDS, VIOLATED, INCONCLUSIVE)}
    report = {
        "command": "verify",
        "measure": m.descriptor,
        "body": K.descriptor,
        "p": solution.p_value,
        "checks": [check.to_dict() for check in checks],
        "summary": {"total": len(checks), **counts},
        "flags": flags,
        "meta": _meta(config),
    }
    return CommandOutcome(_exit_code(flags, counts[HOLDS] == len(checks)), report)


def cmd_scan(config: RunConfig, *, threads: int = 1, write_outputs: bool = True) -> CommandOutcome:
    m, K, spec = _inputs(config)
    mode = config.scan.mode
    points = config.resolution.points
    curve: ScanCurve
    if mode == "b":
        curve = scan_b(m, K, config.scan.t_min, config.scan.t_max, points, spec, threads=threads)
    else:
        if config.second_body is None:
            raise ConfigError(f"mode '{mode}' needs a second body", field="second_body")
        L = body_lib.from_descriptor(config.second_body)
        scanner = scan_dim_bm if mode == "dim-bm" else scan_log_concavity
        curve = scanner(m, K, L, points, spec, threads=threads)

    report = {
        "command": "scan",
        "mode": mode,
        "measure": m.descriptor,
        "body": K.descriptor,
        "second_body": config.second_body,
        **curve.summary(),
        "curve": {
            "t": curve.t,
            "value": curve.values,
            "second_diff": curve.second_diff,
        },
        "meta": _meta(config),
    }
    if write_outputs and config.outputs.curve_csv:
        write_csv(Path(config.outputs.curve_csv), CURVE_CSV_HEADER, curve.to_csv_rows())
    return CommandOutcome(_exit_code(curve.flags, curve.holds), report)


def cmd_oracle(config: RunConfig, *, threads: int = 1, write_outputs: bool = True) -> CommandOutcome:
    m, K, spec = _inputs(config)
    flags = hypothesis_flags(m, K)
    result = oracle_power(
        m,
        K,
        samples=config.oracle.samples,
        degree=config.oracle.degree,
        t_step=config.oracle.t_step,
        seed=config.seed,
        spec=spec,
        N=config.resolution.N,
        threads=threads,
    )
    report = {
        "command": "oracle",
        "measure": m.descriptor,
        "body": K.descriptor,
        **result.to_dict(),
        "flags": flags,
        "meta": _meta(config),
    }
    return CommandOutcome(_exit_code(flags, result.passed), report)


COMMAND_RUNNERS = {
    "power": cmd_power,
    "verify": cmd_verify,
    "scan": cmd_scan,
    "oracle": cmd_oracle,
}


def run_command(config: RunConfig, *, threads: int = 1, write_outputs: bool = True) -> CommandOutcome:
    """Dispatch on ``config.command``; errors propagate to the caller."""

    return COMMAND_RUNNERS[config.command](config, threads=threads, write_outputs=write_outputs)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _emit(payload: Dict[str, Any], out: Optional[Path]) -> None:
    if out is None:
        typer.echo(dumps(payload), nl=False)
        return
    write_json(out, payload)
    typer.echo(f"Report written to {out}", err=True)


def _execute(
    ctx: typer.Context,
    command: str,
    config_path: Path,
    *,
    out: Optional[Path] = None,
    seed: Optional[int] = None,
    resolution: Optional[str] = None,
    mode: Optional[str] = None,
) -> None:
    lab: LabContext = ctx.obj
    try:
        config = replace(load_config(config_path), command=command)
        config = config.with_overrides(seed=seed, resolution=resolution, mode=mode)
        outcome = run_command(config, threads=lab.threads)
        target = out or (Path(config.outputs.report) if config.outputs.report else None)
        _emit(outcome.report, target)
    except (ValueError, RuntimeError, OSError) as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(code=EXIT_FAILED)
    if outcome.exit_code == EXIT_FLAGGED:
        typer.echo("warning: hypotheses violated; results are exploratory", err=True)
    raise typer.Exit(code=outcome.exit_code)


CONFIG_OPTION = typer.Option(..., "--config", "-c", help="JSON run config")
OUT_OPTION = typer.Option(None, "--out", "-o", help="Write the JSON report here instead of stdout")
SEED_OPTION = typer.Option(None, "--seed", help="Override the config seed")
RESOLUTION_OPTION = typer.Option(None, "--resolution", help="Override resolution, e.g. N=16,M=128,S=64")


@app.command()
def power(
    ctx: typer.Context,
    config: Path = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    resolution: Optional[str] = RESOLUTION_OPTION,
) -> None:
    """Solve for rho_bar and report the concavity power p(mu, K)."""

    _execute(ctx, "power", config, out=out, seed=seed, resolution=resolution)


@app.command()
def verify(
    ctx: typer.Context,
    config: Path = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    resolution: Optional[str] = RESOLUTION_OPTION,
) -> None:
    """Run every inequality and identity check."""

    _execute(ctx, "verify", config, out=out, seed=seed, resolution=resolution)


@app.command()
def scan(
    ctx: typer.Context,
    config: Path = CONFIG_OPTION,
    mode: Optional[str] = typer.Option(None, "--mode", "-m", help="b, dim-bm or logc (overrides config)"),
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    resolution: Optional[str] = RESOLUTION_OPTION,
) -> None:
    """Sample a concavity curve along dilations or Minkowski mixes."""

    _execute(ctx, "scan", config, out=out, seed=seed, resolution=resolution, mode=mode)


@app.command()
def oracle(
    ctx: typer.Context,
    config: Path = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    resolution: Optional[str] = RESOLUTION_OPTION,
) -> None:
    """Compare p(mu, K) with critical exponents of random perturbations."""

    _execute(ctx, "oracle", config, out=out, seed=seed, resolution=resolution)


@app.command()
def suite(
    ctx: typer.Context,
    config_dir: Path = typer.Option(Path("config/corpus"), "--config-dir", help="Directory of JSON run configs"),
    out: Optional[Path] = OUT_OPTION,
) -> None:
    """Run every config in a directory and report pass/fail per entry."""

    from .suite import run_suite

    lab: LabContext = ctx.obj
    try:
        report = run_suite(config_dir, threads=lab.threads)
    except (ValueError, OSError) as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(code=EXIT_FAILED)
    _emit(report.to_dict(), out)
    for entry in report.entries:
        status = "PASS" if entry.passed else "FAIL"
        typer.echo(f"{status} {entry.name} (exit {entry.exit_code}, expected {entry.expected_exit_code})", err=True)
    raise typer.Exit(code=EXIT_OK if report.failed == 0 else EXIT_FAILED)


def main() -> int:
    """Run the CLI and hand its exit status back to the caller."""

    try:
        app(prog_name="concavity-lab")
    except SystemExit as exc:
        if exc.code is None or isinstance(exc.code, int):
            return exc.code or 0
        return EXIT_FAILED
    return EXIT_OK


__all__ = [
    "COMMAND_RUNNERS",
    "CommandOutcome",
    "EXIT_FAILED",
    "EXIT_FLAGGED",
    "EXIT_OK",
    "app",
    "cmd_oracle",
    "cmd_power",
    "cmd_scan",
    "cmd_verify",
    "main",
    "run_command",
]
