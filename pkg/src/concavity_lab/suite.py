"""Acceptance-suite runner over a directory of run configs."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from .cli import EXIT_FAILED, run_command
from .config import RunConfig, expectation, read_raw
from .constants import VERSION
from .errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class SuiteEntry:
    name: str
    command: str
    exit_code: int
    expected_exit_code: int
    passed: bool
    p: Optional[float] = None
    expected_p: Optional[float] = None
    summary: Optional[Dict[str, Any]] = None
    notes: Optional[str] = None


@dataclass
class SuiteReport:
    config_dir: str
    version: str
    total: int
    passed: int
    failed: int
    entries: List[SuiteEntry] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _summary(report: Dict[str, Any]) -> Dict[str, Any]:
    keys = ("summary", "verdict", "min_margin", "p_hat", "p_pde", "weak_residual", "flags")
    return {key: report[key] for key in keys if key in report}


def run_entry(path: Path, *, threads: int = 1) -> SuiteEntry:
    """Run one config; any error becomes a failing (or expected-to-fail) entry."""

    name = path.stem
    try:
        raw = read_raw(path)
        expected = expectation(raw)
    except ConfigError as exc:
        return SuiteEntry(name, "unknown", EXIT_FAILED, 0, False, notes=str(exc))

    command = str(raw.get("command", "power")) if isinstance(raw, dict) else "unknown"
    try:
        config = RunConfig.from_mapping(raw, name=name)
        outcome = run_command(config, threads=threads, write_outputs=False)
    except (ValueError, RuntimeError) as exc:
        passed = expected.exit_code == EXIT_FAILED
        return SuiteEntry(name, command, EXIT_FAILED, expected.exit_code, passed, notes=str(exc))

    p = outcome.report.get("p")
    passed = outcome.exit_code == expected.exit_code
    notes = None
    if expected.p is not None:
        if p is None or abs(p - expected.p) > expected.rel_tol * abs(expected.p):
            passed = False
            notes = f"p = {p} outside {expected.rel_tol:g} relative band around {expected.p}"
    return SuiteEntry(
        name,
        config.command,
        outcome.exit_code,
        expected.exit_code,
        passed,
        p=p,
        expected_p=expected.p,
        summary=_summary(outcome.report),
        notes=notes,
    )


def run_suite(config_dir: Path, *, threads: int = 1) -> SuiteReport:
    """Run every ``*.json`` in ``config_dir`` in name order."""

    if not config_dir.is_dir():
        raise ConfigError(f"corpus directory {config_dir} does not exist")
    paths = sorted(config_dir.glob("*.json"))
    if not paths:
        raise ConfigError(f"no *.json configs in {config_dir}")

    started = time.perf_counter()
    entries = [run_entry(path, threads=threads) for path in paths]
    logger.info("suite over %d configs finished in %.2f s", len(entries), time.perf_counter() - started)
    passed = sum(entry.passed for entry in entries)
    for entry in entries:
        if not entry.passed:
            logger.warning("suite entry %s failed: %s", entry.name, entry.notes or f"exit {entry.exit_code}")
    return SuiteReport(
        config_dir=str(config_dir),
        version=VERSION,
        total=len(entries),
        passed=passed,
        failed=len(entries) - passed,
        entries=entries,
    )


__all__ = ["SuiteEntry", "SuiteReport", "run_entry", "run_suite"]
