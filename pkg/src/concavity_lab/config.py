"""Run configuration: JSON config files plus environment overrides.

A run config names a measure, one or two bodies, a resolution block and the
output paths. Everything is parsed into dataclasses up front so the numerical
core never sees raw dictionaries.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from .constants import (DEFAULT_BOUNDARY_NODES, DEFAULT_DEGREE,
                        DEFAULT_ORACLE_DEGREE, DEFAULT_ORACLE_SAMPLES,
                        DEFAULT_ORACLE_STEP, DEFAULT_RADIAL_NODES,
                        DEFAULT_SCAN_POINTS, DEFAULT_TOLERANCE,
                        MAX_BOUNDARY_NODES, MAX_DEGREE, MAX_RADIAL_NODES,
                        MIN_QUADRATURE_NODES, MIN_SCAN_POINTS)
from .errors import ConfigError, ResolutionError

COMMANDS = ("power", "verify", "scan", "oracle")
SCAN_MODES = ("b", "dim-bm", "logc")


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        value = float(raw)
    except ValueError:
        return default
    return value if value > 0 else default


def default_tolerance() -> float:
    return _env_float("CONCAVITY_LAB_TOLERANCE", DEFAULT_TOLERANCE)


def default_log_level() -> str:
    return os.environ.get("CONCAVITY_LAB_LOG_LEVEL", "WARNING").upper()


# ---------------------------------------------------------------------------
# Config blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResolutionConfig:
    N: int = DEFAULT_DEGREE
    M: int = DEFAULT_BOUNDARY_NODES
    S: int = DEFAULT_RADIAL_NODES
    points: int = DEFAULT_SCAN_POINTS

    def validate(self) -> "ResolutionConfig":
        if not 1 <= self.N <= MAX_DEGREE:
            raise ResolutionError(f"resolution out of bounds: N={self.N} (1..{MAX_DEGREE})")
        if not MIN_QUADRATURE_NODES <= self.M <= MAX_BOUNDARY_NODES or self.M % 2:
            raise ResolutionError(
                f"resolution out of bounds: M={self.M} (even, {MIN_QUADRATURE_NODES}..{MAX_BOUNDARY_NODES})"
            )
        if not MIN_QUADRATURE_NODES <= self.S <= MAX_RADIAL_NODES:
            raise ResolutionError(
                f"resolution out of bounds: S={self.S} ({MIN_QUADRATURE_NODES}..{MAX_RADIAL_NODES})"
            )
        if self.points < MIN_SCAN_POINTS:
            raise ResolutionError(f"resolution out of bounds: points={self.points} (>= {MIN_SCAN_POINTS})")
        return self


@dataclass(frozen=True)
class ScanConfig:
    mode: str = "b"
    t_min: float = -1.0
    t_max: float = 1.0


@dataclass(frozen=True)
class OracleConfig:
    samples: int = DEFAULT_ORACLE_SAMPLES
    degree: int = DEFAULT_ORACLE_DEGREE
    t_step: float = DEFAULT_ORACLE_STEP


@dataclass(frozen=True)
class OutputConfig:
    report: Optional[str] = None
    rho_csv: Optional[str] = None
    curve_csv: Optional[str] = None
    frame_csv: Optional[str] = None


@dataclass(frozen=True)
class ExpectConfig:
    exit_code: int = 0
    p: Optional[float] = None
    rel_tol: float = 1e-6


@dataclass(frozen=True)
class RunConfig:
    measure: Dict[str, Any]
    body: Dict[str, Any]
    second_body: Optional[Dict[str, Any]] = None
    command: str = "power"
    resolution: ResolutionConfig = field(default_factory=ResolutionConfig)
    tolerance: float = DEFAULT_TOLERANCE
    seed: int = 0
    scan: ScanConfig = field(default_factory=ScanConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    expect: Optional[ExpectConfig] = None
    name: str = ""

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any], *, name: str = "") -> "RunConfig":
        if not isinstance(raw, Mapping):
            raise ConfigError("config root must be a JSON object")

        measure = _descriptor(raw, "measure", required=True)
        body = _descriptor(raw, "body", required=True)
        second = _descriptor(raw, "second_body", required=False)

        command = str(raw.get("command", "power"))
        if command not in COMMANDS:
            raise ConfigError(f"unknown command '{command}' (expected one of {', '.join(COMMANDS)})", field="command")

        resolution = _block(raw, "resolution", ResolutionConfig)
        try:
            resolution.validate()
        except ResolutionError as exc:
            raise ConfigError(str(exc), field="resolution") from exc

        scan = _block(raw, "scan", ScanConfig)
        if scan.mode not in SCAN_MODES:
            raise ConfigError(f"unknown mode '{scan.mode}'", field="scan.mode")
        oracle = _block(raw, "oracle", OracleConfig)
        outputs = _block(raw, "outputs", OutputConfig)
        expect = _block(raw, "expect", ExpectConfig) if "expect" in raw else None

        tolerance = _number(raw, "tolerance", default_tolerance())
        if tolerance <= 0:
            raise ConfigError("must be positive", field="tolerance")
        seed = int(_number(raw, "seed", 0))

        return cls(
            measure=measure,
            body=body,
            second_body=second,
            command=command,
            resolution=resolution,
            tolerance=tolerance,
            seed=seed,
            scan=scan,
            oracle=oracle,
            outputs=outputs,
            expect=expect,
            name=str(raw.get("name", name)),
        )

    def with_overrides(
        self,
        *,
        seed: Optional[int] = None,
        resolution: Optional[str] = None,
        mode: Optional[str] = None,
        out: Optional[str] = None,
    ) -> "RunConfig":
        updated = self
        if seed is not None:
            updated = replace(updated, seed=seed)
        if resolution:
            updated = replace(updated, resolution=parse_resolution_override(resolution, updated.resolution))
        if mode:
            if mode not in SCAN_MODES:
                raise ConfigError(f"unknown mode '{mode}'", field="--mode")
            updated = replace(updated, scan=replace(updated.scan, mode=mode))
        if out:
            updated = replace(updated, outputs=replace(updated.outputs, report=out))
        return updated

    def canonical(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload.pop("outputs", None)
        payload.pop("name", None)
        return payload

    def config_hash(self) -> str:
        """Stable blake2b digest of the parsed config (outputs excluded)."""

        hasher = hashlib.blake2b(digest_size=8)
        hasher.update(json.dumps(self.canonical(), sort_keys=True, separators=(",", ":")).encode("utf-8"))
        return f"cfg-{hasher.hexdigest()}"


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------


def _descriptor(raw: Mapping[str, Any], key: str, *, required: bool) -> Optional[Dict[str, Any]]:
    value = raw.get(key)
    if value is None:
        if required:
            raise ConfigError("missing descriptor", field=key)
        return None
    if not isinstance(value, Mapping) or "kind" not in value:
        raise ConfigError("descriptor must be an object with a 'kind' field", field=key)
    return json.loads(json.dumps(value))


def _number(raw: Mapping[str, Any], key: str, default: float) -> float:
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=key)
    return float(value)


def _block(raw: Mapping[str, Any], key: str, cls: Any) -> Any:
    value = raw.get(key) or {}
    if not isinstance(value, Mapping):
        raise ConfigError("expected an object", field=key)
    known = set(cls.__dataclass_fields__)
    unknown = sorted(set(value) - known)
    if unknown:
        raise ConfigError(f"unknown field(s) {', '.join(unknown)}", field=key)
    defaults = cls()
    kwargs: Dict[str, Any] = {}
    for name, item in value.items():
        expected = getattr(defaults, name)
        try:
            if isinstance(expected, bool):
                kwargs[name] = bool(item)
            elif isinstance(expected, int):
                if isinstance(item, bool) or float(item) != int(item):
                    raise ValueError
                kwargs[name] = int(item)
            elif isinstance(expected, float):
                kwargs[name] = float(item)
            elif item is None:
                kwargs[name] = None
            elif name in {"p", "rel_tol"}:
                kwargs[name] = float(item)
            else:
                kwargs[name] = str(item)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value {item!r}", field=f"{key}.{name}") from exc
    return cls(**kwargs)


def parse_resolution_override(text: str, base: ResolutionConfig) -> ResolutionConfig:
    """Apply an ``N=..,M=..,S=..,points=..`` override string on top of ``base``."""

    values: Dict[str, int] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"expected KEY=VALUE, got '{part}'", field="--resolution")
        key, raw_value = (item.strip() for item in part.split("=", 1))
        if key not in ResolutionConfig.__dataclass_fields__:
            raise ConfigError(f"unknown key '{key}'", field="--resolution")
        try:
            values[key] = int(raw_value)
        except ValueError as exc:
            raise ConfigError(f"'{raw_value}' is not an integer", field=f"--resolution.{key}") from exc
    return replace(base, **values).validate()


def read_raw(path: Path) -> Any:
    """Parse a JSON file; syntax errors name the line and column."""

    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def expectation(raw: Any) -> ExpectConfig:
    """The ``expect`` block of a raw config, readable even when the rest is invalid."""

    if not isinstance(raw, Mapping) or "expect" not in raw:
        return ExpectConfig()
    return _block(raw, "expect", ExpectConfig)


def load_config(path: Path) -> RunConfig:
    """Read and validate a JSON run config from ``path``."""

    return RunConfig.from_mapping(read_raw(path), name=path.stem)


__all__ = [
    "COMMANDS",
    "ExpectConfig",
    "OracleConfig",
    "OutputConfig",
    "ResolutionConfig",
    "RunConfig",
    "SCAN_MODES",
    "ScanConfig",
    "default_log_level",
    "default_tolerance",
    "expectation",
    "load_config",
    "parse_resolution_override",
    "read_raw",
]
