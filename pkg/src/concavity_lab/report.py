"""Check reports, verdicts and their JSON/CSV serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .constants import HYPOTHESES_VIOLATED, VERSION

HOLDS = "holds"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"


@dataclass
class CheckReport:
    name: str
    lhs: float
    rhs: float
    margin: float
    residual: float
    relative_scale: float
    tolerance: float
    verdict: str
    kind: str = "inequality"
    resolution: Dict[str, int] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_dict(self) -> Dict[str, Any]:
        return _clean(asdict(self))


def _scale(lhs: float, rhs: float) -> float:
    return max(abs(lhs), abs(rhs), 1.0)


def inequality(
    name: str,
    lhs: float,
    rhs: float,
    *,
    tolerance: float,
    direction: str = "le",
    scale: Optional[float] = None,
    **extra: Any,
) -> CheckReport:
    """Report for ``lhs <= rhs`` (``direction="le"``) or ``lhs >= rhs`` (``"ge"``).

    The margin is signed so that positive means the inequality holds; the
    verdict allows ``tolerance`` relative to the check scale.
    """

    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs if direction == "le" else lhs - rhs
    relative_scale = _scale(lhs, rhs) if scale is None else float(scale)
    if not math.isfinite(margin):
        verdict = INCONCLUSIVE
    else:
        verdict = HOLDS if margin >= -tolerance * relative_scale else VIOLATED
    return CheckReport(
        name=name,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        residual=max(-margin, 0.0) / relative_scale if math.isfinite(margin) else math.nan,
        relative_scale=relative_scale,
        tolerance=tolerance,
        verdict=verdict,
        kind="inequality",
        **extra,
    )


def identity(
    name: str,
    lhs: float,
    rhs: float,
    *,
    tolerance: float,
    residual: Optional[float] = None,
    scale: Optional[float] = None,
    **extra: Any,
) -> CheckReport:
    """Report for ``lhs == rhs``; ``residual`` defaults to ``|lhs - rhs| / scale``."""

    lhs, rhs = float(lhs), float(rhs)
    relative_scale = _scale(lhs, rhs) if scale is None else float(scale)
    value = abs(lhs - rhs) / relative_scale if residual is None else float(residual)
    if not math.isfinite(value):
        verdict = INCONCLUSIVE
    else:
        verdict = HOLDS if value <= tolerance else VIOLATED
    return CheckReport(
        name=name,
        lhs=lhs,
        rhs=rhs,
        margin=rhs - lhs,
        residual=value,
        relative_scale=relative_scale,
        tolerance=tolerance,
        verdict=verdict,
        kind="identity",
        **extra,
    )


def combine(name: str, parts: Sequence[CheckReport], **extra: Any) -> CheckReport:
    """Fold sub-checks into one report; holds only when every part holds."""

    worst = min(parts, key=lambda part: (part.holds, -part.residual))
    verdicts = {part.verdict for part in parts}
    if verdicts == {HOLDS}:
        verdict = HOLDS
    elif VIOLATED in verdicts:
        verdict = VIOLATED
    else:
        verdict = INCONCLUSIVE
    details = dict(extra.pop("details", {}))
    details["subchecks"] = {part.name: part.to_dict() for part in parts}
    return CheckReport(
        name=name,
        lhs=worst.lhs,
        rhs=worst.rhs,
        margin=min(part.margin for part in parts if part.kind == "inequality")
        if any(part.kind == "inequality" for part in parts)
        else worst.margin,
        residual=max(part.residual for part in parts),
        relative_scale=worst.relative_scale,
        tolerance=worst.tolerance,
        verdict=verdict,
        kind="composite",
        details=details,
        **extra,
    )


def hypothesis_flags(measure: Any, *bodies: Any) -> List[str]:
    """Flags naming which theorem hypotheses an input violates (empty when none)."""

    reasons: List[str] = []
    if not getattr(measure, "even", False):
        reasons.append("measure not even")
    for index, body in enumerate(bodies):
        if body is not None and not getattr(body, "symmetric", False):
            reasons.append("body not symmetric" if index == 0 else f"body {index + 1} not symmetric")
    return [HYPOTHESES_VIOLATED, *reasons] if reasons else []


def report_meta(
    *,
    config_hash: str,
    resolution: Dict[str, int],
    tolerance: float,
    seed: Optional[int] = None,
) -> Dict[str, Any]:
    meta: Dict[str, Any] = {
        "version": VERSION,
        "config_hash": config_hash,
        "resolution": dict(resolution),
        "tolerance": tolerance,
    }
    if seed is not None:
        meta["seed"] = seed
    return meta


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------


def _clean(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""

    if isinstance(value, dict):
        return {str(key): _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_clean(item) for item in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        number = float(value)
        return number if math.isfinite(number) else None
    return value


def dumps(payload: Any) -> str:
    return json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"


def write_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload), encoding="utf-8")


def format_number(value: Optional[float]) -> str:
    if value is None or not math.isfinite(value):
        return ""
    return format(float(value), ".17g")


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Optional[float]]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(cell) for cell in row])
    return buffer.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Optional[float]]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows), encoding="utf-8")


__all__ = [
    "CheckReport",
    "HOLDS",
    "INCONCLUSIVE",
    "VIOLATED",
    "combine",
    "csv_text",
    "dumps",
    "format_number",
    "hypothesis_flags",
    "identity",
    "inequality",
    "report_meta",
    "write_csv",
    "write_json",
]
