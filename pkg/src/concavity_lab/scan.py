"""Concavity scans along Minkowski paths and the perturbation oracle for p(mu, K).

Curves are sampled on a uniform grid and judged by raw second differences
v[i+1] - 2 v[i] + v[i-1] against max(1e-10, 1e-6 step^2 max|v|).

The oracle perturbs the support function, h_t = h + t rho, measures
f(t) = mu(K_t) and forms the critical exponent 1 - f f'' / f'^2 at t = 0 from
Richardson-extrapolated central differences.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .body import Body2D, dilate, make_fourier, minkowski_mix, support_values
from .constants import (DEFAULT_ORACLE_DEGREE, DEFAULT_ORACLE_SAMPLES,
                        DEFAULT_ORACLE_STEP, DEFAULT_SCAN_POINTS,
                        MIN_SCAN_POINTS, ORACLE_AGREEMENT, ORACLE_GUARD,
                        ORACLE_RESCALE_RETRIES, PRNG_ALGORITHM)
from .errors import InvalidBodyError, ResolutionError, SolverError
from .measure import MeasureModel
from .operator import RhoBarSolution, concavity_power
from .quad import QuadratureSpec, interior_grid
from .report import HOLDS, VIOLATED, hypothesis_flags

logger = logging.getLogger(__name__)

T = TypeVar("T")

CURVE_CSV_HEADER = ("t", "value", "second_diff")


def _fan_out(tasks: Sequence[Callable[[], T]], threads: int) -> List[T]:
    """Run tasks, returning results in task order whatever the worker count."""

    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(task) for task in tasks]
            return [future.result() for future in futures]
    return [task() for task in tasks]


def _mass(m: MeasureModel, K: Body2D, spec: QuadratureSpec) -> float:
    return interior_grid(m, K, spec).integrate(1.0)


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


@dataclass
class ScanCurve:
    name: str
    t: np.ndarray
    values: np.ndarray
    second_diff: np.ndarray
    step: float
    tolerance: float
    min_margin: float
    verdict: str
    flags: List[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_csv_rows(self) -> List[Tuple[float, float, Optional[float]]]:
        inner = [None, *self.second_diff.tolist(), None]
        return list(zip(self.t.tolist(), self.values.tolist(), inner))

    def summary(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "points": int(self.t.size),
            "t_min": float(self.t[0]),
            "t_max": float(self.t[-1]),
            "step": self.step,
            "tolerance": self.tolerance,
            "min_margin": self.min_margin,
            "verdict": self.verdict,
            "flags": list(self.flags),
        }


def _grid(t_min: float, t_max: float, points: int) -> np.ndarray:
    if points < MIN_SCAN_POINTS:
        raise ResolutionError(f"a scan needs at least {MIN_SCAN_POINTS} points, got {points}")
    if not t_max > t_min:
        raise ValueError(f"empty scan interval [{t_min}, {t_max}]")
    return np.linspace(t_min, t_max, points)


def curve_from_values(name: str, t: np.ndarray, values: np.ndarray, flags: Sequence[str] = ()) -> ScanCurve:
    """Second differences, tolerance and verdict for sampled values on a uniform grid."""

    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    step = float(t[1] - t[0])
    second = values[2:] - 2.0 * values[1:-1] + values[:-2]
    tolerance = max(1e-10, 1e-6 * step**2 * float(np.max(np.abs(values))))
    worst = float(np.max(second))
    return ScanCurve(
        name=name,
        t=t,
        values=values,
        second_diff=second,
        step=step,
        tolerance=tolerance,
        min_margin=-worst,
        verdict=HOLDS if worst <= tolerance else VIOLATED,
        flags=list(flags),
    )


def reflect_curve(curve: ScanCurve) -> ScanCurve:
    """The same curve under t -> t_min + t_max - t, listed with ascending t."""

    lo, hi = float(curve.t[0]), float(curve.t[-1])
    return ScanCurve(
        name=curve.name,
        t=(lo + hi - curve.t)[::-1],
        values=curve.values[::-1].copy(),
        second_diff=curve.second_diff[::-1].copy(),
        step=curve.step,
        tolerance=curve.tolerance,
        min_margin=curve.min_margin,
        verdict=curve.verdict,
        flags=list(curve.flags),
    )


def scan_b(
    m: MeasureModel,
    K: Body2D,
    t_min: float = -1.0,
    t_max: float = 1.0,
    points: int = DEFAULT_SCAN_POINTS,
    spec: Optional[QuadratureSpec] = None,
    *,
    threads: int = 1,
) -> ScanCurve:
    """v(t) = log mu(e^t K)."""

    spec = spec or QuadratureSpec()
    t = _grid(t_min, t_max, points)
    tasks = [lambda s=s: math.log(_mass(m, dilate(K, math.exp(s)), spec)) for s in t]
    return curve_from_values("b", t, np.array(_fan_out(tasks, threads)), hypothesis_flags(m, K))


def _mix_values(
    m: MeasureModel, K: Body2D, L: Body2D, t: np.ndarray, spec: QuadratureSpec, threads: int
) -> np.ndarray:
    tasks = [lambda s=s: _mass(m, minkowski_mix(K, L, float(s)), spec) for s in t]
    return np.array(_fan_out(tasks, threads))


def scan_dim_bm(
    m: MeasureModel,
    K: Body2D,
    L: Body2D,
    points: int = DEFAULT_SCAN_POINTS,
    spec: Optional[QuadratureSpec] = None,
    *,
    threads: int = 1,
) -> ScanCurve:
    """v(t) = mu((1 - t) K + t L)^(1/2) on [0, 1]."""

    spec = spec or QuadratureSpec()
    t = _grid(0.0, 1.0, points)
    values = np.sqrt(_mix_values(m, K, L, t, spec, threads))
    return curve_from_values("dim-bm", t, values, hypothesis_flags(m, K, L))


def scan_log_concavity(
    m: MeasureModel,
    K: Body2D,
    L: Body2D,
    points: int = DEFAULT_SCAN_POINTS,
    spec: Optional[QuadratureSpec] = None,
    *,
    threads: int = 1,
) -> ScanCurve:
    """v(t) = log mu((1 - t) K + t L); log-concavity needs no symmetry."""

    spec = spec or QuadratureSpec()
    t = _grid(0.0, 1.0, points)
    values = np.log(_mix_values(m, K, L, t, spec, threads))
    return curve_from_values("logc", t, values)


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------


@dataclass
class PerturbationSample:
    label: str
    seed: Optional[List[int]]
    constant: float
    harmonics: List[Tuple[int, float, float]]
    t_step: float
    f_values: List[float]
    f0: float
    f1: float
    f2: float
    p_rho: Optional[float]
    indeterminate: bool
    f2_sign: int
    rescale_attempts: int = 0
    translation: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class OracleResult:
    p_hat: float
    p_pde: float
    worst: PerturbationSample
    rho_bar_sample: PerturbationSample
    samples: int
    indeterminate_count: int
    concave_violations: int
    translation_count: int
    seed: int
    degree: int
    t_step: float
    prng: str = PRNG_ALGORITHM

    @property
    def worst_seed(self) -> Optional[List[int]]:
        return self.worst.seed

    @property
    def gap(self) -> float:
        return self.p_hat - self.p_pde

    @property
    def rho_bar_gap(self) -> Optional[float]:
        p = self.rho_bar_sample.p_rho
        return None if p is None else abs(p - self.p_pde)

    @property
    def passed(self) -> bool:
        agree = self.rho_bar_gap is not None and self.rho_bar_gap <= ORACLE_AGREEMENT
        return self.p_hat >= self.p_pde - ORACLE_AGREEMENT and agree and not self.concave_violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p_hat": self.p_hat,
            "p_pde": self.p_pde,
            "gap": self.gap,
            "worst_seed": self.worst_seed,
            "indeterminate_count": self.indeterminate_count,
            "concave_violations": self.concave_violations,
            "translation_count": self.translation_count,
            "rho_bar_p": self.rho_bar_sample.p_rho,
            "rho_bar_gap": self.rho_bar_gap,
            "samples": self.samples,
            "degree": self.degree,
            "t_step": self.t_step,
            "seed": self.seed,
            "prng": self.prng,
            "worst": self.worst.to_dict(),
            "rho_bar_sample": self.rho_bar_sample.to_dict(),
            "verdict": HOLDS if self.passed else VIOLATED,
        }


def _perturbed(K: Body2D, constant: float, harmonics: Sequence[Tuple[int, float, float]], t: float) -> Body2D:
    merged = list(K.harmonics) + [(k, t * a, t * b) for k, a, b in harmonics]
    odd = any(k % 2 and (a or b) for k, a, b in harmonics)
    return make_fourier(K.a0 + t * constant, merged, K.symmetric and not odd)


def _has_translation(constant: float, harmonics: Sequence[Tuple[int, float, float]]) -> bool:
    """Order-1 harmonics move the body; such samples stay in the minimum but are counted."""

    size = max([abs(constant), *(max(abs(a), abs(b)) for _, a, b in harmonics)], default=0.0)
    return any(k == 1 and math.hypot(a, b) > 1e-12 * size for k, a, b in harmonics)


def _rescale(K: Body2D, constant: float, harmonics: Sequence[Tuple[int, float, float]]) -> float:
    """0.1 min r / (max|rho| + max|rho''|) on a fine grid."""

    count = 4 * max(64, 2 * K.max_order, 2 * max((k for k, _, _ in harmonics), default=0))
    theta = 2.0 * np.pi * np.arange(count) / count
    r = support_values(K, theta) + support_values(K, theta, 2)
    rho_body = Body2D(constant, tuple(harmonics), symmetric=False)
    rho = support_values(rho_body, theta)
    d2 = support_values(rho_body, theta, 2)
    size = float(np.max(np.abs(rho)) + np.max(np.abs(d2)))
    return 0.1 * float(np.min(r)) / size if size > 0 else 1.0


def _sample(
    m: MeasureModel,
    K: Body2D,
    f0: float,
    constant: float,
    harmonics: Sequence[Tuple[int, float, float]],
    t_step: float,
    spec: QuadratureSpec,
    *,
    label: str,
    seed: Optional[List[int]],
) -> PerturbationSample:
    scale = _rescale(K, constant, harmonics)
    attempts = 0
    while True:
        c = scale * constant
        hs = [(k, scale * a, scale * b) for k, a, b in harmonics]
        try:
            offsets = (-t_step, -0.5 * t_step, 0.5 * t_step, t_step)
            bodies = [_perturbed(K, c, hs, s) for s in offsets]
            break
        except InvalidBodyError:
            attempts += 1
            if attempts > ORACLE_RESCALE_RETRIES:
                raise
            scale *= 0.5

    fm, fmh, fph, fp = (_mass(m, body, spec) for body in bodies)
    half = 0.5 * t_step
    d1 = ((fph - fmh) / (2 * half) * 4 - (fp - fm) / (2 * t_step)) / 3
    d2 = ((fph - 2 * f0 + fmh) / half**2 * 4 - (fp - 2 * f0 + fm) / t_step**2) / 3

    indeterminate = abs(d1) < ORACLE_GUARD * f0 / t_step
    p_rho = None if indeterminate else 1.0 - f0 * d2 / (d1 * d1)
    sample = PerturbationSample(
        label=label,
        seed=seed,
        constant=c,
        harmonics=list(hs),
        t_step=t_step,
        f_values=[fm, fmh, f0, fph, fp],
        f0=f0,
        f1=d1,
        f2=d2,
        p_rho=p_rho,
        indeterminate=indeterminate,
        f2_sign=int(np.sign(d2)),
        rescale_attempts=attempts,
        translation=_has_translation(c, hs),
    )
    logger.debug("oracle sample %s %s: p_rho=%s", label, seed, p_rho)
    return sample


def random_perturbation(seed: int, index: int, degree: int) -> Tuple[float, List[Tuple[int, float, float]]]:
    """Uniform [-1, 1] coefficients up to ``degree`` from SeedSequence([seed, index])."""

    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    draws = rng.uniform(-1.0, 1.0, size=2 * degree + 1)
    return float(draws[0]), [(k, float(draws[2 * k - 1]), float(draws[2 * k])) for k in range(1, degree + 1)]


def oracle_power(
    m: MeasureModel,
    K: Body2D,
    samples: int = DEFAULT_ORACLE_SAMPLES,
    degree: int = DEFAULT_ORACLE_DEGREE,
    t_step: float = DEFAULT_ORACLE_STEP,
    seed: int = 0,
    spec: Optional[QuadratureSpec] = None,
    N: int = 32,
    *,
    threads: int = 1,
    solution: Optional[RhoBarSolution] = None,
) -> OracleResult:
    """Smallest sampled critical exponent, with rho_bar as a mandatory sample."""

    if samples < 1:
        raise ValueError(f"samples must be at least 1, got {samples}")
    if degree < 0:
        raise ValueError(f"degree must be nonnegative, got {degree}")
    if not t_step > 0:
        raise ValueError(f"t_step must be positive, got {t_step}")
    spec = spec or QuadratureSpec()
    if solution is None:
        _, solution, _ = concavity_power(m, K, N, spec)
    f0 = _mass(m, K, spec)

    constant, harmonics = solution.harmonics()
    tasks: List[Callable[[], PerturbationSample]] = [
        lambda: _sample(m, K, f0, constant, harmonics, t_step, spec, label="rho_bar", seed=None)
    ]
    for index in range(samples):
        c, hs = random_perturbation(seed, index, degree)
        tasks.append(
            lambda c=c, hs=hs, index=index: _sample(
                m, K, f0, c, hs, t_step, spec, label="random", seed=[seed, index]
            )
        )
    results = _fan_out(tasks, threads)
    rho_bar_sample, random_samples = results[0], results[1:]

    informative = [sample for sample in results if sample.p_rho is not None]
    if not informative:
        raise SolverError("no informative perturbation")
    worst = min(informative, key=lambda sample: sample.p_rho)  # type: ignore[arg-type, return-value]
    indeterminate = [sample for sample in random_samples if sample.indeterminate]
    violations = [sample for sample in indeterminate if sample.f2_sign > 0 and sample.f2 > ORACLE_GUARD * f0]
    if violations:
        logger.warning("%d indeterminate samples with f'' > 0", len(violations))
    translations = sum(sample.translation for sample in random_samples)
    if translations:
        logger.info("%d of %d random samples carry an order-1 (translation) harmonic", translations, samples)

    result = OracleResult(
        p_hat=float(worst.p_rho),  # type: ignore[arg-type]
        p_pde=solution.p_value,
        worst=worst,
        rho_bar_sample=rho_bar_sample,
        samples=samples,
        indeterminate_count=len(indeterminate),
        concave_violations=len(violations),
        translation_count=translations,
        seed=seed,
        degree=degree,
        t_step=t_step,
    )
    logger.info("oracle p_hat=%.6g p_pde=%.6g gap=%.3e", result.p_hat, result.p_pde, result.gap)
    return result


__all__ = [
    "CURVE_CSV_HEADER",
    "OracleResult",
    "PerturbationSample",
    "ScanCurve",
    "curve_from_values",
    "oracle_power",
    "random_perturbation",
    "reflect_curve",
    "scan_b",
    "scan_dim_bm",
    "scan_log_concavity",
]
