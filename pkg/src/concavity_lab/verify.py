"""Signed margins and residuals for the inequalities and identities behind p(mu, K).

Every check returns a :class:`~concavity_lab.report.CheckReport`. Averages
written ``d eta`` are taken against the uniform restriction of mu to K,
``d eta = 1_K dmu / mu(K)``, on the interior and on the boundary alike.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .body import Body2D, BoundaryFrame, boundary_frame
from .constants import DEFAULT_TOLERANCE, DIMENSION, EVENNESS_TOLERANCE, PSD_RELATIVE_FLOOR
from .errors import SolverError
from .measure import MeasureModel, weighted_laplacian
from .operator import GalerkinSystem, RhoBarSolution, apply_operator_strong, assemble, solve_rho_bar
from .quad import InteriorGrid, MomentSet, QuadratureSpec, interior_grid, moments
from .report import (INCONCLUSIVE, CheckReport, combine, hypothesis_flags,
                     identity, inequality)

logger = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TestFunction:
    """psi with analytic gradient and Hessian, vectorised like the measure potentials."""

    __test__ = False

    name: str
    value: Field = field(repr=False, compare=False)
    gradient: Field = field(repr=False, compare=False)
    hessian: Field = field(repr=False, compare=False)
    even: bool = True

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {"name": self.name}

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.value(x)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.gradient(x)

    def hess(self, x: np.ndarray) -> np.ndarray:
        return self.hessian(x)


def _diag(d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    out = np.zeros(np.shape(d1) + (2, 2))
    out[..., 0, 0] = d1
    out[..., 1, 1] = d2
    return out


def _psi1() -> TestFunction:
    return TestFunction(
        "psi1",
        lambda x: 0.5 * np.sum(x * x, axis=-1),
        lambda x: np.array(x, dtype=float),
        lambda x: _diag(np.ones(x.shape[:-1]), np.ones(x.shape[:-1])),
    )


def _psi2() -> TestFunction:
    return TestFunction(
        "psi2",
        lambda x: 0.5 * (x[..., 0] ** 2 + 3.0 * x[..., 1] ** 2),
        lambda x: np.stack([x[..., 0], 3.0 * x[..., 1]], axis=-1),
        lambda x: _diag(np.ones(x.shape[:-1]), np.full(x.shape[:-1], 3.0)),
    )


def _psi3() -> TestFunction:
    def hess(x: np.ndarray) -> np.ndarray:
        sq = np.sum(x * x, axis=-1)
        return sq[..., None, None] * np.eye(2) + 2.0 * x[..., :, None] * x[..., None, :]

    return TestFunction(
        "psi3",
        lambda x: 0.25 * np.sum(x * x, axis=-1) ** 2,
        lambda x: np.sum(x * x, axis=-1)[..., None] * x,
        hess,
    )


def _psi4() -> TestFunction:
    return TestFunction(
        "psi4",
        lambda x: x[..., 0] ** 4 / 12.0 + 0.5 * x[..., 1] ** 2,
        lambda x: np.stack([x[..., 0] ** 3 / 3.0, x[..., 1]], axis=-1),
        lambda x: _diag(x[..., 0] ** 2, np.ones(x.shape[:-1])),
    )


def _constant() -> TestFunction:
    return TestFunction(
        "constant",
        lambda x: np.ones(x.shape[:-1]),
        lambda x: np.zeros(x.shape),
        lambda x: np.zeros(x.shape[:-1] + (2, 2)),
    )


TEST_FUNCTIONS: Dict[str, TestFunction] = {
    psi.name: psi for psi in (_psi1(), _psi2(), _psi3(), _psi4(), _constant())
}
CATALOG: Tuple[str, ...] = ("psi1", "psi2", "psi3", "psi4")


def _hs_squared(matrix: np.ndarray) -> np.ndarray:
    return np.sum(matrix * matrix, axis=(-2, -1))


def _quadratic(matrix: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...ij,...j->...", v, matrix, v)


@dataclass(frozen=True, eq=False)
class _Context:
    """Shared geometry for one (m, K, spec) so checks do not rebuild grids."""

    m: MeasureModel
    K: Body2D
    spec: QuadratureSpec
    grid: InteriorGrid
    frame: BoundaryFrame
    moments: MomentSet

    @classmethod
    def build(
        cls,
        m: MeasureModel,
        K: Body2D,
        spec: Optional[QuadratureSpec],
        grid: Optional[InteriorGrid] = None,
        frame: Optional[BoundaryFrame] = None,
        moment_set: Optional[MomentSet] = None,
    ) -> "_Context":
        spec = spec or QuadratureSpec()
        grid = grid or interior_grid(m, K, spec)
        frame = frame or boundary_frame(K, m, spec.M)
        moment_set = moment_set or moments(m, K, spec, grid=grid, frame=frame)
        return cls(m, K, spec, grid, frame, moment_set)

    @property
    def resolution(self) -> Dict[str, int]:
        return {"M": self.spec.M, "S": self.spec.S}

    def boundary(self, values: Any) -> float:
        return float(np.sum(np.broadcast_to(values, self.frame.weights.shape) * self.frame.weights))


def _finish(report: CheckReport, ctx: _Context, **resolution: int) -> CheckReport:
    report.resolution = {**ctx.resolution, **resolution}
    report.flags = hypothesis_flags(ctx.m, ctx.K)
    return report


# ---------------------------------------------------------------------------
# Inequalities
# ---------------------------------------------------------------------------


def check_strong_dimbm(
    m: MeasureModel,
    K: Body2D,
    solution: RhoBarSolution,
    spec: Optional[QuadratureSpec] = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    context: Optional[_Context] = None,
) -> CheckReport:
    """int_dK h dmu >= int_dK rho_bar dmu, equivalently mu(K) / int h dmu <= p."""

    ctx = context or _Context.build(m, K, spec)
    mom = ctx.moments
    ratio = mom.mu_K / mom.bh
    report = inequality(
        "strong_dimbm",
        mom.bh,
        solution.integral_rho,
        tolerance=tolerance,
        direction="ge",
        details={"p": solution.p_value, "mu_over_bh": ratio, "p_minus_ratio": solution.p_value - ratio},
    )
    return _finish(report, ctx, N=solution.N)


def check_chain(
    m: MeasureModel,
    K: Body2D,
    solution: RhoBarSolution,
    spec: Optional[QuadratureSpec] = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    context: Optional[_Context] = None,
) -> CheckReport:
    """p >= 1 / (n - m1/mu(K)) >= 1/n, with m1 >= 0 as its own link."""

    ctx = context or _Context.build(m, K, spec)
    denominator = DIMENSION - ctx.moments.mean_m1
    chain_value = 1.0 / denominator if denominator > 0 else float("inf")
    parts = [
        inequality("chain.p_vs_chain", solution.p_value, chain_value, tolerance=tolerance, direction="ge"),
        inequality("chain.chain_vs_inverse_dimension", chain_value, 1.0 / DIMENSION, tolerance=tolerance, direction="ge"),
        inequality("chain.m1_nonnegative", ctx.moments.m1, 0.0, tolerance=tolerance, direction="ge"),
    ]
    report = combine("chain", parts, details={"p": solution.p_value, "chain_value": chain_value})
    return _finish(report, ctx, N=solution.N)


def check_local_b(
    m: MeasureModel,
    K: Body2D,
    spec: Optional[QuadratureSpec] = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    context: Optional[_Context] = None,
) -> CheckReport:
    """Var_eta(<grad u, x>) <= int <hess u x, x> d eta + int <grad u, x> d eta."""

    ctx = context or _Context.build(m, K, spec)
    mom = ctx.moments
    report = inequality(
        "local_b",
        mom.variance,
        mom.q / mom.mu_K + mom.mean_m1,
        tolerance=tolerance,
        direction="le",
        details={"moments": mom.to_dict()},
    )
    return _finish(report, ctx)


def check_hereditary_functional(
    m: MeasureModel,
    K: Body2D,
    psi: TestFunction,
    spec: Optional[QuadratureSpec] = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    context: Optional[_Context] = None,
) -> CheckReport:
    """int ||hess psi||^2 + <hess u grad psi, grad psi> d eta >= (int L psi d eta)^2 / int L(|x|^2/2) d eta."""

    ctx = context or _Context.build(m, K, spec)
    x = ctx.grid.points
    mu_K = ctx.moments.mu_K
    hess_psi, grad_psi = psi.hess(x), psi.grad(x)
    energy = ctx.grid.integrate(_hs_squared(hess_psi) + _quadratic(m.hess_u(x), grad_psi)) / mu_K
    numerator = ctx.grid.integrate(weighted_laplacian(m, psi, x)) / mu_K
    denominator = ctx.grid.integrate(weighted_laplacian(m, TEST_FUNCTIONS["psi1"], x)) / mu_K
    if denominator <= 0.0:
        raise SolverError(f"int L(|x|^2/2) d eta = {denominator:.6g} is not positive")
    report = inequality(
        f"hereditary_functional:{psi.name}",
        energy,
        numerator**2 / denominator,
        tolerance=tolerance,
        direction="ge",
        details={"mean_laplacian": numerator, "denominator": denominator},
    )
    return _finish(report, ctx)


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------


def check_action_support(
    m: MeasureModel,
    K: Body2D,
    solution: Optional[RhoBarSolution] = None,
    spec: Optional[QuadratureSpec] = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    context: Optional[_Context] = None,
) -> CheckReport:
    """E(h) = 1 + <grad u, x> - m1/mu(K) at every node."""

    ctx = context or _Context.build(m, K, spec)
    frame = ctx.frame
    action = apply_operator_strong(m, K, frame.h, ctx.spec, frame=frame, mu_K=ctx.moments.mu_K)
    target = 1.0 + frame.grad_u_dot_x - ctx.moments.mean_m1
    gap = np.abs(action - target)
    j = int(np.argmax(gap))
    scale = 1.0 + abs(ctx.moments.mean_m1)
    report = identity(
        "action_support",
        action[j],
        target[j],
        tolerance=tolerance,
        residual=float(gap[j]) / scale,
        scale=scale,
        details={"theta": float(frame.theta[j]), "max_abs_gap": float(gap[j])},
    )
    extra = {} if solution is None else {"N": solution.N}
    return _finish(report, ctx, **extra)


def check_reilly(
    m: MeasureModel,
    K: Body2D,
    psi: TestFunction,
    spec: Optional[QuadratureSpec] = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    context: Optional[_Context] = None,
) -> CheckReport:
    """Weighted Reilly formula with rho = <grad psi, nu> and tangential derivatives along the boundary."""

    ctx = context or _Context.build(m, K, spec)
    x = ctx.grid.points
    lhs = ctx.grid.integrate(weighted_laplacian(m, psi, x) ** 2)
    grad_psi = psi.grad(x)
    interior = ctx.grid.integrate(_hs_squared(psi.hess(x)) + _quadratic(m.hess_u(x), grad_psi))

    frame = ctx.frame
    xb = frame.points
    g, H = psi.grad(xb), psi.hess(xb)
    rho = np.sum(g * frame.normal, axis=-1)
    psi_s = np.sum(g * frame.tangent, axis=-1)
    rho_s = _quadratic_pair(H, frame.tangent, frame.normal) + frame.kappa * psi_s
    boundary = ctx.boundary(frame.hmu * rho**2 + frame.kappa * psi_s**2 - 2.0 * psi_s * rho_s)

    report = identity(
        f"reilly:{psi.name}",
        lhs,
        interior + boundary,
        tolerance=tolerance,
        details={"interior": interior, "boundary": boundary},
    )
    return _finish(report, ctx)


def _quadratic_pair(matrix: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...ij,...j->...", a, matrix, b)


def check_integration_by_parts(
    m: MeasureModel,
    K: Body2D,
    phi: TestFunction,
    psi: TestFunction,
    spec: Optional[QuadratureSpec] = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    context: Optional[_Context] = None,
) -> CheckReport:
    """int phi L psi dmu + int <grad phi, grad psi> dmu = int_dK phi <grad psi, nu> dmu."""

    ctx = context or _Context.build(m, K, spec)
    x = ctx.grid.points
    lhs = ctx.grid.integrate(phi(x) * weighted_laplacian(m, psi, x) + np.sum(phi.grad(x) * psi.grad(x), axis=-1))
    xb = ctx.frame.points
    rhs = ctx.boundary(phi(xb) * np.sum(psi.grad(xb) * ctx.frame.normal, axis=-1))
    report = identity(
        f"integration_by_parts:{psi.name}",
        lhs,
        rhs,
        tolerance=tolerance,
        details={"phi": phi.name, "psi": psi.name},
    )
    return _finish(report, ctx)


def check_parts_support(
    m: MeasureModel,
    K: Body2D,
    spec: Optional[QuadratureSpec] = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    context: Optional[_Context] = None,
) -> CheckReport:
    """int_dK h d eta = int_K L(|x|^2/2) d eta = n - m1/mu(K)."""

    ctx = context or _Context.build(m, K, spec)
    mom = ctx.moments
    boundary_side = mom.bh / mom.mu_K
    laplacian_side = ctx.grid.integrate(weighted_laplacian(m, TEST_FUNCTIONS["psi1"], ctx.grid.points)) / mom.mu_K
    moment_side = DIMENSION - mom.mean_m1
    parts = [
        identity("parts_support.boundary_vs_laplacian", boundary_side, laplacian_side, tolerance=tolerance),
        identity("parts_support.laplacian_vs_moments", laplacian_side, moment_side, tolerance=tolerance),
    ]
    report = combine(
        "parts_support",
        parts,
        details={"boundary": boundary_side, "laplacian": laplacian_side, "moments": moment_side},
    )
    return _finish(report, ctx)


def check_positivity(system: GalerkinSystem, *, m: Optional[MeasureModel] = None, K: Optional[Body2D] = None) -> CheckReport:
    """Smallest eigenvalue of the Galerkin form against -1e-9 ||B||."""

    eigenvalues = system.eigenvalues()
    norm = float(np.max(np.abs(eigenvalues)))
    report = inequality(
        "positivity",
        float(eigenvalues[0]),
        -PSD_RELATIVE_FLOOR * norm,
        tolerance=0.0,
        direction="ge",
        scale=max(norm, 1.0),
        details={"max_eigenvalue": float(eigenvalues[-1]), "asymmetry": system.asymmetry},
    )
    report.resolution = {"N": system.N, "M": system.M}
    if m is not None:
        report.flags = hypothesis_flags(m, K)
    return report


def check_evenness(solution: RhoBarSolution, K: Body2D, m: MeasureModel) -> CheckReport:
    """Odd-harmonic mass of rho_bar; only meaningful for symmetric K and even mu."""

    report = identity(
        "evenness",
        solution.odd_mass,
        0.0,
        tolerance=EVENNESS_TOLERANCE,
        residual=solution.odd_mass,
        scale=1.0,
    )
    report.resolution = {"N": solution.N, "M": solution.M}
    report.flags = hypothesis_flags(m, K)
    if report.flags:
        report.verdict = INCONCLUSIVE
        report.details["note"] = "rho_bar need not be even without symmetric inputs"
    return report


def check_energy_identity(
    m: MeasureModel,
    K: Body2D,
    solution: RhoBarSolution,
    spec: Optional[QuadratureSpec] = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    context: Optional[_Context] = None,
) -> CheckReport:
    """E(rho_bar) = 1 tested against rho_bar, and the positivity of int rho_bar d eta it implies."""

    ctx = context or _Context.build(m, K, spec)
    frame, mu_K = ctx.frame, ctx.moments.mu_K
    rho, drho = solution.nodes, solution.derivative
    mean_rho = ctx.boundary(rho) / mu_K
    stiffness = float(np.sum(drho**2 * frame.density) * frame.dtheta) / mu_K
    curvature = ctx.boundary(frame.hmu * rho**2) / mu_K
    parts = [
        identity("energy.tested_equation", stiffness - curvature + mean_rho**2, mean_rho, tolerance=tolerance),
        inequality("energy.mean_rho_positive", mean_rho, 0.0, tolerance=0.0, direction="ge", scale=1.0),
    ]
    report = combine(
        "energy_identity",
        parts,
        details={"stiffness": stiffness, "curvature": curvature, "mean_rho": mean_rho},
    )
    return _finish(report, ctx, N=solution.N)


def check_proof_decomposition(
    m: MeasureModel,
    K: Body2D,
    solution: RhoBarSolution,
    spec: Optional[QuadratureSpec] = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    context: Optional[_Context] = None,
) -> CheckReport:
    """Split int (h - rho_bar) d eta into (A) <= 0 and (B) equal to the local-B margin.

    With f = rho_bar - h,
    (A) = int_dK f <grad u, x> d eta - int_dK f d eta * int_K <grad u, x> d eta and
    (B) = int_dK h <grad u, x> d eta - (m1/mu(K)) int_dK h d eta.
    """

    ctx = context or _Context.build(m, K, spec)
    frame, mom = ctx.frame, ctx.moments
    mu_K = mom.mu_K
    f = solution.nodes - frame.h
    radial = frame.grad_u_dot_x
    term_a = ctx.boundary(f * radial) / mu_K - ctx.boundary(f) / mu_K * mom.mean_m1
    term_b_boundary = ctx.boundary(frame.h * radial) / mu_K - mom.mean_m1 * mom.bh / mu_K
    local_b_margin = mom.q / mu_K + mom.mean_m1 - mom.variance
    total = -ctx.boundary(f) / mu_K
    parts = [
        inequality("decomposition.a_nonpositive", term_a, 0.0, tolerance=tolerance, direction="le"),
        identity("decomposition.sum", term_a + local_b_margin, total, tolerance=tolerance),
        identity("decomposition.b_local_b", term_b_boundary, local_b_margin, tolerance=tolerance),
    ]
    report = combine(
        "proof_decomposition",
        parts,
        details={"A": term_a, "B": local_b_margin, "B_boundary": term_b_boundary, "h_minus_rho": total},
    )
    return _finish(report, ctx, N=solution.N)


# ---------------------------------------------------------------------------
# Aggregate
# ---------------------------------------------------------------------------


def _partner(name: str) -> TestFunction:
    index = CATALOG.index(name)
    return TEST_FUNCTIONS[CATALOG[(index + 1) % len(CATALOG)]]


def run_all(
    m: MeasureModel,
    K: Body2D,
    spec: Optional[QuadratureSpec] = None,
    N: int = 32,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    threads: int = 1,
    system: Optional[GalerkinSystem] = None,
    solution: Optional[RhoBarSolution] = None,
) -> List[CheckReport]:
    """Every check for (m, K), fanned out over ``threads`` workers and sorted by name."""

    ctx = _Context.build(m, K, spec)
    if system is None:
        system = assemble(m, K, N, ctx.spec, mu_K=ctx.moments.mu_K)
    if solution is None:
        solution = solve_rho_bar(system)
    options = {"tolerance": tolerance, "context": ctx}

    tasks: List[Callable[[], CheckReport]] = [
        lambda: check_strong_dimbm(m, K, solution, **options),
        lambda: check_chain(m, K, solution, **options),
        lambda: check_local_b(m, K, **options),
        lambda: check_action_support(m, K, solution, **options),
        lambda: check_proof_decomposition(m, K, solution, **options),
        lambda: check_parts_support(m, K, **options),
        lambda: check_energy_identity(m, K, solution, **options),
        lambda: check_positivity(system, m=m, K=K),
        lambda: check_evenness(solution, K, m),
    ]
    for name in CATALOG:
        psi = TEST_FUNCTIONS[name]
        tasks.append(lambda psi=psi: check_reilly(m, K, psi, **options))
        tasks.append(lambda psi=psi: check_hereditary_functional(m, K, psi, **options))
        tasks.append(lambda psi=psi: check_integration_by_parts(m, K, _partner(psi.name), psi, **options))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(task) for task in tasks]
            reports = [future.result() for future in futures]
    else:
        reports = [task() for task in tasks]

    failing = [report.name for report in reports if not report.holds]
    if failing:
        logger.warning("checks not holding: %s", ", ".join(sorted(failing)))
    return sorted(reports, key=lambda report: report.name)


__all__ = [
    "CATALOG",
    "TEST_FUNCTIONS",
    "TestFunction",
    "check_action_support",
    "check_chain",
    "check_energy_identity",
    "check_evenness",
    "check_hereditary_functional",
    "check_integration_by_parts",
    "check_local_b",
    "check_parts_support",
    "check_positivity",
    "check_proof_decomposition",
    "check_reilly",
    "check_strong_dimbm",
    "run_all",
]
