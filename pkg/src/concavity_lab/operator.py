"""Galerkin discretisation of the boundary operator E and the concavity power.

In the Gauss-angle chart the operator acting on rho(theta) reads

    E(rho) = -rho'' / r + <grad u, tau> rho' - H_mu rho + (1 / mu(K)) int rho dmu

and its bilinear form is

    int E(rho) phi dmu = int rho' phi' exp(-u) dtheta - int H_mu rho phi dmu
                         + (1 / mu(K)) int rho dmu int phi dmu.

The trigonometric basis is ordered [1, cos t, sin t, ..., cos Nt, sin Nt].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .body import Body2D, BoundaryFrame, boundary_frame
from .errors import InvalidBodyError, InvalidMeasureError, ResolutionError, SolverError
from .measure import MeasureModel
from .quad import QuadratureSpec, interior_grid
from .report import hypothesis_flags

logger = logging.getLogger(__name__)


def basis_orders(N: int) -> np.ndarray:
    """Harmonic order of every basis function: [0, 1, 1, 2, 2, ...]."""

    return (np.arange(2 * N + 1) + 1) // 2


def trig_basis(theta: np.ndarray, N: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Basis values and first two derivatives, each of shape (len(theta), 2N + 1)."""

    theta = np.asarray(theta, dtype=float)
    k = np.arange(1, N + 1, dtype=float)
    angle = theta[:, None] * k
    c, s = np.cos(angle), np.sin(angle)
    size = 2 * N + 1
    phi = np.zeros((theta.size, size))
    d1 = np.zeros_like(phi)
    d2 = np.zeros_like(phi)
    phi[:, 0] = 1.0
    phi[:, 1::2], phi[:, 2::2] = c, s
    d1[:, 1::2], d1[:, 2::2] = -k * s, k * c
    d2[:, 1::2], d2[:, 2::2] = -(k**2) * c, -(k**2) * s
    return phi, d1, d2


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    N: int
    M: int
    B: np.ndarray
    Lvec: np.ndarray
    mu_K: float
    frame: BoundaryFrame
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray

    @property
    def size(self) -> int:
        return 2 * self.N + 1

    @property
    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.B - self.B.T)))

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.B)

    def nodal(self, coefficients: np.ndarray) -> np.ndarray:
        return self.phi @ coefficients


def assemble(
    m: MeasureModel,
    K: Body2D,
    N: int,
    spec: Optional[QuadratureSpec] = None,
    *,
    mu_K: Optional[float] = None,
) -> GalerkinSystem:
    spec = spec or QuadratureSpec()
    if N < 1:
        raise ResolutionError(f"trigonometric degree must be at least 1, got {N}")
    if spec.M < 8 * N:
        raise ResolutionError(f"boundary resolution M={spec.M} must be at least 8N = {8 * N}")

    frame = boundary_frame(K, m, spec.M)
    if mu_K is None:
        mu_K = interior_grid(m, K, spec).integrate(1.0)
    phi, dphi, d2phi = trig_basis(frame.theta, N)

    stiffness = dphi.T @ (dphi * (frame.density * frame.dtheta)[:, None])
    curvature = phi.T @ (phi * (frame.hmu * frame.weights)[:, None])
    load = phi.T @ frame.weights
    B = stiffness - curvature + np.outer(load, load) / mu_K
    B = 0.5 * (B + B.T)
    logger.info("assembled Galerkin system of size %d (M=%d)", B.shape[0], spec.M)
    return GalerkinSystem(
        N=N, M=spec.M, B=B, Lvec=load, mu_K=float(mu_K), frame=frame, phi=phi, dphi=dphi, d2phi=d2phi
    )


# ---------------------------------------------------------------------------
# Strong form
# ---------------------------------------------------------------------------


def _strong_form(
    frame: BoundaryFrame, rho: np.ndarray, drho: np.ndarray, d2rho: np.ndarray, mu_K: float
) -> np.ndarray:
    mean_term = float(np.sum(rho * frame.weights)) / mu_K
    return -d2rho / frame.r + frame.grad_u_tangent * drho - frame.hmu * rho + mean_term


def spectral_derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """Derivative of periodic nodal data on the uniform grid; Nyquist mode dropped."""

    values = np.asarray(values, dtype=float)
    count = values.shape[-1]
    spectrum = np.fft.rfft(values)
    k = np.fft.rfftfreq(count, d=1.0 / count)
    factor = (1j * k) ** order
    if count % 2 == 0:
        factor[-1] = 0.0
    return np.fft.irfft(spectrum * factor, n=count)


def apply_operator_strong(
    m: MeasureModel,
    K: Body2D,
    rho_nodes: np.ndarray,
    spec: Optional[QuadratureSpec] = None,
    *,
    frame: Optional[BoundaryFrame] = None,
    mu_K: Optional[float] = None,
) -> np.ndarray:
    """Nodal E(rho) from nodal rho via Fourier differentiation."""

    spec = spec or QuadratureSpec()
    frame = frame or boundary_frame(K, m, spec.M)
    rho = np.asarray(rho_nodes, dtype=float)
    if rho.shape != frame.theta.shape:
        raise ResolutionError(f"expected {frame.M} nodal values, got {rho.shape}")
    if mu_K is None:
        mu_K = interior_grid(m, K, spec).integrate(1.0)
    return _strong_form(frame, rho, spectral_derivative(rho), spectral_derivative(rho, 2), mu_K)


# ---------------------------------------------------------------------------
# Solve
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RhoBarSolution:
    N: int
    M: int
    coefficients: np.ndarray
    theta: np.ndarray
    nodes: np.ndarray
    derivative: np.ndarray
    integral_rho: float
    p_value: float
    weak_residual: float
    strong_residual: float
    min_eigenvalue: float
    max_eigenvalue: float
    odd_mass: float

    def to_csv_rows(self) -> List[Tuple[float, float]]:
        return list(zip(self.theta.tolist(), self.nodes.tolist()))

    def harmonics(self) -> Tuple[float, List[Tuple[int, float, float]]]:
        """(constant term, [(k, a_k, b_k), ...]) of the solution."""

        c = self.coefficients
        return float(c[0]), [(k, float(c[2 * k - 1]), float(c[2 * k])) for k in range(1, self.N + 1)]

    def summary(self) -> dict:
        return {
            "p": self.p_value,
            "integral_rho": self.integral_rho,
            "weak_residual": self.weak_residual,
            "strong_residual": self.strong_residual,
            "min_eigenvalue": self.min_eigenvalue,
            "odd_mass": self.odd_mass,
            "N": self.N,
            "M": self.M,
        }


RHO_CSV_HEADER = ("theta", "rho_bar")


def odd_mass(coefficients: np.ndarray) -> float:
    """||odd-order coefficients|| / ||coefficients||."""

    orders = basis_orders((coefficients.size - 1) // 2)
    total = float(np.linalg.norm(coefficients))
    if total == 0.0:
        return 0.0
    return float(np.linalg.norm(coefficients[orders % 2 == 1])) / total


def solve_rho_bar(system: GalerkinSystem) -> RhoBarSolution:
    eigenvalues = system.eigenvalues()
    smallest, largest = float(eigenvalues[0]), float(eigenvalues[-1])
    if smallest <= 0.0:
        raise SolverError(
            f"Galerkin matrix is not positive definite; smallest eigenvalue {smallest:.6g}",
            smallest_eigenvalue=smallest,
        )
    try:
        factor = linalg.cho_factor(system.B, lower=True)
    except linalg.LinAlgError as exc:
        raise SolverError(
            f"Cholesky factorisation failed; smallest eigenvalue {smallest:.6g}", smallest_eigenvalue=smallest
        ) from exc
    coefficients = linalg.cho_solve(factor, system.Lvec)

    weak = float(np.linalg.norm(system.B @ coefficients - system.Lvec) / np.linalg.norm(system.Lvec))
    nodes = system.phi @ coefficients
    derivative = system.dphi @ coefficients
    integral = float(np.sum(nodes * system.frame.weights))
    if integral <= 0.0:
        raise SolverError(f"int rho_bar dmu = {integral:.6g} is not positive", smallest_eigenvalue=smallest)
    strong = _strong_form(system.frame, nodes, derivative, system.d2phi @ coefficients, system.mu_K)

    solution = RhoBarSolution(
        N=system.N,
        M=system.M,
        coefficients=coefficients,
        theta=system.frame.theta,
        nodes=nodes,
        derivative=derivative,
        integral_rho=integral,
        p_value=system.mu_K / integral,
        weak_residual=weak,
        strong_residual=float(np.max(np.abs(strong - 1.0))),
        min_eigenvalue=smallest,
        max_eigenvalue=largest,
        odd_mass=odd_mass(coefficients),
    )
    logger.info(
        "p = %.12g (N=%d, weak residual %.2e, strong residual %.2e)",
        solution.p_value, system.N, solution.weak_residual, solution.strong_residual,
    )
    return solution


def concavity_power(
    m: MeasureModel,
    K: Body2D,
    N: int = 32,
    spec: Optional[QuadratureSpec] = None,
    *,
    require_hypotheses: bool = False,
) -> Tuple[float, RhoBarSolution, GalerkinSystem]:
    """assemble -> solve; asymmetric or non-even inputs are flagged unless ``require_hypotheses``."""

    flags = hypothesis_flags(m, K)
    if flags:
        if require_hypotheses:
            if not m.even:
                raise InvalidMeasureError("measure is not even")
            raise InvalidBodyError("body is not origin-symmetric")
        logger.warning("%s: %s", flags[0], ", ".join(flags[1:]))
    system = assemble(m, K, N, spec)
    solution = solve_rho_bar(system)
    return solution.p_value, solution, system


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    p: float
    weak_residual: float
    strong_residual: float
    delta: Optional[float]


def convergence_study(
    m: MeasureModel,
    K: Body2D,
    degrees: Iterable[int] = (4, 8, 16, 32),
    spec: Optional[QuadratureSpec] = None,
) -> List[ConvergenceRow]:
    """p_N and residuals along increasing N; ``delta`` is |p_N - p_previous|."""

    spec = spec or QuadratureSpec()
    mu_K = interior_grid(m, K, spec).integrate(1.0)
    rows: List[ConvergenceRow] = []
    previous: Optional[float] = None
    for N in sorted(set(degrees)):
        solution = solve_rho_bar(assemble(m, K, N, spec, mu_K=mu_K))
        delta = None if previous is None else abs(solution.p_value - previous)
        rows.append(ConvergenceRow(N, solution.p_value, solution.weak_residual, solution.strong_residual, delta))
        previous = solution.p_value
    return rows


def basis_coefficients(constant: float, harmonics: Sequence[Tuple[int, float, float]], N: int) -> np.ndarray:
    """Coefficient vector of a trigonometric polynomial in the Galerkin ordering."""

    coefficients = np.zeros(2 * N + 1)
    coefficients[0] = constant
    for k, a, b in harmonics:
        if k > N:
            raise ResolutionError(f"harmonic order {k} exceeds degree {N}")
        coefficients[2 * k - 1] += a
        coefficients[2 * k] += b
    return coefficients


__all__ = [
    "ConvergenceRow",
    "GalerkinSystem",
    "RHO_CSV_HEADER",
    "RhoBarSolution",
    "apply_operator_strong",
    "assemble",
    "basis_coefficients",
    "basis_orders",
    "concavity_power",
    "convergence_study",
    "odd_mass",
    "solve_rho_bar",
    "spectral_derivative",
    "trig_basis",
]
