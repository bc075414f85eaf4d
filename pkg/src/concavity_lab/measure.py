"""Log-concave measures dmu = exp(-u) dx on the plane.

Every model carries its potential together with analytic gradient and
Hessian. All callables are vectorised over a trailing axis of length 2:
``u(x)`` maps ``(..., 2)`` to ``(...)``, ``grad_u`` to ``(..., 2)`` and
``hess_u`` to ``(..., 2, 2)``. Finite differences appear only in
:func:`validate_measure`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Protocol, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .constants import VALIDATION_RADIUS
from .errors import InvalidMeasureError
from .report import CheckReport, HOLDS, VIOLATED

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray], np.ndarray]

MEASURE_KINDS = ("gaussian", "quadratic", "radial", "even_power", "shifted")


@dataclass(frozen=True, eq=False)
class MeasureModel:
    kind: str
    params: Dict[str, Any]
    u: ScalarField = field(repr=False)
    grad_u: ScalarField = field(repr=False)
    hess_u: ScalarField = field(repr=False)
    even: bool = True

    @property
    def descriptor(self) -> Dict[str, Any]:
        return {"kind": self.kind, "params": dict(self.params)}

    def density(self, x: np.ndarray) -> np.ndarray:
        return np.exp(-self.u(x))


class SmoothFunction(Protocol):
    def grad(self, x: np.ndarray) -> np.ndarray: ...

    def hess(self, x: np.ndarray) -> np.ndarray: ...


def _points(x: Any) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _identity_like(x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2))


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------


def make_gaussian(sigma: float = 1.0) -> MeasureModel:
    """Isotropic Gaussian potential u(x) = |x|^2 / (2 sigma^2)."""

    if not sigma > 0:
        raise InvalidMeasureError(f"sigma must be positive, got {sigma}")
    inv = 1.0 / (sigma * sigma)

    def u(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        return 0.5 * inv * np.sum(x * x, axis=-1)

    def grad_u(x: np.ndarray) -> np.ndarray:
        return inv * _points(x)

    def hess_u(x: np.ndarray) -> np.ndarray:
        return inv * _identity_like(_points(x))

    return MeasureModel("gaussian", {"sigma": float(sigma)}, u, grad_u, hess_u, even=True)


def make_quadratic(A: Sequence[Sequence[float]]) -> MeasureModel:
    """Anisotropic Gaussian u(x) = <Ax, x> / 2 for symmetric positive definite A."""

    matrix = np.asarray(A, dtype=float)
    if matrix.shape != (2, 2):
        raise InvalidMeasureError(f"A must be 2x2, got shape {matrix.shape}")
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(matrix).max())):
        raise InvalidMeasureError("A must be symmetric")
    matrix = 0.5 * (matrix + matrix.T)
    smallest = float(np.linalg.eigvalsh(matrix)[0])
    if smallest <= 0:
        raise InvalidMeasureError(
            f"A must be positive definite; smallest eigenvalue is {smallest:.6g}", eigenvalue=smallest
        )

    def u(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        return 0.5 * np.einsum("...i,ij,...j->...", x, matrix, x)

    def grad_u(x: np.ndarray) -> np.ndarray:
        return _points(x) @ matrix.T

    def hess_u(x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(matrix, _points(x).shape[:-1] + (2, 2))

    return MeasureModel("quadratic", {"A": matrix.tolist()}, u, grad_u, hess_u, even=True)


def make_radial(g_coeffs: Sequence[float]) -> MeasureModel:
    """Rotation invariant potential u(x) = g(|x|^2/2) with g(t) = sum c_k t^k.

    Requires c_1 > 0 and c_k >= 0, which keeps the Hessian positive
    definite everywhere (including the origin).
    """

    coeffs = np.asarray(list(g_coeffs), dtype=float)
    if coeffs.ndim != 1 or coeffs.size < 2:
        raise InvalidMeasureError("g_coeffs needs at least [c_0, c_1]")
    if not coeffs[1] > 0:
        raise InvalidMeasureError(f"c_1 must be positive (Hessian degenerates at the origin), got {coeffs[1]}")
    if np.any(coeffs < 0):
        raise InvalidMeasureError("all g coefficients must be nonnegative")
    d1 = P.polyder(coeffs)
    d2 = P.polyder(coeffs, 2) if coeffs.size > 2 else np.zeros(1)

    def u(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        return P.polyval(0.5 * np.sum(x * x, axis=-1), coeffs)

    def grad_u(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        t = 0.5 * np.sum(x * x, axis=-1)
        return P.polyval(t, d1)[..., None] * x

    def hess_u(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        t = 0.5 * np.sum(x * x, axis=-1)
        outer = x[..., :, None] * x[..., None, :]
        return P.polyval(t, d1)[..., None, None] * _identity_like(x) + P.polyval(t, d2)[..., None, None] * outer

    return MeasureModel("radial", {"g_coeffs": coeffs.tolist()}, u, grad_u, hess_u, even=True)


def make_even_power(p: float = 4.0, eps: float = 0.1) -> MeasureModel:
    """u(x) = eps |x|^2 / 2 + sum_i |x_i|^p / p, regularised so the Hessian stays PD on the axes."""

    if not eps > 0:
        raise InvalidMeasureError(f"eps must be positive, got {eps}")
    if not p >= 2:
        raise InvalidMeasureError(f"p must be at least 2 for a C^2 potential, got {p}")

    def u(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        return 0.5 * eps * np.sum(x * x, axis=-1) + np.sum(np.abs(x) ** p, axis=-1) / p

    def grad_u(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        return eps * x + np.sign(x) * np.abs(x) ** (p - 1)

    def hess_u(x: np.ndarray) -> np.ndarray:
        x = _points(x)
        diagonal = eps + (p - 1) * np.abs(x) ** (p - 2)
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = diagonal[..., 0]
        out[..., 1, 1] = diagonal[..., 1]
        return out

    return MeasureModel("even_power", {"p": float(p), "eps": float(eps)}, u, grad_u, hess_u, even=True)


def shift(model: MeasureModel, center: Sequence[float]) -> MeasureModel:
    """Translate a model: x -> u(x - c). Breaks evenness unless c = 0."""

    c = np.asarray(center, dtype=float)
    if c.shape != (2,):
        raise InvalidMeasureError(f"center must have two components, got {c.shape}")

    def u(x: np.ndarray) -> np.ndarray:
        return model.u(_points(x) - c)

    def grad_u(x: np.ndarray) -> np.ndarray:
        return model.grad_u(_points(x) - c)

    def hess_u(x: np.ndarray) -> np.ndarray:
        return model.hess_u(_points(x) - c)

    params = {"base": model.descriptor, "center": c.tolist()}
    return MeasureModel("shifted", params, u, grad_u, hess_u, even=bool(model.even and not np.any(c)))


def from_descriptor(descriptor: Mapping[str, Any]) -> MeasureModel:
    """Build a model from its JSON descriptor ``{"kind": ..., "params": {...}}``."""

    kind = descriptor.get("kind")
    params = descriptor.get("params") or {}
    try:
        if kind == "gaussian":
            return make_gaussian(float(params.get("sigma", 1.0)))
        if kind == "quadratic":
            return make_quadratic(params["A"])
        if kind == "radial":
            return make_radial(params["g_coeffs"])
        if kind == "even_power":
            return make_even_power(float(params.get("p", 4.0)), float(params.get("eps", 0.1)))
        if kind == "shifted":
            return shift(from_descriptor(params["base"]), params["center"])
    except KeyError as exc:
        raise InvalidMeasureError(f"measure '{kind}' is missing parameter {exc}") from exc
    raise InvalidMeasureError(f"unknown measure kind '{kind}' (expected one of {', '.join(MEASURE_KINDS)})")


def weighted_laplacian(model: MeasureModel, psi: SmoothFunction, x: np.ndarray) -> np.ndarray:
    """L_mu psi = tr(hess psi) - <grad u, grad psi>."""

    x = _points(x)
    trace = np.trace(psi.hess(x), axis1=-2, axis2=-1)
    return trace - np.sum(model.grad_u(x) * psi.grad(x), axis=-1)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def sample_disk(count: int, seed: int, radius: float = VALIDATION_RADIUS) -> np.ndarray:
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(count))
    angle = 2.0 * np.pi * rng.random(count)
    return np.stack([r * np.cos(angle), r * np.sin(angle)], axis=-1)


def validate_measure(
    model: MeasureModel,
    sample_count: int = 1000,
    seed: int = 0,
    *,
    step: float = 1e-4,
    radius: float = VALIDATION_RADIUS,
) -> CheckReport:
    """Check evenness, Hessian positivity and derivative consistency on seeded samples.

    Gradient residuals are compared against ``10 step^2`` times the local
    third-derivative scale (estimated from the analytic Hessian) plus a
    round-off allowance; Hessian residuals likewise against the fourth
    derivative scale.
    """

    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    x = sample_disk(sample_count, seed, radius)
    eps = np.finfo(float).eps

    u0 = model.u(x)
    evenness = float(np.max(np.abs(u0 - model.u(-x))))

    hess = model.hess_u(x)
    symmetry = float(np.max(np.abs(hess - np.swapaxes(hess, -1, -2))))
    eigenvalues = np.linalg.eigvalsh(0.5 * (hess + np.swapaxes(hess, -1, -2)))
    min_eigenvalue = float(eigenvalues.min())

    grad = model.grad_u(x)
    grad_ratio = 0.0
    hess_ratio = 0.0
    grad_residual = 0.0
    hess_residual = 0.0
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = step
        u_plus, u_minus = model.u(x + e), model.u(x - e)
        g_plus, g_minus = model.grad_u(x + e), model.grad_u(x - e)
        h_plus, h_minus = model.hess_u(x + e), model.hess_u(x - e)

        fd_grad = (u_plus - u_minus) / (2 * step)
        fd_hess_col = (g_plus - g_minus) / (2 * step)
        third = np.max(np.abs(h_plus - h_minus), axis=(-2, -1)) / (2 * step)
        fourth = np.max(np.abs(h_plus - 2 * hess + h_minus), axis=(-2, -1)) / step**2

        g_err = np.abs(fd_grad - grad[..., axis])
        h_err = np.max(np.abs(fd_hess_col - hess[..., :, axis]), axis=-1)
        g_tol = 10 * step**2 * third + 10 * eps * (1 + np.abs(u0)) / step
        h_tol = 10 * step**2 * fourth + 10 * eps * (1 + np.max(np.abs(grad), axis=-1)) / step

        grad_residual = max(grad_residual, float(g_err.max()))
        hess_residual = max(hess_residual, float(h_err.max()))
        grad_ratio = max(grad_ratio, float(np.max(g_err / g_tol)))
        hess_ratio = max(hess_ratio, float(np.max(h_err / h_tol)))

    failures = []
    if model.even and evenness > 0:
        failures.append("evenness")
    if min_eigenvalue <= 0:
        failures.append("hessian not positive definite")
    if symmetry > 1e-12 * max(1.0, float(np.abs(hess).max())):
        failures.append("hessian not symmetric")
    if grad_ratio > 1 or hess_ratio > 1:
        failures.append("derivative consistency")

    flags = [] if model.even else ["measure not even"]
    if failures:
        logger.warning("measure %s failed validation: %s", model.kind, ", ".join(failures))
    return CheckReport(
        name="measure_validation",
        lhs=min_eigenvalue,
        rhs=0.0,
        margin=min_eigenvalue,
        residual=max(grad_ratio, hess_ratio),
        relative_scale=1.0,
        tolerance=1.0,
        verdict=VIOLATED if failures else HOLDS,
        kind="validation",
        resolution={"samples": sample_count, "seed": seed},
        flags=flags,
        details={
            "evenness_defect": evenness,
            "min_hessian_eigenvalue": min_eigenvalue,
            "hessian_asymmetry": symmetry,
            "gradient_residual": grad_residual,
            "hessian_residual": hess_residual,
            "gradient_residual_ratio": grad_ratio,
            "hessian_residual_ratio": hess_ratio,
            "failures": failures,
            "step": step,
            "radius": radius,
        },
    )


__all__ = [
    "MEASURE_KINDS",
    "MeasureModel",
    "SmoothFunction",
    "from_descriptor",
    "make_even_power",
    "make_gaussian",
    "make_quadratic",
    "make_radial",
    "sample_disk",
    "shift",
    "validate_measure",
    "weighted_laplacian",
]
