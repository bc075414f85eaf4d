"""Weighted quadrature over a body and its boundary.

Interior integrals use the star-shaped chart (s, theta) -> s x(theta) with
area element s h(theta) r(theta) ds dtheta: trapezoid in theta, Gauss-Legendre
in s on [0, 1]. Boundary integrals are the trapezoid sum against the frame
weights w_j = exp(-u) r dtheta.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np

from .body import Body2D, BoundaryFrame, boundary_frame, support_values
from .constants import (DEFAULT_BOUNDARY_NODES, DEFAULT_RADIAL_NODES,
                        DIMENSION, MIN_QUADRATURE_NODES)
from .errors import ResolutionError
from .measure import MeasureModel

Integrand = Callable[[np.ndarray], Any]
BoundaryData = Union[float, np.ndarray, Callable[[BoundaryFrame], Any]]


@dataclass(frozen=True)
class QuadratureSpec:
    M: int = DEFAULT_BOUNDARY_NODES
    S: int = DEFAULT_RADIAL_NODES

    def __post_init__(self) -> None:
        if self.M % 2 or self.M < MIN_QUADRATURE_NODES:
            raise ResolutionError(f"M must be even and at least {MIN_QUADRATURE_NODES}, got {self.M}")
        if self.S < MIN_QUADRATURE_NODES:
            raise ResolutionError(f"S must be at least {MIN_QUADRATURE_NODES}, got {self.S}")

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.M, 2 * self.S)


@lru_cache(maxsize=32)
def _radial_rule(S: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(S)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclass(frozen=True, eq=False)
class InteriorGrid:
    """Chart nodes of shape (S, M, 2) with Lebesgue and mu-weighted cell weights."""

    points: np.ndarray
    area_weights: np.ndarray
    weights: np.ndarray

    def integrate(self, values: Any, *, weighted: bool = True) -> float:
        values = np.broadcast_to(np.asarray(values, dtype=float), self.weights.shape)
        return float(np.sum(values * (self.weights if weighted else self.area_weights)))


def interior_grid(m: Optional[MeasureModel], K: Body2D, spec: Optional[QuadratureSpec] = None) -> InteriorGrid:
    """Chart nodes for K; without a measure the weighted and Lebesgue weights coincide."""

    spec = spec or QuadratureSpec()
    if spec.M < 4 * K.max_order:
        raise ResolutionError(f"M={spec.M} too small for harmonic order {K.max_order}")
    theta = 2.0 * np.pi * np.arange(spec.M) / spec.M
    h = support_values(K, theta)
    dh = support_values(K, theta, 1)
    r = h + support_values(K, theta, 2)
    boundary = np.stack(
        [h * np.cos(theta) - dh * np.sin(theta), h * np.sin(theta) + dh * np.cos(theta)], axis=-1
    )
    s, ws = _radial_rule(spec.S)
    points = s[:, None, None] * boundary[None, :, :]
    jacobian = (s * ws)[:, None] * (h * r)[None, :] * (2.0 * np.pi / spec.M)
    weights = jacobian if m is None else jacobian * m.density(points)
    return InteriorGrid(points=points, area_weights=jacobian, weights=weights)


def interior_integral(
    m: MeasureModel,
    K: Body2D,
    f: Integrand,
    spec: Optional[QuadratureSpec] = None,
    *,
    weighted: bool = True,
    grid: Optional[InteriorGrid] = None,
) -> float:
    """Approximate int_K f exp(-u) dx (or int_K f dx with ``weighted=False``)."""

    grid = grid or interior_grid(m, K, spec)
    return grid.integrate(f(grid.points), weighted=weighted)


def lebesgue_area(K: Body2D, spec: Optional[QuadratureSpec] = None) -> float:
    """|K| through the same chart with the weight overridden to 1."""

    return interior_grid(None, K, spec).integrate(1.0, weighted=False)


def boundary_integral(
    m: MeasureModel,
    K: Body2D,
    g: BoundaryData,
    spec: Optional[QuadratureSpec] = None,
    *,
    frame: Optional[BoundaryFrame] = None,
) -> float:
    """sum_j g_j w_j; ``g`` is a constant, nodal values or a callable of the frame."""

    if frame is None:
        frame = boundary_frame(K, m, (spec or QuadratureSpec()).M)
    values = g(frame) if callable(g) else g
    values = np.broadcast_to(np.asarray(values, dtype=float), frame.weights.shape)
    return float(np.sum(values * frame.weights))


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSet:
    mu_K: float
    m1: float
    m2: float
    q: float
    bh: float
    bp: float

    @property
    def mean_m1(self) -> float:
        return self.m1 / self.mu_K

    @property
    def variance(self) -> float:
        """Variance of <grad u, x> under the normalised restriction of mu to K."""

        return self.m2 / self.mu_K - self.mean_m1**2

    @property
    def parts_defect(self) -> float:
        """|bh - (n mu_K - m1)| / bh."""

        return abs(self.bh - (DIMENSION * self.mu_K - self.m1)) / abs(self.bh)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def moments(
    m: MeasureModel,
    K: Body2D,
    spec: Optional[QuadratureSpec] = None,
    *,
    grid: Optional[InteriorGrid] = None,
    frame: Optional[BoundaryFrame] = None,
) -> MomentSet:
    spec = spec or QuadratureSpec()
    grid = grid or interior_grid(m, K, spec)
    frame = frame or boundary_frame(K, m, spec.M)

    x = grid.points
    grad = m.grad_u(x)
    radial = np.sum(grad * x, axis=-1)
    hess_form = np.einsum("...i,...ij,...j->...", x, m.hess_u(x), x)
    return MomentSet(
        mu_K=grid.integrate(1.0),
        m1=grid.integrate(radial),
        m2=grid.integrate(radial * radial),
        q=grid.integrate(hess_form),
        bh=boundary_integral(m, K, frame.h, frame=frame),
        bp=boundary_integral(m, K, 1.0, frame=frame),
    )


__all__ = [
    "InteriorGrid",
    "MomentSet",
    "QuadratureSpec",
    "boundary_integral",
    "interior_grid",
    "interior_integral",
    "lebesgue_area",
    "moments",
]
