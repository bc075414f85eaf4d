"""Planar C^2_+ convex bodies given by trigonometric support functions.

A body is parametrised by the angle theta of its outer normal, so
h(theta) = a0 + sum_k a_k cos(k theta) + b_k sin(k theta). The boundary point
with normal nu(theta) = (cos, sin) is x(theta) = h nu + h' tau, the curvature
radius is r = h + h'' and x'(theta) = r tau. Minkowski sums and dilations act
linearly on the coefficients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .constants import DEFAULT_ELLIPSE_DEGREE, PROJECTION_TOLERANCE
from .errors import InvalidBodyError, ResolutionError
from .measure import MeasureModel

logger = logging.getLogger(__name__)

BODY_KINDS = ("disk", "ellipse", "fourier")

Harmonic = Tuple[int, float, float]


def _normalise(harmonics: Iterable[Sequence[float]]) -> Tuple[Harmonic, ...]:
    """Merge duplicate orders, drop all-zero entries, sort by order."""

    merged: Dict[int, List[float]] = {}
    for entry in harmonics:
        if len(entry) != 3:
            raise InvalidBodyError(f"harmonic must be (k, a_k, b_k), got {tuple(entry)!r}")
        k_raw, a, b = entry
        k = int(k_raw)
        if k != k_raw or k < 1:
            raise InvalidBodyError(f"harmonic order must be an integer >= 1, got {k_raw!r}")
        slot = merged.setdefault(k, [0.0, 0.0])
        slot[0] += float(a)
        slot[1] += float(b)
    return tuple((k, a, b) for k, (a, b) in sorted(merged.items()) if a != 0.0 or b != 0.0)


@dataclass(frozen=True)
class Body2D:
    a0: float
    harmonics: Tuple[Harmonic, ...] = ()
    symmetric: bool = True
    projection_error: float = 0.0
    source: Optional[Dict[str, Any]] = field(default=None, compare=False, hash=False)

    @property
    def max_order(self) -> int:
        return max((k for k, _, _ in self.harmonics), default=0)

    @property
    def orders(self) -> np.ndarray:
        return np.array([k for k, _, _ in self.harmonics], dtype=float)

    @property
    def cos_coeffs(self) -> np.ndarray:
        return np.array([a for _, a, _ in self.harmonics], dtype=float)

    @property
    def sin_coeffs(self) -> np.ndarray:
        return np.array([b for _, _, b in self.harmonics], dtype=float)

    @property
    def descriptor(self) -> Dict[str, Any]:
        if self.source is not None:
            return dict(self.source)
        return {
            "kind": "fourier",
            "a0": self.a0,
            "harmonics": [list(entry) for entry in self.harmonics],
            "symmetric": self.symmetric,
        }


def support_values(body: Body2D, theta: np.ndarray, derivative: int = 0) -> np.ndarray:
    """h^(derivative)(theta) evaluated analytically from the coefficients."""

    theta = np.asarray(theta, dtype=float)
    if derivative == 0:
        out = np.full(theta.shape, body.a0)
    else:
        out = np.zeros(theta.shape)
    if not body.harmonics:
        return out
    k = body.orders
    angle = theta[..., None] * k
    c, s = np.cos(angle), np.sin(angle)
    a, b = body.cos_coeffs, body.sin_coeffs
    # d/dtheta rotates (cos, sin) -> (-sin, cos) with a factor k.
    phase = derivative % 4
    if phase == 0:
        terms = a * c + b * s
    elif phase == 1:
        terms = -a * s + b * c
    elif phase == 2:
        terms = -(a * c + b * s)
    else:
        terms = a * s - b * c
    return out + np.sum(terms * k**derivative, axis=-1)


def curvature_radius(body: Body2D, theta: np.ndarray) -> np.ndarray:
    return support_values(body, theta) + support_values(body, theta, 2)


def _validation_grid(body: Body2D) -> np.ndarray:
    count = 4 * max(64, 2 * body.max_order)
    return 2.0 * np.pi * np.arange(count) / count


def _validate(body: Body2D) -> Body2D:
    if body.symmetric:
        odd = [k for k, _, _ in body.harmonics if k % 2]
        if odd:
            raise InvalidBodyError(f"symmetric body has odd harmonic order(s) {odd}")
    theta = _validation_grid(body)
    h = support_values(body, theta)
    r = h + support_values(body, theta, 2)
    j = int(np.argmin(r))
    if r[j] <= 0:
        raise InvalidBodyError(
            f"curvature radius r(theta) = {r[j]:.6g} <= 0 at theta = {theta[j]:.6f}",
            theta=float(theta[j]),
            value=float(r[j]),
        )
    j = int(np.argmin(h))
    if h[j] <= 0:
        raise InvalidBodyError(
            f"support function h(theta) = {h[j]:.6g} <= 0 at theta = {theta[j]:.6f}; origin not interior",
            theta=float(theta[j]),
            value=float(h[j]),
        )
    return body


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def make_fourier(
    a0: float,
    harmonics: Iterable[Sequence[float]] = (),
    symmetric: bool = True,
    *,
    source: Optional[Dict[str, Any]] = None,
    projection_error: float = 0.0,
) -> Body2D:
    """Validated body from support coefficients (r > 0 on a 4x oversampled grid)."""

    body = Body2D(
        a0=float(a0),
        harmonics=_normalise(harmonics),
        symmetric=bool(symmetric),
        projection_error=projection_error,
        source=source,
    )
    return _validate(body)


def make_disk(R: float) -> Body2D:
    if not R > 0:
        raise InvalidBodyError(f"radius must be positive, got {R}")
    return make_fourier(R, (), True, source={"kind": "disk", "R": float(R)})


def make_ellipse(a: float, b: float, fourier_degree: int = DEFAULT_ELLIPSE_DEGREE) -> Body2D:
    """Axis-aligned ellipse; h = sqrt(a^2 cos^2 + b^2 sin^2) projected onto even cosines."""

    if not (a > 0 and b > 0):
        raise InvalidBodyError(f"semi-axes must be positive, got a={a}, b={b}")
    if fourier_degree < 8:
        raise ResolutionError(f"fourier_degree must be at least 8, got {fourier_degree}")
    source = {"kind": "ellipse", "a": float(a), "b": float(b), "fourier_degree": int(fourier_degree)}
    if a == b:
        return make_fourier(a, (), True, source=source)

    def exact(theta: np.ndarray) -> np.ndarray:
        return np.sqrt((a * np.cos(theta)) ** 2 + (b * np.sin(theta)) ** 2)

    count = max(1024, 8 * fourier_degree)
    theta = 2.0 * np.pi * np.arange(count) / count
    spectrum = np.fft.rfft(exact(theta)) / count
    floor = 1e-16 * max(a, b)
    harmonics = [
        (k, 2.0 * spectrum[k].real, 0.0)
        for k in range(2, fourier_degree + 1, 2)
        if abs(spectrum[k].real) > floor
    ]
    body = make_fourier(spectrum[0].real, harmonics, True, source=source)

    check = theta + np.pi / count
    error = float(np.max(np.abs(support_values(body, check) - exact(check))))
    if error > PROJECTION_TOLERANCE:
        logger.warning(
            "ellipse(%g, %g) projection error %.3e exceeds %.0e at degree %d",
            a, b, error, PROJECTION_TOLERANCE, fourier_degree,
        )
    return Body2D(body.a0, body.harmonics, True, error, source)


def from_descriptor(descriptor: Mapping[str, Any]) -> Body2D:
    """Build a body from ``{"kind": "disk"|"ellipse"|"fourier", ...}``."""

    kind = descriptor.get("kind")
    try:
        if kind == "disk":
            return make_disk(float(descriptor["R"]))
        if kind == "ellipse":
            return make_ellipse(
                float(descriptor["a"]),
                float(descriptor["b"]),
                int(descriptor.get("fourier_degree", DEFAULT_ELLIPSE_DEGREE)),
            )
        if kind == "fourier":
            return make_fourier(
                float(descriptor["a0"]),
                [tuple(entry) for entry in descriptor.get("harmonics", [])],
                bool(descriptor.get("symmetric", True)),
            )
    except KeyError as exc:
        raise InvalidBodyError(f"body '{kind}' is missing field {exc}") from exc
    raise InvalidBodyError(f"unknown body kind '{kind}' (expected one of {', '.join(BODY_KINDS)})")


# ---------------------------------------------------------------------------
# Minkowski operations
# ---------------------------------------------------------------------------


def minkowski_mix(K: Body2D, L: Body2D, t: float) -> Body2D:
    """(1 - t) K + t L; support functions combine convexly."""

    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if t == 0.0:
        return K
    if t == 1.0:
        return L
    harmonics = [(k, (1 - t) * a, (1 - t) * b) for k, a, b in K.harmonics]
    harmonics += [(k, t * a, t * b) for k, a, b in L.harmonics]
    return make_fourier((1 - t) * K.a0 + t * L.a0, harmonics, K.symmetric and L.symmetric)


def dilate(K: Body2D, s: float) -> Body2D:
    """s K for s > 0."""

    if not s > 0:
        raise ValueError(f"dilation factor must be positive, got {s}")
    if s == 1.0:
        return K
    return make_fourier(s * K.a0, [(k, s * a, s * b) for k, a, b in K.harmonics], K.symmetric)


# ---------------------------------------------------------------------------
# Boundary geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundaryFrame:
    """Sampled boundary geometry of a body under a measure at M Gauss-angle nodes."""

    M: int
    theta: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    d2h: np.ndarray
    r: np.ndarray
    points: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    density: np.ndarray
    grad_u: np.ndarray
    hmu: np.ndarray
    weights: np.ndarray

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.M

    @property
    def kappa(self) -> np.ndarray:
        return 1.0 / self.r

    @property
    def grad_u_normal(self) -> np.ndarray:
        return np.sum(self.grad_u * self.normal, axis=-1)

    @property
    def grad_u_tangent(self) -> np.ndarray:
        return np.sum(self.grad_u * self.tangent, axis=-1)

    @property
    def grad_u_dot_x(self) -> np.ndarray:
        return np.sum(self.grad_u * self.points, axis=-1)

    @property
    def perimeter(self) -> float:
        return float(np.sum(self.weights))

    def to_csv_rows(self) -> List[Tuple[float, ...]]:
        return [
            (t, h, r, x[0], x[1], hm, w)
            for t, h, r, x, hm, w in zip(self.theta, self.h, self.r, self.points, self.hmu, self.weights)
        ]


FRAME_CSV_HEADER = ("theta", "h", "r", "x1", "x2", "Hmu", "w")


def boundary_frame(K: Body2D, m: MeasureModel, M: int) -> BoundaryFrame:
    if M % 2 or M < 4 * max(K.max_order, 1):
        raise ResolutionError(
            f"boundary resolution M={M} must be even and at least 4 x max harmonic order ({K.max_order})"
        )
    theta = 2.0 * np.pi * np.arange(M) / M
    h = support_values(K, theta)
    dh = support_values(K, theta, 1)
    d2h = support_values(K, theta, 2)
    r = h + d2h
    if np.min(r) <= 0:
        j = int(np.argmin(r))
        raise InvalidBodyError(
            f"curvature radius r(theta) = {r[j]:.6g} <= 0 at theta = {theta[j]:.6f}",
            theta=float(theta[j]),
            value=float(r[j]),
        )
    normal = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    tangent = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    points = h[:, None] * normal + dh[:, None] * tangent
    density = m.density(points)
    grad_u = m.grad_u(points)
    hmu = 1.0 / r - np.sum(grad_u * normal, axis=-1)
    weights = density * r * (2.0 * np.pi / M)
    return BoundaryFrame(
        M=M,
        theta=theta,
        h=h,
        dh=dh,
        d2h=d2h,
        r=r,
        points=points,
        normal=normal,
        tangent=tangent,
        density=density,
        grad_u=grad_u,
        hmu=hmu,
        weights=weights,
    )


__all__ = [
    "BODY_KINDS",
    "Body2D",
    "BoundaryFrame",
    "FRAME_CSV_HEADER",
    "boundary_frame",
    "curvature_radius",
    "dilate",
    "from_descriptor",
    "make_disk",
    "make_ellipse",
    "make_fourier",
    "minkowski_mix",
    "support_values",
]
