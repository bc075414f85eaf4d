import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from concavity_lab.body import (Body2D, boundary_frame, curvature_radius, dilate,
                                from_descriptor, make_disk, make_ellipse,
                                make_fourier, minkowski_mix, support_values)
from concavity_lab.errors import InvalidBodyError, ResolutionError
from concavity_lab.measure import make_gaussian
from concavity_lab.operator import spectral_derivative

from .radial import disk_perimeter

THETA = np.linspace(0.0, 2.0 * np.pi, 97)


def test_disk_support_and_curvature():
    disk = make_disk(1.5)
    np.testing.assert_allclose(support_values(disk, THETA), 1.5)
    np.testing.assert_allclose(support_values(disk, THETA, 1), 0.0)
    np.testing.assert_allclose(curvature_radius(disk, THETA), 1.5)
    assert disk.descriptor == {"kind": "disk", "R": 1.5}


def test_disk_rejects_nonpositive_radius():
    with pytest.raises(InvalidBodyError):
        make_disk(0.0)


def test_support_derivatives_match_closed_form():
    body = make_fourier(1.0, [(2, 0.1, 0.05)])
    np.testing.assert_allclose(
        support_values(body, THETA, 1), -0.2 * np.sin(2 * THETA) + 0.1 * np.cos(2 * THETA), atol=1e-14
    )
    np.testing.assert_allclose(
        support_values(body, THETA, 2), -0.4 * np.cos(2 * THETA) - 0.2 * np.sin(2 * THETA), atol=1e-14
    )


def test_harmonics_are_merged_and_sorted():
    body = make_fourier(1.0, [(4, 0.01, 0.0), (2, 0.01, 0.0), (2, 0.01, 0.0), (6, 0.0, 0.0)])
    assert body.harmonics == ((2, 0.02, 0.0), (4, 0.01, 0.0))
    assert body.max_order == 4


def test_symmetric_body_rejects_odd_orders():
    with pytest.raises(InvalidBodyError, match="odd harmonic"):
        make_fourier(1.0, [(3, 0.01, 0.0)])
    assert not make_fourier(1.0, [(3, 0.01, 0.0)], symmetric=False).symmetric


def test_nonpositive_curvature_names_the_angle():
    # r = 1 - 1.2 cos(2 theta) is most negative at theta = 0.
    with pytest.raises(InvalidBodyError) as info:
        make_fourier(1.0, [(2, 0.4, 0.0)])
    assert info.value.theta == pytest.approx(0.0)
    assert info.value.value == pytest.approx(-0.2)


def test_origin_outside_body_is_rejected():
    with pytest.raises(InvalidBodyError, match="origin not interior") as info:
        make_fourier(0.1, [(1, 0.5, 0.0)], symmetric=False)
    assert info.value.theta == pytest.approx(math.pi)


def test_invalid_harmonic_entries():
    with pytest.raises(InvalidBodyError):
        make_fourier(1.0, [(2, 0.1)])
    with pytest.raises(InvalidBodyError):
        make_fourier(1.0, [(0, 0.1, 0.0)])


def test_ellipse_projection_is_accurate():
    ellipse = make_ellipse(2.0, 1.0)
    exact = np.sqrt((2.0 * np.cos(THETA)) ** 2 + np.sin(THETA) ** 2)
    np.testing.assert_allclose(support_values(ellipse, THETA), exact, atol=1e-10)
    assert ellipse.projection_error <= 1e-10
    assert all(k % 2 == 0 and b == 0.0 for k, _, b in ellipse.harmonics)


def test_ellipse_coarse_projection_warns(caplog: pytest.LogCaptureFixture):
    with caplog.at_level("WARNING"):
        ellipse = make_ellipse(2.0, 1.0, fourier_degree=8)
    assert ellipse.projection_error > 1e-10
    assert "projection error" in caplog.text


def test_equal_axes_give_a_disk():
    ellipse = make_ellipse(1.3, 1.3)
    assert ellipse.harmonics == ()
    assert ellipse.a0 == pytest.approx(1.3)


def test_ellipse_boundary_points_lie_on_the_ellipse():
    frame = boundary_frame(make_ellipse(2.0, 1.0), make_gaussian(), 256)
    x, y = frame.points[:, 0], frame.points[:, 1]
    np.testing.assert_allclose((x / 2.0) ** 2 + y**2, 1.0, atol=1e-9)


def test_descriptor_round_trip():
    for descriptor in (
        {"kind": "disk", "R": 2.0},
        {"kind": "ellipse", "a": 1.0, "b": 2.0},
        {"kind": "fourier", "a0": 1.0, "harmonics": [[2, 0.05, 0.01]], "symmetric": True},
    ):
        body = from_descriptor(descriptor)
        rebuilt = from_descriptor(body.descriptor)
        np.testing.assert_allclose(support_values(rebuilt, THETA), support_values(body, THETA))


def test_descriptor_errors():
    with pytest.raises(InvalidBodyError, match="unknown body kind"):
        from_descriptor({"kind": "square"})
    with pytest.raises(InvalidBodyError, match="missing field"):
        from_descriptor({"kind": "disk"})


def test_minkowski_mix_endpoints_and_interior():
    K, L = make_disk(1.0), make_ellipse(2.0, 1.0)
    assert minkowski_mix(K, L, 0.0) is K
    assert minkowski_mix(K, L, 1.0) is L
    mid = minkowski_mix(K, L, 0.25)
    np.testing.assert_allclose(
        support_values(mid, THETA), 0.75 * support_values(K, THETA) + 0.25 * support_values(L, THETA)
    )
    with pytest.raises(ValueError):
        minkowski_mix(K, L, 1.5)


def test_dilate_scales_support():
    K = make_fourier(1.0, [(2, 0.1, 0.0)])
    np.testing.assert_allclose(support_values(dilate(K, 2.5), THETA), 2.5 * support_values(K, THETA))
    assert dilate(K, 1.0) is K
    with pytest.raises(ValueError):
        dilate(K, 0.0)


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_disk_frame_under_gaussian(R: float):
    frame = boundary_frame(make_disk(R), make_gaussian(), 64)
    np.testing.assert_allclose(np.linalg.norm(frame.points, axis=-1), R)
    np.testing.assert_allclose(frame.hmu, 1.0 / R - R, atol=1e-14)
    np.testing.assert_allclose(frame.grad_u_dot_x, R * R)
    np.testing.assert_allclose(frame.grad_u_tangent, 0.0, atol=1e-14)
    assert frame.perimeter == pytest.approx(disk_perimeter(R), rel=1e-12)
    assert len(frame.to_csv_rows()) == 64


def test_frame_resolution_errors():
    K = make_fourier(1.0, [(8, 0.001, 0.0)])
    with pytest.raises(ResolutionError):
        boundary_frame(K, make_gaussian(), 63)
    with pytest.raises(ResolutionError):
        boundary_frame(K, make_gaussian(), 16)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from([2, 4, 6]),
            st.floats(min_value=-0.01, max_value=0.01),
            st.floats(min_value=-0.01, max_value=0.01),
        ),
        max_size=3,
        unique_by=lambda harmonic: harmonic[0],
    )
)
def test_small_even_perturbations_of_the_disk_are_valid(harmonics):
    body = make_fourier(1.0, harmonics)
    assert isinstance(body, Body2D)
    assert body.symmetric
    assert np.min(curvature_radius(body, THETA)) > 0


def test_disk_mix_and_ellipse_dilation():
    mid = minkowski_mix(make_disk(1.0), make_disk(3.0), 0.5)
    assert mid.a0 == pytest.approx(2.0)
    assert mid.harmonics == ()
    half = dilate(make_ellipse(1.0, 2.0), 0.5)
    target = make_ellipse(0.5, 1.0)
    assert half.a0 == pytest.approx(target.a0)
    np.testing.assert_allclose(support_values(half, THETA), support_values(target, THETA), atol=1e-12)


def test_gauss_parametrisation_of_the_ellipse():
    frame = boundary_frame(make_ellipse(1.0, 2.0), make_gaussian(), 256)
    np.testing.assert_allclose(frame.points[0], [1.0, 0.0], atol=1e-6)
    np.testing.assert_allclose(np.sum(frame.points * frame.normal, axis=-1), frame.h, atol=1e-14)
    derivative = spectral_derivative(frame.points.T).T
    np.testing.assert_allclose(derivative, frame.r[:, None] * frame.tangent, atol=1e-10)


def test_symmetric_support_is_pi_periodic():
    body = make_fourier(1.0, [(2, 0.05, 0.02), (4, 0.01, 0.0)])
    np.testing.assert_allclose(support_values(body, THETA + np.pi), support_values(body, THETA), atol=1e-13)


def test_order_four_harmonic_amplitude_bound():
    # r = 1 - 15 |c_4| must stay positive
    with pytest.raises(InvalidBodyError, match="curvature radius"):
        make_fourier(1.0, [(4, 0.05, 0.05)])
    body = make_fourier(1.0, [(4, 0.03, 0.03)])
    assert np.min(curvature_radius(body, THETA)) == pytest.approx(1.0 - 15.0 * 0.03 * math.sqrt(2.0), abs=1e-3)
