import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from concavity_lab.errors import InvalidMeasureError
from concavity_lab.measure import (MeasureModel, from_descriptor, make_even_power,
                                   make_gaussian, make_quadratic, make_radial,
                                   sample_disk, shift, validate_measure)

BUILT_INS = [
    make_gaussian(1.0),
    make_gaussian(0.7),
    make_quadratic([[1.0, 0.0], [0.0, 4.0]]),
    make_quadratic([[2.0, 0.5], [0.5, 1.0]]),
    make_radial([0.0, 1.0, 0.5]),
    make_radial([0.0, 0.5, 0.0, 0.1]),
    make_even_power(4.0, 0.1),
]


def test_gaussian_values():
    m = make_gaussian(1.0)
    np.testing.assert_allclose(m.grad_u(np.array([1.0, 2.0])), [1.0, 2.0])
    np.testing.assert_allclose(m.hess_u(np.array([[0.3, -2.0], [5.0, 1.0]])), [np.eye(2), np.eye(2)])
    assert make_gaussian(2.0).u(np.array([4.0, 0.0])) == pytest.approx(2.0)


def test_gaussian_rejects_nonpositive_sigma():
    with pytest.raises(InvalidMeasureError):
        make_gaussian(0.0)


def test_quadratic_values():
    m = make_quadratic([[1.0, 0.0], [0.0, 4.0]])
    x = np.array([1.0, 1.0])
    assert m.u(x) == pytest.approx(2.5)
    np.testing.assert_allclose(m.grad_u(x), [1.0, 4.0])


def test_quadratic_identity_matches_gaussian():
    points = sample_disk(50, seed=3)
    g, q = make_gaussian(1.0), make_quadratic(np.eye(2))
    np.testing.assert_allclose(q.u(points), g.u(points))
    np.testing.assert_allclose(q.grad_u(points), g.grad_u(points))
    np.testing.assert_allclose(q.hess_u(points), g.hess_u(points))


def test_quadratic_rejects_indefinite_with_eigenvalue():
    with pytest.raises(InvalidMeasureError) as info:
        make_quadratic([[1.0, 0.0], [0.0, -2.0]])
    assert info.value.eigenvalue == pytest.approx(-2.0)
    assert "-2" in str(info.value)


def test_radial_values():
    m = make_radial([0.0, 1.0, 0.5])
    x = np.array([1.0, 0.0])
    assert m.u(x) == pytest.approx(0.625)
    np.testing.assert_allclose(np.linalg.eigvalsh(m.hess_u(x)), [1.5, 2.5])


def test_radial_reproduces_gaussian():
    points = sample_disk(40, seed=1)
    np.testing.assert_allclose(make_radial([0.0, 1.0]).u(points), make_gaussian(1.0).u(points))


def test_radial_rejects_degenerate_origin():
    with pytest.raises(InvalidMeasureError):
        make_radial([0.0, 0.0, 1.0])


def test_even_power_requires_regularisation():
    with pytest.raises(InvalidMeasureError):
        make_even_power(4.0, 0.0)


@pytest.mark.parametrize("model", BUILT_INS, ids=lambda m: m.kind)
def test_built_ins_validate(model: MeasureModel):
    report = validate_measure(model, 1000, seed=0)
    assert report.verdict == "holds"
    assert report.details["evenness_defect"] == 0.0
    assert report.details["min_hessian_eigenvalue"] > 0


def test_validation_minimum_eigenvalues():
    assert validate_measure(make_gaussian(1.0), 200, 0).details["min_hessian_eigenvalue"] == pytest.approx(1.0)
    quadratic = make_quadratic([[1.0, 0.0], [0.0, 4.0]])
    assert validate_measure(quadratic, 200, 0).details["min_hessian_eigenvalue"] == pytest.approx(1.0)


def test_validation_catches_negated_gradient():
    base = make_gaussian(1.0)
    broken = MeasureModel("broken", {}, base.u, lambda x: -base.grad_u(x), base.hess_u)
    report = validate_measure(broken, 200, seed=0)
    assert report.verdict == "violated"
    assert "derivative consistency" in report.details["failures"]
    # central differences recover +x, so the gap is 2|x|
    assert report.details["gradient_residual"] > 1.0


def test_validation_is_deterministic_per_seed():
    m = make_radial([0.0, 1.0, 0.5])
    assert validate_measure(m, 100, seed=7).to_dict() == validate_measure(m, 100, seed=7).to_dict()


def test_validation_rejects_empty_sample():
    with pytest.raises(ValueError):
        validate_measure(make_gaussian(), 0)


def test_shift_breaks_evenness_and_is_flagged():
    shifted = shift(make_gaussian(1.0), [0.5, 0.0])
    assert not shifted.even
    report = validate_measure(shifted, 100, seed=0)
    assert report.flags == ["measure not even"]
    assert shift(make_gaussian(1.0), [0.0, 0.0]).even


@pytest.mark.parametrize("model", BUILT_INS, ids=lambda m: m.kind)
def test_descriptor_round_trip(model: MeasureModel):
    rebuilt = from_descriptor(model.descriptor)
    points = sample_disk(30, seed=2)
    np.testing.assert_allclose(rebuilt.u(points), model.u(points))


def test_unknown_descriptor_kind():
    with pytest.raises(InvalidMeasureError, match="unknown measure kind"):
        from_descriptor({"kind": "cauchy", "params": {}})


@settings(max_examples=50, deadline=None)
@given(
    st.floats(min_value=-4.0, max_value=4.0, allow_nan=False),
    st.floats(min_value=-4.0, max_value=4.0, allow_nan=False),
)
def test_built_ins_even_and_convex_everywhere(x1: float, x2: float):
    x = np.array([x1, x2])
    for model in BUILT_INS:
        assert model.u(x) == model.u(-x)
        assert np.linalg.eigvalsh(model.hess_u(x))[0] > 0
