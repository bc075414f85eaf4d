from dataclasses import replace

import numpy as np
import pytest

from concavity_lab.body import make_disk, make_ellipse, make_fourier
from concavity_lab.measure import make_gaussian
from concavity_lab.operator import assemble, concavity_power
from concavity_lab.quad import QuadratureSpec
from concavity_lab.report import HOLDS, INCONCLUSIVE, VIOLATED
from concavity_lab.verify import (CATALOG, TEST_FUNCTIONS, check_action_support,
                                  check_chain, check_energy_identity,
                                  check_evenness, check_hereditary_functional,
                                  check_integration_by_parts, check_local_b,
                                  check_parts_support, check_positivity,
                                  check_proof_decomposition, check_reilly,
                                  check_strong_dimbm, run_all)

from .radial import disk_m1, disk_mass, disk_perimeter, disk_variance

GAUSSIAN = make_gaussian()
DISK = make_disk(1.0)
ELLIPSE = make_ellipse(2.0, 1.0)

MASS = disk_mass(1.0)
PERIMETER = disk_perimeter(1.0)
MEAN_M1 = disk_m1(1.0) / MASS
LOCAL_B_MARGIN = 2.0 * MEAN_M1 - disk_variance(1.0)


@pytest.fixture(scope="module")
def disk_solution():
    _, solution, _ = concavity_power(GAUSSIAN, DISK, N=4)
    return solution


def test_catalog_derivatives_are_consistent():
    rng = np.random.default_rng(5)
    x = rng.uniform(-2.0, 2.0, size=(20, 2))
    step = 1e-5
    for name in CATALOG:
        psi = TEST_FUNCTIONS[name]
        for axis in range(2):
            e = np.zeros(2)
            e[axis] = step
            fd = (psi(x + e) - psi(x - e)) / (2 * step)
            np.testing.assert_allclose(fd, psi.grad(x)[:, axis], atol=1e-6)
            fd_col = (psi.grad(x + e) - psi.grad(x - e)) / (2 * step)
            np.testing.assert_allclose(fd_col, psi.hess(x)[:, :, axis], atol=1e-6)


def test_strong_dimbm_on_unit_disk(disk_solution):
    report = check_strong_dimbm(GAUSSIAN, DISK, disk_solution)
    assert report.verdict == HOLDS
    assert report.margin == pytest.approx(PERIMETER - MASS, rel=1e-9)
    assert report.resolution["N"] == 4
    assert report.flags == []


def test_chain_on_unit_disk(disk_solution):
    report = check_chain(GAUSSIAN, DISK, disk_solution)
    assert report.holds
    assert report.details["chain_value"] == pytest.approx(1.0 / (2.0 - MEAN_M1), rel=1e-9)
    assert set(report.details["subchecks"]) == {
        "chain.p_vs_chain",
        "chain.chain_vs_inverse_dimension",
        "chain.m1_nonnegative",
    }


def test_local_b_on_unit_disk():
    report = check_local_b(GAUSSIAN, DISK)
    assert report.lhs == pytest.approx(disk_variance(1.0), rel=1e-9)
    assert report.rhs == pytest.approx(2.0 * MEAN_M1, rel=1e-9)
    assert report.margin == pytest.approx(LOCAL_B_MARGIN, rel=1e-9)


def test_hereditary_functional_psi1_on_unit_disk():
    report = check_hereditary_functional(GAUSSIAN, DISK, TEST_FUNCTIONS["psi1"])
    assert report.name == "hereditary_functional:psi1"
    assert report.lhs == pytest.approx(2.0 + MEAN_M1, rel=1e-9)
    assert report.rhs == pytest.approx(2.0 - MEAN_M1, rel=1e-9)
    assert report.holds


@pytest.mark.parametrize("name", CATALOG)
def test_hereditary_functional_on_ellipse(name: str):
    assert check_hereditary_functional(GAUSSIAN, ELLIPSE, TEST_FUNCTIONS[name]).holds


@pytest.mark.parametrize("name", CATALOG)
def test_reilly_identity(name: str):
    report = check_reilly(GAUSSIAN, ELLIPSE, TEST_FUNCTIONS[name])
    assert report.kind == "identity"
    assert report.residual < 1e-7


def test_reilly_psi1_disk_boundary_term():
    report = check_reilly(GAUSSIAN, DISK, TEST_FUNCTIONS["psi1"])
    # on the unit circle H_mu = 0 and psi_s = 0, so the boundary term vanishes
    assert report.details["boundary"] == pytest.approx(0.0, abs=1e-12)
    assert report.residual < 1e-10


def test_integration_by_parts_pairs():
    phi, psi = TEST_FUNCTIONS["psi3"], TEST_FUNCTIONS["psi2"]
    report = check_integration_by_parts(GAUSSIAN, ELLIPSE, phi, psi)
    assert report.name == "integration_by_parts:psi2"
    assert report.details == {"phi": "psi3", "psi": "psi2"}
    assert report.holds


def test_support_identities_on_ellipse():
    assert check_action_support(GAUSSIAN, ELLIPSE).holds
    assert check_parts_support(GAUSSIAN, ELLIPSE).holds


def test_energy_identity_and_decomposition_on_disk(disk_solution):
    assert check_energy_identity(GAUSSIAN, DISK, disk_solution).holds
    report = check_proof_decomposition(GAUSSIAN, DISK, disk_solution)
    assert report.holds
    assert report.details["A"] == pytest.approx((PERIMETER - MASS) / MASS - LOCAL_B_MARGIN, rel=1e-8)
    assert report.details["B"] == pytest.approx(LOCAL_B_MARGIN, rel=1e-9)
    assert report.details["B_boundary"] == pytest.approx(report.details["B"], abs=1e-9)
    assert report.details["A"] + report.details["B"] == pytest.approx(report.details["h_minus_rho"], abs=1e-9)


def test_positivity_detects_indefinite_form():
    system = assemble(GAUSSIAN, DISK, 2)
    assert check_positivity(system).verdict == HOLDS
    broken = replace(system, B=np.diag([1.0, -0.5, 1.0, 1.0, 1.0]))
    report = check_positivity(broken, m=GAUSSIAN, K=DISK)
    assert report.verdict == VIOLATED
    assert report.lhs == pytest.approx(-0.5)


def test_evenness_inconclusive_without_symmetry():
    body = make_fourier(1.0, [(2, 0.05, 0.0), (3, 0.01, 0.0)], symmetric=False)
    _, solution, _ = concavity_power(GAUSSIAN, body, N=8)
    report = check_evenness(solution, body, GAUSSIAN)
    assert report.verdict == INCONCLUSIVE
    assert "body not symmetric" in report.flags


def test_run_all_on_unit_disk():
    reports = run_all(GAUSSIAN, DISK, N=4)
    names = [report.name for report in reports]
    assert len(reports) == 9 + 3 * len(CATALOG)
    assert names == sorted(names)
    failing = [report.name for report in reports if not report.holds]
    assert failing == []


def test_run_all_is_thread_count_invariant():
    serial = run_all(GAUSSIAN, ELLIPSE, N=8)
    parallel = run_all(GAUSSIAN, ELLIPSE, N=8, threads=4)
    assert [r.to_dict() for r in serial] == [r.to_dict() for r in parallel]


IDENTITY_CHECKS = {
    "reilly": lambda spec: check_reilly(GAUSSIAN, ELLIPSE, TEST_FUNCTIONS["psi2"], spec),
    "integration_by_parts": lambda spec: check_integration_by_parts(
        GAUSSIAN, ELLIPSE, TEST_FUNCTIONS["psi3"], TEST_FUNCTIONS["psi2"], spec
    ),
    "parts_support": lambda spec: check_parts_support(GAUSSIAN, ELLIPSE, spec),
}


@pytest.mark.parametrize("name", sorted(IDENTITY_CHECKS))
def test_identity_residuals_shrink_under_refinement(name: str):
    coarse = IDENTITY_CHECKS[name](QuadratureSpec(256, 128))
    fine = IDENTITY_CHECKS[name](QuadratureSpec(512, 256))
    assert coarse.residual <= 1e-6
    assert fine.residual <= max(coarse.residual / 10.0, 1e-9)
