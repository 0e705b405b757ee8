import numpy as np
import pytest
from scipy.linalg import expm

from entropic_ricci.chain import entropy
from entropic_ricci.curvature import (
    CurvatureConfig,
    curvature_at,
    estimate_ricci,
    hessian_entropy,
    hessian_matrix,
    sampled_curvature_min,
    verify_ricci,
)
from entropic_ricci.errors import BoundaryDensity
from entropic_ricci.families import complete, hypercube, random_reversible, torus, two_point
from entropic_ricci.metric import action


def _interior(chain, rng):
    return rng.dirichlet(np.ones(chain.n)) / chain.pi


def test_hessian_matrix_represents_quadratic_form(chain, rng):
    rho = _interior(chain, rng)
    M = hessian_matrix(chain, rho)
    assert np.allclose(M, M.T)
    for _ in range(5):
        psi = rng.standard_normal(chain.n)
        assert psi @ M @ psi == pytest.approx(hessian_entropy(chain, rho, psi), rel=1e-10, abs=1e-12)
    # constants are in the kernel
    assert np.allclose(M @ np.ones(chain.n), 0, atol=1e-10)


def test_second_time_derivative_of_entropy_along_heat_flow(chain, rng):
    # d^2/dt^2 H(P_t rho) at t = 0 equals 2 B(rho, log rho); independent expm, central differences
    for _ in range(20):
        rho = _interior(chain, rng)
        # the step must resolve the smallest entry, otherwise the backward flow leaves the simplex
        h = min(2e-4, 5e-3 * rho.min() / np.abs(np.diag(chain.generator)).max())
        Hp = entropy(chain, expm(h * chain.generator) @ rho)
        Hm = entropy(chain, expm(-h * chain.generator) @ rho)
        Hp2 = entropy(chain, expm(2 * h * chain.generator) @ rho)
        Hm2 = entropy(chain, expm(-2 * h * chain.generator) @ rho)
        H0 = entropy(chain, rho)
        # fourth-order stencil
        fd = (-Hp2 + 16 * Hp - 30 * H0 + 16 * Hm - Hm2) / (12 * h * h)
        assert 2 * hessian_entropy(chain, rho, np.log(rho)) == pytest.approx(fd, rel=1e-5, abs=1e-6)


def test_curvature_at_is_minimal_ratio(chain, rng):
    rho = _interior(chain, rng)
    k, psi = curvature_at(chain, rho)
    assert action(chain, rho, psi) == pytest.approx(1.0)
    assert psi[0] == 0.0
    assert hessian_entropy(chain, rho, psi) == pytest.approx(k, abs=1e-9)
    for _ in range(200):
        phi = rng.standard_normal(chain.n)
        ratio = hessian_entropy(chain, rho, phi) / action(chain, rho, phi)
        assert ratio >= k - 1e-9


def test_boundary_density_rejected():
    with pytest.raises(BoundaryDensity):
        curvature_at(torus(4), np.array([2.0, 2.0, 0.0, 0.0]))


def test_two_point_uniform_density_curvature():
    # at rho = 1 the Hessian reduces to the Dirichlet form of L psi and A to E(psi), so B/A = gap
    T = two_point(1, 1)
    k, _ = curvature_at(T, np.ones(2))
    assert k == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("L", [3, 4, 5])
def test_complete_graph_curvature_at_least_half(L):
    est = estimate_ricci(complete(L), CurvatureConfig(starts=8))
    assert est.kappa >= 0.5 - 1e-3


def test_estimate_is_attained_and_deterministic():
    T = random_reversible(6, 0.4, seed=4)
    cfg = CurvatureConfig(starts=6, seed=3)
    a = estimate_ricci(T, cfg)
    b = estimate_ricci(T, cfg)
    assert a.kappa == b.kappa
    assert np.array_equal(a.witness_density, b.witness_density)
    assert curvature_at(T, a.witness_density)[0] == pytest.approx(a.kappa, abs=1e-12)
    assert abs(a.slack_at_witness) < 1e-9
    assert set(a.to_dict()) >= {"kappa", "witness_density", "witness_potential"}


def test_estimate_below_every_sample():
    T = hypercube(2)
    est = estimate_ricci(T, CurvatureConfig(starts=8))
    assert est.kappa <= sampled_curvature_min(T, samples=100) + 1e-9


def test_verify_ricci_flags_inflated_bound():
    T = torus(4)
    est = estimate_ricci(T, CurvatureConfig(starts=4))
    ok = verify_ricci(T, est.kappa - 1e-6, samples=50, extra=[est.witness_density])
    bad = verify_ricci(T, est.kappa + 0.5, samples=50, extra=[est.witness_density])
    assert ok.passed and not bad.passed
    assert bad.worst_slack < -0.4
