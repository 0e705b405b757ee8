import numpy as np
import pytest
from scipy import integrate
from scipy.optimize import minimize

from entropic_ricci.chain import dirac
from entropic_ricci.families import random_reversible, torus, two_point
from entropic_ricci.metric import comparison_constant, theta
from entropic_ricci.transport import DIRAC_EPS, WConfig, w_distance


def test_two_point_diracs_converge_to_comparison_constant():
    T = two_point(1, 1)
    c = comparison_constant()
    res = w_distance(T, dirac(T, 0), dirac(T, 1), steps=64)
    values = [v for _, v in res.refinement]
    assert [n for n, _ in res.refinement] == [8, 16, 32, 64]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    # upper bound of the exact value c, and close to it
    assert c - 1e-9 <= res.certified_upper <= c + 5e-4
    assert res.lower <= c + 1e-12


def test_equal_endpoints():
    T = torus(4)
    rho = np.array([1.5, 0.5, 1.0, 1.0])
    res = w_distance(T, rho, rho, steps=8)
    assert res.upper == 0.0 and res.lower == 0.0


def test_dirac_regularisation_tail():
    T = torus(4)
    res = w_distance(T, dirac(T, 0), np.ones(4), steps=8)
    assert res.tail > 0
    assert res.tail <= np.sqrt(DIRAC_EPS) * 10
    assert res.certified_upper == res.upper + res.tail


def test_path_is_admissible(rng):
    T = random_reversible(5, 0.5, seed=2)
    r0 = rng.dirichlet(np.ones(5)) / T.pi
    r1 = rng.dirichlet(np.ones(5)) / T.pi
    res = w_distance(T, r0, r1, steps=16)
    path = res.witness_path
    assert np.allclose(path.densities[0], r0) and np.allclose(path.densities[-1], r1)
    assert np.allclose(path.densities @ T.pi, 1.0)
    assert path.continuity_residual(T) < 1e-8
    assert path.interval_actions(T).sum() == pytest.approx(path.action, rel=1e-10)
    assert res.lower <= res.upper


def _interval_cost_oracle(T, a, b, dt):
    # min over fluxes J with div J = -pi (b - a)/dt of sum_e J_e^2 int_0^1 dtau / (theta_e(tau) w_e)
    src, dst = T.edges
    w = T.edge_flux
    inv = []
    for e in range(len(src)):
        f = lambda tau: 1.0 / theta((1 - tau) * a[src[e]] + tau * b[src[e]], (1 - tau) * a[dst[e]] + tau * b[dst[e]])
        inv.append(integrate.quad(f, 0, 1, epsabs=1e-13, epsrel=1e-12)[0] / w[e])
    inv = np.array(inv)
    B = np.zeros((T.n, len(src)))
    B[src, np.arange(len(src))] = 1.0
    B[dst, np.arange(len(src))] = -1.0
    rhs = T.pi * (b - a) / dt
    # minimum-norm solution in the inv-weighted norm
    Winv = np.diag(1.0 / inv)
    lam = np.linalg.lstsq(B @ Winv @ B.T, rhs, rcond=None)[0]
    J = Winv @ B.T @ lam
    assert np.allclose(B @ J, rhs, atol=1e-10)
    return float(np.sum(inv * J**2) * dt)


def test_interval_actions_match_quadrature_oracle(rng):
    T = torus(4)
    r0 = rng.dirichlet(np.ones(4)) / T.pi
    r1 = rng.dirichlet(np.ones(4)) / T.pi
    res = w_distance(T, r0, r1, steps=8)
    path = res.witness_path
    got = path.interval_actions(T)
    for k in range(len(got)):
        dt = path.times[k + 1] - path.times[k]
        ref = _interval_cost_oracle(T, path.densities[k], path.densities[k + 1], dt)
        assert got[k] == pytest.approx(ref, rel=1e-7)


def test_symmetry_and_triangle(rng):
    T = torus(5)
    a, b, c = (rng.dirichlet(np.ones(5)) / T.pi for _ in range(3))
    ab = w_distance(T, a, b, steps=16).upper
    ba = w_distance(T, b, a, steps=16).upper
    assert ab == pytest.approx(ba, rel=1e-4)
    ac = w_distance(T, a, c, steps=16).upper
    bc = w_distance(T, b, c, steps=16).upper
    assert ac <= ab + bc + 1e-3


def test_beats_single_edge_lift_on_longer_paths():
    # moving all mass two steps around the cycle is cheaper than two edge lifts
    T = torus(5)
    res = w_distance(T, dirac(T, 0), dirac(T, 2), steps=32)
    assert res.certified_upper < 2 * comparison_constant()
    assert res.lower <= res.certified_upper


def test_coarse_config():
    T = two_point(2, 1)
    res = w_distance(T, np.array([2.4, 0.3]), np.array([0.6, 1.2]), steps=4, cfg=WConfig(start_steps=4))
    assert res.refinement[0][0] == 4
    with pytest.raises(ValueError):
        w_distance(T, np.ones(2), np.ones(2), steps=1)


def test_rejects_non_densities():
    T = two_point(2, 1)
    with pytest.raises(ValueError):
        w_distance(T, np.array([1.4, 0.2]), np.ones(2), steps=4)
