import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from entropic_ricci.chain import dirac
from entropic_ricci.errors import NegativeArgument, NonZeroMean, SingularWeights
from entropic_ricci.families import complete, torus, two_point, zero_range
from entropic_ricci.metric import (
    action,
    action_matrix,
    comparison_constant,
    diameter_upper,
    dq_matrix,
    lift_edge_length,
    lift_metric,
    log_mean,
    point_metric,
    rho_hat,
    solve_potential,
    theta,
    w2_upper,
    w_lower_bound,
    weighted_generator,
)


def _theta_integral(s, t):
    return integrate.quad(lambda p: s ** (1 - p) * t**p, 0, 1, epsabs=1e-14, epsrel=1e-13)[0]


@pytest.mark.parametrize("s, t", [(1.0, 2.0), (0.3, 7.0), (5.0, 5.0), (1.0, 1.0 + 1e-9), (1e-6, 1.0), (40.0, 0.01)])
def test_theta_matches_integral_representation(s, t):
    assert theta(s, t) == pytest.approx(_theta_integral(s, t), rel=1e-11)


def test_theta_basic_properties():
    assert theta(2.0, 2.0) == 2.0
    assert theta(0.0, 3.0) == 0.0
    assert theta(3.0, 0.0) == 0.0
    assert theta(2.0, 8.0) == pytest.approx(6 / math.log(4))
    s, t = np.meshgrid(np.geomspace(1e-3, 1e3, 15), np.geomspace(1e-3, 1e3, 15))
    th = theta(s, t)
    assert np.allclose(th, theta(t, s))
    assert np.all(th <= 0.5 * (s + t) + 1e-12)
    assert np.all(th >= np.sqrt(s * t) - 1e-12)
    with pytest.raises(NegativeArgument):
        theta(-1.0, 1.0)


def test_theta_partials_match_finite_differences():
    grid = np.geomspace(0.05, 20.0, 25)
    worst = 0.0
    for s in grid:
        for t in grid:
            _, d1, d2 = log_mean(s, t)
            h1, h2 = 1e-6 * s, 1e-6 * t
            fd1 = (theta(s + h1, t) - theta(s - h1, t)) / (2 * h1)
            fd2 = (theta(s, t + h2) - theta(s, t - h2)) / (2 * h2)
            worst = max(worst, abs(fd1 - d1), abs(fd2 - d2))
    assert worst < 1e-6


def test_theta_partials_near_diagonal():
    _, d1, d2 = log_mean(1.0, 1.0 + 1e-7)
    assert d1 == pytest.approx(0.5, abs=1e-7)
    assert d2 == pytest.approx(0.5, abs=1e-7)


def test_theta_boundary_partials():
    th, d1, d2 = log_mean(0.0, 2.0)
    assert th == 0 and d1 == math.inf and d2 == 0


def test_action_matches_pairwise_sum(chain, rng):
    rho = rng.dirichlet(np.ones(chain.n)) / chain.pi
    psi = rng.standard_normal(chain.n)
    R = rho_hat(chain, rho)
    brute = 0.5 * sum(
        (psi[y] - psi[x]) ** 2 * R[x, y] * chain.rates[x, y] * chain.pi[x]
        for x in range(chain.n)
        for y in range(chain.n)
    )
    assert action(chain, rho, psi) == pytest.approx(brute, rel=1e-12)
    assert psi @ action_matrix(chain, rho) @ psi == pytest.approx(brute, rel=1e-12)


def test_solve_potential_inverts_weighted_generator(chain, rng):
    rho = rng.dirichlet(np.ones(chain.n)) / chain.pi
    s = rng.standard_normal(chain.n)
    s -= s @ chain.pi
    psi = solve_potential(chain, rho, s)
    assert psi[0] == 0.0
    assert np.allclose(weighted_generator(chain, rho, psi), s, atol=1e-9)


def test_solve_potential_errors():
    T = torus(4)
    with pytest.raises(NonZeroMean):
        solve_potential(T, np.ones(4), np.ones(4))
    rho = np.array([2.0, 0.0, 2.0, 0.0])
    with pytest.raises(SingularWeights):
        solve_potential(T, rho, np.array([1.0, 0.0, -1.0, 0.0]))


def test_comparison_constant_independent_quadrature():
    mpmath.mp.dps = 30
    th = lambda a, b: (a - b) / (mpmath.log(a) - mpmath.log(b))
    f = lambda r: 1 / mpmath.sqrt(2 * th(1 - r, 1 + r)) if r != 0 else 1 / mpmath.sqrt(2)
    ref = float(mpmath.quad(f, [-1, 0, 1]))
    assert comparison_constant() == pytest.approx(ref, rel=1e-12)
    assert abs(comparison_constant() - 1.56) <= 0.01


def test_dq_matrix():
    T = two_point(1, 4)
    assert dq_matrix(T)[0, 1] == pytest.approx(1.0)
    d = dq_matrix(zero_range(1, 5))
    assert d.max() == pytest.approx(math.sqrt(5))
    assert dq_matrix(torus(6)).max() == pytest.approx(3.0)


def test_lift_length_on_symmetric_edge_is_comparison_constant():
    T = two_point(1, 1)
    assert lift_edge_length(T, 0, 1) == pytest.approx(comparison_constant(), rel=1e-10)
    # uniform complete graph: rate 1/4 rescales length by 2
    assert lift_edge_length(complete(4), 0, 1) == pytest.approx(2 * comparison_constant(), rel=1e-10)


def test_lift_metric_is_below_scaled_dq(chain):
    assert np.all(lift_metric(chain) <= comparison_constant() * dq_matrix(chain) + 1e-9)
    assert diameter_upper(chain) == pytest.approx(comparison_constant() * dq_matrix(chain).max())


def test_w2_upper_two_point():
    T = two_point(1, 1)
    c = comparison_constant()
    assert w2_upper(T, dirac(T, 0), dirac(T, 1)) == pytest.approx(c)
    # half the mass has to move
    rho = np.array([1.5, 0.5])
    assert w2_upper(T, rho, np.ones(2)) == pytest.approx(c * math.sqrt(0.25))
    assert w2_upper(T, rho, rho) == 0.0


def test_lower_bound_below_lift(chain):
    L = lift_metric(chain)
    for x in range(chain.n):
        for y in range(x + 1, chain.n):
            assert w_lower_bound(chain, dirac(chain, x), dirac(chain, y)) <= L[x, y] + 1e-9


def test_point_metric_by_label():
    T = torus(5)
    assert point_metric(T, 0, 2, kind="dQ") == pytest.approx(2.0)
    assert point_metric(T, 1, 1) == 0.0
    d = point_metric(T, 0, 1, steps=16)
    assert d == pytest.approx(comparison_constant(), rel=1e-9)
    with pytest.raises(ValueError):
        point_metric(T, 0, 1, kind="euclid")
