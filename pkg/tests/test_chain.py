import numpy as np
import pytest
from scipy.linalg import expm

from entropic_ricci.chain import (
    apply_generator,
    build_triple,
    canonical_potential,
    dirac,
    dirichlet,
    entropy,
    entropy_production,
    gamma,
    heat_kernel,
    heat_semigroup,
    inner,
    semigroup_matrix,
    spectral_gap,
    variance,
)
from entropic_ricci.errors import (
    BoundaryDensity,
    ChainValidationError,
    DetailedBalanceViolation,
    DimensionMismatch,
    NegativeRate,
    NegativeTime,
    ReducibleChain,
    UnknownState,
)
from entropic_ricci.families import complete, random_reversible, torus, two_point


def test_two_point_triple():
    T = two_point(1.0, 3.0)
    assert np.allclose(T.pi, [0.75, 0.25])
    assert T.q_star == 1.0
    assert T.pi_star == 0.25
    assert np.allclose(T.generator.sum(axis=1), 0)


def test_stationary_vector_is_computed_when_missing():
    T0 = random_reversible(7, 0.4, seed=3)
    T1 = build_triple(None, T0.rates)
    assert np.allclose(T1.pi, T0.pi, atol=1e-12)


@pytest.mark.parametrize(
    "rates, pi, exc",
    [
        ([[0, -1], [1, 0]], None, NegativeRate),
        ([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], None, ReducibleChain),
        ([[0, 1], [0, 0]], None, DetailedBalanceViolation),
        ([[0, 1], [2, 0]], [0.5, 0.5], DetailedBalanceViolation),
        ([[0, 1], [1, 0]], [0.6, 0.6], ChainValidationError),
        ([[1, 1], [1, 0]], None, ChainValidationError),
        ([[0, 1, 1], [1, 0, 1]], None, ChainValidationError),
    ],
)
def test_invalid_chains_are_rejected(rates, pi, exc):
    with pytest.raises(exc):
        build_triple(None, rates, pi)


def test_detailed_balance_error_names_the_pair():
    with pytest.raises(DetailedBalanceViolation) as info:
        build_triple(["a", "b"], [[0, 1], [2, 0]], [0.5, 0.5])
    assert set(info.value.pair) == {"a", "b"}
    assert info.value.residual == pytest.approx(0.5)


def test_labels_and_dimensions():
    T = build_triple(["u", "v"], [[0, 1], [1, 0]])
    assert T.index("v") == 1
    with pytest.raises(UnknownState):
        T.index("w")
    with pytest.raises(DimensionMismatch):
        apply_generator(T, np.ones(3))
    with pytest.raises(ChainValidationError):
        build_triple(["u", "u"], [[0, 1], [1, 0]])


def test_arrays_are_read_only():
    T = two_point()
    with pytest.raises(ValueError):
        T.rates[0, 1] = 5.0


def test_generator_matches_definition(chain, rng):
    f = rng.standard_normal(chain.n)
    direct = np.array([sum((f[y] - f[x]) * chain.rates[x, y] for y in range(chain.n)) for x in range(chain.n)])
    assert np.allclose(apply_generator(chain, f), direct)


def test_integration_by_parts(chain, rng):
    # pi[Gamma(f, g)] = 2 E(f, g) = -2 <f, L g>_pi
    for _ in range(20):
        f, g = rng.standard_normal((2, chain.n))
        lhs = float(gamma(chain, f, g) @ chain.pi)
        assert lhs == pytest.approx(2 * dirichlet(chain, f, g), abs=1e-10)
        assert lhs == pytest.approx(-2 * inner(chain, f, apply_generator(chain, g)), abs=1e-10)


def test_two_point_dirichlet_value():
    # E(f) = 1/2 sum_{x,y} (f(y)-f(x))^2 Q pi, i.e. 1/2 for the symmetric two-point chain
    T = two_point(1, 1)
    assert dirichlet(T, [0.0, 1.0]) == pytest.approx(0.5)
    assert variance(T, [0.0, 1.0]) == pytest.approx(0.25)


def test_semigroup_against_matrix_exponential(chain):
    for t in (0.0, 0.3, 2.0):
        assert np.allclose(semigroup_matrix(chain, t), expm(t * chain.generator), atol=1e-12)


def test_heat_kernel_symmetry_and_representation(chain, rng):
    t = 0.7
    p = heat_kernel(chain, t)
    assert np.allclose(p, p.T)
    f = rng.standard_normal(chain.n)
    assert np.allclose(heat_semigroup(chain, t, f), p @ (f * chain.pi))


def test_negative_time():
    with pytest.raises(NegativeTime):
        semigroup_matrix(two_point(), -1.0)


@pytest.mark.parametrize("T, gap", [(two_point(1, 1), 2.0), (complete(5), 1.0), (torus(4), 2.0)])
def test_spectral_gap_closed_forms(T, gap):
    assert spectral_gap(T) == pytest.approx(gap, abs=1e-12)


def test_spectral_gap_rayleigh_oracle(chain, rng):
    gap = spectral_gap(chain)
    ratios = []
    for _ in range(10_000 // 10):
        f = rng.standard_normal(chain.n)
        ratios.append(dirichlet(chain, f) / variance(chain, f))
    assert min(ratios) >= gap - 1e-6
    # the minimiser itself: the first non-trivial eigenfunction
    u = chain.spectrum[1][:, 1] / np.sqrt(chain.pi)
    assert dirichlet(chain, u) / variance(chain, u) == pytest.approx(gap, rel=1e-8)


def test_entropy_of_dirac_and_uniform(chain):
    assert entropy(chain, np.ones(chain.n)) == pytest.approx(0.0, abs=1e-15)
    for x in range(chain.n):
        assert entropy(chain, dirac(chain, x)) == pytest.approx(-np.log(chain.pi[x]))


def test_entropy_production_is_entropy_decay_rate(chain, rng):
    # central difference in time with an independent matrix exponential
    rho = rng.dirichlet(np.ones(chain.n)) / chain.pi
    h = 1e-4
    fwd = expm(h * chain.generator) @ rho
    bwd = expm(-h * chain.generator) @ rho
    rate = -(entropy(chain, fwd) - entropy(chain, bwd)) / (2 * h)
    assert entropy_production(chain, rho) == pytest.approx(rate, rel=1e-6)


def test_entropy_production_needs_interior():
    T = two_point()
    with pytest.raises(BoundaryDensity):
        entropy_production(T, [2.0, 0.0])


def test_canonical_potential_fixes_first_entry():
    assert np.allclose(canonical_potential([3.0, 4.0, 1.0]), [0.0, 1.0, -2.0])
