import math

import numpy as np
import pytest

from entropic_ricci.chain import build_triple, spectral_gap
from entropic_ricci.errors import InvalidParams, StateSpaceTooLarge
from entropic_ricci.families import (
    FamilySpec,
    complete,
    hypercube,
    make_family,
    random_reversible,
    torus,
    two_point,
    zero_range,
    zero_range_diameter_data,
    zero_range_diameter_ratio,
    zero_range_states,
)
from entropic_ricci.inequalities import cheeger


def test_zero_range_small_case():
    T = zero_range(2, 3)
    assert T.n == 6 and math.comb(4, 2) == 6
    assert np.allclose(T.pi, 1 / 6)
    i, j = T.index((2, 0, 0)), T.index((1, 1, 0))
    assert T.rates[i, j] == pytest.approx(1 / 3)
    # (1,1,0) can reach (0,2,0), (0,1,1), (2,0,0), (1,0,1)
    assert np.count_nonzero(T.rates[j]) == 4


@pytest.mark.parametrize("K,L", [(1, 3), (2, 4), (3, 3), (4, 2)])
def test_zero_range_state_count(K, L):
    states = zero_range_states(K, L)
    assert len(states) == math.comb(K + L - 1, L - 1)
    assert all(sum(s) == K for s in states)
    assert states == sorted(states)


def test_hypercube_and_torus_basics():
    H = hypercube(3)
    assert H.pi_star == pytest.approx(1 / 8)
    assert np.all(np.count_nonzero(H.rates, axis=1) == 3)
    assert spectral_gap(H) == pytest.approx(2.0)
    assert spectral_gap(torus(4)) == pytest.approx(2.0)
    assert spectral_gap(torus(6)) == pytest.approx(2 - 2 * math.cos(2 * math.pi / 6))
    assert torus(3, 2).n == 9 and torus(3, 2).states[4] == (1, 1)


def test_complete_and_two_point():
    T = complete(5)
    assert spectral_gap(T) == pytest.approx(1.0)
    S = two_point(0.5, 1.5)
    assert S.pi == pytest.approx([0.75, 0.25])
    assert spectral_gap(S) == pytest.approx(2.0)


def test_zero_range_diameter_data():
    n, d, scale = zero_range_diameter_data(1, 3)
    # one particle: the complete graph with rate 1/3, every d_Q edge has length sqrt(3)
    assert n == 3 and d == pytest.approx(math.sqrt(3))
    assert scale == pytest.approx(math.sqrt(3 * math.log(3)))
    n, d, _ = zero_range_diameter_data(2, 3)
    assert d <= 2 * math.sqrt(3) + 1e-12
    assert zero_range_diameter_ratio(2, 3) > 0


def test_random_reversible_is_deterministic_and_reversible():
    a, b = random_reversible(9, 0.3, 7), random_reversible(9, 0.3, 7)
    assert np.array_equal(a.rates, b.rates) and np.array_equal(a.pi, b.pi)
    F = a.rates * a.pi[:, None]
    assert np.allclose(F, F.T, rtol=0, atol=1e-15)
    assert not np.array_equal(a.rates, random_reversible(9, 0.3, 8).rates)


@pytest.mark.parametrize(
    "call",
    [lambda: two_point(0, 1), lambda: complete(1), lambda: torus(1), lambda: hypercube(0),
     lambda: zero_range(0, 3), lambda: zero_range(2, 1), lambda: random_reversible(1),
     lambda: random_reversible(5, 1.5)],
)
def test_invalid_params(call):
    with pytest.raises(InvalidParams):
        call()


def test_state_space_limits():
    with pytest.raises(StateSpaceTooLarge):
        zero_range(20, 10)
    with pytest.raises(StateSpaceTooLarge):
        hypercube(14)


def test_make_family():
    assert make_family("torus", L=5).n == 5
    assert make_family(FamilySpec("zero_range", {"K": 2, "L": 3})).n == 6
    assert make_family(FamilySpec("torus", {"L": 3}), d=2).n == 9
    with pytest.raises(InvalidParams):
        make_family("moebius")
    with pytest.raises(InvalidParams):
        make_family("torus", K=3)


def test_relabeling_invariance():
    T = zero_range(2, 3)
    p = np.random.default_rng(1).permutation(T.n)
    S = build_triple([T.states[i] for i in p], T.rates[np.ix_(p, p)], T.pi[p])
    assert spectral_gap(S) == pytest.approx(spectral_gap(T), rel=1e-12)
    assert cheeger(S) == pytest.approx(cheeger(T), rel=1e-12)
