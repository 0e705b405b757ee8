"""Standard test chains.

Conventions: torus and hypercube moves have rate 1 each; the complete
graph on ``L`` vertices has rate ``1/L`` per ordered pair.  The zero-range
process with ``K`` particles on ``L`` sites and constant rates moves one
particle from an occupied site ``i`` to a site ``j != i`` at rate ``1/L``
per target configuration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, log, sqrt

import numpy as np

from .chain import MarkovTriple, build_triple
from .errors import InvalidParams, StateSpaceTooLarge
from .metric import diameter_upper, dq_matrix

ZERO_RANGE_MAX_STATES = 5000
FAMILIES = ("two_point", "complete", "torus", "hypercube", "zero_range", "random_reversible")


@dataclass
class FamilySpec:
    name: str
    params: dict = field(default_factory=dict)


def two_point(p: float = 1.0, q: float = 1.0) -> MarkovTriple:
    if p <= 0 or q <= 0:
        raise InvalidParams("two_point rates must be positive")
    pi = np.array([q, p]) / (p + q)
    return build_triple(None, [[0.0, p], [q, 0.0]], pi)


def complete(L: int) -> MarkovTriple:
    if L < 2:
        raise InvalidParams("complete graph needs L >= 2")
    Q = np.full((L, L), 1.0 / L)
    np.fill_diagonal(Q, 0.0)
    return build_triple(None, Q, np.full(L, 1.0 / L))


def torus(L: int, d: int = 1) -> MarkovTriple:
    """Nearest-neighbour walk on ``(Z/LZ)^d``; states are coordinate tuples."""
    if L < 2 or d < 1:
        raise InvalidParams("torus needs L >= 2 and d >= 1")
    if L**d > ZERO_RANGE_MAX_STATES:
        raise StateSpaceTooLarge(f"torus({L},{d}) has {L**d} states")
    states = list(itertools.product(range(L), repeat=d))
    index = {s: i for i, s in enumerate(states)}
    Q = np.zeros((len(states), len(states)))
    for s in states:
        for axis in range(d):
            for step in (1, -1):
                t = list(s)
                t[axis] = (t[axis] + step) % L
                if tuple(t) != s:
                    Q[index[s], index[tuple(t)]] = 1.0
    labels = [s[0] if d == 1 else s for s in states]
    return build_triple(labels, Q, np.full(len(states), 1.0 / len(states)))


def hypercube(n: int) -> MarkovTriple:
    if n < 1:
        raise InvalidParams("hypercube needs n >= 1")
    if 2**n > ZERO_RANGE_MAX_STATES:
        raise StateSpaceTooLarge(f"hypercube({n}) has {2**n} states")
    N = 2**n
    Q = np.zeros((N, N))
    for x in range(N):
        for b in range(n):
            Q[x, x ^ (1 << b)] = 1.0
    labels = [tuple((x >> b) & 1 for b in reversed(range(n))) for x in range(N)]
    return build_triple(labels, Q, np.full(N, 1.0 / N))


def zero_range_states(K: int, L: int) -> list[tuple]:
    """Occupation vectors with ``K`` particles on ``L`` sites, lexicographic order."""
    count = comb(K + L - 1, L - 1)
    if count > ZERO_RANGE_MAX_STATES:
        raise StateSpaceTooLarge(f"zero_range({K},{L}) has {count} states")
    out = []

    def rec(prefix, left, sites):
        if sites == 1:
            out.append(tuple(prefix + [left]))
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k, sites - 1)

    rec([], K, L)
    return out


def zero_range(K: int, L: int) -> MarkovTriple:
    if K < 1 or L < 2:
        raise InvalidParams("zero_range needs K >= 1 and L >= 2")
    states = zero_range_states(K, L)
    index = {s: i for i, s in enumerate(states)}
    Q = np.zeros((len(states), len(states)))
    for eta in states:
        for i in range(L):
            if eta[i] == 0:
                continue
            for j in range(L):
                if j == i:
                    continue
                t = list(eta)
                t[i] -= 1
                t[j] += 1
                # distinct (i, j) give distinct targets, so no aggregation happens
                Q[index[eta], index[tuple(t)]] = 1.0 / L
    return build_triple(states, Q, np.full(len(states), 1.0 / len(states)))


def random_reversible(n: int, density: float = 0.3, seed: int = 0) -> MarkovTriple:
    """Random connected graph with symmetric conductances in ``[0.5, 2]``.

    A random spanning tree guarantees connectivity; each remaining pair is
    added with probability ``density``.  Rates are ``c(x, y) / m(x)`` for
    random vertex weights ``m``, so ``pi`` is proportional to ``m``.
    """
    if n < 2 or not 0 <= density <= 1:
        raise InvalidParams("random_reversible needs n >= 2 and density in [0, 1]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    C = np.zeros((n, n))
    for k in range(1, n):
        a, b = order[k], order[rng.integers(k)]
        C[a, b] = C[b, a] = rng.uniform(0.5, 2.0)
    for a in range(n):
        for b in range(a + 1, n):
            if C[a, b] == 0 and rng.random() < density:
                C[a, b] = C[b, a] = rng.uniform(0.5, 2.0)
    m = rng.uniform(0.5, 2.0, size=n)
    pi = m / m.sum()
    Q = C / m[:, None]
    # exact detailed balance: Q(x,y) pi(x) = C(x,y) / sum(m) for both orders
    return build_triple(None, Q, pi)


_MAKERS = {
    "two_point": (two_point, ("p", "q")),
    "complete": (complete, ("L",)),
    "torus": (torus, ("L", "d")),
    "hypercube": (hypercube, ("n",)),
    "zero_range": (zero_range, ("K", "L")),
    "random_reversible": (random_reversible, ("n", "density", "seed")),
}


def make_family(spec: FamilySpec | str, **params) -> MarkovTriple:
    """Build a family chain from a :class:`FamilySpec` or a name plus keyword parameters."""
    if isinstance(spec, FamilySpec):
        name, params = spec.name, {**spec.params, **params}
    else:
        name = spec
    if name not in _MAKERS:
        raise InvalidParams(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}")
    fn, allowed = _MAKERS[name]
    extra = set(params) - set(allowed)
    if extra:
        raise InvalidParams(f"family {name!r} does not take {sorted(extra)}")
    try:
        return fn(**params)
    except TypeError as exc:
        raise InvalidParams(str(exc)) from None


def zero_range_diameter_data(K: int, L: int) -> tuple[int, float, float]:
    """``(|X|, d_Q diameter, K sqrt(L log L))`` for the zero-range chain."""
    T = zero_range(K, L)
    return T.n, float(dq_matrix(T).max()), K * sqrt(L * log(L))


def zero_range_diameter_ratio(K: int, L: int) -> float:
    """``diameter_upper / (K sqrt(L log L))``."""
    T = zero_range(K, L)
    return diameter_upper(T) / (K * sqrt(L * log(L)))
