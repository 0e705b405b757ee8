"""Logarithmic-mean calculus, the transport action and graph metrics.

The action of a potential ``psi`` at a density ``rho`` is the quadratic form

    A(rho, psi) = sum over unordered edges of c_e (psi(x) - psi(y))**2,
    c_e = theta(rho(x), rho(y)) Q(x, y) pi(x).

Writing ``lap(c)`` for the weighted graph Laplacian with edge weights ``c``,
``A = psi @ lap(c) @ psi`` and the weighted generator satisfies
``pi * L_rho psi = -lap(c) psi``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.optimize import linprog
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .chain import MarkovTriple, _vec, gamma, inner, semigroup_matrix
from .errors import NegativeArgument, NonZeroMean, OptimizerFailure, SingularWeights

# Taylor coefficients of g'(1 + x), g(r) = (r - 1) / log r.
_GPRIME_SERIES = np.array(
    [
        1 / 2,
        -1 / 6,
        1 / 8,
        -19 / 180,
        3 / 32,
        -863 / 10080,
        275 / 3456,
        -33953 / 453600,
        8183 / 115200,
        -3250433 / 47900160,
        4671 / 71680,
        -13695779093 / 217945728000,
    ]
)


def _gprime(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``g'(s/t)`` for positive arrays, stable for ratios near 1 and far from it."""
    out = np.empty_like(s)
    x = (s - t) / t
    small = np.abs(x) < 0.05
    if small.any():
        xs = x[small]
        out[small] = np.polynomial.polynomial.polyval(xs, _GPRIME_SERIES)
    mid = ~small & (np.abs(x) < 0.5)
    if mid.any():
        xm = x[mid]
        lg = np.log1p(xm)
        out[mid] = (lg - xm / (1 + xm)) / lg**2
    big = ~small & ~mid
    if big.any():
        lg = np.log(s[big]) - np.log(t[big])
        out[big] = (lg - 1 + t[big] / s[big]) / lg**2
    return out


def _theta_pos(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.empty_like(s)
    diff = s - t
    near = np.abs(diff) <= 1e-8 * (s + t)
    if near.any():
        m = 0.5 * (s[near] + t[near])
        d2 = (diff[near] / (s[near] + t[near])) ** 2
        out[near] = m * (1 - d2 * (1 / 3 + d2 * (4 / 45 + d2 * (44 / 945 + d2 * 428 / 14175))))
    far = ~near
    if far.any():
        sf, tf = s[far], t[far]
        r = (sf - tf) / tf
        close = np.abs(r) < 0.5
        den = np.empty_like(sf)
        den[close] = np.log1p(r[close])
        den[~close] = np.log(sf[~close]) - np.log(tf[~close])
        out[far] = (sf - tf) / den
    return out


def log_mean(s, t):
    """Logarithmic mean ``theta(s, t)`` and its partial derivatives.

    Returns ``(theta, d1, d2)`` with the same broadcast shape as the inputs
    (Python floats for scalar input).  ``theta`` vanishes as soon as one
    argument does; the partial with respect to a zero argument is then
    ``inf`` (the other one is 0).
    """
    s_arr, t_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    if np.any(s_arr < 0) or np.any(t_arr < 0):
        raise NegativeArgument("logarithmic mean needs non-negative arguments")
    shape = s_arr.shape
    sv, tv = s_arr.ravel(), t_arr.ravel()
    th = np.zeros_like(sv)
    d1 = np.zeros_like(sv)
    d2 = np.zeros_like(sv)
    pos = (sv > 0) & (tv > 0)
    if pos.any():
        sp, tp = sv[pos], tv[pos]
        th[pos] = _theta_pos(sp, tp)
        d1[pos] = _gprime(sp, tp)
        d2[pos] = _gprime(tp, sp)
    d1[(sv == 0) & (tv > 0)] = np.inf
    d2[(tv == 0) & (sv > 0)] = np.inf
    if shape == ():
        return float(th[0]), float(d1[0]), float(d2[0])
    return th.reshape(shape), d1.reshape(shape), d2.reshape(shape)


def theta(s, t):
    return log_mean(s, t)[0]


# --- edge weights and the action ----------------------------------------------


def edge_weights(T: MarkovTriple, rho) -> np.ndarray:
    """``c_e = theta(rho(x), rho(y)) Q(x, y) pi(x)`` on ``T.edges``."""
    rho = _vec(T, rho, "rho")
    src, dst = T.edges
    return theta(rho[src], rho[dst]) * T.edge_flux


def rho_hat(T: MarkovTriple, rho) -> np.ndarray:
    """Symmetric matrix ``theta(rho(x), rho(y))`` on the support of ``Q``, zero elsewhere."""
    rho = _vec(T, rho, "rho")
    src, dst = T.edges
    R = np.zeros((T.n, T.n))
    vals = theta(rho[src], rho[dst])
    R[src, dst] = vals
    R[dst, src] = vals
    return R


def laplacian(n: int, src, dst, c) -> np.ndarray:
    """Weighted graph Laplacian ``diag(C 1) - C`` for edge weights ``c``."""
    K = np.zeros((n, n))
    K[src, dst] = -c
    K[dst, src] = -c
    K[np.diag_indices(n)] = -K.sum(axis=1)
    return K


def action_matrix(T: MarkovTriple, rho) -> np.ndarray:
    """Matrix ``M`` with ``A(rho, psi) = psi @ M @ psi``."""
    src, dst = T.edges
    return laplacian(T.n, src, dst, edge_weights(T, rho))


def action(T: MarkovTriple, rho, psi) -> float:
    """``A(rho, psi) = 1/2 sum_{x,y} (grad psi)^2 rho_hat Q pi``."""
    psi = _vec(T, psi, "psi")
    src, dst = T.edges
    c = edge_weights(T, rho)
    return float(np.sum(c * (psi[src] - psi[dst]) ** 2))


def weighted_generator(T: MarkovTriple, rho, psi) -> np.ndarray:
    """``(L_rho psi)(x) = sum_y grad psi(x, y) rho_hat(x, y) Q(x, y)``."""
    psi = _vec(T, psi, "psi")
    return -(action_matrix(T, rho) @ psi) / T.pi


def _grounded_solve(K: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.zeros(K.shape[-1])
    x[1:] = np.linalg.solve(K[1:, 1:], b[1:])
    return x


def solve_potential(T: MarkovTriple, rho, s) -> np.ndarray:
    """Solve ``L_rho psi = s`` for ``psi`` (normalised so ``psi[0] = 0``).

    ``s`` must have zero ``pi``-mean.  Boundary densities are accepted as
    long as the positive edge weights still connect the state space.
    """
    s = _vec(T, s, "s")
    src, dst = T.edges
    c = edge_weights(T, rho)
    scale = max(1.0, float(np.abs(s).max()))
    if abs(float(s @ T.pi)) > 1e-10 * scale:
        raise NonZeroMean(f"tangent vector has pi-mean {float(s @ T.pi)!r}")
    if T.n > 1:
        keep = c > 0
        G = csr_matrix((np.ones(keep.sum()), (src[keep], dst[keep])), shape=(T.n, T.n))
        if connected_components(G, directed=False)[0] != 1:
            raise SingularWeights("edge weights disconnect the state space")
    K = laplacian(T.n, src, dst, c)
    b = -T.pi * s
    b = b - b.mean()  # remove rounding drift; exact data already sums to 0
    return _grounded_solve(K, b)


# --- point metrics -------------------------------------------------------------


@lru_cache(maxsize=None)
def comparison_constant() -> float:
    """``c = int_{-1}^{1} dr / sqrt(2 theta(1 - r, 1 + r))``, approximately 1.5587.

    This is the transport distance between the two Dirac masses of the
    symmetric two-point chain with unit rates.
    """
    f = lambda r: 1.0 / np.sqrt(2.0 * theta(1.0 - r, 1.0 + r))
    half, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return 2.0 * half


def dq_matrix(T: MarkovTriple) -> np.ndarray:
    """All-pairs ``d_Q`` with edge length ``1/sqrt(min(Q(x,y), Q(y,x)))``."""
    src, dst = T.edges
    if len(src) == 0:
        return np.zeros((T.n, T.n))
    q = np.minimum(T.rates[src, dst], T.rates[dst, src])
    G = csr_matrix((1.0 / np.sqrt(q), (src, dst)), shape=(T.n, T.n))
    return shortest_path(G, method="D", directed=False)


def lift_edge_length(T: MarkovTriple, x: int, y: int) -> float:
    """Length of the transport path that moves all mass from ``x`` to ``y`` along the edge.

    Only the two states carry mass along the way, so this is an exact
    admissible curve and an upper bound for the distance between the
    Dirac densities at ``x`` and ``y``.
    """
    w = T.rates[x, y] * T.pi[x]
    if w <= 0:
        return float("inf")
    px, py = T.pi[x], T.pi[y]
    f = lambda m: 1.0 / np.sqrt(theta(m / px, (1.0 - m) / py) * w)
    val, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(val)


def lift_metric(T: MarkovTriple) -> np.ndarray:
    """Shortest-path metric built from :func:`lift_edge_length`; an upper bound for ``d_W``."""
    src, dst = T.edges
    if len(src) == 0:
        return np.zeros((T.n, T.n))
    lengths = np.array([lift_edge_length(T, int(a), int(b)) for a, b in zip(src, dst)])
    G = csr_matrix((lengths, (src, dst)), shape=(T.n, T.n))
    return shortest_path(G, method="D", directed=False)


def point_metric(T: MarkovTriple, x, y, kind: str = "dW", steps: int = 32, cfg=None) -> float:
    """``d_W`` (upper estimate) or ``d_Q`` between the states labelled ``x`` and ``y``.

    For ``kind="dW"`` the value is the smaller of the optimised transport
    distance between the two Dirac densities and the lifted-edge path
    length, both of which bound the true distance from above.
    """
    i, j = T.index(x), T.index(y)
    if kind == "dQ":
        return float(dq_matrix(T)[i, j]) if i != j else 0.0
    if kind != "dW":
        raise ValueError(f"unknown metric kind {kind!r}")
    if i == j:
        return 0.0
    from .chain import dirac
    from .transport import w_distance

    lifted = float(lift_metric(T)[i, j])
    res = w_distance(T, dirac(T, i), dirac(T, j), steps=steps, cfg=cfg)
    return min(res.certified_upper, lifted)


def diameter_upper(T: MarkovTriple) -> float:
    """``c * max d_Q``, a certified upper bound on the ``d_W`` diameter."""
    return comparison_constant() * float(dq_matrix(T).max())


def w2_upper(T: MarkovTriple, rho0, rho1, dist: np.ndarray | None = None) -> float:
    """Optimal-transport bound ``sqrt(min_gamma sum gamma(x,y) d(x,y)^2)`` for ``W(rho0, rho1)``.

    ``dist`` defaults to ``c * d_Q``; any pointwise upper bound of ``d_W``
    keeps the result an upper bound.
    """
    mu0 = _vec(T, rho0, "rho0") * T.pi
    mu1 = _vec(T, rho1, "rho1") * T.pi
    if np.allclose(mu0, mu1, rtol=0, atol=1e-15):
        return 0.0
    d = comparison_constant() * dq_matrix(T) if dist is None else np.asarray(dist, float)
    n = T.n
    i0 = np.flatnonzero(mu0 > 0)
    i1 = np.flatnonzero(mu1 > 0)
    cost = (d[np.ix_(i0, i1)] ** 2).ravel()
    a, b = len(i0), len(i1)
    A = np.zeros((a + b, a * b))
    for k in range(a):
        A[k, k * b : (k + 1) * b] = 1.0
    for k in range(b):
        A[a + k, k::b] = 1.0
    rhs = np.concatenate([mu0[i0], mu1[i1] * (mu0.sum() / mu1.sum())])
    res = linprog(cost, A_eq=A[:-1], b_eq=rhs[:-1], bounds=(0, None), method="highs")
    if res.status != 0:
        raise OptimizerFailure(f"transport LP failed: {res.message}")
    return float(np.sqrt(max(res.fun, 0.0)))


# --- dual lower bound ----------------------------------------------------------


def default_witnesses(T: MarkovTriple, count: int = 16, seed: int = 0) -> list[np.ndarray]:
    """Eigenfunctions of ``L`` plus smoothed Gaussian potentials."""
    _, U = T.spectrum
    funcs = [U[:, k] / np.sqrt(T.pi) for k in range(1, T.n)]
    rng = np.random.default_rng(seed)
    from .chain import spectral_gap

    gap = spectral_gap(T) if T.n > 1 else 1.0
    P = semigroup_matrix(T, 0.25 / gap)
    for _ in range(count):
        funcs.append(P @ rng.standard_normal(T.n))
    return funcs


def w_lower_bound(T: MarkovTriple, rho0, rho1, witnesses=None) -> float:
    """``max_f |<f, rho1 - rho0>_pi| / sqrt(max Gamma(f) / 2)`` over the witnesses."""
    rho0 = _vec(T, rho0, "rho0")
    rho1 = _vec(T, rho1, "rho1")
    if witnesses is None:
        witnesses = default_witnesses(T)
    delta = rho1 - rho0
    best = 0.0
    for f in witnesses:
        f = _vec(T, f, "witness")
        g = float(gamma(T, f).max())
        if g <= 0:
            continue
        best = max(best, abs(inner(T, f, delta)) / np.sqrt(0.5 * g))
    return best


__all__ = [
    "log_mean",
    "theta",
    "edge_weights",
    "rho_hat",
    "laplacian",
    "action_matrix",
    "action",
    "weighted_generator",
    "solve_potential",
    "comparison_constant",
    "dq_matrix",
    "lift_edge_length",
    "lift_metric",
    "point_metric",
    "diameter_upper",
    "w2_upper",
    "default_witnesses",
    "w_lower_bound",
]
