"""Reversible Markov triples (X, Q, pi) and the basic calculus on them.

A triple is stored densely.  Functions on states are 1-d numpy arrays
indexed like ``T.states``; densities are taken relative to ``T.pi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.special import xlogy

from .errors import (
    BoundaryDensity,
    ChainValidationError,
    DetailedBalanceViolation,
    DimensionMismatch,
    NegativeRate,
    NegativeTime,
    ReducibleChain,
    UnknownState,
)

DETAILED_BALANCE_TOL = 1e-12
DENSITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MarkovTriple:
    """Finite irreducible chain with rates ``rates`` reversible w.r.t. ``pi``.

    Instances are immutable; derived quantities (generator, spectrum, edge
    lists) are computed lazily and cached.  Build them with
    :func:`build_triple`, which validates every invariant.
    """

    states: tuple
    rates: np.ndarray
    pi: np.ndarray
    q_star: float
    pi_star: float

    @property
    def n(self) -> int:
        return len(self.states)

    def index(self, state) -> int:
        try:
            return self._state_index[state]
        except KeyError:
            raise UnknownState(f"unknown state {state!r}") from None

    @cached_property
    def _state_index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def generator(self) -> np.ndarray:
        L = self.rates.copy()
        L[np.diag_indices(self.n)] = -self.rates.sum(axis=1)
        L.setflags(write=False)
        return L

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unordered edges ``(x, y)`` with ``x < y`` and ``Q(x, y) > 0``."""
        src, dst = np.nonzero(np.triu(self.rates, k=1) > 0)
        return src, dst

    @cached_property
    def edge_flux(self) -> np.ndarray:
        """``Q(x, y) pi(x)`` on each unordered edge (symmetric by detailed balance)."""
        src, dst = self.edges
        f = 0.5 * (self.rates[src, dst] * self.pi[src] + self.rates[dst, src] * self.pi[dst])
        return f

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenpairs of ``D^{1/2} L D^{-1/2}``, eigenvalues in decreasing order.

        The first eigenvalue is 0 (eigenvector ``sqrt(pi)``); the others are
        negative for an irreducible chain.
        """
        s = np.sqrt(self.pi)
        S = s[:, None] * self.generator / s[None, :]
        S = 0.5 * (S + S.T)
        w, U = np.linalg.eigh(S)
        order = np.argsort(-w)
        return w[order], U[:, order]

    @cached_property
    def min_positive_rate_pair(self) -> float:
        # min over edges of min(Q(x,y), Q(y,x)); the d_Q edge length is its -1/2 power
        src, dst = self.edges
        return float(np.min(np.minimum(self.rates[src, dst], self.rates[dst, src])))


def build_triple(states: Sequence | None, rates, pi=None) -> MarkovTriple:
    """Validate ``rates`` (and ``pi``) and return a :class:`MarkovTriple`.

    Parameters
    ----------
    states : sequence or None
        Hashable labels; ``None`` means ``range(n)``.
    rates : array_like, shape (n, n)
        Non-negative off-diagonal transition rates.  The diagonal must be 0.
    pi : array_like, optional
        Reversible probability vector.  If omitted it is computed as the
        unique stationary vector of the generator.

    Raises
    ------
    NegativeRate, ReducibleChain, DetailedBalanceViolation, ChainValidationError
    """
    Q = np.array(rates, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
        raise ChainValidationError(f"rate matrix must be square, got shape {Q.shape}")
    n = Q.shape[0]
    if not np.all(np.isfinite(Q)):
        raise ChainValidationError("rate matrix has non-finite entries")
    if np.any(Q < 0):
        x, y = np.argwhere(Q < 0)[0]
        raise NegativeRate(f"negative rate Q[{x},{y}] = {Q[x, y]}")
    if np.any(np.diag(Q) != 0):
        raise ChainValidationError("rate matrix must have zero diagonal")
    if states is None:
        states = tuple(range(n))
    states = tuple(states)
    if len(states) != n:
        raise DimensionMismatch(f"{len(states)} state labels for a {n}x{n} rate matrix")
    if len(set(states)) != n:
        raise ChainValidationError("state labels must be distinct")
    if n > 1:
        support = Q > 0
        if np.any(support != support.T):
            x, y = np.argwhere(support != support.T)[0]
            raise DetailedBalanceViolation(
                f"support not symmetric: Q[{x},{y}]={Q[x, y]}, Q[{y},{x}]={Q[y, x]}", pair=(int(x), int(y))
            )
        ncomp, _ = connected_components(support, directed=True, connection="strong")
        if ncomp != 1:
            raise ReducibleChain(f"rate graph has {ncomp} strongly connected components")

    L = Q.copy()
    L[np.diag_indices(n)] = -Q.sum(axis=1)
    if pi is None:
        A = np.vstack([L.T, np.ones((1, n))])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        p = np.linalg.lstsq(A, b, rcond=None)[0]
        p = np.clip(p, 0.0, None)
        p /= p.sum()
        scale = max(1.0, float(np.abs(Q).max(initial=0.0)))
        if np.abs(p @ L).max() > 1e-10 * scale:
            raise ChainValidationError("could not solve for a stationary vector")
    else:
        p = np.array(pi, dtype=float)
        if p.shape != (n,):
            raise DimensionMismatch(f"pi has shape {p.shape}, expected ({n},)")
        if np.any(~np.isfinite(p)) or np.any(p <= 0):
            raise ChainValidationError("pi must be strictly positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ChainValidationError(f"pi sums to {p.sum()!r}, not 1")
    if np.any(p <= 0):
        raise ChainValidationError("stationary vector is not strictly positive")

    flux = Q * p[:, None]
    resid = np.abs(flux - flux.T)
    scale = flux.max(initial=0.0)
    if n > 1 and resid.max() > DETAILED_BALANCE_TOL * scale:
        x, y = np.unravel_index(np.argmax(resid), resid.shape)
        raise DetailedBalanceViolation(
            f"detailed balance fails at ({states[x]!r}, {states[y]!r}): "
            f"Q pi = {float(flux[x, y])!r} vs {float(flux[y, x])!r}",
            pair=(states[x], states[y]),
            residual=float(resid[x, y]),
        )

    Q.setflags(write=False)
    p.setflags(write=False)
    pos = Q[Q > 0]
    q_star = float(pos.min()) if pos.size else float("inf")
    return MarkovTriple(states=states, rates=Q, pi=p, q_star=q_star, pi_star=float(p.min()))


def _vec(T: MarkovTriple, f, name="f") -> np.ndarray:
    v = np.asarray(f, dtype=float)
    if v.shape != (T.n,):
        raise DimensionMismatch(f"{name} has shape {v.shape}, expected ({T.n},)")
    return v


# --- densities and potentials ------------------------------------------------


def as_density(T: MarkovTriple, values, tol: float = DENSITY_TOL) -> np.ndarray:
    """Check that ``values`` is a probability density w.r.t. ``T.pi``."""
    rho = _vec(T, values, "rho")
    if np.any(rho < 0):
        raise ValueError("density has negative entries")
    mass = float(rho @ T.pi)
    if abs(mass - 1.0) > tol:
        raise ValueError(f"density has total mass {mass!r}")
    return rho


def is_interior(rho) -> bool:
    return bool(np.min(rho) > 0)


def dirac(T: MarkovTriple, x: int) -> np.ndarray:
    """Density of the point mass at state index ``x``, i.e. ``1_x / pi(x)``."""
    rho = np.zeros(T.n)
    rho[x] = 1.0 / T.pi[x]
    return rho


def normalize(T: MarkovTriple, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return v / (v @ T.pi)


def canonical_potential(psi) -> np.ndarray:
    """Gauge representative with ``psi[0] == 0``."""
    psi = np.asarray(psi, dtype=float)
    return psi - psi[0]


# --- generator, Gamma calculus ---------------------------------------------------


def pi_mean(T: MarkovTriple, f) -> float:
    return float(_vec(T, f) @ T.pi)


def inner(T: MarkovTriple, f, g) -> float:
    """``<f, g>_pi``."""
    return float(np.sum(_vec(T, f) * _vec(T, g, "g") * T.pi))


def apply_generator(T: MarkovTriple, f) -> np.ndarray:
    """``Lf(x) = sum_y (f(y) - f(x)) Q(x, y)``."""
    return T.generator @ _vec(T, f)


def gradient(f) -> np.ndarray:
    """Discrete gradient matrix ``grad f(x, y) = f(y) - f(x)``."""
    f = np.asarray(f, dtype=float)
    return f[None, :] - f[:, None]


def gamma(T: MarkovTriple, f, g=None) -> np.ndarray:
    """Carré du champ ``Gamma(f, g)(x) = sum_y grad f grad g Q(x, y)``."""
    f = _vec(T, f)
    g = f if g is None else _vec(T, g, "g")
    return np.sum(gradient(f) * gradient(g) * T.rates, axis=1)


def dirichlet(T: MarkovTriple, f, g=None) -> float:
    """Dirichlet form ``E(f, g) = 1/2 sum_{x,y} grad f grad g Q(x,y) pi(x)``."""
    f = _vec(T, f)
    g = f if g is None else _vec(T, g, "g")
    return float(0.5 * np.sum(gradient(f) * gradient(g) * T.rates * T.pi[:, None]))


def variance(T: MarkovTriple, f) -> float:
    f = _vec(T, f)
    m = f @ T.pi
    return float(((f - m) ** 2) @ T.pi)


# --- semigroup -----------------------------------------------------------------


def semigroup_matrix(T: MarkovTriple, t: float) -> np.ndarray:
    """Matrix of ``P_t = exp(tL)`` acting on functions: ``(P_t f)(x) = sum_y P[x, y] f(y)``."""
    if t < 0:
        raise NegativeTime(f"time must be non-negative, got {t}")
    w, U = T.spectrum
    s = np.sqrt(T.pi)
    M = (U * np.exp(t * w)) @ U.T
    return M / s[:, None] * s[None, :]


def heat_semigroup(T: MarkovTriple, t: float, f) -> np.ndarray:
    f = _vec(T, f)
    if t == 0:
        return f.copy()
    return semigroup_matrix(T, t) @ f


def heat_kernel(T: MarkovTriple, t: float) -> np.ndarray:
    """``p_t(x, y) = P_t 1_y (x) / pi(y)``; symmetric for reversible chains."""
    K = semigroup_matrix(T, t) / T.pi[None, :]
    return 0.5 * (K + K.T)


def spectral_gap(T: MarkovTriple) -> float:
    """Smallest non-zero eigenvalue of ``-L``."""
    if T.n < 2:
        return float("inf")
    return float(-T.spectrum[0][1])


# --- entropy functionals ---------------------------------------------------------


def entropy(T: MarkovTriple, rho) -> float:
    """``H(rho) = sum_x pi(x) rho(x) log rho(x)`` with ``0 log 0 = 0``."""
    rho = _vec(T, rho, "rho")
    return float(np.sum(T.pi * xlogy(rho, rho)))


def entropy_production(T: MarkovTriple, rho) -> float:
    """Fisher information ``I(rho) = E(rho, log rho)``; needs ``rho > 0``."""
    rho = _vec(T, rho, "rho")
    if not is_interior(rho):
        raise BoundaryDensity("entropy production needs a strictly positive density")
    return dirichlet(T, rho, np.log(rho))
