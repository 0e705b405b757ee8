"""Entropy Hessian and entropic Ricci curvature lower bounds.

For an interior density ``rho`` both the action ``A(rho, .)`` and the
entropy Hessian ``B(rho, .)`` are quadratic forms in the potential.  The
best constant in ``B >= kappa A`` at ``rho`` is the smallest eigenvalue of
the pencil ``(B, A)`` on functions orthogonal to the constants; the global
bound is the infimum of that over ``rho``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, null_space
from scipy.optimize import minimize

from ._util import density_samples, pmap, smoothed_dirac
from .chain import MarkovTriple, _vec, apply_generator
from .errors import BoundaryDensity, DegeneratePencil
from .metric import action, action_matrix, laplacian, log_mean
from .report import CheckReport

log = logging.getLogger(__name__)


def _check_interior(T: MarkovTriple, rho) -> np.ndarray:
    rho = _vec(T, rho, "rho")
    if not np.all(rho > 0):
        raise BoundaryDensity("curvature quantities need a strictly positive density")
    return rho


def _lhat_weights(T: MarkovTriple, rho: np.ndarray):
    src, dst = T.edges
    th, d1, d2 = log_mean(rho[src], rho[dst])
    Lr = apply_generator(T, rho)
    return th, d1 * Lr[src] + d2 * Lr[dst]


def hessian_entropy(T: MarkovTriple, rho, psi) -> float:
    """``B(rho, psi) = 1/2 <Lhat rho grad psi, grad psi>_pi - <grad psi, rho_hat grad L psi>_pi``."""
    rho = _check_interior(T, rho)
    psi = _vec(T, psi, "psi")
    src, dst = T.edges
    th, lhat = _lhat_weights(T, rho)
    dpsi = psi[dst] - psi[src]
    Lpsi = apply_generator(T, psi)
    dLpsi = Lpsi[dst] - Lpsi[src]
    # sum over unordered edges = half the sum over ordered pairs
    return float(np.sum((0.5 * lhat * dpsi**2 - th * dpsi * dLpsi) * T.edge_flux))


def hessian_matrix(T: MarkovTriple, rho) -> np.ndarray:
    """Symmetric ``M`` with ``B(rho, psi) = psi @ M @ psi``."""
    rho = _check_interior(T, rho)
    src, dst = T.edges
    th, lhat = _lhat_weights(T, rho)
    MA = laplacian(T.n, src, dst, th * T.edge_flux)
    ML = MA @ T.generator
    return 0.5 * laplacian(T.n, src, dst, lhat * T.edge_flux) - 0.5 * (ML + ML.T)


_BASIS_CACHE: dict[int, np.ndarray] = {}


def _complement_basis(n: int) -> np.ndarray:
    V = _BASIS_CACHE.get(n)
    if V is None:
        V = null_space(np.ones((1, n)))
        _BASIS_CACHE[n] = V
    return V


def curvature_at(T: MarkovTriple, rho) -> tuple[float, np.ndarray]:
    """Smallest ``B / A`` over non-constant potentials at ``rho``.

    Returns ``(kappa_rho, psi)`` with ``psi`` normalised to ``A(rho, psi) = 1``
    and ``psi[0] = 0``.
    """
    rho = _check_interior(T, rho)
    if T.n < 2:
        return float("inf"), np.zeros(T.n)
    V = _complement_basis(T.n)
    A = V.T @ action_matrix(T, rho) @ V
    B = V.T @ hessian_matrix(T, rho) @ V
    d = np.sqrt(np.diag(A))
    if np.any(d <= 0):
        raise DegeneratePencil("action form vanishes on a non-constant direction")
    A = A / d[:, None] / d[None, :]
    B = B / d[:, None] / d[None, :]
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    amin = np.linalg.eigvalsh(A)[0]
    if amin <= 1e-14 * np.abs(A).max():
        raise DegeneratePencil("action form has a null space beyond the constants")
    w, U = eigh(B, A, subset_by_index=[0, 0])
    psi = V @ (U[:, 0] / d)
    psi = psi - psi[0]
    psi /= np.sqrt(action(T, rho, psi))
    return float(w[0]), psi


@dataclass
class CurvatureConfig:
    starts: int = 16
    seed: int = 0
    max_iter: int = 200
    logit_bound: float = 10.0
    grid_mesh: float = 0.01
    grid_max_states: int = 3


@dataclass
class CurvatureEstimate:
    """Smallest curvature found, with the density/potential attaining it.

    The true lower bound of the chain is at most ``kappa``.
    """

    kappa: float
    witness_density: np.ndarray
    witness_potential: np.ndarray
    starts: int
    grid_refined: bool
    slack_at_witness: float

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "witness_density": self.witness_density.tolist(),
            "witness_potential": self.witness_potential.tolist(),
            "starts": self.starts,
            "grid_refined": self.grid_refined,
            "slack_at_witness": self.slack_at_witness,
        }


def _density_from_logits(T: MarkovTriple, z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / (e @ T.pi)


def _local_min(T: MarkovTriple, rho0: np.ndarray, cfg: CurvatureConfig) -> tuple[float, np.ndarray]:
    z0 = np.log(rho0)
    z0 = np.clip(z0 - z0.mean(), -cfg.logit_bound, cfg.logit_bound)
    f = lambda z: curvature_at(T, _density_from_logits(T, z))[0]
    try:
        res = minimize(
            f, z0, method="L-BFGS-B", bounds=[(-cfg.logit_bound, cfg.logit_bound)] * T.n,
            options=dict(maxiter=cfg.max_iter, eps=1e-7),
        )
        z = res.x
    except DegeneratePencil:
        z = z0
    rho = _density_from_logits(T, z)
    val = f(z)
    start = f(z0)
    if start < val:
        return start, _density_from_logits(T, z0)
    return val, rho


def _simplex_grid(n: int, mesh: float):
    k = int(round(1.0 / mesh))
    for parts in itertools.combinations(range(1, k), n - 1):
        cuts = (0,) + parts + (k,)
        yield np.diff(cuts) / k


def estimate_ricci(T: MarkovTriple, cfg: CurvatureConfig | None = None) -> CurvatureEstimate:
    """Multistart minimisation of :func:`curvature_at` over interior densities.

    Starts: the uniform density, smoothed Diracs at every state and
    ``cfg.starts`` random densities.  On at most ``cfg.grid_max_states``
    states a simplex grid is scanned first.
    """
    cfg = cfg or CurvatureConfig()
    rng = np.random.default_rng(cfg.seed)
    starts = [np.ones(T.n)] + density_samples(T, rng, cfg.starts)
    grid = T.n <= cfg.grid_max_states and T.n >= 2
    if grid:
        best_g, best_rho = np.inf, None
        for m in _simplex_grid(T.n, cfg.grid_mesh):
            rho = m / T.pi
            k = curvature_at(T, rho)[0]
            if k < best_g:
                best_g, best_rho = k, rho
        starts.append(best_rho)
    results = pmap(lambda r: _local_min(T, r, cfg), starts)
    # deterministic reduction by (value, start index)
    idx = min(range(len(results)), key=lambda i: (results[i][0], i))
    kappa, rho = results[idx]
    kappa_chk, psi = curvature_at(T, rho)
    slack = hessian_entropy(T, rho, psi) - kappa_chk * action(T, rho, psi)
    return CurvatureEstimate(kappa_chk, rho, psi, len(starts), grid, float(slack))


def verify_ricci(T: MarkovTriple, kappa: float, samples: int = 200, seed: int = 0,
                 extra=(), floor: float = 1e-4) -> CheckReport:
    """Check ``curvature_at(rho) >= kappa`` on sampled densities (plus ``extra`` ones)."""
    rep = CheckReport("ricci", {"kappa": kappa, "samples": samples, "seed": seed, "floor": floor},
                      tolerance=1e-8)
    rng = np.random.default_rng(seed)
    dens = [np.ones(T.n)] + density_samples(T, rng, samples, floor=floor) + [np.asarray(r, float) for r in extra]
    vals = pmap(lambda r: curvature_at(T, r)[0], dens)
    for rho, k in zip(dens, vals):
        rep.record(k - kappa, {"rho": rho})
    return rep.finalize()


def sampled_curvature_min(T: MarkovTriple, samples: int = 200, seed: int = 0, extra=()) -> float:
    """Smallest pointwise curvature over the densities :func:`verify_ricci` uses."""
    rep = verify_ricci(T, 0.0, samples, seed, extra)
    return rep.worst_slack


__all__ = [
    "hessian_entropy",
    "hessian_matrix",
    "curvature_at",
    "CurvatureConfig",
    "CurvatureEstimate",
    "estimate_ricci",
    "verify_ricci",
    "sampled_curvature_min",
    "smoothed_dirac",
]
