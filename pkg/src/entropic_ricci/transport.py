"""Upper bounds for the transport distance ``W`` by direct action minimisation.

Paths are piecewise linear in time between ``N + 1`` density nodes, with a
constant edge flux on every interval.  For such a path the continuity
equation holds exactly and its action can be evaluated exactly: on an
interval the optimal constant flux sees the edge conductance

    c_e = Q(x, y) pi(x) / avg_tau [1 / theta(rho_tau(x), rho_tau(y))],

the time-harmonic mean of the logarithmic mean along the segment.  The
interval cost is then ``(pi dRho)^T lap(c)^+ (pi dRho) / dt``.  Because
every evaluated path is admissible, the square root of the minimised
action is a genuine upper bound for ``W``, and refining the grid (by
splitting intervals) can only lower it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .chain import MarkovTriple, as_density, heat_semigroup, spectral_gap
from .errors import OptimizerFailure
from .metric import comparison_constant, dq_matrix, laplacian, log_mean, w_lower_bound

log = logging.getLogger(__name__)

DIRAC_EPS = 1e-16


def _tanh_sinh(h: float = 0.125, umax: float = 3.25):
    """Nodes/weights on [0, 1]; returns ``(tau, 1 - tau, w)``."""
    u = np.arange(-umax, umax + h / 2, h)
    a = 0.5 * np.pi * np.sinh(u)
    tau = expit(2 * a)
    one_minus = expit(-2 * a)
    w = h * 0.5 * np.pi * np.cosh(u) / (2 * np.cosh(a) ** 2)
    keep = w > 1e-30
    return tau[keep], one_minus[keep], w[keep]


_TAU, _TAU_C, _TAU_W = _tanh_sinh()


@dataclass
class WConfig:
    """Tuning knobs for :func:`w_distance`.

    ``start_steps`` is the coarsest grid; it is doubled until ``steps``.
    """

    start_steps: int = 8
    eps: float = DIRAC_EPS
    max_iter: int = 200
    gtol: float = 1e-10
    seed: int = 0
    witnesses: int = 16


@dataclass
class ActionPath:
    """Discrete curve ``rho_0 .. rho_N`` with per-interval potentials.

    ``conductances[k]`` are the edge weights (``c_e`` above) used on
    interval ``k``; ``potentials[k]`` solves ``lap(c_k) psi = -pi (rho_{k+1} - rho_k) / dt``.
    """

    times: np.ndarray
    densities: np.ndarray
    potentials: np.ndarray
    conductances: np.ndarray
    action: float

    def interval_actions(self, T: MarkovTriple) -> np.ndarray:
        src, dst = T.edges
        dt = np.diff(self.times)
        d = self.potentials[:, src] - self.potentials[:, dst]
        return dt * np.sum(self.conductances * d**2, axis=1)

    def continuity_residual(self, T: MarkovTriple) -> float:
        src, dst = T.edges
        worst = 0.0
        for k in range(len(self.times) - 1):
            K = laplacian(T.n, src, dst, self.conductances[k])
            rate = (self.densities[k + 1] - self.densities[k]) / (self.times[k + 1] - self.times[k])
            r = rate + K @ self.potentials[k] / T.pi
            worst = max(worst, float(np.abs(r).max()))
        return worst


@dataclass
class DistanceResult:
    """Output of :func:`w_distance`.

    ``upper`` is the square root of the witness path's action.  When an
    endpoint had to be regularised, ``tail`` bounds the distance between
    the regularised and the original endpoints, and ``certified_upper``
    adds it back.
    """

    upper: float
    lower: float
    refinement: list = field(default_factory=list)
    witness_path: ActionPath | None = None
    tail: float = 0.0

    @property
    def certified_upper(self) -> float:
        return self.upper + self.tail


class _PathObjective:
    def __init__(self, T: MarkovTriple, r0: np.ndarray, r1: np.ndarray, N: int):
        self.T, self.r0, self.r1, self.N = T, r0, r1, N
        self.src, self.dst = T.edges
        self.w = T.edge_flux
        self.dt = 1.0 / N
        eye = np.eye(T.n)
        self.P_src, self.P_dst = eye[self.src], eye[self.dst]

    def densities(self, z: np.ndarray) -> np.ndarray:
        Z = z.reshape(self.N - 1, self.T.n)
        e = np.exp(Z - Z.max(axis=1, keepdims=True))
        R = e / (e @ self.T.pi)[:, None]
        return np.vstack([self.r0, R, self.r1])

    def conductances(self, R: np.ndarray, grad: bool = False):
        a0, a1 = R[:-1, self.src], R[1:, self.src]
        b0, b1 = R[:-1, self.dst], R[1:, self.dst]
        a = a0[..., None] * _TAU_C + a1[..., None] * _TAU
        b = b0[..., None] * _TAU_C + b1[..., None] * _TAU
        th, d1, d2 = log_mean(a, b)
        inv = 1.0 / th
        h = inv @ _TAU_W
        c = self.w / h
        if not grad:
            return c, None
        # dc/dv = (w / h^2) * sum_j w_j (weight_j) dtheta_j / theta_j^2
        f = (c**2 / self.w)[..., None]
        k1 = d1 * inv**2 * _TAU_W
        k2 = d2 * inv**2 * _TAU_W
        dc = (
            f[..., 0] * (k1 @ _TAU_C),
            f[..., 0] * (k1 @ _TAU),
            f[..., 0] * (k2 @ _TAU_C),
            f[..., 0] * (k2 @ _TAU),
        )
        return c, dc

    def potentials(self, R: np.ndarray, c: np.ndarray) -> np.ndarray:
        T = self.T
        n = T.n
        K = np.zeros((self.N, n, n))
        idx = np.arange(self.N)[:, None]
        K[idx, self.src, self.dst] = -c
        K[idx, self.dst, self.src] = -c
        K[:, np.arange(n), np.arange(n)] = -K.sum(axis=2)
        beta = T.pi * np.diff(R, axis=0) / self.dt
        beta -= beta.mean(axis=1, keepdims=True)
        psi = np.zeros((self.N, n))
        psi[:, 1:] = np.linalg.solve(K[:, 1:, 1:], -beta[:, 1:, None])[..., 0]
        return psi

    def cost_from_densities(self, R: np.ndarray, grad: bool = False):
        T = self.T
        c, dc = self.conductances(R, grad)
        psi = self.potentials(R, c)
        d = psi[:, self.src] - psi[:, self.dst]
        per = self.dt * np.sum(c * d**2, axis=1)
        total = float(per.sum())
        if not grad:
            return total, None
        gR = np.zeros_like(R)
        # d cost / d beta = -2 psi dt ; beta = pi dR / dt
        gb = -2.0 * psi * T.pi
        gR[1:] += gb
        gR[:-1] -= gb
        gc = -self.dt * d**2
        a0, a1, b0, b1 = dc
        for arr, rows, onehot in ((a0, slice(0, -1), self.P_src), (a1, slice(1, None), self.P_src),
                                  (b0, slice(0, -1), self.P_dst), (b1, slice(1, None), self.P_dst)):
            gR[rows] += (gc * arr) @ onehot
        return total, gR

    def __call__(self, z: np.ndarray):
        R = self.densities(z)
        try:
            val, gR = self.cost_from_densities(R, grad=True)
        except np.linalg.LinAlgError:
            return np.inf, np.zeros_like(z)
        Rm = R[1:-1]
        G = gR[1:-1]
        gz = Rm * G - Rm * self.T.pi * np.sum(G * Rm, axis=1, keepdims=True)
        if not np.isfinite(val):
            return np.inf, np.zeros_like(z)
        return val, gz.ravel()

    def path(self, R: np.ndarray) -> ActionPath:
        c, _ = self.conductances(R)
        psi = self.potentials(R, c)
        d = psi[:, self.src] - psi[:, self.dst]
        total = float(self.dt * np.sum(c * d**2))
        return ActionPath(np.linspace(0.0, 1.0, self.N + 1), R.copy(), psi, c, total)


def _logits(R: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(R, 1e-300)).ravel()


def _refine(R: np.ndarray) -> np.ndarray:
    out = np.empty((2 * len(R) - 1, R.shape[1]))
    out[0::2] = R
    out[1::2] = 0.5 * (R[:-1] + R[1:])
    return out


def _regularise(T: MarkovTriple, rho: np.ndarray, eps: float) -> tuple[np.ndarray, float]:
    if rho.min() > 0:
        return rho, 0.0
    return (1.0 - eps) * rho + eps, eps


def _initial_paths(T: MarkovTriple, r0: np.ndarray, r1: np.ndarray, N: int) -> list[np.ndarray]:
    t = np.linspace(0.0, 1.0, N + 1)[:, None]
    lin = (1 - t) * r0 + t * r1
    bump = 2.0 * t * (1 - t)
    mixed = (1 - bump) * lin + bump
    starts = [mixed]
    gap = spectral_gap(T)
    if np.isfinite(gap) and gap > 0:
        s = (0.5 / gap) * 4.0 * t[:, 0] * (1 - t[:, 0])
        heat = np.array(
            [(1 - tk) * heat_semigroup(T, sk, r0) + tk * heat_semigroup(T, sk, r1) for tk, sk in zip(t[:, 0], s)]
        )
        heat[0], heat[-1] = r0, r1
        starts.append(np.maximum(heat, 1e-300))
    return starts


def _banded_hessian(obj: _PathObjective, h: float = 1e-5):
    """Finite-difference Hessian in the logits.

    Node ``k`` only interacts with ``k - 1`` and ``k + 1``, so nodes three
    apart can be perturbed together: ``3 n`` gradient pairs suffice.
    """
    M, n = obj.N - 1, obj.T.n

    def hess(x):
        H = np.zeros((M * n, M * n))
        for c in range(3):
            ks = np.arange(c, M, 3)
            for j in range(n):
                d = np.zeros((M, n))
                d[ks, j] = 1.0
                d = d.ravel()
                col = ((obj(x + h * d)[1] - obj(x - h * d)[1]) / (2 * h)).reshape(M, n)
                for k in ks:
                    lo, hi = max(k - 1, 0), min(k + 2, M)
                    H[lo * n : hi * n, k * n + j] = col[lo:hi].ravel()
        H = 0.5 * (H + H.T)
        if not np.all(np.isfinite(H)):
            return np.eye(M * n)
        # softmax logits are only defined up to a constant per node; pin that direction
        scale = max(float(np.abs(np.diag(H)).max()), 1.0)
        for k in range(M):
            H[k * n : (k + 1) * n, k * n : (k + 1) * n] += scale / n
        return H

    return hess


def _minimise(obj: _PathObjective, R0: np.ndarray, cfg: WConfig) -> np.ndarray:
    if obj.N < 2:
        return R0
    z0 = _logits(R0[1:-1])
    start_val = obj.cost_from_densities(R0)[0]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        res = minimize(
            obj, z0, jac=True, hess=_banded_hessian(obj), method="trust-exact",
            options=dict(maxiter=cfg.max_iter, gtol=cfg.gtol),
        )
    R = obj.densities(res.x)
    if not obj.cost_from_densities(R)[0] <= start_val:
        log.debug("optimiser did not improve on its start (%s)", res.message)
        return R0
    return R


def w_distance(T: MarkovTriple, rho0, rho1, steps: int = 32, cfg: WConfig | None = None) -> DistanceResult:
    """Upper and lower bounds for ``W(rho0, rho1)``.

    The grid is refined by doubling from ``cfg.start_steps`` up to
    ``steps``; each level is warm-started from the previous optimum so
    the recorded upper values never increase.  Boundary endpoints are
    replaced by ``(1 - eps) rho + eps`` and the cost of that substitution
    is reported in ``tail``.
    """
    cfg = cfg or WConfig()
    rho0 = as_density(T, rho0).astype(float)
    rho1 = as_density(T, rho1).astype(float)
    if steps < 2:
        raise ValueError("need at least two time steps")
    lower = w_lower_bound(T, rho0, rho1)
    if np.array_equal(rho0, rho1):
        R = np.repeat(rho0[None, :], steps + 1, axis=0)
        n_edges = len(T.edges[0])
        path = ActionPath(np.linspace(0, 1, steps + 1), R, np.zeros((steps, T.n)), np.zeros((steps, n_edges)), 0.0)
        return DistanceResult(0.0, 0.0, [(steps, 0.0)], path, 0.0)

    r0, e0 = _regularise(T, rho0, cfg.eps)
    r1, e1 = _regularise(T, rho1, cfg.eps)
    diam = comparison_constant() * float(dq_matrix(T).max())
    tail = (np.sqrt(e0) + np.sqrt(e1)) * diam

    N = min(cfg.start_steps, steps)
    best_R, best_val = None, np.inf
    obj = _PathObjective(T, r0, r1, N)
    for R0 in _initial_paths(T, r0, r1, N):
        R = _minimise(obj, R0, cfg)
        val = obj.cost_from_densities(R)[0]
        if val < best_val:
            best_R, best_val = R, val
    refinement = [(N, float(np.sqrt(best_val)))]
    while N < steps:
        N = min(2 * N, steps)
        R0 = _refine(best_R) if N == 2 * (len(best_R) - 1) else None
        obj = _PathObjective(T, r0, r1, N)
        if R0 is None:
            R0 = _initial_paths(T, r0, r1, N)[0]
        R = _minimise(obj, R0, cfg)
        val = obj.cost_from_densities(R)[0]
        if val > best_val * (1 + 1e-12) + 1e-15 and R0 is not None:
            raise OptimizerFailure(f"refinement to N={N} increased the action")
        best_R, best_val = R, val
        refinement.append((N, float(np.sqrt(val))))

    path = obj.path(best_R)
    upper = float(np.sqrt(path.action))
    if lower > upper + tail + 1e-9:
        raise OptimizerFailure(f"lower bound {lower} exceeds upper bound {upper + tail}")
    return DistanceResult(upper, lower, refinement, path, tail)
