"""Functional-inequality constants: spectral gap, Cheeger, MLSI, mixing.

Also the constant obtained by chaining a weak Poincaré inequality, a
non-tight one and a tightening step, and two sampled checks (modified
Talagrand, L1 Poincaré).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from ._util import density_samples, pmap, random_potential, smoothed_dirac
from .chain import MarkovTriple, entropy, entropy_production, semigroup_matrix, spectral_gap
from .errors import InvalidEpsilon, NonPositiveDiameter, StateSpaceTooLarge
from .report import CheckReport

EXACT_CUT_LIMIT = 24
_CHUNK = 1 << 15


# --- Cheeger constant ------------------------------------------------------------


def _cut_values(T: MarkovTriple, masks: np.ndarray) -> np.ndarray:
    n = T.n
    src, dst = T.edges
    bits = ((masks[:, None] >> np.arange(n - 1)) & 1).astype(bool)
    bits = np.hstack([bits, np.zeros((len(masks), 1), dtype=bool)])
    mass = bits @ T.pi
    perim = (bits[:, src] != bits[:, dst]) @ T.edge_flux
    return perim / (mass * (1.0 - mass))


def _cheeger_exact(T: MarkovTriple) -> tuple[float, np.ndarray]:
    n = T.n
    total = 1 << (n - 1)
    starts = list(range(1, total, _CHUNK))

    def chunk(lo):
        masks = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        vals = _cut_values(T, masks)
        k = int(np.argmin(vals))
        return float(vals[k]), int(masks[k])

    best = min(pmap(chunk, starts))
    mask = best[1]
    subset = np.array([(mask >> i) & 1 for i in range(n - 1)] + [0], dtype=bool)
    return best[0], subset


def _cheeger_anneal(T: MarkovTriple, seed: int = 0, sweeps: int = 200) -> tuple[float, np.ndarray]:
    rng = np.random.default_rng(seed)
    n = T.n
    src, dst = T.edges

    def value(s):
        # test the mask, not the mass: pi may sum to 1 - ulp
        if s.all() or not s.any():
            return math.inf
        m = s @ T.pi
        return float((s[src] != s[dst]) @ T.edge_flux / (m * (1 - m)))

    s = rng.random(n) < 0.5
    s[0], s[-1] = True, False
    cur = value(s)
    best, best_s = cur, s.copy()
    temps = np.geomspace(1.0, 1e-4, sweeps) * max(cur, 1e-12)
    for temp in temps:
        for x in rng.permutation(n):
            s[x] = not s[x]
            v = value(s)
            if v <= cur or rng.random() < math.exp(-(v - cur) / temp):
                cur = v
                if v < best:
                    best, best_s = v, s.copy()
            else:
                s[x] = not s[x]
    return best, best_s


def cheeger(T: MarkovTriple, mode: str = "exact", seed: int = 0) -> float:
    """``h = min_A pi+(dA) / (pi(A)(1 - pi(A)))`` over non-trivial subsets.

    ``mode="exact"`` enumerates all cuts (at most 24 states); ``"anneal"``
    runs simulated annealing and returns an upper bound.
    """
    return cheeger_cut(T, mode, seed)[0]


def cheeger_cut(T: MarkovTriple, mode: str = "exact", seed: int = 0) -> tuple[float, np.ndarray]:
    """Like :func:`cheeger` but also returns the optimal subset as a boolean mask."""
    if T.n < 2:
        return math.inf, np.zeros(T.n, dtype=bool)
    if mode == "exact":
        if T.n > EXACT_CUT_LIMIT:
            raise StateSpaceTooLarge(f"exact Cheeger enumeration limited to {EXACT_CUT_LIMIT} states")
        return _cheeger_exact(T)
    if mode == "anneal":
        return _cheeger_anneal(T, seed)
    raise ValueError(f"unknown mode {mode!r}")


def perimeter(T: MarkovTriple, subset) -> float:
    """``pi+(dA) = sum_{x in A, y not in A} Q(x, y) pi(x)``."""
    s = np.asarray(subset, dtype=bool)
    src, dst = T.edges
    return float((s[src] != s[dst]) @ T.edge_flux)


def buser_constant(kappa: float, lambda1: float, q_star: float) -> float:
    """``(1/3) sqrt(Q*) min(lambda1 / sqrt|kappa|, sqrt(lambda1))``; just ``sqrt(lambda1)`` for ``kappa = 0``."""
    base = math.sqrt(lambda1)
    if kappa != 0:
        base = min(lambda1 / math.sqrt(abs(kappa)), base)
    return math.sqrt(q_star) * base / 3.0


# --- MLSI ------------------------------------------------------------------------------


@dataclass
class MLSIConfig:
    starts: int = 16
    seed: int = 0
    max_iter: int = 300
    logit_bound: float = 12.0
    min_entropy: float = 1e-8


def _mlsi_ratio(T: MarkovTriple, rho: np.ndarray, gap: float, min_entropy: float) -> float:
    H = entropy(T, rho)
    if H < min_entropy:
        return gap
    return entropy_production(T, rho) / (2.0 * H)


def mlsi_estimate(T: MarkovTriple, cfg: MLSIConfig | None = None) -> float:
    """Smallest ``I(rho) / (2 H(rho))`` found by multistart search, capped at the spectral gap.

    The cap is the limit of the ratio as ``rho -> 1``; the value returned
    is an upper bound on the best MLSI constant.
    """
    cfg = cfg or MLSIConfig()
    if T.n < 2:
        return math.inf
    gap = spectral_gap(T)
    rng = np.random.default_rng(cfg.seed)
    starts = density_samples(T, rng, cfg.starts)
    b = cfg.logit_bound

    def to_rho(z):
        e = np.exp(z - z.max())
        return e / (e @ T.pi)

    def run(rho0):
        z0 = np.clip(np.log(rho0) - np.log(rho0).mean(), -b, b)
        f = lambda z: _mlsi_ratio(T, to_rho(z), gap, cfg.min_entropy)
        res = minimize(f, z0, method="L-BFGS-B", bounds=[(-b, b)] * T.n, options=dict(maxiter=cfg.max_iter))
        return min(float(res.fun), f(z0))

    found = min(pmap(run, starts))
    return min(found, gap)


# --- concentration ---------------------------------------------------------------


@dataclass
class ConcentrationProfile:
    r: np.ndarray
    beta: np.ndarray
    diameter: float


def concentration_profile(T: MarkovTriple, dist, r_grid) -> ConcentrationProfile:
    """``beta(r) = max_{pi(A) >= 1/2} pi({x : d(x, A) > r})`` by enumerating subsets."""
    n = T.n
    if n > EXACT_CUT_LIMIT:
        raise StateSpaceTooLarge(f"profile enumeration limited to {EXACT_CUT_LIMIT} states")
    d = np.asarray(dist, dtype=float)
    r = np.asarray(r_grid, dtype=float)
    beta = np.zeros_like(r)
    total = 1 << n
    for lo in range(1, total, _CHUNK):
        masks = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
        big = bits @ T.pi >= 0.5 - 1e-15
        bits = bits[big]
        if not len(bits):
            continue
        # distance of every state to each set
        dA = np.where(bits[:, None, :], d[None, :, :], np.inf).min(axis=2)
        far = dA[:, :, None] > r[None, None, :]
        mass = np.einsum("mxr,x->mr", far, T.pi)
        beta = np.maximum(beta, mass.max(axis=0))
    return ConcentrationProfile(r, beta, float(d.max()))


def fit_exponential(profile: ConcentrationProfile, alpha: float | None = None) -> tuple[float, float]:
    """Least ``M`` with ``beta(r) <= M exp(-alpha r)``; ``alpha = 1/D`` unless given.

    With ``alpha="fit"`` the rate comes from a log-linear regression on
    the positive part of the profile, and ``M`` is then raised to make the
    bound hold on the grid.
    """
    return _fit(profile, alpha, lambda r: r, 1.0 / profile.diameter)


def fit_gaussian(profile: ConcentrationProfile, rate: float | None = None) -> tuple[float, float]:
    """Least ``M`` with ``beta(r) <= M exp(-rate r^2)``; ``rate = 1/D^2`` unless given."""
    return _fit(profile, rate, lambda r: r**2, 1.0 / profile.diameter**2)


def _fit(profile, rate, shape, default):
    r, b = profile.r, profile.beta
    if rate == "fit":
        pos = b > 0
        if pos.sum() >= 2:
            slope, _ = np.polyfit(shape(r[pos]), np.log(b[pos]), 1)
            rate = max(-slope, 0.0)
        else:
            rate = default
    elif rate is None:
        rate = default
    M = float(np.max(b * np.exp(rate * shape(r)))) if len(r) else 0.0
    return M, float(rate)


# --- composed Poincaré constant ----------------------------------------------------


def _composed_lambda(k: float, tau: float, eta: float) -> float:
    """Tightened constant times ``D^2`` for ``k = kappa D^2, tau = t/D^2, eta = delta D^2``."""
    x = 2.0 * k * tau
    if x > 700 or eta + 0.5 * k > 700:
        return -math.inf
    if k > 0:
        a1 = 0.25 * math.expm1(x) / k
        b1 = 0.5 * k / -math.expm1(-x)
    else:
        a1 = 0.5 * tau
        b1 = 0.25 / tau
    a2 = 0.25 / eta
    b2 = math.exp(eta + 0.5 * k)
    prod = (3.0 * b1 + b2 - 1.0) * (2.0 + b2)
    if prod < 0:
        return -math.inf
    num = 2.0 - (b2 + math.sqrt(prod))
    if num <= 0:
        return -math.inf
    return num / (8.0 * (3.0 * a1 + a2))


def composed_pi_details(kappa: float, D: float) -> dict:
    """Optimised constant with the parameters that attain it.

    ``kappa >= 0`` is the size of a negative curvature lower bound (the
    bound is ``-kappa``).  ``feasible`` is False when the admissibility
    condition fails everywhere on the scanned grid; ``lambda`` is 0 then.
    """
    if not D > 0:
        raise NonPositiveDiameter(f"diameter must be positive, got {D}")
    if kappa < 0:
        raise ValueError("kappa is the magnitude of a negative lower bound and must be >= 0")
    k = kappa * D * D
    lt = np.linspace(-6, 8, 141)
    le = np.linspace(-12, 2, 141)
    grid = np.array([[_composed_lambda(k, math.exp(a), math.exp(b)) for b in le] for a in lt])
    i, j = np.unravel_index(np.argmax(grid), grid.shape)
    if not np.isfinite(grid[i, j]):
        return {"lambda": 0.0, "feasible": False, "t": math.nan, "delta": math.nan}

    def inner(a):
        res = minimize_scalar(lambda b: -_composed_lambda(k, math.exp(a), math.exp(b)),
                              bracket=(le[max(j - 1, 0)], le[j], le[min(j + 1, len(le) - 1)])
                              if 0 < j < len(le) - 1 else None,
                              bounds=None if 0 < j < len(le) - 1 else (le[0], le[-1]),
                              method="golden" if 0 < j < len(le) - 1 else "bounded",
                              tol=1e-12)
        return res.fun, res.x

    lo, hi = lt[max(i - 1, 0)], lt[min(i + 1, len(lt) - 1)]
    outer = minimize_scalar(lambda a: inner(a)[0], bounds=(lo, hi), method="bounded",
                            options=dict(xatol=1e-12))
    val, b_opt = inner(outer.x)
    best = max(-val, grid[i, j])
    if best == grid[i, j]:
        a_opt, b_opt = lt[i], le[j]
    else:
        a_opt = outer.x
    t, delta = math.exp(a_opt) * D * D, math.exp(b_opt) / (D * D)
    return {"lambda": best / (D * D), "feasible": True, "t": t, "delta": delta}


def composed_pi_constant(kappa: float, D: float) -> float:
    """Poincaré constant from the weak/non-tight/tightening chain of inequalities."""
    return composed_pi_details(kappa, D)["lambda"]


# --- mixing ------------------------------------------------------------------------------


def _check_eps(eps: float) -> None:
    if not 0 < eps < 1:
        raise InvalidEpsilon(f"epsilon must lie in (0, 1), got {eps}")


def tv_distance(T: MarkovTriple, t: float) -> float:
    """``max_x ||P_t^* delta_x - pi||_TV``."""
    P = semigroup_matrix(T, t)
    return float(0.5 * np.abs(P - T.pi[None, :]).sum(axis=1).max())


def mixing_time_exact(T: MarkovTriple, eps: float, resolution: float = 1e-9) -> float:
    """Smallest ``t`` with ``tv_distance(t) <= eps`` (bisection; TV is non-increasing)."""
    _check_eps(eps)
    if tv_distance(T, 0.0) <= eps:
        return 0.0
    gap = spectral_gap(T)
    hi = 1.0 / gap
    while tv_distance(T, hi) > eps:
        hi *= 2.0
    lo = 0.0
    while hi - lo > resolution * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if tv_distance(T, mid) > eps:
            lo = mid
        else:
            hi = mid
    return hi


def mixing_time_bound(D: float, lambda_mlsi: float, eps: float) -> float:
    """``D^2 / 4 + log(1/eps) / lambda``."""
    _check_eps(eps)
    return D * D / 4.0 + math.log(1.0 / eps) / lambda_mlsi


def pi_star_bound(lambda_mlsi: float, pi_star: float, eps: float) -> float:
    """``(1 / (2 lambda)) [-log(2 eps^2) + log log(1 / pi_*)]``."""
    _check_eps(eps)
    return (-math.log(2 * eps * eps) + math.log(math.log(1.0 / pi_star))) / (2.0 * lambda_mlsi)


# --- sampled checks ------------------------------------------------------------------


def talagrand_check(T: MarkovTriple, lam: float, samples: int = 8, seed: int = 0,
                    steps: int = 16, densities=None) -> CheckReport:
    """``W(rho, 1)^2 <= (2 / lam) H(rho)`` with the certified upper value of ``W``."""
    from .transport import w_distance

    rep = CheckReport("talagrand", {"lambda": lam, "samples": samples, "seed": seed, "steps": steps},
                      tolerance=1e-6)
    rng = np.random.default_rng(seed)
    if densities is None:
        densities = [np.ones(T.n)] + density_samples(T, rng, samples)[T.n:] + [smoothed_dirac(T, 0, 0.1)]
    ones = np.ones(T.n)

    def one(rho):
        W = w_distance(T, rho, ones, steps=steps).certified_upper
        return (2.0 / lam) * entropy(T, rho) - W * W

    for rho, s in zip(densities, pmap(one, densities)):
        rep.record(s, {"rho": rho})
    return rep.finalize()


def l1_poincare_check(T: MarkovTriple, kappa: float, samples: int = 100, seed: int = 0,
                      potentials=None) -> CheckReport:
    """``pi|psi - pi psi| <= (4 / c) sum |grad psi| Q pi`` with ``c`` the Buser constant."""
    lam = spectral_gap(T)
    c = buser_constant(kappa, lam, T.q_star)
    rep = CheckReport("l1_poincare", {"kappa": kappa, "samples": samples, "seed": seed, "c": c},
                      tolerance=1e-10)
    rng = np.random.default_rng(seed)
    if potentials is None:
        potentials = [np.zeros(T.n)] + [random_potential(T, rng) for _ in range(samples)]
        potentials += [np.eye(T.n)[x] for x in range(T.n)]
    for psi in potentials:
        rep.record(l1_poincare_slack(T, c, psi), {"psi": np.asarray(psi, float)})
    return rep.finalize()


def l1_poincare_slack(T: MarkovTriple, c: float, psi) -> float:
    psi = np.asarray(psi, float)
    lhs = float(np.abs(psi - psi @ T.pi) @ T.pi)
    grad = np.abs(psi[None, :] - psi[:, None]) * T.rates * T.pi[:, None]
    return 4.0 / c * float(grad.sum()) - lhs


@dataclass
class InequalityReport:
    lambda1: float
    cheeger: float
    mlsi_estimate: float
    diameter_upper: float
    q_star: float
    pi_star: float
    tau_mix: dict
    composed_pi_constant: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "cheeger": self.cheeger,
            "mlsi_estimate": self.mlsi_estimate,
            "diameter_upper": self.diameter_upper,
            "q_star": self.q_star,
            "pi_star": self.pi_star,
            "tau_mix": {str(k): v for k, v in self.tau_mix.items()},
            "composed_pi_constant": self.composed_pi_constant,
            "notes": list(self.notes),
        }


def inequality_report(T: MarkovTriple, kappa: float = 0.0, eps_list=(0.25, 0.1, 0.01),
                      mlsi_cfg: MLSIConfig | None = None) -> InequalityReport:
    """All constants for one chain; ``kappa`` is the curvature bound used for the composed constant."""
    from .metric import diameter_upper

    notes = []
    D = diameter_upper(T)
    mode = "exact" if T.n <= EXACT_CUT_LIMIT else "anneal"
    if mode == "anneal":
        notes.append("cheeger: annealing upper bound (state space too large for enumeration)")
    h = cheeger(T, mode)
    composed = composed_pi_details(max(-kappa, 0.0), D)
    if not composed["feasible"]:
        notes.append("composed Poincaré constant: admissibility condition fails")
    return InequalityReport(
        lambda1=spectral_gap(T),
        cheeger=h,
        mlsi_estimate=mlsi_estimate(T, mlsi_cfg),
        diameter_upper=D,
        q_star=T.q_star,
        pi_star=T.pi_star,
        tau_mix={eps: mixing_time_exact(T, eps) for eps in eps_list},
        composed_pi_constant=composed["lambda"],
        notes=notes,
    )


__all__ = [
    "spectral_gap",
    "cheeger",
    "cheeger_cut",
    "perimeter",
    "buser_constant",
    "MLSIConfig",
    "mlsi_estimate",
    "ConcentrationProfile",
    "concentration_profile",
    "fit_exponential",
    "fit_gaussian",
    "composed_pi_constant",
    "composed_pi_details",
    "tv_distance",
    "mixing_time_exact",
    "mixing_time_bound",
    "pi_star_bound",
    "talagrand_check",
    "l1_poincare_check",
    "l1_poincare_slack",
    "InequalityReport",
    "inequality_report",
]
