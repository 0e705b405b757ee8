"""Sampled verification of the consequences of an entropic Ricci bound.

Every check draws its inputs from a generator seeded by ``(seed,
check_id)``, evaluates ``rhs - lhs`` through a slack function from
``SLACKS`` and stores the worst trial in a :class:`CheckReport`, so
:func:`replay` can recompute it.

Where a bound on ``W`` or on the diameter enters a check, the
substitution direction is stated in the check's docstring.
"""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from ._util import density_samples, pmap, random_density, random_potential, smoothed_dirac
from .chain import (
    MarkovTriple,
    dirac,
    entropy,
    entropy_production,
    gamma,
    heat_semigroup,
    semigroup_matrix,
    spectral_gap,
    variance,
)
from .curvature import CurvatureConfig, CurvatureEstimate, estimate_ricci, verify_ricci
from .errors import NonPositiveKappa, StateSpaceTooLarge
from .inequalities import (
    EXACT_CUT_LIMIT,
    buser_constant,
    cheeger,
    concentration_profile,
    mixing_time_exact,
)
from .metric import action, diameter_upper, lift_metric, w2_upper, w_lower_bound
from .report import SKIP, CheckReport
from .transport import w_distance

log = logging.getLogger(__name__)

NONNEGATIVE_TOL = 1e-6
CONCENTRATION_MAX_STATES = 12


@dataclass
class VerifierConfig:
    """Sampling sizes and grids shared by all checks.

    ``kappa`` overrides the curvature bound used by :func:`run_all_checks`;
    ``checks`` restricts the suite to the named check ids.
    """

    samples: int = 20
    seed: int = 0
    t_factors: tuple = (0.05, 0.1, 0.5, 1.0, 2.0)
    delta_factors: tuple = (0.05, 0.1, 0.5, 1.0, 5.0)
    a_grid: tuple = (1.5, 2.0, 4.0)
    eps_list: tuple = (0.25, 0.1, 0.01)
    pairs: int = 20
    steps: int = 16
    ricci_samples: int = 200
    kappa_margin: float = 1e-6
    kappa: float | None = None
    checks: tuple | None = None
    curvature: CurvatureConfig = field(default_factory=CurvatureConfig)


def _rng(seed: int, check_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(check_id.encode())])


def _t_grid(T: MarkovTriple, cfg: VerifierConfig) -> list[float]:
    gap = spectral_gap(T)
    return [0.0] + [f / gap for f in cfg.t_factors]


def decay_coefficient(kappa: float, t: float) -> float:
    """``(exp(2 kappa t) - 1) / kappa`` with the limit ``2t`` at ``kappa = 0``."""
    x = 2.0 * kappa * t
    if x == 0:
        return 2.0 * t
    if x > 700:
        return math.inf
    return 2.0 * t * math.expm1(x) / x


def _semigroup_action(T, t):
    return semigroup_matrix(T, t) if t > 0 else np.eye(T.n)


def _scaled_tolerance(rep: CheckReport, rel: float, scale: float) -> None:
    rep.tolerance = rel * max(1.0, scale)


def _gamma_mean(T, f, g=None) -> float:
    return float(gamma(T, f, g) @ T.pi)


# --- slack functions -----------------------------------------------------------------
# Each takes (T, params, case) and returns rhs - lhs.


def _slack_gradient_estimate(T, p, c):
    rho, psi, t = np.asarray(c["rho"], float), np.asarray(c["psi"], float), c["t"]
    P = _semigroup_action(T, t)
    lhs = action(T, rho, P @ psi)
    rhs = math.exp(-2 * p["kappa"] * t) * action(T, P @ rho, psi)
    return rhs - lhs


def _slack_pointwise(T, p, c):
    psi, t, x, y = np.asarray(c["psi"], float), c["t"], c["x"], c["y"]
    P = _semigroup_action(T, t)
    Pp = P @ psi
    lhs = 0.5 * (Pp[y] - Pp[x]) ** 2 * T.rates[x, y] * T.pi[x]
    PG = P @ gamma(T, psi)
    rhs = math.exp(-2 * p["kappa"] * t) * (PG[x] * T.pi[x] + PG[y] * T.pi[y])
    return rhs - lhs


def _slack_reverse_poincare(T, p, c):
    psi, t = np.asarray(c["psi"], float), c["t"]
    P = _semigroup_action(T, t)
    Pp = P @ psi
    coef = decay_coefficient(p["kappa"], t)
    if c["form"] == "sup":
        mask = T.rates > 0
        grad2 = ((Pp[None, :] - Pp[:, None]) ** 2)[mask].max()
        return 2.0 * np.max(np.abs(psi)) ** 2 / T.q_star - coef * grad2
    rho = np.asarray(c["rho"], float)
    lhs = float(psi**2 @ (T.pi * (P @ rho)) - (Pp**2) @ (T.pi * rho))
    return lhs - coef * action(T, rho, Pp)


def _slack_l1_smoothing(T, p, c):
    psi, t = np.asarray(c["psi"], float), c["t"]
    lhs = float(np.abs(psi - _semigroup_action(T, t) @ psi) @ T.pi)
    grad = np.abs(psi[None, :] - psi[:, None]) * T.rates * T.pi[:, None]
    return 2.0 * math.sqrt(t) / math.sqrt(T.q_star) * float(grad.sum()) - lhs


def _lipschitz_factor(kappa, t):
    return 1.0 / math.sqrt(decay_coefficient(kappa, t))


def _slack_gamma_decay(T, p, c):
    f, t = np.asarray(c["f"], float), c["t"]
    Pf = _semigroup_action(T, t) @ f
    if c["part"] == 1:
        return math.exp(-2 * p["kappa"] * t) * _gamma_mean(T, f) - _gamma_mean(T, Pf)
    x, y = c["x"], c["y"]
    rhs = np.max(np.abs(f)) * _lipschitz_factor(p["kappa"], t) * c["d"]
    return rhs - abs(Pf[x] - Pf[y])


def _slack_buser(T, p, c):
    cb = buser_constant(p["kappa"], p["lambda1"], T.q_star)
    if c["form"] == "cheeger":
        return cheeger(T) - cb
    s = np.asarray(c["subset"], bool)
    src, dst = T.edges
    perim = float((s[src] != s[dst]) @ T.edge_flux)
    m = float(s @ T.pi)
    return perim - cb * m * (1.0 - m)


def _slack_hwi(T, p, c):
    r0, r1, W = np.asarray(c["rho0"], float), np.asarray(c["rho1"], float), c["W"]
    I = entropy_production(T, r1)
    return W * math.sqrt(I) - 0.5 * p["kappa"] * W * W - (entropy(T, r1) - entropy(T, r0))


def _slack_liyau(T, p, c):
    return spectral_gap(T) - 1.0 / (math.e * p["D"] ** 2)


def _slack_weak_poincare(T, p, c):
    f, t, kappa = np.asarray(c["f"], float), c["t"], p["kappa"]
    first = decay_coefficient(-kappa, t) * _gamma_mean(T, f)
    sup2 = np.max(np.abs(f)) ** 2
    if c["form"] == "diameter":
        second = 0.5 * p["D"] ** 2 * sup2 / decay_coefficient(kappa, t)
    else:
        second = 2.0 * p["M"] * sup2 / (p["alpha"] ** 2 * decay_coefficient(kappa, t))
    return first + second - variance(T, f)


def _slack_nontight(T, p, c):
    f = np.asarray(c["f"], float)
    form = c["form"]
    f2 = f * f
    if form == "gamma_comparison":
        x = c["x"]
        return 0.25 * gamma(T, f2, np.log(f2))[x] - gamma(T, f)[x]
    if form == "bk1":
        g = f / math.sqrt(f2 @ T.pi)
        A = c["A"]
        lhs = float((g * g * (g * g >= A * A)) @ T.pi)
        return (A / (A - 1.0)) ** 2 * variance(T, g) - lhs
    delta, D = c["delta"], p["D"]
    fisher = _gamma_mean(T, f2, np.log(f2))
    if form == "nontight_pi":
        kneg = max(-p["kappa"], 0.0)
        rhs = fisher / (4 * delta) + math.exp(D * D * (delta + 0.5 * kneg)) * float(np.abs(f) @ T.pi) ** 2
        return rhs - float(f2 @ T.pi)
    # entropy bound
    m = float(f2 @ T.pi)
    ent = float((f2 * np.log(f2 / m)) @ T.pi)
    rhs = delta * D * D * fisher + float((f2 * (f2 > m)) @ T.pi) / (4 * delta)
    return rhs - ent


def _slack_bonnet_myers(T, p, c):
    x, y = c["x"], c["y"]
    rhs = 2.0 * math.sqrt((-math.log(T.pi[x]) - math.log(T.pi[y])) / p["kappa"])
    return rhs - c["d"]


def _slack_mixing(T, p, c):
    if c["form"] == "tau":
        eps = c["eps"]
        bound = p["D"] ** 2 / 4 + math.log(1 / eps) / p["lambda_check"]
        return bound - mixing_time_exact(T, eps)
    rho, t = np.asarray(c["rho"], float), c["t"]
    return p["D"] ** 2 / (2 * t) - entropy(T, heat_semigroup(T, t, rho))


SLACKS = {
    "gradient_estimate": _slack_gradient_estimate,
    "pointwise_gradient": _slack_pointwise,
    "reverse_poincare": _slack_reverse_poincare,
    "l1_smoothing": _slack_l1_smoothing,
    "gamma_decay": _slack_gamma_decay,
    "buser": _slack_buser,
    "hwi": _slack_hwi,
    "liyau": _slack_liyau,
    "weak_poincare": _slack_weak_poincare,
    "nontight": _slack_nontight,
    "bonnet_myers": _slack_bonnet_myers,
    "mixing": _slack_mixing,
}


def replay(T: MarkovTriple, report: CheckReport) -> float:
    """Recompute the slack of ``report.worst_case``."""
    if report.check_id == "ricci":
        from .curvature import curvature_at

        return curvature_at(T, np.asarray(report.worst_case["rho"], float))[0] - report.params["kappa"]
    return SLACKS[report.check_id](T, report.params, report.worst_case)


def _run(rep: CheckReport, T, cases) -> CheckReport:
    fn = SLACKS[rep.check_id]
    slacks = pmap(lambda c: fn(T, rep.params, c), cases)
    for c, s in zip(cases, slacks):
        rep.record(s, c)
    return rep


def _densities(T, rng, count):
    return [np.ones(T.n)] + density_samples(T, rng, count)


def _potentials(T, rng, count):
    return [np.zeros(T.n)] + [random_potential(T, rng) for _ in range(count)]


# --- checks ------------------------------------------------------------------------------


def check_gradient_estimate(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """``|grad P_t psi|^2_rho <= exp(-2 kappa t) |grad psi|^2_{P_t rho}`` on sampled triples."""
    cfg = cfg or VerifierConfig()
    rng = _rng(cfg.seed, "gradient_estimate")
    ts = _t_grid(T, cfg)
    rep = CheckReport("gradient_estimate", {"kappa": kappa, "t_grid": ts, "seed": cfg.seed})
    dens = _densities(T, rng, cfg.samples)
    pots = [random_potential(T, rng) for _ in dens]
    cases = [{"rho": r, "psi": s, "t": t} for r, s in zip(dens, pots) for t in ts]
    _run(rep, T, cases)
    scale = max(action(T, c["rho"], c["psi"]) for c in cases)
    _scaled_tolerance(rep, 1e-9, scale)
    return rep.finalize()


def check_pointwise_gradient(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """Edgewise form of the gradient estimate with the heat-kernel averaged carré du champ."""
    cfg = cfg or VerifierConfig()
    rng = _rng(cfg.seed, "pointwise_gradient")
    ts = _t_grid(T, cfg)
    rep = CheckReport("pointwise_gradient", {"kappa": kappa, "t_grid": ts, "seed": cfg.seed})
    src, dst = np.nonzero(T.rates)
    cases = [
        {"psi": psi, "t": t, "x": int(x), "y": int(y)}
        for psi in _potentials(T, rng, cfg.samples)
        for t in ts
        for x, y in zip(src, dst)
    ]
    _run(rep, T, cases)
    _scaled_tolerance(rep, 1e-9, max(float(np.max(gamma(T, c["psi"]))) for c in cases))
    return rep.finalize()


def check_reverse_poincare(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """Reverse Poincaré inequality and its edgewise sup-norm consequence.

    The sup-norm form is checked as
    ``coef * max |grad P_t psi|^2 <= 2 ||psi||^2 / Q*``; the factor 2 comes
    from ``theta(Q(x,y), Q(y,x)) / 2`` in the two-point density choice.
    """
    cfg = cfg or VerifierConfig()
    rng = _rng(cfg.seed, "reverse_poincare")
    ts = _t_grid(T, cfg)
    rep = CheckReport("reverse_poincare", {"kappa": kappa, "t_grid": ts, "seed": cfg.seed})
    dens = _densities(T, rng, cfg.samples)
    pots = [random_potential(T, rng) for _ in dens]
    cases = [{"form": "integral", "rho": r, "psi": s, "t": t} for r, s in zip(dens, pots) for t in ts]
    cases += [{"form": "sup", "psi": s, "t": t} for s in pots for t in ts]
    _run(rep, T, cases)
    _scaled_tolerance(rep, 1e-9, max(float(np.max(c["psi"] ** 2)) for c in cases))
    return rep.finalize()


def check_l1_smoothing(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """``||psi - P_t psi||_1 <= 2 sqrt(t / Q*) sum |grad psi| Q pi`` for ``t <= 1/(2|kappa|)``."""
    cfg = cfg or VerifierConfig()
    rng = _rng(cfg.seed, "l1_smoothing")
    ts = [1e-4] + _t_grid(T, cfg)
    if kappa < 0:
        ts = [t for t in ts if t <= 1.0 / (2 * abs(kappa))]
    rep = CheckReport("l1_smoothing", {"kappa": kappa, "t_grid": ts, "seed": cfg.seed}, tolerance=1e-10)
    pots = _potentials(T, rng, cfg.samples)
    pots += [np.eye(T.n)[x] for x in range(T.n)]
    cases = [{"psi": s, "t": t} for s in pots for t in ts]
    return _run(rep, T, cases).finalize()


def check_gamma_decay(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """Decay of ``pi[Gamma(P_t f)]`` and the Lipschitz bound for ``P_t f``.

    The Lipschitz part puts an upper bound of ``d_W`` on the right-hand
    side, which can only hide violations.  Pairs that fail with the
    lifted-path metric are recomputed with the transport solver; pairs that
    pass with the dual lower bound as well are counted as certified.
    """
    cfg = cfg or VerifierConfig()
    rng = _rng(cfg.seed, "gamma_decay")
    ts = _t_grid(T, cfg)[1:]
    rep = CheckReport("gamma_decay", {"kappa": kappa, "t_grid": ts, "seed": cfg.seed})
    fs = _potentials(T, rng, cfg.samples)
    cases = [{"part": 1, "f": f, "t": t} for f in fs for t in [0.0] + ts]
    lifted = lift_metric(T)
    pairs = [(x, y) for x in range(T.n) for y in range(x + 1, T.n)]
    lower = {(x, y): w_lower_bound(T, dirac(T, x), dirac(T, y)) for x, y in pairs}
    fs2 = fs[1 : 1 + max(1, cfg.samples // 4)]
    cases += [
        {"part": 2, "f": f, "t": t, "x": x, "y": y, "d": float(lifted[x, y]), "d_lower": lower[x, y]}
        for f in fs2 for t in ts for x, y in pairs
    ]
    fn = SLACKS["gamma_decay"]
    refined: dict = {}
    certified = 0
    for c in cases:
        s = fn(T, rep.params, c)
        if c["part"] == 2 and s < 0:
            key = (c["x"], c["y"])
            if key not in refined:
                refined[key] = w_distance(T, dirac(T, key[0]), dirac(T, key[1]), steps=cfg.steps)
            res = refined[key]
            c = dict(c, d=min(c["d"], res.certified_upper), d_lower=max(c["d_lower"], res.lower))
            s = fn(T, rep.params, c)
        if c["part"] == 2 and fn(T, rep.params, dict(c, d=c["d_lower"])) >= 0:
            certified += 1
        rep.record(s, c)
    rep.notes.append(f"Lipschitz part: {certified} of {len(cases) - len(fs) * (len(ts) + 1)} "
                     "trials also hold with the dual lower bound of d_W")
    _scaled_tolerance(rep, 1e-9, max(float(np.max(np.abs(f))) ** 2 for f in fs))
    return rep.finalize()


def _cut_chunks(T: MarkovTriple):
    n = T.n
    total = 1 << (n - 1)
    for lo in range(1, total, 1 << 15):
        masks = np.arange(lo, min(lo + (1 << 15), total), dtype=np.int64)
        bits = ((masks[:, None] >> np.arange(n - 1)) & 1).astype(bool)
        yield np.hstack([bits, np.zeros((len(masks), 1), dtype=bool)])


def check_buser(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """Isoperimetric bound on every cut and the resulting lower bound on ``h``.

    Needs ``kappa >= 0``.  Only exact quantities enter, no substitution.
    """
    cfg = cfg or VerifierConfig()
    lam = spectral_gap(T)
    params = {"kappa": kappa, "lambda1": lam, "seed": cfg.seed}
    if kappa < -NONNEGATIVE_TOL:
        return CheckReport.skipped("buser", "needs a non-negative curvature bound", params)
    if T.n > EXACT_CUT_LIMIT:
        raise StateSpaceTooLarge(f"cut enumeration limited to {EXACT_CUT_LIMIT} states")
    params["kappa"] = max(kappa, 0.0)
    rep = CheckReport("buser", params, tolerance=1e-9)
    rep.record(_slack_buser(T, params, {"form": "cheeger"}), {"form": "cheeger"})
    cb = buser_constant(params["kappa"], lam, T.q_star)
    src, dst = T.edges
    for bits in _cut_chunks(T):
        m = bits @ T.pi
        s = (bits[:, src] != bits[:, dst]) @ T.edge_flux - cb * m * (1 - m)
        k = int(np.argmin(s))
        case = {"form": "subset", "subset": bits[k].copy()}
        rep.record(_slack_buser(T, params, case), case)
    return rep.finalize()


def check_hwi(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """``H(rho1) - H(rho0) <= W sqrt(I(rho1)) - (kappa/2) W^2``.

    ``W`` is replaced by a transport upper bound (lifted-path coupling, or
    the solver when that fails).  For ``kappa <= 0`` the right-hand side is
    increasing in ``W`` so the substitution never creates a false failure;
    for ``kappa > 0`` a pair is only used when the bound lies in the
    increasing region ``W <= sqrt(I) / kappa``.
    """
    cfg = cfg or VerifierConfig()
    rng = _rng(cfg.seed, "hwi")
    rep = CheckReport("hwi", {"kappa": kappa, "pairs": cfg.pairs, "seed": cfg.seed})
    lifted = lift_metric(T)
    dens = _densities(T, rng, cfg.pairs)
    pairs = [(dens[0], dens[0])] + [(r, dens[0]) for r in dens[1:4]]
    pairs += [(dens[i], random_density(T, rng)) for i in range(1, len(dens))]
    fn = SLACKS["hwi"]
    skipped = 0
    scale = 1.0
    for r0, r1 in pairs:
        W = w2_upper(T, r0, r1, lifted)
        c = {"rho0": r0, "rho1": r1, "W": W}
        if fn(T, rep.params, c) < 0:
            W = min(W, w_distance(T, r0, r1, steps=cfg.steps).certified_upper)
            c["W"] = W
        I = entropy_production(T, r1)
        if kappa > 0 and W > math.sqrt(I) / kappa:
            skipped += 1
            continue
        scale = max(scale, abs(entropy(T, r0)), abs(entropy(T, r1)))
        rep.record(fn(T, rep.params, c), c)
    if skipped:
        rep.notes.append(f"{skipped} pairs outside the increasing region were not used")
    _scaled_tolerance(rep, 1e-9, scale)
    if rep.trials == 0:
        rep.status = SKIP
    return rep.finalize()


def check_liyau(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """``lambda1 >= 1 / (e D^2)`` with ``D`` replaced by the upper bound ``c max d_Q``.

    A larger ``D`` only shrinks the right-hand side.
    """
    cfg = cfg or VerifierConfig()
    D = diameter_upper(T)
    params = {"kappa": kappa, "D": D, "seed": cfg.seed}
    if kappa < -NONNEGATIVE_TOL:
        return CheckReport.skipped("liyau", "needs a non-negative curvature bound", params)
    rep = CheckReport("liyau", params, tolerance=1e-12)
    rep.record(_slack_liyau(T, params, {}), {})
    return rep.finalize()


def _exponential_fit(T: MarkovTriple, dist: np.ndarray) -> tuple[float, float]:
    """Least ``M`` with ``beta(r) <= M exp(-r / D)`` for every ``r >= 0`` (step profile)."""
    r = np.unique(np.round(dist, 12))
    prof = concentration_profile(T, dist, r)
    alpha = 1.0 / float(dist.max())
    # beta is constant on [r_k, r_{k+1}); the supremum of beta e^{alpha r} sits at the right end
    M = float(np.max(prof.beta[:-1] * np.exp(alpha * r[1:]))) if len(r) > 1 else 0.0
    return M, alpha


def check_weak_poincare(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """Variance bound from semigroup decay plus concentration or diameter.

    Both use upper bounds of ``d_W`` (``c max d_Q`` and the lifted-path
    metric), under which concentration and Lipschitz bounds stay valid.
    """
    cfg = cfg or VerifierConfig()
    rng = _rng(cfg.seed, "weak_poincare")
    ts = _t_grid(T, cfg)[1:] + [1e3]
    D = diameter_upper(T)
    params = {"kappa": kappa, "D": D, "t_grid": ts, "seed": cfg.seed}
    forms = ["diameter"]
    if T.n <= CONCENTRATION_MAX_STATES:
        M, alpha = _exponential_fit(T, lift_metric(T))
        params.update(M=M, alpha=alpha)
        forms.append("concentration")
    rep = CheckReport("weak_poincare", params)
    fs = _potentials(T, rng, cfg.samples)
    cases = [{"form": form, "f": f, "t": t} for form in forms for f in fs for t in ts]
    _run(rep, T, cases)
    rep.notes.append("exponential moments of d_W are finite here, so the moment-based variants "
                     "reduce to the diameter form")
    _scaled_tolerance(rep, 1e-9, max(variance(T, f) for f in fs))
    return rep.finalize()


def _positive_functions(T, rng, count):
    fs = [np.ones(T.n)]
    fs += [np.exp(0.5 * rng.standard_normal(T.n)) for _ in range(count)]
    fs += [1.0 + 3.0 * np.eye(T.n)[x] for x in range(T.n)]
    fs += [np.sqrt(smoothed_dirac(T, x)) for x in range(T.n)]
    return fs


def check_nontight_inequalities(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """Four auxiliary inequalities on strictly positive ``f``.

    * ``Gamma(f) <= Gamma(f^2, log f^2) / 4`` at every state;
    * ``pi[f^2] <= pi[Gamma(f^2, log f^2)] / (4 delta) + exp(D^2 (delta + k/2)) pi[|f|]^2``
      with ``k`` the size of a negative curvature bound;
    * ``Ent(f^2) <= delta D^2 pi[Gamma(f^2, log f^2)] + pi[f^2 1{f^2 > pi f^2}] / (4 delta)``
      (only for ``kappa >= 0``);
    * ``pi[f^2 1{f^2 >= A^2}] <= (A / (A - 1))^2 Var(f)`` for ``pi[f^2] = 1``.

    ``D`` is the upper bound ``c max d_Q``; every right-hand side is
    non-decreasing in ``D``.
    """
    cfg = cfg or VerifierConfig()
    rng = _rng(cfg.seed, "nontight")
    D = diameter_upper(T)
    deltas = [d / D**2 for d in cfg.delta_factors]
    params = {"kappa": kappa, "D": D, "deltas": deltas, "A": list(cfg.a_grid), "seed": cfg.seed}
    rep = CheckReport("nontight", params)
    fs = _positive_functions(T, rng, cfg.samples)
    cases = [{"form": "gamma_comparison", "f": f, "x": x} for f in fs for x in range(T.n)]
    cases += [{"form": "nontight_pi", "f": f, "delta": d} for f in fs for d in deltas]
    if kappa >= -NONNEGATIVE_TOL:
        cases += [{"form": "entropy_bound", "f": f, "delta": d} for f in fs for d in deltas]
    else:
        rep.notes.append("entropy bound skipped: needs a non-negative curvature bound")
    cases += [{"form": "bk1", "f": f, "A": A} for f in fs for A in cfg.a_grid]
    _run(rep, T, cases)
    _scaled_tolerance(rep, 1e-9, max(float(np.max(f)) ** 2 for f in fs))
    return rep.finalize()


def check_bonnet_myers(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """``d_W(x, y) <= 2 sqrt((-log pi(x) - log pi(y)) / kappa)`` for all pairs.

    ``d_W`` is replaced by an upper bound on the left, so a pass is a
    certificate.  Pairs failing with the lifted-path metric are retried with
    the transport solver.
    """
    if not kappa > 0:
        raise NonPositiveKappa(f"needs a positive curvature bound, got {kappa}")
    cfg = cfg or VerifierConfig()
    rep = CheckReport("bonnet_myers", {"kappa": kappa, "steps": cfg.steps, "seed": cfg.seed}, tolerance=1e-6)
    lifted = lift_metric(T)
    fn = SLACKS["bonnet_myers"]
    pairs = [(x, y) for x in range(T.n) for y in range(x + 1, T.n)]
    cases = [{"x": x, "y": y, "d": float(lifted[x, y])} for x, y in pairs]
    bad = [c for c in cases if fn(T, rep.params, c) < 0]

    def refine(c):
        res = w_distance(T, dirac(T, c["x"]), dirac(T, c["y"]), steps=cfg.steps)
        c["d"] = min(c["d"], res.certified_upper)

    pmap(refine, bad)
    if bad:
        rep.notes.append(f"{len(bad)} pairs needed the transport solver")
    for c in cases:
        rep.record(fn(T, rep.params, c), c)
    return rep.finalize()


def entropy_decay_rate(T: MarkovTriple, t_grid) -> float:
    """Largest ``lam`` with ``H(P_t delta_x) <= exp(-2 lam t) H(delta_x)`` on the grid, for every ``x``."""
    lam = math.inf
    for x in range(T.n):
        rho = dirac(T, x)
        H0 = entropy(T, rho)
        for t in t_grid:
            Ht = entropy(T, heat_semigroup(T, t, rho))
            if Ht <= 1e-12 * H0:
                continue
            lam = min(lam, -math.log(Ht / H0) / (2 * t))
    return lam


def check_mixing(T: MarkovTriple, kappa: float, cfg: VerifierConfig | None = None) -> CheckReport:
    """Mixing-time bound ``D^2/4 + log(1/eps) / lam`` and the entropy bound behind it.

    ``lam`` is the entropy decay rate of Dirac densities measured on a
    time grid.  The entropy bound is checked in the form
    ``H(P_t rho) <= D^2 / (2t)``; the slack of the stronger ``D^2/(4t)``
    form is recorded in the notes.  ``D`` is the upper bound ``c max d_Q``.
    """
    cfg = cfg or VerifierConfig()
    gap = spectral_gap(T)
    D = diameter_upper(T)
    grid = list(np.geomspace(0.01, 20.0, 60) / gap)
    lam = entropy_decay_rate(T, grid)
    params = {"kappa": kappa, "D": D, "lambda_check": lam, "eps": list(cfg.eps_list), "seed": cfg.seed}
    if kappa < -NONNEGATIVE_TOL:
        return CheckReport.skipped("mixing", "needs a non-negative curvature bound", params)
    rep = CheckReport("mixing", params, tolerance=1e-6)
    rng = _rng(cfg.seed, "mixing")
    for eps in cfg.eps_list:
        c = {"form": "tau", "eps": eps}
        rep.record(_slack_mixing(T, params, c), c)
    dens = [dirac(T, x) for x in range(T.n)] + [random_density(T, rng) for _ in range(cfg.samples)]
    ts = [f / gap for f in cfg.t_factors] + [D * D / 4]
    worst4 = math.inf
    for rho in dens:
        for t in ts:
            c = {"form": "evi", "rho": rho, "t": t}
            s = _slack_mixing(T, params, c)
            worst4 = min(worst4, s - D * D / (4 * t))
            rep.record(s, c)
    rep.notes.append(f"entropy bound with D^2/(4t): worst slack {worst4:.6g}")
    return rep.finalize()


# --- suite ------------------------------------------------------------------------------

CHECKS = {
    "gradient_estimate": check_gradient_estimate,
    "pointwise_gradient": check_pointwise_gradient,
    "reverse_poincare": check_reverse_poincare,
    "l1_smoothing": check_l1_smoothing,
    "gamma_decay": check_gamma_decay,
    "buser": check_buser,
    "hwi": check_hwi,
    "liyau": check_liyau,
    "weak_poincare": check_weak_poincare,
    "nontight": check_nontight_inequalities,
    "bonnet_myers": check_bonnet_myers,
    "mixing": check_mixing,
}

_NEEDS_NONNEGATIVE = {"buser", "liyau", "mixing"}


@dataclass
class SuiteResult:
    """Curvature estimate, the bound used by the checks and all reports (``ricci`` first)."""

    estimate: CurvatureEstimate | None
    kappa: float
    reports: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def __iter__(self):
        return iter(self.reports)

    def __len__(self):
        return len(self.reports)

    def by_id(self, check_id: str) -> CheckReport:
        for r in self.reports:
            if r.check_id == check_id:
                return r
        raise KeyError(check_id)


def certified_kappa(T: MarkovTriple, cfg: VerifierConfig | None = None):
    """``(estimate, ricci_report, kappa)`` with ``kappa`` the sampled certificate minus a margin."""
    cfg = cfg or VerifierConfig()
    est = estimate_ricci(T, cfg.curvature)
    if cfg.kappa is not None:
        target = cfg.kappa
    else:
        target = est.kappa
    rep = verify_ricci(T, target, samples=cfg.ricci_samples, seed=cfg.seed, extra=[est.witness_density])
    kappa = min(target, target + rep.worst_slack) - cfg.kappa_margin
    return est, rep, kappa


def run_all_checks(T: MarkovTriple, cfg: VerifierConfig | None = None) -> SuiteResult:
    """Estimate and certify a curvature bound, then run every check with it.

    Exceptions inside a check become failed reports; checks that need a
    non-negative (or positive) bound are skipped when it is not available.
    """
    cfg = cfg or VerifierConfig()
    est, ricci_rep, kappa = certified_kappa(T, cfg)
    reports = [ricci_rep]
    selected = cfg.checks or tuple(CHECKS)
    for name in selected:
        fn = CHECKS[name]
        if name in _NEEDS_NONNEGATIVE and kappa < -NONNEGATIVE_TOL:
            reports.append(CheckReport.skipped(name, "needs a non-negative curvature bound", {"kappa": kappa}))
            continue
        if name == "bonnet_myers" and kappa <= 0:
            reports.append(CheckReport.skipped(name, "needs a positive curvature bound", {"kappa": kappa}))
            continue
        try:
            reports.append(fn(T, kappa, cfg))
        except Exception as exc:  # noqa: BLE001 - reported, never raised
            log.warning("check %s raised %s", name, exc)
            reports.append(CheckReport.errored(name, exc, {"kappa": kappa}))
    return SuiteResult(est, kappa, reports)


__all__ = [
    "VerifierConfig",
    "decay_coefficient",
    "check_gradient_estimate",
    "check_pointwise_gradient",
    "check_reverse_poincare",
    "check_l1_smoothing",
    "check_gamma_decay",
    "check_buser",
    "check_hwi",
    "check_liyau",
    "check_weak_poincare",
    "check_nontight_inequalities",
    "check_bonnet_myers",
    "check_mixing",
    "entropy_decay_rate",
    "CHECKS",
    "SLACKS",
    "SuiteResult",
    "certified_kappa",
    "run_all_checks",
    "replay",
]
