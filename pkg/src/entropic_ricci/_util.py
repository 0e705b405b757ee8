"""Sampling helpers and a small deterministic thread map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .chain import MarkovTriple


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("RICCI_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items) -> list:
    """``list(map(fn, items))``, spread over ``RICCI_THREADS`` workers; order is preserved."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def smoothed_dirac(T: MarkovTriple, x: int, eps: float = 1e-2) -> np.ndarray:
    rho = np.full(T.n, eps)
    rho[x] += (1.0 - eps) / T.pi[x]
    return rho


def random_density(T: MarkovTriple, rng: np.random.Generator, alpha: float = 0.5, floor: float = 1e-4) -> np.ndarray:
    """Dirichlet(alpha) masses, floored and renormalised, as a density w.r.t. ``pi``."""
    m = rng.dirichlet(np.full(T.n, alpha))
    m = np.maximum(m, floor)
    m /= m.sum()
    return m / T.pi


def density_samples(T: MarkovTriple, rng: np.random.Generator, count: int, floor: float = 1e-4) -> list[np.ndarray]:
    """Smoothed Diracs at every state followed by ``count`` random densities."""
    out = [smoothed_dirac(T, x) for x in range(T.n)]
    out += [random_density(T, rng, floor=floor) for _ in range(count)]
    return out


def random_potential(T: MarkovTriple, rng: np.random.Generator) -> np.ndarray:
    f = rng.standard_normal(T.n)
    return f - f @ T.pi
