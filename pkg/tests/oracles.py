"""Independent reference computations the tests compare against."""

import itertools
import math

import numpy as np

from riskfl.model import ModelParams, loss


def fd_gradient(params: ModelParams, x, y, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of the mean cross-entropy."""
    g = np.zeros_like(params.w)
    for i in range(len(g)):
        up = params.w.copy()
        dn = params.w.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (loss(ModelParams(up, params.layout), x, y) - loss(ModelParams(dn, params.layout), x, y)) / (2 * h)
    return g


def max_rel_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def cvar_nu_grid(samples, alpha: float, points: int = 100_000) -> float:
    """sup over nu of nu - E[(nu - X)^+] / alpha, by brute force.

    The objective is concave and piecewise linear with kinks at the samples,
    so the grid is augmented with the sample values themselves.
    """
    x = np.asarray(samples, dtype=np.float64)
    grid = np.concatenate([np.linspace(x.min() - 1.0, x.max() + 1.0, points), x])
    best = -math.inf
    for chunk in np.array_split(grid, 50):
        vals = chunk - np.maximum(chunk[:, None] - x[None, :], 0.0).mean(axis=1) / alpha
        best = max(best, float(vals.max()))
    return best


def shapley_by_permutations(m: int, value) -> np.ndarray:
    """Average marginal contribution over all m! orderings; ``value`` takes a frozenset."""
    phi = np.zeros(m)
    perms = list(itertools.permutations(range(m)))
    for perm in perms:
        seen: set[int] = set()
        for k in perm:
            before = value(frozenset(seen))
            seen.add(k)
            phi[k] += value(frozenset(seen)) - before
    return phi / len(perms)


def lower_tail_mean(samples, alpha: float) -> float:
    """Mean of the worst alpha fraction, splitting the boundary atom by hand."""
    xs = sorted(float(s) for s in samples)
    mass = alpha * len(xs)
    total, taken = 0.0, 0.0
    for v in xs:
        take = min(1.0, mass - taken)
        if take <= 0:
            break
        total += take * v
        taken += take
    return total / mass


def pairwise_game(m: int, rng) -> np.ndarray:
    """Value table of a random game with singleton and pairwise terms, rescaled into [0, 1]."""
    a = rng.uniform(0.0, 1.0, m)
    b = rng.uniform(-0.5, 0.5, (m, m))
    table = np.empty(1 << m)
    for mask in range(1 << m):
        members = [k for k in range(m) if mask >> k & 1]
        table[mask] = sum(a[k] for k in members) + sum(b[j, k] for j in members for k in members if j < k)
    return (table - table.min()) / (table.max() - table.min())
