"""Seeded random instances for property suites."""
from __future__ import annotations

import itertools

import numpy as np

from .outer_measure import OuterMeasure, from_table
from .space import Space, build_space


def random_space(rng: np.random.Generator, n: int, mass_range=(0.0, 2.0), weight_range=(0.1, 5.0),
                 extra_edges: float = 0.3, null_fraction: float = 0.0,
                 connected: bool = True) -> Space:
    """Random weighted graph on ``n`` vertices.

    A random spanning tree (when ``connected``) plus each remaining pair
    with probability ``extra_edges``. A ``null_fraction`` of the vertices
    get mass 0.
    """
    ids = [f"v{i}" for i in range(n)]
    mass = rng.uniform(*mass_range, size=n)
    if null_fraction:
        mass[rng.random(n) < null_fraction] = 0.0
    pairs = set()
    if connected:
        order = rng.permutation(n)
        for k in range(1, n):
            a, b = int(order[k]), int(order[rng.integers(k)])
            pairs.add((min(a, b), max(a, b)))
    for a, b in itertools.combinations(range(n), 2):
        if (a, b) not in pairs and rng.random() < extra_edges:
            pairs.add((a, b))
    edges = [(ids[a], ids[b], float(rng.uniform(*weight_range))) for a, b in sorted(pairs)]
    return build_space(list(zip(ids, mass.tolist())), edges)


def random_exhaustion_space(rng: np.random.Generator, n: int, **kw) -> Space:
    """Like :func:`random_space` with a random nested exhaustion."""
    base = random_space(rng, n, **kw)
    order = rng.permutation(n)
    cuts = sorted(set(rng.integers(1, n, size=2).tolist())) + [n]
    exh = [[base.ids[i] for i in order[:c]] for c in cuts]
    edges = [(base.ids[u], base.ids[v], float(w)) for (u, v), w in zip(base.edges, base.weights)]
    return build_space(list(zip(base.ids, base.mass.tolist())), edges, exh)


def random_subset(rng: np.random.Generator, n: int, p: float = 0.5) -> np.ndarray:
    return rng.random(n) < p


def random_monotone(rng: np.random.Generator, n: int, top: int = 8, denom: int = 4) -> OuterMeasure:
    """Monotone set function with values in ``{0, ..., top} / denom``.

    Raw random values are closed upward by taking the running maximum over
    subsets, which keeps ``mu(empty) = 0``.
    """
    size = 1 << n
    raw = rng.integers(0, top + 1, size=size)
    raw[0] = 0
    vals = raw.copy()
    for b in range(size):
        for i in range(n):
            if b >> i & 1:
                vals[b] = max(vals[b], vals[b ^ (1 << i)])
    return from_table((vals / denom).tolist(), n)


def random_budget_additive(rng: np.random.Generator, n: int, top: int = 8,
                           denom: int = 4) -> OuterMeasure:
    """``min(B, sum_{i in S} a_i)`` on the same value grid; always submodular."""
    a = rng.integers(0, top + 1, size=n)
    B = int(rng.integers(1, top + 1))
    vals = [min(B, int(sum(a[i] for i in range(n) if b >> i & 1))) / denom for b in range(1 << n)]
    return from_table(vals, n)


def random_outer(rng: np.random.Generator, n: int, top: int = 8, denom: int = 4) -> OuterMeasure:
    """Monotone and subadditive, usually not submodular.

    The pointwise maximum of two budget-additive functions.
    """
    a = random_budget_additive(rng, n, top, denom).all_values()
    b = random_budget_additive(rng, n, top, denom).all_values()
    return from_table(np.maximum(a, b).tolist(), n)
