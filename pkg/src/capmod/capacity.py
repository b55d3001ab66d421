"""Variational 2-capacity: equilibrium potentials and an independent oracle."""
from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from ._linalg import DENSE_LIMIT, solve_spd
from .outer_measure import OuterMeasure
from .sobolev import w12_norm
from .space import Space, SpaceError, bits_to_mask

KKT_TOL = 1e-9
LINEAR = "linear_active_set"
ITERATIVE = "iterative_qp"


@dataclass(frozen=True)
class CapacityResult:
    value: float
    potential: np.ndarray
    kkt_multipliers: dict[int, float]
    solver: str

    @property
    def kkt_ok(self) -> bool:
        return all(lam >= -KKT_TOL for lam in self.kkt_multipliers.values())


def _massless_parts(space: Space, E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of massless components missing ``E`` (potential 0) and
    meeting ``E`` (potential 1 at no cost)."""
    labels = space.component_labels
    hit = np.zeros(labels.max() + 1 if labels.size else 0, dtype=bool)
    hit[labels[E]] = True
    return space.cap_null & ~hit[labels], space.cap_null & hit[labels]


def _matrix(space: Space):
    return space.dense_energy_matrix if space.n <= DENSE_LIMIT else space.energy_matrix


def _solve_with_active(space: Space, active: np.ndarray, dead: np.ndarray,
                       lit: np.ndarray) -> np.ndarray:
    A = _matrix(space)
    f = np.zeros(space.n)
    f[active | lit] = 1.0
    free = ~active & ~dead & ~lit
    if free.any():
        rhs = -(A[free][:, active] @ f[active])  # lit vertices never touch free ones
        f[free] = solve_spd(A[free][:, free], rhs)
    return f


def _multipliers(space: Space, f: np.ndarray, E: np.ndarray) -> np.ndarray:
    return (_matrix(space) @ f)[E]


def _pdas(space: Space, E: np.ndarray, dead: np.ndarray, lit: np.ndarray,
          max_iter: int = 200) -> np.ndarray:
    """Primal-dual active set iteration for ``min f'Af`` s.t. ``f >= 1`` on ``E``."""
    active = E.copy()
    A = _matrix(space)
    for _ in range(max_iter):
        f = _solve_with_active(space, active, dead, lit)
        lam = A @ f
        new = E & ((active & (lam >= -KKT_TOL)) | (~active & (f < 1.0 - KKT_TOL)))
        if np.array_equal(new, active):
            return f
        active = new
    raise RuntimeError("active set iteration did not settle")


def capacity(space: Space, E, solver: str = "auto") -> CapacityResult:
    """Capacity of the vertex set ``E``.

    Minimises ``sum m f**2 + E(f)`` over ``f >= 1`` on ``E``. The active set
    is guessed as ``E`` itself, which the maximum principle makes correct; the
    guess is confirmed through the multipliers ``((M + L) f)|_E``.

    Parameters
    ----------
    space : Space
    E
        Vertex ids, indices, boolean mask or bitmask.
    solver : {"auto", "iterative"}
        ``"iterative"`` skips the direct guess and runs the active-set loop.

    Examples
    --------
    >>> from capmod.space import build_space
    >>> k2 = build_space({"a": 1, "b": 1}, [("a", "b", 1.0)])
    >>> capacity(k2, ["a"]).value
    1.5
    """
    if solver not in ("auto", "iterative"):
        raise ValueError(f"unknown solver {solver!r}")
    E = space.mask(E)
    if not E.any():
        return CapacityResult(0.0, np.zeros(space.n), {}, LINEAR)
    dead, lit = _massless_parts(space, E)
    label = LINEAR
    f = None
    if solver == "auto":
        f = _solve_with_active(space, E, dead, lit)
        lam = _multipliers(space, f, E)
        scale = max(1.0, float(np.abs(lam).max()))
        if lam.min() < -KKT_TOL * scale or f.min() < -KKT_TOL or f.max() > 1 + KKT_TOL:
            f = None
    if f is None:
        f = _pdas(space, E, dead, lit)
        label = ITERATIVE
    lam = _multipliers(space, f, E)
    idx = np.flatnonzero(E)
    return CapacityResult(w12_norm(space, f), f, dict(zip(idx.tolist(), lam.tolist())), label)


# -- oracle -------------------------------------------------------------------

BRUTE_LIMIT = 24


def _objective(space: Space, f: np.ndarray) -> tuple[float, np.ndarray]:
    u, v = space.edges[:, 0], space.edges[:, 1]
    d = f[u] - f[v]
    val = float(np.dot(space.mass, f * f) + np.dot(space.weights, d * d))
    g = 2.0 * space.mass * f
    wd = 2.0 * space.weights * d
    np.add.at(g, u, wd)
    np.add.at(g, v, -wd)
    return val, g


def _project(f: np.ndarray, E: np.ndarray) -> np.ndarray:
    out = f.copy()
    out[E] = np.maximum(out[E], 1.0)
    return out


def _pgd(space: Space, E: np.ndarray, f: np.ndarray, tol: float, max_iter: int) -> float:
    f = _project(f, E)
    val, g = _objective(space, f)
    step = 1e-2
    for _ in range(max_iter):
        pg = f - _project(f - g, E)
        if np.linalg.norm(pg) < tol:
            return val
        t = step
        # a few ulps of slack, otherwise the test stalls once val is exact
        noise = 8 * np.finfo(float).eps * max(1.0, abs(val))
        while True:
            trial = _project(f - t * g, E)
            tv, tg = _objective(space, trial)
            if tv <= val + 1e-4 * float(np.dot(g, trial - f)) + noise or t < 1e-16:
                break
            t *= 0.5
        s, y = trial - f, tg - g
        sy = float(np.dot(s, y))
        step = float(np.dot(s, s)) / sy if sy > 1e-300 else 1.0
        f, val, g = trial, tv, tg
    raise RuntimeError(f"projected gradient budget of {max_iter} iterations exhausted")


def brute_force_capacity(space: Space, E, starts: int = 10, seed: int = 0,
                         tol: float = 1e-10, max_iter: int = 200_000) -> float:
    """Capacity by projected gradient descent, independent of :func:`capacity`.

    Barzilai-Borwein trial steps with Armijo backtracking, from ``starts``
    random points plus ``chi_E``; the best value is returned.
    """
    if space.n > BRUTE_LIMIT:
        raise ValueError(f"brute force is limited to {BRUTE_LIMIT} vertices, got {space.n}")
    E = space.mask(E)
    if not E.any():
        return 0.0
    rng = np.random.default_rng(seed)
    inits = [E.astype(float)] + [rng.uniform(0.0, 2.0, space.n) for _ in range(starts)]
    return min(_pgd(space, E, f0, tol, max_iter) for f0 in inits)


# -- outer measure adapter ----------------------------------------------------

_ADAPTERS: "weakref.WeakKeyDictionary[Space, OuterMeasure]" = weakref.WeakKeyDictionary()


def capacity_outer_measure(space: Space) -> OuterMeasure:
    """``Cap`` as a cached :class:`OuterMeasure`, one per space."""
    mu = _ADAPTERS.get(space)
    if mu is None:
        n = space.n
        mu = OuterMeasure(n, lambda bits: capacity(space, bits_to_mask(bits, n)).value, "capacity")
        _ADAPTERS[space] = mu
    return mu


def cap(space: Space, E) -> float:
    """Cached capacity value of ``E``."""
    return capacity_outer_measure(space)(space.mask(E))


@dataclass(frozen=True)
class ChainCheck:
    values: list[float]
    nondecreasing: bool
    union_value: float
    union_matches_last: bool

    @property
    def passed(self) -> bool:
        return self.nondecreasing and self.union_matches_last


def increasing_limit_check(space: Space, chain, tol: float = KKT_TOL) -> ChainCheck:
    """Capacity along a nested chain; the union is realised by the last set."""
    masks = [space.mask(E) for E in chain]
    if not masks:
        raise SpaceError("empty chain")
    for a, b in zip(masks, masks[1:]):
        if (a & ~b).any():
            raise SpaceError("chain is not nested")
    values = [cap(space, E) for E in masks]
    union = np.logical_or.reduce(masks)
    uv = cap(space, union)
    mono = all(b >= a - tol for a, b in zip(values, values[1:]))
    return ChainCheck(values, mono, uv, abs(uv - values[-1]) <= tol * max(1.0, uv))
