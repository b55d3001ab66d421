"""Discrete W^{1,2}: Dirichlet energy, gradient modulus and m-classes."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ._linalg import solve_spd
from .space import Space

TOL = 1e-12


def dirichlet_energy(space: Space, f) -> float:
    """``sum over edges of w (f(x) - f(y))**2``."""
    f = np.asarray(f, dtype=float)
    d = f[space.edges[:, 0]] - f[space.edges[:, 1]]
    return float(np.dot(space.weights, d * d))


def vertex_sums(space: Space, dart_values: np.ndarray) -> np.ndarray:
    """Sum dart values over darts leaving each vertex.

    Values are added in sorted order within each vertex, so the result does
    not depend on how edges are numbered or oriented.
    """
    tail = space.dart_tail
    order = np.lexsort((dart_values, tail))
    counts = np.bincount(tail, minlength=space.n)
    out = np.zeros(space.n)
    if order.size:
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        has = counts > 0
        out[has] = np.add.reduceat(dart_values[order], starts[has])
    return out


def gradient_modulus(space: Space, f) -> np.ndarray:
    """``|Df|(x) = sqrt(sum_{y ~ x} w(x,y) (f(y) - f(x))**2)``.

    Each edge is counted at both endpoints, so ``sum |Df|**2 = 2 E(f)``.
    """
    f = np.asarray(f, dtype=float)
    # same floating point steps as the norm of the gradient dart field
    d = np.sqrt(space.dart_weight) * (f[space.dart_head] - f[space.dart_tail])
    return np.sqrt(vertex_sums(space, d ** 2))


def w12_norm(space: Space, f) -> float:
    """Squared Sobolev norm ``sum m f**2 + E(f)``."""
    f = np.asarray(f, dtype=float)
    return float(np.dot(space.mass, f * f)) + dirichlet_energy(space, f)


class MClass:
    """A vertex function up to changes on massless vertices.

    Values on massless vertices are stored as NaN.
    """

    __slots__ = ("space", "values")

    def __init__(self, space: Space, values):
        vals = np.array(values, dtype=float)
        if vals.shape != (space.n,):
            raise ValueError(f"expected {space.n} values, got shape {vals.shape}")
        vals[space.m_null] = np.nan
        if np.isnan(vals[~space.m_null]).any():
            raise ValueError("an m-class must be defined at every vertex of positive mass")
        self.space = space
        self.values = vals

    @property
    def support(self) -> np.ndarray:
        return ~self.space.m_null

    def _other(self, other) -> np.ndarray:
        if isinstance(other, MClass):
            if other.space is not self.space:
                raise ValueError("m-classes over different spaces")
            return other.values
        return np.asarray(other, dtype=float)

    def __add__(self, other):
        return MClass(self.space, np.nan_to_num(self.values) + np.nan_to_num(self._other(other)))

    def __sub__(self, other):
        return MClass(self.space, np.nan_to_num(self.values) - np.nan_to_num(self._other(other)))

    def __mul__(self, other):
        return MClass(self.space, np.nan_to_num(self.values) * np.nan_to_num(self._other(other)))

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return MClass(self.space, -np.nan_to_num(self.values))

    def __abs__(self):
        return MClass(self.space, np.abs(np.nan_to_num(self.values)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MClass) or other.space is not self.space:
            return NotImplemented
        s = self.support
        return bool(np.array_equal(self.values[s], other.values[s]))

    def allclose(self, other: "MClass", atol: float = TOL) -> bool:
        s = self.support
        return bool(np.allclose(self.values[s], other.values[s], rtol=0, atol=atol))

    __hash__ = None

    def __repr__(self) -> str:
        shown = ", ".join("·" if np.isnan(v) else f"{v:g}" for v in self.values[:8])
        more = ", ..." if self.space.n > 8 else ""
        return f"MClass([{shown}{more}])"


class ClassNorm(NamedTuple):
    value: float
    canonical: np.ndarray


def _tethered_null(space: Space) -> tuple[np.ndarray, np.ndarray]:
    null = space.m_null
    return null & ~space.cap_null, null & space.cap_null


def harmonic_extension(space: Space, values) -> np.ndarray:
    """Fill massless vertices by minimising the energy with the rest fixed.

    Massless vertices whose component has positive mass solve ``(L f)(x) = 0``;
    vertices of entirely massless components get 0.
    """
    f = np.nan_to_num(np.array(values, dtype=float))
    free, dead = _tethered_null(space)
    f[dead] = 0.0
    if free.any():
        L = space.laplacian
        fixed = ~free
        A = L[free][:, free]
        b = -(L[free][:, fixed] @ f[fixed])
        f[free] = solve_spd(A, b)
    return f


def w12_norm_class(space: Space, c) -> ClassNorm:
    """Infimum of the squared norm over all representatives of an m-class.

    Returns the value and the minimising (canonical) representative.
    """
    vals = c.values if isinstance(c, MClass) else MClass(space, c).values
    canonical = harmonic_extension(space, vals)
    return ClassNorm(w12_norm(space, canonical), canonical)


def is_canonical(space: Space, f, atol: float = 1e-10) -> bool:
    """Whether ``f`` is harmonic at massless vertices (0 on massless components)."""
    f = np.asarray(f, dtype=float)
    return bool(np.allclose(harmonic_extension(space, np.where(space.m_null, np.nan, f)), f,
                            rtol=0, atol=atol))


class Lattice(NamedTuple):
    min: np.ndarray
    max: np.ndarray
    lhs: float
    rhs: float
    contraction_holds: bool


def lattice_min_max(space: Space, f, g, tol: float = TOL) -> Lattice:
    """Pointwise ``f ∧ g`` and ``f ∨ g`` with the normal-contraction check.

    ``‖f∨g‖² + ‖f∧g‖² <= ‖f‖² + ‖g‖²``; the discrete gradient is not local,
    so equality generally fails.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    lo, hi = np.minimum(f, g), np.maximum(f, g)
    lhs = w12_norm(space, hi) + w12_norm(space, lo)
    rhs = w12_norm(space, f) + w12_norm(space, g)
    return Lattice(lo, hi, lhs, rhs, lhs <= rhs + tol * max(1.0, rhs))
