"""The metric space L0(Cap): Cap-classes, the distance d_Cap, convergence tests."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .capacity import cap, capacity_outer_measure
from .outer_measure import integrate
from .sobolev import MClass
from .space import Space


class CapClass:
    """A vertex function up to changes on Cap-null vertices.

    Cap-null vertices are those of entirely massless components. The stored
    representative is kept as given; equality ignores the null vertices.
    """

    __slots__ = ("space", "values")

    def __init__(self, space: Space, values):
        vals = np.array(values, dtype=float)
        if vals.shape != (space.n,):
            raise ValueError(f"expected {space.n} values, got shape {vals.shape}")
        self.space = space
        self.values = vals

    def _other(self, other) -> np.ndarray:
        if isinstance(other, CapClass):
            if other.space is not self.space:
                raise ValueError("Cap-classes over different spaces")
            return other.values
        return np.asarray(other, dtype=float)

    def __add__(self, other):
        return CapClass(self.space, self.values + self._other(other))

    def __sub__(self, other):
        return CapClass(self.space, self.values - self._other(other))

    def __rsub__(self, other):
        return CapClass(self.space, self._other(other) - self.values)

    def __mul__(self, other):
        return CapClass(self.space, self.values * self._other(other))

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return CapClass(self.space, -self.values)

    def __abs__(self):
        return CapClass(self.space, np.abs(self.values))

    def minimum(self, other) -> "CapClass":
        return CapClass(self.space, np.minimum(self.values, self._other(other)))

    def maximum(self, other) -> "CapClass":
        return CapClass(self.space, np.maximum(self.values, self._other(other)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CapClass) or other.space is not self.space:
            return NotImplemented
        live = ~self.space.cap_null
        return bool(np.array_equal(self.values[live], other.values[live]))

    __hash__ = None

    def allclose(self, other: "CapClass", atol: float = 1e-12) -> bool:
        live = ~self.space.cap_null
        return bool(np.allclose(self.values[live], self._other(other)[live], rtol=0, atol=atol))

    def __repr__(self) -> str:
        return f"CapClass({np.array2string(self.values, precision=4, threshold=8)})"


def _values(space: Space, f) -> np.ndarray:
    if isinstance(f, (CapClass, MClass)):
        if f.space is not space:
            raise ValueError("function lives on a different space")
        return np.nan_to_num(f.values)
    return space.function(f)


def _normalisers(space: Space) -> np.ndarray:
    """``c_k / (Cap(A_k) v 1)`` for every exhaustion set."""
    caps = np.array([cap(space, A) for A in space.exhaustion])
    return space.exhaustion_weights / np.maximum(caps, 1.0)


def truncated_gap(space: Space, f, g) -> np.ndarray:
    """``|f - g| ∧ 1``."""
    return np.minimum(np.abs(_values(space, f) - _values(space, g)), 1.0)


def dcap(space: Space, f, g) -> float:
    """Distance in L0(Cap).

    ``sum_k 2^-k (Cap(A_k) v 1)^-1 int_{A_k} |f - g| ∧ 1 dCap`` over the
    exhaustion, with the constant tail summed in closed form.

    Examples
    --------
    >>> from capmod.space import build_space
    >>> k2 = build_space({"a": 1, "b": 1}, [("a", "b", 1.0)])
    >>> dcap(k2, [1.0, 0.0], [0.0, 0.0])
    0.75
    """
    if isinstance(f, CapClass) and isinstance(g, CapClass) and f.space is not g.space:
        raise ValueError("Cap-classes over different spaces")
    h = truncated_gap(space, f, g)
    mu = capacity_outer_measure(space)
    norm = _normalisers(space)
    return float(sum(c * integrate(mu, h, restrict_to=A) for c, A in zip(norm, space.exhaustion)))


def pr_project(c: CapClass) -> MClass:
    """Forget values on massless vertices."""
    return MClass(c.space, c.values)


def simple_approximate(f, eps: float, space: Space | None = None) -> CapClass:
    """Floor quantisation ``sum_i i*eps*chi_{f in [i eps, (i+1) eps)}``.

    Values already on the ``eps`` grid (up to rounding) are returned as is,
    so the sup-norm error is below ``eps``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if isinstance(f, CapClass):
        space, vals = f.space, f.values
    else:
        if space is None:
            raise ValueError("a space is required for a plain array")
        vals = space.function(f)
    q = vals / eps
    r = np.round(q)
    snapped = np.isclose(q, r, rtol=0, atol=1e-9)
    k = np.where(snapped, r, np.floor(q))
    out = np.where(snapped, vals, k * eps)
    return CapClass(space, out)


# -- convergence ----------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceVerdict:
    distances: list[float]
    level_caps: list[float]
    metric_converges: bool
    levels_converge: bool

    @property
    def agree(self) -> bool:
        return self.metric_converges == self.levels_converge

    @property
    def converges(self) -> bool:
        return self.metric_converges and self.levels_converge


def check_convergence(space: Space, seq: Sequence, f, eps_grid: Sequence[float] = (0.1, 0.01),
                      window: int = 5, tol: float = 1e-2) -> ConvergenceVerdict:
    """Test ``f_n -> f`` in L0(Cap) by both characterisations.

    (i) ``d_Cap(f_n, f) <= tol`` on the last ``window`` terms; (ii)
    ``Cap(B ∩ {|f_n - f| > eps}) <= tol`` there for every ``eps`` in
    ``eps_grid`` and ``B`` in the exhaustion.
    """
    if window < 1 or window > len(seq):
        raise ValueError("window must lie between 1 and the sequence length")
    tail = seq[-window:]
    target = _values(space, f)
    dist = [dcap(space, fn, target) for fn in tail]
    levels = []
    for fn in tail:
        gap = np.abs(_values(space, fn) - target)
        worst = 0.0
        for eps in eps_grid:
            above = gap > eps
            for A in space.exhaustion:
                worst = max(worst, cap(space, above & A))
        levels.append(worst)
    return ConvergenceVerdict(dist, levels, max(dist) <= tol, max(levels) <= tol)


@dataclass(frozen=True)
class Subsequence:
    indices: list[int]
    limit: np.ndarray
    distances_to_limit: list[float]
    bounds_hold: bool
    pointwise: bool


def pointwise_weights(space: Space) -> np.ndarray:
    """``Cap({x}) * sum_{k: x in A_k} c_k / (Cap(A_k) v 1)`` per vertex.

    By monotonicity of ``Cap``, ``(|f - g| ∧ 1)(x)`` times this weight is at
    most ``d_Cap(f, g)``; it vanishes exactly on Cap-null vertices.
    """
    norm = _normalisers(space)
    member = np.array([norm @ np.array([A[x] for A in space.exhaustion]) for x in range(space.n)])
    singles = np.array([cap(space, [x]) for x in range(space.n)])
    return singles * member


def ae_subsequence(space: Space, seq: Sequence, start: int = 1, slack: float = 1e-12) -> Subsequence:
    """Extract indices ``n_1 < n_2 < ...`` along which ``f_n`` converges Cap-a.e.

    With ``L`` the last term, ``n_j`` is the first index past ``n_{j-1}``
    whose whole tail stays within ``2^-(j+start)`` of ``L``, so any two terms
    from ``n_j`` on are ``2^-(j+start-1)``-close. The certificate checks
    ``d_Cap(f_{n_j}, f_{n_{j+1}}) <= 2^-(j+start-1)`` directly together with
    the pointwise bound ``(|f_{n_j} - f_{n_{j+1}}| ∧ 1)(x) <= d_j / w(x)``
    off Cap-null vertices (see :func:`pointwise_weights`); summability of
    ``d_j`` then gives pointwise convergence there.
    """
    if not seq:
        raise ValueError("empty sequence")
    vals = [_values(space, fn) for fn in seq]
    limit = vals[-1]
    to_limit = np.array([dcap(space, v, limit) for v in vals])
    tail_sup = np.maximum.accumulate(to_limit[::-1])[::-1]
    idx: list[int] = []
    j = start
    while not idx or idx[-1] < len(vals) - 1:
        lo = idx[-1] + 1 if idx else 0
        hits = np.flatnonzero(tail_sup[lo:] <= 2.0 ** -(j + 1))
        idx.append(lo + int(hits[0]))
        j += 1
    steps = [dcap(space, vals[a], vals[b]) for a, b in zip(idx, idx[1:])]
    bounds = all(d <= 2.0 ** -(k + start - 1) + slack for k, d in enumerate(steps, start=1))
    live = ~space.cap_null
    w = pointwise_weights(space)[live]
    pointwise = True
    for (a, b), d in zip(zip(idx, idx[1:]), steps):
        step = np.minimum(np.abs(vals[b] - vals[a]), 1.0)[live]
        pointwise &= bool(np.all(step * w <= d + slack))
    return Subsequence(idx, limit, [float(x) for x in to_limit[idx]], bounds, pointwise)
