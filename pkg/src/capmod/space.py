"""Finite weighted graphs standing in for metric measure spaces.

A :class:`Space` carries vertex masses (the reference measure), symmetric
positive edge conductances and a nested exhaustion ``A_1 ⊆ A_2 ⊆ ... ⊆ X``.
Vertex functions are plain numpy arrays indexed in vertex order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph


class SpaceError(ValueError):
    """Raised when a space description violates the structural rules."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Space:
    ids: tuple[str, ...]
    mass: np.ndarray
    edges: np.ndarray  # (E, 2) vertex indices, u < v not required
    weights: np.ndarray
    exhaustion: tuple[np.ndarray, ...] = field(default=())

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.ids)}

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Weighted graph Laplacian, ``f @ L @ f == sum_e w_e (f_u - f_v)**2``."""
        n = self.n
        u, v = self.edges[:, 0], self.edges[:, 1]
        w = self.weights
        adj = sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(n, n),
        ).tocsr()
        deg = np.asarray(adj.sum(axis=1)).ravel()
        return (sp.diags(deg) - adj).tocsr()

    @cached_property
    def energy_matrix(self) -> sp.csr_matrix:
        """``M + L``: the quadratic form of the squared W^{1,2} norm."""
        return (sp.diags(self.mass) + self.laplacian).tocsr()

    @cached_property
    def dense_energy_matrix(self) -> np.ndarray:
        return _readonly(self.energy_matrix.toarray())

    @cached_property
    def component_labels(self) -> np.ndarray:
        n_comp, labels = csgraph.connected_components(self.laplacian, directed=False)
        return _readonly(labels)

    @cached_property
    def cap_null(self) -> np.ndarray:
        """Vertices of zero capacity: those whose whole component is massless."""
        labels = self.component_labels
        comp_mass = np.bincount(labels, weights=self.mass)
        return _readonly(comp_mass[labels] <= 0.0)

    @cached_property
    def m_null(self) -> np.ndarray:
        return _readonly(self.mass <= 0.0)

    # darts: edge e=(u,v) yields dart 2e = u->v and 2e+1 = v->u
    @cached_property
    def dart_tail(self) -> np.ndarray:
        return _readonly(self.edges.ravel().copy())

    @cached_property
    def dart_head(self) -> np.ndarray:
        return _readonly(np.column_stack([self.edges[:, 1], self.edges[:, 0]]).ravel())

    @cached_property
    def dart_weight(self) -> np.ndarray:
        return _readonly(np.repeat(self.weights, 2))

    @cached_property
    def degree(self) -> np.ndarray:
        return _readonly(np.bincount(self.edges.ravel(), minlength=self.n))

    @cached_property
    def exhaustion_weights(self) -> np.ndarray:
        """Series weights of the distinct exhaustion sets.

        ``A_k = A_K = X`` for every ``k >= K``, so the tail of ``sum_k 2^-k``
        collapses onto the last set with weight ``2^-(K-1)``.
        """
        K = len(self.exhaustion)
        w = np.array([2.0 ** -(k + 1) for k in range(K)])
        w[-1] = 2.0 ** -(K - 1)
        return _readonly(w)

    @property
    def constant_exhaustion(self) -> bool:
        return all(A.all() for A in self.exhaustion)

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def mask(self, subset) -> np.ndarray:
        """Boolean vertex mask from ids, indices, a mask or a bitmask int."""
        return as_mask(self, subset)

    def function(self, values: Mapping[str, float] | Sequence[float] | np.ndarray) -> np.ndarray:
        if isinstance(values, Mapping):
            unknown = set(values) - set(self.index)
            if unknown:
                raise SpaceError(f"unknown vertex id(s) {sorted(unknown)}")
            missing = set(self.index) - set(values)
            if missing:
                raise SpaceError(f"function undefined at {sorted(missing)}")
            return np.array([float(values[v]) for v in self.ids])
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.n,):
            raise SpaceError(f"expected {self.n} vertex values, got shape {arr.shape}")
        return arr

    def indicator(self, subset) -> np.ndarray:
        return self.mask(subset).astype(float)

    def __repr__(self) -> str:
        return f"Space(n={self.n}, edges={self.n_edges}, exhaustion={len(self.exhaustion)})"


def as_mask(space: Space, subset) -> np.ndarray:
    n = space.n
    if isinstance(subset, np.ndarray) and subset.dtype == bool:
        if subset.shape != (n,):
            raise SpaceError(f"mask of shape {subset.shape} on a space with {n} vertices")
        return subset
    if isinstance(subset, (int, np.integer)) and not isinstance(subset, bool):
        return bits_to_mask(int(subset), n)
    if isinstance(subset, str):
        subset = [subset]
    out = np.zeros(n, dtype=bool)
    for item in subset:
        if isinstance(item, str):
            try:
                out[space.index[item]] = True
            except KeyError:
                raise SpaceError(f"unknown vertex id {item!r}") from None
        else:
            i = int(item)
            if not 0 <= i < n:
                raise SpaceError(f"vertex index {i} out of range")
            out[i] = True
    return out


def mask_to_bits(mask: np.ndarray) -> int:
    return int.from_bytes(np.packbits(mask, bitorder="little").tobytes(), "little")


def bits_to_mask(bits: int, n: int) -> np.ndarray:
    if bits < 0 or bits >> n:
        raise SpaceError(f"bitmask {bits:#x} out of range for {n} vertices")
    raw = np.frombuffer(bits.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def build_space(
    vertices: Mapping[str, float] | Iterable[tuple[str, float]],
    edges: Iterable[tuple[str, str, float]],
    exhaustion: Iterable[Iterable[str]] | None = None,
) -> Space:
    """Validate a vertex/edge/mass description and build a :class:`Space`.

    Parameters
    ----------
    vertices
        ``id -> mass`` mapping or sequence of ``(id, mass)`` pairs.
    edges
        ``(u, v, w)`` triples with ``w > 0``; at most one edge per pair.
    exhaustion
        Nested nonempty vertex sets whose union is the vertex set. Defaults
        to the single set ``X`` (``A_k = X`` for every ``k``).
    """
    pairs = list(vertices.items()) if isinstance(vertices, Mapping) else list(vertices)
    ids: list[str] = []
    masses: list[float] = []
    seen: set[str] = set()
    for vid, m in pairs:
        vid = str(vid)
        if vid in seen:
            raise SpaceError(f"duplicate vertex id {vid!r}")
        m = float(m)
        if not math.isfinite(m) or m < 0:
            raise SpaceError(f"mass of {vid!r} must be finite and nonnegative, got {m}")
        seen.add(vid)
        ids.append(vid)
        masses.append(m)
    if not ids:
        raise SpaceError("a space needs at least one vertex")
    index = {v: i for i, v in enumerate(ids)}

    e_list: list[tuple[int, int]] = []
    w_list: list[float] = []
    pairs_seen: set[frozenset[int]] = set()
    for u, v, w in edges:
        u, v = str(u), str(v)
        for end in (u, v):
            if end not in index:
                raise SpaceError(f"edge endpoint {end!r} is not a declared vertex")
        if u == v:
            raise SpaceError(f"self-loop at {u!r}")
        key = frozenset((index[u], index[v]))
        if key in pairs_seen:
            raise SpaceError(f"duplicate edge {u!r}-{v!r}")
        w = float(w)
        if not math.isfinite(w) or w <= 0:
            raise SpaceError(f"edge {u!r}-{v!r} weight must be positive, got {w}")
        pairs_seen.add(key)
        e_list.append((index[u], index[v]))
        w_list.append(w)

    n = len(ids)
    if exhaustion is None:
        ex = (np.ones(n, dtype=bool),)
    else:
        ex_list = []
        for k, A in enumerate(exhaustion):
            mask = np.zeros(n, dtype=bool)
            for vid in A:
                if str(vid) not in index:
                    raise SpaceError(f"exhaustion set {k + 1} names unknown vertex {vid!r}")
                mask[index[str(vid)]] = True
            if not mask.any():
                raise SpaceError(f"exhaustion set {k + 1} is empty")
            if ex_list and (ex_list[-1] & ~mask).any():
                raise SpaceError(f"exhaustion is not nested at set {k + 1}")
            ex_list.append(mask)
        if not ex_list:
            raise SpaceError("exhaustion must contain at least one set")
        if not ex_list[-1].all():
            raise SpaceError("exhaustion does not exhaust the vertex set")
        ex = tuple(ex_list)
    for A in ex:
        A.setflags(write=False)

    return Space(
        ids=tuple(ids),
        mass=_readonly(np.array(masses, dtype=float)),
        edges=_readonly(np.array(e_list, dtype=np.int64).reshape(-1, 2)),
        weights=_readonly(np.array(w_list, dtype=float)),
        exhaustion=ex,
    )


# -- metric -------------------------------------------------------------------

UNREACHABLE = math.inf


@dataclass(frozen=True, eq=False)
class Metric:
    space: Space
    distances: np.ndarray

    def __call__(self, x: str, y: str) -> float:
        idx = self.space.index
        return float(self.distances[idx[x], idx[y]])


def shortest_path_metric(space: Space, length: str = "inverse") -> Metric:
    """All-pairs shortest-path distances; unreachable pairs are ``inf``.

    Edge length is ``1/w`` by default, which reproduces ``|x_i - x_j|`` on
    :func:`grid_1d`. ``length="inverse_sqrt"`` uses ``1/sqrt(w)`` instead.
    """
    if length == "inverse":
        lengths = 1.0 / space.weights
    elif length == "inverse_sqrt":
        lengths = 1.0 / np.sqrt(space.weights)
    else:
        raise ValueError(f"unknown edge length convention {length!r}")
    n = space.n
    u, v = space.edges[:, 0], space.edges[:, 1]
    graph = sp.csr_matrix((lengths, (u, v)), shape=(n, n))
    dist = csgraph.shortest_path(graph, method="D", directed=False)
    # both triangles hold valid path lengths; the smaller one is the distance
    dist = np.minimum(dist, dist.T)
    return Metric(space, _readonly(dist))


# -- standard spaces ------------------------------------------------------------

def grid_1d(lo: float, hi: float, n: int) -> Space:
    """Uniform grid on ``[lo, hi]`` with trapezoidal masses and ``w = 1/h``."""
    if n < 2:
        raise SpaceError("grid_1d needs n >= 2")
    if not lo < hi:
        raise SpaceError("grid_1d needs lo < hi")
    h = (hi - lo) / (n - 1)
    mass = np.full(n, h)
    mass[0] = mass[-1] = h / 2
    ids = [str(i) for i in range(n)]
    edges = [(ids[i], ids[i + 1], 1.0 / h) for i in range(n - 1)]
    return build_space(zip(ids, mass), edges)


def grid_1d_coordinates(lo: float, hi: float, n: int) -> np.ndarray:
    return lo + (hi - lo) / (n - 1) * np.arange(n)


def grid_2d(lo: float, hi: float, n: int) -> Space:
    """``n x n`` lattice on ``[lo, hi]^2`` with unit edge weights.

    Masses are the tensor-product trapezoidal weights (``h^2`` inside,
    halved on edges, quartered at corners), so the total mass is
    ``(hi - lo)^2``. Vertex ``(i, j)`` has id ``"i_j"``.
    """
    if n < 2:
        raise SpaceError("grid_2d needs n >= 2")
    if not lo < hi:
        raise SpaceError("grid_2d needs lo < hi")
    h = (hi - lo) / (n - 1)
    c = np.ones(n)
    c[0] = c[-1] = 0.5
    mass = (h * h) * np.outer(c, c).ravel()
    ids = [f"{i}_{j}" for i in range(n) for j in range(n)]
    edges = []
    for i in range(n):
        for j in range(n):
            if i + 1 < n:
                edges.append((ids[i * n + j], ids[(i + 1) * n + j], 1.0))
            if j + 1 < n:
                edges.append((ids[i * n + j], ids[i * n + j + 1], 1.0))
    return build_space(zip(ids, mass), edges)


# -- JSON -----------------------------------------------------------------------

_TOP_FIELDS = {"vertices", "edges", "exhaustion"}
_VERTEX_FIELDS = {"id", "mass"}
_EDGE_FIELDS = {"u", "v", "w"}


def _reject_unknown(obj: Mapping, allowed: set[str], where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise SpaceError(f"unknown field {key!r} in {where}")


def space_from_json(obj: Mapping) -> Space:
    if not isinstance(obj, Mapping):
        raise SpaceError("space JSON must be an object")
    _reject_unknown(obj, _TOP_FIELDS, "space")
    for key in ("vertices", "edges"):
        if key not in obj:
            raise SpaceError(f"missing field {key!r} in space")
    vertices = []
    for rec in obj["vertices"]:
        _reject_unknown(rec, _VERTEX_FIELDS, "vertex")
        vertices.append((rec["id"], rec["mass"]))
    edges = []
    for rec in obj["edges"]:
        _reject_unknown(rec, _EDGE_FIELDS, "edge")
        edges.append((rec["u"], rec["v"], rec["w"]))
    return build_space(vertices, edges, obj.get("exhaustion"))


def space_to_json(space: Space) -> dict:
    u, v = space.edges[:, 0], space.edges[:, 1]
    out = {
        "vertices": [{"id": i, "mass": float(m)} for i, m in zip(space.ids, space.mass)],
        "edges": [
            {"u": space.ids[a], "v": space.ids[b], "w": float(w)}
            for a, b, w in zip(u, v, space.weights)
        ],
    }
    if not space.constant_exhaustion or len(space.exhaustion) > 1:
        out["exhaustion"] = [[space.ids[i] for i in np.flatnonzero(A)] for A in space.exhaustion]
    return out


def load_space(path: str | Path) -> Space:
    with open(path) as fh:
        return space_from_json(json.load(fh))


def dump_space(space: Space, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(space_to_json(space), fh, indent=2, sort_keys=True)
