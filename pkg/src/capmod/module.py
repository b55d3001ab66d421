"""L0(Cap)-normed modules on darts: the tangent module and its m-quotient.

A dart is an oriented edge. Edge ``e = (u, v)`` gives dart ``2e`` (u -> v)
and dart ``2e + 1`` (v -> u). Fields carry one value per dart; scalars act
at the tail vertex, which is what makes ``|g v| = |g| |v|`` hold.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la

from .l0cap import CapClass, _values, dcap
from .quasicontinuity import Regime, qcr, regime
from .report import Report
from .sobolev import MClass, gradient_modulus, is_canonical, vertex_sums
from .space import Space, build_space

TOL = 1e-12


class DartField:
    """Element of the tangent module: one real number per dart."""

    __slots__ = ("space", "values")

    def __init__(self, space: Space, values):
        vals = np.array(values, dtype=float)
        if vals.shape != (2 * space.n_edges,):
            raise ValueError(f"expected {2 * space.n_edges} dart values, got shape {vals.shape}")
        self.space = space
        self.values = vals

    @classmethod
    def zeros(cls, space: Space) -> "DartField":
        return cls(space, np.zeros(2 * space.n_edges))

    def _other(self, other: "DartField") -> np.ndarray:
        if other.space is not self.space:
            raise ValueError("dart fields over different spaces")
        return other.values

    def __add__(self, other):
        return DartField(self.space, self.values + self._other(other))

    def __sub__(self, other):
        return DartField(self.space, self.values - self._other(other))

    def __neg__(self):
        return DartField(self.space, -self.values)

    def scale(self, g) -> "DartField":
        """Scalar action of a vertex function, applied at each dart's tail."""
        if np.isscalar(g):
            return DartField(self.space, g * self.values)
        gv = _values(self.space, g)
        return DartField(self.space, gv[self.space.dart_tail] * self.values)

    __rmul__ = scale

    def norm(self) -> np.ndarray:
        return pointwise_norm(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DartField) or other.space is not self.space:
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    __hash__ = None

    def allclose(self, other: "DartField", atol: float = TOL) -> bool:
        return bool(np.allclose(self.values, self._other(other), rtol=0, atol=atol))

    def to_json(self) -> dict:
        ids = self.space.ids
        t, h = self.space.dart_tail, self.space.dart_head
        return {"darts": [{"from": ids[a], "to": ids[b], "value": float(x)}
                          for a, b, x in zip(t, h, self.values)]}

    @classmethod
    def from_json(cls, space: Space, obj: dict) -> "DartField":
        unknown = set(obj) - {"darts"}
        if unknown:
            raise ValueError(f"unknown field(s) {sorted(unknown)}")
        pos = {(int(a), int(b)): k for k, (a, b) in enumerate(zip(space.dart_tail, space.dart_head))}
        vals = np.zeros(2 * space.n_edges)
        for d in obj["darts"]:
            extra = set(d) - {"from", "to", "value"}
            if extra:
                raise ValueError(f"unknown dart field(s) {sorted(extra)}")
            key = (space.index[d["from"]], space.index[d["to"]])
            if key not in pos:
                raise ValueError(f"no dart {d['from']} -> {d['to']}")
            vals[pos[key]] = float(d["value"])
        return cls(space, vals)

    def __repr__(self) -> str:
        return f"DartField({np.array2string(self.values, precision=4, threshold=8)})"


def gradient_field(space: Space, f) -> DartField:
    """``grad f (x -> y) = sqrt(w(x, y)) (f(y) - f(x))``."""
    f = _values(space, f)
    return DartField(space, np.sqrt(space.dart_weight) * (f[space.dart_head] - f[space.dart_tail]))


_per_vertex = vertex_sums


def pointwise_norm(v: DartField) -> np.ndarray:
    """``|v|(x) = sqrt(sum over darts leaving x of v**2)``."""
    return np.sqrt(_per_vertex(v.space, v.values ** 2))


def pointwise_inner(v: DartField, w: DartField) -> np.ndarray:
    """``<v, w>(x) = sum over darts leaving x of v w``."""
    return _per_vertex(v.space, v.values * v._other(w))


def module_distance(v: DartField, w: DartField) -> float:
    """Distance induced on the module: ``d_Cap(|v - w|, 0)``."""
    space = v.space
    return dcap(space, pointwise_norm(v - w), np.zeros(space.n))


def random_field(space: Space, rng: np.random.Generator, sparsity: float = 0.0) -> DartField:
    vals = rng.normal(size=2 * space.n_edges)
    if sparsity:
        vals[rng.random(vals.size) < sparsity] = 0.0
    return DartField(space, vals)


# -- checks ---------------------------------------------------------------------

def _close(a, b, tol=TOL) -> bool:
    return bool(np.allclose(a, b, rtol=0, atol=tol))


def check_module_axioms(space: Space, rng: np.random.Generator, trials: int = 20,
                        tol: float = TOL) -> Report:
    """Pointwise module axioms on random fields and scalars."""
    rep = Report("module_axioms", "L0(Cap)-normed module axioms", {"trials": trials, "n": space.n})
    live = ~space.cap_null
    ok = {k: True for k in ("nonneg", "definite", "triangle", "homogeneity", "assoc",
                            "unit", "indicator", "distance")}
    for _ in range(trials):
        v = random_field(space, rng, sparsity=0.3)
        w = random_field(space, rng)
        f = rng.normal(size=space.n)
        g = rng.normal(size=space.n)
        nv = pointwise_norm(v)
        ok["nonneg"] &= bool((nv >= 0).all())
        # |v|(x) = 0 exactly when every dart leaving x vanishes
        zero_at = _per_vertex(space, (v.values != 0).astype(float)) == 0
        ok["definite"] &= bool(np.array_equal((nv == 0)[live], zero_at[live]))
        ok["triangle"] &= bool((pointwise_norm(v + w) <= nv + pointwise_norm(w) + tol).all())
        ok["homogeneity"] &= _close(pointwise_norm(v.scale(f)), np.abs(f) * nv, tol)
        ok["assoc"] &= _close(v.scale(g).scale(f).values, v.scale(f * g).values, tol)
        ok["unit"] &= v.scale(np.ones(space.n)) == v
        E = rng.random(space.n) < 0.5
        ok["indicator"] &= _close(pointwise_norm(v.scale(E.astype(float))), E * nv, tol)
        ok["distance"] &= abs(module_distance(v, w)
                              - dcap(space, CapClass(space, pointwise_norm(v - w)), np.zeros(space.n))) <= tol
    zero = DartField.zeros(space)
    ok["nonneg"] &= bool((pointwise_norm(zero) == 0).all())
    for name, good in ok.items():
        rep.check(name, good, True, good, tol)
    return rep


def check_parallelogram(v: DartField, w: DartField, tol: float = TOL) -> Report:
    """``|v + w|^2 + |v - w|^2 = 2|v|^2 + 2|w|^2`` pointwise."""
    lhs = pointwise_norm(v + w) ** 2 + pointwise_norm(v - w) ** 2
    rhs = 2 * pointwise_norm(v) ** 2 + 2 * pointwise_norm(w) ** 2
    rep = Report("parallelogram", "Hilbert module identity")
    err = float(np.abs(lhs - rhs).max(initial=0.0))
    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
    rep.at_most("identity", err, tol * scale)
    inner = pointwise_inner(v, w)
    polar = (pointwise_norm(v + w) ** 2 - pointwise_norm(v) ** 2 - pointwise_norm(w) ** 2) / 2
    rep.at_most("polarization", float(np.abs(inner - polar).max(initial=0.0)), tol * scale)
    cs = np.abs(inner) - pointwise_norm(v) * pointwise_norm(w)
    rep.at_most("cauchy_schwarz", float(cs.max(initial=0.0)), tol * scale)
    return rep


# -- quotient by m-null sets ------------------------------------------------------

class MDartClass:
    """A dart field modulo darts leaving massless vertices (stored as NaN)."""

    __slots__ = ("space", "values")

    def __init__(self, space: Space, values):
        vals = np.array(values, dtype=float)
        if vals.shape != (2 * space.n_edges,):
            raise ValueError(f"expected {2 * space.n_edges} dart values, got shape {vals.shape}")
        known = known_darts(space)
        vals[~known] = np.nan
        if np.isnan(vals[known]).any():
            raise ValueError("undefined value on a dart leaving a vertex of positive mass")
        self.space = space
        self.values = vals

    def lift(self) -> DartField:
        """The representative that vanishes on darts leaving massless vertices."""
        return DartField(self.space, np.nan_to_num(self.values))

    def norm(self) -> MClass:
        return MClass(self.space, pointwise_norm(self.lift()))

    def scale(self, g) -> "MDartClass":
        gv = np.nan_to_num(g.values) if isinstance(g, MClass) else _values(self.space, g)
        return MDartClass(self.space, self.lift().scale(gv).values)

    def __add__(self, other):
        return MDartClass(self.space, self.lift().values + other.lift().values)

    def __sub__(self, other):
        return MDartClass(self.space, self.lift().values - other.lift().values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MDartClass) or other.space is not self.space:
            return NotImplemented
        k = known_darts(self.space)
        return bool(np.array_equal(self.values[k], other.values[k]))

    __hash__ = None

    def allclose(self, other: "MDartClass", atol: float = TOL) -> bool:
        k = known_darts(self.space)
        return bool(np.allclose(self.values[k], other.values[k], rtol=0, atol=atol))

    def __repr__(self) -> str:
        return f"MDartClass({np.array2string(self.values, precision=4, threshold=8)})"


def known_darts(space: Space) -> np.ndarray:
    return ~space.m_null[space.dart_tail]


def pr_bar(v: DartField) -> MDartClass:
    return MDartClass(v.space, v.values)


@dataclass(frozen=True)
class Quotient:
    space: Space
    project: Callable[[DartField], MDartClass]
    lift: Callable[[MDartClass], DartField]
    bijective: bool


def quotient_m(space: Space) -> Quotient:
    """The m-quotient of the tangent module with its projection."""
    return Quotient(space, pr_bar, MDartClass.lift, not space.m_null.any())


def check_quotient(space: Space, rng: np.random.Generator, trials: int = 20,
                   tol: float = TOL) -> Report:
    """Linearity, module compatibility and the norm identity of ``pr_bar``."""
    rep = Report("quotient", "pr_bar: norm identity and compatibility", {"trials": trials})
    norm_ok = lin_ok = act_ok = grad_ok = True
    for _ in range(trials):
        v, w = random_field(space, rng), random_field(space, rng)
        g = rng.normal(size=space.n)
        a, b = rng.normal(size=2)
        norm_ok &= pr_bar(v).norm() == MClass(space, pointwise_norm(v))
        lin_ok &= pr_bar(DartField(space, a * v.values + b * w.values)).allclose(
            MDartClass(space, a * pr_bar(v).lift().values + b * pr_bar(w).lift().values), tol)
        act_ok &= pr_bar(v.scale(g)) .allclose(pr_bar(v).scale(MClass(space, g)), tol)
        f = rng.normal(size=space.n)
        grad_ok &= pr_bar(gradient_field(space, f)).norm().allclose(
            MClass(space, gradient_modulus(space, f)), tol)
    rep.check("norm_identity", norm_ok, True, norm_ok)
    rep.check("linear", lin_ok, True, lin_ok, tol)
    rep.check("module_map", act_ok, True, act_ok, tol)
    rep.check("gradient_norm", grad_ok, True, grad_ok, tol)
    return rep


@dataclass
class Factorisation:
    S: Callable[[MDartClass], MDartClass]
    report: Report


class ContractError(ValueError):
    """A map handed to :func:`factor_through` breaks its input contract."""


def factor_through(space: Space, T: Callable[[DartField], MDartClass],
                   test_vectors: Sequence[DartField], rng: np.random.Generator | None = None,
                   tol: float = TOL) -> Factorisation:
    """Factor ``T`` through ``pr_bar``: ``S(pr_bar v) = T(v)``.

    ``S`` evaluates ``T`` on the zero-extended preimage. This is well defined
    because ``|T(u)| <= Pr(|u|)`` kills every field vanishing m-a.e.

    Raises
    ------
    ContractError
        If the bound fails on a test vector or ``S o pr_bar`` differs from ``T``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    rep = Report("factor_through", "factorisation through the m-quotient",
                 {"tests": len(test_vectors)})
    live = ~space.m_null

    def S(c: MDartClass) -> MDartClass:
        return T(c.lift())

    worst_bound = worst_comm = worst_lin = 0.0
    for v in test_vectors:
        Tv = T(v)
        excess = pointwise_norm(Tv.lift())[live] - pointwise_norm(v)[live]
        worst_bound = max(worst_bound, float(excess.max(initial=0.0)))
        diff = np.abs(S(pr_bar(v)).lift().values - Tv.lift().values)
        worst_comm = max(worst_comm, float(diff.max(initial=0.0)))
        E = (rng.random(space.n) < 0.5).astype(float)
        c = pr_bar(v)
        lin = np.abs(S(c.scale(E)).lift().values - S(c).scale(E).lift().values)
        worst_lin = max(worst_lin, float(lin.max(initial=0.0)))
    rep.at_most("bound", worst_bound, 0.0, tol)
    rep.at_most("commutes", worst_comm, 0.0, tol)
    rep.at_most("m_linear", worst_lin, 0.0, tol)
    if worst_bound > tol:
        raise ContractError(f"|T(v)| exceeds Pr(|v|) by {worst_bound:.3g}")
    if worst_comm > tol:
        raise ContractError(f"S o pr_bar differs from T by {worst_comm:.3g}")
    return Factorisation(S, rep)


# -- quasi-continuous fields --------------------------------------------------------

@dataclass(frozen=True)
class QCFields:
    space: Space
    basis: np.ndarray  # rows span QC(TX) in dart coordinates
    fiber_dims: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def contains(self, v: DartField, tol: float = 1e-9) -> bool:
        if self.dim == 0:
            return bool(np.abs(v.values).max(initial=0.0) <= tol)
        coef = self.basis @ v.values
        return bool(np.linalg.norm(v.values - self.basis.T @ coef) <= tol * max(1.0, np.linalg.norm(v.values)))

    def alt_membership(self, v: DartField, tol: float = 1e-9) -> bool:
        """Whether ``|v - grad f|`` is canonical for some generator ``f``."""
        return any(is_canonical(self.space, pointwise_norm(v - gradient_field(self.space, f)), tol)
                   for f in _test_functions(self.space))


def _test_functions(space: Space) -> list[np.ndarray]:
    return [np.zeros(space.n)] + [np.eye(space.n)[y] for y in range(space.n)]


def _coefficients(space: Space) -> list[np.ndarray]:
    out = [np.ones(space.n)]
    for y in np.flatnonzero(~space.m_null):
        out.append(qcr(space, MClass(space, np.eye(space.n)[y])).values)
    return out


def qc_vector_fields(space: Space) -> QCFields:
    """Span of the test fields ``qcr(g) grad chi_y``.

    ``g`` runs over canonical indicators of charged vertices plus the
    constant 1, and ``y`` over all vertices.
    """
    gens = [gradient_field(space, chi).scale(g).values
            for g in _coefficients(space) for chi in _test_functions(space)[1:]]
    if not gens or space.n_edges == 0:
        return QCFields(space, np.zeros((0, 2 * space.n_edges)), np.zeros(space.n, dtype=int))
    basis = la.orth(np.array(gens).T, rcond=1e-10).T
    dims = np.zeros(space.n, dtype=int)
    for x in range(space.n):
        cols = space.dart_tail == x
        if cols.any():
            dims[x] = np.linalg.matrix_rank(basis[:, cols], tol=1e-9) if basis.size else 0
    return QCFields(space, basis, dims)


def check_qc_inclusion(space: Space, qc: QCFields | None = None) -> Report:
    """QC(TX) inside the alternative class; asserted with full mass only."""
    qc = qc or qc_vector_fields(space)
    rep = Report("qc_inclusion", "QC(TX) included in the alternative class",
                 {"regime": regime(space).value, "dim": qc.dim})
    members = [qc.alt_membership(DartField(space, b)) for b in qc.basis]
    rep.data["alt_members"] = members
    rep.data["fiber_dims"] = qc.fiber_dims
    if regime(space) is Regime.R1_FULLY_CHARGED:
        rep.check("inclusion", all(members), True, all(members))
        full = qc.dim == 2 * space.n_edges
        rep.check("full_span", full, 2 * space.n_edges, qc.dim)
    return rep


def _gradient_fit(space: Space, c: MDartClass, tol: float) -> np.ndarray | None:
    k = known_darts(space)
    sw = np.sqrt(space.dart_weight)
    D = np.zeros((2 * space.n_edges, space.n))
    rows = np.arange(2 * space.n_edges)
    D[rows, space.dart_head] += sw
    D[rows, space.dart_tail] -= sw
    target = c.values[k]
    if not k.any():
        return None
    f0, *_ = np.linalg.lstsq(D[k], target, rcond=None)
    if np.linalg.norm(D[k] @ f0 - target) > tol * max(1.0, np.linalg.norm(target)):
        return None
    N = la.null_space(D[k])
    if N.size:
        # directions of N invisible to D (constants on components) are dropped
        U, s, Vt = np.linalg.svd(D @ N, full_matrices=False)
        keep = s > 1e-10 * max(1.0, float(np.abs(D).max()))
        z = Vt[keep].T @ ((U[:, keep].T @ -(D @ f0)) / s[keep])
        f0 = f0 + N @ z
    return D @ f0


def qcr_field(space: Space, c: MDartClass, tol: float = 1e-10) -> DartField:
    """Canonical representative of an m-class of dart fields.

    Known darts are copied. If the class is a projected gradient, the
    unknown darts come from the lowest-energy potential consistent with it;
    otherwise each unknown dart takes minus its reverse when that is known,
    and 0 when it is not.
    """
    k = known_darts(space)
    if k.all():
        return c.lift()
    fit = _gradient_fit(space, c, tol)
    if fit is not None:
        out = fit
    else:
        rev = np.arange(2 * space.n_edges) ^ 1
        out = np.where(k[rev], -np.nan_to_num(c.values)[rev], 0.0)
    out = np.where(k, c.values, out)
    return DartField(space, out)


# -- uniqueness up to relabelling ---------------------------------------------------

def permuted_copy(space: Space, rng: np.random.Generator):
    """Same space with edges reordered and reoriented; returns it and a dart map."""
    perm = rng.permutation(space.n_edges)
    flip = rng.random(space.n_edges) < 0.5
    edges = []
    for e in perm:
        u, v = space.edges[e]
        if flip[e]:
            u, v = v, u
        edges.append((space.ids[u], space.ids[v], float(space.weights[e])))
    other = build_space(list(zip(space.ids, space.mass.tolist())), edges,
                        [[space.ids[i] for i in np.flatnonzero(A)] for A in space.exhaustion])
    # dart d of the original lands on dart m[d] of the copy
    m = np.empty(2 * space.n_edges, dtype=int)
    for new_e, e in enumerate(perm):
        m[2 * e] = 2 * new_e + int(flip[e])
        m[2 * e + 1] = 2 * new_e + 1 - int(flip[e])
    return other, m


def transport(v: DartField, other: Space, dart_map: np.ndarray) -> DartField:
    vals = np.empty_like(v.values)
    vals[dart_map] = v.values
    return DartField(other, vals)


def check_isomorphism(space: Space, rng: np.random.Generator, trials: int = 20) -> Report:
    """The relabelling map preserves norms and sends gradients to gradients."""
    other, m = permuted_copy(space, rng)
    rep = Report("isomorphism", "uniqueness of the tangent module", {"trials": trials})
    norms = grads = True
    for _ in range(trials):
        v = random_field(space, rng)
        norms &= bool(np.array_equal(pointwise_norm(v), pointwise_norm(transport(v, other, m))))
        f = rng.normal(size=space.n)
        grads &= transport(gradient_field(space, f), other, m).allclose(gradient_field(other, f), TOL)
    rep.check("norms", norms, True, norms)
    rep.check("gradients", grads, True, grads, TOL)
    return rep
