"""Quasi-uniform distance d_QU and quasi-continuous representatives."""
from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import csgraph

from .capacity import cap, capacity_outer_measure
from .l0cap import CapClass, _normalisers, _values, dcap, pr_project, truncated_gap
from .report import Report
from .sobolev import MClass, harmonic_extension, is_canonical, w12_norm_class
from .space import Space

BRUTE_LIMIT = 14
SLACK = 1e-10

__all__ = [
    "Regime", "regime", "QUResult", "dqu", "dqu_detail", "check_sandwich", "qcr",
    "check_linkqusob", "qu_convergence", "normqcr_applies", "is_canonical",
]


class Regime(enum.Enum):
    R1_FULLY_CHARGED = "R1_fully_charged"
    R2_WITH_NULL_VERTICES = "R2_with_null_vertices"


def regime(space: Space) -> Regime:
    return Regime.R2_WITH_NULL_VERTICES if space.m_null.any() else Regime.R1_FULLY_CHARGED


@dataclass(frozen=True)
class QUResult:
    value: float
    exceptional: np.ndarray  # optimal E found
    threshold: float | None  # lambda of the superlevel set, scans only
    method: str
    downgraded: bool = False


def _costs(space: Space, h: np.ndarray, E: np.ndarray) -> float:
    """``sum_k c_k [Cap(E ∩ A_k) / (Cap(A_k) v 1) + sup_{A_k \\ E} h]``."""
    norm = _normalisers(space)
    total = 0.0
    for c, nk, A in zip(space.exhaustion_weights, norm, space.exhaustion):
        rest = h[A & ~E]
        total += nk * cap(space, E & A) + c * (rest.max() if rest.size else 0.0)
    return float(total)


def _scan(space: Space, h: np.ndarray, method: str, downgraded: bool = False) -> QUResult:
    best = None
    for lam in np.unique(np.concatenate([[0.0], h])):
        E = h > lam
        val = _costs(space, h, E)
        if best is None or val < best.value:
            best = QUResult(val, E, float(lam), method, downgraded)
    return best


def _brute(space: Space, h: np.ndarray) -> QUResult:
    n = space.n
    if n > BRUTE_LIMIT:
        raise ValueError(f"brute force d_QU is limited to {BRUTE_LIMIT} vertices, got {n}")
    mu = capacity_outer_measure(space)
    norm = _normalisers(space)
    bits = np.arange(1 << n)
    masks = ((bits[:, None] >> np.arange(n)) & 1).astype(bool)
    total = np.zeros(bits.size)
    for c, nk, A in zip(space.exhaustion_weights, norm, space.exhaustion):
        abits = int(np.dot(A, 1 << np.arange(n)))
        caps = np.array([mu(int(b) & abits) for b in bits])
        rest = np.where(masks | ~A, 0.0, h).max(axis=1)
        total += nk * caps + c * rest
    k = int(np.argmin(total))
    return QUResult(float(total[k]), masks[k], None, "brute_force")


def dqu_detail(space: Space, f, g, method: str = "exact_scan") -> QUResult:
    """d_QU with the exceptional set that realises it.

    Parameters
    ----------
    method : {"exact_scan", "brute_force", "upper_bound"}
        ``exact_scan`` scans superlevel sets of ``|f - g| ∧ 1``, which is
        exact when every exhaustion set is ``X``. Under any other exhaustion
        it falls back to ``upper_bound`` and flags the result.
    """
    h = truncated_gap(space, f, g)
    if method == "brute_force":
        return _brute(space, h)
    if method == "upper_bound":
        return _scan(space, h, "upper_bound")
    if method != "exact_scan":
        raise ValueError(f"unknown method {method!r}")
    if space.constant_exhaustion:
        return _scan(space, h, "exact_scan")
    warnings.warn("exact_scan needs a constant exhaustion; returning the scan upper bound",
                  stacklevel=2)
    return _scan(space, h, "upper_bound", downgraded=True)


def dqu(space: Space, f, g, method: str = "exact_scan") -> float:
    """Quasi-uniform distance.

    ``inf_E sum_k 2^-k [Cap(E ∩ A_k) / (Cap(A_k) v 1) + sup_{A_k \\ E} |f - g| ∧ 1]``.

    >>> from capmod.space import build_space
    >>> k2 = build_space({"a": 1, "b": 1}, [("a", "b", 1.0)])
    >>> dqu(k2, [1.0, 0.0], [0.0, 0.0])
    0.75
    """
    return dqu_detail(space, f, g, method).value


def check_sandwich(space: Space, f, g, method: str = "exact_scan", slack: float = SLACK) -> Report:
    """``d_Cap <= d_QU <= 2 sqrt(d_Cap)``."""
    rep = Report("sandwich", "d_Cap <= d_QU <= 2 sqrt(d_Cap)")
    dc = dcap(space, f, g)
    dq = dqu(space, f, g, method)
    rep.at_most("lower", dc, dq, slack)
    rep.at_most("upper", dq, 2.0 * np.sqrt(dc), slack)
    rep.data.update(dcap=dc, dqu=dq)
    return rep


def qcr(space: Space, c) -> CapClass:
    """Canonical representative of an m-class.

    Harmonic at massless vertices of charged components, 0 on massless
    components; linear in ``c``.
    """
    vals = c.values if isinstance(c, MClass) else MClass(space, c).values
    return CapClass(space, harmonic_extension(space, vals))


def check_linkqusob(space: Space, f, g, slack: float = SLACK, canonical: bool = True) -> Report:
    """``d_QU(f, g) <= 3 ||[f - g]_m||^(2/3)``.

    The bound concerns quasi-continuous functions, so ``f`` and ``g`` are
    replaced by their canonical representatives unless ``canonical=False``;
    any other representative can be moved arbitrarily on massless vertices
    without changing the right-hand side.
    """
    fv, gv = _values(space, f), _values(space, g)
    if canonical:
        fv = qcr(space, MClass(space, fv)).values
        gv = qcr(space, MClass(space, gv)).values
    norm2, _ = w12_norm_class(space, MClass(space, fv - gv))
    bound = 3.0 * norm2 ** (1.0 / 3.0)
    dq = dqu(space, fv, gv, "exact_scan" if space.constant_exhaustion else "brute_force")
    rep = Report("linkqusob", "d_QU <= 3 ||f - g||_{W12}^(2/3)")
    rep.at_most("bound", dq, bound, slack)
    rep.data.update(dqu=dq, norm_squared=norm2)
    return rep


@dataclass(frozen=True)
class QUVerdict:
    distances: list[float]
    converges: bool
    subsequence: list[int]
    summable: bool


def qu_convergence(space: Space, seq: Sequence, f, tol: float = 1e-2, window: int = 5,
                   method: str = "exact_scan") -> QUVerdict:
    """Check ``d_QU(f_n, f) -> 0`` along the tail and pick a summable subsequence.

    The subsequence takes the first index with ``d_QU <= 2^-j`` for
    successive ``j``, so its distances sum to at most 1. It is reported
    summable when it also gets below ``tol``.
    """
    target = _values(space, f)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dist = [dqu(space, fn, target, method) for fn in seq]
    tail = dist[-window:]
    sub, j = [], 1
    for n, d in enumerate(dist):
        if d <= 2.0 ** -j:
            sub.append(n)
            j += 1
    summable = bool(sub) and sum(dist[i] for i in sub) <= 1.0 + 1e-12 and dist[sub[-1]] <= tol
    conv = max(tail) <= tol
    return QUVerdict(dist, conv, sub, summable and conv)


def null_components(space: Space) -> list[np.ndarray]:
    """Connected components of the subgraph induced on massless vertices."""
    null = np.flatnonzero(space.m_null)
    if null.size == 0:
        return []
    sub = space.laplacian[null][:, null]
    _, labels = csgraph.connected_components(sub, directed=False)
    return [null[labels == k] for k in range(labels.max() + 1)]


def normqcr_applies(space: Space, c) -> bool:
    """Whether ``|QCR(c)| = QCR(|c|)`` is expected.

    Always in regime R1. With massless vertices it needs the canonical
    representative to keep one sign on each massless component together
    with its neighbours, so that ``|QCR(c)|`` stays harmonic there.
    """
    if regime(space) is Regime.R1_FULLY_CHARGED:
        return True
    q = qcr(space, c).values
    A = space.laplacian
    for comp in null_components(space):
        closure = np.zeros(space.n, dtype=bool)
        closure[comp] = True
        closure |= np.asarray(abs(A[comp]).sum(axis=0)).ravel() > 0
        v = q[closure]
        if not (np.all(v >= 0) or np.all(v <= 0)):
            return False
    return True
