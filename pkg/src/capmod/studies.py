"""Refinement studies and the counterexample scenarios."""
from __future__ import annotations

import time

import numpy as np

from . import _linalg
from .capacity import cap, capacity
from .l0cap import check_convergence, dcap
from .outer_measure import integrate
from .capacity import capacity_outer_measure
from .quasicontinuity import qu_convergence
from .report import Report
from .space import grid_1d, grid_1d_coordinates, grid_2d

SOLVER_PINS = {
    "dense_limit": _linalg.DENSE_LIMIT,
    "direct_limit": _linalg.DIRECT_LIMIT,
    "cg_rtol": _linalg.CG_RTOL,
    "kkt_tol": 1e-9,
}


def _timed(rep: Report, t0: float) -> Report:
    rep.runtime = time.perf_counter() - t0
    return rep


def study_refine_1d(L: float = 10.0, n_list=(251, 501, 1001, 2001), target: float = 2.0,
                    rtol: float = 0.02) -> Report:
    """Capacity of the centre vertex of ``grid_1d(-L, L, n)`` under refinement.

    The continuum minimiser on the line is ``exp(-|x|)`` with capacity 2.
    """
    t0 = time.perf_counter()
    n_list = [int(n) for n in n_list]
    if L < 5:
        raise ValueError("L must be at least 5")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    rep = Report("refine_1d", "Example [0,1] extended to the line: Cap(point) = 2",
                 {"L": L, "n_list": n_list, "target": target, "rtol": rtol, "solver": SOLVER_PINS})
    values = []
    for n in n_list:
        space = grid_1d(-L, L, n)
        centre = int(np.argmin(np.abs(grid_1d_coordinates(-L, L, n))))
        values.append(capacity(space, [centre]).value)
    errors = [abs(v - target) for v in values]
    rep.data.update(values=values, errors=errors)
    rep.close("finest", values[-1], target, rtol * target)
    rep.check("error_decreasing", all(b < a for a, b in zip(errors, errors[1:])), "decreasing", errors)
    whole = grid_1d(-L, L, n_list[0])
    rep.close("whole_grid_is_mass", capacity(whole, np.ones(whole.n, bool)).value, 2 * L, 1e-9 * 2 * L)
    return _timed(rep, t0)


def study_refine_2d(n_list=(16, 32, 64), ratio: float = 0.9) -> Report:
    """Point capacity on ``grid_2d(-1, 1, n)`` with unit weights decays."""
    t0 = time.perf_counter()
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    if max(n_list) > 512:
        raise ValueError("n is limited to 512")
    rep = Report("refine_2d", "points are capacity-null in dimension 2",
                 {"n_list": n_list, "ratio": ratio, "solver": SOLVER_PINS})
    values = []
    for n in n_list:
        space = grid_2d(-1.0, 1.0, n)
        values.append(capacity(space, [f"{n // 2}_{n // 2}"]).value)
    rep.data["values"] = values
    rep.check("strictly_decreasing", all(b < a for a, b in zip(values, values[1:])), "decreasing", values)
    rep.at_most("ratio", values[-1] / values[0], ratio)
    whole = grid_2d(-1.0, 1.0, n_list[0])
    rep.close("whole_grid_is_mass", capacity(whole, np.ones(whole.n, bool)).value, 4.0, 1e-9 * 4)
    return _timed(rep, t0)


def _moving_points(n: int, count: int, L: float = 5.0):
    x = grid_1d_coordinates(-L, L, n)
    pts = [int(np.argmin(np.abs(x - 1.0 / k))) for k in range(1, count + 1)]
    if len(set(pts)) != count:
        raise ValueError(f"grid of {n} points cannot separate 1/k for k <= {count}")
    return grid_1d(-L, L, n), x, pts


def scenario_dominated_convergence_failure(n: int = 1001, count: int = 10, rtol: float = 0.05) -> Report:
    """``chi_{P_k} -> 0`` pointwise under ``chi_[0,1]`` while the integrals stay put.

    ``P_k`` is the grid vertex nearest ``1/k`` on ``[-5, 5]``.
    """
    t0 = time.perf_counter()
    if count * 10 > n:
        raise ValueError("count must be much smaller than n")
    rep = Report("dominated_convergence_failure", "no dominated convergence for Cap integrals",
                 {"n": n, "count": count, "rtol": rtol, "L": 5.0})
    space, x, pts = _moving_points(n, count)
    mu = capacity_outer_measure(space)
    seq = [np.eye(1, n, p).ravel() for p in pts]
    integrals = [integrate(mu, f) for f in seq]
    caps = [cap(space, [p]) for p in pts]
    rep.data.update(points=[float(x[p]) for p in pts], integrals=integrals)
    rep.check("integral_is_capacity", np.allclose(integrals, caps, rtol=0, atol=1e-12), caps, integrals)
    spread = (max(caps) - min(caps)) / max(caps)
    rep.at_most("near_translation_invariance", spread, rtol)
    rep.check("bounded_below", min(integrals) >= 0.5 * integrals[0], f">= {0.5 * integrals[0]}", min(integrals))
    rep.check("strictly_positive", min(integrals) > 0, "> 0", min(integrals))
    dom = ((x >= 0) & (x <= 1)).astype(float)
    rep.check("dominated", all((f <= dom).all() for f in seq), True, True)
    big = integrate(mu, dom)
    rep.check("dominator_integrable", 0 < big < np.inf, "finite", big)
    rep.check("below_dominator", max(caps) < big, f"< {big}", max(caps))
    # every vertex is hit at most once, so each coordinate is eventually 0
    hits = np.sum(seq, axis=0)
    rep.check("pointwise_to_zero", hits.max() <= 1 and seq[-1][pts[0]] == 0, True, bool(hits.max() <= 1))
    rep.check("limit_integral_zero", integrate(mu, np.zeros(n)) == 0.0, 0.0, integrate(mu, np.zeros(n)))
    return _timed(rep, t0)


def scenario_capae_vs_dcap(n: int = 1001, count: int = 10, tol: float = 1e-2,
                           stationary_len: int = 200) -> Report:
    """Pointwise convergence of ``chi_{P_k}`` without convergence in d_Cap or d_QU."""
    t0 = time.perf_counter()
    if count * 10 > n:
        raise ValueError("count must be much smaller than n")
    rep = Report("capae_vs_dcap", "Cap-a.e. convergence does not imply d_Cap convergence",
                 {"n": n, "count": count, "tol": tol, "stationary_len": stationary_len, "L": 5.0})
    space, x, pts = _moving_points(n, count)
    zero = np.zeros(n)
    moving = [np.eye(1, n, p).ravel() for p in pts]
    window = max(1, count // 2)
    d = [dcap(space, f, zero) for f in moving]
    rep.data["dcap"] = d
    rep.check("dcap_bounded_below", min(d) > tol, f"> {tol}", min(d))
    v = check_convergence(space, moving, zero, window=window, tol=tol)
    rep.check("moving_dcap_fails", not v.metric_converges, False, v.metric_converges)
    rep.check("moving_levels_fail", not v.levels_converge, False, v.levels_converge)
    rep.check("criteria_agree", v.agree, True, v.agree)
    q = qu_convergence(space, moving, zero, tol=tol, window=window)
    rep.check("moving_dqu_fails", not q.converges, False, q.converges)
    hits = np.sum(moving, axis=0)
    rep.check("pointwise_everywhere", hits.max() <= 1, True, bool(hits.max() <= 1))

    stationary = [np.eye(1, n, pts[0]).ravel() / k for k in range(1, stationary_len + 1)]
    vs = check_convergence(space, stationary, zero, window=5, tol=tol)
    rep.check("stationary_converges", vs.converges and vs.agree, True, vs.converges)
    qs = qu_convergence(space, stationary, zero, tol=tol, window=5)
    rep.check("stationary_dqu_converges", qs.converges, True, qs.converges)
    vz = check_convergence(space, [zero] * 3, zero, window=3, tol=tol)
    rep.check("zero_converges", vz.converges, True, vz.converges)
    return _timed(rep, t0)
