"""Seeded property batteries and the suite runner."""
from __future__ import annotations

import itertools
import json
import time
import warnings
from pathlib import Path

import numpy as np

from . import generators as gen
from .capacity import brute_force_capacity, cap, capacity, capacity_outer_measure, increasing_limit_check
from .l0cap import CapClass, check_convergence, dcap, pr_project
from .module import (DartField, MDartClass, check_isomorphism, check_module_axioms,
                     check_parallelogram, check_qc_inclusion, check_quotient, factor_through,
                     gradient_field, known_darts, pointwise_norm, pr_bar, qcr_field, random_field)
from .outer_measure import (check_claim_nu, find_subadditivity_violation, integrate, is_monotone,
                            is_submodular, limsup_of_sets, proof_measure)
from .quasicontinuity import (Regime, check_linkqusob, check_sandwich, dqu, normqcr_applies, qcr,
                              regime)
from .report import Report
from .sobolev import (MClass, dirichlet_energy, gradient_modulus, is_canonical, lattice_min_max,
                      w12_norm, w12_norm_class)
from .space import grid_1d, grid_2d, shortest_path_metric, space_from_json, space_to_json

SUITES = ("axioms", "outer", "capacity", "metrics", "modules")
EXACT = 1e-12


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


# -- space and Sobolev ------------------------------------------------------------

def space_battery(rng: np.random.Generator, graphs: int = 10) -> Report:
    rep = Report("space", "metric measure space model", {"graphs": graphs})
    sym = tri = rt = True
    for _ in range(graphs):
        s = gen.random_space(rng, int(rng.integers(2, 12)), connected=bool(rng.random() < 0.7))
        d = shortest_path_metric(s).distances
        sym &= bool(np.array_equal(d, d.T)) and bool(np.all(np.diag(d) == 0))
        tri &= all(d[i, k] <= d[i, j] + d[j, k] + 1e-12
                   for i, j, k in itertools.product(range(s.n), repeat=3))
        rt &= _roundtrip(s)
    rep.check("metric_symmetric", sym, True, sym)
    rep.check("metric_triangle", tri, True, tri, 1e-12)
    rep.check("json_roundtrip", rt, True, rt)
    for n in (2, 3, 17, 101):
        rep.close(f"grid_1d_mass_{n}", grid_1d(-1.5, 2.0, n).total_mass, 3.5, 1e-12)
        rep.check(f"grid_roundtrip_{n}", _roundtrip(grid_1d(0, 1, n)) and _roundtrip(grid_2d(0, 1, min(n, 9))), True, True)
    return rep


def _roundtrip(s) -> bool:
    t = space_from_json(json.loads(json.dumps(space_to_json(s))))
    return (t.ids == s.ids and np.array_equal(t.mass, s.mass) and np.array_equal(t.edges, s.edges)
            and np.array_equal(t.weights, s.weights)
            and all(np.array_equal(a, b) for a, b in zip(t.exhaustion, s.exhaustion)))


def sobolev_battery(rng: np.random.Generator, trials: int = 1000) -> Report:
    rep = Report("sobolev", "discrete W12", {"trials": trials})
    grad_ok, contr_ok, opt_ok, par_ok = True, True, True, True
    worst = 0.0
    for t in range(trials):
        s = gen.random_space(rng, int(rng.integers(2, 21)), null_fraction=0.3 if t % 2 else 0.0)
        f, g = rng.normal(size=s.n), rng.normal(size=s.n)
        e = dirichlet_energy(s, f)
        worst = max(worst, abs(float(np.sum(gradient_modulus(s, f) ** 2)) - 2 * e) / max(1.0, e))
        lat = lattice_min_max(s, f, g)
        contr_ok &= lat.contraction_holds
        if t % 20 == 0:
            c, d = MClass(s, f), MClass(s, g)
            val, canon = w12_norm_class(s, c)
            for x in np.flatnonzero(s.m_null & ~s.cap_null):
                for delta in (1e-3, -1e-3):
                    bumped = canon.copy()
                    bumped[x] += delta
                    opt_ok &= w12_norm(s, bumped) > val
            lhs = w12_norm_class(s, c + d).value + w12_norm_class(s, c - d).value
            rhs = 2 * val + 2 * w12_norm_class(s, d).value
            par_ok &= abs(lhs - rhs) <= 1e-10 * max(1.0, rhs)
    rep.at_most("gradient_energy_identity", worst, EXACT)
    rep.check("normal_contraction", contr_ok, True, contr_ok, EXACT)
    rep.check("class_minimiser_local", opt_ok, True, opt_ok)
    rep.check("class_parallelogram", par_ok, True, par_ok, 1e-10)
    return rep


# -- outer measures ---------------------------------------------------------------

def integral_battery(rng: np.random.Generator, trials: int = 1000) -> Report:
    rep = Report("integral", "properties of the Cavalieri integral", {"trials": trials})
    ok = dict.fromkeys(("monotone", "homogeneous", "null", "ae_equal", "chebyshev",
                        "monotone_convergence", "borel_cantelli"), True)
    for _ in range(trials):
        n = int(rng.integers(1, 6))
        mu = gen.random_outer(rng, n) if rng.random() < 0.5 else gen.random_budget_additive(rng, n)
        f = rng.integers(0, 4, n) * rng.random(n)
        g = f + rng.random(n) * (rng.random(n) < 0.5)
        ok["monotone"] &= integrate(mu, f) <= integrate(mu, g) + EXACT
        lam = float(rng.uniform(0.1, 10))
        ok["homogeneous"] &= abs(integrate(mu, lam * f) - lam * integrate(mu, f)) <= EXACT * max(1, lam * integrate(mu, f))
        h = f.copy()
        diff = rng.random(n) < 0.3
        h[diff] += 1.0
        if mu(diff) == 0:
            ok["ae_equal"] &= abs(integrate(mu, h) - integrate(mu, f)) <= EXACT
        for level in rng.uniform(0.05, 3, size=3):
            above = f >= level
            ok["chebyshev"] &= mu(above) <= integrate(mu, f, above) / level + EXACT
        steps = [np.minimum(f, k / 4) for k in range(1, 20)] + [f]
        vals = [integrate(mu, s) for s in steps]
        ok["monotone_convergence"] &= all(b >= a - EXACT for a, b in zip(vals, vals[1:])) and vals[-1] == integrate(mu, f)
        sets = [np.flatnonzero(rng.random(n) < 0.3).tolist() for _ in range(4)]
        ls = limsup_of_sets(sets, "empty")
        ok["borel_cantelli"] &= len(ls) == 0 and mu(list(ls)) == 0
    # a(iii) exhaustively on |X| <= 4 with values on a small grid
    for n in range(1, 5):
        mu = gen.random_monotone(rng, n)
        for f in itertools.product((0.0, 0.5, 1.0), repeat=n):
            f = np.array(f)
            ok["null"] &= (integrate(mu, f) == 0) == (mu(f != 0) == 0)
    for name, good in ok.items():
        rep.check(name, good, True, good, EXACT)
    return rep


def subadditivity_battery(rng: np.random.Generator, functions: int = 200, max_n: int = 4) -> Report:
    """Submodularity verdict against an exhaustive search for integral violations."""
    rep = Report("subadditivity_theorem", "submodular iff the integral is subadditive",
                 {"functions": functions, "max_n": max_n})
    mismatches, prefix_bad, claim_bad, n_sub = [], 0, 0, 0
    for k in range(functions):
        n = int(rng.integers(1, max_n + 1))
        mu = gen.random_budget_additive(rng, n) if k % 2 else gen.random_monotone(rng, n)
        sub = is_submodular(mu).holds
        viol = find_subadditivity_violation(mu, mode="exhaustive")
        if sub != (viol is None):
            mismatches.append(k)
        if sub:
            n_sub += 1
            for _ in range(5):
                f = rng.integers(0, 4, n).astype(float)
                g = rng.integers(0, 4, n).astype(float)
                pm = proof_measure(mu, f, g)
                prefix = [mu(np.concatenate(pm.atoms[: i + 1])) for i in range(len(pm.atoms))]
                prefix_bad += not np.array_equal(pm.prefix_values(), np.array(prefix))
                c = check_claim_nu(mu, f, g, f + g)
                claim_bad += not (c.ordered_equality and c.inequality_holds)
                c2 = check_claim_nu(mu, f, g, f)
                claim_bad += not c2.inequality_holds
    rep.check("verdicts_match", not mismatches, [], mismatches)
    rep.check("prefix_identity", prefix_bad == 0, 0, prefix_bad)
    rep.check("claim_nu", claim_bad == 0, 0, claim_bad)
    rep.check("has_submodular_instances", n_sub > 0, "> 0", n_sub)
    rep.data["submodular"] = n_sub
    return rep


# -- capacity ---------------------------------------------------------------------

def capacity_oracle_battery(rng: np.random.Generator, graphs: int = 50, max_n: int = 8,
                            tol: float = 1e-6) -> Report:
    rep = Report("capacity_oracle", "solver against projected gradient descent",
                 {"graphs": graphs, "max_n": max_n, "tol": tol})
    worst, box = 0.0, True
    for k in range(graphs):
        s = gen.random_space(rng, int(rng.integers(2, max_n + 1)))
        E = gen.random_subset(rng, s.n)
        res = capacity(s, E)
        oracle = brute_force_capacity(s, E, seed=k)
        worst = max(worst, abs(res.value - oracle))
        box &= bool(res.potential.min() >= -1e-9 and res.potential.max() <= 1 + 1e-9) and res.kkt_ok
        box &= abs(res.value - w12_norm(s, res.potential)) <= 1e-9 * max(1.0, res.value)
    rep.at_most("max_abs_gap", worst, tol)
    rep.check("potential_and_kkt", box, True, box, 1e-9)
    return rep


def capacity_outer_battery(rng: np.random.Generator, graphs: int = 10, n: int = 5,
                           tol: float = 1e-9) -> Report:
    """Submodularity, monotonicity and ``m <= Cap`` over every subset pair."""
    rep = Report("capacity_outer_measure", "Cap is a submodular outer measure",
                 {"graphs": graphs, "n": n, "tol": tol})
    sub_v = mono_v = mass_v = 0
    for _ in range(graphs):
        s = gen.random_space(rng, n)
        mu = capacity_outer_measure(s)
        vals = mu.all_values()
        N = 1 << n
        B = np.arange(N)
        masses = np.array([s.mass[[i for i in range(n) if b >> i & 1]].sum() for b in range(N)])
        mass_v += int(np.sum(masses > vals + tol))
        for E in range(N):
            sub_v += int(np.sum(vals[E | B] + vals[E & B] > vals[E] + vals + tol))
            sup = B[(B & E) == E]
            mono_v += int(np.sum(vals[sup] < vals[E] - tol))
        sub = is_submodular(mu, tol=tol)
        sub_v += 0 if sub.holds else 1
    rep.check("submodular", sub_v == 0, 0, sub_v, tol)
    rep.check("monotone", mono_v == 0, 0, mono_v, tol)
    rep.check("mass_below_cap", mass_v == 0, 0, mass_v, tol)
    return rep


def capacity_chain_battery(rng: np.random.Generator, graphs: int = 10) -> Report:
    rep = Report("capacity_chain", "continuity along increasing chains", {"graphs": graphs})
    ok = True
    for _ in range(graphs):
        s = gen.random_space(rng, int(rng.integers(2, 10)))
        order = rng.permutation(s.n)
        chain = [order[:k].tolist() for k in range(s.n + 1)]
        ok &= increasing_limit_check(s, chain).passed
        ok &= cap(s, np.ones(s.n, bool)) < np.inf
    rep.check("chains", ok, True, ok)
    return rep


# -- metrics ----------------------------------------------------------------------

def _pair(rng: np.random.Generator, n: int):
    f = rng.uniform(-1.5, 1.5, n) * (rng.random(n) < 0.7)
    g = rng.uniform(-1.5, 1.5, n) * (rng.random(n) < 0.7)
    return f, g


def sandwich_battery(rng: np.random.Generator, graphs: int = 10, pairs: int = 10,
                     brute_max_n: int = 12, slack: float = 1e-10) -> Report:
    rep = Report("sandwich", "d_Cap <= d_QU <= 2 sqrt(d_Cap); scan against brute force",
                 {"graphs": graphs, "pairs": pairs, "brute_max_n": brute_max_n})
    lower = upper = 0
    scan_gap, compared = 0.0, 0
    for k in range(graphs):
        n = int(rng.integers(4, brute_max_n + 1))
        s = gen.random_space(rng, n, null_fraction=0.25 if k % 3 == 2 else 0.0)
        for _ in range(pairs):
            f, g = _pair(rng, n)
            r = check_sandwich(s, f, g, slack=slack)
            lower += not r.checks[0].passed
            upper += not r.checks[1].passed
            if n <= brute_max_n:
                scan_gap = max(scan_gap, abs(r.data["dqu"] - dqu(s, f, g, "brute_force")))
                compared += 1
    rep.check("lower", lower == 0, 0, lower, slack)
    rep.check("upper", upper == 0, 0, upper, slack)
    rep.at_most("scan_equals_brute", scan_gap, EXACT)
    rep.data["compared"] = compared
    return rep


def linkqusob_battery(rng: np.random.Generator, pairs: int = 100, slack: float = 1e-10) -> Report:
    rep = Report("linkqusob", "d_QU <= 3 ||f - g||^(2/3)", {"pairs": pairs})
    bad, ratio = 0, 0.0
    for k in range(pairs):
        s = gen.random_space(rng, int(rng.integers(2, 11)), null_fraction=0.3 if k % 2 else 0.0)
        scale = 10.0 ** rng.uniform(-3, 1)
        f, g = scale * rng.normal(size=s.n), scale * rng.normal(size=s.n)
        r = check_linkqusob(s, f, g, slack=slack)
        bad += not r.passed
        if r.data["norm_squared"] > 0:
            ratio = max(ratio, r.data["dqu"] / (3 * r.data["norm_squared"] ** (1 / 3)))
    rep.check("bound", bad == 0, 0, bad, slack)
    rep.data["max_ratio"] = ratio
    return rep


def dcap_battery(rng: np.random.Generator, triples: int = 1000) -> Report:
    rep = Report("dcap_pseudometric", "d_Cap separates Cap-classes", {"triples": triples})
    tri = sym = sep = proj = True
    spaces = [gen.random_space(rng, int(rng.integers(2, 8)), null_fraction=0.3 if i % 2 else 0.0,
                               connected=bool(i % 3)) for i in range(10)]
    for t in range(triples):
        s = spaces[t % len(spaces)]
        f, g, h = (rng.normal(size=s.n) for _ in range(3))
        dfg, dgh, dfh = dcap(s, f, g), dcap(s, g, h), dcap(s, f, h)
        tri &= dfh <= dfg + dgh + EXACT
        sym &= dfg == dcap(s, g, f)
        bumped = f.copy()
        bumped[s.cap_null] += 1.0
        sep &= dcap(s, f, bumped) == 0 and (CapClass(s, f) == CapClass(s, bumped))
        sep &= (dfg == 0) == (CapClass(s, f) == CapClass(s, g))
        if t % 50 == 0:
            a, b = rng.normal(size=2)
            proj &= pr_project(CapClass(s, a * f + b * g)).allclose(
                MClass(s, a * f) + MClass(s, b * g), EXACT)
            # non-injective exactly when a massless vertex carries capacity
            charged_null = bool((s.m_null & ~s.cap_null).any())
            moved = f.copy()
            moved[s.m_null & ~s.cap_null] += 1.0
            proj &= (pr_project(CapClass(s, moved)) == pr_project(CapClass(s, f))) and \
                ((CapClass(s, moved) != CapClass(s, f)) == charged_null)
    rep.check("triangle", tri, True, tri, EXACT)
    rep.check("symmetric", sym, True, sym)
    rep.check("separates_classes", sep, True, sep)
    rep.check("projection", proj, True, proj, EXACT)
    return rep


def qcr_battery(rng: np.random.Generator, samples: int = 500, tol: float = EXACT) -> Report:
    rep = Report("qcr", "quasi-continuous representatives", {"samples": samples})
    ok = dict.fromkeys(("pr_qcr_identity", "linear", "unique", "normqcr"), True)
    skipped = 0
    for k in range(samples):
        s = gen.random_space(rng, int(rng.integers(2, 10)), null_fraction=0.3 if k % 2 else 0.0,
                             connected=bool(k % 5))
        c, d = MClass(s, rng.normal(size=s.n)), MClass(s, rng.normal(size=s.n))
        a, b = rng.normal(size=2)
        q = qcr(s, c)
        ok["pr_qcr_identity"] &= pr_project(q) == c
        ok["linear"] &= qcr(s, a * c + b * d).allclose(a * qcr(s, c) + b * qcr(s, d), 1e-10)
        # two canonical functions agreeing m-a.e. coincide
        other = q.values.copy()
        other[s.m_null] = rng.normal(size=int(s.m_null.sum()))
        if is_canonical(s, other):
            ok["unique"] &= np.allclose(other, q.values, rtol=0, atol=1e-10)
        ok["unique"] &= is_canonical(s, q.values)
        if normqcr_applies(s, c):
            ok["normqcr"] &= abs(q).allclose(qcr(s, abs(c)), 1e-10)
        else:
            skipped += 1
    for name, good in ok.items():
        rep.check(name, good, True, good, tol)
    rep.data["normqcr_skipped"] = skipped
    return rep


def exhaustion_battery(rng: np.random.Generator, graphs: int = 5) -> Report:
    """Convergence verdicts do not depend on the exhaustion."""
    rep = Report("exhaustion_independence", "topology independent of the exhaustion", {"graphs": graphs})
    same = True
    for _ in range(graphs):
        s2 = gen.random_exhaustion_space(rng, int(rng.integers(3, 8)))
        s1 = space_from_json({k: v for k, v in space_to_json(s2).items() if k != "exhaustion"})
        f = rng.normal(size=s2.n)
        conv = [f + rng.normal(size=s2.n) / k ** 2 for k in range(1, 200)]
        bad = [f + (k % 2) for k in range(1, 20)]
        for seq in (conv, bad):
            v1 = check_convergence(s1, seq, f, window=5, tol=1e-2)
            v2 = check_convergence(s2, seq, f, window=5, tol=1e-2)
            same &= v1.converges == v2.converges
    rep.check("same_verdicts", same, True, same)
    return rep


# -- modules ----------------------------------------------------------------------

def module_battery(rng: np.random.Generator, samples: int = 500, tol: float = EXACT) -> Report:
    """Module axioms, Hilbert identity, quotient, QCR and factorisation."""
    rep = Report("modules", "tangent module and its m-quotient", {"samples": samples})
    per = 10
    spaces = [gen.random_space(rng, int(rng.integers(2, 10)), null_fraction=0.3 if i % 2 else 0.0)
              for i in range(max(1, samples // per))]
    ok = dict.fromkeys(("axioms", "parallelogram", "norm_identity", "pr_qcr", "qcr_linear",
                        "factor", "grad_norm", "qcr_field_section", "injective", "isomorphism",
                        "qc_inclusion"), True)
    for s in spaces:
        if s.n_edges == 0:
            continue
        ok["axioms"] &= check_module_axioms(s, rng, trials=per, tol=tol).passed
        ok["isomorphism"] &= check_isomorphism(s, rng, trials=3).passed
        ok["norm_identity"] &= check_quotient(s, rng, trials=per, tol=tol).passed
        incl = check_qc_inclusion(s)
        ok["qc_inclusion"] &= incl.passed
        E = (rng.random(s.n) < 0.5).astype(float)
        tests = [random_field(s, rng) for _ in range(per)]
        for T in (lambda v: pr_bar(v), lambda v: pr_bar(v.scale(0.5)), lambda v: pr_bar(v.scale(E))):
            ok["factor"] &= factor_through(s, T, tests, rng, tol).report.passed
        for _ in range(per):
            v, w = random_field(s, rng), random_field(s, rng)
            ok["parallelogram"] &= check_parallelogram(v, w, tol).passed
            f = rng.normal(size=s.n)
            ok["grad_norm"] &= bool(np.array_equal(pointwise_norm(gradient_field(s, f)), gradient_modulus(s, f)))
            c, d = MClass(s, f), MClass(s, rng.normal(size=s.n))
            a, b = rng.normal(size=2)
            ok["pr_qcr"] &= pr_project(qcr(s, c)) == c
            ok["qcr_linear"] &= qcr(s, a * c + b * d).allclose(a * qcr(s, c) + b * qcr(s, d), 1e-10)
            cv = pr_bar(v)
            rep_v = qcr_field(s, cv)
            ok["qcr_field_section"] &= pr_bar(rep_v) == cv
            # canonical fields with the same projection coincide
            moved = v.values.copy()
            moved[~known_darts(s)] = rng.normal(size=int((~known_darts(s)).sum()))
            ok["injective"] &= qcr_field(s, pr_bar(DartField(s, moved))) == rep_v
            if regime(s) is Regime.R1_FULLY_CHARGED:
                ok["qcr_field_section"] &= rep_v == v
    for name, good in ok.items():
        rep.check(name, good, True, good, tol)
    return rep


# -- runner -------------------------------------------------------------------------

def _suite(name: str, seed: int) -> Report:
    rng = lambda k: _rng(seed, SUITES.index(name), k)  # noqa: E731
    rep = Report(name, f"suite {name}", {"seed": seed})
    if name == "axioms":
        parts = [space_battery(rng(0)), sobolev_battery(rng(1))]
    elif name == "outer":
        parts = [integral_battery(rng(0)), subadditivity_battery(rng(1))]
    elif name == "capacity":
        parts = [capacity_oracle_battery(rng(0)), capacity_outer_battery(rng(1)),
                 capacity_chain_battery(rng(2))]
    elif name == "metrics":
        parts = [dcap_battery(rng(0)), sandwich_battery(rng(1)), linkqusob_battery(rng(2)),
                 qcr_battery(rng(3)), exhaustion_battery(rng(4))]
    else:
        parts = [module_battery(rng(0))]
    for p in parts:
        rep.extend(p)
        rep.data[p.scenario] = p.data
    return rep


def run_suite(name: str, seed: int = 0, report_path: str | Path | None = None) -> Report:
    """Run a named battery (or ``all``) and optionally write JSON and CSV.

    ``report_path`` names the JSON file; the CSV goes next to it.
    """
    valid = SUITES + ("all",)
    if name not in valid:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(valid)}")
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if name == "all":
            rep = Report("all", "all suites", {"seed": seed})
            for sub in SUITES:
                rep.extend(_suite(sub, seed))
        else:
            rep = _suite(name, seed)
    rep.runtime = time.perf_counter() - t0
    if report_path is not None:
        path = Path(report_path)
        if not path.parent.exists():
            raise OSError(f"report directory {path.parent} does not exist")
        path.write_text(rep.to_json())
        path.with_suffix(".csv").write_text(rep.to_csv())
    return rep
