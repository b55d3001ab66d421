"""Exit criteria. Each prints a single PASS/FAIL line."""
import time

import numpy as np
import pytest

from capmod import (build_space, capacity, dcap, dqu, grid_1d, grid_2d, scenario_capae_vs_dcap,
                    scenario_dominated_convergence_failure, study_refine_1d, study_refine_2d)
from capmod.space import grid_1d_coordinates
from capmod.suites import (_rng, capacity_oracle_battery, capacity_outer_battery,
                           linkqusob_battery, module_battery, sandwich_battery,
                           subadditivity_battery)

pytestmark = pytest.mark.acceptance
SEED = 20240601


@pytest.fixture
def verdict(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, detail
    return emit


def test_ac01_capacity_oracle(verdict):
    t0 = time.perf_counter()
    rep = capacity_oracle_battery(_rng(SEED, 1), graphs=50, max_n=8, tol=1e-6)
    dt = time.perf_counter() - t0
    gap = rep.checks[0].actual
    verdict("AC1 capacity vs oracle", rep.passed and dt < 10,
            f"max |gap| {gap:.2e} <= 1e-6 on 50 graphs in {dt:.2f}s (< 10s)")


def test_ac02_capacity_outer_measure(verdict):
    t0 = time.perf_counter()
    rep = capacity_outer_battery(_rng(SEED, 2), graphs=10, n=5, tol=1e-9)
    dt = time.perf_counter() - t0
    counts = {c.name: c.actual for c in rep.checks}
    verdict("AC2 Cap submodular outer measure", rep.passed and dt < 30,
            f"violations {counts} on 10 graphs |V|=5 in {dt:.2f}s (< 30s)")


def test_ac03_subadditivity_theorem(verdict):
    t0 = time.perf_counter()
    rep = subadditivity_battery(_rng(SEED, 3), functions=200, max_n=4)
    dt = time.perf_counter() - t0
    counts = {c.name: c.actual for c in rep.checks}
    verdict("AC3 submodular iff integral subadditive", rep.passed and dt < 60,
            f"{counts}, {rep.data['submodular']} submodular of 200, {dt:.2f}s (< 60s)")


def test_ac04_refine_1d(verdict):
    t0 = time.perf_counter()
    rep = study_refine_1d(L=10, n_list=[251, 501, 1001, 2001], target=2.0, rtol=0.02)
    dt = time.perf_counter() - t0
    v = rep.data["values"]
    ok = 1.96 <= v[-1] <= 2.04 and all(b < a for a, b in zip(rep.data["errors"], rep.data["errors"][1:]))
    verdict("AC4 1-D point capacity", ok and rep.passed and dt < 5,
            f"Cap(center, n=2001) = {v[-1]:.6f} in [1.96, 2.04], errors {['%.1e' % e for e in rep.data['errors']]}, {dt:.2f}s (< 5s)")


def test_ac05_refine_2d(verdict):
    t0 = time.perf_counter()
    rep = study_refine_2d([16, 32, 64])
    dt = time.perf_counter() - t0
    v = rep.data["values"]
    ok = v[0] > v[1] > v[2] and v[2] / v[0] < 0.9
    verdict("AC5 2-D point capacity decays", ok and rep.passed and dt < 20,
            f"Cap = {[round(x, 4) for x in v]}, ratio {v[2] / v[0]:.3f} < 0.9, {dt:.2f}s (< 20s)")


def test_ac06_sandwich(verdict):
    rep = sandwich_battery(_rng(SEED, 6), graphs=10, pairs=10, brute_max_n=12, slack=1e-10)
    counts = {c.name: c.actual for c in rep.checks}
    verdict("AC6 d_Cap <= d_QU <= 2 sqrt(d_Cap)", rep.passed and rep.data["compared"] == 100,
            f"{counts} over 100 pairs; scan vs brute force on {rep.data['compared']} pairs")


def test_ac07_sobolev_link(verdict):
    rep = linkqusob_battery(_rng(SEED, 7), pairs=100, slack=1e-10)
    verdict("AC7 d_QU <= 3 ||f-g||^(2/3)", rep.passed,
            f"{rep.checks[0].actual} violations of 100, max ratio {rep.data['max_ratio']:.3f}")


def test_ac08_modules(verdict):
    t0 = time.perf_counter()
    rep = module_battery(_rng(SEED, 8), samples=500, tol=1e-12)
    dt = time.perf_counter() - t0
    bad = [c.name for c in rep.failures()]
    verdict("AC8 module suite", rep.passed and dt < 30,
            f"{len(rep.checks) - len(bad)}/{len(rep.checks)} batteries exact to 1e-12 on 500 samples, failed {bad}, {dt:.2f}s (< 30s)")


def test_ac09_counterexamples(verdict):
    a = scenario_dominated_convergence_failure(n=1001, count=10)
    b = scenario_capae_vs_dcap(n=1001, count=10)
    lo = min(a.data["integrals"])
    verdict("AC9 counterexample scenarios", a.passed and b.passed,
            f"integrals >= {lo:.4f} > 0 while chi_Pk -> 0; d_Cap(chi_Pk, 0) >= {min(b.data['dcap']):.4f}; "
            f"failed {[c.name for c in a.failures() + b.failures()]}")


def test_ac10_k2_fixture(verdict):
    k2 = build_space({"a": 1.0, "b": 1.0}, [("a", "b", 1.0)])
    vals = {
        "Cap({a})": (capacity(k2, ["a"]).value, 1.5),
        "Cap(X)": (capacity(k2, ["a", "b"]).value, 2.0),
        "d_Cap": (dcap(k2, [1, 0], [0, 0]), 0.75),
        "d_QU": (dqu(k2, [1, 0], [0, 0]), 0.75),
        "d_QU brute": (dqu(k2, [1, 0], [0, 0], "brute_force"), 0.75),
    }
    ok = all(abs(a - b) <= 1e-12 for a, b in vals.values())
    verdict("AC10 K2 closed forms", ok, ", ".join(f"{k}={a!r}" for k, (a, _) in vals.items()))
