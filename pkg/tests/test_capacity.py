import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from capmod import (brute_force_capacity, build_space, capacity, capacity_outer_measure,
                    increasing_limit_check, is_submodular, w12_norm)
from capmod.capacity import ITERATIVE, LINEAR
from capmod.generators import random_space
from capmod.space import SpaceError

from conftest import spaces


def test_k2_singleton(k2):
    r = capacity(k2, ["a"])
    assert r.value == pytest.approx(1.5, abs=1e-12)
    np.testing.assert_allclose(r.potential, [1.0, 0.5], atol=1e-12)
    assert r.kkt_multipliers[0] == pytest.approx(1.5, abs=1e-12)
    assert r.solver == LINEAR


def test_k2_whole(k2):
    r = capacity(k2, ["a", "b"])
    assert r.value == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(r.potential, 1.0)
    np.testing.assert_allclose(list(r.kkt_multipliers.values()), [1.0, 1.0])


def test_empty_and_isolated(k2):
    r = capacity(k2, [])
    assert r.value == 0.0 and not r.potential.any()
    s = build_space({"x": 0.3}, [])
    assert capacity(s, ["x"]).value == pytest.approx(0.3)


def test_unknown_vertex(k2):
    with pytest.raises(SpaceError):
        capacity(k2, ["q"])


def test_massless_components():
    s = build_space({"a": 1, "b": 0, "c": 0, "d": 0},
                    [("a", "b", 1.0), ("c", "d", 1.0)])
    r = capacity(s, ["a"])
    assert r.potential[2] == r.potential[3] == 0.0
    assert capacity(s, ["c"]).value == 0.0
    np.testing.assert_allclose(capacity(s, ["c"]).potential[2:], 1.0)


def test_iterative_solver_matches(k2):
    r = capacity(k2, ["a"], solver="iterative")
    assert r.solver == ITERATIVE and r.value == pytest.approx(1.5)


def test_oracle_examples(k2):
    assert brute_force_capacity(k2, ["a"]) == pytest.approx(1.5, abs=1e-6)
    assert brute_force_capacity(k2, []) == 0.0
    s = random_space(np.random.default_rng(5), 8)
    E = [0, 3, 4]
    assert brute_force_capacity(s, E) == pytest.approx(capacity(s, E).value, abs=1e-6)


def test_oracle_size_limit():
    s = random_space(np.random.default_rng(0), 25)
    with pytest.raises(ValueError):
        brute_force_capacity(s, [0])


def test_outer_measure_adapter(k2):
    mu = capacity_outer_measure(k2)
    assert mu is capacity_outer_measure(k2)
    assert mu(0) == 0.0
    assert mu(0b01) == pytest.approx(1.5) and mu(0b11) == pytest.approx(2.0)
    assert mu(0b11) + mu(0) <= mu(0b01) + mu(0b10)
    for bits, mass in zip(range(4), [0, 1, 1, 2]):
        assert mass <= mu(bits) + 1e-12
    assert is_submodular(mu).holds


def test_chain_examples(k2, path3):
    c = increasing_limit_check(k2, [[], ["a"], ["a", "b"]])
    np.testing.assert_allclose(c.values, [0, 1.5, 2])
    assert c.passed and c.union_value == pytest.approx(2.0)
    c = increasing_limit_check(k2, [["a"], ["a"], ["a"]])
    assert len(set(c.values)) == 1
    c = increasing_limit_check(path3, [["a"], ["a", "b"], ["a", "b", "c"]])
    assert c.nondecreasing
    with pytest.raises(SpaceError):
        increasing_limit_check(k2, [["a"], ["b"]])


def _scipy_capacity(s, E):
    E = s.mask(E)
    bounds = [(1.0, None) if e else (None, None) for e in E]
    res = minimize(lambda f: w12_norm(s, f), E.astype(float), method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 10_000})
    return res.fun


@settings(max_examples=60, deadline=None)
@given(spaces(max_n=8), st.integers(0, 255))
def test_capacity_against_independent_optimiser(s, bits):
    E = np.array([(bits >> i) & 1 for i in range(s.n)], dtype=bool)
    r = capacity(s, E)
    assert r.value == pytest.approx(_scipy_capacity(s, E), abs=1e-6)
    assert r.potential.min() >= -1e-9 and r.potential.max() <= 1 + 1e-9
    assert r.kkt_ok
    assert abs(r.value - w12_norm(s, r.potential)) <= 1e-9 * max(1.0, r.value)


@settings(max_examples=15, deadline=None)
@given(spaces(min_n=3, max_n=5))
def test_submodular_monotone_mass(s):
    mu = capacity_outer_measure(s)
    vals = mu.all_values()
    N = 1 << s.n
    for E in range(N):
        mass = s.mass[[i for i in range(s.n) if E >> i & 1]].sum()
        assert mass <= vals[E] + 1e-9
        for F in range(N):
            assert vals[E | F] + vals[E & F] <= vals[E] + vals[F] + 1e-9
            if E & F == E:
                assert vals[E] <= vals[F] + 1e-9


def test_large_grid_uses_iterative_linear_solver():
    from capmod import grid_2d
    s = grid_2d(-1, 1, 110)  # 12100 unknowns, above the direct limit
    r = capacity(s, ["55_55"])
    assert r.kkt_ok and 0 < r.value < 2
