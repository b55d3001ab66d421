import warnings

import numpy as np
import pytest
from hypothesis import given, settings

from capmod import (MClass, build_space, check_linkqusob, check_sandwich, dcap, dqu, dqu_detail,
                    pr_project, qcr, qu_convergence, regime)
from capmod.quasicontinuity import Regime, normqcr_applies
from capmod.sobolev import is_canonical

from conftest import space_and_functions


def test_dqu_examples(k2):
    r = dqu_detail(k2, [1, 0], [0, 0])
    assert r.value == pytest.approx(0.75, abs=1e-12)
    assert r.exceptional.tolist() == [True, False]
    assert dqu(k2, [1, 0], [0, 0], "brute_force") == pytest.approx(0.75, abs=1e-12)
    assert dqu(k2, [2, -1], [2, -1]) == 0.0


def test_dqu_full_gap(k2):
    # |f - g| >= 1 everywhere: E in {empty, X} costs 1 or Cap(X)/2 = 1
    assert dqu(k2, [3, 1], [0, 0]) == pytest.approx(1.0)
    assert dqu(k2, [3, 1], [0, 0], "brute_force") == pytest.approx(1.0)


def test_dqu_downgrades_under_general_exhaustion():
    s = build_space({"a": 1, "b": 1}, [("a", "b", 1.0)], [["a"], ["a", "b"]])
    with pytest.warns(UserWarning):
        r = dqu_detail(s, [1, 0], [0, 0], "exact_scan")
    assert r.downgraded and r.method == "upper_bound"
    assert r.value >= dqu(s, [1, 0], [0, 0], "brute_force") - 1e-12


def test_dqu_brute_limit():
    s = build_space({f"v{i}": 1 for i in range(15)}, [])
    with pytest.raises(ValueError):
        dqu(s, np.zeros(15), np.ones(15), "brute_force")


def test_sandwich_examples(k2):
    rep = check_sandwich(k2, [1, 0], [0, 0])
    assert rep.passed
    assert rep.data["dcap"] == pytest.approx(0.75) and rep.data["dqu"] == pytest.approx(0.75)
    assert check_sandwich(k2, [1, 1], [1, 1]).passed


def test_linkqusob_example(k2):
    rep = check_linkqusob(k2, [1, 0], [0, 0])
    assert rep.passed and rep.data["norm_squared"] == pytest.approx(2.0)
    assert 3 * 2 ** (1 / 3) == pytest.approx(3.7798, abs=1e-4)
    assert check_linkqusob(k2, [1, 2], [1, 2]).passed


def test_linkqusob_needs_canonical_representatives(path_null):
    # moving f on the massless vertex leaves the class norm at 0
    f, g = np.array([0.0, 50.0, 0.0]), np.zeros(3)
    assert check_linkqusob(path_null, f, g).passed
    assert not check_linkqusob(path_null, f, g, canonical=False).passed


def test_qcr_examples(path_null, path3):
    np.testing.assert_allclose(qcr(path_null, MClass(path_null, [0, np.nan, 1])).values, [0, 0.5, 1])
    f = np.array([0.1, -2.0, 4.0])
    np.testing.assert_array_equal(qcr(path3, MClass(path3, f)).values, f)
    c = MClass(path_null, [1, np.nan, 1])
    q = qcr(path_null, c)
    np.testing.assert_allclose(q.values, [1, 1, 1])
    assert abs(q).allclose(qcr(path_null, abs(c)))


def test_normqcr_counterexample(path_null):
    c = MClass(path_null, [-1, np.nan, 1])
    assert not normqcr_applies(path_null, c)
    assert not abs(qcr(path_null, c)).allclose(qcr(path_null, abs(c)))


def test_regimes(k2, path_null):
    assert regime(k2) is Regime.R1_FULLY_CHARGED
    assert regime(path_null) is Regime.R2_WITH_NULL_VERTICES


def test_qu_convergence_examples(k2):
    f = np.array([1.0, 2.0])
    assert qu_convergence(k2, [f + 3, f, f, f, f, f], f).converges
    seq = [np.array([1.0 / n, 0.0]) for n in range(1, 201)]
    v = qu_convergence(k2, seq, np.zeros(2))
    assert v.converges and v.summable and v.subsequence[:3] == [1, 3, 7]


@settings(max_examples=60, deadline=None)
@given(space_and_functions(k=2, max_n=9))
def test_scan_matches_brute_and_sandwich(args):
    s, f, g = args
    a = dqu(s, f, g)
    assert a == pytest.approx(dqu(s, f, g, "brute_force"), abs=1e-12)
    assert dcap(s, f, g) <= a + 1e-10 and a <= 2 * np.sqrt(dcap(s, f, g)) + 1e-10


@settings(max_examples=60, deadline=None)
@given(space_and_functions(k=2, max_n=8, null_fraction=0.4))
def test_qcr_properties(args):
    s, f, g = args
    c, d = MClass(s, f), MClass(s, g)
    q = qcr(s, c)
    assert pr_project(q) == c
    assert qcr(s, 2 * c - d).allclose(2 * q - qcr(s, d), 1e-10)
    assert is_canonical(s, q.values)
    if normqcr_applies(s, c):
        assert abs(q).allclose(qcr(s, abs(c)), 1e-10)
    assert check_linkqusob(s, f, g).passed
