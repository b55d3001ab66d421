import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capmod import (SpaceError, build_space, grid_1d, grid_2d, shortest_path_metric,
                    space_from_json, space_to_json)
from capmod.space import UNREACHABLE, as_mask, bits_to_mask, grid_1d_coordinates, mask_to_bits

from conftest import spaces


def test_default_exhaustion_is_whole_space(k2):
    assert len(k2.exhaustion) == 1
    assert k2.exhaustion[0].all()
    assert k2.constant_exhaustion
    assert k2.exhaustion_weights.tolist() == [1.0]


def test_nested_exhaustion_accepted():
    s = build_space({"a": 1, "b": 1}, [("a", "b", 1.0)], [["a"], ["a", "b"]])
    assert not s.constant_exhaustion
    assert s.exhaustion_weights.tolist() == [0.5, 0.5]


@pytest.mark.parametrize(
    "vertices, edges, exhaustion, match",
    [
        ({"a": 1}, [("a", "a", 1.0)], None, "self-loop"),
        ([("a", 1), ("a", 2)], [], None, "duplicate vertex"),
        ({"a": 1}, [("a", "z", 1.0)], None, "not a declared vertex"),
        ({"a": 1, "b": 1}, [("a", "b", 0.0)], None, "weight"),
        ({"a": 1, "b": 1}, [("a", "b", -2.0)], None, "weight"),
        ({"a": -1}, [], None, "mass"),
        ({"a": 1, "b": 1}, [("a", "b", 1.0), ("b", "a", 2.0)], None, "duplicate edge"),
        ({"a": 1, "b": 1}, [], [["a"], ["b"]], "nested"),
        ({"a": 1, "b": 1}, [], [["a"]], "exhaust"),
        ({"a": 1, "b": 1}, [], [[], ["a", "b"]], "empty"),
    ],
)
def test_build_space_rejects(vertices, edges, exhaustion, match):
    with pytest.raises(SpaceError, match=match):
        build_space(vertices, edges, exhaustion)


def test_path_metric(path3):
    d = shortest_path_metric(path3)
    assert d("a", "c") == 2.0
    assert d("a", "a") == 0.0


def test_metric_single_vertex_and_components():
    assert shortest_path_metric(build_space({"x": 1}, []))("x", "x") == 0.0
    s = build_space({"a": 1, "b": 1, "c": 1}, [("a", "b", 1.0)])
    d = shortest_path_metric(s)
    assert d("a", "c") == UNREACHABLE == math.inf


def test_grid_metric_reproduces_coordinates():
    s = grid_1d(-1.0, 2.0, 7)
    x = grid_1d_coordinates(-1.0, 2.0, 7)
    d = shortest_path_metric(s).distances
    np.testing.assert_allclose(d, np.abs(x[:, None] - x[None, :]), atol=1e-12)
    alt = shortest_path_metric(s, length="inverse_sqrt").distances
    assert alt[0, 1] == pytest.approx(np.sqrt(0.5))


def test_grid_1d_examples():
    s = grid_1d(0, 1, 3)
    np.testing.assert_allclose(s.mass, [0.25, 0.5, 0.25])
    assert s.n_edges == 2 and np.allclose(s.weights, 2.0)
    two = grid_1d(0, 4, 2)
    assert two.n_edges == 1 and two.weights[0] == pytest.approx(0.25)
    with pytest.raises(SpaceError):
        grid_1d(1, 1, 3)
    with pytest.raises(SpaceError):
        grid_1d(0, 1, 1)


def test_grid_2d_examples():
    s = grid_2d(0, 1, 2)
    assert (s.n, s.n_edges) == (4, 4) and np.all(s.weights == 1)
    s = grid_2d(0, 1, 3)
    assert (s.n, s.n_edges) == (9, 12)
    assert s.mass[s.index["1_1"]] == pytest.approx(0.25)
    assert s.total_mass == pytest.approx(1.0)
    with pytest.raises(SpaceError):
        grid_2d(0, 1, 1)


@given(lo=st.floats(-50, 50),
       width=st.floats(0.01, 100),
       n=st.integers(2, 400))
def test_grid_1d_total_mass(lo, width, n):
    assert grid_1d(lo, lo + width, n).total_mass == pytest.approx(width, abs=1e-12 * max(1, width))


@settings(max_examples=40, deadline=None)
@given(spaces(max_n=12, connected=False))
def test_metric_axioms(s):
    d = shortest_path_metric(s).distances
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0)
    off = ~np.eye(s.n, dtype=bool)
    assert np.all(d[off] > 0)
    for j in range(s.n):
        assert np.all(d <= d[:, [j]] + d[[j], :] + 1e-12)


@settings(max_examples=30, deadline=None)
@given(spaces(max_n=10))
def test_json_roundtrip(s):
    t = space_from_json(json.loads(json.dumps(space_to_json(s))))
    assert t.ids == s.ids
    assert np.array_equal(t.mass, s.mass) and np.array_equal(t.weights, s.weights)
    assert np.array_equal(t.edges, s.edges)


def test_json_rejects_unknown_fields():
    good = {"vertices": [{"id": "a", "mass": 1}], "edges": []}
    with pytest.raises(SpaceError, match="colour"):
        space_from_json({**good, "colour": 1})
    with pytest.raises(SpaceError, match="charge"):
        space_from_json({"vertices": [{"id": "a", "mass": 1, "charge": 2}], "edges": []})


def test_masks_and_bits(path3):
    m = as_mask(path3, ["a", "c"])
    assert m.tolist() == [True, False, True]
    assert mask_to_bits(m) == 0b101
    assert bits_to_mask(0b101, 3).tolist() == m.tolist()
    assert as_mask(path3, 0b010).tolist() == [False, True, False]
    with pytest.raises(SpaceError):
        as_mask(path3, ["q"])


def test_cap_null_is_massless_component():
    s = build_space({"a": 1, "b": 0, "c": 0, "d": 0}, [("a", "b", 1.0), ("c", "d", 1.0)])
    assert s.m_null.tolist() == [False, True, True, True]
    assert s.cap_null.tolist() == [False, False, True, True]
