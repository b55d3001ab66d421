import numpy as np
import pytest
from hypothesis import strategies as st

from capmod import build_space
from capmod.generators import random_space


@pytest.fixture
def k2():
    return build_space({"a": 1.0, "b": 1.0}, [("a", "b", 1.0)])


@pytest.fixture
def path_null():
    """Path a-b-c with a massless middle vertex."""
    return build_space({"a": 1.0, "b": 0.0, "c": 1.0}, [("a", "b", 1.0), ("b", "c", 1.0)])


@pytest.fixture
def path3():
    return build_space({"a": 1.0, "b": 1.0, "c": 1.0}, [("a", "b", 1.0), ("b", "c", 1.0)])


@st.composite
def spaces(draw, min_n=2, max_n=8, null_fraction=None, connected=True):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_n, max_n))
    nf = draw(st.sampled_from([0.0, 0.3])) if null_fraction is None else null_fraction
    return random_space(np.random.default_rng(seed), n, null_fraction=nf, connected=connected)


@st.composite
def space_and_functions(draw, k=2, **kw):
    s = draw(spaces(**kw))
    vals = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
    fs = [np.array(draw(st.lists(vals, min_size=s.n, max_size=s.n))) for _ in range(k)]
    return (s, *fs)
