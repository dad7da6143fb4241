import numpy as np
import pytest
from hypothesis import strategies as st

from ergoflow.paths import linear_path, step_path

SEED = 20261017


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@st.composite
def step_paths(draw, n_max=8, nondecreasing=False):
    """Random step path on a window starting at 0."""
    n = draw(st.integers(2, n_max))
    gaps = draw(st.lists(st.floats(0.05, 3.0), min_size=n - 1, max_size=n - 1))
    bp = np.concatenate(([0.0], np.cumsum(gaps)))
    if nondecreasing:
        inc = draw(st.lists(st.floats(0.0, 3.0), min_size=n - 1, max_size=n - 1))
        vals = np.concatenate(([0.0], np.cumsum(inc)))
    else:
        vals = np.array(draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n)))
    return step_path(bp, vals)


@st.composite
def increasing_linear_paths(draw, n_max=8):
    """Strictly increasing linear path through the origin."""
    n = draw(st.integers(2, n_max))
    dt = draw(st.lists(st.floats(0.1, 3.0), min_size=n - 1, max_size=n - 1))
    dv = draw(st.lists(st.floats(0.1, 3.0), min_size=n - 1, max_size=n - 1))
    return linear_path(np.concatenate(([0.0], np.cumsum(dt))), np.concatenate(([0.0], np.cumsum(dv))))
