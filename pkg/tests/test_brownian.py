import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from lawson_sde import brownian
from lawson_sde.brownian import GridTooLarge, WienerGrid, coarsen, generate, increment

# Seed 7, channel 1, level 3 on [0, 1]: Philox words mapped through
# statistics.NormalDist().inv_cdf and scaled by sqrt(1/8).
FROZEN = [0.4198124709913903, -0.11822875523638046, 0.015132241633835541,
          -0.15378740841208935, 0.20415129244454816, 0.20318316331905062]


def test_frozen_increments():
    g = generate(0.0, 1.0, 3, 1, 7)
    np.testing.assert_allclose(g.increments[0, :6], FROZEN, rtol=0, atol=1e-15)


def test_shape_and_clock_column():
    g = generate(0.5, 2.5, 4, 3, 1)
    assert g.increments.shape == (3, 16)
    assert g.h == 0.125 and g.n_steps == 16
    dW = g.dW()
    assert dW.shape == (16, 4)
    assert np.all(dW[:, 0] == 0.125)
    np.testing.assert_array_equal(dW[:, 1:], g.increments.T)
    np.testing.assert_allclose(g.times[[0, -1]], [0.5, 2.5])
    W = g.W()
    assert W.shape == (3, 17) and np.all(W[:, 0] == 0)
    np.testing.assert_allclose(W[:, -1], g.increments.sum(axis=1), atol=1e-14)


def test_increments_are_read_only():
    g = generate(0.0, 1.0, 2, 1, 0)
    with pytest.raises(ValueError):
        g.increments[0, 0] = 1.0


def test_deterministic_and_seed_sensitive():
    assert generate(0.0, 1.0, 6, 2, 42) == generate(0.0, 1.0, 6, 2, 42)
    assert generate(0.0, 1.0, 6, 2, 42) != generate(0.0, 1.0, 6, 2, 43)


def test_channel_streams_do_not_depend_on_channel_count():
    a = generate(0.0, 1.0, 5, 1, 9)
    b = generate(0.0, 1.0, 5, 3, 9)
    np.testing.assert_array_equal(a.increments[0], b.increments[0])


@given(st.integers(0, 2**63), st.integers(1, 3), st.integers(0, 2**10 - 1))
def test_random_access_matches_stream(seed, channel, index):
    g = generate(0.0, 2.0, 10, 3, seed)
    assert increment(seed, channel, index, 10, 0.0, 2.0) == g.increments[channel - 1, index]


def test_negative_seed_is_folded_to_64_bits():
    assert generate(0.0, 1.0, 3, 1, -1) == generate(0.0, 1.0, 3, 1, 2**64 - 1)


@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 8), st.integers(0, 2**32))
def test_coarsening_is_transitive(a, b, c, seed):
    i, j, k = sorted((a, b, c))
    g = generate(0.0, 1.0, k, 2, seed)
    assert coarsen(coarsen(g, j), i) == coarsen(g, i)


@given(st.integers(0, 7), st.integers(0, 2**32))
def test_coarse_path_hits_fine_path(level, seed):
    g = generate(0.0, 1.0, 8, 1, seed)
    c = g.coarsen(level)
    stride = 2 ** (8 - level)
    np.testing.assert_allclose(c.W(), g.W()[:, ::stride], atol=1e-13)
    assert c.h == pytest.approx(g.h * stride)


def test_coarsen_same_level_returns_grid():
    g = generate(0.0, 1.0, 3, 1, 0)
    assert coarsen(g, 3) is g
    with pytest.raises(ValueError):
        coarsen(g, 4)
    with pytest.raises(ValueError):
        coarsen(g, -1)


def test_marginal_distribution():
    g = generate(0.0, 1.0, 16, 1, 3)
    z = g.increments[0] / math.sqrt(g.h)
    assert stats.kstest(z, "norm").pvalue > 1e-3
    assert abs(z.mean()) < 4 / math.sqrt(z.size)
    assert abs(z.var() - 1) < 0.03


def test_channels_independent_over_many_seeds():
    n = 10**5
    pairs = np.array([generate(0.0, 1.0, 0, 2, s).increments[:, 0] for s in range(n)])
    r = np.corrcoef(pairs.T)[0, 1]
    assert abs(r) < 3 / math.sqrt(n)


def test_budget_and_argument_checks():
    with pytest.raises(GridTooLarge):
        generate(0.0, 1.0, 11, 1, 0, max_increments=2**10)
    with pytest.raises(ValueError):
        generate(1.0, 1.0, 2, 1, 0)
    with pytest.raises(ValueError):
        generate(0.0, 1.0, -1, 1, 0)
    with pytest.raises(ValueError):
        WienerGrid(0.0, 1.0, 2, 1, 0, np.zeros((1, 3)))


def test_dump_load_round_trip(tmp_path):
    g = generate(-1.0, 3.0, 7, 2, 2**63 + 5)
    path = tmp_path / "grid.bin"
    brownian.dump(g, path)
    assert brownian.load(path) == g
    path.write_bytes(b"nope" + path.read_bytes()[4:])
    with pytest.raises(ValueError):
        brownian.load(path)


def test_high_seeds_keep_every_bit():
    a = generate(0.0, 1.0, 2, 1, 2**63 + 5)
    b = generate(0.0, 1.0, 2, 1, 2**63 + 6)
    assert np.all(a.increments != b.increments)
