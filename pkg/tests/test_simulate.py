import numpy as np
import pytest

from wsbm.core import BlockModelParams, Normal, PointMass, validate_network
from wsbm.errors import ConfigError
from wsbm.simulate import draw_labels, draw_network, binary_design

from conftest import BACKENDS


def test_point_mass_network():
    params = BlockModelParams((1.0,), ((PointMass(3.0),),))
    draw = draw_network(params, 5, seed=0)
    assert np.all(draw.net.edge_values() == 3.0)


def test_same_seed_identical():
    a = draw_network(binary_design(1), 40, seed=9)
    b = draw_network(binary_design(1), 40, seed=9)
    np.testing.assert_array_equal(a.net.weights, b.net.weights)
    np.testing.assert_array_equal(a.z, b.z)
    c = draw_network(binary_design(1), 40, seed=10)
    assert not np.array_equal(a.net.weights, c.net.weights)


def test_backend_independent():
    draws = [draw_network(binary_design(2), 30, seed=4, backend=b) for b in BACKENDS]
    for d in draws[1:]:
        np.testing.assert_array_equal(d.net.weights, draws[0].net.weights)


def test_output_is_valid_network():
    validate_network(draw_network(binary_design(3), 12, seed=1).net)


def test_requires_four_nodes():
    with pytest.raises(ConfigError):
        draw_network(binary_design(1), 3, seed=0)


def test_prefix_stable_in_n():
    # edge (i, j) depends only on (seed, i, j) and the labels of i and j
    small = draw_network(binary_design(1), 20, seed=3)
    big = draw_network(binary_design(1), 35, seed=3)
    np.testing.assert_array_equal(big.z[:20], small.z)
    np.testing.assert_array_equal(big.net.weights[:20, :20], small.net.weights)


def test_design1_edge_mean():
    means = np.array([draw_network(binary_design(1), 100, seed=s).net.edge_values().mean() for s in range(1000)])
    target = 0.09 * 0.2 + 0.49 * 0.4
    se = means.std(ddof=1) / np.sqrt(means.size)
    assert abs(means.mean() - target) < 3 * se


def test_label_frequencies_large_n():
    p = np.array([0.3, 0.7])
    n = 100_000
    z = draw_labels(p, n, seed=2)
    freq = np.bincount(z, minlength=2) / n
    se = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(freq - p) < 3 * se)


def test_within_block_edges_follow_law():
    params = binary_design(3)
    draw = draw_network(params, 400, seed=0)
    z = draw.z
    W = draw.net.weights
    mask = np.triu(np.ones_like(W, dtype=bool), 1)
    for a, b, theta in [(0, 0, 0.2), (0, 1, 0.0), (1, 1, 0.8)]:
        sel = mask & (((z[:, None] == a) & (z[None, :] == b)) | ((z[:, None] == b) & (z[None, :] == a)))
        x = W[sel]
        se = np.sqrt(max(theta * (1 - theta), 1e-12) / x.size)
        assert abs(x.mean() - theta) < 4 * se + 1e-12


def test_conditionally_independent_edges():
    # one community, so labels are fixed and edges must be independent
    params = BlockModelParams((1.0,), ((Normal(0.0, 1.0),),))
    X = np.array([draw_network(params, 6, seed=s).net.edge_values() for s in range(10_000)])
    C = np.corrcoef(X.T)
    iu = np.triu_indices(C.shape[0], 1)
    Xc = (X - X.mean(0)) / X.std(0)
    pooled = np.mean([np.mean(Xc[:, a] * Xc[:, b]) for a, b in zip(*iu)])
    assert abs(pooled) < 0.02
    assert np.abs(C[iu]).max() < 0.05
