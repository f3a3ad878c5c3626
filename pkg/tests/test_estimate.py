import dataclasses
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from wsbm.core import BasisSpec, BlockModelParams, Beta, FunctionalSpec, Network
from wsbm.errors import ConfigError, IllConditionedError, VanishingShareError
from wsbm.estimate import (
    align_to_truth,
    canonical_labeling,
    estimate_cdf,
    estimate_density,
    estimate_functional,
    estimate_H,
    estimate_p,
    fit,
    rate_bandwidth,
)
from wsbm.simulate import draw_network, population_moments, population_path_moment, binary_design

D1 = binary_design(1)
D1_BASIS = BasisSpec.indicator([0.0, 1.0])
G1 = D1.loading_matrix(D1_BASIS)
M1 = population_path_moment(D1, D1_BASIS, FunctionalSpec.constant())
H1 = estimate_H(G1, M1)


# --- p -------------------------------------------------------------------------


def test_p_population_design1():
    a = population_moments(D1, D1_BASIS).a_hat
    p, p_norm = estimate_p(G1, a)
    np.testing.assert_allclose(p, [0.3, 0.7], atol=1e-12)
    np.testing.assert_allclose(p_norm, [0.3, 0.7], atol=1e-12)


def test_p_single_community():
    G = np.array([[0.4], [0.9], [0.2]])
    p, _ = estimate_p(G, G[:, 0])
    assert p[0] == pytest.approx(1.0, abs=1e-14)


def test_p_orthonormal_columns():
    G = np.linalg.qr(np.random.default_rng(0).normal(size=(4, 2)))[0]
    p, _ = estimate_p(G, G @ [0.5, 0.5])
    np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-14)


def test_p_normalized_clips():
    G = np.eye(2)
    p, p_norm = estimate_p(G, [-0.1, 0.8])
    np.testing.assert_allclose(p, [-0.1, 0.8])
    np.testing.assert_allclose(p_norm, [0.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), l=st.integers(2, 6), r=st.integers(1, 2))
def test_p_residual_orthogonal(seed, l, r):
    rng = np.random.default_rng(seed)
    G = rng.uniform(size=(l, r))
    if np.linalg.cond(G) > 1e6:
        return
    a = rng.uniform(size=l)
    p, _ = estimate_p(G, a)
    assert np.abs(G.T @ (a - G @ p)).max() <= 1e-10


def test_ill_conditioned_rejected():
    G = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-12]])
    with pytest.raises(IllConditionedError):
        estimate_p(G, [1.0, 1.0])
    with pytest.raises(IllConditionedError):
        estimate_H(G, np.eye(2))


# --- H and phi ------------------------------------------------------------------


def test_H_population():
    np.testing.assert_allclose(H1, [[0.09, 0.21], [0.21, 0.49]], atol=1e-12)
    M = population_path_moment(D1, D1_BASIS, FunctionalSpec.moment(1))
    np.testing.assert_allclose(estimate_H(G1, M), [[0.018, 0.0], [0.0, 0.196]], atol=1e-12)
    np.testing.assert_array_equal(estimate_H(G1, np.zeros((2, 2))), 0.0)


def test_functional_population_design1():
    M = population_path_moment(D1, D1_BASIS, FunctionalSpec.moment(1))
    fe = estimate_functional(G1, H1, M)
    np.testing.assert_allclose(fe.phi_hat, [[0.2, 0.0], [0.0, 0.4]], atol=1e-12)


def test_functional_equal_to_H1_gives_ones():
    fe = estimate_functional(G1, H1, M1)
    np.testing.assert_allclose(fe.phi_hat, 1.0, rtol=1e-12)


def test_vanishing_H1():
    with pytest.raises(VanishingShareError):
        estimate_functional(G1, np.array([[0.1, 1e-9], [1e-9, 0.2]]), M1)


def test_cdf_population_design1():
    M = population_path_moment(D1, D1_BASIS, FunctionalSpec.cdf(0.5))
    np.testing.assert_allclose(estimate_functional(G1, H1, M).phi_hat, [[0.8, 1.0], [1.0, 0.6]], atol=1e-12)


# --- pipeline ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def d1_fit():
    net = draw_network(D1, 100, seed=3).net
    return net, fit(net, 2, functionals=[FunctionalSpec.moment(1)])


def test_fit_fields(d1_fit):
    net, est = d1_fit
    assert est.r == 2 and est.G_hat.shape == (2, 2) and est.converged
    assert est.moments.n == 100
    phi = est.functionals[0].phi_hat
    assert np.abs(phi - phi.T).max() <= 1e-10
    assert np.abs(est.G_hat.T @ (est.moments.a_hat - est.G_hat @ est.p_hat)).max() <= 1e-10


def test_fit_rejects_small_basis():
    net = draw_network(D1, 20, seed=0).net
    with pytest.raises(ConfigError):
        fit(net, 3, basis=D1_BASIS)


def test_cdf_saturation_and_rearrangement(d1_fit):
    net, est = d1_fit
    lo, hi = estimate_cdf(net, est, [-1.0, 2.0])
    np.testing.assert_allclose(lo.phi_hat, 0.0, atol=1e-12)
    np.testing.assert_allclose(hi.phi_hat, 1.0, atol=1e-10)
    xs = [0.9, -0.5, 0.5, 0.0]
    F = np.stack([fe.phi_hat for fe in estimate_cdf(net, est, xs, rearrange=True)])
    order = np.argsort(xs)
    assert np.all(np.diff(F[order], axis=0) >= 0)


def test_cdf_raw_matches_rearranged_when_monotone(d1_fit):
    net, est = d1_fit
    raw = estimate_cdf(net, est, [0.0, 1.0])
    rear = estimate_cdf(net, est, [0.0, 1.0], rearrange=True)
    if np.all(raw[1].phi_hat >= raw[0].phi_hat):
        for a, b in zip(raw, rear):
            np.testing.assert_array_equal(a.phi_hat, b.phi_hat)


def test_basis_scaling_invariance():
    params = BlockModelParams((0.4, 0.6), ((Beta(2, 5), Beta(2, 2)), (Beta(2, 2), Beta(5, 2))))
    net = draw_network(params, 80, seed=1).net
    t = (0.3, 0.5, 0.7)
    plain = BasisSpec.custom([lambda x, c=c: (x <= c).astype(float) for c in t])
    scaled = BasisSpec.custom([lambda x, c=c: -3.5 * (x <= c).astype(float) for c in t])
    phis = [FunctionalSpec.moment(1), FunctionalSpec.cdf(0.5)]
    a = canonical_labeling(fit(net, 2, basis=plain, functionals=phis))
    b = canonical_labeling(fit(net, 2, basis=scaled, functionals=phis))
    for fa, fb in zip(a.functionals, b.functionals):
        assert np.abs(fa.phi_hat - fb.phi_hat).max() <= 1e-8
    np.testing.assert_allclose(a.p_hat, b.p_hat, atol=1e-8)


# --- density ------------------------------------------------------------------------


def test_density_uniform_single_community():
    params = BlockModelParams((1.0,), ((Beta(1, 1),),))
    net = draw_network(params, 300, seed=0).net
    est = fit(net, 1)
    grid = np.linspace(0.2, 0.8, 25)
    de = estimate_density(net, est, grid, bandwidth=300 ** -0.4)
    assert np.abs(de.f_hat[0, 0] - 1.0).max() <= 0.1
    full = estimate_density(net, est, np.linspace(0, 1, 101), bandwidth=300 ** -0.4)
    assert 0.9 <= trapezoid(full.f_hat[0, 0], full.grid) <= 1.1


def test_density_two_communities_symmetric():
    params = BlockModelParams((0.4, 0.6), ((Beta(2, 5), Beta(2, 2)), (Beta(2, 2), Beta(5, 2))))
    net = draw_network(params, 150, seed=2).net
    est = fit(net, 2)
    grid = np.linspace(-0.1, 1.1, 61)
    de = estimate_density(net, est, grid)
    assert de.f_hat.shape == (2, 2, 61) and de.kernel == "epanechnikov"
    assert de.bandwidth == pytest.approx(rate_bandwidth(net))
    assert np.abs(de.f_hat - de.f_hat.transpose(1, 0, 2)).max() <= 1e-10
    ints = trapezoid(de.f_hat, grid, axis=-1)
    assert np.all((ints > 0.9) & (ints < 1.1))


def test_density_warnings_and_errors(d1_fit):
    net, est = d1_fit
    with pytest.warns(UserWarning):
        estimate_density(net, est, [0.5], bandwidth=0.2)  # binary data
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.warns(UserWarning, match="below 1/n"):
            estimate_density(net, est, [0.5], bandwidth=1e-4)
    with pytest.raises(ConfigError):
        estimate_density(net, est, [0.5], bandwidth=0.0)
    with pytest.raises(ConfigError):
        estimate_density(net, est, [0.5], kernel="box")


# --- labeling ---------------------------------------------------------------------


def test_canonical_labeling_sorts(d1_fit):
    _, est = d1_fit
    flipped = dataclasses.replace(
        est,
        p_hat=np.array([0.7, 0.3]),
        p_normalized=np.array([0.7, 0.3]),
        label_order=(0, 1),
    )
    out = canonical_labeling(flipped)
    np.testing.assert_array_equal(out.p_hat, [0.3, 0.7])
    assert out.label_order == (1, 0)
    np.testing.assert_array_equal(out.G_hat, flipped.G_hat[:, ::-1])


def test_canonical_labeling_identity_when_sorted(d1_fit):
    _, est = d1_fit
    once = canonical_labeling(est)
    twice = canonical_labeling(once)
    assert twice.label_order == once.label_order
    np.testing.assert_array_equal(twice.functionals[0].phi_hat, once.functionals[0].phi_hat)


def test_canonical_labeling_round_trip(d1_fit):
    _, est = d1_fit
    out = canonical_labeling(est)
    inv = np.argsort(out.label_order)
    np.testing.assert_array_equal(out.functionals[0].phi_hat[np.ix_(inv, inv)], est.functionals[0].phi_hat)
    np.testing.assert_array_equal(out.H1_hat[np.ix_(inv, inv)], est.H1_hat)
    _, fes = canonical_labeling(est, est.functionals)
    np.testing.assert_array_equal(fes[0].phi_hat, out.functionals[0].phi_hat)


def test_align_to_truth():
    phi = np.array([[0.2, 0.0], [0.0, 0.4]])
    perm = align_to_truth(np.array([0.71, 0.29]), phi[::-1, ::-1], np.array([0.3, 0.7]), phi)
    np.testing.assert_array_equal(perm, [1, 0])
