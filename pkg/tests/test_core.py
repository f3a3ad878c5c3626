import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsbm.core import (
    BasisSpec,
    Bernoulli,
    Beta,
    BlockModelParams,
    Discrete,
    FunctionalSpec,
    Network,
    Normal,
    PointMass,
    apply_basis,
    default_basis,
    validate_network,
)
from wsbm.errors import ConfigError, NetworkValidationError

from conftest import random_network


class TestValidateNetwork:
    def test_two_nodes_too_few(self):
        with pytest.raises(NetworkValidationError) as err:
            validate_network(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert err.value.reason == "too-few-nodes"

    def test_zero_matrix_ok(self):
        assert validate_network(Network(np.zeros((5, 5)))) is None

    def test_asymmetric_reports_pair(self):
        W = np.zeros((5, 5))
        W[1, 2] = 1.0
        W[2, 1] = 2.0
        with pytest.raises(NetworkValidationError) as err:
            validate_network(W)
        assert err.value.reason == "asymmetric-weights"
        assert err.value.pair == (1, 2)

    def test_non_finite(self):
        W = np.zeros((5, 5))
        W[0, 3] = W[3, 0] = np.inf
        with pytest.raises(NetworkValidationError) as err:
            validate_network(W)
        assert err.value.reason == "non-finite-entry"
        assert err.value.pair == (0, 3)

    def test_diagonal_ignored(self):
        W = np.zeros((4, 4))
        W[0, 0] = np.nan
        net = Network(W)
        validate_network(net)
        assert net.edge_values().tolist() == [0.0] * 6

    def test_network_is_read_only(self):
        net = Network(np.zeros((4, 4)))
        with pytest.raises(ValueError):
            net.weights[0, 1] = 3.0


class TestApplyBasis:
    def test_indicator_at_zero(self):
        np.testing.assert_array_equal(apply_basis(BasisSpec.indicator((0, 1)), 0.0), [1, 1])

    def test_indicator_at_one(self):
        np.testing.assert_array_equal(apply_basis(BasisSpec.indicator((0, 1)), 1.0), [0, 1])

    def test_polynomial(self):
        np.testing.assert_array_equal(apply_basis(BasisSpec.polynomial(2), 0.5), [1, 0.5, 0.25])

    def test_custom(self):
        spec = BasisSpec.custom([np.sin, np.cos])
        np.testing.assert_allclose(apply_basis(spec, 0.3), [np.sin(0.3), np.cos(0.3)])

    def test_thresholds_must_increase(self):
        with pytest.raises(ConfigError):
            BasisSpec.indicator((1.0, 0.0))
        with pytest.raises(ConfigError):
            BasisSpec.indicator((0.0, 0.0))

    @given(
        st.lists(st.floats(-10, 10), min_size=1, max_size=6, unique=True),
        st.floats(-20, 20),
        st.floats(0, 5),
    )
    def test_indicator_monotone_non_increasing(self, thresholds, x, dx):
        spec = BasisSpec.indicator(sorted(thresholds))
        assert np.all(apply_basis(spec, x + dx) <= apply_basis(spec, x))

    def test_transform_zero_diagonal(self):
        net = random_network(6, 1)
        B = BasisSpec.polynomial(2).transform(net)
        assert B.shape == (3, 6, 6)
        assert np.all(np.diagonal(B, axis1=1, axis2=2) == 0)
        i, j = 2, 4
        np.testing.assert_array_equal(B[:, i, j], apply_basis(BasisSpec.polynomial(2), net.weights[i, j]))


class TestDefaultBasis:
    def test_binary_grid(self):
        net = random_network(10, 0, "binary")
        assert default_basis(net, 2) == BasisSpec.indicator((0.0, 1.0))

    def test_continuous_quantiles(self):
        net = random_network(30, 0)
        b = default_basis(net, 2)
        assert b.l == 5
        np.testing.assert_allclose(b.thresholds, np.quantile(net.edge_values(), np.arange(1, 6) / 6))

    def test_size_follows_r(self):
        assert default_basis(random_network(30, 0), 6).l == 7

    def test_deduplicated(self):
        b = default_basis(random_network(30, 2, "integer"), 2)
        assert len(set(b.thresholds)) == b.l <= 3


class TestBlockModelParams:
    def test_requires_positive_shares(self):
        with pytest.raises(ConfigError):
            BlockModelParams.bernoulli((0.0, 1.0), [[0.1, 0.1], [0.1, 0.1]])
        with pytest.raises(ConfigError):
            BlockModelParams.bernoulli((0.5, 0.6), [[0.1, 0.1], [0.1, 0.1]])

    def test_requires_symmetric_laws(self):
        with pytest.raises(ConfigError):
            BlockModelParams((0.5, 0.5), ((Bernoulli(0.1), Bernoulli(0.2)), (Bernoulli(0.3), Bernoulli(0.1))))

    def test_loading_matrix_design1(self):
        params = BlockModelParams.bernoulli((0.3, 0.7), [[0.2, 0.0], [0.0, 0.4]])
        G = params.loading_matrix(BasisSpec.indicator((0, 1)))
        # F_z(0) = 1 - P(X = 1 | z): P(X=1|z=0) = 0.3*0.2, P(X=1|z=1) = 0.7*0.4
        np.testing.assert_allclose(G, [[1 - 0.06, 1 - 0.28], [1.0, 1.0]], atol=1e-15)

    def test_json_round_trip_bit_exact(self):
        params = BlockModelParams(
            (0.1 + 0.2, 1 - (0.1 + 0.2)),
            (
                (Beta(2.0 / 3.0, 5.0), Normal(np.pi, 1e-3)),
                (Normal(np.pi, 1e-3), Discrete((0.1, 7.0), (1 / 3, 2 / 3))),
            ),
        )
        back = BlockModelParams.from_dict(json.loads(json.dumps(params.to_dict())))
        assert back == params
        assert back.p[0].hex() == params.p[0].hex()

    @given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=4), st.data())
    @settings(max_examples=30)
    def test_bernoulli_round_trip(self, weights, data):
        p = np.asarray(weights) / np.sum(weights)
        p[-1] = 1.0 - np.sum(p[:-1])
        if p[-1] <= 0:
            return
        r = len(p)
        theta = np.zeros((r, r))
        for a in range(r):
            for b in range(a, r):
                theta[a, b] = theta[b, a] = data.draw(st.floats(0, 1))
        params = BlockModelParams.bernoulli(tuple(p), theta)
        assert BlockModelParams.from_dict(json.loads(json.dumps(params.to_dict()))) == params


class TestLaws:
    @pytest.mark.parametrize(
        "law",
        [PointMass(2.5), Bernoulli(0.3), Discrete((0.0, 1.0, 4.0), (0.2, 0.5, 0.3)), Beta(2, 5), Normal(1, 2)],
    )
    def test_ppf_matches_cdf(self, law):
        u = np.linspace(0.01, 0.99, 99)
        x = law.ppf(u)
        assert np.all(np.diff(x) >= 0)
        assert np.all(law.cdf(x) >= u - 1e-12)

    def test_functional_population_values(self):
        law = Beta(2, 2)
        assert FunctionalSpec.cdf(0.5).population_value(law) == pytest.approx(0.5)
        assert FunctionalSpec.moment(1).population_value(law) == pytest.approx(0.5)
        # pdf 6x(1-x) is quadratic, so smoothing shifts it by exactly h^2/2 * mu2(K) * f'' = -0.003
        dens = FunctionalSpec.density(0.5, 0.05, "epanechnikov").population_value(law)
        assert dens == pytest.approx(1.497, abs=1e-9)
        assert FunctionalSpec.pmf(1.0).population_value(Bernoulli(0.25)) == 0.25

    def test_kernels_integrate_to_one(self):
        from scipy.integrate import quad

        from wsbm.core import KERNELS

        for name, k in KERNELS.items():
            assert quad(lambda u: float(k(np.array(u))), -10, 10, points=[-1, 1])[0] == pytest.approx(1.0)

    def test_density_bandwidth_positive(self):
        with pytest.raises(ConfigError):
            FunctionalSpec.density(0.0, 0.0)
