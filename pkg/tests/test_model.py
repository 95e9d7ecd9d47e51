import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netid.model import (AgentData, Network, ShockMatrix, Theta, WeightedLinkConfig, delta_index, dyadic_z,
                         fixed_effect_residual, hexad_config, incidence_sums, pair, reparametrize_fixed_effects,
                         retained_and_differenced, tetrad_config, three_link_triad_config, two_link_triad_config,
                         weighted_star_config)


def test_pair_is_canonical():
    assert pair(3, 1) == (1, 3)
    with pytest.raises(ValueError):
        pair(2, 2)


def test_network_validation():
    with pytest.raises(ValueError, match="symmetric"):
        Network(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError, match="diagonal"):
        Network(np.eye(2, dtype=int))
    with pytest.raises(ValueError, match="binary"):
        Network(np.array([[0, 2], [2, 0]]))


def test_network_is_read_only_and_edges_roundtrip():
    net = Network.from_edges(4, [(0, 1), (3, 2)])
    assert net.edges() == [(0, 1), (2, 3)]
    assert net.neighbors(2) == {3}
    with pytest.raises(ValueError):
        net.adjacency[0, 2] = 1
    net2 = net.with_links({(0, 2): 1, (0, 1): 0})
    assert net2.edges() == [(0, 2), (2, 3)]
    assert Network.complete(4).degree().tolist() == [3, 3, 3, 3]


def test_agent_support_membership():
    AgentData([[0.0], [1.0]], [0.0, 0.0], support=[0.0, 1.0])
    with pytest.raises(ValueError, match="support"):
        AgentData([[0.0], [0.5]], [0.0, 0.0], support=[0.0, 1.0])
    with pytest.raises(ValueError, match="rows"):
        AgentData([[0.0], [1.0]], [0.0])


def test_shocks_need_symmetry():
    with pytest.raises(ValueError):
        ShockMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]))
    s = ShockMatrix(np.array([[5.0, 1.0], [1.0, 7.0]]))
    assert s.eps[0, 0] == 0.0 and s.eps[1, 1] == 0.0


def test_delta_index_and_dimensions():
    th = Theta([1.0, 2.0], [4.0])
    assert delta_index([1.0, 0.5], [0.25], th) == 3.0
    with pytest.raises(ValueError):
        delta_index([1.0], [0.25], th)


def test_dyadic_z_is_symmetric_abs_difference():
    agents = AgentData([[0.0, 1.0], [3.0, -1.0], [1.0, 1.0]], np.zeros(3))
    Z = dyadic_z(agents)
    assert Z.shape == (3, 3, 2)
    assert Z[0, 1].tolist() == [3.0, 2.0]
    assert np.array_equal(Z, Z.transpose(1, 0, 2))
    with pytest.raises(ValueError, match="symmetric"):
        dyadic_z(agents, lambda a, b: a - b)


def test_reparametrize_flips_sign():
    agents = AgentData([[0.0], [1.0]], [0.5, -2.0])
    assert reparametrize_fixed_effects(agents).A.tolist() == [-0.5, 2.0]


@pytest.mark.parametrize("cfg, retained", [
    (tetrad_config(), ()),
    (three_link_triad_config(), (0,)),
    (two_link_triad_config(), (1, 2)),
    (weighted_star_config(), (1, 2, 3)),
    (hexad_config(), ()),
])
def test_retained_agents_of_standard_configs(cfg, retained):
    S_R, S_0 = retained_and_differenced(cfg)
    assert S_R == retained
    assert set(S_R) | set(S_0) == set(cfg.agents)


def test_tetrad_incidence_is_zero():
    assert all(v == 0 for v in incidence_sums(tetrad_config()).values())
    assert tetrad_config().E_plus == ((0, 1), (2, 3))
    assert tetrad_config().E_minus == ((0, 3), (1, 2))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=6, max_size=6))
def test_differenced_agents_drop_out_of_fixed_effect_residual(A):
    """Only retained agents contribute: residual = sum_a sigma_a A_a."""
    for cfg in (tetrad_config(), three_link_triad_config(), weighted_star_config(), hexad_config()):
        sigma = incidence_sums(cfg)
        expect = sum(sigma[a] * A[a] for a in cfg.agents)
        assert fixed_effect_residual(cfg, A) == pytest.approx(expect, abs=1e-9)


def test_config_validation():
    with pytest.raises(ValueError, match="zero weights"):
        WeightedLinkConfig((0, 1), ((0, 1),), (0,))
    with pytest.raises(ValueError, match="outside"):
        WeightedLinkConfig((0, 1), ((0, 2),), (1,))
    with pytest.raises(ValueError, match="duplicate"):
        WeightedLinkConfig((0, 1), ((0, 1), (1, 0)), (1, -1))


def test_non_integer_weights_use_tolerance():
    cfg = WeightedLinkConfig((0, 1, 2), ((0, 1), (0, 2)), (0.1 + 0.2, -0.3))
    S_R, _ = retained_and_differenced(cfg)
    assert 0 not in S_R


def test_network_value_equality():
    a = Network.from_edges(3, [(0, 1)])
    assert a == Network.from_edges(3, [(1, 0)])
    assert a != Network.empty(3)
    assert len({a, Network.from_edges(3, [(0, 1)])}) == 1
