import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netid.model import Theta
from netid.structure import (RobustnessGraphs, check_tetrad_isolation, classify_from_index, classify_links,
                             greedy_pack_tetrads, strategic_neighborhoods, surplus_bounds, surplus_range)


def test_surplus_range_boxes():
    assert surplus_range([2.0], (0.0, 1.0)) == (2.0, 0.0)
    assert surplus_range([-2.0], (0.0, 1.0)) == (0.0, -2.0)
    assert surplus_range([1.0, -1.0], 3.0) == (6.0, -6.0)
    assert surplus_range([], 1.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        surplus_range([1.0, 1.0], (0.0, 1.0, 2.0))


def test_surplus_bounds():
    sb = surplus_bounds([1.0], Theta([2.0], [4.0]), 0.5, -0.5, 0.0, (0.0, 1.0))
    assert (sb.v_sup, sb.v_inf) == (6.0, 2.0)


def test_classification_rules():
    base = np.array([[0.0, -0.5, 2.0], [-0.5, 0.0, -3.0], [2.0, -3.0, 0.0]])
    g = classify_from_index(base, [1.0], (0.0, 1.0))
    assert g.D[0, 1] == 1 and g.Pi[0, 1] == 0  # straddles zero
    assert g.Pi[0, 2] == 1 and g.D[0, 2] == 0  # always present
    assert g.D[1, 2] == 0 and g.Pi[1, 2] == 0  # always absent


def test_gamma_zero_means_all_links_robust(small_full_draw):
    spec, draw = small_full_draw
    g = classify_links(draw, Theta(spec.beta0, [0.0]))
    assert g.D.sum() == 0
    nb = strategic_neighborhoods(g)
    assert all(len(c) == 1 for c in nb.components)


def test_robustness_graphs_are_exclusive():
    with pytest.raises(ValueError):
        RobustnessGraphs(np.array([[0, 1], [1, 0]]), np.array([[0, 1], [1, 0]]))


def test_neighborhoods_join_components_and_robust_neighbors():
    g = RobustnessGraphs.from_edges(6, d_edges=[(0, 1), (1, 2)], pi_edges=[(2, 3), (4, 5)])
    nb = strategic_neighborhoods(g)
    assert nb.component_of(0) == {0, 1, 2}
    assert nb.neighborhoods[0] == {0, 1, 2, 3}
    assert nb.neighborhoods[3] == {2, 3}
    assert nb.neighborhoods[4] == {4, 5}


def test_packing_on_isolated_agents():
    g = RobustnessGraphs.from_edges(9)
    packed = greedy_pack_tetrads(strategic_neighborhoods(g))
    assert packed.tetrads == [(0, 1, 2, 3), (4, 5, 6, 7)]
    assert packed.pairwise_disjoint()


def test_packing_with_z_match():
    g = RobustnessGraphs.from_edges(8)
    z = [0, 1, 0, 1, 1, 0, 0, 0]
    packed = greedy_pack_tetrads(strategic_neighborhoods(g), z_match=[1, 1, 1, 0], z=z)
    assert packed.tetrads == [(0, 1, 3, 4)]
    with pytest.raises(ValueError):
        greedy_pack_tetrads(strategic_neighborhoods(g), z_match=[1, 1, 1, 0])


@settings(max_examples=40, deadline=None)
@given(st.integers(6, 25), st.lists(st.tuples(st.integers(0, 24), st.integers(0, 24)), max_size=30),
       st.lists(st.tuples(st.integers(0, 24), st.integers(0, 24)), max_size=30))
def test_packing_is_disjoint_and_maximal(n, d_edges, pi_edges):
    d = {(min(a, b), max(a, b)) for a, b in d_edges if a != b and a < n and b < n}
    p = {(min(a, b), max(a, b)) for a, b in pi_edges if a != b and a < n and b < n} - d
    nb = strategic_neighborhoods(RobustnessGraphs.from_edges(n, d, p))
    packed = greedy_pack_tetrads(nb)
    assert packed.pairwise_disjoint()
    used = set().union(*packed.dependence_sets) if packed.tetrads else set()
    free = [a for a in range(n) if not (nb.neighborhoods[a] & used)]
    assert len(free) < 4  # nothing else fits


def test_isolation():
    g = RobustnessGraphs.from_edges(6, d_edges=[(0, 1), (1, 4)])
    nb = strategic_neighborhoods(g)
    assert not check_tetrad_isolation(nb, (0, 1, 2, 3))
    assert check_tetrad_isolation(nb, (0, 1, 4, 5))
