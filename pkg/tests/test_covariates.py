import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netid.covariates import (CovariateSpec, check_cpi, check_local_externality, common_friends,
                              common_friends_matrix, compute_all, jaccard, jaccard_matrix)
from netid.model import Network


def adjacency(n, bits):
    Y = np.zeros((n, n), dtype=np.int8)
    for (i, j), b in zip(itertools.combinations(range(n), 2), bits):
        Y[i, j] = Y[j, i] = b
    return Y


def random_networks(n):
    return st.lists(st.integers(0, 1), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2).map(
        lambda b: Network(adjacency(n, b)))


def test_common_friends_triangle_plus_pendant():
    net = Network.from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    assert common_friends(net, 0, 1) == 1
    assert common_friends(net, 0, 3) == 1
    assert common_friends(net, 1, 3) == 1


def test_jaccard_conventions():
    assert jaccard(Network.empty(3), 0, 1) == 0.0
    net = Network.from_edges(3, [(0, 2), (1, 2)])
    assert jaccard(net, 0, 1) == 1.0
    # own link enters the union: N(0) = {1, 2}, N(1) = {0, 2}
    net = Network.from_edges(3, [(0, 1), (0, 2), (1, 2)])
    assert jaccard(net, 0, 1) == pytest.approx(1 / 3)


@settings(max_examples=40, deadline=None)
@given(random_networks(7))
def test_matrix_forms_agree_with_pairwise(net):
    C = common_friends_matrix(net.adjacency)
    J = jaccard_matrix(net.adjacency)
    for i, j in itertools.combinations(range(7), 2):
        assert C[i, j] == common_friends(net, i, j)
        assert J[i, j] == pytest.approx(jaccard(net, i, j), abs=0)
    assert np.array_equal(C, C.T) and np.all(np.diag(C) == 0)


@settings(max_examples=15, deadline=None)
@given(random_networks(5))
def test_local_externality_holds_for_both_covariates(net):
    assert check_local_externality(CovariateSpec.common_friends(), net)
    assert check_local_externality(CovariateSpec.jaccard(), net)


def test_local_externality_fails_for_a_global_statistic():
    spec = CovariateSpec.custom(lambda Y, i, j: float(Y.sum()) / 2, 0, 100)
    assert not check_local_externality(spec, Network.from_edges(4, [(0, 1)]))


def test_cpi_common_friends_on_admissible_tetrads():
    net = Network.from_edges(6, [(0, 4), (1, 4), (2, 5), (3, 5), (0, 5)])
    assert check_cpi(CovariateSpec.common_friends(), net, (0, 1, 2, 3))


def test_cpi_rejects_diagonal_link():
    net = Network.from_edges(4, [(0, 2)])
    with pytest.raises(ValueError, match="not admissible"):
        check_cpi(CovariateSpec.common_friends(), net, (0, 1, 2, 3))


def test_custom_covariate_bounds_checked():
    spec = CovariateSpec.custom(lambda Y, i, j: 5.0, 0.0, 1.0)
    with pytest.raises(ValueError, match="outside"):
        compute_all(Network.empty(3), spec)


def test_box():
    assert CovariateSpec.common_friends().box(10) == (0.0, 8.0)
    assert CovariateSpec.jaccard().box(10) == (0.0, 1.0)


def test_jaccard_on_complete_graph_of_four():
    J = compute_all(Network.complete(4), CovariateSpec.jaccard())
    off = ~np.eye(4, dtype=bool)
    assert np.all(J[off] == 0.5)
    assert np.all(compute_all(Network.empty(4), CovariateSpec.jaccard()) == 0)
