import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import hand_network
from cdscascade.balance import build_balance_sheets
from cdscascade.cds import assign_protection, select_sellers
from cdscascade.errors import NoEligibleSeller
from cdscascade.netgen import bank_loans, generate_topology, tune_concentration


def baseline_network(seed):
    topo = generate_topology(500, 0.05, seed)
    _, net = tune_concentration(topo, 0.3, 150.0)
    return net


# -- seller selection


def test_all_banks_when_count_equals_n():
    assets = np.array([3.0, 1.0, 2.0, 5.0])
    sellers = select_sellers(assets, 4)
    assert sorted(sellers) == [0, 1, 2, 3]
    # ordered by assets, largest first
    assert list(sellers) == [3, 0, 2, 1]


def test_tie_breaks_toward_lower_index():
    sellers = select_sellers(np.array([5.0, 9.0, 9.0, 1.0]), 2)
    assert list(sellers) == [1, 2]


def test_accepts_sheets_or_bare_assets():
    net = hand_network(3, [(0, 1), (1, 2), (2, 0)], [0.4, 0.3, 0.2])
    sheets = build_balance_sheets(net, 0.3, 0.05, allow_negative_deposits=True)
    np.testing.assert_array_equal(
        select_sellers(sheets, 2), select_sellers(sheets.assets, 2))


def test_seller_count_validation():
    assets = np.ones(5)
    with pytest.raises(ValueError):
        select_sellers(assets, 0)
    with pytest.raises(ValueError):
        select_sellers(assets, 6)


def test_largest_by_assets_mostly_largest_by_loans():
    # asset rank tracks loan rank; sets differ by at most 2 of 10 here
    overlaps = []
    for seed in range(20):
        net = baseline_network(seed)
        sheets = build_balance_sheets(net, 0.3, 0.09,
                                      allow_negative_deposits=True)
        by_assets = set(select_sellers(sheets, 10))
        by_loans = set(np.argsort(-bank_loans(net), kind="stable")[:10])
        overlaps.append(len(by_assets & by_loans))
    assert min(overlaps) >= 7
    assert np.mean(np.array(overlaps) >= 8) >= 0.9


# -- protection assignment


def test_single_seller_takes_every_edge():
    # bank 7 never lends, so it is eligible on all edges
    net = hand_network(8, [(0, 7), (1, 7), (2, 3)], [0.5, 0.3, 0.2])
    pattern = assign_protection(net, [7], seed=0)
    np.testing.assert_array_equal(pattern.edge_sellers, [7, 7, 7])
    np.testing.assert_allclose(pattern.seller_exposure, [1.0])


def test_lone_seller_cannot_insure_own_loans():
    net = hand_network(8, [(7, 0), (1, 2)], [0.6, 0.4])
    with pytest.raises(NoEligibleSeller):
        assign_protection(net, [7], seed=0)


def test_coverage_self_exclusion_and_exposure():
    for seed in (0, 1, 2):
        net = baseline_network(seed)
        sellers = select_sellers(
            build_balance_sheets(net, 0.3, 0.09,
                                 allow_negative_deposits=True), 10)
        pattern = assign_protection(net, sellers, seed=seed + 50)
        topo = net.topology
        assert pattern.edge_sellers.size == topo.n_edges
        assert np.isin(pattern.edge_sellers, sellers).all()
        assert not np.any(pattern.edge_sellers == topo.creditors)
        assert pattern.seller_exposure.sum() == pytest.approx(
            net.total_loans, rel=1e-9)
        for i, s in enumerate(sellers):
            mask = pattern.edge_sellers == s
            assert pattern.seller_exposure[i] == pytest.approx(
                net.weights[mask].sum(), rel=1e-9)


def test_assignment_is_deterministic():
    net = baseline_network(3)
    sellers = np.array([10, 20, 30, 40])
    a = assign_protection(net, sellers, seed=99)
    b = assign_protection(net, sellers, seed=99)
    np.testing.assert_array_equal(a.edge_sellers, b.edge_sellers)
    c = assign_protection(net, sellers, seed=100)
    assert not np.array_equal(a.edge_sellers, c.edge_sellers)


def test_assignment_uniform_over_eligible_sellers():
    hits = 0
    for seed in range(20):
        net = baseline_network(seed)
        topo = net.topology
        sellers = select_sellers(
            build_balance_sheets(net, 0.3, 0.09,
                                 allow_negative_deposits=True), 10)
        pattern = assign_protection(net, sellers, seed=seed + 7000)
        s_count = sellers.size
        # an edge whose creditor sells protection has one fewer choice
        edge_w = np.where(np.isin(topo.creditors, sellers),
                          1.0 / (s_count - 1), 1.0 / s_count)
        obs = np.array([np.sum(pattern.edge_sellers == s) for s in sellers],
                       dtype=float)
        expect = np.array([edge_w[topo.creditors != s].sum() for s in sellers])
        hits += chisquare(obs, expect).pvalue > 0.01
    assert hits >= 19
