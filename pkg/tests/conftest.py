"""Shared helpers: tiny hand-built networks used across test modules."""
import numpy as np
import pytest

from cdscascade.netgen import Topology, WeightedNetwork


def hand_network(n_banks, edges, weights):
    """Network from explicit (creditor, debtor) pairs and edge weights."""
    cred = np.array([c for c, _ in edges], dtype=np.int64)
    debt = np.array([d for _, d in edges], dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    topo = Topology(
        n_banks=n_banks,
        creditors=cred,
        debtors=debt,
        in_degree=np.bincount(debt, minlength=n_banks),
        out_degree=np.bincount(cred, minlength=n_banks),
    )
    return WeightedNetwork(
        topology=topo,
        weights=weights,
        exponent_r=0.0,
        total_loans=float(weights.sum()),
    )


@pytest.fixture
def two_bank_net():
    # single loan A -> B with notional 0.3
    return hand_network(2, [(0, 1)], [0.3])
