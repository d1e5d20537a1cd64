"""Protection seller selection and the loan-to-seller assignment."""

from dataclasses import dataclass

import numpy as np

from .errors import NoEligibleSeller


@dataclass(frozen=True, eq=False)
class ProtectionPattern:
    """Which seller insures each loan edge.

    ``edge_sellers[k]`` is the bank that sold protection on edge k of the
    network the pattern was drawn for.  A creditor never buys protection
    from itself.  ``seller_exposure`` is the covered notional each seller
    carries, aligned with ``sellers``.
    """

    sellers: np.ndarray
    edge_sellers: np.ndarray
    seller_exposure: np.ndarray


def select_sellers(sheets, s_count):
    """The s_count banks with the largest total assets.

    Ties break toward the lower bank index, so the result is
    deterministic.  Accepts a balance sheet set or the bare asset
    column (assets do not depend on the capital ratio, so sellers can
    be picked before any sheets exist).
    """
    assets = sheets if isinstance(sheets, np.ndarray) else sheets.assets
    n = assets.size
    if not 1 <= s_count <= n:
        raise ValueError(f"s_count must be in [1, {n}], got {s_count}")
    order = np.argsort(-assets, kind="stable")
    return order[:s_count].copy()


def assign_protection(network, sellers, seed):
    """Assign every loan edge one protection seller, uniformly at random
    among the sellers excluding the edge's own creditor."""
    sellers = np.asarray(sellers, dtype=np.int64)
    if sellers.size == 0:
        raise ValueError("sellers must be non-empty")
    n = network.topology.n_banks
    creditors = network.topology.creditors

    # rank of each bank inside the seller list, -1 for non-sellers
    seller_rank = np.full(n, -1, dtype=np.int64)
    seller_rank[sellers] = np.arange(sellers.size)

    cred_rank = seller_rank[creditors]
    is_self = cred_rank >= 0
    n_eligible = np.where(is_self, sellers.size - 1, sellers.size)
    if np.any(n_eligible == 0):
        bad = int(creditors[np.argmax(n_eligible == 0)])
        raise NoEligibleSeller(
            f"bank {bad} is the only seller and cannot insure its own loans"
        )

    rng = np.random.default_rng(seed)
    pick = (rng.random(creditors.size) * n_eligible).astype(np.int64)
    # skip over the creditor's own slot in the seller list
    pick = pick + (is_self & (pick >= cred_rank))
    edge_sellers = sellers[pick]

    exposure = np.bincount(edge_sellers, weights=network.weights, minlength=n)
    return ProtectionPattern(
        sellers=sellers,
        edge_sellers=edge_sellers,
        seller_exposure=exposure[sellers],
    )


def dump_protection_csv(network, pattern, path):
    """Debug dump: creditor,debtor,seller,covered_notional per edge."""
    topo = network.topology
    with open(path, "w") as fh:
        fh.write("creditor,debtor,seller,covered_notional\n")
        for k in range(topo.n_edges):
            fh.write(
                f"{topo.creditors[k]},{topo.debtors[k]},"
                f"{pattern.edge_sellers[k]},{network.weights[k]:.12g}\n"
            )
