"""Per-bank balance sheet construction and the risk-transfer transformation.

Every bank holds interbank loans l, external assets e, equity capital c,
interbank borrowings b and deposits d, with a = l + e = c + b + d.  All
quantities are in average-bank-asset units (total assets sum to N).
"""

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleSheet
from .netgen import WeightedNetwork, bank_borrowings, bank_loans

_FEAS_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class BalanceSheetSet:
    """Balance sheet columns for every bank plus the system-wide ratios.

    ``network`` keeps the weighted lending graph the sheets were built
    from so the loss cascade can walk the edges later.
    """

    loans: np.ndarray
    borrowings: np.ndarray
    external: np.ndarray
    capital: np.ndarray
    deposits: np.ndarray
    assets: np.ndarray
    gamma: float
    theta: float
    network: WeightedNetwork


@dataclass(frozen=True, eq=False)
class TransferredSystem:
    """Balance sheets after CDS risk transfer and additional lending.

    Every edge notional is scaled by (1+f).  The original notional stays
    insured (risk weight 0), the additional f-fraction is uninsured
    (risk weight 100%).  Capital is kept at its pre-transfer level.
    """

    base: BalanceSheetSet
    covered_weights: np.ndarray
    uncovered_weights: np.ndarray
    leverage_factor: float
    theta_prime: float


def sheet_structure(network, theta):
    """The gamma-independent part of sheet construction.

    Returns (loans, borrowings, external, assets).  External assets cover
    each bank's net borrowing first; the remaining pool, sized so the
    system-wide loan ratio is exactly theta, is allocated proportionally
    to each bank's loans.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must be in (0, 1), got {theta}")
    loans = bank_loans(network)
    borrowings = bank_borrowings(network)
    total_loans = loans.sum()
    net_borrowing = np.maximum(borrowings - loans, 0.0)
    pool = (1.0 - theta) / theta * total_loans - net_borrowing.sum()
    external = net_borrowing + pool * (loans / total_loans)
    if external.min() < -_FEAS_EPS:
        raise InfeasibleSheet(
            f"negative external assets (min {external.min():.3e}); "
            "the loan ratio leaves no room for the net-borrowing floor"
        )
    external = np.maximum(external, 0.0)
    return loans, borrowings, external, loans + external


def build_balance_sheets(network, theta, gamma, structure=None,
                         allow_negative_deposits=False):
    """Build the full sheet set for an equity capital ratio gamma.

    Capital is c = gamma * a for every bank and deposits close the
    balance, d = a - c - b.  By default a negative deposit anywhere
    (capital plus borrowings exceed assets) rejects the sample.  The
    experiment harness passes ``allow_negative_deposits=True``: deposits
    are a pure residual with no role in the loss dynamics, and banks
    whose borrowings sit close to their assets always price out to a
    slightly negative residual, so rejecting them would reject nearly
    every large network.  ``structure`` takes a precomputed
    sheet_structure tuple so a sweep over gamma does not redo it.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    if structure is None:
        structure = sheet_structure(network, theta)
    loans, borrowings, external, assets = structure
    capital = gamma * assets
    deposits = assets - capital - borrowings
    if not allow_negative_deposits:
        if deposits.min() < -_FEAS_EPS:
            bad = int(np.argmin(deposits))
            raise InfeasibleSheet(
                f"negative deposits at bank {bad} (d = {deposits[bad]:.3e})"
            )
        deposits = np.maximum(deposits, 0.0)
    return BalanceSheetSet(
        loans=loans,
        borrowings=borrowings,
        external=external,
        capital=capital,
        deposits=deposits,
        assets=assets,
        gamma=float(gamma),
        theta=float(theta),
        network=network,
    )


def apply_risk_transfer(sheets, network, f, allow_negative_deposits=False):
    """Scale every loan edge to (1+f) times its notional.

    The original notional becomes the covered (insured) leg, the added
    f-fraction the uncovered leg.  Loans and borrowings scale by (1+f),
    capital stays fixed, deposits absorb the difference.  The strict /
    permissive deposit handling mirrors build_balance_sheets.
    """
    if f < 0:
        raise ValueError(f"leverage factor f must be >= 0, got {f}")
    loans = (1.0 + f) * sheets.loans
    borrowings = (1.0 + f) * sheets.borrowings
    deposits = sheets.external + loans - sheets.capital - borrowings
    if not allow_negative_deposits:
        if deposits.min() < -_FEAS_EPS:
            bad = int(np.argmin(deposits))
            raise InfeasibleSheet(
                f"negative deposits after risk transfer at bank {bad} "
                f"(d = {deposits[bad]:.3e})"
            )
        deposits = np.maximum(deposits, 0.0)
    theta = sheets.theta
    theta_prime = (theta + f * theta) / (1.0 + f * theta)
    base = BalanceSheetSet(
        loans=loans,
        borrowings=borrowings,
        external=sheets.external,
        capital=sheets.capital,
        deposits=deposits,
        assets=sheets.external + loans,
        gamma=sheets.gamma,
        theta=theta_prime,
        network=network,
    )
    return TransferredSystem(
        base=base,
        covered_weights=network.weights.copy(),
        uncovered_weights=f * network.weights,
        leverage_factor=float(f),
        theta_prime=theta_prime,
    )


def core_tier1_ratio(gamma, theta, f):
    """Capital over risk-weighted assets: gamma / (1 - theta + f*theta).

    Covered interbank loans carry risk weight 0, the additional loans
    100%, external assets 100%.
    """
    denom = 1.0 - theta + f * theta
    if denom <= 0:
        raise ValueError(f"1 - theta + f*theta must be positive, got {denom}")
    return gamma / denom


def leverage_ratio(gamma, theta, f):
    """Capital over total unweighted assets: gamma / (1 + f*theta)."""
    if theta < 0 or f < 0:
        raise ValueError("theta and f must be non-negative")
    return gamma / (1.0 + f * theta)


def dump_sheets_csv(sheets, path):
    """Debug dump: one row per bank, columns bank,l,b,e,c,d,a."""
    with open(path, "w") as fh:
        fh.write("bank,l,b,e,c,d,a\n")
        for n in range(sheets.loans.size):
            fh.write(
                f"{n},{sheets.loans[n]:.12g},{sheets.borrowings[n]:.12g},"
                f"{sheets.external[n]:.12g},{sheets.capital[n]:.12g},"
                f"{sheets.deposits[n]:.12g},{sheets.assets[n]:.12g}\n"
            )
