"""The contagion state machine.

Losses seed from the market shock, then propagate round by round: failed
debtors default on their full loan notionals, creditors absorb the hit or
fail in turn, and honored CDS claims move the covered part of each loss
from a surviving buyer to a surviving seller.
"""

from dataclasses import dataclass, field

import numpy as np

from .balance import BalanceSheetSet, TransferredSystem
from .errors import DimensionMismatch


@dataclass(frozen=True, eq=False)
class CascadeResult:
    """Outcome of one cascade run.

    ``rounds`` counts executed rounds, including the final quiet round
    that confirms the fixed point (there is none when every bank is
    already failed).  ``failed_round[n]`` is the round bank n failed in,
    -1 for survivors.
    """

    failures: int
    failed_set: np.ndarray
    rounds: int
    per_round_failures: list
    failed_round: np.ndarray
    trace: list = field(default_factory=list, repr=False)


def _system_arrays(system, protection):
    if isinstance(system, TransferredSystem):
        sheets = system.base
        covered = system.covered_weights
        uncovered = system.uncovered_weights
    elif isinstance(system, BalanceSheetSet):
        sheets = system
        covered = system.network.weights
        uncovered = np.zeros_like(covered)
    else:
        raise TypeError(f"unsupported system type {type(system).__name__}")
    topo = sheets.network.topology
    if protection is not None and protection.edge_sellers.size != topo.n_edges:
        raise DimensionMismatch(
            f"protection covers {protection.edge_sellers.size} edges, "
            f"network has {topo.n_edges}"
        )
    return sheets, topo, covered, uncovered


def run_cascade(system, protection, initial_loss, record_trace=False):
    """Run the round protocol to its fixed point and count the failures.

    Each round after the seeding round:
      A. every bank that failed in the previous round defaults on all its
         borrowings; still-alive creditors book the full (covered plus
         uncovered) notional as a loss, with zero recovery;
      B. alive banks whose cumulative loss exceeds their capital fail --
         the test uses the gross loss, a compensation cannot rescue a
         buyer failing in the same round;
      C. for each loss booked in A, the covered notional moves from the
         buyer back to its protection seller, provided both survived B;
         claims on sellers that are already gone stay with the buyer;
      D. alive banks pushed over their capital by the payoff charges fail.

    The seeding round applies ``initial_loss`` and runs B/C/D only (no
    defaults have accrued yet, so C is vacuous there).
    """
    sheets, topo, covered, uncovered = _system_arrays(system, protection)
    n = sheets.capital.size
    initial_loss = np.asarray(initial_loss, dtype=np.float64)
    if initial_loss.shape != (n,):
        raise DimensionMismatch(
            f"initial_loss has shape {initial_loss.shape}, expected ({n},)"
        )
    if initial_loss.min() < 0:
        raise ValueError("initial_loss must be non-negative")

    cred = topo.creditors
    debt = topo.debtors
    loss_per_edge = covered + uncovered
    capital = sheets.capital
    edge_sellers = None if protection is None else protection.edge_sellers

    alive = np.ones(n, dtype=bool)
    loss = initial_loss.copy()
    failed_round = np.full(n, -1, dtype=np.int64)
    per_round = []
    trace = []

    new_failed = loss > capital
    alive[new_failed] = False
    failed_round[new_failed] = 0
    per_round.append(int(new_failed.sum()))
    if record_trace:
        trace.append({
            "round": 0,
            "accrued": float(initial_loss.sum()),
            "failed_b": int(new_failed.sum()),
            "honored_buyer_relief": 0.0,
            "honored_seller_charge": 0.0,
            "failed_d": 0,
        })
    rounds = 1

    while new_failed.any() and alive.any():
        # Phase A: losses from last round's defaulted debtors
        hit = new_failed[debt] & alive[cred]
        accrued = 0.0
        if hit.any():
            add = np.bincount(cred[hit], weights=loss_per_edge[hit], minlength=n)
            loss += add
            accrued = float(add.sum())

        # Phase B: buyer solvency on the gross loss
        failed_b = alive & (loss > capital)
        alive[failed_b] = False
        failed_round[failed_b] = rounds

        # Phase C: settle claims on this round's accrued defaults
        relief = charge = 0.0
        if edge_sellers is not None and hit.any():
            honored = hit & alive[cred] & alive[edge_sellers]
            if honored.any():
                paid = covered[honored]
                loss -= np.bincount(cred[honored], weights=paid, minlength=n)
                loss += np.bincount(edge_sellers[honored], weights=paid, minlength=n)
                relief = charge = float(paid.sum())

        # Phase D: seller solvency including the payoff charges
        failed_d = alive & (loss > capital)
        alive[failed_d] = False
        failed_round[failed_d] = rounds

        new_failed = failed_b | failed_d
        per_round.append(int(new_failed.sum()))
        if record_trace:
            trace.append({
                "round": rounds,
                "accrued": accrued,
                "failed_b": int(failed_b.sum()),
                "honored_buyer_relief": relief,
                "honored_seller_charge": charge,
                "failed_d": int(failed_d.sum()),
            })
        rounds += 1

    failed_set = np.flatnonzero(~alive)
    return CascadeResult(
        failures=int(failed_set.size),
        failed_set=failed_set,
        rounds=rounds,
        per_round_failures=per_round,
        failed_round=failed_round,
        trace=trace,
    )


def dump_trace_csv(result, path):
    """Debug dump of the per-round trace: round,phase,event,amount."""
    with open(path, "w") as fh:
        fh.write("round,phase,event,amount\n")
        for rec in result.trace:
            r = rec["round"]
            fh.write(f"{r},A,loss_accrued,{rec['accrued']:.12g}\n")
            fh.write(f"{r},B,failures,{rec['failed_b']}\n")
            fh.write(f"{r},C,claims_honored,{rec['honored_buyer_relief']:.12g}\n")
            fh.write(f"{r},D,failures,{rec['failed_d']}\n")
