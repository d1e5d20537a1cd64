"""Random interbank network generation.

Grows a scale-free undirected graph by preferential attachment, orients
every edge uniformly at random to obtain a directed lending graph, and
distributes a fixed total loan volume over the edges with a degree-power
kernel whose exponent controls how concentrated the loan book is.
"""

from dataclasses import dataclass

import numpy as np

from .errors import Unreachable

RHO_TOLERANCE = 0.005
R_MAX = 32.0
MAX_BISECT_ITER = 60


@dataclass(frozen=True, eq=False)
class Topology:
    """Directed lending graph on ``n_banks`` vertices.

    Edge k runs from creditor ``creditors[k]`` to debtor ``debtors[k]``,
    i.e. the debtor borrows from the creditor.  Self-edges never occur.
    """

    n_banks: int
    creditors: np.ndarray
    debtors: np.ndarray
    in_degree: np.ndarray
    out_degree: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.creditors.size)

    def adjacency_matrix(self) -> np.ndarray:
        """Dense boolean adjacency, entry (n, n') true iff n lends to n'."""
        z = np.zeros((self.n_banks, self.n_banks), dtype=bool)
        z[self.creditors, self.debtors] = True
        return z


@dataclass(frozen=True, eq=False)
class WeightedNetwork:
    """Topology plus a positive loan value on every edge.

    Weights are expressed in average-bank-asset units and sum to
    ``total_loans``.
    """

    topology: Topology
    weights: np.ndarray
    exponent_r: float
    total_loans: float


def _weighted_sample(rng, weights, m):
    """Draw m distinct indices with probability proportional to weights,
    sequentially without replacement (exponential race)."""
    keys = rng.exponential(size=weights.size) / weights
    if m >= weights.size:
        return np.arange(weights.size)
    return np.argpartition(keys, m - 1)[:m]


def generate_topology(n_banks, denseness, seed, attractiveness=None):
    """Generate a random directed interbank topology.

    An undirected graph is grown from a complete seed graph on m+1 nodes
    (m = round(denseness * (n_banks - 1))): each subsequent node attaches
    m distinct edges to existing nodes with probability proportional to
    degree + attractiveness.  Every undirected edge is then oriented
    uniformly at random.  The result is connected when viewed undirected
    and its degree sequence has a heavy upper tail.

    Parameters
    ----------
    n_banks : int, at least 3.
    denseness : float in (0, 1], target average in-degree as a fraction
        of n_banks - 1.
    seed : int or numpy Generator.
    attractiveness : float, additive term of the attachment kernel;
        must exceed -m.  Defaults to -m/2, which steepens the degree
        tail relative to plain linear attachment.
    """
    if n_banks < 3:
        raise ValueError(f"need at least 3 banks, got {n_banks}")
    if not 0.0 < denseness <= 1.0:
        raise ValueError(f"denseness must be in (0, 1], got {denseness}")
    m = int(round(denseness * (n_banks - 1)))
    if m < 1:
        raise ValueError(
            f"denseness {denseness} too small: round({denseness} * {n_banks - 1}) < 1"
        )
    if attractiveness is None:
        attractiveness = -m / 2.0
    if attractiveness <= -m:
        raise ValueError("attractiveness must exceed -m to keep the kernel positive")

    rng = np.random.default_rng(seed)
    n_seed = m + 1

    degree = np.zeros(n_banks, dtype=np.int64)
    degree[:n_seed] = m
    iu, ju = np.triu_indices(n_seed, k=1)
    src = [iu.astype(np.int64)]
    dst = [ju.astype(np.int64)]
    for new in range(n_seed, n_banks):
        kernel = degree[:new] + attractiveness
        targets = _weighted_sample(rng, kernel.astype(np.float64), m)
        src.append(np.full(m, new, dtype=np.int64))
        dst.append(targets.astype(np.int64))
        degree[targets] += 1
        degree[new] = m

    a = np.concatenate(src)
    b = np.concatenate(dst)
    flip = rng.random(a.size) < 0.5
    creditors = np.where(flip, b, a)
    debtors = np.where(flip, a, b)

    return Topology(
        n_banks=n_banks,
        creditors=creditors,
        debtors=debtors,
        in_degree=np.bincount(debtors, minlength=n_banks),
        out_degree=np.bincount(creditors, minlength=n_banks),
    )


def _edge_log_kernel(topology):
    # (k_out[creditor] * k_in[debtor]) >= 1 on every edge, so the log is safe.
    k = topology.out_degree[topology.creditors] * topology.in_degree[topology.debtors]
    return np.log(k.astype(np.float64))


def _weights_for_r(log_kernel, exponent_r, total_loans):
    # Shift by the max before exponentiating: kernel**r overflows float64
    # for large r, the normalized ratio does not.
    scaled = exponent_r * (log_kernel - log_kernel.max())
    w = np.exp(scaled)
    return w * (total_loans / w.sum())


def assign_loan_weights(topology, exponent_r, total_loans):
    """Distribute ``total_loans`` over the edges proportionally to
    (k_out_creditor * k_in_debtor) ** exponent_r.

    r = 0 yields equal weights on every edge; larger r concentrates the
    loan book on edges between high-degree banks.
    """
    if topology.n_edges == 0:
        raise ValueError("topology has no edges")
    if exponent_r < 0:
        raise ValueError(f"exponent_r must be >= 0, got {exponent_r}")
    if total_loans <= 0:
        raise ValueError(f"total_loans must be positive, got {total_loans}")
    weights = _weights_for_r(_edge_log_kernel(topology), exponent_r, total_loans)
    return WeightedNetwork(
        topology=topology,
        weights=weights,
        exponent_r=float(exponent_r),
        total_loans=float(total_loans),
    )


def bank_loans(network):
    """Per-bank interbank loans: row sums of the weight matrix."""
    return np.bincount(
        network.topology.creditors,
        weights=network.weights,
        minlength=network.topology.n_banks,
    )


def bank_borrowings(network):
    """Per-bank interbank borrowings: column sums of the weight matrix."""
    return np.bincount(
        network.topology.debtors,
        weights=network.weights,
        minlength=network.topology.n_banks,
    )


def measure_denseness(topology):
    """Directed edge count as a fraction of the N(N-1) possible edges."""
    n = topology.n_banks
    return topology.n_edges / (n * (n - 1))


def _top_share(loans, total):
    n = loans.size
    top = int(np.ceil(n / 100.0))
    return float(np.partition(loans, n - top)[n - top:].sum() / total)


def measure_concentration(network):
    """Share of total loans held by the top 1 percent of banks.

    Banks are ranked by their interbank loans; the top ceil(N/100) are
    summed.  Ties are irrelevant to the sum itself (equal values), the
    nominal tie-break is ascending bank index.
    """
    if network.total_loans <= 0:
        raise ValueError("total_loans must be positive")
    return _top_share(bank_loans(network), network.total_loans)


def tune_concentration(topology, target_rho, total_loans):
    """Find the weight exponent r* whose concentration matches target_rho.

    Bisection on r in [0, 32] down to |rho - target| <= 0.005.  Raises
    Unreachable when the target lies below the r=0 baseline or above the
    concentration attained at r=32 (an incompatible denseness /
    concentration pair).
    """
    log_kernel = _edge_log_kernel(topology)
    n = topology.n_banks

    def rho_at(r):
        w = _weights_for_r(log_kernel, r, total_loans)
        loans = np.bincount(topology.creditors, weights=w, minlength=n)
        return _top_share(loans, total_loans)

    def network_at(r):
        return WeightedNetwork(
            topology=topology,
            weights=_weights_for_r(log_kernel, r, total_loans),
            exponent_r=float(r),
            total_loans=float(total_loans),
        )

    rho_lo = rho_at(0.0)
    if target_rho < rho_lo - RHO_TOLERANCE:
        raise Unreachable(
            f"target concentration {target_rho:.4f} below the r=0 baseline {rho_lo:.4f}"
        )
    if abs(rho_lo - target_rho) <= RHO_TOLERANCE:
        return 0.0, network_at(0.0)
    rho_hi = rho_at(R_MAX)
    if target_rho > rho_hi:
        # strict: a target the kernel cannot reach is an incompatible
        # (denseness, concentration) pair even if within tolerance
        raise Unreachable(
            f"target concentration {target_rho:.4f} not attained at r={R_MAX:g} "
            f"(max {rho_hi:.4f})"
        )
    if abs(rho_hi - target_rho) <= RHO_TOLERANCE:
        return R_MAX, network_at(R_MAX)

    lo, hi = 0.0, R_MAX
    for _ in range(MAX_BISECT_ITER):
        mid = 0.5 * (lo + hi)
        rho_mid = rho_at(mid)
        if abs(rho_mid - target_rho) <= RHO_TOLERANCE:
            return mid, network_at(mid)
        if rho_mid < target_rho:
            lo = mid
        else:
            hi = mid
    raise Unreachable(
        f"bisection failed to reach concentration {target_rho:.4f} within "
        f"{MAX_BISECT_ITER} iterations"
    )
