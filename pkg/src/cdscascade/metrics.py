"""Aggregation of cascade samples into P(F), the 99.9th-percentile
severity F*, and the systemic capital buffer ratio obtained by inverting
the baseline severity curve."""

from dataclasses import dataclass

import numpy as np

from .balance import core_tier1_ratio, leverage_ratio
from .errors import NonInvertible

# F* is the 999-th 1000-quantile, read as a 1-based order statistic.
QUANTILE_NUM = 999
QUANTILE_DEN = 1000


@dataclass(frozen=True, eq=False)
class DistributionSummary:
    """Empirical distribution of the failure count over one cell.

    ``histogram[k]`` counts samples with exactly k failures; its mass is
    ``sample_count``.  ``undersampled`` flags cells with fewer than 1000
    samples, where the 99.9th-percentile pick is not meaningful.
    """

    sample_count: int
    histogram: np.ndarray
    f_star: int
    mean_f: float
    discarded: int
    undersampled: bool


@dataclass(frozen=True, eq=False)
class SeverityCurve:
    """F* over a gamma grid for one (arm, f, kappa, rho) condition.

    ``f_star`` is the measured order statistic per grid point; ``fitted``
    is its isotonic non-increasing adjustment, which is what the buffer
    inversion consumes.
    """

    gammas: np.ndarray
    f_star: np.ndarray
    fitted: np.ndarray
    mean_f: np.ndarray
    samples: np.ndarray
    discarded: np.ndarray
    kappa: float
    rho: float
    f: float
    arm: str
    theta: float


@dataclass(frozen=True, eq=False)
class BufferCurve:
    """Systemic capital buffer ratio gamma_s over the gamma grid.

    gamma_s(gamma) is the baseline capital ratio at which the baseline
    system suffers the same F* as the transferred system does at gamma.
    ``clamped`` marks grid points whose target severity fell outside the
    baseline curve's range; ``negative_impact`` marks gamma_s < gamma.
    """

    gammas: np.ndarray
    gamma_s: np.ndarray
    clamped: np.ndarray
    t_prime: np.ndarray
    l_prime: np.ndarray
    negative_impact: np.ndarray
    f: float
    theta: float


def order_statistic_index(sample_count):
    """1-based index of the 999-th 1000-quantile, ceil(0.999 n) in
    integer arithmetic (float ceil misrounds multiples of 1000)."""
    return (QUANTILE_NUM * sample_count + QUANTILE_DEN - 1) // QUANTILE_DEN


def summarize(samples, n_banks=None, discarded=0):
    """Fold per-sample failure counts into a DistributionSummary.

    ``samples`` is an iterable of CascadeResult or of bare failure
    counts.  ``n_banks`` sizes the histogram; without it the histogram
    ends at the largest observed count.
    """
    counts = np.asarray(
        [getattr(s, "failures", s) for s in samples], dtype=np.int64
    )
    if counts.size == 0:
        raise ValueError("cannot summarize zero samples")
    if counts.min() < 0:
        raise ValueError("failure counts must be non-negative")
    minlength = (n_banks + 1) if n_banks is not None else 0
    ordered = np.sort(counts)
    k = order_statistic_index(counts.size)
    return DistributionSummary(
        sample_count=int(counts.size),
        histogram=np.bincount(counts, minlength=minlength),
        f_star=int(ordered[k - 1]),
        mean_f=float(counts.mean()),
        discarded=int(discarded),
        undersampled=counts.size < 1000,
    )


def _pav_non_decreasing(values):
    # Pool-adjacent-violators with unit weights: merge any block whose
    # mean exceeds its successor's, then expand block means back out.
    blocks = []  # (mean, count)
    for v in values:
        mean, count = float(v), 1
        while blocks and blocks[-1][0] > mean:
            m2, c2 = blocks.pop()
            mean = (mean * count + m2 * c2) / (count + c2)
            count += c2
        blocks.append((mean, count))
    return np.concatenate([np.full(c, m) for m, c in blocks])


def isotonic_non_increasing(values):
    """Least-squares non-increasing fit of a sequence (PAV).

    A sequence that is already non-increasing comes back unchanged.
    """
    y = np.asarray(values, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("need a non-empty 1-d sequence")
    return -_pav_non_decreasing(-y)


def make_severity_curve(gammas, summaries, kappa, rho, f, arm, theta):
    """Assemble a SeverityCurve from per-gamma summaries, applying the
    isotonic adjustment used by the inversion."""
    gammas = np.asarray(gammas, dtype=np.float64)
    if gammas.size == 0 or np.any(np.diff(gammas) <= 0):
        raise ValueError("gamma grid must be non-empty and strictly increasing")
    if len(summaries) != gammas.size:
        raise ValueError("one summary per grid point required")
    f_star = np.array([s.f_star for s in summaries], dtype=np.int64)
    return SeverityCurve(
        gammas=gammas,
        f_star=f_star,
        fitted=isotonic_non_increasing(f_star),
        mean_f=np.array([s.mean_f for s in summaries]),
        samples=np.array([s.sample_count for s in summaries], dtype=np.int64),
        discarded=np.array([s.discarded for s in summaries], dtype=np.int64),
        kappa=float(kappa),
        rho=float(rho),
        f=float(f),
        arm=str(arm),
        theta=float(theta),
    )


def severity_curve(config, gamma_grid, with_transfer):
    """Measure F* over a gamma grid for one arm of the experiment.

    Thin wrapper over the harness runner; the sweep entry point shares
    scenarios across arms and is the cheaper way to get several curves.
    """
    from .harness import run_curve  # deferred, harness imports this module

    arm = "transferred" if with_transfer else "baseline"
    f = config.leverage_f if with_transfer else 0.0
    return run_curve(config, gamma_grid, arm=arm, f=f)


def _invert_at(gammas, fitted, target):
    """Leftmost piecewise-linear inverse of a non-increasing curve.

    On a plateau the inverse image is an interval; the leftmost point is
    returned, i.e. the smallest capital ratio at which the baseline
    already does no worse than the target.  In particular, once both
    systems are bankruptcy-free the buffer ratio pins to the gamma where
    baseline bankruptcies first vanish rather than drifting with the
    query.  Returns (gamma_s, clamped).
    """
    if target > fitted[0]:
        return float(gammas[0]), True
    if target < fitted[-1]:
        return float(gammas[-1]), True
    j = int(np.argmax(fitted <= target))
    if fitted[j] == target:
        # leftmost grid point attaining the target; also keeps the
        # inverse exact (no interpolation roundoff) on grid values
        return float(gammas[j]), False
    span = fitted[j - 1] - fitted[j]
    frac = (fitted[j - 1] - target) / span
    return float(gammas[j - 1] + frac * (gammas[j] - gammas[j - 1])), False


def systemic_buffer_ratio(baseline, transferred):
    """Invert the baseline severity curve at the transferred severities.

    For each grid gamma, gamma_s is the baseline capital ratio whose
    (isotonic) F* equals the transferred arm's F* at gamma.  Targets
    outside the baseline range clamp to the nearest grid endpoint and
    are flagged.  The companion core-tier-1 and leverage ratio columns
    use the transferred arm's f.
    """
    if not np.array_equal(baseline.gammas, transferred.gammas):
        raise ValueError("curves must share the same gamma grid")
    if baseline.theta != transferred.theta:
        raise ValueError("curves must share theta")
    gammas = baseline.gammas
    fitted = baseline.fitted
    if fitted[0] == fitted[-1]:
        raise NonInvertible(
            f"baseline severity is constant (F* = {fitted[0]:g}) over the grid"
        )
    gamma_s = np.empty(gammas.size)
    clamped = np.empty(gammas.size, dtype=bool)
    for i in range(gammas.size):
        gamma_s[i], clamped[i] = _invert_at(gammas, fitted, transferred.fitted[i])
    f, theta = transferred.f, transferred.theta
    return BufferCurve(
        gammas=gammas,
        gamma_s=gamma_s,
        clamped=clamped,
        t_prime=np.array([core_tier1_ratio(g, theta, f) for g in gammas]),
        l_prime=np.array([leverage_ratio(g, theta, f) for g in gammas]),
        negative_impact=gamma_s < gammas,
        f=f,
        theta=theta,
    )


def write_severity_csv(path, curves):
    """One row per (curve, grid point): gamma,f,kappa,rho,arm,f_star,
    mean_F,samples,discarded."""
    with open(path, "w") as fh:
        fh.write("gamma,f,kappa,rho,arm,f_star,mean_F,samples,discarded\n")
        for c in curves:
            for i in range(c.gammas.size):
                fh.write(
                    f"{c.gammas[i]:.6g},{c.f:.6g},{c.kappa:.6g},{c.rho:.6g},"
                    f"{c.arm},{c.f_star[i]:d},{c.mean_f[i]:.8g},"
                    f"{c.samples[i]:d},{c.discarded[i]:d}\n"
                )


def write_buffer_csv(path, curves):
    """One row per (curve, grid point): gamma,f,gamma_s,clamped,t_prime,
    l_prime,negative_impact.  Flags are 0/1."""
    with open(path, "w") as fh:
        fh.write("gamma,f,gamma_s,clamped,t_prime,l_prime,negative_impact\n")
        for c in curves:
            for i in range(c.gammas.size):
                fh.write(
                    f"{c.gammas[i]:.6g},{c.f:.6g},{c.gamma_s[i]:.8g},"
                    f"{int(c.clamped[i])},{c.t_prime[i]:.8g},"
                    f"{c.l_prime[i]:.8g},{int(c.negative_impact[i])}\n"
                )
