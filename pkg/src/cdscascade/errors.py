"""Exception types shared across the simulator."""


class CdsCascadeError(Exception):
    """Base class for simulator errors."""


class ConfigError(CdsCascadeError):
    """Invalid configuration file or parameter combination."""


class Unreachable(CdsCascadeError):
    """A target concentration cannot be reached on the given topology."""


class InfeasibleSheet(CdsCascadeError):
    """Balance sheet construction produced a negative deposit or external
    asset column; the sample must be discarded and regenerated."""


class NoEligibleSeller(CdsCascadeError):
    """A creditor has no protection seller other than itself to buy from."""


class CalibrationDiverged(CdsCascadeError):
    """The shock-amplitude bisection bracket does not straddle the target
    solo failure probability."""


class SampleExhausted(CdsCascadeError):
    """Too many consecutive infeasible sheets for one sample index;
    the configuration is pathological."""


class NonInvertible(CdsCascadeError):
    """The reference severity curve is constant and cannot be inverted."""


class DimensionMismatch(CdsCascadeError):
    """Inconsistent array dimensions passed to the cascade."""
