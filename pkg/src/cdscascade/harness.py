"""Experiment orchestration.

Owns the run configuration, the seed discipline (every random draw comes
from a named sub-stream of (master_seed, sample_index, attempt)), the
per-sample pipeline topology -> sheets -> transfer -> protection ->
shock -> cascade, and the sweep over (gamma, f) cells that produces
severity and buffer curves plus their CSV outputs.
"""

import json
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .balance import apply_risk_transfer, build_balance_sheets, sheet_structure
from .cascade import run_cascade
from .cds import assign_protection, select_sellers
from .errors import ConfigError, InfeasibleSheet, SampleExhausted
from .market import (
    CALIBRATION_TRIALS,
    calibrate_amplitude,
    draw_portfolio,
    draw_shocks,
    initial_distress,
)
from .metrics import (
    make_severity_curve,
    summarize,
    systemic_buffer_ratio,
    write_buffer_csv,
    write_severity_csv,
)
from .netgen import generate_topology, tune_concentration

MAX_ATTEMPTS = 32
DISCARD_WARN_RATE = 0.01

# Sub-stream labels. The weight stream is reserved: weight assignment is
# fully determined by the topology and needs no draws of its own.
STREAM_TOPOLOGY = 0
STREAM_WEIGHTS = 1
STREAM_PORTFOLIO = 2
STREAM_SHOCKS = 3
STREAM_PROTECTION = 4
STREAM_CALIBRATION = 5

ARMS = ("baseline", "transferred")

# Parameter ranges the experiments were designed for; values outside
# them run anyway but draw a warning.
GAMMA_RANGE = (0.04, 0.14)
KAPPA_RANGE = (0.01, 0.10)
RHO_RANGE = (0.10, 0.50)
F_RANGE = (0.0, 1.0)

DEFAULT_GAMMA_GRID = (
    0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10, 0.11, 0.12, 0.13, 0.14,
)
DEFAULT_F_SET = (0.0, 0.2, 0.4, 1.0)


@dataclass(frozen=True)
class SystemConfig:
    """All scenario and run parameters with their standard defaults."""

    n_banks: int = 500
    m_assets: int = 2
    s_sellers: int = 10
    theta: float = 0.3
    gamma: float = 0.09
    kappa: float = 0.05
    rho: float = 0.3
    leverage_f: float = 0.4
    dof: float = 1.5
    calib_gamma: float = 0.07
    calib_p: float = 1e-3
    calib_trials: int = CALIBRATION_TRIALS
    samples: int = 10_000
    master_seed: int = 0
    workers: int = 1
    arm: str = "baseline"
    gamma_grid: tuple = DEFAULT_GAMMA_GRID
    f_set: tuple = DEFAULT_F_SET
    attractiveness: float = None


def _warn_range(name, value, bounds):
    lo, hi = bounds
    if not lo <= value <= hi:
        warnings.warn(
            f"{name}={value:g} is outside the studied range [{lo:g}, {hi:g}]",
            stacklevel=3,
        )


def validate_config(config):
    """Reject impossible configurations, warn about unusual ones."""
    c = config
    if c.n_banks < 3:
        raise ConfigError(f"n_banks must be at least 3, got {c.n_banks}")
    if c.m_assets < 1:
        raise ConfigError(f"m_assets must be at least 1, got {c.m_assets}")
    if not 1 <= c.s_sellers <= c.n_banks:
        raise ConfigError(
            f"s_sellers must be in [1, {c.n_banks}], got {c.s_sellers}"
        )
    if not 0.0 < c.theta < 1.0:
        raise ConfigError(f"theta must be in (0, 1), got {c.theta}")
    if not 0.0 < c.gamma < 1.0:
        raise ConfigError(f"gamma must be in (0, 1), got {c.gamma}")
    if not 0.0 < c.kappa <= 1.0:
        raise ConfigError(f"kappa must be in (0, 1], got {c.kappa}")
    if round(c.kappa * (c.n_banks - 1)) < 1:
        raise ConfigError(
            f"kappa={c.kappa:g} gives zero attachments per bank at N={c.n_banks}"
        )
    if not 0.0 < c.rho < 1.0:
        raise ConfigError(f"rho must be in (0, 1), got {c.rho}")
    if c.leverage_f < 0:
        raise ConfigError(f"leverage_f must be >= 0, got {c.leverage_f}")
    if c.dof <= 1.0:
        raise ConfigError(f"dof must exceed 1, got {c.dof}")
    if c.calib_gamma <= 0:
        raise ConfigError(f"calib_gamma must be positive, got {c.calib_gamma}")
    if not 0.0 < c.calib_p < 0.5:
        raise ConfigError(f"calib_p must be in (0, 0.5), got {c.calib_p}")
    if c.calib_trials < 1000:
        raise ConfigError(f"calib_trials must be at least 1000, got {c.calib_trials}")
    if c.samples < 1:
        raise ConfigError(f"samples must be positive, got {c.samples}")
    if c.master_seed < 0:
        raise ConfigError(f"master_seed must be non-negative, got {c.master_seed}")
    if c.workers < 1:
        raise ConfigError(f"workers must be positive, got {c.workers}")
    if c.arm not in ARMS:
        raise ConfigError(f"arm must be one of {ARMS}, got {c.arm!r}")
    grid = np.asarray(c.gamma_grid, dtype=np.float64)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ConfigError("gamma_grid must be non-empty and strictly increasing")
    if grid.min() <= 0 or grid.max() >= 1:
        raise ConfigError("gamma_grid values must lie in (0, 1)")
    if len(c.f_set) == 0 or len(set(c.f_set)) != len(c.f_set):
        raise ConfigError("f_set must be non-empty without duplicates")
    if any(f < 0 for f in c.f_set):
        raise ConfigError("f_set values must be >= 0")
    if c.attractiveness is not None:
        m = round(c.kappa * (c.n_banks - 1))
        if c.attractiveness <= -m:
            raise ConfigError(
                f"attractiveness must exceed -m = {-m} at this kappa"
            )

    _warn_range("gamma", c.gamma, GAMMA_RANGE)
    _warn_range("kappa", c.kappa, KAPPA_RANGE)
    _warn_range("rho", c.rho, RHO_RANGE)
    _warn_range("leverage_f", c.leverage_f, F_RANGE)
    for f in c.f_set:
        _warn_range("f_set entry", f, F_RANGE)
    _warn_range("gamma_grid low end", grid.min(), GAMMA_RANGE)
    _warn_range("gamma_grid high end", grid.max(), GAMMA_RANGE)


_FIELD_PARSERS = {
    "n_banks": int,
    "m_assets": int,
    "s_sellers": int,
    "theta": float,
    "gamma": float,
    "kappa": float,
    "rho": float,
    "leverage_f": float,
    "dof": float,
    "calib_gamma": float,
    "calib_p": float,
    "calib_trials": int,
    "samples": int,
    "master_seed": int,
    "workers": int,
    "arm": str,
}


def _parse_config_value(key, text):
    if key in ("gamma_grid", "f_set"):
        toks = text.replace(",", " ").split()
        if not toks:
            raise ConfigError(f"{key} needs at least one value")
        return tuple(float(t) for t in toks)
    if key == "attractiveness":
        return None if text.lower() in ("none", "") else float(text)
    return _FIELD_PARSERS[key](text)


def config_from_mapping(mapping, base=None):
    """Build a SystemConfig from string key/value pairs over ``base``."""
    values = asdict(base) if base is not None else {}
    known = {f.name for f in fields(SystemConfig)}
    for key, text in mapping.items():
        key = key.strip().replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = _parse_config_value(key, str(text).strip())
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
    return SystemConfig(**values)


def load_config(path, base=None):
    """Read a flat key=value config file (# starts a comment)."""
    mapping = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{lineno}: expected key=value, got {line!r}"
                    )
                key, text = line.split("=", 1)
                mapping[key] = text
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return config_from_mapping(mapping, base=base)


def _stream_seed(master_seed, sample_index, attempt, stream):
    return np.random.SeedSequence([master_seed, sample_index, attempt, stream])


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything about one Monte-Carlo sample that does not depend on
    (gamma, f, arm): the tuned network, the gamma-free sheet structure,
    the protection assignment and the unit-amplitude market distress."""

    network: object
    exponent_r: float
    structure: tuple
    sellers: np.ndarray
    protection: object
    portfolio: object
    base_distress: np.ndarray


def build_scenario(config, sample_index, attempt=0):
    """Draw the full random scenario for one sample attempt."""
    seed = lambda stream: _stream_seed(
        config.master_seed, sample_index, attempt, stream
    )
    topology = generate_topology(
        config.n_banks, config.kappa, seed(STREAM_TOPOLOGY), config.attractiveness
    )
    exponent_r, network = tune_concentration(
        topology, config.rho, config.theta * config.n_banks
    )
    structure = sheet_structure(network, config.theta)
    sellers = select_sellers(structure[3], config.s_sellers)
    protection = assign_protection(network, sellers, seed(STREAM_PROTECTION))
    portfolio = draw_portfolio(
        config.n_banks, config.m_assets, seed(STREAM_PORTFOLIO)
    )
    unit_shocks = draw_shocks(config.m_assets, 1.0, config.dof, seed(STREAM_SHOCKS))
    base_distress = initial_distress(structure[2], portfolio, unit_shocks)
    return Scenario(
        network=network,
        exponent_r=exponent_r,
        structure=structure,
        sellers=sellers,
        protection=protection,
        portfolio=portfolio,
        base_distress=base_distress,
    )


def _cell_system(scenario, config, gamma, f, arm):
    # Deposits are a residual with no role in the cascade; the pipeline
    # accepts negative ones (see build_balance_sheets) so that only a
    # genuinely unconstructible sheet discards a sample.
    sheets = build_balance_sheets(
        scenario.network, config.theta, gamma,
        structure=scenario.structure, allow_negative_deposits=True,
    )
    if arm == "baseline":
        return sheets, None
    transferred = apply_risk_transfer(
        sheets, scenario.network, f, allow_negative_deposits=True
    )
    return transferred, scenario.protection


def calibrated_amplitude(config):
    """The shock amplitude matching the solo-bank failure target."""
    return calibrate_amplitude(
        config.calib_gamma,
        config.calib_p,
        config.m_assets,
        config.dof,
        np.random.SeedSequence([config.master_seed, STREAM_CALIBRATION]),
        trials=config.calib_trials,
    )


def run_sample(config, sample_index, amplitude):
    """Run the full pipeline for one sample of the configured cell.

    Infeasible sheets are discarded and the scenario redrawn from the
    next attempt sub-stream, at most MAX_ATTEMPTS times.  amplitude=0 is
    allowed and yields a shock-free run.
    """
    if amplitude < 0:
        raise ValueError(f"amplitude must be >= 0, got {amplitude}")
    for attempt in range(MAX_ATTEMPTS):
        try:
            scenario = build_scenario(config, sample_index, attempt)
            system, protection = _cell_system(
                scenario, config, config.gamma, config.leverage_f, config.arm
            )
        except InfeasibleSheet:
            continue
        return run_cascade(system, protection, amplitude * scenario.base_distress)
    raise SampleExhausted(
        f"sample {sample_index} infeasible {MAX_ATTEMPTS} times at "
        f"arm={config.arm}, gamma={config.gamma:g}, f={config.leverage_f:g}"
    )


def _cell_key(arm, f, gamma):
    # the baseline system does not depend on f; collapse its key
    if arm == "baseline":
        f = 0.0
    return (str(arm), float(f), float(gamma))


def _run_cells_range(config, cells, amplitude, start, stop):
    counts = {cell: np.zeros(stop - start, dtype=np.int64) for cell in cells}
    discards = dict.fromkeys(cells, 0)
    for idx in range(start, stop):
        cache = {}
        for cell in cells:
            arm, f, gamma = cell
            for attempt in range(MAX_ATTEMPTS):
                if attempt not in cache:
                    try:
                        cache[attempt] = build_scenario(config, idx, attempt)
                    except InfeasibleSheet:
                        cache[attempt] = None
                scenario = cache[attempt]
                if scenario is not None:
                    try:
                        system, protection = _cell_system(
                            scenario, config, gamma, f, arm
                        )
                    except InfeasibleSheet:
                        scenario = None
                if scenario is None:
                    discards[cell] += 1
                    continue
                result = run_cascade(
                    system, protection, amplitude * scenario.base_distress
                )
                counts[cell][idx - start] = result.failures
                break
            else:
                raise SampleExhausted(
                    f"sample {idx} infeasible {MAX_ATTEMPTS} times at "
                    f"arm={arm}, gamma={gamma:g}, f={f:g}"
                )
    return counts, discards


def run_cells(config, cells, amplitude, progress=None):
    """Monte-Carlo over every cell with shared per-sample scenarios.

    ``cells`` is a sequence of (arm, f, gamma) triples.  All cells of one
    sample reuse the same scenario draw, which is what makes curves
    comparable across gamma, f and arm (common random numbers).  Returns
    ({cell: failure counts array}, {cell: discarded attempt count}).
    """
    if amplitude < 0:
        raise ValueError(f"amplitude must be >= 0, got {amplitude}")
    keys = [_cell_key(*cell) for cell in cells]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate cells requested")
    total = config.samples
    if config.workers <= 1 or total < 2 * config.workers:
        counts, discards = {}, {}
        chunk = max(1, total // 20)
        done = 0
        for start in range(0, total, chunk):
            stop = min(start + chunk, total)
            part_counts, part_discards = _run_cells_range(
                config, keys, amplitude, start, stop
            )
            for cell in keys:
                counts.setdefault(cell, []).append(part_counts[cell])
                discards[cell] = discards.get(cell, 0) + part_discards[cell]
            done = stop
            if progress is not None:
                progress(done, total)
        return {c: np.concatenate(v) for c, v in counts.items()}, discards

    workers = min(config.workers, total)
    bounds = np.linspace(0, total, workers + 1).astype(int)
    spans = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_cells_range, config, keys, amplitude, a, b)
            for a, b in spans
        ]
        parts = []
        done = 0
        for fut, (a, b) in zip(futures, spans):
            parts.append(fut.result())
            done += b - a
            if progress is not None:
                progress(done, total)
    counts = {c: np.concatenate([p[0][c] for p in parts]) for c in keys}
    discards = {c: sum(p[1][c] for p in parts) for c in keys}
    return counts, discards


def _warn_discards(discards, samples):
    worst = max(discards, key=discards.get)
    if discards[worst] > DISCARD_WARN_RATE * samples:
        arm, f, gamma = worst
        warnings.warn(
            f"discard rate {discards[worst] / samples:.2%} at "
            f"arm={arm}, f={f:g}, gamma={gamma:g} exceeds "
            f"{DISCARD_WARN_RATE:.0%}; the configuration is near infeasibility",
            stacklevel=3,
        )


def _curve_from_counts(config, grid, arm, f, counts, discards):
    keys = [_cell_key(arm, f, g) for g in grid]
    summaries = [
        summarize(counts[k], config.n_banks, discards[k]) for k in keys
    ]
    return make_severity_curve(
        grid,
        summaries,
        config.kappa,
        config.rho,
        0.0 if arm == "baseline" else f,
        arm,
        config.theta,
    )


def run_curve(config, gamma_grid=None, arm=None, f=None, amplitude=None,
              progress=None):
    """Severity curve for one arm over a gamma grid."""
    validate_config(config)
    grid = tuple(config.gamma_grid if gamma_grid is None else gamma_grid)
    arm = config.arm if arm is None else arm
    if arm not in ARMS:
        raise ConfigError(f"arm must be one of {ARMS}, got {arm!r}")
    f = config.leverage_f if f is None else float(f)
    if amplitude is None:
        amplitude = calibrated_amplitude(config)
    cells = [(arm, f, g) for g in grid]
    counts, discards = run_cells(config, cells, amplitude, progress=progress)
    _warn_discards(discards, config.samples)
    return _curve_from_counts(config, grid, arm, f, counts, discards)


def run_sweep(config, out_dir=None, amplitude=None, progress=None):
    """The full experiment: baseline curve, one transferred curve per f
    in f_set, and the buffer curve each transferred arm induces.

    Returns (severity_curves, buffer_curves) with the baseline curve
    first in the severity list.  With ``out_dir`` set, writes
    severity.csv, buffer.csv and manifest.json there.
    """
    validate_config(config)
    grid = tuple(config.gamma_grid)
    if amplitude is None:
        amplitude = calibrated_amplitude(config)
    cells = [("baseline", 0.0, g) for g in grid]
    for f in config.f_set:
        cells += [("transferred", float(f), g) for g in grid]
    counts, discards = run_cells(config, cells, amplitude, progress=progress)
    _warn_discards(discards, config.samples)

    baseline = _curve_from_counts(
        config, grid, "baseline", 0.0, counts, discards
    )
    severity_curves = [baseline]
    buffer_curves = []
    for f in config.f_set:
        curve = _curve_from_counts(
            config, grid, "transferred", float(f), counts, discards
        )
        severity_curves.append(curve)
        buffer_curves.append(systemic_buffer_ratio(baseline, curve))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_severity_csv(os.path.join(out_dir, "severity.csv"), severity_curves)
        write_buffer_csv(os.path.join(out_dir, "buffer.csv"), buffer_curves)
        write_manifest(os.path.join(out_dir, "manifest.json"), config, amplitude)
    return severity_curves, buffer_curves


def write_manifest(path, config, amplitude):
    """Record parameters, seed and code version next to the results."""
    from . import __version__

    manifest = {
        "version": __version__,
        "created_unix": int(time.time()),
        "amplitude": float(amplitude),
        "config": asdict(config),
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
