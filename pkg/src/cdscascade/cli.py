"""Command line front end: calibrate, run, sweep and netgen."""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import plots
from .errors import (
    CalibrationDiverged,
    ConfigError,
    NonInvertible,
    SampleExhausted,
    Unreachable,
)
from .harness import (
    STREAM_CALIBRATION,
    STREAM_TOPOLOGY,
    SystemConfig,
    _stream_seed,
    calibrated_amplitude,
    load_config,
    run_cells,
    run_sweep,
    validate_config,
    write_manifest,
)
from .market import solo_failure_probability
from .metrics import summarize
from .netgen import generate_topology, measure_concentration, measure_denseness, tune_concentration

EXIT_CONFIG = 2
EXIT_CALIBRATION = 3
EXIT_EXHAUSTED = 4

# CLI flag -> SystemConfig field
_OVERRIDES = [
    ("seed", "master_seed"),
    ("samples", "samples"),
    ("workers", "workers"),
    ("arm", "arm"),
    ("gamma", "gamma"),
    ("kappa", "kappa"),
    ("rho", "rho"),
    ("f", "leverage_f"),
    ("theta", "theta"),
    ("n_banks", "n_banks"),
    ("sellers", "s_sellers"),
]


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH",
                        help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--samples", type=int, help="samples per cell")
    parser.add_argument("--workers", type=int, help="parallel worker count")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (run/sweep default: out; "
                             "netgen and calibrate print to stdout)")
    parser.add_argument("--arm", choices=("baseline", "transferred"),
                        help="which system to simulate")
    parser.add_argument("--gamma", type=float, help="equity capital ratio")
    parser.add_argument("--kappa", type=float, help="network denseness")
    parser.add_argument("--rho", type=float, help="loan concentration")
    parser.add_argument("--f", type=float, help="risk transfer fraction")
    parser.add_argument("--theta", type=float, help="interbank loan ratio")
    parser.add_argument("--n-banks", type=int, help="number of banks")
    parser.add_argument("--sellers", type=int, help="protection seller count")


def _build_config(args):
    config = SystemConfig()
    if args.config:
        config = load_config(args.config, base=config)
    overrides = {}
    for flag, field in _OVERRIDES:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    if overrides:
        config = replace(config, **overrides)
    validate_config(config)
    return config


def _progress(stream=sys.stderr):
    def report(done, total):
        stream.write(f"\r  {done}/{total} samples")
        stream.flush()
        if done == total:
            stream.write("\n")
    return report


def _cmd_calibrate(args):
    config = _build_config(args)
    amplitude = calibrated_amplitude(config)
    check_seed = np.random.SeedSequence(
        [config.master_seed, STREAM_CALIBRATION, 1]
    )
    check_p = solo_failure_probability(
        amplitude, config.calib_gamma, config.m_assets, config.dof,
        check_seed, trials=config.calib_trials,
    )
    print(f"amplitude = {amplitude:.8g}")
    print(f"target solo failure probability = {config.calib_p:g} "
          f"at gamma = {config.calib_gamma:g}")
    print(f"independent re-estimate = {check_p:.3e} "
          f"({config.calib_trials} trials)")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "calibration.json")
        with open(path, "w") as fh:
            json.dump(
                {
                    "amplitude": amplitude,
                    "calib_gamma": config.calib_gamma,
                    "calib_p": config.calib_p,
                    "recheck_p": check_p,
                    "trials": config.calib_trials,
                    "m_assets": config.m_assets,
                    "dof": config.dof,
                    "master_seed": config.master_seed,
                },
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
        print(f"wrote {path}")
    return 0


def _cmd_run(args):
    config = _build_config(args)
    print(f"calibrating amplitude ({config.calib_trials} trials)...")
    amplitude = calibrated_amplitude(config)
    print(f"amplitude = {amplitude:.8g}")
    print(f"running {config.samples} samples: arm={config.arm} "
          f"gamma={config.gamma:g} f={config.leverage_f:g} "
          f"kappa={config.kappa:g} rho={config.rho:g}")
    cell = (config.arm, config.leverage_f, config.gamma)
    counts, discards = run_cells(config, [cell], amplitude,
                                 progress=_progress())
    key = next(iter(counts))
    summary = summarize(counts[key], config.n_banks, discards[key])

    out_dir = args.out or "out"
    os.makedirs(out_dir, exist_ok=True)
    dist_path = os.path.join(out_dir, "distribution.csv")
    with open(dist_path, "w") as fh:
        fh.write("failures,count,probability\n")
        for k in np.flatnonzero(summary.histogram):
            fh.write(f"{k},{summary.histogram[k]},"
                     f"{summary.histogram[k] / summary.sample_count:.8g}\n")
    fig_path = os.path.join(out_dir, "distribution.png")
    plots.plot_distribution(
        summary.histogram, fig_path,
        title=(f"P(F): arm={config.arm}, gamma={config.gamma:g}, "
               f"f={config.leverage_f:g}"),
    )
    write_manifest(os.path.join(out_dir, "manifest.json"), config, amplitude)

    print(f"F* (99.9th percentile) = {summary.f_star}")
    print(f"mean F = {summary.mean_f:.4f}")
    print(f"discarded attempts = {summary.discarded}")
    print(f"wrote {dist_path}")
    print(f"wrote {fig_path}")
    return 0


def _cmd_sweep(args):
    config = _build_config(args)
    print(f"calibrating amplitude ({config.calib_trials} trials)...")
    amplitude = calibrated_amplitude(config)
    print(f"amplitude = {amplitude:.8g}")
    n_cells = len(config.gamma_grid) * (1 + len(config.f_set))
    print(f"sweeping {n_cells} cells x {config.samples} samples "
          f"(kappa={config.kappa:g}, rho={config.rho:g}, "
          f"f_set={list(config.f_set)})")
    out_dir = args.out or "out"
    severity_curves, buffer_curves = run_sweep(
        config, out_dir=out_dir, amplitude=amplitude, progress=_progress()
    )
    severity_png = os.path.join(out_dir, "severity.png")
    buffer_png = os.path.join(out_dir, "buffer.png")
    plots.plot_severity(severity_curves, config.n_banks, severity_png)
    plots.plot_buffer(buffer_curves, buffer_png)
    for name in ("severity.csv", "buffer.csv", "manifest.json"):
        print(f"wrote {os.path.join(out_dir, name)}")
    print(f"wrote {severity_png}")
    print(f"wrote {buffer_png}")
    return 0


def _cmd_netgen(args):
    config = _build_config(args)
    topology = generate_topology(
        config.n_banks, config.kappa,
        _stream_seed(config.master_seed, 0, 0, STREAM_TOPOLOGY),
        config.attractiveness,
    )
    _, network = tune_concentration(
        topology, config.rho, config.theta * config.n_banks
    )
    lines = [
        f"# N={config.n_banks} E={topology.n_edges} "
        f"kappa={measure_denseness(topology):.6g} "
        f"rho={measure_concentration(network):.6g}"
    ]
    for k in range(topology.n_edges):
        lines.append(
            f"{topology.creditors[k]},{topology.debtors[k]},"
            f"{network.weights[k]:.12g}"
        )
    text = "\n".join(lines) + "\n"
    if args.out and args.out != "-":
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "network.csv")
        with open(path, "w") as fh:
            fh.write(text)
        print(f"wrote {path} ({topology.n_edges} edges)")
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cdscascade",
        description="Monte-Carlo simulation of interbank contagion "
                    "under CDS risk transfer",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "calibrate": (_cmd_calibrate, "calibrate the shock amplitude"),
        "run": (_cmd_run, "simulate a single (arm, gamma, f) cell"),
        "sweep": (_cmd_sweep, "full sweep: severity + buffer curves"),
        "netgen": (_cmd_netgen, "dump one generated network as edge list"),
    }
    for name, (_, help_text) in commands.items():
        _add_common(sub.add_parser(name, help=help_text))
    args = parser.parse_args(argv)

    try:
        return commands[args.command][0](args)
    except (ConfigError, Unreachable, NonInvertible) as exc:
        # NonInvertible means the gamma grid cannot anchor the buffer
        # inversion (flat baseline): a study-design problem, not a crash
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationDiverged as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except SampleExhausted as exc:
        print(f"sample exhaustion: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED


if __name__ == "__main__":
    sys.exit(main())
