"""Command-line entry point: ``opticlink {characterize,readout,closedloop,budget}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import IOMode, default_config, load_config
from .errors import ConfigError, FitError
from .experiments import (
    run_budget,
    run_channel_spectra,
    run_coherence_suite,
    run_dual_readout,
    run_linearity,
    run_power_rabi,
    run_rb,
    run_single_shot,
    run_tuning,
)

log = logging.getLogger("opticlink")


def _characterize(cfg, args):
    return [run_channel_spectra(cfg), run_tuning(cfg), run_linearity(cfg)]


def _readout(cfg, args):
    out = [run_single_shot(cfg, args.qubit)]
    sweep = None
    if cfg.io_mode.optical_readout and args.pump_sweep:
        sweep = np.arange(1534.0, 1570.0 + 1e-9, 2.0)
    out.append(run_power_rabi(cfg, args.qubit, pump_wavelengths=sweep))
    if len(cfg.qubits) >= 2:
        out.append(run_dual_readout(cfg))
    return out


def _closedloop(cfg, args):
    modes = list(IOMode) if args.all_modes else [cfg.io_mode]
    out = []
    for m in modes:
        c = cfg.with_mode(m)
        out.append(run_coherence_suite(c, args.qubit))
        out.append(run_rb(c, args.qubit))
    return out


def _budget(cfg, args):
    return [
        run_budget(
            cfg,
            spacing=args.spacing,
            per_channel_pump=args.pump_per_channel,
            cooling_budget=args.cooling,
            target_efficiency=args.efficiency,
            tunable_span=args.span,
        )
    ]


def _headline(r) -> str:
    keys = {
        "channel_spectra": ("bandwidth_300K", "bandwidth_3K", "center_shift", "efficiency_ratio"),
        "tuning": ("span", "slope_hz_per_nm"),
        "linearity": ("slope_db_per_db", "noise_limited_points"),
        "power_rabi": ("iq_contrast",),
        "dual_readout": ("max_crosstalk",),
        "budget": ("channels_by_bandwidth", "channels_by_power", "channels", "snr_single_shot"),
    }
    if r.name.startswith("coherence_"):
        pick = ("t1", "t2", "t2e")
    elif r.name.startswith("rb_"):
        pick = ("fidelity", "fidelity_stderr")
    elif r.name == "single_shot":
        return " ".join(
            f"{k}: sep/sigma={v['separation_over_sigma']:.3f} F={v['fidelity']:.4f}"
            for k, v in r.summary.items()
            if isinstance(v, dict) and "fidelity" in v
        )
    else:
        pick = keys.get(r.name, ())
    parts = []
    for k in pick:
        v = r.summary.get(k)
        if v is None:
            continue
        parts.append(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}")
    return " ".join(parts)


def _global_flags(parser, suppress: bool):
    # the subparser copies default to SUPPRESS so a flag given before the
    # verb is not overwritten by the subparser's default
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", type=Path, default=d(None), help="YAML configuration (defaults to the built-in setup)")
    parser.add_argument("--seed", type=int, default=d(None), help="override the configured master seed")
    parser.add_argument("--out", type=Path, default=d(Path("results")), help="output directory (default: results)")
    parser.add_argument("--mode", choices=[m.value for m in IOMode], default=d(None), help="drive/readout path, e.g. OO")
    parser.add_argument("--plots", action="store_true", default=d(False), help="also write SVG figures")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    p = argparse.ArgumentParser(prog="opticlink", description=__doc__)
    _global_flags(p, suppress=False)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    sub.add_parser("characterize", parents=[common], help="transducer spectra, tuning and linearity").set_defaults(fn=_characterize)

    r = sub.add_parser("readout", parents=[common], help="single-shot, power Rabi and dual-channel readout")
    r.add_argument("--qubit", type=int, default=0)
    r.add_argument("--pump-sweep", action="store_true", help="add the 1534-1570 nm pump sweep to power Rabi")
    r.set_defaults(fn=_readout)

    c = sub.add_parser("closedloop", parents=[common], help="coherence suite and randomized benchmarking")
    c.add_argument("--qubit", type=int, default=1)
    c.add_argument("--all-modes", action="store_true", help="run MM, MO, OM and OO in turn")
    c.set_defaults(fn=_closedloop)

    b = sub.add_parser("budget", parents=[common], help="multiplexing channel budget")
    b.add_argument("--spacing", type=float, default=5e6, help="channel spacing in Hz")
    b.add_argument("--span", type=float, default=None, help="tunable span in Hz (default: transducer setting)")
    b.add_argument("--pump-per-channel", type=float, default=10e-3, help="pump power per channel in W")
    b.add_argument("--cooling", type=float, default=1.0, help="cooling budget in W")
    b.add_argument("--efficiency", type=float, default=1e-2, help="target conversion efficiency in 1/W")
    b.set_defaults(fn=_budget)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else default_config()
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.mode:
            cfg = cfg.with_mode(args.mode)
        results = args.fn(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FitError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        for k, v in exc.diagnostics.items():
            print(f"  {k}: {v}", file=sys.stderr)
        return 2

    for r in results:
        path = r.write(args.out)
        print(f"{r.name}: {_headline(r)}  -> {path}")
        for w in r.warnings:
            print(f"  warning: {w}")
        if args.plots:
            from .plots import plot_result

            for svg in plot_result(r, args.out):
                log.info("wrote %s", svg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
