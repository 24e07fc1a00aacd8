#!/usr/bin/env python3
"""Spread of the fitted RB fidelity over seeds, for microwave and optical drive."""

import argparse
from dataclasses import replace

import numpy as np

from opticlink.config import default_config
from opticlink.experiments import run_rb

TARGET = {"MM": 0.9978, "OO": 0.9959}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--tol", type=float, default=5e-4)
    args = ap.parse_args()
    base = default_config()
    for mode, target in TARGET.items():
        f = np.array([run_rb(replace(base.with_mode(mode), seed=s)).summary["fidelity"] for s in range(args.seeds)])
        ok = np.mean(np.abs(f - target) <= args.tol)
        print(f"{mode}: mean {f.mean():.6f} std {f.std(ddof=1):.2e} within +-{args.tol:g}: {ok:.0%}")


if __name__ == "__main__":
    main()
