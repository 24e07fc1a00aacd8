#!/usr/bin/env python3
"""Run every experiment at default settings and write results plus SVG figures.

Equivalent to the four CLI verbs in turn, with closedloop over all io_modes.
"""

import argparse
import sys

from opticlink.cli import main


def run():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    extra = ["--out", args.out, "--plots"] + (["--seed", str(args.seed)] if args.seed is not None else [])
    for argv in (["characterize"], ["readout", "--pump-sweep"], ["closedloop", "--all-modes"], ["budget"]):
        rc = main(argv + extra)
        if rc:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(run())
