#!/usr/bin/env python3
"""Recompute the calibrated constants in opticlink.config.

Order matters: the Ramsey offset spread only depends on the plant, the
driven dephasing time is fitted to microwave RB with that spread in place,
and the optical jitter is fitted on top of both. The EDFA noise density is
independent of the rest.
"""

import argparse
import time
from dataclasses import replace

from opticlink import calibration
from opticlink.config import default_config, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="YAML config to start from (default: built-in)")
    ap.add_argument("--rb-microwave", type=float, default=0.9978)
    ap.add_argument("--rb-optical", type=float, default=0.9959)
    ap.add_argument("--snr", type=float, default=0.3, help="optical single-shot mu/sigma")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else default_config()

    t0 = time.perf_counter()
    sigma = calibration.quasi_static_sigma(cfg)
    qs = tuple(replace(s, params=replace(s.params, quasi_static_sigma=sigma)) for s in cfg.qubits)
    cfg = replace(cfg, qubits=qs)
    print(f"Q2_QUASI_STATIC_SIGMA = {sigma:.2f}")

    t_phi = calibration.t_phi_drive(cfg, args.rb_microwave)
    qs = tuple(replace(s, params=replace(s.params, t_phi_drive=t_phi)) for s in cfg.qubits)
    cfg = replace(cfg, qubits=qs)
    print(f"Q2_T_PHI_DRIVE = {t_phi * 1e6:.3f}e-6")

    jitter = calibration.optical_excess_noise(cfg, args.rb_optical)
    print(f"OPTICAL_EXCESS_NOISE = {jitter:.7f}")

    psd = calibration.edfa_noise_psd(cfg, args.snr)
    print(f"EDFA_NOISE_PSD = {psd:.5g}")
    print(f"# {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
