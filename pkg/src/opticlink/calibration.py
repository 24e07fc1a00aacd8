"""Brute-force calibration of the unpublished plant and chain knobs.

Each routine bisects one scalar until a noise-free reproduction of the
corresponding measurement hits its target. ``scripts/calibrate.py`` runs them
all and prints the constants stored in :mod:`opticlink.config`.
"""

from __future__ import annotations

import math
from dataclasses import replace

from scipy.optimize import brentq

from .chain import linear_readout
from .config import LinkConfig
from .detection import fit_rb
from .experiments import _grid, clifford_maps, rb_expected_survival, rb_gates_per_clifford
from .qubit import calibrate_quasi_static_sigma


def quasi_static_sigma(cfg: LinkConfig, qubit_index: int = 1) -> float:
    """Offset spread whose fitted Ramsey decay on the configured grid equals t2."""
    q = cfg.qubit(qubit_index).params
    return calibrate_quasi_static_sigma(q, _grid(cfg.experiments.ramsey_delays), cfg.experiments.ramsey_detuning_optical)


def rb_fidelity(cfg: LinkConfig, qubit_index: int = 1, optical: bool | None = None) -> float:
    """RB fidelity of the sequence-averaged survival (no shot or sequence noise)."""
    if optical is None:
        optical = cfg.io_mode.optical_drive
    q = cfg.qubit(qubit_index).params
    m = cfg.experiments.rb_lengths
    surv = rb_expected_survival(clifford_maps(cfg, q, optical), m)
    return float(fit_rb(m, surv, rb_gates_per_clifford(cfg)).derived["avg_gate_fidelity"])


def _with_qubit(cfg: LinkConfig, qubit_index: int, **kw) -> LinkConfig:
    qs = list(cfg.qubits)
    qs[qubit_index] = replace(qs[qubit_index], params=replace(qs[qubit_index].params, **kw))
    return replace(cfg, qubits=tuple(qs))


def t_phi_drive(cfg: LinkConfig, target: float = 0.9978, qubit_index: int = 1) -> float:
    """Driven-evolution dephasing time giving ``target`` RB fidelity under microwave drive."""

    def err(log_t):
        c = _with_qubit(cfg, qubit_index, t_phi_drive=math.exp(log_t))
        return rb_fidelity(c, qubit_index, optical=False) - target

    lo, hi = math.log(1e-6), math.log(1.0)
    if err(hi) < 0:
        raise ValueError(f"target {target} unreachable: T1 alone limits the fidelity to {err(hi) + target:.5f}")
    return math.exp(brentq(err, lo, hi, xtol=1e-6))


def optical_excess_noise(cfg: LinkConfig, target: float = 0.9959, qubit_index: int = 1) -> float:
    """Relative rotation jitter of the optical drive giving ``target`` RB fidelity."""

    def err(sigma):
        c = replace(cfg, drive=replace(cfg.drive, optical_excess_noise=sigma))
        return rb_fidelity(c, qubit_index, optical=True) - target

    if err(0.0) < 0:
        raise ValueError("optical drive already below target without excess noise")
    return brentq(err, 0.0, 0.5, xtol=1e-9)


def edfa_noise_psd(cfg: LinkConfig, target_snr: float = 0.3, qubit_index: int = 0) -> float:
    """EDFA added-noise density giving single-shot ``mu / sigma = target_snr`` on the optical path.

    The demodulated noise variance is affine in the EDFA density, so two
    evaluations pin it down.
    """

    def inv_snr2(psd):
        c = replace(cfg, stages=tuple(replace(s, added_noise_psd=psd) if s.label == "EDFA" else s for s in cfg.stages))
        return linear_readout(c, optical=True).snr(c, qubit_index) ** -2

    a = inv_snr2(0.0)
    b = (inv_snr2(1e-17) - a) / 1e-17
    psd = (target_snr**-2 - a) / b
    if psd < 0:
        raise ValueError(f"single-shot SNR without EDFA noise is already {a ** -0.5:.3f}")
    return psd
