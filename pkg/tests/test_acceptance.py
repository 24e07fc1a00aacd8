"""One test per acceptance criterion, each at its stated tolerance."""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from opticlink.chain import output_frequency, probe_envelope, propagate
from opticlink.clifford import clifford_table
from opticlink.config import IOMode, default_config
from opticlink.detection import (
    GainStage,
    fit_damped_cosine,
    fit_exponential,
    fit_lineshape,
    fit_rabi,
    fit_rb,
)
from opticlink.experiments import (
    clifford_maps,
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
from opticlink.signal import iq_demodulate
from opticlink.transducer import Lineshape, PumpTone, lineshape_power

CFG = default_config()


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def test_1_linearity_slope(report):
    r, dt = timed(run_linearity, CFG)
    slope = r.summary["slope_db_per_db"]
    ok = abs(slope - 1.0) <= 0.005 and r.summary["noise_limited_points"] == 0 and dt < 60
    report(1, ok, f"beat slope {slope:.6f} dB/dB over -15..+15 dBm (1.000 +- 0.005), {dt:.1f} s")
    assert ok


def test_2_channel_spectra(report):
    r, dt = timed(run_channel_spectra, CFG)
    s = r.summary
    w_hot = s["bandwidth_300K"] / 2.63e6 - 1
    w_cold = s["bandwidth_3K"] / 0.88e6 - 1
    shift = s["center_shift"] / 131.56e6 - 1
    ratio = s["efficiency_ratio"] / 7.81 - 1
    ok = abs(w_hot) < 0.02 and abs(w_cold) < 0.02 and abs(shift) < 0.01 and abs(ratio) < 0.05 and dt < 60
    report(
        2,
        ok,
        f"widths {s['bandwidth_300K'] / 1e6:.4f}/{s['bandwidth_3K'] / 1e6:.4f} MHz, "
        f"shift {s['center_shift'] / 1e6:.4f} MHz, ratio {s['efficiency_ratio']:.4f}, {dt:.1f} s",
    )
    assert ok


def test_3_tunability_span(report):
    r = run_tuning(CFG)
    span = r.summary["span"]
    ok = span > 200e6
    report(3, ok, f"1534-1570 nm gives span {span / 1e6:.2f} MHz (> 200)")
    assert ok


def test_4_frequency_arithmetic(report):
    got = [output_frequency(CFG, i, True) for i in (0, 1)]
    ok = got == [8.743e9, 8.818e9]
    report(4, ok, f"upconverted readout {got[0] / 1e9:.6f}/{got[1] / 1e9:.6f} GHz (exact)")
    assert ok


def test_5_dual_channel_spectrum(report):
    r, dt = timed(run_dual_readout, CFG)
    peaks = r.summary["spectrum_peaks"]
    xt = r.summary["max_crosstalk"]
    # measured leakage from the Rabi traces themselves
    single = run_dual_readout(CFG, drive=(True, False))
    leak = abs(single.fits["leak_Q1_to_Q2"].params["slope"])
    ok = list(peaks) == [8.743e9, 8.818e9] and xt < 0.01 and leak < 0.01 and dt < 60
    report(5, ok, f"peaks {peaks[0] / 1e9:.4f}/{peaks[1] / 1e9:.4f} GHz, cross-talk {xt:.2e} (model) {leak:.2e} (traces), {dt:.1f} s")
    assert ok


def test_6_averaging(report):
    r, dt = timed(run_single_shot, CFG)
    s1 = r.summary["n1"]["separation_over_sigma"]
    f100 = r.summary["n100"]["fidelity"]
    ok = s1 < 1 and f100 > 0.99 and dt < 60
    report(6, ok, f"single-shot separation/sigma {s1:.3f} (< 1), 100-shot fidelity {f100:.4f} (> 0.99), {dt:.1f} s")
    assert ok


def test_7_randomized_benchmarking(report):
    t0 = time.perf_counter()
    opt = run_rb(CFG.with_mode("OO"))
    mw = run_rb(CFG.with_mode("MM"))
    dt = time.perf_counter() - t0
    f_opt, f_mw = opt.summary["fidelity"], mw.summary["fidelity"]
    shots = opt.summary["total_shots"]
    shape = opt.raw["survival"].shape
    ok = abs(f_opt - 0.9959) <= 0.0005 and abs(f_mw - 0.9978) <= 0.0005 and shape == (8, 30) and dt < 300
    report(7, ok, f"F optical {f_opt:.5f} (0.9959 +- 0.0005), microwave {f_mw:.5f} (0.9978 +- 0.0005), {shape[1]} seq x {shape[0]} lengths, {shots} shots, {dt:.1f} s")
    assert ok


def test_8_coherence_across_modes(report):
    t0 = time.perf_counter()
    runs = {m.value: run_coherence_suite(CFG.with_mode(m)) for m in IOMode}
    dt = time.perf_counter() - t0
    targets = {"t1": 51.0e-6, "t2": 8.8e-6, "t2e": 16.2e-6}
    ok = dt < 60
    parts = []
    for key, target in targets.items():
        vals = {m: r.summary[key] for m, r in runs.items()}
        errs = {m: r.summary[f"{key}_stderr"] for m, r in runs.items()}
        within = all(abs(v / target - 1) < 0.03 for v in vals.values())
        overlap = max(vals[m] - errs[m] for m in vals) <= min(vals[m] + errs[m] for m in vals)
        ok = ok and within and overlap
        parts.append(f"{key} " + "/".join(f"{vals[m] * 1e6:.2f}" for m in vals) + f" us (overlap {overlap})")
    report(8, ok, "; ".join(parts) + f"; modes MM/MO/OM/OO, {dt:.1f} s")
    assert ok


def test_9_budget(report):
    by_bw = run_budget(CFG, spacing=5e6, tunable_span=200e6).summary["channels_by_bandwidth"]
    by_power = run_budget(CFG, per_channel_pump=10e-3, cooling_budget=1.0).summary["channels_by_power"]
    ok = by_bw == 40 and by_power == 100
    report(9, ok, f"200 MHz / 5 MHz -> {by_bw} channels, 1 W / 10 mW -> {by_power} channels")
    assert ok


def _random_link(rng):
    cfg = CFG.noiseless()
    return replace(
        cfg,
        pumps=(
            PumpTone(rng.uniform(1549.9, 1550.1), rng.uniform(0.01, 0.3), rng.uniform(-math.pi, math.pi)),
            PumpTone(rng.uniform(1560.85, 1561.05), rng.uniform(0.01, 0.3), rng.uniform(-math.pi, math.pi)),
        ),
        jpc=replace(cfg.jpc, gain_db=rng.uniform(0, 30), phase=rng.uniform(-math.pi, math.pi)),
        stages=(GainStage(rng.uniform(0, 60), 0.0, "HEMT"), GainStage(rng.uniform(0, 30), 0.0, "EDFA")),
        temperature=str(rng.choice(["3K", "300K"])),
        pump_return=rng.uniform(1e-3, 1.0),
    )


def test_10_full_chain_invariants(report):
    rng = np.random.default_rng(10)
    worst_lin = worst_phase = 0.0
    for _ in range(100):
        cfg = _random_link(rng)
        optical = bool(rng.integers(2))
        a = (rng.normal(size=4) + 1j * rng.normal(size=4)) * 1e-7
        alpha, beta = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        phi = rng.uniform(-10, 10)
        x = probe_envelope(cfg, {0: a[0], 1: a[1]}, 2e-6)
        y = probe_envelope(cfg, {0: a[2], 1: a[3]}, 2e-6)
        px, py = propagate(cfg, x, optical), propagate(cfg, y, optical)
        scale = max(np.abs(px.samples).max(), np.abs(py.samples).max())
        lhs = propagate(cfg, alpha * x + beta * y, optical).samples
        rhs = alpha * px.samples + beta * py.samples
        worst_lin = max(worst_lin, np.abs(lhs - rhs).max() / (scale * (abs(alpha) + abs(beta))))
        rot = propagate(cfg, x * np.exp(1j * phi), optical)
        for i in (0, 1):
            f = output_frequency(cfg, i, optical)
            z0, z1 = complex(iq_demodulate(px, f)), complex(iq_demodulate(rot, f))
            worst_phase = max(worst_phase, abs(z1 - z0 * np.exp(1j * phi)) / scale)
    ok = worst_lin < 1e-9 and worst_phase < 1e-9
    report(10, ok, f"100 random links: linearity error {worst_lin:.1e}, phase-covariance error {worst_phase:.1e} (< 1e-9)")
    assert ok


def _fitter_draws(rng):
    worst = {}

    def note(name, got, want):
        worst[name] = max(worst.get(name, 0.0), abs(got / want - 1))

    m = np.array([1, 25, 50, 100, 200, 300, 500, 800])
    for _ in range(200):
        tau, amp, off = rng.uniform(5e-6, 200e-6), rng.uniform(0.2, 1.0), rng.uniform(-0.1, 0.2)
        x = np.linspace(0, 5 * tau, 51)
        note("exponential tau", fit_exponential(x, off + amp * np.exp(-x / tau)).params["tau"], tau)

        freq = rng.uniform(0.1e6, 0.5e6)
        decay = rng.uniform(1.0, 10.0) / freq
        x = np.linspace(0, 30e-6, 301)
        fit = fit_damped_cosine(x, 0.5 + 0.4 * np.exp(-x / decay) * np.cos(2 * np.pi * freq * x + rng.uniform(-3, 3)))
        note("damped-cosine freq", fit.params["freq"], freq)
        note("damped-cosine decay", fit.params["decay"], decay)

        p = rng.uniform(0.95, 0.9999)
        note("rb p", fit_rb(m, rng.uniform(0.3, 0.5) * p**m + rng.uniform(0.45, 0.55)).params["p"], p)

        pi_amp = rng.uniform(0.5, 1.5)
        a = np.linspace(0, 2.5, 41)
        note("rabi pi_amp", fit_rabi(a, 0.02 + 0.95 * np.sin(np.pi * a / (2 * pi_amp)) ** 2).params["pi_amp"], pi_amp)

        bw, c = rng.uniform(0.5e6, 3e6), 8.7e9 + rng.uniform(-1e5, 1e5)
        shape = Lineshape.SINC2 if rng.integers(2) else Lineshape.LORENTZIAN
        f = 8.7e9 + np.linspace(-4 * bw, 4 * bw, 161)
        fit = fit_lineshape(f, 3e-7 * lineshape_power(f - c, bw, shape), shape)
        note("lineshape bandwidth", fit.params["bandwidth"], bw)
    return worst


def test_11_fitter_recovery(report):
    tol = {
        "exponential tau": 1e-6,
        "damped-cosine freq": 1e-6,
        "damped-cosine decay": 1e-5,
        "rb p": 1e-7,
        "rabi pi_amp": 1e-6,
        "lineshape bandwidth": 1e-6,
    }
    worst = _fitter_draws(np.random.default_rng(11))
    ok = all(worst[k] <= tol[k] for k in tol)
    report(11, ok, "200 draws each, worst rel. error: " + ", ".join(f"{k} {worst[k]:.1e} (<= {tol[k]:.0e})" for k in tol))
    assert ok


def test_12_zero_noise_mm_equals_oo(report):
    base = default_config().noiseless()
    # same Ramsey detuning in both modes so the traces can be compared point by point
    base = replace(base, experiments=replace(base.experiments, ramsey_detuning_optical=base.experiments.ramsey_detuning_microwave))
    mm, oo = base.with_mode("MM"), base.with_mode("OO")
    worst = 0.0
    a, b = run_coherence_suite(mm), run_coherence_suite(oo)
    for key in ("t1_population", "ramsey_population", "echo_population"):
        worst = max(worst, np.abs(a.summary[key] - b.summary[key]).max())
    a, b = run_power_rabi(mm), run_power_rabi(oo)
    worst = max(worst, np.abs(a.summary["population"] - b.summary["population"]).max())
    a, b = run_rb(mm), run_rb(oo)
    worst = max(worst, np.abs(a.raw["expected_survival"] - b.raw["expected_survival"]).max())
    q = base.qubit(1).params
    worst = max(worst, np.abs(clifford_maps(base, q, False) - clifford_maps(base, q, True)).max())
    assert len(clifford_table().matrices) == 24
    ok = worst < 1e-9
    report(12, ok, f"noiseless MM vs OO populations, RB survival and gate maps differ by {worst:.1e} (< 1e-9)")
    assert ok
