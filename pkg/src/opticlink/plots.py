"""SVG figures for experiment results (deterministic output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import ExperimentResult  # noqa: E402

plt.rcParams["svg.hashsalt"] = "opticlink"
plt.rcParams["svg.fonttype"] = "none"


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _cplx(v):
    return np.asarray(v)


def plot_channel_spectra(r: ExperimentResult, out: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for t, color in (("300K", "tab:red"), ("3K", "tab:blue")):
        f = np.asarray(r.raw[f"freqs_{t}"])
        ax.plot(f / 1e9, r.raw[f"s21_db_{t}"], color=color, label=t)
    ax.set_xlabel("microwave frequency (GHz)")
    ax.set_ylabel("conversion (dB, photon flux)")
    ax.set_ylim(bottom=max(ax.get_ylim()[0], -120))
    ax.legend()
    return [_save(fig, out / "channel_spectra.svg")]


def plot_tuning(r: ExperimentResult, out: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(r.raw["wavelengths_nm"], np.asarray(r.raw["centers"]) / 1e9, "o-")
    ax.set_xlabel("pump wavelength (nm)")
    ax.set_ylabel("channel center (GHz)")
    return [_save(fig, out / "tuning.svg")]


def plot_linearity(r: ExperimentResult, out: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    x = np.asarray(r.raw["input_dbm"])
    y = np.asarray(r.raw["beat_dbm"])
    ax.plot(x, y, "o")
    if "slope" in r.fits:
        p = r.fits["slope"].params
        ax.plot(x, p["intercept"] + p["slope"] * x, "-", label=f"slope {p['slope']:.4f}")
        ax.legend()
    ax.axhline(r.summary["noise_floor_dbm"], ls=":", color="gray")
    ax.set_xlabel("microwave input (dBm)")
    ax.set_ylabel("beat note (dBm)")
    return [_save(fig, out / "linearity.svg")]


def plot_single_shot(r: ExperimentResult, out: Path) -> list[Path]:
    depths = sorted(int(k[1:]) for k in r.summary if k.startswith("n") and k[1:].isdigit())
    fig, axes = plt.subplots(2, len(depths), figsize=(4 * len(depths), 7), squeeze=False)
    for col, d in enumerate(depths):
        ax = axes[0, col]
        for state, color in (("g", "tab:blue"), ("e", "tab:red")):
            z = _cplx(r.raw[f"iq_{state}_n{d}"])[:2000]
            ax.plot(z.real, z.imag, ".", ms=1.5, color=color, label=f"|{state}>")
        ax.set_title(f"{d} shot(s) averaged")
        ax.set_xlabel("I")
        ax.set_ylabel("Q")
        ax.legend(markerscale=6)
        h = r.summary[f"n{d}"]
        edges = np.asarray(h["histogram_edges"])
        ax = axes[1, col]
        ax.stairs(h["histogram_g"], edges, color="tab:blue")
        ax.stairs(h["histogram_e"], edges, color="tab:red")
        ax.set_xlabel("projection on g-e axis")
        ax.set_ylabel("counts")
    return [_save(fig, out / "single_shot.svg")]


def plot_power_rabi(r: ExperimentResult, out: Path) -> list[Path]:
    paths = []
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(r.raw["amplitudes"], r.summary["population"], "o", ms=3)
    ax.plot(r.raw["amplitudes"], r.raw["p_expected"], "-", lw=1)
    ax.set_xlabel("drive amplitude")
    ax.set_ylabel("P(e)")
    paths.append(_save(fig, out / "power_rabi.svg"))
    sweep = r.summary.get("sweep")
    if sweep:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        pop = np.asarray(sweep["population"])
        centers = np.asarray(sweep["channel_centers"]) / 1e9
        amps = np.asarray(r.raw["amplitudes"])
        ax.pcolormesh(amps, centers, pop, shading="nearest", vmin=0, vmax=1)
        ax.set_xlabel("drive amplitude")
        ax.set_ylabel("channel center (GHz)")
        paths.append(_save(fig, out / "power_rabi_sweep.svg"))
    return paths


def plot_dual_readout(r: ExperimentResult, out: Path) -> list[Path]:
    paths = []
    fig, ax = plt.subplots(figsize=(5, 3.5))
    pop = np.asarray(r.summary["population"])
    for k, name in enumerate(("Q1", "Q2")):
        ax.plot(r.raw["amplitudes"], pop[:, k], "o-", ms=3, label=name)
    ax.set_xlabel("drive amplitude")
    ax.set_ylabel("P(e)")
    ax.legend()
    paths.append(_save(fig, out / "dual_readout.svg"))
    if "spectrum_freqs" in r.raw:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(np.asarray(r.raw["spectrum_freqs"]) / 1e9, r.raw["spectrum_dbm"], lw=0.8)
        ax.set_xlabel("frequency (GHz)")
        ax.set_ylabel("power (dBm/bin)")
        paths.append(_save(fig, out / "dual_spectrum.svg"))
    return paths


def plot_coherence(r: ExperimentResult, out: Path) -> list[Path]:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    for ax, name, key in zip(axes, ("t1", "ramsey", "echo"), ("t1", "t2", "t2e")):
        x = np.asarray(r.raw[f"{name}_delays"]) * 1e6
        ax.plot(x, r.summary[f"{name}_population"], ".", ms=3)
        ax.set_title(f"{name}: {r.summary[key] * 1e6:.2f} us")
        ax.set_xlabel("delay (us)")
        ax.set_ylabel("P(e)")
    return [_save(fig, out / f"{r.name}.svg")]


def plot_rb(r: ExperimentResult, out: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    m = np.asarray(r.raw["m_values"])
    surv = np.asarray(r.raw["survival"])
    for row, mm in zip(surv, m):
        ax.plot(np.full(row.size, mm), row, ".", color="0.7", ms=2)
    ax.plot(m, r.summary["mean_survival"], "o")
    p = r.fits["rb"].params
    mm = np.linspace(0, m.max(), 200)
    ax.plot(mm, p["A"] * p["p"] ** mm + p["B"], "-", label=f"F = {r.summary['fidelity']:.5f}")
    ax.set_xlabel("number of Cliffords")
    ax.set_ylabel("survival")
    ax.legend()
    return [_save(fig, out / f"{r.name}.svg")]


PLOTTERS = {
    "channel_spectra": plot_channel_spectra,
    "tuning": plot_tuning,
    "linearity": plot_linearity,
    "single_shot": plot_single_shot,
    "power_rabi": plot_power_rabi,
    "dual_readout": plot_dual_readout,
}


def plot_result(r: ExperimentResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if r.name.startswith("coherence_"):
        return plot_coherence(r, out)
    if r.name.startswith("rb_"):
        return plot_rb(r, out)
    fn = PLOTTERS.get(r.name)
    return fn(r, out) if fn else []
