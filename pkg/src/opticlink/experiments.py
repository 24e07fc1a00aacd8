"""Experiment runners: characterization, multiplexed readout, closed-loop suite, budget.

Every runner is a pure function of ``(cfg, arguments)``: randomness comes
from streams derived from ``cfg.seed`` and fixed labels. Plant draws
(quasi-static offsets, projective outcomes, RB sequences) do not depend on
the io_mode, so the four modes see common random numbers and differ only
through their drive and readout chains.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .chain import (
    channel_collisions,
    drive_pulse_map,
    linear_readout,
    output_frequency,
    transducer_to_detector,
)
from .clifford import clifford_table, gate_pulse, random_sequence
from .config import IOMode, LinkConfig
from .detection import (
    FitResult,
    discriminate,
    fit_damped_cosine,
    fit_exponential,
    fit_lineshape,
    fit_rabi,
    fit_rb,
    fit_slope,
    gaussian_assignment_fidelity,
    project_population,
)
from .errors import ConfigError
from .qubit import PulseSpec, echo_sequence, ramsey_sequence, t1_sequence
from .signal import ComplexEnvelope, derive_seed, iq_demodulate, make_rng, power_spectrum
from .transducer import (
    PumpTone,
    Temperature,
    channel_center,
    optical_frequency,
    sideband_carrier,
    wavelength_nm,
    wavelength_sweep,
)


class ChannelCollisionWarning(UserWarning):
    pass


# -- results -------------------------------------------------------------------


def _plain(x):
    if isinstance(x, FitResult):
        return _plain(x.to_dict())
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return {"re": _plain(x.real.tolist()), "im": _plain(x.imag.tolist())}
        return _plain(x.tolist())
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _plain(float(x.real)), "im": _plain(float(x.imag))}
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


@dataclass
class ExperimentResult:
    """Raw records, reduced traces, fits and the metadata needed to rerun.

    ``to_json`` is byte-stable for a given config and seed; wall-clock
    timestamps live only in the manifest written next to the result.
    """

    name: str
    raw: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return _plain(
            {
                "name": self.name,
                "metadata": self.metadata,
                "summary": self.summary,
                "fits": self.fits,
                "warnings": list(self.warnings),
                "raw": self.raw,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{self.name}.json"
        text = self.to_json()
        path.write_text(text)
        manifest = {
            "file": path.name,
            "sha256": hashlib.sha256(text.encode()).hexdigest(),
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "version": __version__,
        }
        (out / f"{self.name}.manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
        return path


def _metadata(cfg: LinkConfig, **extra) -> dict:
    md = {
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "io_mode": cfg.io_mode.value,
        "version": __version__,
        "config": cfg.to_dict(),
    }
    md.update(extra)
    return md


def _warn(result: ExperimentResult, message: str, category=UserWarning):
    result.warnings.append(message)
    warnings.warn(message, category, stacklevel=3)


# -- shared helpers ---------------------------------------------------------------


def _grid(spec) -> np.ndarray:
    start, stop, n = spec
    return np.linspace(float(start), float(stop), int(n))


def _count_excited(p_excited, shots: int, rng: np.random.Generator) -> int:
    """Projective outcomes from per-shot P(e); uniforms keep modes on common draws."""
    u = rng.random(shots)
    return int(np.count_nonzero(u < np.broadcast_to(p_excited, (shots,))))


def _drive(cfg: LinkConfig, q):
    return lambda p: drive_pulse_map(cfg, q, p)


def _populations(cfg: LinkConfig, lr, k: int, iq) -> np.ndarray:
    return project_population(np.asarray(iq), lr.centers(cfg, k))


def _p_after_pulse(cfg: LinkConfig, q, fraction: float, decay: bool) -> float:
    m = drive_pulse_map(cfg, q, PulseSpec(duration=q.pi_duration, amplitude=fraction), decay=decay)
    return float(np.clip((1 - m(np.array([0.0, 0.0, 1.0]))[2]) / 2, 0, 1))


def _retune_jpc(cfg: LinkConfig, qubit_index: int, target: float) -> LinkConfig:
    f_r = cfg.qubit(qubit_index).readout.f_r
    return replace(cfg, jpc=replace(cfg.jpc, pump_freq=target - f_r))


# -- readout suite -------------------------------------------------------------------


def _rabi_trace(cfg: LinkConfig, qubit_index: int, amplitudes, shots: int, decay: bool, label: str):
    spec = cfg.qubit(qubit_index)
    q = spec.params
    lr = linear_readout(cfg, (qubit_index,))
    plant = make_rng(cfg.seed, label, "plant", qubit_index)
    noise = make_rng(cfg.seed, label, "readout", cfg.io_mode.value[1], qubit_index)
    p_exp = np.array([_p_after_pulse(cfg, q, a / q.pi_amp, decay) for a in amplitudes])
    counts = np.array([_count_excited(p, shots, plant) for p in p_exp])
    iq = lr.averaged(cfg, counts[:, None], shots, noise)[:, 0]
    return lr, p_exp, counts, iq, _populations(cfg, lr, 0, iq)


def run_power_rabi(
    cfg: LinkConfig,
    qubit_index: int = 0,
    amplitudes=None,
    shots: int | None = None,
    pump_wavelengths=None,
    readout_detuning: float | None = None,
    decay: bool = True,
) -> ExperimentResult:
    """Power Rabi on one qubit, read out through the configured path.

    ``readout_detuning`` (Hz, optical readout only) retunes the JPC so the
    upconverted probe lands that far from the qubit's channel center.
    ``pump_wavelengths`` adds a sweep of the qubit's pump, each point with
    the JPC retuned to the new channel center plus ``readout_detuning``.
    """
    q = cfg.qubit(qubit_index).params
    amps = np.linspace(0, 2 * q.pi_amp, 41) if amplitudes is None else np.asarray(amplitudes, dtype=float)
    if amps.size == 0:
        raise ConfigError("amplitudes must be non-empty")
    shots = cfg.experiments.rabi_shots if shots is None else int(shots)
    optical = cfg.io_mode.optical_readout
    if (pump_wavelengths is not None or readout_detuning is not None) and not optical:
        raise ConfigError(f"pump or readout-frequency sweeps need optical readout, io_mode is {cfg.io_mode.value}")
    res = ExperimentResult("power_rabi", metadata=_metadata(cfg, qubit_index=qubit_index, shots=shots))
    base = cfg
    if optical and readout_detuning is not None:
        center = channel_center(cfg.transducer, cfg.pump_for(qubit_index).wavelength, cfg.temperature)
        base = _retune_jpc(base, qubit_index, center + readout_detuning)
    lr, p_exp, counts, iq, pop = _rabi_trace(base, qubit_index, amps, shots, decay, "power_rabi")
    g, e = lr.centers(base, 0)
    res.raw.update(amplitudes=amps, iq=iq, excited_counts=counts, p_expected=p_exp)
    res.summary.update(
        population=pop,
        iq_contrast=abs(e - g),
        snr_single_shot=lr.snr(base, 0),
        readout_frequency=float(lr.frequencies[0]),
    )
    if optical:
        res.summary["channel_center"] = channel_center(base.transducer, base.pump_for(qubit_index).wavelength, base.temperature)
    if amps.size >= 4 and np.ptp(pop) > 0:
        res.fits["rabi"] = fit_rabi(amps, pop)
    if pump_wavelengths is not None:
        res.summary["sweep"] = _pump_sweep(base, qubit_index, amps, shots, decay, pump_wavelengths, readout_detuning or 0.0)
    return res


def _pump_sweep(cfg, qubit_index, amps, shots, decay, wavelengths, detuning):
    """Rabi contrast with the qubit's pump alone, swept in wavelength."""
    pump = cfg.pump_for(qubit_index)
    centers, contrast, pops = [], [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for lam in wavelengths:
            c = channel_center(cfg.transducer, float(lam), cfg.temperature)
            sub = _retune_jpc(replace(cfg, pumps=(replace(pump, wavelength=float(lam)),)), qubit_index, c + detuning)
            lr, _, _, _, pop = _rabi_trace(sub, qubit_index, amps, shots, decay, f"power_rabi/{lam:.4f}")
            g, e = lr.centers(sub, 0)
            centers.append(c)
            contrast.append(abs(e - g))
            pops.append(pop)
    centers = np.array(centers)
    return {
        "wavelengths_nm": np.asarray(wavelengths, dtype=float),
        "channel_centers": centers,
        "iq_contrast": np.array(contrast),
        "population": np.array(pops),
        "span": float(np.ptp(centers)),
    }


def run_dual_readout(
    cfg: LinkConfig,
    amplitudes=None,
    drive=(True, True),
    shots: int = 50000,
    pi_amps=None,
    decay: bool = True,
    spectrum_tone_dbm: float = -30.0,
    spectrum_window: float = 60e6,
) -> ExperimentResult:
    """Simultaneous Rabi on Q1 and Q2 through one multiplexed readout record.

    With optical readout the result also carries the dual-channel beat
    spectrum for CW tones of ``spectrum_tone_dbm`` at the transducer.
    """
    if len(cfg.qubits) < 2:
        raise ConfigError("dual readout needs two qubits")
    optical = cfg.io_mode.optical_readout
    if optical and len(cfg.pumps) < 2:
        raise ConfigError("dual optical readout needs two pumps")
    if pi_amps is not None:
        qs = tuple(replace(s, params=replace(s.params, pi_amp=float(a))) for s, a in zip(cfg.qubits, pi_amps))
        cfg = replace(cfg, qubits=qs + cfg.qubits[len(qs):])
    res = ExperimentResult("dual_readout", metadata=_metadata(cfg, shots=shots, drive=list(drive)))
    if optical:
        for a, b, d in channel_collisions(cfg):
            _warn(res, f"channels of pumps {a} and {b} are {d / 1e6:.3f} MHz apart (< 3 bandwidths)", ChannelCollisionWarning)
    idx = (0, 1)
    lr = linear_readout(cfg, idx)
    top = max(cfg.qubit(i).params.pi_amp for i in idx)
    amps = np.linspace(0, 2 * top, 41) if amplitudes is None else np.asarray(amplitudes, dtype=float)
    plant = [make_rng(cfg.seed, "dual_readout", "plant", i) for i in idx]
    noise = make_rng(cfg.seed, "dual_readout", "readout", cfg.io_mode.value[1])
    p_exp = np.zeros((amps.size, 2))
    counts = np.zeros((amps.size, 2), dtype=int)
    for k, i in enumerate(idx):
        q = cfg.qubit(i).params
        for n, a in enumerate(amps):
            p_exp[n, k] = _p_after_pulse(cfg, q, a / q.pi_amp, decay) if drive[k] else _p_after_pulse(cfg, q, 0.0, decay)
            counts[n, k] = _count_excited(p_exp[n, k], shots, plant[k])
    iq = lr.averaged(cfg, counts, shots, noise)
    pop = np.stack([_populations(cfg, lr, k, iq[:, k]) for k in range(2)], axis=1)
    # cross-talk: signal leaking from qubit j's state change onto channel i
    delta = np.array([complex(cfg.qubit(i).readout.response(True) - cfg.qubit(i).readout.response(False)) for i in idx])
    sig = np.abs(lr.gain * delta[None, :])
    xtalk = sig / np.diag(sig)[None, :]
    res.raw.update(amplitudes=amps, iq=iq, excited_counts=counts, p_expected=p_exp)
    res.summary.update(
        population=pop,
        crosstalk_matrix=xtalk,
        max_crosstalk=float(np.max(xtalk - np.diag(np.diag(xtalk)))),
        readout_frequencies=lr.frequencies,
    )
    for k in range(2):
        other = 1 - k
        if drive[k] and np.ptp(pop[:, k]) > 0:
            res.fits[f"rabi_{cfg.qubit(idx[k]).name}"] = fit_rabi(amps, pop[:, k])
        if drive[other] and not drive[k]:
            # regression of the idle channel on the driven qubit's expected population
            fit = fit_slope(p_exp[:, other], pop[:, k])
            res.fits[f"leak_{cfg.qubit(idx[other]).name}_to_{cfg.qubit(idx[k]).name}"] = fit
    if optical:
        freqs, dbm = dual_channel_spectrum(cfg, spectrum_tone_dbm, window=spectrum_window)
        res.raw["spectrum_freqs"] = freqs
        res.raw["spectrum_dbm"] = dbm
        res.summary["spectrum_peaks"] = np.sort(freqs[np.argsort(dbm)[::-1][:2]])
    return res


def dual_channel_spectrum(cfg: LinkConfig, tone_dbm: float = -30.0, duration: float = 2e-6, window: float = 60e6):
    """Beat spectrum for CW tones at every upconverted readout frequency, all pumps on.

    Tones enter at the transducer; the record carries EDFA and receiver noise.
    """
    freqs = [output_frequency(cfg, i, True) for i in range(len(cfg.qubits))]
    fc = 0.5 * (min(freqs) + max(freqs))
    n = int(round(duration * cfg.sample_rate))
    t = np.arange(n) / cfg.sample_rate
    amp = math.sqrt(1e-3 * 10 ** (tone_dbm / 10))
    s = sum(amp * np.exp(2j * np.pi * (f - fc) * t) for f in freqs)
    rec = transducer_to_detector(cfg, ComplexEnvelope(s, cfg.sample_rate, fc), derive_seed(cfg.seed, "dual_spectrum"))
    spec = power_spectrum(rec)
    keep = np.abs(spec.freqs - fc) <= window
    return spec.freqs[keep], spec.power_dbm[keep]


def run_single_shot(
    cfg: LinkConfig,
    qubit_index: int = 0,
    n_shots: int | None = None,
    n_average: int | None = None,
    bins: int = 60,
) -> ExperimentResult:
    """IQ clouds of |g> and |e> (prepared by a pi pulse) at depth 1 and ``n_average``."""
    n_shots = cfg.experiments.single_shot_count if n_shots is None else int(n_shots)
    n_average = cfg.experiments.single_shot_average if n_average is None else int(n_average)
    if n_shots < 2 or n_average < 1:
        raise ConfigError("need n_shots >= 2 and n_average >= 1")
    q = cfg.qubit(qubit_index).params
    lr = linear_readout(cfg, (qubit_index,))
    centers = lr.centers(cfg, 0)
    p_e = {"g": 0.0, "e": _p_after_pulse(cfg, q, 1.0, True)}
    res = ExperimentResult("single_shot", metadata=_metadata(cfg, qubit_index=qubit_index, n_shots=n_shots, n_average=n_average))
    mu_sigma = lr.snr(cfg, 0)
    res.summary["snr_single_shot"] = mu_sigma
    for depth in sorted({1, n_average}):
        plant = make_rng(cfg.seed, "single_shot", "plant", qubit_index, depth)
        noise = make_rng(cfg.seed, "single_shot", "readout", cfg.io_mode.value[1], qubit_index, depth)
        pts, truth = [], []
        for state in ("g", "e"):
            excited = plant.random((n_shots, depth)) < p_e[state]
            if depth == 1:
                iq = lr.shots(cfg, excited[:, :1], noise)[:, 0]
            else:
                iq = lr.averaged(cfg, excited.sum(axis=1)[:, None], depth, noise)[:, 0]
            pts.append(iq)
            truth.append(np.full(n_shots, state == "e"))
        pts_all, truth_all = np.concatenate(pts), np.concatenate(truth)
        disc = discriminate(pts_all, centers, truth_all)
        proj_g, proj_e = disc.projections[~truth_all], disc.projections[truth_all]
        sigma = math.sqrt(0.5 * (proj_g.var(ddof=1) + proj_e.var(ddof=1)))
        sep = float(abs(proj_e.mean() - proj_g.mean()))
        edges = np.linspace(disc.projections.min(), disc.projections.max(), bins + 1)
        res.raw[f"iq_g_n{depth}"] = pts[0]
        res.raw[f"iq_e_n{depth}"] = pts[1]
        res.summary[f"n{depth}"] = {
            "separation_over_sigma": sep / sigma if sigma > 0 else math.inf,
            "separation_over_sigma_expected": 2 * mu_sigma * math.sqrt(depth),
            "fidelity": disc.fidelity,
            "fidelity_expected": gaussian_assignment_fidelity(mu_sigma * math.sqrt(depth), 1.0),
            "histogram_edges": edges,
            "histogram_g": np.histogram(proj_g, edges)[0],
            "histogram_e": np.histogram(proj_e, edges)[0],
        }
    res.summary["centers"] = np.array(centers)
    return res


# -- closed-loop suite ---------------------------------------------------------------


def ramsey_detuning(cfg: LinkConfig) -> float:
    e = cfg.experiments
    return e.ramsey_detuning_optical if cfg.io_mode.optical_readout else e.ramsey_detuning_microwave


def run_coherence_suite(cfg: LinkConfig, qubit_index: int = 1, shots: int | None = None) -> ExperimentResult:
    """T1, Ramsey and Hahn-echo scans with fits, through the configured io_mode."""
    ex = cfg.experiments
    shots = ex.coherence_shots if shots is None else int(shots)
    q = cfg.qubit(qubit_index).params
    lr = linear_readout(cfg, (qubit_index,))
    pulse = _drive(cfg, q)
    det = ramsey_detuning(cfg)
    res = ExperimentResult(
        f"coherence_{cfg.io_mode.value}",
        metadata=_metadata(cfg, qubit_index=qubit_index, shots=shots, ramsey_detuning=det),
    )
    scans = {
        "t1": (_grid(ex.t1_delays), lambda d, rng: t1_sequence(q, d, 1, pulse=pulse)),
        "ramsey": (_grid(ex.ramsey_delays), lambda d, rng: ramsey_sequence(q, d, det, shots, rng, pulse=pulse)),
        "echo": (_grid(ex.echo_delays), lambda d, rng: echo_sequence(q, d, 1, pulse=pulse)),
    }
    for name, (delays, seq) in scans.items():
        plant = make_rng(cfg.seed, "coherence", name, "plant", qubit_index)
        noise = make_rng(cfg.seed, "coherence", name, "readout", cfg.io_mode.value[1], qubit_index)
        counts = np.array([_count_excited(seq(d, plant), shots, plant) for d in delays])
        iq = lr.averaged(cfg, counts[:, None], shots, noise)[:, 0]
        pop = _populations(cfg, lr, 0, iq)
        res.raw[f"{name}_delays"] = delays
        res.raw[f"{name}_iq"] = iq
        res.raw[f"{name}_excited_counts"] = counts
        res.summary[f"{name}_population"] = pop
        res.fits[name] = fit_damped_cosine(delays, pop) if name == "ramsey" else fit_exponential(delays, pop)
    res.summary.update(
        t1=res.fits["t1"].params["tau"],
        t1_stderr=res.fits["t1"].stderr["tau"],
        t2=res.fits["ramsey"].params["decay"],
        t2_stderr=res.fits["ramsey"].stderr["decay"],
        t2e=res.fits["echo"].params["tau"],
        t2e_stderr=res.fits["echo"].stderr["tau"],
        ramsey_freq=res.fits["ramsey"].params["freq"],
    )
    return res


def clifford_maps(cfg: LinkConfig, q, optical: bool) -> np.ndarray:
    """(24, 4, 4) homogeneous Bloch maps of every Clifford through a drive path."""
    table = clifford_table()
    gates = {}
    out = np.empty((24, 4, 4))
    for c, dec in enumerate(table.decompositions):
        m = np.eye(4)
        for g in dec:
            if g not in gates:
                gates[g] = drive_pulse_map(cfg, q, gate_pulse(g, q), optical).homogeneous
            m = gates[g] @ m
        out[c] = m
    return out


def rb_sequences(cfg: LinkConfig, m_values, k_sequences: int, qubit_index: int) -> list[list[list[int]]]:
    """Clifford index sequences (recovery included), shared by every drive path."""
    rng = make_rng(cfg.seed, "rb", "sequences", qubit_index)
    return [[random_sequence(rng, int(m)) for _ in range(k_sequences)] for m in m_values]


def sequence_survival(maps: np.ndarray, seqs) -> np.ndarray:
    """Ground-state probability after each sequence (no readout)."""
    out = np.empty(len(seqs))
    for n, seq in enumerate(seqs):
        r = np.array([0.0, 0.0, 1.0, 1.0])
        for c in seq:
            r = maps[c] @ r
        out[n] = np.clip((1 + r[2]) / 2, 0, 1)
    return out


def rb_expected_survival(maps: np.ndarray, m_values) -> np.ndarray:
    """Survival averaged over all Clifford sequences of each length, exactly.

    Tracks, for every group element ``g``, the summed noisy map of all
    prefixes whose ideal product is ``g`` (weighted by 24^-m); the recovery
    element then depends only on ``g``.
    """
    table = clifford_table()
    m_values = [int(m) for m in m_values]
    v = np.zeros((24, 4, 4))
    v[0] = np.eye(4)
    r0 = np.array([0.0, 0.0, 1.0, 1.0])
    rec = maps[table.inverse]
    out = {}
    for step in range(max(m_values) + 1):
        if step in m_values:
            z = np.einsum("gij,gjk,k->gi", rec, v, r0)[:, 2].sum()
            out[step] = (1 + z) / 2
        nv = np.zeros_like(v)
        for c in range(24):
            nv[table.mult[:, c]] += maps[c] @ v
        v = nv / 24
    return np.array([out[m] for m in m_values])


def rb_gates_per_clifford(cfg: LinkConfig) -> float:
    conv = cfg.experiments.rb_convention
    if conv == "per_clifford":
        return 1.0
    if conv == "per_gate":
        return clifford_table().mean_gates
    raise ConfigError(f"unknown rb_convention {conv!r}")


def run_rb(
    cfg: LinkConfig,
    qubit_index: int = 1,
    m_values=None,
    k_sequences: int | None = None,
    shots: int | None = None,
) -> ExperimentResult:
    """Single-qubit Clifford RB through the configured drive path.

    Survival is counted from projective outcomes: readout assignment error
    only rescales A and B of the decay and is left out. The decay fit is
    weighted by the binomial standard error of each length's mean.
    """
    ex = cfg.experiments
    m_values = np.asarray(ex.rb_lengths if m_values is None else m_values, dtype=int)
    k = ex.rb_sequences if k_sequences is None else int(k_sequences)
    shots = ex.rb_shots if shots is None else int(shots)
    if m_values.size < 4 or np.any(np.diff(m_values) <= 0) or m_values[0] < 0:
        raise ConfigError("m_values must be >= 4 ascending non-negative lengths")
    if k < 20:
        raise ConfigError("need at least 20 sequences per length")
    gpc = rb_gates_per_clifford(cfg)
    q = cfg.qubit(qubit_index).params
    optical = cfg.io_mode.optical_drive
    maps = clifford_maps(cfg, q, optical)
    seqs = rb_sequences(cfg, m_values, k, qubit_index)
    plant = make_rng(cfg.seed, "rb", "plant", qubit_index)
    expected = np.array([sequence_survival(maps, s) for s in seqs])
    counts = np.array([[shots - _count_excited(1 - p, shots, plant) for p in row] for row in expected])
    survival = counts / shots
    mean = survival.mean(axis=1)
    n = shots * k
    sem = np.sqrt(np.maximum(mean * (1 - mean), 1.0 / n) / n)
    fit = fit_rb(m_values, mean, gpc, sigma=sem)
    res = ExperimentResult(
        f"rb_{cfg.io_mode.value}",
        metadata=_metadata(cfg, qubit_index=qubit_index, k_sequences=k, shots=shots, drive="optical" if optical else "microwave"),
    )
    res.raw.update(m_values=m_values, survival=survival, expected_survival=expected)
    res.summary.update(
        mean_survival=mean,
        fidelity=fit.derived["avg_gate_fidelity"],
        fidelity_stderr=fit.derived.get("avg_gate_fidelity_stderr", 0.0),
        convention=cfg.experiments.rb_convention,
        gates_per_clifford=gpc,
        total_shots=int(shots * k * m_values.size),
    )
    res.fits["rb"] = fit
    return res


# -- characterization ---------------------------------------------------------------


def _single_pump(cfg: LinkConfig, wavelength: float, power: float, temperature, lo_dbm: float | None) -> LinkConfig:
    pump = PumpTone(wavelength, power)
    sub = replace(cfg, pumps=(pump,), temperature=Temperature.parse(temperature))
    if lo_dbm is not None:
        lo = power * cfg.pump_return
        gain_db = max(0.0, lo_dbm - 10 * math.log10(lo / 1e-3))
        sub = replace(sub, stages=tuple(replace(s, gain_db=gain_db) if s.label == "EDFA" else s for s in sub.stages))
    return sub


def _tone(power_w: float, freq: float, duration: float, fs: float) -> ComplexEnvelope:
    n = max(2, int(round(duration * fs)))
    return ComplexEnvelope(np.full(n, math.sqrt(power_w) + 0j), fs, freq)


def _detected_flux_ratio(sub: LinkConfig, mw_power: float, freq: float, duration: float) -> float:
    """Optical/microwave photon-flux ratio recovered from the noiseless beat power."""
    rec = transducer_to_detector(sub, _tone(mw_power, freq, duration, sub.sample_rate))
    beat = abs(complex(iq_demodulate(rec, freq))) ** 2
    edfa = sub.stage("EDFA")
    det = sub.detector
    lo = sub.pumps[0].power * sub.pump_return * edfa.amplitude_gain**2
    p_sideband = beat / (det.responsivity**2 * 2 * det.load * lo * edfa.amplitude_gain**2)
    f_opt = sideband_carrier(sub.transducer, sub.pumps[0], freq)
    return (p_sideband / f_opt) / (mw_power / freq)


def run_channel_spectra(
    cfg: LinkConfig,
    wavelength: float = 1550.00,
    pump_power: float = 0.1,
    span: float = 12e6,
    points: int = 241,
    duration: float = 1e-6,
) -> ExperimentResult:
    """Conversion spectra at 300 K and 3.3 K measured through the beat note, with lineshape fits."""
    res = ExperimentResult("channel_spectra", metadata=_metadata(cfg, wavelength=wavelength, pump_power=pump_power))
    fits = {}
    for temp in (Temperature.T300K, Temperature.T3K):
        sub = _single_pump(cfg.noiseless(), wavelength, pump_power, temp, None)
        center = channel_center(sub.transducer, wavelength, temp)
        freqs = center + np.linspace(-span / 2, span / 2, points)
        ratio = np.array([_detected_flux_ratio(sub, 1e-6, f, duration) for f in freqs])
        fit = fit_lineshape(freqs, ratio, sub.transducer.lineshape)
        fits[temp.value] = fit
        res.fits[f"lineshape_{temp.value}"] = fit
        res.raw[f"freqs_{temp.value}"] = freqs
        res.raw[f"s21_db_{temp.value}"] = 10 * np.log10(np.maximum(ratio, 1e-300))
    hot, cold = fits["300K"], fits["3K"]
    eff_ratio = cold.params["peak"] / hot.params["peak"]
    stokes = sideband_carrier(cfg.transducer, PumpTone(wavelength, pump_power), channel_center(cfg.transducer, wavelength, Temperature.T3K))
    res.summary.update(
        bandwidth_300K=hot.params["bandwidth"],
        bandwidth_3K=cold.params["bandwidth"],
        center_300K=hot.params["center"],
        center_3K=cold.params["center"],
        center_shift=cold.params["center"] - hot.params["center"],
        peak_efficiency_300K=hot.params["peak"],
        peak_efficiency_3K=cold.params["peak"],
        efficiency_ratio=eff_ratio,
        amplitude_factor=math.sqrt(eff_ratio),
        stokes_wavelength_nm=wavelength_nm(stokes),
        pump_optical_freq=optical_frequency(wavelength),
    )
    return res


def run_tuning(cfg: LinkConfig, wavelengths=None, temperature=Temperature.T3K) -> ExperimentResult:
    """Channel center versus pump wavelength (two-point linear map)."""
    wl = np.arange(1534.0, 1570.0 + 1e-9, 2.0) if wavelengths is None else np.asarray(wavelengths, dtype=float)
    centers = wavelength_sweep(cfg.transducer, wl, temperature)
    res = ExperimentResult("tuning", metadata=_metadata(cfg, temperature=Temperature.parse(temperature).value))
    res.raw.update(wavelengths_nm=wl, centers=centers)
    res.fits["slope"] = fit_slope(wl, centers)
    outside = [float(w) for w in wl if not cfg.transducer.in_coupler_band(float(w))]
    res.summary.update(span=float(np.ptp(centers)), slope_hz_per_nm=res.fits["slope"].params["slope"], outside_coupler_band=outside)
    res.summary["readout_channels"] = [
        {"f_r": s.readout.f_r, "upconverted": output_frequency(cfg, i, True)} for i, s in enumerate(cfg.qubits)
    ]
    return res


def run_linearity(
    cfg: LinkConfig,
    mw_powers_dbm=None,
    wavelength: float = 1550.0,
    pump_power: float = 0.1,
    temperature=Temperature.T300K,
    detected_dbm: float = 5.0,
    duration: float = 10e-6,
    floor_margin_db: float = 10.0,
) -> ExperimentResult:
    """Beat-note power against microwave drive power at the channel center.

    The reflected pump and sideband are amplified so the light on the
    photodiode sits at ``detected_dbm``. Points within ``floor_margin_db`` of
    the expected noise floor are flagged and left out of the slope fit.
    """
    p_dbm = np.arange(-15.0, 15.0 + 1e-9, 5.0) if mw_powers_dbm is None else np.asarray(mw_powers_dbm, dtype=float)
    sub = _single_pump(cfg, wavelength, pump_power, temperature, detected_dbm)
    freq = channel_center(sub.transducer, wavelength, temperature)
    beat = []
    for n, p in enumerate(p_dbm):
        watts = 0.0 if p == -np.inf else 1e-3 * 10 ** (p / 10)
        rec = transducer_to_detector(sub, _tone(watts, freq, duration, sub.sample_rate), derive_seed(cfg.seed, "linearity", n))
        beat.append(abs(complex(iq_demodulate(rec, freq))) ** 2)
    beat = np.array(beat)
    edfa = sub.stage("EDFA")
    det = sub.detector
    lo = pump_power * sub.pump_return * edfa.amplitude_gain**2
    floor_w = (det.responsivity**2 * 2 * det.load * lo * edfa.amplitude_gain**2 * edfa.added_noise_psd + sub.noise.psd) / duration
    with np.errstate(divide="ignore"):
        beat_dbm = 10 * np.log10(beat / 1e-3)
    floor_dbm = 10 * math.log10(floor_w / 1e-3) if floor_w > 0 else -math.inf
    flagged = beat_dbm < floor_dbm + floor_margin_db
    res = ExperimentResult(
        "linearity",
        metadata=_metadata(sub, wavelength=wavelength, pump_power=pump_power, detected_dbm=detected_dbm),
    )
    res.raw.update(input_dbm=p_dbm, beat_dbm=beat_dbm, noise_limited=flagged)
    use = np.isfinite(p_dbm) & np.isfinite(beat_dbm) & ~flagged
    res.summary.update(noise_floor_dbm=floor_dbm, channel_frequency=freq, noise_limited_points=int(flagged.sum()))
    if flagged.any():
        res.warnings.append(f"{int(flagged.sum())} point(s) within {floor_margin_db} dB of the noise floor")
    if use.sum() >= 2:
        res.fits["slope"] = fit_slope(p_dbm[use], beat_dbm[use])
        res.summary["slope_db_per_db"] = res.fits["slope"].params["slope"]
        res.summary["conversion_db"] = float(np.mean(beat_dbm[use] - p_dbm[use]))
    return res


# -- budget --------------------------------------------------------------------------


def run_budget(
    cfg: LinkConfig,
    spacing: float = 5e6,
    per_channel_pump: float = 10e-3,
    cooling_budget: float = 1.0,
    target_efficiency: float = 1e-2,
    tunable_span: float | None = None,
) -> ExperimentResult:
    """Channel count from tuning span and cooling power, plus per-channel readout SNR.

    The SNR is that of the configured optical readout chain rebuilt with a
    pump of ``per_channel_pump`` and a cryogenic efficiency of
    ``target_efficiency``.
    """
    span = cfg.transducer.tunable_span if tunable_span is None else float(tunable_span)
    res = ExperimentResult(
        "budget",
        metadata=_metadata(
            cfg, spacing=spacing, per_channel_pump=per_channel_pump, cooling_budget=cooling_budget, target_efficiency=target_efficiency
        ),
    )
    errors = []
    if not spacing > 0 or not per_channel_pump > 0 or not cooling_budget >= 0:
        raise ConfigError("spacing and per_channel_pump must be positive, cooling_budget non-negative")
    if spacing > span:
        errors.append(f"channel spacing {spacing:g} Hz exceeds tunable span {span:g} Hz")
        by_bw = 0
    else:
        by_bw = int(math.floor(span / spacing + 1e-9))
    by_power = int(math.floor(cooling_budget / per_channel_pump + 1e-9))
    t = cfg.transducer
    scale = target_efficiency / t.eta_cryo
    try:
        target_model = replace(t, eta_cryo=target_efficiency, eta_300K=min(1.0, t.eta_300K * scale))
    except ConfigError as exc:
        raise ConfigError(f"target_efficiency {target_efficiency}: {exc}") from exc
    sub = replace(
        cfg,
        transducer=target_model,
        pumps=(replace(cfg.pumps[0], power=per_channel_pump),),
        io_mode=IOMode.MO,
    )
    snr = linear_readout(sub, (0,), optical=True).snr(sub, 0)
    n_avg = cfg.experiments.single_shot_average
    res.summary.update(
        tunable_span=span,
        channels_by_bandwidth=by_bw,
        channels_by_power=by_power,
        channels=min(by_bw, by_power),
        snr_single_shot=snr,
        snr_averaged=snr * math.sqrt(n_avg),
        n_average=n_avg,
        errors=errors,
    )
    res.warnings.extend(errors)
    return res
