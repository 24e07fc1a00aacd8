"""Signal chains between the qubit plant and the digitizer.

Readout, microwave path (``M``): probe -> HEMT -> receiver.
Readout, optical path (``O``): probe -> JPC -> HEMT -> transducer (one
sideband per pump) -> EDFA -> heterodyne with the returned pumps -> receiver.

``propagate`` pushes a full waveform through a chain. ``LinearReadout`` is
the per-shot fast path: the chain is complex-linear, so each demodulated
channel is ``C @ a + w`` with ``a`` the per-qubit probe amplitudes, ``C``
measured once from noiseless templates and ``w`` circular Gaussian with the
variance the stage noise densities imply.

Drive: the microwave path delivers pulses as programmed. The optical path
passes through the quadrature-biased modulator, whose sine transfer
compresses the fundamental by ``2 J1(x) / x``; pulses are calibrated at
the pi amplitude, so other amplitudes come out slightly off. The excess
rotation jitter of the optical path is applied as its shot-averaged channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import j1

from .config import LinkConfig
from .detection import constant_field, photodetect
from .qubit import PULSE_STEPS, BlochMap, PulseSpec, QubitParams, _gaussian_step_areas, pulse_map
from .signal import ComplexEnvelope, NoiseSpec, add_awgn, derive_seed, iq_demodulate
from .transducer import channel_center, transduce

# -- readout ------------------------------------------------------------------


def output_frequency(cfg: LinkConfig, index: int, optical: bool) -> float:
    """Frequency at which qubit ``index`` appears in the detected record."""
    f = cfg.qubit(index).readout.f_r
    return f + cfg.jpc.pump_freq if optical else f


def record_carrier(cfg: LinkConfig, indices, optical: bool) -> float:
    fs = [output_frequency(cfg, i, optical) for i in indices]
    return 0.5 * (min(fs) + max(fs))


def probe_envelope(cfg: LinkConfig, amplitudes: dict, duration: float | None = None, carrier: float | None = None) -> ComplexEnvelope:
    """Sum of rectangular reflected probes; ``amplitudes`` maps qubit index -> sqrt(W)."""
    idx = sorted(amplitudes)
    if duration is None:
        duration = max(cfg.qubit(i).readout.probe_duration for i in idx)
    fc = record_carrier(cfg, idx, False) if carrier is None else carrier
    n = max(2, int(round(duration * cfg.sample_rate)))
    t = np.arange(n) / cfg.sample_rate
    s = np.zeros(n, dtype=np.complex128)
    for i in idx:
        s += amplitudes[i] * np.exp(2j * np.pi * (cfg.qubit(i).readout.f_r - fc) * t)
    return ComplexEnvelope(s, cfg.sample_rate, fc)


def returned_pumps(cfg: LinkConfig, like: ComplexEnvelope, edfa_gain: float) -> list[ComplexEnvelope]:
    return [
        constant_field(p.power * cfg.pump_return * edfa_gain**2, like, p.optical_freq, p.phase)
        for p in cfg.pumps
    ]


def transducer_to_detector(cfg: LinkConfig, mw: ComplexEnvelope, seed: int | None = None, pumps=None) -> ComplexEnvelope:
    """Transducer -> EDFA -> photodiode -> receiver, for a microwave input at the IDT."""
    pumps = cfg.pumps if pumps is None else pumps
    edfa = cfg.stage("EDFA")
    sidebands = transduce(cfg.transducer, mw, pumps, cfg.temperature)
    amplified = [
        edfa.apply(s, None if seed is None else derive_seed(seed, "edfa", k)) for k, s in enumerate(sidebands)
    ]
    lo = returned_pumps(replace(cfg, pumps=tuple(pumps)), mw, edfa.amplitude_gain)
    det = cfg.detector
    rec = photodetect(lo, amplified, det.bandwidth, det.responsivity, det.load)
    return _receiver(cfg, rec, seed)


def _receiver(cfg: LinkConfig, env: ComplexEnvelope, seed: int | None) -> ComplexEnvelope:
    if seed is None or cfg.noise.psd == 0:
        return env
    return add_awgn(env, NoiseSpec(cfg.noise.psd, derive_seed(seed, "receiver")))


def propagate(cfg: LinkConfig, probe: ComplexEnvelope, optical: bool, seed: int | None = None) -> ComplexEnvelope:
    """Reflected probe -> detected record; noiseless when ``seed`` is None."""
    from .qubit import jpc_upconvert

    hemt = cfg.stage("HEMT")
    hemt_seed = None if seed is None else derive_seed(seed, "hemt")
    if not optical:
        return _receiver(cfg, hemt.apply(probe, hemt_seed), seed)
    mw = hemt.apply(jpc_upconvert(probe, cfg.jpc), hemt_seed)
    return transducer_to_detector(cfg, mw, seed)


@dataclass(frozen=True)
class LinearReadout:
    """Per-shot demodulated IQ model of one readout chain.

    ``gain[i, j]``: demodulated output on channel ``i`` per unit complex probe
    amplitude of qubit ``j``. ``noise_var[i]``: complex variance of the
    demodulated noise on channel ``i`` (``psd / T`` summed over stages).
    """

    indices: tuple
    optical: bool
    gain: np.ndarray
    noise_var: np.ndarray
    frequencies: np.ndarray
    duration: float

    @property
    def sigma_quadrature(self) -> np.ndarray:
        return np.sqrt(self.noise_var / 2)

    def centers(self, cfg: LinkConfig, k: int) -> tuple[complex, complex]:
        """Noiseless (g, e) IQ centers on channel ``k`` with the other qubits in g."""
        base = self._amps(cfg, np.zeros(len(self.indices), dtype=bool))
        g = complex(self.gain[k] @ base)
        amps = base.copy()
        amps[k] = cfg.qubit(self.indices[k]).readout.response(True)
        return g, complex(self.gain[k] @ amps)

    def _amps(self, cfg, excited) -> np.ndarray:
        return np.array(
            [cfg.qubit(i).readout.response(e) for i, e in zip(self.indices, excited)], dtype=np.complex128
        )

    def snr(self, cfg: LinkConfig, k: int = 0) -> float:
        """Single-shot half-separation over per-quadrature noise (mu / sigma)."""
        g, e = self.centers(cfg, k)
        sigma = float(self.sigma_quadrature[k])
        return abs(e - g) / 2 / sigma if sigma > 0 else math.inf

    def shots(self, cfg: LinkConfig, excited: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Per-shot IQ; ``excited`` is (shots, n_qubits) bool -> (shots, n_qubits) complex."""
        ex = np.atleast_2d(np.asarray(excited, dtype=bool))
        a = np.stack([cfg.qubit(i).readout.response(ex[:, k]) for k, i in enumerate(self.indices)], axis=1)
        mean = a @ self.gain.T
        s = self.sigma_quadrature
        w = rng.standard_normal(mean.shape) + 1j * rng.standard_normal(mean.shape)
        return mean + w * s

    def averaged(self, cfg: LinkConfig, n_excited: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
        """Mean IQ of ``shots`` repetitions, given the number of |e> outcomes per qubit.

        Same distribution as averaging ``shots()`` (the noise mean is Gaussian
        with variance / shots), at the cost of one draw per channel.
        """
        ne = np.atleast_2d(np.asarray(n_excited, dtype=float))
        frac = ne / shots
        a = np.stack(
            [
                (1 - frac[:, k]) * cfg.qubit(i).readout.response(False) + frac[:, k] * cfg.qubit(i).readout.response(True)
                for k, i in enumerate(self.indices)
            ],
            axis=1,
        )
        mean = a @ self.gain.T
        s = self.sigma_quadrature / math.sqrt(shots)
        w = rng.standard_normal(mean.shape) + 1j * rng.standard_normal(mean.shape)
        return mean + w * s


def _noise_var(cfg: LinkConfig, gain_diag: np.ndarray, optical: bool, freqs, duration: float) -> np.ndarray:
    hemt = cfg.stage("HEMT")
    jpc = abs(cfg.jpc.amplitude_gain) if optical else 1.0
    # HEMT input-referred: same transfer as the probe, minus the JPC in front
    psd = np.abs(gain_diag / jpc) ** 2 * hemt.added_noise_psd
    if optical:
        edfa = cfg.stage("EDFA")
        det = cfg.detector
        k2 = det.responsivity**2 * 2 * det.load
        lo_power = sum(p.power for p in cfg.pumps) * cfg.pump_return * edfa.amplitude_gain**2
        psd = psd + k2 * lo_power * edfa.amplitude_gain**2 * edfa.added_noise_psd
    psd = psd + cfg.noise.psd
    return psd / duration


def linear_readout(cfg: LinkConfig, indices=None, optical: bool | None = None, duration: float | None = None) -> LinearReadout:
    indices = tuple(range(len(cfg.qubits))) if indices is None else tuple(indices)
    if optical is None:
        optical = cfg.io_mode.optical_readout
    return _linear_readout(cfg, indices, optical, duration)


@lru_cache(maxsize=64)
def _linear_readout(cfg, indices, optical, duration) -> LinearReadout:
    if duration is None:
        duration = max(cfg.qubit(i).readout.probe_duration for i in indices)
    # Short templates suffice: all tones sit on FFT bins of a record that
    # holds an integer number of the 1 MHz grid (default frequencies).
    t_tmpl = _template_duration(cfg, indices, optical)
    carrier = record_carrier(cfg, indices, False)
    freqs = np.array([output_frequency(cfg, i, optical) for i in indices])
    gain = np.zeros((len(indices), len(indices)), dtype=np.complex128)
    for j, qj in enumerate(indices):
        rec = propagate(cfg, probe_envelope(cfg, {qj: 1.0}, t_tmpl, carrier), optical)
        for i in range(len(indices)):
            gain[i, j] = complex(iq_demodulate(rec, freqs[i]))
    nv = _noise_var(cfg, np.diag(gain), optical, freqs, duration)
    return LinearReadout(indices, optical, gain, nv, freqs, duration)


def _template_duration(cfg, indices, optical) -> float:
    """Shortest record (>= 1 us) on which every readout tone and offset is periodic."""
    fc = record_carrier(cfg, indices, False)
    offsets = [cfg.qubit(i).readout.f_r - fc for i in indices]
    offsets += [a - b for a in offsets for b in offsets]
    for n_us in range(1, 101):
        t = n_us * 1e-6
        if all(abs(o * t - round(o * t)) < 1e-6 for o in offsets):
            return t
    return max(cfg.qubit(i).readout.probe_duration for i in indices)


def full_waveform_shot(cfg: LinkConfig, excited: dict, optical: bool, seed: int) -> ComplexEnvelope:
    """Detected record of one multiplexed readout shot, noise included."""
    amps = {i: complex(cfg.qubit(i).readout.response(e)) for i, e in excited.items()}
    return propagate(cfg, probe_envelope(cfg, amps), optical, seed)


def channel_collisions(cfg: LinkConfig) -> list[tuple[int, int, float]]:
    """Pump pairs whose channel centers are closer than three bandwidths."""
    bw = cfg.transducer.bandwidth(cfg.temperature)
    centers = [channel_center(cfg.transducer, p.wavelength, cfg.temperature) for p in cfg.pumps]
    out = []
    for a in range(len(centers)):
        for b in range(a + 1, len(centers)):
            d = abs(centers[a] - centers[b])
            if d < 3 * bw:
                out.append((a, b, d))
    return out


# -- drive ----------------------------------------------------------------------


def fundamental_gain(v_peak_over_vpi, linearized: bool = False):
    """Modulator fundamental at drive ``x = pi v / v_pi``, relative to the linear term.

    The quadrature-biased sine gives ``2 J1(x)`` where the linear
    transfer gives ``x``; returns ``2 J1(x) / x`` (1 when linearized).
    """
    x = np.pi * np.asarray(v_peak_over_vpi, dtype=float)
    if linearized:
        return np.ones_like(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(x == 0, 1.0, 2 * j1(x) / np.where(x == 0, 1.0, x))
    return r


@lru_cache(maxsize=4096)
def optical_amplitude(cfg_drive_fraction: float, linearized: bool, amplitude: float) -> float:
    """Delivered amplitude (pi units) for a programmed ``amplitude``.

    The pi pulse (peak ``cfg_drive_fraction * v_pi``) is calibrated to an
    exact pi; other amplitudes follow the compressed pulse area.
    """
    if amplitude == 0 or linearized:
        return amplitude
    steps = _gaussian_step_areas(PulseSpec(), PULSE_STEPS)
    shape = steps / steps.max()

    def area(a):
        v = a * cfg_drive_fraction * shape
        return float(np.sum(v * fundamental_gain(v)))

    return amplitude * area(abs(amplitude)) / (abs(amplitude) * area(1.0))


def rotation_jitter_map(axis_phase: float, angle: float, sigma: float) -> BlochMap:
    """Average of rotations about the drive axis by ``angle * eps``, eps ~ N(0, sigma^2)."""
    n = np.array([math.cos(axis_phase), math.sin(axis_phase), 0.0])
    nn = np.outer(n, n)
    c = math.exp(-0.5 * (angle * sigma) ** 2)
    return BlochMap(nn + c * (np.eye(3) - nn), np.zeros(3))


def drive_pulse_map(cfg: LinkConfig, q: QubitParams, p: PulseSpec, optical: bool | None = None, decay: bool = True) -> BlochMap:
    """Bloch map of one pulse as delivered by the configured drive path."""
    if optical is None:
        optical = cfg.io_mode.optical_drive
    if not optical:
        return pulse_map(q, p, decay)
    amp = optical_amplitude(cfg.drive.pi_vpi_fraction, cfg.eom.linearized, p.amplitude)
    m = pulse_map(q, replace(p, amplitude=amp), decay)
    sigma = cfg.drive.optical_excess_noise
    if sigma > 0:
        angle = math.pi * abs(amp) * p.duration / q.pi_duration
        m = m.then(rotation_jitter_map(p.phase, angle, sigma))
    return m
