"""Optical control downlink: quadrature-biased MZM, fiber, UTC photodiode.

Real voltages and optical intensities travel as ``ComplexEnvelope`` with
``carrier_freq = 0`` and real samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signal import ComplexEnvelope, ToneSpec, iq_demodulate


@dataclass(frozen=True)
class EomParams:
    v_pi: float = 5.0
    bias: str = "quadrature"
    carrier_power: float = 10e-3
    linearized: bool = False

    def __post_init__(self):
        if not self.v_pi > 0:
            raise ValueError("v_pi must be positive")
        if self.bias != "quadrature":
            raise ValueError("only quadrature bias is modeled")
        if not self.carrier_power >= 0:
            raise ValueError("carrier_power must be >= 0")


@dataclass(frozen=True)
class UtcParams:
    responsivity: float = 0.3
    bandwidth3db: float = 10e9
    load: float = 50.0

    def __post_init__(self):
        if not self.responsivity > 0 or not self.bandwidth3db > 0 or not self.load > 0:
            raise ValueError("responsivity, bandwidth3db and load must be positive")

    def response(self, freq):
        """One-pole low-pass transfer function H(f)."""
        return 1.0 / (1.0 + 1j * np.asarray(freq, dtype=float) / self.bandwidth3db)


def _real_samples(env: ComplexEnvelope, what: str) -> np.ndarray:
    if env.carrier_freq != 0:
        raise ValueError(f"{what} must be a real baseband record (carrier_freq 0)")
    s = env.samples
    if np.any(np.abs(s.imag) > 1e-12 * max(1.0, float(np.abs(s.real).max()))):
        raise ValueError(f"{what} must have real samples")
    return s.real


def eom_modulate(rf: ComplexEnvelope, e: EomParams) -> ComplexEnvelope:
    """Intensity ``P/2 (1 + sin(pi v / v_pi))``; linearized mode drops the sine."""
    v = _real_samples(rf, "rf voltage")
    x = np.pi * v / e.v_pi
    intensity = 0.5 * e.carrier_power * (1 + (x if e.linearized else np.sin(x)))
    return ComplexEnvelope(intensity, rf.sample_rate, 0.0)


def utc_detect(intensity: ComplexEnvelope, u: UtcParams, ac_coupled: bool = False) -> ComplexEnvelope:
    """Photocurrent through a one-pole low-pass, converted to volts across the load.

    The filter is applied in the frequency domain (circular), so tones on
    FFT bins are scaled by exactly ``|H(f)|``.
    """
    p = _real_samples(intensity, "intensity")
    if np.any(p < 0):
        raise ValueError("optical intensity must be non-negative")
    current = u.responsivity * p
    spec = np.fft.rfft(current)
    f = np.fft.rfftfreq(current.size, 1.0 / intensity.sample_rate)
    spec = spec * u.response(f)
    if ac_coupled:
        spec[0] = 0
    v = np.fft.irfft(spec, current.size) * u.load
    return ComplexEnvelope(v, intensity.sample_rate, 0.0)


def real_tone_amplitude(env: ComplexEnvelope, freq: float) -> complex:
    """Complex amplitude ``A e^{i phi}`` of ``A cos(2 pi f t + phi)`` in a real record."""
    return 2 * complex(iq_demodulate(env, freq))


def tones_voltage(tones: Sequence[ToneSpec], duration: float, sample_rate: float) -> ComplexEnvelope:
    n = int(round(duration * sample_rate))
    if n < 2:
        raise ValueError("duration too short for sample_rate")
    t = np.arange(n) / sample_rate
    v = np.zeros(n)
    for tone in tones:
        if tone.frequency >= sample_rate / 2:
            raise ValueError(f"tone at {tone.frequency} Hz is above Nyquist")
        v += tone.amplitude * np.cos(2 * np.pi * tone.frequency * t + tone.phase)
    return ComplexEnvelope(v, sample_rate, 0.0)


def synthesize_control(
    tones: Sequence[ToneSpec],
    e: EomParams,
    u: UtcParams,
    duration: float,
    sample_rate: float = 64e9,
    ac_coupled: bool = False,
) -> ComplexEnvelope:
    """Sum of voltage tones -> EOM -> UTC photodiode; returns the cold-stage voltage."""
    v = tones_voltage(tones, duration, sample_rate)
    return utc_detect(eom_modulate(v, e), u, ac_coupled)


def small_signal_gain(e: EomParams, u: UtcParams, freq: float) -> complex:
    """Output volts per input volt at ``freq`` in the small-signal limit."""
    return complex(math.pi * e.carrier_power / (2 * e.v_pi) * u.responsivity * u.load * u.response(freq))


def drive_transfer(e: EomParams, u: UtcParams, freq: float, amplitude: float, duration: float = 500e-9, sample_rate: float = 64e9) -> complex:
    """Complex output/input amplitude ratio for a single tone pushed through the link.

    ``freq`` should sit on an FFT bin of the record (``freq * duration`` integer).
    """
    out = synthesize_control([ToneSpec(freq, amplitude)], e, u, duration, sample_rate)
    return real_tone_amplitude(out, freq) / amplitude
