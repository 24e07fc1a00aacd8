"""Sampled complex-envelope primitives.

Every field or voltage in the simulator is a :class:`ComplexEnvelope`: a
uniformly sampled complex baseband record referenced to an explicit absolute
``carrier_freq``. A sample ``s[k]`` represents the real passband signal
``Re(s[k] * exp(i 2 pi carrier_freq t_k))``; when samples are in sqrt(W) the
mean of ``|s|**2`` is the signal power.

Noise convention (used everywhere): PSDs are one-sided in W/Hz and a white
complex record sampled at ``fs`` has per-sample variance ``psd * fs``.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_SAMPLE_RATE = 1e9


def _finite(x: float, name: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x}")
    return x


@dataclass(frozen=True)
class ComplexEnvelope:
    samples: np.ndarray
    sample_rate: float
    carrier_freq: float = 0.0

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.complex128, copy=True).reshape(-1)
        if s.size == 0:
            raise ValueError("envelope must contain at least one sample")
        if not np.all(np.isfinite(s)):
            raise ValueError("envelope samples must be finite")
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))
        object.__setattr__(self, "carrier_freq", _finite(self.carrier_freq, "carrier_freq"))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    @property
    def power(self) -> float:
        """Mean of |samples|^2 (W when samples are sqrt(W))."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def replace(self, samples=None, carrier_freq=None) -> "ComplexEnvelope":
        return ComplexEnvelope(
            self.samples if samples is None else samples,
            self.sample_rate,
            self.carrier_freq if carrier_freq is None else carrier_freq,
        )

    def _check_compatible(self, other: "ComplexEnvelope"):
        if (
            other.sample_rate != self.sample_rate
            or other.carrier_freq != self.carrier_freq
            or len(other) != len(self)
        ):
            raise ValueError("envelopes differ in sample rate, carrier or length")

    def __add__(self, other):
        if not isinstance(other, ComplexEnvelope):
            return NotImplemented
        self._check_compatible(other)
        return self.replace(samples=self.samples + other.samples)

    def __mul__(self, alpha):
        if isinstance(alpha, ComplexEnvelope):
            return NotImplemented
        return self.replace(samples=self.samples * complex(alpha))

    __rmul__ = __mul__


@dataclass(frozen=True)
class ToneSpec:
    frequency: float
    amplitude: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.frequency >= 0:
            raise ValueError(f"tone frequency must be >= 0, got {self.frequency}")
        if not self.amplitude >= 0:
            raise ValueError(f"tone amplitude must be >= 0, got {self.amplitude}")
        object.__setattr__(self, "phase", float(self.phase) % (2 * math.pi))


@dataclass(frozen=True)
class NoiseSpec:
    psd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.psd >= 0 and math.isfinite(self.psd)):
            raise ValueError(f"psd must be finite and >= 0, got {self.psd}")
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)


@dataclass(frozen=True)
class IQPoint:
    i: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "i", _finite(self.i, "i"))
        object.__setattr__(self, "q", _finite(self.q, "q"))

    @classmethod
    def from_complex(cls, z: complex) -> "IQPoint":
        return cls(z.real, z.imag)

    def __complex__(self):
        return complex(self.i, self.q)

    @property
    def amplitude(self) -> float:
        return math.hypot(self.i, self.q)


class Spectrum(NamedTuple):
    freqs: np.ndarray
    power_dbm: np.ndarray

    @property
    def power_w(self) -> np.ndarray:
        return 1e-3 * 10.0 ** (self.power_dbm / 10.0)

    def peak_frequencies(self, n: int) -> np.ndarray:
        """Frequencies of the ``n`` strongest bins, ascending."""
        idx = np.argsort(self.power_dbm)[::-1][:n]
        return np.sort(self.freqs[idx])


def as_complex_array(points) -> np.ndarray:
    """Accept IQPoints, complex numbers or (i, q) pairs and return a complex array."""
    if isinstance(points, np.ndarray) and np.iscomplexobj(points):
        return points.reshape(-1)
    out = []
    for p in points:
        if isinstance(p, IQPoint):
            out.append(complex(p))
        elif isinstance(p, (tuple, list)):
            out.append(complex(p[0], p[1]))
        else:
            out.append(complex(p))
    return np.asarray(out, dtype=np.complex128)


def synthesize_tone(
    spec: ToneSpec,
    duration: float,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    carrier_freq: float = 0.0,
) -> ComplexEnvelope:
    """Sample ``spec`` as a baseband envelope referenced to ``carrier_freq``.

    ``samples[k] = A exp(i(2 pi (f - carrier) k / fs + phase))``.
    """
    if not duration > 0 or not sample_rate > 0:
        raise ValueError("duration and sample_rate must be positive")
    n = int(round(duration * sample_rate))
    if n < 2:
        raise ValueError(f"duration*sample_rate must be >= 2, got {duration * sample_rate}")
    k = np.arange(n)
    df = spec.frequency - carrier_freq
    samples = spec.amplitude * np.exp(1j * (2 * np.pi * df * k / sample_rate + spec.phase))
    return ComplexEnvelope(samples, sample_rate, carrier_freq)


def add_awgn(env: ComplexEnvelope, noise: NoiseSpec) -> ComplexEnvelope:
    """Add circular white Gaussian noise of variance ``psd * fs`` per sample."""
    if noise.psd == 0:
        return env
    rng = np.random.default_rng(noise.seed)
    sigma = math.sqrt(noise.psd * env.sample_rate / 2)
    n = len(env)
    w = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return env.replace(samples=env.samples + w)


def retune(env: ComplexEnvelope, new_carrier: float) -> ComplexEnvelope:
    """Express the same passband signal relative to ``new_carrier``."""
    shift = env.carrier_freq - new_carrier
    if shift == 0:
        return env
    ph = np.exp(2j * np.pi * shift * env.times)
    return ComplexEnvelope(env.samples * ph, env.sample_rate, new_carrier)


def frequency_shift(env: ComplexEnvelope, shift: float) -> ComplexEnvelope:
    """Move the signal up by ``shift`` Hz (carrier relabel; samples untouched)."""
    return env.replace(carrier_freq=env.carrier_freq + shift)


def _window_slice(env: ComplexEnvelope, window):
    if window is None:
        return 0, len(env)
    t0, t1 = window
    k0 = int(round(t0 * env.sample_rate))
    k1 = int(round(t1 * env.sample_rate))
    if k0 < 0 or k1 > len(env) or k1 <= k0:
        raise ValueError(f"window {window} outside envelope of duration {env.duration}")
    return k0, k1


def iq_demodulate(env: ComplexEnvelope, ref_freq: float, window=None) -> IQPoint:
    """Time-average of ``samples * exp(-i 2 pi (ref - carrier) t)`` over ``window``.

    ``window`` is ``(t_start, t_stop)`` in seconds from the start of the record;
    ``None`` uses the whole record.
    """
    df = ref_freq - env.carrier_freq
    if abs(df) > env.sample_rate / 2:
        raise ValueError(
            f"reference {ref_freq} Hz is {df} Hz from carrier, beyond Nyquist "
            f"({env.sample_rate / 2} Hz)"
        )
    k0, k1 = _window_slice(env, window)
    k = np.arange(k0, k1)
    lo = np.exp(-2j * np.pi * df * k / env.sample_rate)
    return IQPoint.from_complex(complex(np.mean(env.samples[k0:k1] * lo)))


def average_shots(points) -> tuple[IQPoint, np.ndarray]:
    """Mean IQ point and the per-quadrature standard error of that mean.

    The standard error is ``nan`` for a single point (undefined).
    """
    z = as_complex_array(points)
    n = z.size
    if n == 0:
        raise ValueError("cannot average an empty set of shots")
    mean = IQPoint.from_complex(complex(z.mean()))
    if n == 1:
        return mean, np.array([np.nan, np.nan])
    sem = np.array([z.real.std(ddof=1), z.imag.std(ddof=1)]) / math.sqrt(n)
    return mean, sem


def power_spectrum(env: ComplexEnvelope) -> Spectrum:
    """Periodogram in dBm per bin, absolute frequency axis, ascending.

    Bin powers sum to the time-domain mean power (Parseval). Samples are taken
    to be sqrt(W).
    """
    n = len(env)
    if n < 2:
        raise ValueError("need at least two samples for a spectrum")
    x = np.fft.fftshift(np.fft.fft(env.samples)) / n
    freqs = env.carrier_freq + np.fft.fftshift(np.fft.fftfreq(n, 1.0 / env.sample_rate))
    with np.errstate(divide="ignore"):
        dbm = 10.0 * np.log10(np.abs(x) ** 2 / 1e-3)
    return Spectrum(freqs, dbm)


def sum_envelopes(envs: Sequence[ComplexEnvelope], carrier_freq: float | None = None) -> ComplexEnvelope:
    """Add envelopes sharing rate and length, retuned to a common carrier."""
    if not envs:
        raise ValueError("nothing to sum")
    fc = envs[0].carrier_freq if carrier_freq is None else carrier_freq
    total = np.zeros(len(envs[0]), dtype=np.complex128)
    for e in envs:
        if e.sample_rate != envs[0].sample_rate or len(e) != len(envs[0]):
            raise ValueError("envelopes differ in sample rate or length")
        total = total + retune(e, fc).samples
    return ComplexEnvelope(total, envs[0].sample_rate, fc)


def derive_seed(master: int, *labels) -> int:
    """Stable 64-bit sub-seed from a master seed and a path of labels."""
    key = [int(master) & 0xFFFFFFFF, (int(master) >> 32) & 0xFFFFFFFF]
    for lab in labels:
        key.append(int(lab) & 0xFFFFFFFF if isinstance(lab, (int, np.integer)) else zlib.crc32(str(lab).encode()))
    ss = np.random.SeedSequence(key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(master: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))
