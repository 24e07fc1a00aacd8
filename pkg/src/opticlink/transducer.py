"""Traveling-wave Brillouin microwave-to-optical transducer.

The device is reduced to its effective behaviour: each optical pump opens a
conversion channel whose microwave center frequency is fixed by phase matching
(a two-point linear map of pump wavelength), whose shape is a sinc^2 (or
Lorentzian) of known 3 dB width, and whose peak photon-flux efficiency is
``eta * P_pump``. The microwave drive is converted into one optical sideband
per pump.

Stokes phase convention: the scattered field follows ``b_s ~ b_p a_m^dagger``,
so a microwave component at ``f_c + d`` lands at optical ``f_p - f_c - d`` and
the sideband envelope is the *conjugate* of the (filtered) microwave envelope,
times the pump phase. Heterodyning against the same pump conjugates again, so
the full chain microwave -> optical -> beat note is complex-linear.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, OutOfBandError
from .signal import ComplexEnvelope

SPEED_OF_LIGHT = 299_792_458.0
PLANCK = 6.62607015e-34

# x at which np.sinc(x)**2 == 1/2
SINC2_HALF_POWER_X = brentq(lambda x: np.sinc(x) ** 2 - 0.5, 0.1, 0.9, xtol=1e-15)


class Temperature(str, Enum):
    T300K = "300K"
    T3K = "3K"

    @classmethod
    def parse(cls, value) -> "Temperature":
        if isinstance(value, cls):
            return value
        v = str(value).strip().upper().replace(" ", "")
        aliases = {"300K": cls.T300K, "ROOM": cls.T300K, "3K": cls.T3K, "3.3K": cls.T3K, "CRYO": cls.T3K}
        if v not in aliases:
            raise ConfigError(f"unknown temperature {value!r}")
        return aliases[v]


class Lineshape(str, Enum):
    SINC2 = "sinc2"
    LORENTZIAN = "lorentzian"


class CouplerBandWarning(UserWarning):
    pass


def optical_frequency(wavelength_nm: float) -> float:
    return SPEED_OF_LIGHT / (wavelength_nm * 1e-9)


def wavelength_nm(freq: float) -> float:
    return SPEED_OF_LIGHT / freq * 1e9


def lineshape_power(detuning, bandwidth3db: float, shape=Lineshape.SINC2):
    """Normalized power response: 1 at zero detuning, 1/2 at +-bandwidth/2."""
    d = np.asarray(detuning, dtype=float)
    shape = Lineshape(shape)
    if shape is Lineshape.SINC2:
        return np.sinc(2 * SINC2_HALF_POWER_X * d / bandwidth3db) ** 2
    return 1.0 / (1.0 + (2 * d / bandwidth3db) ** 2)


@dataclass(frozen=True)
class PumpTone:
    wavelength: float  # nm
    power: float  # W
    phase: float = 0.0

    def __post_init__(self):
        if not self.power >= 0:
            raise ValueError(f"pump power must be >= 0, got {self.power}")
        if not self.wavelength > 0:
            raise ValueError(f"pump wavelength must be positive, got {self.wavelength}")

    @property
    def optical_freq(self) -> float:
        return optical_frequency(self.wavelength)

    @property
    def amplitude(self) -> complex:
        """sqrt(W) field amplitude including phase."""
        return math.sqrt(self.power) * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class ChannelResponse:
    center: float
    bandwidth3db: float
    peak_flux_efficiency: float
    shape: Lineshape = Lineshape.SINC2

    def __call__(self, freq):
        """Photon-flux conversion efficiency at microwave frequency ``freq``."""
        return self.peak_flux_efficiency * lineshape_power(
            np.asarray(freq, dtype=float) - self.center, self.bandwidth3db, self.shape
        )


@dataclass(frozen=True)
class PhotonFluxPair:
    n_in: float
    n_out: float


@dataclass(frozen=True)
class CouplingDoc:
    """Coupled-mode rates (Hz); reporting only, the model never reads them."""

    g_em: float | None = None
    g_om: float | None = None
    kappa_e: float | None = None
    kappa_m: float | None = None
    kappa_o: float | None = None


@dataclass(frozen=True)
class TransducerModel:
    """Effective transducer parameters.

    Efficiencies are photon-flux ratios per watt of pump. ``wavelength_map``
    is the cryogenic calibration ``((nm, Hz), (nm, Hz))``; room temperature
    channels sit ``center_shift_cool`` below it. ``coupling_doc`` only carries
    the coupled-mode rates for reporting (none are published).
    """

    eta_300K: float = 3.2e-7
    eta_cryo: float = 2.5e-6
    bw3db_300K: float = 2.63e6
    bw3db_cryo: float = 0.88e6
    center_shift_cool: float = 131.56e6
    amp_factor_cool: float = 2.8
    lineshape: Lineshape = Lineshape.SINC2
    wavelength_map: tuple = ((1550.00, 8.743e9), (1560.95, 8.818e9))
    idt_band: tuple = (8.4e9, 9.0e9)
    coupler_band: tuple = (1530.0, 1575.0)
    tunable_span: float = 200e6
    branch: str = "stokes"
    device_phase: float = 0.0
    coupling_doc: CouplingDoc = field(default_factory=CouplingDoc)

    def __post_init__(self):
        object.__setattr__(self, "lineshape", Lineshape(self.lineshape))
        wm = tuple((float(a), float(b)) for a, b in self.wavelength_map)
        object.__setattr__(self, "wavelength_map", wm)
        object.__setattr__(self, "idt_band", tuple(float(x) for x in self.idt_band))
        object.__setattr__(self, "coupler_band", tuple(float(x) for x in self.coupler_band))
        for name in ("eta_300K", "eta_cryo"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ConfigError(f"{name} must lie in (0, 1] per watt, got {v}")
        if not (self.bw3db_300K > 0 and self.bw3db_cryo > 0):
            raise ConfigError("bandwidths must be positive")
        if not self.amp_factor_cool > 0:
            raise ConfigError("amp_factor_cool must be positive")
        if len(wm) != 2 or wm[0][0] == wm[1][0]:
            raise ConfigError(f"wavelength_map needs two distinct wavelengths, got {wm}")
        ratio = self.eta_cryo / self.eta_300K
        if abs(self.amp_factor_cool**2 / ratio - 1) > 0.05:
            raise ConfigError(
                f"amp_factor_cool^2={self.amp_factor_cool**2:.3f} inconsistent with "
                f"eta_cryo/eta_300K={ratio:.3f} (>5%)"
            )
        if self.branch not in ("stokes", "anti-stokes"):
            raise ConfigError(f"branch must be 'stokes' or 'anti-stokes', got {self.branch!r}")

    @property
    def map_slope(self) -> float:
        """Channel tuning slope in Hz per nm."""
        (l1, f1), (l2, f2) = self.wavelength_map
        return (f2 - f1) / (l2 - l1)

    def eta(self, temperature) -> float:
        return self.eta_cryo if Temperature.parse(temperature) is Temperature.T3K else self.eta_300K

    def bandwidth(self, temperature) -> float:
        return self.bw3db_cryo if Temperature.parse(temperature) is Temperature.T3K else self.bw3db_300K

    def in_coupler_band(self, wavelength: float) -> bool:
        lo, hi = self.coupler_band
        return lo <= wavelength <= hi


def channel_center(model: TransducerModel, pump_wavelength: float, temperature) -> float:
    """Microwave frequency phase-matched to ``pump_wavelength`` (nm)."""
    if not model.in_coupler_band(pump_wavelength):
        warnings.warn(
            f"pump wavelength {pump_wavelength} nm outside coupler band {model.coupler_band}",
            CouplerBandWarning,
            stacklevel=2,
        )
    (l1, f1), _ = model.wavelength_map
    f = f1 + (pump_wavelength - l1) * model.map_slope
    if Temperature.parse(temperature) is Temperature.T300K:
        f -= model.center_shift_cool
    return f


def channel_response(model: TransducerModel, pump: PumpTone, temperature) -> ChannelResponse:
    return ChannelResponse(
        center=channel_center(model, pump.wavelength, temperature),
        bandwidth3db=model.bandwidth(temperature),
        peak_flux_efficiency=model.eta(temperature) * pump.power,
        shape=model.lineshape,
    )


def sideband_carrier(model: TransducerModel, pump: PumpTone, mw_carrier: float) -> float:
    """Optical carrier of the scattered sideband (energy conservation)."""
    if model.branch == "stokes":
        return pump.optical_freq - mw_carrier
    return pump.optical_freq + mw_carrier


def _check_idt(model: TransducerModel, freq: float):
    lo, hi = model.idt_band
    if not lo <= freq <= hi:
        raise OutOfBandError(f"microwave carrier {freq} Hz outside IDT band {model.idt_band}")


def transduce(
    model: TransducerModel,
    mw_env: ComplexEnvelope,
    pumps: Sequence[PumpTone],
    temperature,
) -> list[ComplexEnvelope]:
    """Convert a microwave envelope (sqrt(W)) into one optical sideband per pump.

    Each spectral component is weighted by sqrt(flux efficiency * f_opt / f_mw)
    so that the output/input photon-flux ratio equals the channel response.
    Pumps are non-depleted, so each sideband is computed independently.
    """
    _check_idt(model, mw_env.carrier_freq)
    n = len(mw_env)
    spectrum = np.fft.fft(mw_env.samples)
    f_mw = mw_env.carrier_freq + np.fft.fftfreq(n, 1.0 / mw_env.sample_rate)
    stokes = model.branch == "stokes"
    out = []
    for pump in pumps:
        resp = channel_response(model, pump, temperature)
        f_opt = pump.optical_freq - f_mw if stokes else pump.optical_freq + f_mw
        valid = (f_mw > 0) & (f_opt > 0)
        gain = np.zeros(n)
        gain[valid] = np.sqrt(resp(f_mw[valid]) * f_opt[valid] / f_mw[valid])
        y = np.fft.ifft(spectrum * gain)
        rot = complex(np.exp(1j * (pump.phase + model.device_phase)))
        s = rot * (np.conj(y) if stokes else y)
        out.append(ComplexEnvelope(s, mw_env.sample_rate, sideband_carrier(model, pump, mw_env.carrier_freq)))
    return out


def flux_pair(model: TransducerModel, mw_power: float, mw_freq: float, pump: PumpTone, temperature) -> PhotonFluxPair:
    if mw_power < 0:
        raise ValueError(f"mw_power must be >= 0, got {mw_power}")
    n_in = mw_power / (PLANCK * mw_freq)
    n_out = n_in * float(channel_response(model, pump, temperature)(mw_freq))
    return PhotonFluxPair(n_in, n_out)


def s21_sweep(model: TransducerModel, freq_range, points: int, pump: PumpTone, temperature):
    """Power response |S21|^2 in dB across ``freq_range`` (Hz, Hz).

    Returns ``(freqs, s21_db)``. Nulls of the sinc^2 are floored at -3000 dB.
    """
    if points < 3:
        raise ValueError("need at least 3 sweep points")
    freqs = np.linspace(freq_range[0], freq_range[1], int(points))
    r = channel_response(model, pump, temperature)(freqs)
    return freqs, 10 * np.log10(np.maximum(r, 1e-300))


def wavelength_sweep(model: TransducerModel, wavelengths, temperature=Temperature.T3K) -> np.ndarray:
    """Channel centers for a list of pump wavelengths."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CouplerBandWarning)
        return np.array([channel_center(model, w, temperature) for w in wavelengths])
