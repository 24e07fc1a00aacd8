"""Uplink back-end: gain stages, heterodyne beat notes, state discrimination and fits.

Fits are plain least squares (``scipy.optimize.curve_fit``) on an internally
normalized abscissa, started from several deterministic initial guesses:
frequencies come from the zero-padded FFT peak, decay times from the slope
of the log-envelope plus a few fixed fractions of the data span. The
lowest-residual converged start wins.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import curve_fit
from scipy.stats import linregress, norm

from .errors import ConfigError, FitError
from .signal import ComplexEnvelope, NoiseSpec, add_awgn, as_complex_array, retune
from .transducer import Lineshape, lineshape_power


@dataclass(frozen=True)
class GainStage:
    """Linear amplifier with input-referred additive white noise."""

    gain_db: float
    added_noise_psd: float = 0.0
    label: str = "HEMT"

    def __post_init__(self):
        if not self.gain_db >= 0:
            raise ValueError("gain_db must be >= 0")
        if not self.added_noise_psd >= 0:
            raise ValueError("added_noise_psd must be >= 0")
        if self.label not in ("HEMT", "EDFA"):
            raise ValueError(f"unknown stage label {self.label!r}")

    @property
    def amplitude_gain(self) -> float:
        return 10 ** (self.gain_db / 20)

    def apply(self, env: ComplexEnvelope, seed: int | None = None) -> ComplexEnvelope:
        """Amplify ``env``; noise is added only when ``seed`` is given."""
        if seed is not None and self.added_noise_psd > 0:
            env = add_awgn(env, NoiseSpec(self.added_noise_psd, seed))
        return env * self.amplitude_gain


class SampledBandWarning(UserWarning):
    """An in-band beat cannot be represented on the record's sampling grid."""


class DetectorBandwidthWarning(UserWarning):
    pass


def beat_note(
    pump_reflection: ComplexEnvelope,
    sideband: ComplexEnvelope,
    detector_bw: float,
    responsivity: float = 1.0,
    load: float = 50.0,
) -> ComplexEnvelope:
    """Photocurrent beat between a pump and a sideband, as an RF envelope in sqrt(W).

    The beat sits at ``|f_pump - f_sideband|``. For a sideband below the pump
    (Stokes) the envelope is ``k * A_pump * conj(A_sideband)``; above the pump
    the roles swap so the envelope always refers to a positive carrier.
    ``k = responsivity * sqrt(2 * load)`` makes ``|envelope|^2`` the RF power
    delivered to ``load``. Beats faster than ``detector_bw`` come out as zeros.
    """
    if pump_reflection.sample_rate != sideband.sample_rate or len(pump_reflection) != len(sideband):
        raise ValueError("pump and sideband must share sampling grid")
    df = pump_reflection.carrier_freq - sideband.carrier_freq
    k = responsivity * math.sqrt(2 * load)
    if df >= 0:
        s = k * pump_reflection.samples * np.conj(sideband.samples)
    else:
        s = k * np.conj(pump_reflection.samples) * sideband.samples
    if abs(df) > detector_bw:
        warnings.warn(
            f"beat note at {abs(df):.6g} Hz exceeds detector bandwidth {detector_bw:.6g} Hz",
            DetectorBandwidthWarning,
            stacklevel=2,
        )
        s = np.zeros_like(s)
    return ComplexEnvelope(s, sideband.sample_rate, abs(df))


def constant_field(power: float, like: ComplexEnvelope, carrier_freq: float, phase: float = 0.0) -> ComplexEnvelope:
    """CW optical field of ``power`` watts on the sampling grid of ``like``."""
    amp = math.sqrt(power) * complex(math.cos(phase), math.sin(phase))
    return ComplexEnvelope(np.full(len(like), amp), like.sample_rate, carrier_freq)


def photodetect(
    pumps: Sequence[ComplexEnvelope],
    sidebands: Sequence[ComplexEnvelope],
    detector_bw: float,
    responsivity: float = 1.0,
    load: float = 50.0,
) -> ComplexEnvelope:
    """Sum of all pump-sideband beats inside the detector band.

    Beats between different pumps and their foreign sidebands usually fall at
    THz offsets and are dropped silently; sideband-sideband products are
    second order in the weak sidebands and neglected. The record carrier is
    that of the first in-band beat. Other beats are moved onto it when they
    fit inside the sampled band, otherwise dropped with a warning.
    """
    parts = []
    for p in pumps:
        for s in sidebands:
            if abs(p.carrier_freq - s.carrier_freq) <= detector_bw:
                parts.append(beat_note(p, s, detector_bw, responsivity, load))
    if not parts:
        raise ValueError("no pump-sideband pair beats inside the detector band")
    out = parts[0]
    for b in parts[1:]:
        offset = b.carrier_freq - out.carrier_freq
        if abs(offset) <= 1.0:
            out = out + b.replace(carrier_freq=out.carrier_freq)
        elif abs(offset) < out.sample_rate / 2:
            out = out + retune(b, out.carrier_freq)
        else:
            warnings.warn(
                f"beat note at {b.carrier_freq:.6g} Hz lies outside the sampled band around {out.carrier_freq:.6g} Hz",
                SampledBandWarning,
                stacklevel=2,
            )
    return out


# -- discrimination --------------------------------------------------------


@dataclass(frozen=True)
class Discrimination:
    labels: np.ndarray  # True for |e>
    fidelity: float | None
    projections: np.ndarray


def discriminate(points, centers, truth=None) -> Discrimination:
    """Threshold the projection onto the g-e axis at the midpoint.

    ``centers`` is ``(iq_g, iq_e)``. With ``truth`` (True for prepared |e>),
    the assignment fidelity ``1 - (P(e|g) + P(g|e)) / 2`` is also returned.
    """
    cg, ce = (complex(c) if not isinstance(c, (tuple, list)) else complex(*c) for c in centers)
    if cg == ce:
        raise ConfigError("discrimination centers must be distinct")
    z = as_complex_array(points)
    axis = (ce - cg) / abs(ce - cg)
    proj = np.real(np.conj(axis) * (z - 0.5 * (cg + ce)))
    labels = proj > 0
    fid = None
    if truth is not None:
        t = np.asarray(truth, dtype=bool)
        if t.shape != labels.shape:
            raise ValueError("truth and points differ in length")
        p_eg = labels[~t].mean() if (~t).any() else 0.0
        p_ge = (~labels[t]).mean() if t.any() else 0.0
        fid = 1 - 0.5 * (p_eg + p_ge)
    return Discrimination(labels, fid, proj)


def gaussian_assignment_fidelity(half_separation: float, sigma: float) -> float:
    """Phi(mu / sigma): fidelity of midpoint thresholding between two Gaussians."""
    return float(norm.cdf(half_separation / sigma))


def project_population(points, centers) -> np.ndarray:
    """Linear map of IQ points onto P(e): 0 at iq_g, 1 at iq_e."""
    cg, ce = (complex(c) for c in centers)
    z = as_complex_array(points)
    d = ce - cg
    return np.real(np.conj(d) * (z - cg)) / abs(d) ** 2


# -- fits ------------------------------------------------------------------


@dataclass
class FitResult:
    params: dict
    stderr: dict
    residual_rms: float
    flags: tuple = ()
    model: str = ""
    derived: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": {k: float(v) for k, v in self.params.items()},
            "stderr": {k: float(v) for k, v in self.stderr.items()},
            "derived": {k: float(v) for k, v in self.derived.items()},
            "residual_rms": float(self.residual_rms),
            "flags": list(self.flags),
        }


def _prepare(xs, ys, min_points):
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d and equally long")
    if x.size < min_points:
        raise ValueError(f"need at least {min_points} points, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite data")
    x0 = float(x.min())
    span = float(x.max() - x0)
    if span <= 0:
        raise ValueError("xs must span a non-zero range")
    return x, y, x0, span


def _best_fit(model, u, y, starts, bounds=(-np.inf, np.inf), sigma=None):
    best = None
    errors = []
    for p0 in starts:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                kw = dict(maxfev=20000, sigma=sigma)
                if bounds == (-np.inf, np.inf):
                    kw.update(method="lm", ftol=1e-15, xtol=1e-15, gtol=1e-15)
                else:
                    kw.update(bounds=bounds, method="trf", ftol=1e-15, xtol=1e-15, gtol=1e-15)
                popt, pcov = curve_fit(model, u, y, p0=p0, **kw)
        except (RuntimeError, ValueError) as exc:
            errors.append(str(exc))
            continue
        res = y - model(u, *popt)
        if sigma is not None:
            res = res / sigma
        rss = float(res @ res)
        if not np.isfinite(rss):
            continue
        if best is None or rss < best[2]:
            best = (popt, pcov, rss)
    if best is None:
        raise FitError("no initial guess converged", {"starts": [list(map(float, s)) for s in starts], "errors": errors})
    popt, pcov, rss = best
    perr = np.sqrt(np.clip(np.diag(pcov), 0, np.inf)) if np.all(np.isfinite(pcov)) else np.full(len(popt), np.inf)
    return popt, perr, math.sqrt(rss / y.size)


def _exp_model(u, a, b, k):
    return a + b * np.exp(-k * u)


def _log_slope_rate(u, y, offset):
    d = np.abs(y - offset)
    ok = d > 1e-12 * max(1.0, np.abs(y).max())
    if ok.sum() < 2:
        return None
    slope = np.polyfit(u[ok], np.log(d[ok]), 1)[0]
    return -slope if slope < 0 else None


def fit_exponential(xs, ys) -> FitResult:
    """Least-squares ``offset + amplitude * exp(-x / tau)``."""
    x, y, x0, span = _prepare(xs, ys, 4)
    if np.ptp(y) <= 1e-12 * max(1.0, abs(float(y.mean()))):
        return FitResult(
            {"amplitude": 0.0, "tau": math.nan, "rate": math.nan, "offset": float(y.mean())},
            {"amplitude": math.nan, "tau": math.nan, "rate": math.nan, "offset": 0.0},
            0.0,
            ("unidentifiable",),
            "exponential",
        )
    u = (x - x0) / span
    a0 = float(y[np.argmax(x)])
    b0 = float(y[np.argmin(x)] - a0)
    rates = [1.0, 3.0, 10.0, 0.3]
    k_log = _log_slope_rate(u, y, a0 - 0.02 * b0)
    if k_log:
        rates.insert(0, k_log)
    popt, perr, rms = _best_fit(_exp_model, u, y, [(a0, b0, k) for k in rates])
    a, b, k = popt
    if not k > 0:
        raise FitError("fitted decay rate is not positive", {"rate": float(k) / span})
    if k < 1e-3:
        # tau a thousand spans out: offset and amplitude cancel, nothing is measured
        raise FitError("decay time not constrained by the data", {"tau": span / float(k), "span": span})
    # back to physical units: b exp(-k (x - x0)/span)
    tau = span / k
    amp = b * math.exp(k * x0 / span)
    tau_err = perr[2] * span / k**2
    shift = abs(b) * x0 / span * perr[2] if x0 else 0.0
    amp_err = math.hypot(perr[1], shift) * math.exp(k * x0 / span)
    return FitResult(
        {"amplitude": amp, "tau": tau, "rate": 1 / tau, "offset": a},
        {"amplitude": amp_err, "tau": tau_err, "rate": tau_err / tau**2, "offset": perr[0]},
        rms,
        (),
        "exponential",
    )


def _cos_model(u, off, amp, f, ph, k):
    return off + amp * np.exp(-k * u) * np.cos(2 * np.pi * f * u + ph)


def _fft_peak(u, y, fmin=0.5):
    """Strongest frequency above ``fmin`` (cycles per unit u) in a zero-padded periodogram.

    No window: a fast decay puts all of its fringes at the start of the record.
    """
    n = u.size
    grid = np.linspace(0, 1, n)
    yi = np.interp(grid, u, y - y.mean())
    pad = 16 * n
    spec = np.abs(np.fft.rfft(yi, pad))
    freqs = np.fft.rfftfreq(pad, d=grid[1] - grid[0])
    spec[freqs < fmin] = 0
    idx = int(np.argmax(spec))
    return float(freqs[idx]), idx


def _degenerate_cosine(xs, ys) -> FitResult:
    e = fit_exponential(xs, ys)
    params = {"offset": e.params["offset"], "amplitude": e.params["amplitude"], "freq": 0.0, "phase": 0.0, "decay": e.params["tau"]}
    stderr = {"offset": e.stderr["offset"], "amplitude": e.stderr["amplitude"], "freq": math.nan, "phase": math.nan, "decay": e.stderr["tau"]}
    return FitResult(params, stderr, e.residual_rms, ("degenerate",) + e.flags, "damped_cosine")


def fit_damped_cosine(xs, ys) -> FitResult:
    """Least-squares ``offset + amplitude * exp(-x/decay) * cos(2 pi freq x + phase)``.

    A record without a resolvable oscillation falls back to the exponential
    fit and is flagged ``degenerate`` with ``freq = 0``.
    """
    x, y, x0, span = _prepare(xs, ys, 8)
    u = (x - x0) / span
    f0, idx = _fft_peak(u, y)
    if idx == 0:
        return _degenerate_cosine(xs, ys)
    off0 = float(y.mean())
    amp0 = float(np.ptp(y) / 2)
    # phase from a projection onto the trial tone at the first sample
    c = np.sum((y - off0) * np.exp(-2j * np.pi * f0 * u))
    ph0 = float(np.angle(c))
    starts = []
    for f in (f0, f0 * 0.98, f0 * 1.02):
        for k in (0.5, 1.5, 4.0):
            starts.append((off0, amp0 * (1 + k / 2), f, ph0, k))
    popt, perr, rms = _best_fit(_cos_model, u, y, starts)
    off, amp, f, ph, k = popt
    if amp < 0:
        amp, ph = -amp, ph + np.pi
    if f < 0:
        f, ph = -f, -ph
    freq = f / span
    phase = ph - 2 * np.pi * freq * x0
    amp_phys = amp * math.exp(k * x0 / span)
    if f < 0.5 or not k > 0:
        # less than half a fringe, or growing: see whether a plain decay does as well
        try:
            plain = _degenerate_cosine(xs, ys)
        except FitError:
            plain = None
        if plain is not None and plain.residual_rms <= 1.5 * rms + 1e-12 * float(np.ptp(y)):
            return plain
        if not k > 0:
            raise FitError("fitted decay is not positive", {"rate": float(k) / span})
    flags = ()
    if f < 1:
        flags = ("under-one-period",)
    decay = span / k
    return FitResult(
        {"offset": off, "amplitude": amp_phys, "freq": freq, "phase": float((phase + np.pi) % (2 * np.pi) - np.pi), "decay": decay},
        {"offset": perr[0], "amplitude": perr[1] * math.exp(k * x0 / span), "freq": perr[2] / span, "phase": perr[3], "decay": perr[4] * span / k**2},
        rms,
        flags,
        "damped_cosine",
    )


def _rabi_model(u, off, contrast, upi):
    return off + contrast * np.sin(np.pi * u / (2 * upi)) ** 2


def fit_rabi(amplitudes, ys) -> FitResult:
    """Least-squares ``offset + contrast * sin^2(pi A / (2 pi_amp))``."""
    x = np.asarray(amplitudes, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 4 or x.shape != y.shape:
        raise ValueError("need at least 4 matching points")
    scale = float(np.abs(x).max()) or 1.0
    u = x / scale
    # sin^2(pi u/(2 upi)) oscillates at 1/(2 upi) cycles per unit u
    f0, idx = _fft_peak(np.sort(u), y[np.argsort(u)])
    starts = [(float(y.min()), float(np.ptp(y)), 1 / (2 * f)) for f in (f0, 0.25, 0.5, 1.0) if f > 0]
    popt, perr, rms = _best_fit(_rabi_model, u, y, starts)
    off, con, upi = popt
    upi = abs(upi)
    return FitResult(
        {"offset": off, "contrast": con, "pi_amp": upi * scale},
        {"offset": perr[0], "contrast": perr[1], "pi_amp": perr[2] * scale},
        rms,
        (),
        "rabi",
    )


def _rb_model(m, a, p, b):
    return a * p**m + b


def fit_rb(m_values, survival, gates_per_clifford: float = 1.0, sigma=None) -> FitResult:
    """Fit ``A p^m + B``; report error per Clifford and per physical gate.

    ``sigma`` (per-point standard errors) turns on weighted least squares.

    ``derived`` carries ``r_clifford = (1 - p)/2``, ``clifford_fidelity`` and
    ``avg_gate_fidelity = 1 - r_clifford / gates_per_clifford`` (pass 1 to
    quote fidelity per Clifford).
    """
    m = np.asarray(m_values, dtype=float)
    y = np.asarray(survival, dtype=float)
    if m.size < 4 or m.shape != y.shape:
        raise ValueError("need at least 4 sequence lengths")
    if np.ptp(y) <= 1e-12:
        res = FitResult({"A": 0.0, "p": 1.0, "B": float(y.mean())}, {"A": math.nan, "p": 0.0, "B": 0.0}, 0.0, ("no-decay",), "rb")
        res.derived = {"r_clifford": 0.0, "clifford_fidelity": 1.0, "avg_gate_fidelity": 1.0, "gates_per_clifford": gates_per_clifford}
        return res
    b0 = 0.5
    a0 = float(y[np.argmin(m)] - b0)
    starts = [(a0, p, b0) for p in (0.99, 0.999, 0.95, 0.9)]
    if sigma is not None:
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), y.shape)
        if np.any(sigma <= 0):
            raise ValueError("sigma must be positive")
    popt, perr, rms = _best_fit(_rb_model, m, y, starts, bounds=([-2.0, 1e-9, -1.0], [2.0, 1.0, 2.0]), sigma=sigma)
    a, p, b = popt
    if not 0 < p <= 1:
        raise FitError("fitted p outside (0, 1]", {"p": float(p)})
    r = (1 - p) / 2
    res = FitResult({"A": a, "p": p, "B": b}, {"A": perr[0], "p": perr[1], "B": perr[2]}, rms, (), "rb")
    res.derived = {
        "r_clifford": r,
        "clifford_fidelity": 1 - r,
        "avg_gate_fidelity": 1 - r / gates_per_clifford,
        "avg_gate_fidelity_stderr": perr[1] / 2 / gates_per_clifford,
        "gates_per_clifford": gates_per_clifford,
    }
    return res


def fit_lineshape(freqs, power, shape=Lineshape.SINC2) -> FitResult:
    """Fit ``peak * lineshape(f - center; bandwidth)`` to a linear power response."""
    f = np.asarray(freqs, dtype=float)
    p = np.asarray(power, dtype=float)
    if f.size < 3:
        raise ValueError("need at least 3 points")
    f0 = float(f.min())
    span = float(np.ptp(f))
    u = (f - f0) / span
    i = int(np.argmax(p))
    peak0 = float(p[i])
    above = u[p >= peak0 / 2]
    bw0 = max(float(np.ptp(above)), 2.0 / f.size)

    def model(uu, pk, c, bw):
        return pk * lineshape_power(uu - c, abs(bw), shape)

    starts = [(peak0, u[i], bw0 * s) for s in (1.0, 0.7, 1.4)]
    popt, perr, rms = _best_fit(model, u, p, starts)
    pk, c, bw = popt
    return FitResult(
        {"peak": pk, "center": f0 + c * span, "bandwidth": abs(bw) * span},
        {"peak": perr[0], "center": perr[1] * span, "bandwidth": perr[2] * span},
        rms,
        (),
        "lineshape:" + Lineshape(shape).value,
    )


def fit_slope(xs, ys) -> FitResult:
    """Ordinary least-squares line; used for dB/dB transduction slopes."""
    r = linregress(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
    res = np.asarray(ys) - (r.intercept + r.slope * np.asarray(xs))
    return FitResult(
        {"slope": r.slope, "intercept": r.intercept},
        {"slope": r.stderr, "intercept": r.intercept_stderr},
        float(np.sqrt(np.mean(res**2))),
        (),
        "line",
    )
