"""Bloch-vector transmon model with dispersive readout and a JPC upconverter.

Conventions: z = +1 is |g>, so P(e) = (1 - z) / 2. A drive with phase phi
rotates the Bloch vector about (cos phi, sin phi, 0) following
dr/dt = omega x r; a frequency offset d (qubit minus frame) precesses the
transverse part about +z at 2 pi d.

Every operation is an affine map r -> A r + b, so pulses are built once
(piecewise-constant Bloch equations, exact matrix exponential per step) and
then applied to whole batches of shots.

Dephasing split: the exponential transverse decay uses ``t2e`` in both idle
modes; Ramsey decays faster because every shot carries a quasi-static
frequency offset drawn from N(0, quasi_static_sigma). Echo refocuses it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import erf

from .signal import ComplexEnvelope, IQPoint, DEFAULT_SAMPLE_RATE

PULSE_STEPS = 48


@dataclass(frozen=True)
class QubitParams:
    f_q: float = 4.954e9
    t1: float = 51.0e-6
    t2: float = 8.8e-6
    t2e: float = 16.2e-6
    pi_amp: float = 1.0
    quasi_static_sigma: float = 0.0
    pi_duration: float = 120e-9
    t_phi_drive: float | None = None

    def __post_init__(self):
        if not self.t1 > 0:
            raise ValueError("t1 must be positive")
        if not 0 < self.t2 <= 2 * self.t1 * (1 + 1e-12):
            raise ValueError("t2 must satisfy 0 < t2 <= 2 t1")
        if not self.t2 <= self.t2e <= 2 * self.t1 * (1 + 1e-12):
            raise ValueError("t2e must satisfy t2 <= t2e <= 2 t1")
        if not self.quasi_static_sigma >= 0:
            raise ValueError("quasi_static_sigma must be >= 0")
        if not self.pi_amp > 0 or not self.pi_duration > 0:
            raise ValueError("pi_amp and pi_duration must be positive")
        if self.t_phi_drive is not None and not self.t_phi_drive > 0:
            raise ValueError("t_phi_drive must be positive")

    @property
    def gamma_phi(self) -> float:
        """Total pure-dephasing rate implied by t1 and t2 (1/s)."""
        return 1 / self.t2 - 1 / (2 * self.t1)

    @property
    def t2_driven(self) -> float:
        """Transverse decay time applied while a pulse is on."""
        if self.t_phi_drive is None:
            return self.t2e
        return 1 / (1 / (2 * self.t1) + 1 / self.t_phi_drive)

    @classmethod
    def ideal(cls, **kw) -> "QubitParams":
        """Decay-free plant (T1, T2 effectively infinite)."""
        base = dict(t1=1e9, t2=1e9, t2e=1e9)
        base.update(kw)
        return cls(**base)


class Shape(str, Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class PulseSpec:
    duration: float = 120e-9
    amplitude: float = 1.0
    phase: float = 0.0
    detuning: float = 0.0
    shape: Shape = Shape.GAUSSIAN

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("pulse duration must be positive")
        object.__setattr__(self, "shape", Shape(self.shape))

    @property
    def sigma(self) -> float:
        return self.duration / 4


@dataclass(frozen=True)
class ReadoutParams:
    f_r: float = 7.584e9
    iq_g: IQPoint = IQPoint(0.6, 0.8)
    iq_e: IQPoint = IQPoint(-0.6, 0.8)
    probe_duration: float = 10e-6
    probe_power: float = 1e-16

    def __post_init__(self):
        if complex(self.iq_g) == complex(self.iq_e):
            raise ValueError("iq_g and iq_e must differ")
        if not self.probe_duration > 0:
            raise ValueError("probe_duration must be positive")
        if not self.probe_power >= 0:
            raise ValueError("probe_power must be >= 0")

    def response(self, excited) -> np.ndarray:
        """Complex probe amplitude (sqrt(W)) for boolean/0-1 excitation labels."""
        e = np.asarray(excited, dtype=bool)
        amp = math.sqrt(self.probe_power)
        return np.where(e, complex(self.iq_e), complex(self.iq_g)) * amp


@dataclass(frozen=True)
class JPCParams:
    pump_freq: float = 1.234e9
    gain_db: float = 20.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.gain_db >= 0:
            raise ValueError("JPC gain must be >= 0 dB")

    @property
    def amplitude_gain(self) -> complex:
        return 10 ** (self.gain_db / 20) * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class BlochState:
    x: float = 0.0
    y: float = 0.0
    z: float = 1.0

    def __post_init__(self):
        n = self.x**2 + self.y**2 + self.z**2
        if n > 1 + 1e-9:
            raise ValueError(f"Bloch vector norm {math.sqrt(n)} exceeds 1")

    @classmethod
    def ground(cls):
        return cls(0.0, 0.0, 1.0)

    @classmethod
    def excited(cls):
        return cls(0.0, 0.0, -1.0)

    @classmethod
    def from_vector(cls, r) -> "BlochState":
        r = np.asarray(r, dtype=float)
        n = float(np.linalg.norm(r))
        if n > 1:  # float round-off only
            r = r / n
        return cls(*map(float, r))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def p_excited(self) -> float:
        return (1 - self.z) / 2


# -- affine maps -----------------------------------------------------------


@dataclass(frozen=True)
class BlochMap:
    """r -> A @ r + b."""

    A: np.ndarray
    b: np.ndarray

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return r @ self.A.T + self.b

    def then(self, other: "BlochMap") -> "BlochMap":
        """Apply ``self`` first, then ``other``."""
        return BlochMap(other.A @ self.A, other.A @ self.b + other.b)

    @staticmethod
    def identity() -> "BlochMap":
        return BlochMap(np.eye(3), np.zeros(3))

    @property
    def homogeneous(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.A
        m[:3, 3] = self.b
        return m

    @staticmethod
    def from_homogeneous(m: np.ndarray) -> "BlochMap":
        return BlochMap(m[:3, :3].copy(), m[:3, 3].copy())


def _cross_matrix(w) -> np.ndarray:
    wx, wy, wz = w
    return np.array([[0, -wz, wy], [wz, 0, -wx], [-wy, wx, 0]], dtype=float)


def _generator(omega, t1: float, t2: float, decay: bool) -> np.ndarray:
    g = np.zeros((4, 4))
    g[:3, :3] = _cross_matrix(omega)
    if decay:
        g[0, 0] -= 1 / t2
        g[1, 1] -= 1 / t2
        g[2, 2] -= 1 / t1
        g[2, 3] = 1 / t1
    return g


def relaxation_map(duration: float, t1: float, t2: float) -> BlochMap:
    a = math.exp(-duration / t2)
    c = math.exp(-duration / t1)
    return BlochMap(np.diag([a, a, c]), np.array([0.0, 0.0, 1 - c]))


def rotation_matrix(axis, angle: float) -> np.ndarray:
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    k = _cross_matrix(n)
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def _gaussian_step_areas(p: PulseSpec, steps: int) -> np.ndarray:
    """Fraction of the truncated-Gaussian area falling in each time step."""
    edges = np.linspace(-2.0, 2.0, steps + 1) / math.sqrt(2)
    cdf = erf(edges)
    w = np.diff(cdf)
    return w / w.sum()


def pulse_angle(q: QubitParams, p: PulseSpec) -> float:
    """Total rotation angle: amplitude (in pi_amp units) times relative duration."""
    return math.pi * p.amplitude * p.duration / q.pi_duration


@lru_cache(maxsize=4096)
def pulse_map(q: QubitParams, p: PulseSpec, decay: bool = True) -> BlochMap:
    theta = pulse_angle(q, p)
    dt = p.duration / PULSE_STEPS
    axis = np.array([math.cos(p.phase), math.sin(p.phase), 0.0])
    wz = 2 * math.pi * p.detuning
    m = np.eye(4)
    t2 = q.t2_driven
    for area in _gaussian_step_areas(p, PULSE_STEPS):
        omega = axis * (theta * area / dt) + np.array([0.0, 0.0, wz])
        m = expm(_generator(omega, q.t1, t2, decay) * dt) @ m
    return BlochMap.from_homogeneous(m)


def apply_pulse(state: BlochState, q: QubitParams, p: PulseSpec, decay: bool = True) -> BlochState:
    return BlochState.from_vector(pulse_map(q, p, decay)(state.vector))


class IdleMode(str, Enum):
    FREE = "free"
    ECHO_PROTECTED = "echo_protected"


def idle_vectors(r: np.ndarray, q: QubitParams, duration: float, mode="free", offsets=None, decay=True) -> np.ndarray:
    """Batch idle: ``r`` has shape (..., 3); ``offsets`` (Hz) broadcast per shot."""
    mode = IdleMode(mode)
    r = np.array(r, dtype=float)
    if duration == 0:
        return r
    if mode is IdleMode.FREE and offsets is not None:
        ang = 2 * math.pi * np.asarray(offsets, dtype=float) * duration
        c, s = np.cos(ang), np.sin(ang)
        x, y = r[..., 0].copy(), r[..., 1].copy()
        r[..., 0] = c * x - s * y
        r[..., 1] = s * x + c * y
    if decay:
        r = relaxation_map(duration, q.t1, q.t2e)(r)
    return r


def idle(state: BlochState, q: QubitParams, duration: float, mode="free", offset: float = 0.0, decay=True) -> BlochState:
    """Free evolution for ``duration``.

    ``offset`` is this shot's quasi-static frequency error (Hz); it is ignored
    in echo-protected mode, where it is refocused.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    return BlochState.from_vector(idle_vectors(state.vector, q, duration, mode, offset, decay))


def draw_offsets(q: QubitParams, rng: np.random.Generator, shots: int) -> np.ndarray:
    if q.quasi_static_sigma == 0:
        return np.zeros(shots)
    return rng.normal(0.0, q.quasi_static_sigma, shots)


def _half_pi(q: QubitParams, phase: float = 0.0) -> PulseSpec:
    return PulseSpec(duration=q.pi_duration, amplitude=0.5, phase=phase)


def _pi(q: QubitParams, phase: float = 0.0) -> PulseSpec:
    return PulseSpec(duration=q.pi_duration, amplitude=1.0, phase=phase)


def _p_excited(r: np.ndarray) -> np.ndarray:
    return np.clip((1 - r[..., 2]) / 2, 0.0, 1.0)


def _pulse_fn(q, decay, pulse):
    if pulse is None:
        return lambda p: pulse_map(q, p, decay)
    return pulse


def t1_sequence(q: QubitParams, delay: float, shots: int, rng=None, decay=True, pulse=None) -> np.ndarray:
    """pi - idle - measure; per-shot P(e).

    ``pulse`` optionally maps a ``PulseSpec`` to the ``BlochMap`` actually
    delivered (drive-path effects); the default is the ideal ``pulse_map``.
    """
    pulse = _pulse_fn(q, decay, pulse)
    r0 = pulse(_pi(q))(np.array([0.0, 0.0, 1.0]))
    r = idle_vectors(np.tile(r0, (shots, 1)), q, delay, "free", None, decay)
    return _p_excited(r)


def ramsey_sequence(
    q: QubitParams,
    delay: float,
    artificial_detuning: float,
    shots: int,
    rng=None,
    decay=True,
    offsets=None,
    pulse=None,
) -> np.ndarray:
    """pi/2 - free idle - pi/2 with the second phase advanced by 2 pi detuning delay.

    Returns per-shot P(e) (before projection). Each shot draws its own
    quasi-static offset from ``rng`` unless ``offsets`` is given.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if offsets is None:
        offsets = draw_offsets(q, rng if rng is not None else np.random.default_rng(0), shots)
    pulse = _pulse_fn(q, decay, pulse)
    r0 = pulse(_half_pi(q))(np.array([0.0, 0.0, 1.0]))
    r = idle_vectors(np.tile(r0, (shots, 1)), q, delay, "free", offsets, decay)
    phase = 2 * math.pi * artificial_detuning * delay
    r = pulse(_half_pi(q, phase % (2 * math.pi)))(r)
    return _p_excited(r)


def echo_sequence(q: QubitParams, delay: float, shots: int, rng=None, decay=True, pulse=None) -> np.ndarray:
    """pi/2_x - idle/2 - pi_y - idle/2 - pi/2_x (echo-protected idles); per-shot P(e).

    The refocusing pulse is about y so the zero-delay outcome is |e>.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    pulse = _pulse_fn(q, decay, pulse)
    half = pulse(_half_pi(q))
    r = half(np.array([0.0, 0.0, 1.0]))
    r = idle_vectors(r, q, delay / 2, "echo_protected", None, decay)
    r = pulse(_pi(q, math.pi / 2))(r)
    r = idle_vectors(r, q, delay / 2, "echo_protected", None, decay)
    r = half(r)
    return np.full(shots, _p_excited(r))


def rabi_probability(q: QubitParams, amplitude_fraction: float, decay=True) -> float:
    """P(e) after one reference-length pulse of the given amplitude (pi_amp units)."""
    r = pulse_map(q, PulseSpec(duration=q.pi_duration, amplitude=amplitude_fraction), decay)(np.array([0.0, 0.0, 1.0]))
    return float(_p_excited(r))


def sample_outcomes(p_excited, rng: np.random.Generator) -> np.ndarray:
    """Projective measurement: boolean array, True for |e>."""
    p = np.asarray(p_excited, dtype=float)
    return rng.random(p.shape) < p


def measure_dispersive(state: BlochState, r: ReadoutParams, rng: np.random.Generator, sample_rate=DEFAULT_SAMPLE_RATE):
    """Project ``state`` and emit the reflected probe as a rectangular pulse at f_r.

    Returns ``("g" | "e", envelope)``; the envelope amplitude is
    ``iq_{g,e} * sqrt(probe_power)``.
    """
    excited = bool(sample_outcomes(state.p_excited, rng))
    n = max(2, int(round(r.probe_duration * sample_rate)))
    amp = complex(r.response(excited))
    env = ComplexEnvelope(np.full(n, amp), sample_rate, r.f_r)
    return ("e" if excited else "g"), env


def jpc_upconvert(env: ComplexEnvelope, jpc: JPCParams) -> ComplexEnvelope:
    """Ideal noiseless frequency conversion: carrier + pump, amplitude gain, fixed phase."""
    return ComplexEnvelope(env.samples * jpc.amplitude_gain, env.sample_rate, env.carrier_freq + jpc.pump_freq)


# -- quasi-static noise calibration ----------------------------------------


def ramsey_envelope(q: QubitParams, delays) -> np.ndarray:
    """Ensemble Ramsey contrast for the quasi-static model (ideal pulses)."""
    t = np.asarray(delays, dtype=float)
    return np.exp(-t / q.t2e) * np.exp(-0.5 * (2 * math.pi * q.quasi_static_sigma * t) ** 2)


def calibrate_quasi_static_sigma(q: QubitParams, delays, detuning: float, tol: float = 1e-4) -> float:
    """Brute-force the quasi-static sigma whose Ramsey fit reports ``q.t2``.

    Generates the noise-free ensemble Ramsey curve on ``delays`` for each trial
    sigma, fits it with the same damped-cosine fitter used on data, and
    bisects on the fitted decay time.
    """
    from .detection import fit_damped_cosine

    def fitted_t2(sigma):
        qq = replace(q, quasi_static_sigma=sigma)
        env = ramsey_envelope(qq, delays)
        ys = 0.5 * (1 + env * np.cos(2 * math.pi * detuning * np.asarray(delays)))
        return fit_damped_cosine(delays, ys).params["decay"]

    if q.t2 >= q.t2e:
        return 0.0
    lo, hi = 0.0, 1.0 / q.t2
    while fitted_t2(hi) > q.t2:
        hi *= 2
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if fitted_t2(mid) > q.t2:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
