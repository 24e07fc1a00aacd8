import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opticlink.detection import fit_lineshape
from opticlink.errors import ConfigError, OutOfBandError
from opticlink.signal import ComplexEnvelope, ToneSpec, iq_demodulate, synthesize_tone
from opticlink.transducer import (
    CouplerBandWarning,
    Lineshape,
    PumpTone,
    Temperature,
    TransducerModel,
    channel_center,
    channel_response,
    flux_pair,
    lineshape_power,
    optical_frequency,
    s21_sweep,
    sideband_carrier,
    transduce,
    wavelength_sweep,
)

C = 299_792_458.0
H = 6.62607015e-34
# sinc(x)^2 = 1/2, solved to 30 digits with mpmath
X_HALF = 0.44294647068945234
FS = 1e9
M = TransducerModel()
P1 = PumpTone(1550.00, 0.1)
P2 = PumpTone(1560.95, 0.1)


def sinc2_oracle(detuning, bw):
    x = 2 * X_HALF * detuning / bw
    return 1.0 if x == 0 else (math.sin(math.pi * x) / (math.pi * x)) ** 2


def tone(freq, amp=1e-3, phase=0.0, carrier=None, duration=4e-6):
    carrier = freq if carrier is None else carrier
    return synthesize_tone(ToneSpec(freq, amp, phase), duration, FS, carrier)


# -- channel map -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "wl,expected",
    [(1550.00, 8.743e9), (1560.95, 8.818e9), (1555.475, 8.7805e9)],
)
def test_cryogenic_channel_centers(wl, expected):
    assert channel_center(M, wl, Temperature.T3K) == pytest.approx(expected, abs=1e-3)


def test_room_temperature_channel_sits_below_cryo():
    hot = channel_center(M, 1550.0, "300K")
    assert channel_center(M, 1550.0, "3K") - hot == pytest.approx(131.56e6, abs=1e-3)


def test_map_slope_and_c_band_span():
    assert M.map_slope == pytest.approx(75e6 / 10.95)
    centers = wavelength_sweep(M, np.arange(1534, 1570.001, 2))
    assert np.ptp(centers) == pytest.approx(36 * 75e6 / 10.95)
    assert np.ptp(centers) > 200e6


def test_pump_outside_coupler_band_warns():
    with pytest.warns(CouplerBandWarning):
        channel_center(M, 1600.0, "3K")


def test_temperature_aliases():
    assert Temperature.parse("3.3 K") is Temperature.T3K
    assert Temperature.parse("room") is Temperature.T300K
    with pytest.raises(ConfigError):
        Temperature.parse("77K")


# -- channel response ------------------------------------------------------------------------


def test_peak_flux_efficiency_scales_with_pump():
    assert channel_response(M, P1, "3K").peak_flux_efficiency == pytest.approx(2.5e-7)
    assert channel_response(M, P1, "300K").peak_flux_efficiency == pytest.approx(3.2e-8)


@pytest.mark.parametrize("temp", ["3K", "300K"])
def test_half_width_offset_is_minus_3_db(temp):
    r = channel_response(M, P1, temp)
    for sign in (-1, 1):
        assert r(r.center + sign * r.bandwidth3db / 2) / r.peak_flux_efficiency == pytest.approx(0.5, rel=1e-9)


@given(d=st.floats(-20e6, 20e6), bw=st.floats(0.1e6, 5e6))
def test_sinc2_matches_closed_form(d, bw):
    assert float(lineshape_power(d, bw)) == pytest.approx(sinc2_oracle(d, bw), abs=1e-12)


def test_lorentzian_half_power_and_tail():
    assert float(lineshape_power(0.5e6, 1e6, Lineshape.LORENTZIAN)) == pytest.approx(0.5)
    assert float(lineshape_power(5e6, 1e6, "lorentzian")) == pytest.approx(1 / 101)


def test_efficiency_ratio_is_consistent_with_amplitude_factor():
    ratio = M.eta_cryo / M.eta_300K
    assert ratio == pytest.approx(7.8125)
    assert abs(M.amp_factor_cool**2 / ratio - 1) < 0.05
    with pytest.raises(ConfigError):
        TransducerModel(amp_factor_cool=2.0)


def test_model_validation():
    with pytest.raises(ConfigError):
        TransducerModel(eta_cryo=0.0)
    with pytest.raises(ConfigError):
        TransducerModel(wavelength_map=((1550, 8.7e9), (1550, 8.8e9)))
    with pytest.raises(ConfigError):
        TransducerModel(branch="raman")


# -- transduce ---------------------------------------------------------------------------------


def test_stokes_sideband_carrier_from_energy_conservation():
    (sb,) = transduce(M, tone(8.743e9), [P1], "3K")
    assert sb.carrier_freq == pytest.approx(C / 1550e-9 - 8.743e9, abs=0.1)
    # about 1550.07 nm
    assert C / sb.carrier_freq * 1e9 == pytest.approx(1550.07, abs=0.005)


def test_anti_stokes_branch_flips_sign():
    m = TransducerModel(branch="anti-stokes")
    assert sideband_carrier(m, P1, 8.743e9) == pytest.approx(optical_frequency(1550.0) + 8.743e9)


def test_output_photon_flux_ratio_equals_channel_response():
    f = 8.743e9 + 0.3e6
    mw = tone(f, amp=1e-2)
    (sb,) = transduce(M, mw, [P1], "3K")
    f_opt = optical_frequency(1550.0) - f
    flux_ratio = (sb.power / (H * f_opt)) / (mw.power / (H * f))
    expected = 2.5e-6 * 0.1 * sinc2_oracle(0.3e6, 0.88e6)
    assert flux_ratio == pytest.approx(expected, rel=1e-9)


def test_stokes_sideband_conjugates_input_phase():
    phi = 0.7
    a = transduce(M, tone(8.743e9, phase=0.0), [P1], "3K")[0]
    b = transduce(M, tone(8.743e9, phase=phi), [P1], "3K")[0]
    za = complex(iq_demodulate(a, a.carrier_freq))
    zb = complex(iq_demodulate(b, b.carrier_freq))
    assert np.angle(zb / za) == pytest.approx(-phi, abs=1e-12)


def test_pump_phase_rides_on_sideband():
    a = transduce(M, tone(8.743e9), [P1], "3K")[0]
    b = transduce(M, tone(8.743e9), [PumpTone(1550.0, 0.1, 0.4)], "3K")[0]
    np.testing.assert_allclose(b.samples, a.samples * np.exp(0.4j), atol=1e-18)


def test_off_channel_pump_is_suppressed_below_minus_40_db():
    mw = tone(8.818e9)
    s1, s2 = transduce(M, mw, [P1, P2], "3K")
    # photon-flux ratio of the two sidebands, by the sinc^2 oracle
    flux = [s.power / s.carrier_freq for s in (s1, s2)]
    rel_db = 10 * math.log10(flux[0] / flux[1])
    assert rel_db < -40
    assert rel_db == pytest.approx(10 * math.log10(sinc2_oracle(75e6, 0.88e6)), abs=0.05)


def _rand_env(seed, carrier=8.75e9, n=1024):
    rng = np.random.default_rng(seed)
    return ComplexEnvelope(1e-3 * (rng.normal(size=n) + 1j * rng.normal(size=n)), FS, carrier)


cplx = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), alpha=cplx, beta=cplx)
def test_transduce_is_conjugate_linear(seed, alpha, beta):
    x, y = _rand_env(seed), _rand_env(seed + 1)
    (tx,), (ty,) = transduce(M, x, [P1], "3K"), transduce(M, y, [P1], "3K")
    (tz,) = transduce(M, alpha * x + beta * y, [P1], "3K")
    expected = np.conj(alpha) * tx.samples + np.conj(beta) * ty.samples
    scale = np.max(np.abs(expected)) + np.max(np.abs(tx.samples)) + np.max(np.abs(ty.samples))
    assert np.max(np.abs(tz.samples - expected)) <= 1e-12 * scale


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), wl=st.floats(1535, 1570), power=st.floats(0, 0.5))
def test_second_pump_leaves_first_sideband_unchanged(seed, wl, power):
    x = _rand_env(seed)
    (alone,) = transduce(M, x, [P1], "3K")
    with_second = transduce(M, x, [P1, PumpTone(wl, power)], "3K")[0]
    assert np.max(np.abs(with_second.samples - alone.samples)) <= 1e-12 * np.max(np.abs(alone.samples))


def test_carrier_outside_idt_band_raises():
    with pytest.raises(OutOfBandError):
        transduce(M, tone(7.5e9), [P1], "3K")


# -- flux bookkeeping and sweeps ------------------------------------------------------------------


def test_flux_pair_oracle():
    fp = flux_pair(M, 1e-3, 8.743e9, P1, "3K")
    assert fp.n_in == pytest.approx(1e-3 / (H * 8.743e9), rel=1e-12)
    assert fp.n_in == pytest.approx(1.7263e20, rel=1e-4)
    assert fp.n_out == pytest.approx(fp.n_in * 2.5e-7, rel=1e-12)
    assert fp.n_out == pytest.approx(4.316e13, rel=1e-3)


def test_flux_pair_zero_and_pump_doubling():
    assert flux_pair(M, 0.0, 8.743e9, P1, "3K") == type(flux_pair(M, 0.0, 8.743e9, P1, "3K"))(0.0, 0.0)
    one = flux_pair(M, 1e-3, 8.7432e9, P1, "3K").n_out
    two = flux_pair(M, 1e-3, 8.7432e9, PumpTone(1550.0, 0.2), "3K").n_out
    assert two == pytest.approx(2 * one, rel=1e-12)
    with pytest.raises(ValueError):
        flux_pair(M, -1.0, 8.743e9, P1, "3K")


@pytest.mark.parametrize("temp,bw", [("3K", 0.88e6), ("300K", 2.63e6)])
def test_s21_sweep_fitted_width(temp, bw):
    c = channel_center(M, 1550.0, temp)
    freqs, db = s21_sweep(M, (c - 6e6, c + 6e6), 241, P1, temp)
    fit = fit_lineshape(freqs, 10 ** (db / 10))
    assert fit.params["bandwidth"] == pytest.approx(bw, rel=0.02)
    assert fit.params["center"] == pytest.approx(c, abs=1e3)


def test_cryo_over_room_peak_ratio():
    hot = channel_response(M, P1, "300K").peak_flux_efficiency
    cold = channel_response(M, P1, "3K").peak_flux_efficiency
    assert 10 * math.log10(cold / hot) == pytest.approx(8.93, abs=0.01)
    assert math.sqrt(cold / hot) == pytest.approx(2.8, rel=0.01)


def test_s21_sweep_needs_points():
    with pytest.raises(ValueError):
        s21_sweep(M, (8.7e9, 8.8e9), 2, P1, "3K")


def test_wavelength_sweep_silences_band_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        wavelength_sweep(M, [1520.0, 1580.0])
