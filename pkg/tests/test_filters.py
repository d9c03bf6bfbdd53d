"""Prototype filter construction, Nyquist metrics, spectra and the
PDP-compensated modification."""

import numpy as np
import pytest

from fbmc_mmimo import (FilterSpectrum, PrototypeFilter, TimeSignal,
                        composite_pulse, design_modified, design_phydyas,
                        exponential_pdp, inverse_spectrum, matched_filter,
                        nyquist_error, read_filter_csv, spectrum,
                        write_filter_csv)
from fbmc_mmimo.channel import delta_pdp


# ---------------------------------------------------------------------------
# design_phydyas
# ---------------------------------------------------------------------------

def test_phydyas_paper_scale_shape():
    p = design_phydyas(256, 4)
    assert len(p.taps) == 1024
    assert np.max(np.abs(p.taps.imag)) == 0.0
    assert np.isclose(p.energy, 1.0, atol=1e-12)


@pytest.mark.parametrize("M", [16, 64, 256])
def test_phydyas_symmetric_about_center(M):
    p = design_phydyas(M, 4)
    c = p.center_index
    taps = p.taps.real
    d = np.arange(1, min(c, len(taps) - 1 - c) + 1)
    assert np.max(np.abs(taps[c + d] - taps[c - d])) <= 1e-12 * np.max(np.abs(taps))


def test_phydyas_m4_autocorrelation_crossings():
    # oracle: direct convolution of the constructed taps
    p = design_phydyas(4, 4)
    q = np.convolve(p.taps, np.conj(p.taps[::-1]))
    peak_idx = len(p.taps) - 1
    q0 = abs(q[peak_idx])
    crossings = [abs(q[peak_idx + r]) for r in (-8, -4, 4, 8)]
    assert max(crossings) <= 1e-3 * q0


def test_phydyas_rejects_odd_m():
    with pytest.raises(ValueError):
        design_phydyas(5, 4)


def test_phydyas_rejects_unsupported_overlap():
    with pytest.raises(ValueError):
        design_phydyas(64, 5)


@pytest.mark.parametrize("M", [16, 64, 256])
def test_phydyas_composite_is_nyquist(M):
    p = design_phydyas(M, 4)
    q = composite_pulse(p, matched_filter(p))
    assert nyquist_error(q, M) <= 1e-3


# ---------------------------------------------------------------------------
# matched_filter
# ---------------------------------------------------------------------------

def test_matched_filter_of_symmetric_filter_is_itself(phydyas64):
    m = matched_filter(phydyas64)
    a, b = phydyas64.as_signal(), m.as_signal()
    half = len(phydyas64.taps) // 2 - 1
    for l in range(-half, half + 1):
        assert abs(a.value_at(l) - b.value_at(l)) <= 1e-12


def test_matched_filter_small_example():
    p = PrototypeFilter(taps=np.array([1.0, 1.0j]), num_subcarriers=4,
                        overlap=1, center_index=0)
    m = matched_filter(p)
    assert np.allclose(m.taps, [-1.0j, 1.0])
    assert m.center_index == 1


def test_matched_filter_preserves_energy(phydyas64):
    assert np.isclose(matched_filter(phydyas64).energy, phydyas64.energy,
                      rtol=1e-15)


# ---------------------------------------------------------------------------
# composite_pulse / nyquist_error
# ---------------------------------------------------------------------------

def test_composite_autocorrelation_peak_is_one(phydyas64, matched64):
    q = composite_pulse(phydyas64, matched64)
    assert np.isclose(q.value_at(0), 1.0, atol=1e-12)


def test_composite_delta_pdp_matches_no_pdp(phydyas64, matched64):
    q_plain = composite_pulse(phydyas64, matched64)
    q_delta = composite_pulse(phydyas64, matched64, delta_pdp())
    assert q_plain.start_index == q_delta.start_index
    assert np.allclose(q_plain.samples, q_delta.samples, atol=1e-15)


def test_composite_with_pdp_breaks_nyquist(phydyas64, matched64):
    q = composite_pulse(phydyas64, matched64, exponential_pdp(0.1, 10))
    assert nyquist_error(q, 64) > 1e-2  # the saturation mechanism


def test_composite_rejects_mismatched_m(phydyas16, phydyas64):
    with pytest.raises(ValueError):
        composite_pulse(phydyas16, matched_filter(phydyas64))


def test_nyquist_error_of_delta():
    assert nyquist_error(TimeSignal(np.array([1.0]), 0), 8) == 0.0


def test_nyquist_error_definition():
    samples = np.zeros(17, dtype=complex)
    samples[8] = 1.0
    samples[16] = 0.1
    assert np.isclose(nyquist_error(TimeSignal(samples, -8), 8), 0.1)


def test_nyquist_error_rejects_zero_center():
    with pytest.raises(ValueError):
        nyquist_error(TimeSignal(np.zeros(5), 0), 4)


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def test_spectrum_of_delta_is_flat():
    p = PrototypeFilter(taps=np.array([1.0]), num_subcarriers=4, overlap=1,
                        center_index=0)
    s = spectrum(p, 16)
    assert np.allclose(s.values, 1.0, atol=1e-14)


def test_spectrum_parseval(phydyas64):
    s = spectrum(phydyas64, 2048)
    mean_sq = np.mean(np.abs(s.values) ** 2)
    assert np.isclose(mean_sq, phydyas64.energy, rtol=1e-10)


def test_spectrum_first_sidelobe_below_minus_35db():
    p = design_phydyas(256, 4)
    mag = np.abs(np.fft.fftshift(spectrum(p, 16 * len(p.taps)).values))
    peak_idx = int(np.argmax(mag))
    i = peak_idx
    while mag[i + 1] < mag[i]:
        i += 1  # descend the main lobe
    while mag[i + 1] > mag[i]:
        i += 1  # climb to the first sidelobe
    assert 20 * np.log10(mag[i] / mag[peak_idx]) < -35.0


def test_spectrum_rejects_small_grid(phydyas64):
    with pytest.raises(ValueError):
        spectrum(phydyas64, len(phydyas64.taps) - 1)


def test_spectrum_inverse_round_trip(phydyas64):
    s = spectrum(phydyas64, 2 * len(phydyas64.taps))
    rebuilt = inverse_spectrum(s)
    worst = max(abs(rebuilt.value_at(l) - phydyas64.as_signal().value_at(l))
                for l in phydyas64.time_axis())
    assert worst <= 1e-10


# ---------------------------------------------------------------------------
# design_modified
# ---------------------------------------------------------------------------

def test_modified_with_delta_pdp_is_identity(phydyas64):
    mod = design_modified(phydyas64, delta_pdp())
    assert mod.center_index == phydyas64.center_index
    assert np.max(np.abs(mod.taps - phydyas64.taps)) <= 1e-10


def test_modified_restores_nyquist_paper_scale(pdp_paper):
    p = design_phydyas(256, 4)
    before = nyquist_error(composite_pulse(p, matched_filter(p), pdp_paper), 256)
    mod = design_modified(p, pdp_paper)
    after = nyquist_error(composite_pulse(p, matched_filter(mod), pdp_paper), 256)
    assert after <= 1e-3
    assert before / after >= 100.0


def test_modified_composite_gain_is_unity(phydyas64, pdp_desk):
    mod = design_modified(phydyas64, pdp_desk)
    q = composite_pulse(phydyas64, matched_filter(mod), pdp_desk)
    assert abs(q.value_at(0) - 1.0) <= 1e-12


def test_modified_truncation_keeps_energy(phydyas64, pdp_desk):
    # recompute the untruncated inverse through the public spectrum ops
    grid = 16 * len(phydyas64.taps)
    P = spectrum(phydyas64, grid).values
    rho_bar = np.fft.fft(pdp_desk.powers, grid)
    eps = 1e-12 * np.max(np.abs(rho_bar)) ** 2
    full = inverse_spectrum(
        FilterSpectrum(grid, P * rho_bar / (np.abs(rho_bar) ** 2 + eps)))
    width = len(phydyas64.taps) + len(pdp_desk) - 1
    e = np.abs(full.samples) ** 2
    csum = np.concatenate([[0.0], np.cumsum(e)])
    best = np.max(csum[width:] - csum[:-width])
    assert best / e.sum() >= 1.0 - 1e-8


def test_modified_rejects_near_null_without_regularization():
    p = design_phydyas(16, 4)
    bad = np.array([0.5, 0.0, 0.5])  # transform vanishes at omega = pi/2
    with pytest.raises(ValueError):
        design_modified(p, bad, regularization=0.0)


def test_modified_with_regularization_handles_near_null():
    p = design_phydyas(16, 4)
    bad = np.array([0.5, 0.0, 0.5])
    mod = design_modified(p, bad, regularization=1e-6)
    assert np.all(np.isfinite(mod.taps))


def test_modified_rejects_small_grid(phydyas64, pdp_desk):
    with pytest.raises(ValueError):
        design_modified(phydyas64, pdp_desk, grid_size=4 * len(phydyas64.taps))


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def test_filter_csv_round_trip(tmp_path, phydyas64, pdp_desk):
    mod = design_modified(phydyas64, pdp_desk)
    path = tmp_path / "filter.csv"
    write_filter_csv(path, mod)
    back = read_filter_csv(path)
    assert back.num_subcarriers == mod.num_subcarriers
    assert back.overlap == mod.overlap
    assert back.center_index == mod.center_index
    assert np.allclose(back.taps, mod.taps, rtol=0, atol=1e-16)


def test_filter_csv_rejects_other_files(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_filter_csv(path)
