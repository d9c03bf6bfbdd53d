"""FBMC/OQAM synthesis and analysis banks.

Real PAM symbols d_{m,n} ride on basis functions
a_{m,n}(l) = p(l - nM/2) e^{j 2 pi m (l - nM/2) / M} e^{j theta_{m,n}},
theta_{m,n} = (pi/2)(m+n), spaced M/2 samples apart in time and one
subcarrier apart in frequency; the lattice is orthogonal in the real domain
only. Direct per-subcarrier convolutions are used throughout (no polyphase
realization).
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

from .filters import PrototypeFilter, TimeSignal, convolve

__all__ = [
    "oqam_phase",
    "transmit_scale",
    "basis_function",
    "real_inner_product",
    "synthesize",
    "analyze",
    "interference_coefficient",
]

_QUARTER_TURNS = np.array([1.0, 1.0j, -1.0, -1.0j])


def oqam_phase(m: int, n: int) -> complex:
    """e^{j pi (m+n) / 2}, exact on the unit lattice {1, j, -1, -j}."""
    return complex(_QUARTER_TURNS[(m + n) % 4])


def transmit_scale(p: PrototypeFilter) -> float:
    """Symbol scale 1/sqrt(s) giving unit average transmit power.

    Per-sample steady-state power of the synthesized burst is
    s = M * energy(p) / (M/2) = 2 * energy(p) for unit-variance symbols, so
    +-1 data scaled by 1/sqrt(s) yields E{|x(l)|^2} = 1.
    """
    return 1.0 / np.sqrt(2.0 * p.energy)


def _lattice_phases(num_subcarriers: int, num_symbols: int) -> np.ndarray:
    """Symbol phase i^(m+n) e^{-j pi m n}: OQAM phasing plus the constant
    carried out of e^{j 2 pi m (l - nM/2)/M} when modulating at e^{j 2 pi m l/M}."""
    m = np.arange(num_subcarriers)[:, None]
    n = np.arange(num_symbols)[None, :]
    return _QUARTER_TURNS[(m + n) % 4] * np.where((m * n) % 2, -1.0, 1.0)


def basis_function(m: int, n: int, p: PrototypeFilter) -> TimeSignal:
    """Unit-energy basis pulse a_{m,n} as a time signal (unscaled)."""
    M = p.num_subcarriers
    if not 0 <= m < M:
        raise ValueError(f"subcarrier index {m} out of range [0, {M})")
    l_rel = p.time_axis()  # equals l - n*M/2 once shifted
    samples = p.taps * np.exp(2j * np.pi * m * l_rel / M) * oqam_phase(m, n)
    return TimeSignal(samples, -p.center_index + n * (M // 2))


def real_inner_product(a: TimeSignal, b: TimeSignal) -> float:
    """Re{sum_l a(l) b*(l)} with offset-aware alignment."""
    lo = max(a.start_index, b.start_index)
    hi = min(a.end_index, b.end_index)
    if hi < lo:
        return 0.0
    sa = a.samples[lo - a.start_index:hi - a.start_index + 1]
    sb = b.samples[lo - b.start_index:hi - b.start_index + 1]
    return float(np.real(np.sum(sa * np.conj(sb))))


def synthesize(d: np.ndarray, p: PrototypeFilter) -> TimeSignal:
    """Modulate a real M x T symbol grid into the FBMC waveform x(l).

    x(l) = (1/sqrt(s)) sum_{m,n} d_{m,n} a_{m,n}(l); the scale gives
    steady-state unit average power for +-1 data. Output length is
    (T-1)*M/2 + len(p).
    """
    d = np.asarray(d)
    if np.iscomplexobj(d) and np.any(d.imag != 0):
        raise ValueError("transmit grid must be real-valued")
    d = d.real.astype(np.float64) if np.iscomplexobj(d) else d.astype(np.float64)
    if d.ndim != 2:
        raise ValueError("symbol grid must be 2-D (subcarriers x symbols)")
    M = p.num_subcarriers
    if d.shape[0] != M:
        raise ValueError(
            f"grid has {d.shape[0]} subcarriers but filter expects {M}")
    T = d.shape[1]
    half = M // 2

    up = np.zeros((M, (T - 1) * half + 1), dtype=np.complex128)
    up[:, ::half] = d * _lattice_phases(M, T)
    branches = fftconvolve(up, p.taps[None, :], axes=1)  # start = -center
    l = np.arange(branches.shape[1]) - p.center_index
    carriers = np.exp(2j * np.pi * np.arange(M)[:, None] * l[None, :] / M)
    x = transmit_scale(p) * np.sum(branches * carriers, axis=0)
    return TimeSignal(x, -p.center_index)


def _analysis_support(n: int, half: int, p_rx: PrototypeFilter) -> tuple[int, int]:
    # samples of y touched when evaluating the bank output at t = n*half
    lo = n * half - (len(p_rx.taps) - 1 - p_rx.center_index)
    hi = n * half + p_rx.center_index
    return lo, hi


def analyze(y: TimeSignal, p_rx: PrototypeFilter, num_symbols: int,
            gain: float | None = None) -> np.ndarray:
    """Demodulate a received signal into the complex M x T grid y_{m,n}.

    Filters with the analysis prototype at each subcarrier, samples at
    l = n*M/2, and removes the lattice phase. ``gain`` rescales the output;
    the default sqrt(2*energy(p_rx)) inverts the synthesis scale whenever
    transmit and analysis prototypes have equal energy, so the loopback
    analyze(synthesize(d, p), matched_filter(p), T) returns d plus the
    purely imaginary intrinsic interference.

    Partial coverage of any requested symbol is an error, not a truncation.
    """
    M = p_rx.num_subcarriers
    half = M // 2
    T = int(num_symbols)
    if T < 1:
        raise ValueError("need at least one symbol")
    lo0, _ = _analysis_support(0, half, p_rx)
    _, hiT = _analysis_support(T - 1, half, p_rx)
    if lo0 < y.start_index or hiT > y.end_index:
        raise ValueError(
            f"signal covers [{y.start_index}, {y.end_index}] but analyzing "
            f"{T} symbols needs [{lo0}, {hiT}]")
    if gain is None:
        gain = np.sqrt(2.0 * p_rx.energy)

    m = np.arange(M)[:, None]
    l = y.start_index + np.arange(len(y))[None, :]
    demod = y.samples[None, :] * np.exp(-2j * np.pi * m * l / M)
    z = fftconvolve(demod, p_rx.taps[None, :], axes=1)
    # full-convolution start is y.start - center; sample at t = n*half
    idx = np.arange(T) * half - (y.start_index - p_rx.center_index)
    grid = z[:, idx]
    return gain * grid * np.conj(_lattice_phases(M, T))


def _modulated(p: PrototypeFilter, m: int) -> TimeSignal:
    sig = p.as_signal()
    l = sig.start_index + np.arange(len(sig))
    return TimeSignal(sig.samples * np.exp(2j * np.pi * m * l / p.num_subcarriers),
                      sig.start_index)


def interference_coefficient(p_tx: PrototypeFilter, p_rx: PrototypeFilter,
                             h, m: int, m_prime: int,
                             delta_n: int) -> complex:
    """Equivalent-channel coefficient H_{mm',nn'} for delta_n = n - n'.

    Computed by direct convolution: the transmit prototype modulated to
    subcarrier m', the channel impulse response, and the analysis prototype
    modulated to subcarrier m, decimated at delta_n * M/2, times the OQAM
    phase difference e^{j(theta_{m',n'} - theta_{m,n})}. The phase depends
    only on (m' - m) and delta_n mod 4.
    """
    if p_tx.num_subcarriers != p_rx.num_subcarriers:
        raise ValueError("filters designed for different subcarrier counts")
    M = p_tx.num_subcarriers
    if isinstance(h, TimeSignal):
        h_sig = h
    else:
        h_sig = TimeSignal(np.asarray(h, dtype=np.complex128), 0)
    chain = convolve(convolve(_modulated(p_tx, m_prime), h_sig),
                     _modulated(p_rx, m))
    value = chain.value_at(delta_n * (M // 2))
    return value * complex(_QUARTER_TURNS[(m_prime - m - delta_n) % 4])
