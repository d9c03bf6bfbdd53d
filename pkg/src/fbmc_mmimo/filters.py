"""Prototype filter design: PHYDYAS, matched filters, and PDP-compensated
modification via spectral division.

All filters and pulses carry explicit time-origin bookkeeping so that
convolutions, decimation and Nyquist checks agree on where l = 0 sits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PrototypeFilter",
    "FilterSpectrum",
    "TimeSignal",
    "design_phydyas",
    "design_rectangular",
    "matched_filter",
    "composite_pulse",
    "nyquist_error",
    "spectrum",
    "inverse_spectrum",
    "design_modified",
    "write_filter_csv",
    "read_filter_csv",
]

# Frequency-sampling coefficients G_k of the PHYDYAS family, per overlap
# factor. G_0 = 1; the remaining values satisfy G_k^2 + G_{K-k}^2 = 1.
PHYDYAS_COEFFS = {
    2: (1.0, np.sqrt(2.0) / 2.0),
    3: (1.0, 0.91143783, np.sqrt(1.0 - 0.91143783**2)),
    4: (1.0, 0.971960, np.sqrt(2.0) / 2.0, np.sqrt(1.0 - 0.971960**2)),
}


@dataclass(frozen=True)
class TimeSignal:
    """A finite complex sequence with an absolute sample-time origin.

    ``samples[i]`` holds the value at discrete time ``start_index + i``.
    """

    samples: np.ndarray
    start_index: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1:
            raise ValueError("TimeSignal samples must be one-dimensional")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "start_index", int(self.start_index))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def end_index(self) -> int:
        """Time of the last sample (inclusive)."""
        return self.start_index + len(self.samples) - 1

    def value_at(self, l: int) -> complex:
        """Sample at absolute time l; zero outside the support."""
        i = l - self.start_index
        if 0 <= i < len(self.samples):
            return complex(self.samples[i])
        return 0.0

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))


def convolve(a: TimeSignal, b: TimeSignal) -> TimeSignal:
    """Full linear convolution with origin bookkeeping."""
    return TimeSignal(np.convolve(a.samples, b.samples),
                      a.start_index + b.start_index)


@dataclass(frozen=True)
class PrototypeFilter:
    """FIR prototype pulse with subcarrier-count metadata.

    ``taps[i]`` is the impulse response at time ``i - center_index``; the
    tap at ``center_index`` is treated as l = 0.
    """

    taps: np.ndarray
    num_subcarriers: int
    overlap: int
    center_index: int

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128)
        if taps.ndim != 1 or len(taps) == 0:
            raise ValueError("filter taps must be a nonempty 1-D sequence")
        energy = np.sum(np.abs(taps) ** 2)
        if not np.isfinite(energy) or energy <= 0.0:
            raise ValueError("filter energy must be finite and positive")
        object.__setattr__(self, "taps", taps)

    def __len__(self) -> int:
        return len(self.taps)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.taps) ** 2))

    def as_signal(self) -> TimeSignal:
        return TimeSignal(self.taps, -self.center_index)

    def time_axis(self) -> np.ndarray:
        """Tap times l = i - center_index."""
        return np.arange(len(self.taps)) - self.center_index


@dataclass(frozen=True)
class FilterSpectrum:
    """Uniform samples of a filter's DTFT on [0, 2pi)."""

    grid_size: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if len(values) != self.grid_size:
            raise ValueError("spectrum length does not match grid_size")
        object.__setattr__(self, "values", values)

    @property
    def frequencies(self) -> np.ndarray:
        """Normalized frequencies omega_j = 2 pi j / grid_size."""
        return 2.0 * np.pi * np.arange(self.grid_size) / self.grid_size


def design_phydyas(num_subcarriers: int, overlap: int = 4) -> PrototypeFilter:
    """Construct the PHYDYAS prototype by frequency sampling.

    p(l) = G0 + 2 * sum_k (-1)^k G_k cos(2 pi k (l+1) / (overlap*M)) over
    l = 0 .. overlap*M - 1, normalized to unit energy. The taps are
    symmetric about index overlap*M/2 - 1, which is taken as l = 0.
    """
    M = int(num_subcarriers)
    if M % 2 != 0:
        raise ValueError(f"number of subcarriers must be even, got {M}")
    if M < 4:
        raise ValueError(f"number of subcarriers must be >= 4, got {M}")
    if overlap not in PHYDYAS_COEFFS:
        raise ValueError(
            f"unsupported overlap factor {overlap}; choose from "
            f"{sorted(PHYDYAS_COEFFS)}")
    G = PHYDYAS_COEFFS[overlap]
    length = overlap * M
    l = np.arange(length)
    p = np.full(length, G[0], dtype=np.float64)
    for k in range(1, overlap):
        p += 2.0 * (-1) ** k * G[k] * np.cos(2.0 * np.pi * k * (l + 1) / length)
    p /= np.sqrt(np.sum(p**2))
    return PrototypeFilter(taps=p, num_subcarriers=M, overlap=overlap,
                           center_index=length // 2 - 1)


def design_rectangular(num_subcarriers: int) -> PrototypeFilter:
    """Unit-energy rectangular pulse of length M (the OFDM/sinc reference)."""
    M = int(num_subcarriers)
    if M < 2:
        raise ValueError("need at least two subcarriers")
    taps = np.full(M, 1.0 / np.sqrt(M))
    return PrototypeFilter(taps=taps, num_subcarriers=M, overlap=1,
                           center_index=M // 2 - 1)


def matched_filter(p: PrototypeFilter) -> PrototypeFilter:
    """Time-reversed complex conjugate p*(-l) with remapped center."""
    return PrototypeFilter(
        taps=np.conj(p.taps[::-1]),
        num_subcarriers=p.num_subcarriers,
        overlap=p.overlap,
        center_index=len(p.taps) - 1 - p.center_index,
    )


def composite_pulse(p_tx: PrototypeFilter, p_rx: PrototypeFilter,
                    pdp=None) -> TimeSignal:
    """Effective pulse p_tx * [rho] * p_rx as a centered time signal.

    ``p_rx`` is convolved as given; pass ``matched_filter(p)`` to obtain the
    receiver-side q(l) = p(l) * rho(l) * p~*(-l). ``pdp`` may be a
    PowerDelayProfile or a plain causal tap-power sequence.
    """
    if p_tx.num_subcarriers != p_rx.num_subcarriers:
        raise ValueError(
            "transmit/receive filters designed for different subcarrier "
            f"counts: {p_tx.num_subcarriers} vs {p_rx.num_subcarriers}")
    sig = p_tx.as_signal()
    if pdp is not None:
        powers = np.asarray(getattr(pdp, "powers", pdp), dtype=np.float64)
        sig = convolve(sig, TimeSignal(powers, 0))
    return convolve(sig, p_rx.as_signal())


def nyquist_error(q: TimeSignal, num_subcarriers: int) -> float:
    """max over r != 0 of |q(r*M)| / |q(0)|.

    Zero crossings at nonzero multiples of M make q a Nyquist pulse; this
    is the departure from that condition.
    """
    M = int(num_subcarriers)
    if len(q) == 0:
        raise ValueError("empty pulse")
    q0 = q.value_at(0)
    if q0 == 0:
        raise ValueError("q(0) is zero (or l=0 outside the pulse support)")
    worst = 0.0
    reach = max(abs(q.start_index), abs(q.end_index))
    r = 1
    while r * M <= reach:
        worst = max(worst, abs(q.value_at(r * M)), abs(q.value_at(-r * M)))
        r += 1
    return worst / abs(q0)


def spectrum(p: PrototypeFilter, grid_size: int) -> FilterSpectrum:
    """DTFT samples P(omega_j) = sum_l p(l) e^{-j omega_j l} on a uniform grid.

    Exact at the grid frequencies omega_j = 2 pi j / grid_size.
    """
    if grid_size < len(p.taps):
        raise ValueError(
            f"grid_size {grid_size} smaller than filter length {len(p.taps)}")
    values = np.fft.fft(p.taps, grid_size)
    j = np.arange(grid_size)
    values = values * np.exp(2j * np.pi * j * p.center_index / grid_size)
    return FilterSpectrum(grid_size=grid_size, values=values)


def inverse_spectrum(spec: FilterSpectrum) -> TimeSignal:
    """Inverse transform onto the time window [-grid/2, grid/2)."""
    x = np.fft.ifft(spec.values)
    return TimeSignal(np.fft.fftshift(x), -(spec.grid_size // 2))


def _dominant_window(signal: TimeSignal, width: int) -> TimeSignal:
    """Contiguous window of the given width capturing maximal energy."""
    e = np.abs(signal.samples) ** 2
    if width >= len(e):
        return signal
    csum = np.concatenate([[0.0], np.cumsum(e)])
    windows = csum[width:] - csum[:-width]
    k = int(np.argmax(windows))
    return TimeSignal(signal.samples[k:k + width], signal.start_index + k)


def design_modified(p: PrototypeFilter, pdp, grid_size: int | None = None,
                    regularization: float = 1e-12) -> PrototypeFilter:
    """PDP-compensated analysis prototype via spectral division.

    Samples P(omega) and the PDP's transform rho_bar(omega) on a dense grid,
    forms P~ = P * rho_bar / (|rho_bar|^2 + eps) with
    eps = regularization * max|rho_bar|^2 (the regularized version of
    P~ = P / rho_bar*), inverse-transforms, truncates to a window of length
    len(p) + L - 1 centered on the dominant energy, and rescales so the
    composite p * rho * p~*(-l) equals exactly 1 at l = 0.

    Only the analysis (base-station) side uses the result; the transmit
    prototype is unchanged.
    """
    powers = np.asarray(getattr(pdp, "powers", pdp), dtype=np.float64)
    if powers.ndim != 1 or len(powers) == 0 or np.sum(powers) <= 0.0:
        raise ValueError("PDP must be a nonempty sequence with positive sum")
    if regularization < 0.0:
        raise ValueError("regularization must be nonnegative")
    if grid_size is None:
        grid_size = 16 * len(p.taps)
    if grid_size < 8 * len(p.taps):
        raise ValueError(
            f"grid_size {grid_size} too small; need >= 8x filter length "
            f"({8 * len(p.taps)}) for an accurate inverse transform")

    P = spectrum(p, grid_size).values
    rho_bar = np.fft.fft(powers, grid_size)
    peak = np.max(np.abs(rho_bar))
    if regularization == 0.0 and np.min(np.abs(rho_bar)) < 1e-12 * peak:
        raise ValueError(
            "PDP transform has a near-null on the grid; division is "
            "ill-posed with regularization=0")
    eps = regularization * peak**2
    modified = P * rho_bar / (np.abs(rho_bar) ** 2 + eps)

    full = inverse_spectrum(FilterSpectrum(grid_size, modified))
    window = _dominant_window(full, len(p.taps) + len(powers) - 1)
    center = -window.start_index

    result = PrototypeFilter(taps=window.samples,
                             num_subcarriers=p.num_subcarriers,
                             overlap=p.overlap, center_index=center)
    q0 = composite_pulse(p, matched_filter(result), powers).value_at(0)
    # composite scales by conj of the tap scale; solve s* q0 = 1
    scale = np.conj(1.0 / q0)
    return PrototypeFilter(taps=result.taps * scale,
                           num_subcarriers=p.num_subcarriers,
                           overlap=p.overlap, center_index=center)


# ---------------------------------------------------------------------------
# CSV import/export
# ---------------------------------------------------------------------------

FILTER_SCHEMA = "fbmc-filter-v1"


def write_filter_csv(path, p: PrototypeFilter) -> None:
    """One line per tap (index, real, imag), after an M/overlap/center header."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={FILTER_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["M", "overlap", "center_index"])
        writer.writerow([p.num_subcarriers, p.overlap, p.center_index])
        writer.writerow(["index", "real", "imag"])
        for i, tap in enumerate(p.taps):
            writer.writerow([i, f"{tap.real:.17g}", f"{tap.imag:.17g}"])


def read_filter_csv(path) -> PrototypeFilter:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# schema={FILTER_SCHEMA}":
            raise ValueError(f"not a {FILTER_SCHEMA} file: {path}")
        rows = list(csv.reader(fh))
    if len(rows) < 4 or rows[0] != ["M", "overlap", "center_index"]:
        raise ValueError(f"malformed filter CSV: {path}")
    M, overlap, center = (int(v) for v in rows[1])
    taps = np.array([float(r[1]) + 1j * float(r[2]) for r in rows[3:]])
    return PrototypeFilter(taps=taps, num_subcarriers=M, overlap=overlap,
                           center_index=center)
