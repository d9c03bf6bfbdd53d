"""Multi-antenna multi-user frequency-selective Rayleigh channels.

Taps h_{i,k}(l) are i.i.d. CN(0, rho(l)) across antennas i and users k, at
integer sample delays l = 0..L-1. The PDP is unit-sum normalized so that
E{|H_m|^2} = 1 and SNR = 1/sigma_nu^2 at the antenna inputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .filters import TimeSignal

__all__ = [
    "PowerDelayProfile",
    "ChannelSet",
    "exponential_pdp",
    "delta_pdp",
    "draw_channels",
    "frequency_response",
    "frequency_responses",
    "apply_channel",
    "estimate_pdp",
    "write_pdp_csv",
    "read_pdp_csv",
    "save_channelset",
    "load_channelset",
]

@dataclass(frozen=True)
class PowerDelayProfile:
    """Nonnegative tap powers rho(l) at consecutive sample delays, unit sum."""

    powers: np.ndarray

    def __post_init__(self):
        powers = np.asarray(self.powers, dtype=np.float64)
        if powers.ndim != 1 or len(powers) == 0:
            raise ValueError("PDP must be a nonempty 1-D sequence")
        if np.any(powers < 0.0):
            raise ValueError("PDP powers must be nonnegative")
        total = powers.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise ValueError("PDP must have a positive finite sum")
        object.__setattr__(self, "powers", powers / total)

    def __len__(self) -> int:
        return len(self.powers)

    @property
    def num_taps(self) -> int:
        return len(self.powers)


def exponential_pdp(alpha: float, length: int) -> PowerDelayProfile:
    """rho(l) = e^{-alpha l} / sum_l e^{-alpha l}, l = 0..L-1."""
    if alpha <= 0.0:
        raise ValueError(f"decay rate must be positive, got {alpha}")
    if length < 1:
        raise ValueError(f"need at least one tap, got {length}")
    return PowerDelayProfile(np.exp(-alpha * np.arange(length)))


def delta_pdp() -> PowerDelayProfile:
    """Single-tap (frequency-flat) profile."""
    return PowerDelayProfile(np.array([1.0]))


@dataclass(frozen=True)
class ChannelSet:
    """N x K x L tensor of complex channel taps h_{i,k}(l)."""

    taps: np.ndarray
    pdp: PowerDelayProfile | None = None
    seed: int | None = None

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128)
        if taps.ndim != 3 or taps.size == 0:
            raise ValueError("channel taps must be a nonempty N x K x L array")
        object.__setattr__(self, "taps", taps)

    @property
    def num_antennas(self) -> int:
        return self.taps.shape[0]

    @property
    def num_users(self) -> int:
        return self.taps.shape[1]

    @property
    def num_delays(self) -> int:
        return self.taps.shape[2]


def draw_channels(pdp: PowerDelayProfile, num_antennas: int, num_users: int,
                  seed) -> ChannelSet:
    """i.i.d. CN(0, rho(l)) taps, independent across (antenna, user) pairs.

    ``seed`` may be an int, a SeedSequence, or a Generator; equal seeds give
    bit-identical tensors.
    """
    if num_antennas < 1 or num_users < 1:
        raise ValueError("need at least one antenna and one user")
    rng = np.random.default_rng(seed)
    shape = (num_antennas, num_users, len(pdp))
    taps = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    taps *= np.sqrt(pdp.powers / 2.0)
    return ChannelSet(taps=taps, pdp=pdp,
                      seed=seed if isinstance(seed, int) else None)


def frequency_response(ch: ChannelSet, m: int, num_subcarriers: int) -> np.ndarray:
    """H_m^{i,k} = sum_l h_{i,k}(l) e^{-j 2 pi m l / M} as an N x K matrix."""
    M = int(num_subcarriers)
    if not 0 <= m < M:
        raise ValueError(f"subcarrier index {m} out of range [0, {M})")
    l = np.arange(ch.num_delays)
    phase = np.exp(-2j * np.pi * m * l / M)
    return ch.taps @ phase


def frequency_responses(ch: ChannelSet, ms, num_subcarriers: int) -> np.ndarray:
    """Stacked per-subcarrier responses, shape (len(ms), N, K)."""
    M = int(num_subcarriers)
    ms = np.asarray(ms, dtype=int)
    if np.any((ms < 0) | (ms >= M)):
        raise ValueError("subcarrier index out of range")
    l = np.arange(ch.num_delays)
    phases = np.exp(-2j * np.pi * ms[:, None] * l[None, :] / M)
    return np.einsum("nkl,ml->mnk", ch.taps, phases, optimize=True)


def apply_channel(signals, ch: ChannelSet, noise_variance: float,
                  seed) -> list[TimeSignal]:
    """Received per-antenna signals y_i = sum_k x_k * h_{i,k} + nu_i.

    The noise nu_i is i.i.d. CN(0, noise_variance) at the full signal rate,
    added after the convolution; SNR = 1/noise_variance for unit-power
    transmit signals. All K inputs must share start index and length.
    """
    if noise_variance < 0.0:
        raise ValueError("noise variance must be nonnegative")
    if len(signals) != ch.num_users:
        raise ValueError(
            f"got {len(signals)} transmit signals for {ch.num_users} users")
    start = signals[0].start_index
    length = len(signals[0])
    for s in signals[1:]:
        if s.start_index != start or len(s) != length:
            raise ValueError("all transmit signals must share start and length")

    x = np.stack([s.samples for s in signals])  # (K, Lx)
    y = fftconvolve(x[None, :, :], ch.taps, axes=-1).sum(axis=1)
    if noise_variance > 0.0:
        rng = np.random.default_rng(seed)
        y = y + np.sqrt(noise_variance / 2.0) * (
            rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return [TimeSignal(row, start) for row in y]


def estimate_pdp(ch: ChannelSet) -> PowerDelayProfile:
    """PDP from the cross-antenna/user sample variance, unit-sum renormalized.

    rho_hat(l) = (1/NK) sum_{i,k} |h_{i,k}(l)|^2; consistent as N grows by
    the law of large numbers.
    """
    power = np.mean(np.abs(ch.taps) ** 2, axis=(0, 1))
    if power.sum() <= 0.0:
        raise ValueError("cannot estimate a PDP from an all-zero channel set")
    return PowerDelayProfile(power)


# ---------------------------------------------------------------------------
# import/export
# ---------------------------------------------------------------------------

PDP_SCHEMA = "fbmc-pdp-v1"
_DUMP_MAGIC = b"FBMCCHv1"


def write_pdp_csv(path, pdp: PowerDelayProfile) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={PDP_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["delay", "power"])
        for l, rho in enumerate(pdp.powers):
            writer.writerow([l, f"{rho:.17g}"])


def read_pdp_csv(path) -> PowerDelayProfile:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# schema={PDP_SCHEMA}":
            raise ValueError(f"not a {PDP_SCHEMA} file: {path}")
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["delay", "power"]:
        raise ValueError(f"malformed PDP CSV: {path}")
    return PowerDelayProfile(np.array([float(r[1]) for r in rows[1:]]))


def save_channelset(path, ch: ChannelSet) -> None:
    """Binary dump: shape header (N, K, L) then interleaved re/im doubles,
    little-endian."""
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC)
        fh.write(np.array(ch.taps.shape, dtype="<i8").tobytes())
        fh.write(ch.taps.astype("<c16").tobytes())


def load_channelset(path) -> ChannelSet:
    with open(path, "rb") as fh:
        magic = fh.read(len(_DUMP_MAGIC))
        if magic != _DUMP_MAGIC:
            raise ValueError(f"not a channel dump: {path}")
        shape = np.frombuffer(fh.read(24), dtype="<i8")
        data = np.frombuffer(fh.read(), dtype="<c16")
    n, k, l = (int(v) for v in shape)
    if data.size != n * k * l:
        raise ValueError(f"channel dump truncated: {path}")
    return ChannelSet(taps=data.reshape(n, k, l).astype(np.complex128))
