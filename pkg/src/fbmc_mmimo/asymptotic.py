"""Large-array limits: the equivalent channel after combining and the SINR
saturation level it implies.

As the antenna count grows, combining averages the per-antenna equivalent
channels toward p_{m'}(l) * rho_m(l) * p_m*(-l) decimated at M/2, where
rho_m(l) = rho(l) e^{j 2 pi l m / M}. The PDP factor breaks the real-domain
orthogonality of the lattice, leaving a deterministic residual whose
signal-to-interference ratio is the saturation SINR. Multiuser
interference and noise do not appear: both vanish in the limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, PowerDelayProfile
from .filters import PrototypeFilter, TimeSignal, convolve
from .modem import _modulated, _QUARTER_TURNS

__all__ = [
    "EquivalentChannel",
    "WindowTooSmallError",
    "modulated_pdp",
    "asymptotic_equivalent_channel",
    "equivalent_channel",
    "saturation_sinr",
    "asymptotic_mrc_limit_check",
]

TAIL_ENERGY_LIMIT = 1e-8
DEFAULT_DM_MAX = 4


class WindowTooSmallError(ValueError):
    """Interference window leaves more than the allowed tail energy outside."""


def modulated_pdp(pdp: PowerDelayProfile, m: int, num_subcarriers: int) -> np.ndarray:
    """rho_m(l) = rho(l) e^{j 2 pi l m / M}."""
    M = int(num_subcarriers)
    if not 0 <= m < M:
        raise ValueError(f"subcarrier index {m} out of range [0, {M})")
    l = np.arange(len(pdp))
    return pdp.powers * np.exp(2j * np.pi * l * m / M)


def asymptotic_equivalent_channel(p_tx: PrototypeFilter, p_rx: PrototypeFilter,
                                  pdp: PowerDelayProfile, m: int,
                                  m_prime: int) -> TimeSignal:
    """Limit of the combined equivalent channel g_{mm'}(l), decimated by M/2.

    Returns the full decimated triple convolution
    (p_{m'} * rho_m * p_rx,m)(l M/2) as a TimeSignal whose time axis counts
    symbol slots l = n - n' (not samples).
    """
    if p_tx.num_subcarriers != p_rx.num_subcarriers:
        raise ValueError("filters designed for different subcarrier counts")
    M = p_tx.num_subcarriers
    half = M // 2
    rho_m = TimeSignal(modulated_pdp(pdp, m % M, M), 0)
    chain = convolve(convolve(_modulated(p_tx, m_prime), rho_m),
                     _modulated(p_rx, m))
    # decimate on the symbol grid; keep every slot the support touches
    first = -(-chain.start_index // half)   # ceil
    last = chain.end_index // half
    slots = np.arange(first, last + 1)
    values = chain.samples[slots * half - chain.start_index]
    return TimeSignal(values, int(first))


@dataclass(frozen=True)
class EquivalentChannel:
    """Windowed map (m, m', delta_n) -> G coefficient, phases included."""

    coefficients: dict
    subcarrier: int
    window: tuple
    tail_energy_ratio: float

    @property
    def desired(self) -> complex:
        m = self.subcarrier
        return self.coefficients[(m, m, 0)]


def equivalent_channel(p_tx: PrototypeFilter, p_rx: PrototypeFilter,
                       pdp: PowerDelayProfile, m: int = 0,
                       window: tuple | None = None) -> EquivalentChannel:
    """All windowed G^{kk}_{mm',nn'} = g_{mm'}(dn) e^{j(theta'-theta)} values.

    ``window`` is (dm_max, dn_max); subcarrier offsets wrap cyclically. The
    energy that the window leaves out (boundary subcarrier rings plus
    delta_n overflow, relative to everything computed) must stay below
    TAIL_ENERGY_LIMIT or WindowTooSmallError is raised.
    """
    M = p_tx.num_subcarriers
    if window is None:
        window = (DEFAULT_DM_MAX, 2 * p_tx.overlap + 2)
    dm_max, dn_max = window
    if dm_max < 1 or dn_max < 1 or 2 * dm_max + 1 > M:
        raise WindowTooSmallError(f"degenerate window {window}")

    coeffs = {}
    total = 0.0
    windowed = 0.0
    # exact tail: sweep every subcarrier offset mod M, keep only the window
    for dm in range(-(M // 2) + 1, M // 2 + 1):
        g = asymptotic_equivalent_channel(p_tx, p_rx, pdp, m, m + dm)
        total += float(np.sum(np.abs(g.samples) ** 2))
        if abs(dm) > dm_max:
            continue
        m_prime = (m + dm) % M
        for dn in range(g.start_index, g.end_index + 1):
            value = g.value_at(dn)
            if abs(dn) > dn_max:
                continue
            windowed += abs(value) ** 2
            coeffs[(m, m_prime, dn)] = complex(
                value * _QUARTER_TURNS[(dm - dn) % 4])
    tail = (total - windowed) / total if total > 0 else 1.0
    if tail > TAIL_ENERGY_LIMIT:
        raise WindowTooSmallError(
            f"window {window} leaves tail energy ratio {tail:.2e} "
            f"(limit {TAIL_ENERGY_LIMIT:.0e})")
    return EquivalentChannel(coefficients=coeffs, subcarrier=m % M,
                             window=window, tail_energy_ratio=tail)


def saturation_sinr(p_tx: PrototypeFilter, p_rx: PrototypeFilter,
                    pdp: PowerDelayProfile, m: int = 0,
                    window: tuple | None = None) -> float:
    """Large-array SINR ceiling, in dB.

    Re^2 of the desired coefficient over the summed Re^2 of all other
    windowed coefficients. Noise-free by construction; the value is
    independent of the user count, the antenna count and the noise level
    (none of which appear in the limit), and also of m itself: with cyclic
    subcarrier offsets the m-dependence reduces to a sign inside Re^2.
    """
    eq = equivalent_channel(p_tx, p_rx, pdp, m, window)
    m = eq.subcarrier
    desired = np.real(eq.desired) ** 2
    interference = sum(
        np.real(value) ** 2 for key, value in eq.coefficients.items()
        if key != (m, m, 0))
    if interference <= 0.0:
        return float("inf")
    return float(10.0 * np.log10(desired / interference))


def asymptotic_mrc_limit_check(ch: ChannelSet, p_tx: PrototypeFilter,
                               p_rx: PrototypeFilter, pdp: PowerDelayProfile,
                               m: int, m_prime: int, delta_n: int,
                               k: int = 0, k_prime: int = 0):
    """Finite-N average (1/N) sum_i (H_m^{i,k})* H^{i,k'}_{mm',nn'} next to
    its law-of-large-numbers limit rho-composite value (zero across users).

    Returns (empirical, analytic) complex pair for convergence testing.
    """
    M = p_tx.num_subcarriers
    half = M // 2
    phase = _QUARTER_TURNS[(m_prime - m - delta_n) % 4]

    base = convolve(_modulated(p_tx, m_prime), _modulated(p_rx, m))
    tau = np.arange(ch.num_delays)
    idx = delta_n * half - tau - base.start_index
    ok = (idx >= 0) & (idx < len(base))
    weights = np.where(ok, base.samples[np.clip(idx, 0, len(base) - 1)], 0.0)
    per_antenna = ch.taps[:, k_prime, :] @ weights * phase  # (N,)

    l = np.arange(ch.num_delays)
    h_m = ch.taps[:, k, :] @ np.exp(-2j * np.pi * m * l / M)  # (N,)
    empirical = complex(np.mean(np.conj(h_m) * per_antenna))

    if k == k_prime:
        g = asymptotic_equivalent_channel(p_tx, p_rx, pdp, m, m_prime)
        analytic = complex(g.value_at(delta_n) * phase)
    else:
        analytic = 0.0 + 0.0j
    return empirical, analytic
