"""Monte Carlo SINR estimation across antenna counts, detectors and filter
variants, with the CP-OFDM/ZF benchmark.

Two estimators are provided and must agree:

* ``coefficient``: per channel realization, assembles the combined
  interference coefficients G = W^H H over a truncated (subcarrier offset,
  symbol offset) window and evaluates the SINR in closed form given the
  noise statistics. Fast; used for large antenna sweeps.
* ``end_to_end``: transmits known +-1 grids through the full
  synthesize -> channel -> analyze -> combine chain and measures the
  residual power directly. Slow; the empirical oracle.

Symbol-power accounting: the modem transmits +-1 data scaled to unit
average signal power, so the effective symbol power at the unit-normalized
coefficient level is E{d^2} = 1/(2 E_tx), while matched filtering leaves
noise variance sigma^2 E_rx per antenna and real-part detection halves it.
In unit-coefficient SINR units the noise term is therefore
sigma^2 * E_tx * E_rx * ||w_k||^2.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .asymptotic import WindowTooSmallError, TAIL_ENERGY_LIMIT, saturation_sinr
from .channel import (ChannelSet, PowerDelayProfile, apply_channel, delta_pdp,
                      draw_channels, exponential_pdp, frequency_responses)
from .combining import CombinerMatrix, combine_detect, make_combiner
from .filters import PrototypeFilter, design_modified, design_phydyas, matched_filter
from .modem import _QUARTER_TURNS, analyze, synthesize

__all__ = [
    "ExperimentConfig",
    "SinrRecord",
    "config_pdp",
    "config_filters",
    "coefficient_tables",
    "sinr_coefficient_estimator",
    "sinr_end_to_end_estimator",
    "cp_ofdm_zf_sinr",
    "cp_ofdm_zf_baseline",
    "sweep_antennas",
]

DETECTORS = ("mrc", "zf", "mmse")
VARIANTS = ("original", "modified")
ESTIMATORS = ("coefficient", "end_to_end")
PDP_KINDS = ("exponential", "delta")

NOISE_FREE_SINR_CAP_DB = 200.0
BOOTSTRAP_RESAMPLES = 200


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for one simulation campaign.

    Desk-scale defaults keep a full sweep well under CI budgets; the
    full-scale study (M=256, K=10, L=40, N up to 512) is just a different
    config.
    """

    num_subcarriers: int = 128
    num_users: int = 5
    antenna_counts: tuple = (16, 32, 64, 128, 256)
    num_symbols: int = 64
    trials: int = 50
    snr_db: float = 10.0
    pdp_kind: str = "exponential"
    pdp_alpha: float = 0.1
    pdp_length: int = 20
    variants: tuple = ("original",)
    detectors: tuple = ("zf",)
    estimator: str = "coefficient"
    seed: int = 0
    overlap: int = 4
    subcarrier_samples: int = 8
    dm_max: int = 4
    dn_max: int | None = None
    grid_size: int | None = None
    regularization: float = 1e-12
    cp_length: int | None = None
    include_ofdm_baseline: bool = False

    def __post_init__(self):
        if isinstance(self.antenna_counts, int):
            object.__setattr__(self, "antenna_counts", (self.antenna_counts,))
        else:
            object.__setattr__(self, "antenna_counts",
                               tuple(int(n) for n in self.antenna_counts))
        if isinstance(self.variants, str):
            object.__setattr__(self, "variants", (self.variants,))
        else:
            object.__setattr__(self, "variants", tuple(self.variants))
        if isinstance(self.detectors, str):
            object.__setattr__(self, "detectors", (self.detectors,))
        else:
            object.__setattr__(self, "detectors", tuple(self.detectors))

        if self.num_subcarriers < 4 or self.num_subcarriers % 2:
            raise ValueError("num_subcarriers must be even and >= 4")
        if self.num_users < 1:
            raise ValueError("need at least one user")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.antenna_counts or min(self.antenna_counts) < 1:
            raise ValueError("antenna counts must be positive")
        if self.pdp_kind not in PDP_KINDS:
            raise ValueError(f"unknown pdp kind {self.pdp_kind!r}")
        if self.pdp_length < 1:
            raise ValueError("pdp_length must be positive")
        if self.pdp_alpha <= 0:
            raise ValueError("pdp_alpha must be positive")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown filter variant {v!r}")
        for d in self.detectors:
            if d not in DETECTORS:
                raise ValueError(f"unknown detector {d!r}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if "zf" in self.detectors and min(self.antenna_counts) < self.num_users:
            raise ValueError("zero forcing needs antenna counts >= num_users")
        if not 1 <= self.subcarrier_samples <= self.num_subcarriers:
            raise ValueError("subcarrier_samples must be in [1, M]")
        if self.estimator == "end_to_end" and self.num_symbols <= 4 * self.overlap:
            raise ValueError(
                "end-to-end estimation needs num_symbols > 4*overlap "
                "(edge guards leave no interior symbols)")

    @property
    def noise_variance(self) -> float:
        return float(10.0 ** (-self.snr_db / 10.0))

    def subcarrier_list(self) -> np.ndarray:
        """Evenly spaced measurement subcarriers."""
        M, S = self.num_subcarriers, self.subcarrier_samples
        return np.unique((np.arange(S) * M) // S)


@dataclass(frozen=True)
class SinrRecord:
    """One measured sweep point with its provenance."""

    antenna_count: int
    num_users: int
    num_subcarriers: int
    detector: str
    variant: str
    snr_db: float
    estimator: str
    seed: int
    sinr_db: float
    stderr_db: float
    saturation_db: float | None
    wall_time_s: float


def config_pdp(config: ExperimentConfig) -> PowerDelayProfile:
    if config.pdp_kind == "delta":
        return delta_pdp()
    return exponential_pdp(config.pdp_alpha, config.pdp_length)


def config_filters(config: ExperimentConfig, variant: str,
                   pdp: PowerDelayProfile | None = None):
    """(transmit prototype, analysis prototype) for a filter variant.

    Only the analysis side changes between variants; the terminals always
    transmit with the base prototype.
    """
    p_tx = design_phydyas(config.num_subcarriers, config.overlap)
    if variant == "original":
        return p_tx, matched_filter(p_tx)
    if variant == "modified":
        if pdp is None:
            pdp = config_pdp(config)
        modified = design_modified(p_tx, pdp, grid_size=config.grid_size,
                                   regularization=config.regularization)
        return p_tx, matched_filter(modified)
    raise ValueError(f"unknown filter variant {variant!r}")


# ---------------------------------------------------------------------------
# coefficient-domain estimator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientTables:
    """Windowed pulse-pair tables for per-antenna interference coefficients.

    ``values[a, d, tau]`` holds the composite cross-correlation
    A_nu(dn*M/2 - tau) for nu = nus[a], dn = dns[d], channel delay tau, so
    that the coefficient for a channel vector h is
    (-1)^(m*dn) * i^(nu-dn) * sum_tau h(tau) e^{-j2pi m tau/M} values[a,d,tau].
    """

    values: np.ndarray
    nus: np.ndarray
    dns: np.ndarray
    phases: np.ndarray
    energy_tx: float
    energy_rx: float
    tail_energy_ratio: float
    num_subcarriers: int

    @property
    def desired_index(self) -> tuple:
        return len(self.nus) // 2, len(self.dns) // 2


def coefficient_tables(p_tx: PrototypeFilter, p_rx: PrototypeFilter,
                       pdp: PowerDelayProfile, dm_max: int = 4,
                       dn_max: int | None = None) -> CoefficientTables:
    """Precompute A_nu cross-correlations on the decimated lattice.

    The tail rule is exact: the expected coefficient energy (PDP-weighted,
    over all M cyclic subcarrier offsets and every symbol slot the pulses
    reach) that falls outside the window must stay below 1e-8 of the total.
    """
    if p_tx.num_subcarriers != p_rx.num_subcarriers:
        raise ValueError("filters designed for different subcarrier counts")
    M = p_tx.num_subcarriers
    half = M // 2
    if dn_max is None:
        dn_max = 2 * p_tx.overlap + 2
    if dm_max < 1 or dn_max < 1:
        raise WindowTooSmallError(f"degenerate window ({dm_max}, {dn_max})")
    if 2 * dm_max + 1 > M:
        raise ValueError(f"subcarrier window ({dm_max}) exceeds M={M}")

    L = len(pdp)
    rho = pdp.powers
    tau = np.arange(L)
    nus = np.arange(-dm_max, dm_max + 1)
    dns = np.arange(-dn_max, dn_max + 1)
    values = np.zeros((len(nus), len(dns), L), dtype=np.complex128)
    total = 0.0
    windowed = 0.0
    l_tx = p_tx.time_axis()
    start = -p_tx.center_index - p_rx.center_index
    all_nus = np.arange(-(M // 2) + 1, M // 2 + 1)  # every offset mod M once
    for nu in all_nus:
        corr = np.convolve(p_tx.taps * np.exp(2j * np.pi * nu * l_tx / M),
                           p_rx.taps)
        # expected energy per lag: sum_tau rho(tau) |A(u - tau)|^2
        energy = np.convolve(np.abs(corr) ** 2, rho)
        slots = np.arange(-(-start // half), (start + len(energy) - 1) // half + 1)
        ring = energy[slots * half - start]
        total += float(ring.sum())
        if abs(nu) > dm_max:
            continue
        in_window = np.abs(slots) <= dn_max
        windowed += float(ring[in_window].sum())
        a = nus.searchsorted(nu)
        for dn in slots[in_window]:
            idx = dn * half - tau - start
            ok = (idx >= 0) & (idx < len(corr))
            values[a, dns.searchsorted(dn)] = np.where(
                ok, corr[np.clip(idx, 0, len(corr) - 1)], 0.0)
    tail = (total - windowed) / total if total > 0 else 1.0
    if tail > TAIL_ENERGY_LIMIT:
        raise WindowTooSmallError(
            f"window ({dm_max}, {dn_max}) leaves tail energy ratio "
            f"{tail:.2e} (limit {TAIL_ENERGY_LIMIT:.0e})")
    phases = _QUARTER_TURNS[(nus[:, None] - dns[None, :]) % 4]
    return CoefficientTables(values=values, nus=nus, dns=dns, phases=phases,
                             energy_tx=p_tx.energy, energy_rx=p_rx.energy,
                             tail_energy_ratio=tail, num_subcarriers=M)


def _combined_coefficients(taps: np.ndarray, weights: np.ndarray,
                           tables: CoefficientTables,
                           subcarriers: np.ndarray) -> np.ndarray:
    """G[m, k, k', a, d] = (W_m^H H_m(a, d))_{kk'} with all phases applied."""
    M = tables.num_subcarriers
    tau = np.arange(taps.shape[2])
    carrier = np.exp(-2j * np.pi * subcarriers[:, None] * tau[None, :] / M)
    weighted = carrier[:, None, None, :] * tables.values[None, :, :, :]
    per_antenna = np.einsum("nkt,madt->mnkad", taps, weighted, optimize=True)
    combined = np.einsum("mnk,mnjad->mkjad", weights.conj(), per_antenna,
                         optimize=True)
    sign = np.where((subcarriers[:, None] * tables.dns[None, :]) % 2, -1.0, 1.0)
    return combined * tables.phases[None, None, None] * sign[:, None, None, None, :]


def _coefficient_sinr_matrix(ch: ChannelSet, weights: np.ndarray,
                             tables: CoefficientTables,
                             subcarriers: np.ndarray,
                             noise_variance: float) -> np.ndarray:
    """Linear SINR per (measured subcarrier, user) for one realization."""
    G = _combined_coefficients(ch.taps, weights, tables, subcarriers)
    a0, d0 = tables.desired_index
    K = ch.num_users
    users = np.arange(K)
    desired = np.real(G[:, users, users, a0, d0]) ** 2
    interference = np.sum(np.real(G) ** 2, axis=(2, 3, 4)) - desired
    w_norms = np.sum(np.abs(weights) ** 2, axis=1)
    noise = noise_variance * tables.energy_tx * tables.energy_rx * w_norms
    return desired / (interference + noise)


def sinr_coefficient_estimator(ch: ChannelSet, combiner: CombinerMatrix,
                               p_tx: PrototypeFilter, p_rx: PrototypeFilter,
                               m: int, k: int, noise_variance: float,
                               window: tuple | None = None) -> float:
    """Closed-form SINR (dB) for user k at subcarrier m, one realization.

    SINR = Re^2{G_des} E{d^2} / (sum Re^2{G_int} E{d^2}
           + sigma^2 E_rx ||w_k||^2 / 2)
    with E{d^2} = 1/(2 E_tx) from the unit-transmit-power normalization.
    """
    if ch.pdp is None:
        raise ValueError("channel set carries no PDP (needed for the window check)")
    dm_max = window[0] if window else 4
    dn_max = window[1] if window else None
    tables = coefficient_tables(p_tx, p_rx, ch.pdp, dm_max, dn_max)
    weights = np.asarray(combiner.values, dtype=np.complex128)[None]
    sinr = _coefficient_sinr_matrix(ch, weights, tables,
                                    np.array([m]), noise_variance)
    return float(10.0 * np.log10(sinr[0, k]))


# ---------------------------------------------------------------------------
# end-to-end estimator
# ---------------------------------------------------------------------------

def _desired_gains(weights: np.ndarray, taps: np.ndarray,
                   tables: CoefficientTables,
                   subcarriers: np.ndarray) -> np.ndarray:
    """Known per-(m, k) desired detection gains Re{(W^H H(0,0))_kk}."""
    a0, d0 = tables.desired_index
    M = tables.num_subcarriers
    tau = np.arange(taps.shape[2])
    carrier = np.exp(-2j * np.pi * subcarriers[:, None] * tau[None, :] / M)
    flat = np.einsum("nkt,mt->mnk", taps,
                     carrier * tables.values[None, a0, d0, :], optimize=True)
    return np.real(np.einsum("mnk,mnk->mk", weights.conj(), flat, optimize=True))


def _end_to_end_sinr_matrix(config: ExperimentConfig, ch: ChannelSet,
                            combiners, seed, p_tx: PrototypeFilter,
                            p_rx: PrototypeFilter,
                            tables: CoefficientTables) -> np.ndarray:
    M, T, K = config.num_subcarriers, config.num_symbols, config.num_users
    kappa = config.overlap
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    data_ss, noise_ss = ss.spawn(2)
    rng = np.random.default_rng(data_ss)

    data = rng.choice([-1.0, 1.0], size=(K, M, T))
    sent = [synthesize(data[k], p_tx) for k in range(K)]
    received = apply_channel(sent, ch, config.noise_variance, noise_ss)
    gain = np.sqrt(2.0 * p_tx.energy)
    grids = np.stack([analyze(y, p_rx, T, gain=gain) for y in received])
    estimates = combine_detect(combiners, grids)  # (K, M, T)

    weights = np.stack([c.values for c in combiners])
    gains = _desired_gains(weights, ch.taps, tables, np.arange(M))  # (M, K)
    interior = slice(2 * kappa, T - 2 * kappa)
    residual = (estimates[:, :, interior]
                - gains.T[:, :, None] * data[:, :, interior])
    mse = np.mean(residual**2, axis=2)  # (K, M)
    return (gains.T**2 / mse).T  # (M, K)


def sinr_end_to_end_estimator(config: ExperimentConfig, ch: ChannelSet,
                              combiners, seed) -> float:
    """Empirical SINR (dB) from a full transmit/receive run.

    Sends i.i.d. +-1 grids for every user, detects with the given
    per-subcarrier combiners, subtracts the known desired component and
    measures the residual over interior symbols (2*overlap guard columns
    discarded at each burst edge). Deterministic given the seed.
    """
    variant = config.variants[0]
    pdp = ch.pdp if ch.pdp is not None else config_pdp(config)
    p_tx, p_rx = config_filters(config, variant, pdp)
    tables = coefficient_tables(p_tx, p_rx, pdp, config.dm_max, config.dn_max)
    sinr = _end_to_end_sinr_matrix(config, ch, combiners, seed, p_tx, p_rx,
                                   tables)
    return float(10.0 * np.log10(sinr.mean()))


# ---------------------------------------------------------------------------
# CP-OFDM benchmark
# ---------------------------------------------------------------------------

def cp_ofdm_zf_sinr(H: np.ndarray, noise_variance: float) -> np.ndarray:
    """Per-user CP-OFDM/ZF SINR, linear: 1/(sigma^2 [(H^H H)^{-1}]_kk).

    ``H`` is one N x K subcarrier response (or a stacked ... x N x K batch).
    The cyclic prefix removes ISI/ICI exactly, so only the noise
    enhancement of the ZF inverse remains.
    """
    H = np.asarray(H, dtype=np.complex128)
    gram = np.swapaxes(H, -2, -1).conj() @ H
    inv_diag = np.real(np.diagonal(np.linalg.inv(gram), axis1=-2, axis2=-1))
    return 1.0 / (noise_variance * inv_diag)


def cp_ofdm_zf_baseline(config: ExperimentConfig,
                        num_antennas: int | None = None) -> float:
    """Average CP-OFDM/ZF SINR benchmark in dB.

    Computed analytically per channel realization (no time-domain OFDM
    chain), averaged over subcarriers, users and trials; requires the
    cyclic prefix to cover the channel memory. A noise-free config returns
    the 200 dB sentinel.
    """
    if num_antennas is None:
        if len(config.antenna_counts) != 1:
            raise ValueError("pass num_antennas when the config sweeps several")
        num_antennas = config.antenna_counts[0]
    pdp = config_pdp(config)
    cp = config.cp_length if config.cp_length is not None else len(pdp) - 1
    if cp < len(pdp) - 1:
        raise ValueError(
            f"cyclic prefix of {cp} samples cannot cover a channel with "
            f"{len(pdp)} taps")
    if config.noise_variance == 0.0:
        return NOISE_FREE_SINR_CAP_DB

    ms = config.subcarrier_list()
    root = np.random.SeedSequence(config.seed)
    totals = []
    for child in root.spawn(config.trials):
        ch = draw_channels(pdp, num_antennas, config.num_users, child)
        H = frequency_responses(ch, ms, config.num_subcarriers)
        totals.append(np.mean(cp_ofdm_zf_sinr(H, config.noise_variance)))
    return float(10.0 * np.log10(np.mean(totals)))


# ---------------------------------------------------------------------------
# antenna sweep
# ---------------------------------------------------------------------------

def _bootstrap_stderr_db(trial_means: np.ndarray, rng: np.random.Generator) -> float:
    if len(trial_means) < 2:
        return 0.0
    idx = rng.integers(0, len(trial_means),
                       size=(BOOTSTRAP_RESAMPLES, len(trial_means)))
    resampled = trial_means[idx].mean(axis=1)
    return float(np.std(10.0 * np.log10(resampled)))


def sweep_antennas(config: ExperimentConfig) -> list[SinrRecord]:
    """One SinrRecord per (antenna count, detector, variant).

    Channel realizations are drawn from per-(N, trial) substreams shared by
    every detector and variant, so curves are compared on identical
    realizations and results do not depend on evaluation order.
    """
    pdp = config_pdp(config)
    ms = config.subcarrier_list()
    setups = {}
    for variant in config.variants:
        p_tx, p_rx = config_filters(config, variant, pdp)
        tables = coefficient_tables(p_tx, p_rx, pdp, config.dm_max,
                                    config.dn_max)
        sat = None
        if variant == "original":
            sat = saturation_sinr(p_tx, p_rx, pdp,
                                  window=(config.dm_max,
                                          config.dn_max or 2 * config.overlap + 2))
        setups[variant] = (p_tx, p_rx, tables, sat)

    noise_var = config.noise_variance
    records = []
    root = np.random.SeedSequence(config.seed)
    per_n_streams = root.spawn(len(config.antenna_counts))
    for n_index, N in enumerate(config.antenna_counts):
        streams = per_n_streams[n_index].spawn(config.trials + 1)
        boot_rng = np.random.default_rng(streams[-1])
        sums = {key: [] for key in
                ((d, v) for d in config.detectors for v in config.variants)}
        times = dict.fromkeys(sums, 0.0)
        for trial in range(config.trials):
            ch_ss, e2e_ss = streams[trial].spawn(2)
            ch = draw_channels(pdp, N, config.num_users, ch_ss)
            full_ms = np.arange(config.num_subcarriers) \
                if config.estimator == "end_to_end" else ms
            H = frequency_responses(ch, full_ms, config.num_subcarriers)
            for detector in config.detectors:
                t0 = time.perf_counter()
                combiners = [make_combiner(detector, H[j], noise_var, int(m))
                             for j, m in enumerate(full_ms)]
                weights = np.stack([c.values for c in combiners])
                t_comb = time.perf_counter() - t0
                for variant in config.variants:
                    p_tx, p_rx, tables, _ = setups[variant]
                    t1 = time.perf_counter()
                    if config.estimator == "coefficient":
                        sinr = _coefficient_sinr_matrix(
                            ch, weights, tables, ms, noise_var)
                    else:
                        sinr = _end_to_end_sinr_matrix(
                            config, ch, combiners, e2e_ss, p_tx, p_rx, tables)
                    sums[(detector, variant)].append(float(sinr.mean()))
                    times[(detector, variant)] += t_comb + time.perf_counter() - t1
        for (detector, variant), means in sums.items():
            means = np.asarray(means)
            records.append(SinrRecord(
                antenna_count=N, num_users=config.num_users,
                num_subcarriers=config.num_subcarriers, detector=detector,
                variant=variant, snr_db=config.snr_db,
                estimator=config.estimator, seed=config.seed,
                sinr_db=float(10.0 * np.log10(means.mean())),
                stderr_db=_bootstrap_stderr_db(means, boot_rng),
                saturation_db=setups[variant][3],
                wall_time_s=times[(detector, variant)],
            ))
    if config.include_ofdm_baseline:
        for N in config.antenna_counts:
            t0 = time.perf_counter()
            value = cp_ofdm_zf_baseline(config, num_antennas=N)
            records.append(SinrRecord(
                antenna_count=N, num_users=config.num_users,
                num_subcarriers=config.num_subcarriers, detector="zf",
                variant="cp-ofdm", snr_db=config.snr_db,
                estimator="coefficient", seed=config.seed,
                sinr_db=value, stderr_db=0.0, saturation_db=None,
                wall_time_s=time.perf_counter() - t0,
            ))
    return records
