"""FBMC/OQAM massive-MIMO uplink link-level simulation library.

Covers prototype filter design (PHYDYAS plus its PDP-compensated variant),
the OQAM synthesis/analysis banks, multi-antenna Rayleigh channels, linear
combining, the closed-form large-array SINR ceiling and Monte Carlo SINR
estimation with a CP-OFDM benchmark.
"""

__version__ = "0.1.0"

from .asymptotic import (EquivalentChannel, WindowTooSmallError,
                         asymptotic_equivalent_channel,
                         asymptotic_mrc_limit_check, equivalent_channel,
                         modulated_pdp, saturation_sinr)
from .channel import (ChannelSet, PowerDelayProfile, apply_channel, delta_pdp,
                      draw_channels, estimate_pdp, exponential_pdp,
                      frequency_response, frequency_responses,
                      load_channelset, read_pdp_csv, save_channelset,
                      write_pdp_csv)
from .combining import (CombinerMatrix, SingularChannelError, combine_detect,
                        make_combiner, mmse, mrc, zf)
from .filters import (FilterSpectrum, PrototypeFilter, TimeSignal,
                      composite_pulse, design_modified, design_phydyas,
                      design_rectangular, inverse_spectrum, matched_filter,
                      nyquist_error, read_filter_csv, spectrum,
                      write_filter_csv)
from .harness import (ExperimentConfig, SinrRecord, coefficient_tables,
                      config_filters, config_pdp, cp_ofdm_zf_baseline,
                      cp_ofdm_zf_sinr, sinr_coefficient_estimator,
                      sinr_end_to_end_estimator, sweep_antennas)
from .modem import (analyze, basis_function, interference_coefficient,
                    oqam_phase, real_inner_product, synthesize,
                    transmit_scale)

__all__ = [
    "__version__",
    # filters
    "PrototypeFilter", "FilterSpectrum", "TimeSignal", "design_phydyas",
    "design_rectangular", "matched_filter", "composite_pulse",
    "nyquist_error", "spectrum", "inverse_spectrum", "design_modified",
    "write_filter_csv", "read_filter_csv",
    # modem
    "oqam_phase", "transmit_scale", "basis_function", "real_inner_product",
    "synthesize", "analyze", "interference_coefficient",
    # channel
    "PowerDelayProfile", "ChannelSet", "exponential_pdp", "delta_pdp",
    "draw_channels", "frequency_response", "frequency_responses",
    "apply_channel", "estimate_pdp", "write_pdp_csv", "read_pdp_csv",
    "save_channelset", "load_channelset",
    # combining
    "CombinerMatrix", "SingularChannelError", "mrc", "zf", "mmse",
    "make_combiner", "combine_detect",
    # asymptotic
    "EquivalentChannel", "WindowTooSmallError", "modulated_pdp",
    "asymptotic_equivalent_channel", "equivalent_channel", "saturation_sinr",
    "asymptotic_mrc_limit_check",
    # harness
    "ExperimentConfig", "SinrRecord", "coefficient_tables", "config_pdp",
    "config_filters", "sinr_coefficient_estimator",
    "sinr_end_to_end_estimator", "cp_ofdm_zf_sinr", "cp_ofdm_zf_baseline",
    "sweep_antennas",
]
