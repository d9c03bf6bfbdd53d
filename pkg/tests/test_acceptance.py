"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
complete. The Monte Carlo criteria share two session sweeps (desk-scale
M=128, K=5, exponential PDP alpha=0.1 L=20, SNR 10 dB, 50 trials).
"""

import time

import numpy as np
import pytest

from fbmc_mmimo import (ExperimentConfig, basis_function, composite_pulse,
                        coefficient_tables, config_filters, config_pdp,
                        cp_ofdm_zf_baseline, delta_pdp, design_modified,
                        design_phydyas, draw_channels, exponential_pdp,
                        estimate_pdp, frequency_response, frequency_responses,
                        make_combiner, matched_filter, modulated_pdp,
                        nyquist_error, real_inner_product, sweep_antennas)
from fbmc_mmimo.cli import main as cli_main
from fbmc_mmimo.harness import (_coefficient_sinr_matrix,
                                _end_to_end_sinr_matrix)

DESK = dict(num_subcarriers=128, num_users=5, pdp_kind="exponential",
            pdp_alpha=0.1, pdp_length=20, snr_db=10.0, trials=50, seed=2024,
            subcarrier_samples=8)


def report(criterion: int, passed: bool, detail: str) -> None:
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")
    assert passed, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def desk_sweep():
    """ZF sweep over both filter variants; feeds criteria 2, 3 and 5."""
    config = ExperimentConfig(antenna_counts=(32, 64, 128, 256),
                              detectors=("zf",),
                              variants=("original", "modified"), **DESK)
    t0 = time.perf_counter()
    records = sweep_antennas(config)
    elapsed = time.perf_counter() - t0
    table = {(r.antenna_count, r.variant): r for r in records}
    return table, elapsed


@pytest.fixture(scope="module")
def detector_sweep():
    config = ExperimentConfig(antenna_counts=(256,),
                              detectors=("mrc", "zf", "mmse"),
                              variants=("original",), **DESK)
    records = sweep_antennas(config)
    return {r.detector: r for r in records}


def test_criterion_1_orthogonality_suite():
    t0 = time.perf_counter()
    worst_cross = 0.0
    worst_self = 0.0
    for M in (16, 64):
        p = design_phydyas(M, 4)
        anchors = [(m0, n0) for m0 in (0, 1, 2, 3, M // 2, M - 5)
                   for n0 in range(4)]
        for m0, n0 in anchors:
            a = basis_function(m0, n0, p)
            worst_self = max(worst_self, abs(real_inner_product(a, a) - 1.0))
            for dm in range(-4, 5):
                for dn in range(-8, 9):
                    m1 = m0 + dm
                    if (dm, dn) == (0, 0) or not 0 <= m1 < M:
                        continue
                    b = basis_function(m1, n0 + dn, p)
                    worst_cross = max(worst_cross,
                                      abs(real_inner_product(a, b)))
    elapsed = time.perf_counter() - t0
    report(1, worst_cross <= 1e-3 and worst_self <= 1e-3 and elapsed < 30.0,
           f"worst cross {worst_cross:.2e}, self dev {worst_self:.2e} "
           f"(tol 1e-3), {elapsed:.1f} s (< 30 s)")


def test_criterion_2_saturation_reproduction(desk_sweep):
    table, elapsed = desk_sweep
    r256 = table[(256, "original")]
    r64 = table[(64, "original")]
    gap_to_prediction = abs(r256.sinr_db - r256.saturation_db)
    flatness = r256.sinr_db - r64.sinr_db
    report(2, gap_to_prediction <= 1.0 and flatness <= 1.0 and elapsed < 600.0,
           f"MC {r256.sinr_db:.2f} dB vs predicted ceiling "
           f"{r256.saturation_db:.2f} dB (|diff| {gap_to_prediction:.2f} <= 1), "
           f"SINR(256)-SINR(64) = {flatness:.2f} <= 1, sweep {elapsed:.0f} s")


def test_criterion_3_desaturation(desk_sweep):
    table, _ = desk_sweep
    gains = [table[(2 * n, "modified")].sinr_db - table[(n, "modified")].sinr_db
             for n in (32, 64, 128)]
    lift = table[(256, "modified")].sinr_db - table[(256, "original")].sinr_db
    report(3, min(gains) >= 2.0 and lift >= 5.0,
           f"per-doubling gains {[f'{g:.2f}' for g in gains]} dB (>= 2), "
           f"modified-vs-original at N=256: {lift:.2f} dB (>= 5)")


def test_criterion_4_detector_equivalence(detector_sweep):
    values = {d: r.sinr_db for d, r in detector_sweep.items()}
    spread = max(values.values()) - min(values.values())
    report(4, spread <= 1.0,
           f"MRC/ZF/MMSE at N=256: {values['mrc']:.2f}/{values['zf']:.2f}/"
           f"{values['mmse']:.2f} dB, spread {spread:.2f} <= 1")


def test_criterion_5_cp_ofdm_gap(desk_sweep):
    table, _ = desk_sweep
    fbmc = table[(128, "modified")].sinr_db
    config = ExperimentConfig(antenna_counts=(128,), detectors=("zf",),
                              variants=("modified",), **DESK)
    ofdm = cp_ofdm_zf_baseline(config)
    gap = ofdm - fbmc
    report(5, 0.5 <= gap <= 2.5,
           f"CP-OFDM {ofdm:.2f} dB vs modified FBMC {fbmc:.2f} dB at N=128: "
           f"gap {gap:.2f} dB in [0.5, 2.5]")


def test_criterion_6_filter_design_correctness():
    p = design_phydyas(256, 4)
    identity_dev = np.max(np.abs(design_modified(p, delta_pdp()).taps - p.taps))
    pdp = exponential_pdp(0.1, 40)
    before = nyquist_error(composite_pulse(p, matched_filter(p), pdp), 256)
    after = nyquist_error(
        composite_pulse(p, matched_filter(design_modified(p, pdp)), pdp), 256)
    ratio = before / after
    report(6, identity_dev <= 1e-10 and ratio >= 100.0,
           f"delta-PDP identity dev {identity_dev:.1e} <= 1e-10, "
           f"Nyquist error {before:.2e} -> {after:.2e} ({ratio:.0f}x >= 100x)")


def test_criterion_7_estimator_agreement():
    worst = 0.0
    worst_combo = None
    for pdp_kind in ("delta", "exponential"):
        for variant in ("original", "modified"):
            for K in (1, 4):
                for N in (1, 8, 64):
                    config = ExperimentConfig(
                        num_subcarriers=64, num_users=K, antenna_counts=(N,),
                        num_symbols=64, trials=20, snr_db=10.0,
                        pdp_kind=pdp_kind, pdp_alpha=0.1, pdp_length=8,
                        detectors=("mrc",), variants=(variant,),
                        subcarrier_samples=64, seed=7)
                    pdp = config_pdp(config)
                    p_tx, p_rx = config_filters(config, variant, pdp)
                    tables = coefficient_tables(p_tx, p_rx, pdp)
                    ms = np.arange(64)
                    coef_vals, e2e_vals = [], []
                    root = np.random.SeedSequence((7, N, K))
                    for child in root.spawn(config.trials):
                        ch_ss, e2e_ss = child.spawn(2)
                        ch = draw_channels(pdp, N, K, ch_ss)
                        H = frequency_responses(ch, ms, 64)
                        combiners = [make_combiner("mrc", H[m], 0.1, int(m))
                                     for m in ms]
                        weights = np.stack([c.values for c in combiners])
                        coef_vals.append(_coefficient_sinr_matrix(
                            ch, weights, tables, ms, 0.1).mean())
                        e2e_vals.append(_end_to_end_sinr_matrix(
                            config, ch, combiners, e2e_ss, p_tx, p_rx,
                            tables).mean())
                    gap = abs(10 * np.log10(np.mean(coef_vals))
                              - 10 * np.log10(np.mean(e2e_vals)))
                    if gap > worst:
                        worst, worst_combo = gap, (pdp_kind, variant, K, N)
    report(7, worst <= 0.5,
           f"coefficient vs end-to-end worst gap {worst:.3f} dB <= 0.5 "
           f"(at {worst_combo})")


def test_criterion_8_correlation_limit():
    M, m, N = 128, 7, 10_000
    pdp = exponential_pdp(0.1, 20)
    ch = draw_channels(pdp, N, 2, seed=31)
    H = frequency_response(ch, m, M)
    same = np.mean(np.conj(H[:, 0])[:, None] * ch.taps[:, 0, :], axis=0)
    cross = np.mean(np.conj(H[:, 0])[:, None] * ch.taps[:, 1, :], axis=0)
    dev_same = np.max(np.abs(same - modulated_pdp(pdp, m, M)))
    dev_cross = np.max(np.abs(cross))
    report(8, dev_same <= 0.05 and dev_cross <= 0.05,
           f"same-user dev {dev_same:.4f}, cross-user dev {dev_cross:.4f} "
           f"(both <= 0.05 at N=10^4)")


def test_criterion_9_pdp_estimation():
    pdp = exponential_pdp(0.1, 40)
    ch = draw_channels(pdp, 400, 10, seed=33)
    err = np.max(np.abs(estimate_pdp(ch).powers - pdp.powers))
    bound = 0.05 * pdp.powers.max()
    report(9, err <= bound,
           f"PDP estimate L-inf error {err:.5f} <= {bound:.5f} (N=400, K=10)")


def test_criterion_10_cli_determinism(tmp_path):
    specs = {
        "sweep": ["sweep", "-M", "64", "-K", "2", "--n-list", "4,8",
                  "--trials", "5", "--pdp-length", "8", "--detectors", "zf",
                  "--subcarrier-samples", "4", "--seed", "5"],
        "design-filter": ["design-filter", "-M", "64", "--pdp-length", "8",
                          "--seed", "5"],
        "estimate-pdp": ["estimate-pdp", "--n-list", "50", "-K", "2",
                         "--pdp-length", "8", "--seed", "5"],
    }
    mismatches = []
    for name, argv in specs.items():
        dirs = [tmp_path / f"{name}-{i}" for i in (0, 1)]
        for d in dirs:
            assert cli_main([*argv, "--out-dir", str(d)]) == 0
        for csv_path in sorted(dirs[0].glob("*.csv")):
            twin = dirs[1] / csv_path.name
            if csv_path.read_bytes() != twin.read_bytes():
                mismatches.append(f"{name}/{csv_path.name}")
    report(10, not mismatches,
           "byte-identical CSVs across repeated runs"
           + (f"; mismatches: {mismatches}" if mismatches else
              f" ({sum(1 for _ in tmp_path.glob('*/*.csv'))} files)"))
