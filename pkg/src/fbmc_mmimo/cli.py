"""Command-line surface: filter design, validation suites, SINR sweeps,
saturation levels and PDP estimation, with reproducible CSV artifacts.

Every run writes a manifest (resolved config + seed + tool version) next to
its outputs; re-running with ``--config manifest.json`` reproduces the CSV
files byte for byte. Exit codes: 0 success, 1 validation failure, 2 usage
or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotic import saturation_sinr
from .channel import (delta_pdp, draw_channels, estimate_pdp,
                      frequency_responses, load_channelset, read_pdp_csv,
                      write_pdp_csv)
from .combining import make_combiner
from .filters import (composite_pulse, design_modified, design_phydyas,
                      design_rectangular, matched_filter, nyquist_error,
                      read_filter_csv, spectrum, write_filter_csv)
from .harness import (ExperimentConfig, coefficient_tables, config_filters,
                      config_pdp, sweep_antennas, _coefficient_sinr_matrix,
                      _end_to_end_sinr_matrix)
from .modem import basis_function, real_inner_product

SEED_ENV_VAR = "FBMC_MMIMO_SEED"
MANIFEST_SCHEMA = "fbmc-manifest-v1"
SINR_SCHEMA = "fbmc-sinr-v1"
SPECTRUM_SCHEMA = "fbmc-spectrum-v1"
VALIDATE_SCHEMA = "fbmc-validate-v1"

_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_LIST_FIELDS = {"antenna_counts", "variants", "detectors"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration plumbing
# ---------------------------------------------------------------------------

def _parse_scalar(text: str):
    text = text.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if text.lower() in ("none", ""):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_file(path) -> dict:
    """Key = value lines; '#' comments; commas make tuples. A manifest JSON
    is accepted too and contributes its embedded config."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        if "config" not in data:
            raise ConfigError(f"manifest {path} has no 'config' entry")
        return dict(data["config"])
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, rhs = line.partition("=")
        key = key.strip()
        if "," in rhs:
            values[key] = tuple(_parse_scalar(v) for v in rhs.split(",") if v.strip())
        else:
            values[key] = _parse_scalar(rhs)
    return values


def _resolve_config(args) -> ExperimentConfig:
    """File values first, then CLI flags (flags win)."""
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for name in _CONFIG_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if values.get("seed") is None:
        env = os.environ.get(SEED_ENV_VAR)
        values["seed"] = int(env) if env else 0
    unknown = set(values) - set(_CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name in _LIST_FIELDS:
        if name in values and isinstance(values[name], str):
            values[name] = tuple(v for v in values[name].split(",") if v)
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _write_manifest(out_dir: Path, subcommand: str, config: ExperimentConfig,
                    artifacts: list) -> Path:
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "subcommand": subcommand,
        "config": dataclasses.asdict(config),
        "seed": config.seed,
        "artifacts": [str(a) for a in artifacts],
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _fmt_db(value) -> str:
    return "" if value is None else f"{value:.4f}"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_design_filter(args) -> int:
    config = _resolve_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pdp = read_pdp_csv(args.pdp_file) if args.pdp_file else config_pdp(config)

    original = design_phydyas(config.num_subcarriers, config.overlap)
    modified = design_modified(original, pdp, grid_size=config.grid_size,
                               regularization=config.regularization)
    sinc_ref = design_rectangular(config.num_subcarriers)

    artifacts = []
    for name, filt in (("prototype_original.csv", original),
                       ("prototype_modified.csv", modified)):
        write_filter_csv(out_dir / name, filt)
        artifacts.append(name)

    grid = config.grid_size or 16 * len(original.taps)
    freqs = (np.arange(grid) - grid // 2) / grid * config.num_subcarriers
    keep = np.abs(freqs) <= 8.0  # a few subcarrier spacings around the peak

    def db_column(filt):
        mag = np.abs(np.fft.fftshift(spectrum(filt, grid).values))
        return 20.0 * np.log10(np.maximum(mag / mag.max(), 1e-30))

    spec_path = out_dir / "spectra.csv"
    with open(spec_path, "w", newline="") as fh:
        fh.write(f"# schema={SPECTRUM_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["freq_subcarriers", "original_db", "modified_db",
                         "sinc_db"])
        for f, o, m, s in zip(freqs[keep], db_column(original)[keep],
                              db_column(modified)[keep], db_column(sinc_ref)[keep]):
            writer.writerow([f"{f:.6f}", _fmt_db(o), _fmt_db(m), _fmt_db(s)])
    artifacts.append("spectra.csv")
    _write_manifest(out_dir, "design-filter", config, artifacts)
    peak_dev = np.max(np.abs(modified.taps.real - np.interp(
        modified.time_axis(), original.time_axis(), original.taps.real)))
    print(f"wrote {', '.join(artifacts)} to {out_dir}")
    print(f"max tap deviation vs original: {peak_dev:.4f} "
          f"({100 * peak_dev / np.max(np.abs(original.taps)):.1f}% of peak)")
    return 0


def _orthogonality_worst(p, anchors, dm_max=4, dn_max=8):
    """(worst cross |<a,a'>_R|, worst self deviation |<a,a>_R - 1|)."""
    p_unit = p
    cross = 0.0
    self_dev = 0.0
    M = p.num_subcarriers
    for m0, n0 in anchors:
        a = basis_function(m0, n0, p_unit)
        self_dev = max(self_dev, abs(real_inner_product(a, a) / p.energy - 1.0))
        for dm in range(-dm_max, dm_max + 1):
            for dn in range(-dn_max, dn_max + 1):
                m1 = m0 + dm
                if (dm, dn) == (0, 0) or not 0 <= m1 < M:
                    continue
                b = basis_function(m1, n0 + dn, p_unit)
                cross = max(cross, abs(real_inner_product(a, b)) / p.energy)
    return cross, self_dev


def cmd_validate(args) -> int:
    config = _resolve_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checks = []

    if args.filter_file:
        p = read_filter_csv(args.filter_file)
    else:
        M = min(config.num_subcarriers, 64)
        p = design_phydyas(M, config.overlap)
    anchors = [(0, 0), (1, 0), (p.num_subcarriers // 2, 1)]
    cross, self_dev = _orthogonality_worst(p, anchors)
    checks.append(("orthogonality_cross_max", cross, 1e-3))
    checks.append(("orthogonality_self_max_dev", self_dev, 1e-3))

    q = composite_pulse(p, matched_filter(p))
    checks.append(("nyquist_error_ideal", nyquist_error(q, p.num_subcarriers),
                   1e-3))

    pdp = config_pdp(config)
    base = design_phydyas(min(config.num_subcarriers, 128), config.overlap)
    ident = design_modified(base, delta_pdp())
    checks.append(("modified_identity_delta",
                   float(np.max(np.abs(ident.taps - base.taps))), 1e-10))
    mod = design_modified(base, pdp)
    before = nyquist_error(composite_pulse(base, matched_filter(base), pdp),
                           base.num_subcarriers)
    after = nyquist_error(composite_pulse(base, matched_filter(mod), pdp),
                          base.num_subcarriers)
    checks.append(("modified_nyquist_ratio_inv", after / before, 1e-2))

    # estimator agreement on a small matched configuration
    for kind in ("delta", "exponential"):
        small = ExperimentConfig(
            num_subcarriers=32, num_users=2, antenna_counts=(8,),
            num_symbols=48, trials=4, snr_db=config.snr_db, pdp_kind=kind,
            pdp_alpha=config.pdp_alpha, pdp_length=8, detectors=("mrc",),
            variants=("original",), estimator="coefficient", seed=config.seed,
            subcarrier_samples=32)
        gap = _estimator_gap(small)
        checks.append((f"estimator_agreement_{kind}_db", gap, 0.5))

    report_path = out_dir / "validate_report.csv"
    with open(report_path, "w", newline="") as fh:
        fh.write(f"# schema={VALIDATE_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["check", "value", "threshold", "status"])
        failed = 0
        for name, value, threshold in checks:
            ok = value <= threshold
            failed += 0 if ok else 1
            writer.writerow([name, f"{value:.6e}", f"{threshold:.6e}",
                             "pass" if ok else "FAIL"])
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {value:.3e} "
                  f"(threshold {threshold:.0e})")
    _write_manifest(out_dir, "validate", config, ["validate_report.csv"])
    print(f"report written to {report_path}")
    return 0 if failed == 0 else 1


def _estimator_gap(config: ExperimentConfig) -> float:
    """|coefficient - end_to_end| averaged-SINR gap in dB."""
    pdp = config_pdp(config)
    p_tx, p_rx = config_filters(config, config.variants[0], pdp)
    tables = coefficient_tables(p_tx, p_rx, pdp, config.dm_max, config.dn_max)
    N = config.antenna_counts[0]
    ms = np.arange(config.num_subcarriers)
    coef_vals, e2e_vals = [], []
    root = np.random.SeedSequence((config.seed, 0x5EED))
    for child in root.spawn(config.trials):
        ch_ss, e2e_ss = child.spawn(2)
        ch = draw_channels(pdp, N, config.num_users, ch_ss)
        H = frequency_responses(ch, ms, config.num_subcarriers)
        combiners = [make_combiner(config.detectors[0], H[j],
                                   config.noise_variance, int(m))
                     for j, m in enumerate(ms)]
        weights = np.stack([c.values for c in combiners])
        coef_vals.append(_coefficient_sinr_matrix(
            ch, weights, tables, ms, config.noise_variance).mean())
        e2e_vals.append(_end_to_end_sinr_matrix(
            config, ch, combiners, e2e_ss, p_tx, p_rx, tables).mean())
    return abs(10 * np.log10(np.mean(coef_vals)) - 10 * np.log10(np.mean(e2e_vals)))


def cmd_sweep(args) -> int:
    config = _resolve_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = sweep_antennas(config)
    path = out_dir / "sinr_sweep.csv"
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={SINR_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["N", "K", "M", "detector", "variant", "snr_db",
                         "sinr_db", "stderr_db", "saturation_db", "seed"])
        for r in records:
            writer.writerow([r.antenna_count, r.num_users, r.num_subcarriers,
                             r.detector, r.variant, _fmt_db(r.snr_db),
                             _fmt_db(r.sinr_db), _fmt_db(r.stderr_db),
                             _fmt_db(r.saturation_db), r.seed])
    _write_manifest(out_dir, "sweep", config, ["sinr_sweep.csv"])
    for r in records:
        print(f"N={r.antenna_count:<5d} {r.detector:>4s}/{r.variant:<9s} "
              f"SINR={r.sinr_db:7.2f} dB  (stderr {r.stderr_db:.2f}, "
              f"{r.wall_time_s:.1f} s)")
    print(f"wrote {path}")
    return 0


def cmd_saturation(args) -> int:
    config = _resolve_config(args)
    pdp = config_pdp(config)
    window = (config.dm_max, config.dn_max or 2 * config.overlap + 2)
    for variant in config.variants:
        p_tx, p_rx = config_filters(config, variant, pdp)
        value = saturation_sinr(p_tx, p_rx, pdp, window=window)
        print(f"saturation_sinr_db[{variant}]={value:.4f}")
    return 0


def cmd_estimate_pdp(args) -> int:
    config = _resolve_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = []
    if args.channel_file:
        ch = load_channelset(args.channel_file)
        truth = None
    else:
        truth = config_pdp(config)
        ch = draw_channels(truth, config.antenna_counts[0], config.num_users,
                           config.seed)
    estimate = estimate_pdp(ch)
    write_pdp_csv(out_dir / "pdp_estimate.csv", estimate)
    artifacts.append("pdp_estimate.csv")
    if truth is not None:
        write_pdp_csv(out_dir / "pdp_true.csv", truth)
        artifacts.append("pdp_true.csv")
        err = np.max(np.abs(estimate.powers - truth.powers))
        print(f"max abs estimation error: {err:.5f} "
              f"({err / truth.powers.max():.3%} of peak)")
    _write_manifest(out_dir, "estimate-pdp", config, artifacts)
    print(f"wrote {', '.join(artifacts)} to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file or a manifest.json")
    parser.add_argument("--out-dir", default=".", help="artifact directory")
    parser.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default ${SEED_ENV_VAR} or 0)")
    parser.add_argument("--num-subcarriers", "-M", dest="num_subcarriers",
                        type=int, default=None)
    parser.add_argument("--num-users", "-K", dest="num_users", type=int,
                        default=None)
    parser.add_argument("--n-list", dest="antenna_counts",
                        type=lambda s: tuple(int(v) for v in s.split(",")),
                        default=None, help="comma-separated antenna counts")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--num-symbols", type=int, default=None)
    parser.add_argument("--snr-db", dest="snr_db", type=float, default=None)
    parser.add_argument("--pdp-kind", dest="pdp_kind",
                        choices=("exponential", "delta"), default=None)
    parser.add_argument("--pdp-alpha", dest="pdp_alpha", type=float, default=None)
    parser.add_argument("--pdp-length", dest="pdp_length", type=int, default=None)
    parser.add_argument("--detectors", type=lambda s: tuple(s.split(",")),
                        default=None, help="comma-separated: mrc,zf,mmse")
    parser.add_argument("--variants", type=lambda s: tuple(s.split(",")),
                        default=None, help="comma-separated: original,modified")
    parser.add_argument("--estimator", choices=("coefficient", "end_to_end"),
                        default=None)
    parser.add_argument("--subcarrier-samples", dest="subcarrier_samples",
                        type=int, default=None)
    parser.add_argument("--with-ofdm-baseline", dest="include_ofdm_baseline",
                        action="store_const", const=True, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbmc-mmimo",
        description="FBMC/OQAM massive-MIMO uplink link-level simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("design-filter",
                       help="write original and PDP-compensated prototype "
                            "filters plus their spectra")
    _add_config_flags(p)
    p.add_argument("--pdp-file", help="PDP CSV overriding the config PDP")
    p.set_defaults(func=cmd_design_filter)

    p = sub.add_parser("validate",
                       help="run orthogonality, Nyquist and estimator"
                            "-agreement suites")
    _add_config_flags(p)
    p.add_argument("--filter-file", help="check an imported filter CSV")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="Monte Carlo SINR vs antenna count")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("saturation",
                       help="print the large-array SINR ceiling for a config")
    _add_config_flags(p)
    p.set_defaults(func=cmd_saturation)

    p = sub.add_parser("estimate-pdp",
                       help="estimate a PDP from channel realizations")
    _add_config_flags(p)
    p.add_argument("--channel-file", help="binary ChannelSet dump to estimate from")
    p.set_defaults(func=cmd_estimate_pdp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
