"""Command-line front end: TOML run configs in, reproducible reports out.

Subcommands mirror the figure-level artifacts the library reproduces::

    wdmshift phasematch --config run.toml          # mismatches, poling, temperature
    wdmshift efficiency --config run.toml --out d  # conversion vs pump power sweep
    wdmshift plan       --config run.toml --out d  # pump-pair + power recommendation
    wdmshift noise-fit  --config run.toml --out d  # linear noise-vs-power fit
    wdmshift hom        --config run.toml --out d  # two-photon dip scan + visibility

Every output file starts with a header block echoing the fully resolved
configuration (dotted keys) and the seed, so re-running the same config
reproduces the file byte for byte.  Exit codes: 0 success, 2 bad
configuration or validation failure, 3 infeasible request (the diagnostic
carries the attainable ceiling).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import dispersion as disp
from .coupled import alpha_from_db_per_cm
from .errors import ConfigError, InfeasibleEfficiencyError, WdmShiftError
from .grid import DEFAULT_GRID, OpticalFrequency
from .hom import HomConfig, extract_visibility, simulate_hom_scan
from .noise import NoiseSpectrum, fit_noise_linear
from .planner import (
    CalibrationTargets,
    PumpSearchConstraints,
    calibrate,
    choose_pumps,
    efficiency_curve,
    power_for_max_conversion,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------

def _load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def _section(cfg: dict, name: str) -> dict:
    if name not in cfg:
        raise ConfigError(f"config is missing the [{name}] section")
    return cfg[name]


def _require(sec: dict, key: str, section: str):
    if key not in sec:
        raise ConfigError(f"config is missing '{key}' in [{section}]")
    return sec[key]


def _frequency_from(sec: dict, prefix: str, section: str) -> OpticalFrequency:
    """Resolve <prefix>_channel / <prefix>_thz / <prefix>_nm (exactly one)."""
    keys = [k for k in (f"{prefix}_channel", f"{prefix}_thz", f"{prefix}_nm") if k in sec]
    if len(keys) != 1:
        raise ConfigError(
            f"[{section}] must set exactly one of {prefix}_channel / "
            f"{prefix}_thz / {prefix}_nm"
        )
    key = keys[0]
    value = sec[key]
    if key.endswith("_channel"):
        return DEFAULT_GRID.frequency(int(value))
    if key.endswith("_thz"):
        return OpticalFrequency.from_thz(float(value))
    return OpticalFrequency.from_nm(float(value))


def _resolve_path(value: str, config_path: Path) -> Path:
    p = Path(value)
    return p if p.is_absolute() else config_path.parent / p


def _dispersion_model(cfg: dict, config_path: Path) -> tuple[disp.DispersionModel, dict]:
    """Model from [dispersion]; defaults to the shipped device calibration."""
    sec = cfg.get("dispersion", {})
    if "sellmeier_file" in sec:
        sellmeier = disp.load_sellmeier(_resolve_path(sec["sellmeier_file"], config_path))
    else:
        sellmeier = disp.load_sellmeier()
    if "calibration_file" in sec:
        cal = disp.load_device_calibration(_resolve_path(sec["calibration_file"], config_path))
        offsets = dict(cal.model.mode_offsets)
    elif sec.get("use_device_calibration", True):
        offsets = dict(disp.load_device_calibration().model.mode_offsets)
    else:
        offsets = {}
    offsets.update({k: float(v) for k, v in sec.get("offsets", {}).items()})
    return disp.DispersionModel(sellmeier, offsets), sec


def _geometry(cfg: dict) -> disp.ConversionGeometry:
    sec = _section(cfg, "geometry")
    poling = sec.get("poling_period_um", "auto")
    return disp.ConversionGeometry(
        signal=_frequency_from(sec, "signal", "geometry"),
        target=_frequency_from(sec, "target", "geometry"),
        pump1=_frequency_from(sec, "pump1", "geometry"),
        pump2=_frequency_from(sec, "pump2", "geometry"),
        temperature_c=float(_require(sec, "temperature_c", "geometry")),
        poling_period_um=None if poling == "auto" else float(poling),
        shift_tolerance_ghz=float(sec.get("shift_tolerance_ghz", 0.5)),
    )


def _length_m(cfg: dict) -> float:
    sec = _section(cfg, "waveguide")
    if "length_m" in sec:
        return float(sec["length_m"])
    if "length_cm" in sec:
        return float(sec["length_cm"]) * 1e-2
    raise ConfigError("config is missing 'length_m' or 'length_cm' in [waveguide]")


def _coupling_calibration(cfg: dict):
    sec = _section(cfg, "calibration")
    targets = CalibrationTargets(
        length_m=_length_m(cfg),
        p_total_peak_w=float(_require(sec, "p_total_peak_w", "calibration")),
        eta_theory_max=float(_require(sec, "eta_theory_max", "calibration")),
        balance_tolerance=float(sec.get("balance_tolerance", 0.002)),
    )
    return calibrate(targets)


# ---------------------------------------------------------------------------
# report writing
# ---------------------------------------------------------------------------

def _flatten(cfg: dict, prefix: str = "") -> list[tuple[str, object]]:
    items: list[tuple[str, object]] = []
    for key in sorted(cfg):
        value = cfg[key]
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            items.extend(_flatten(value, prefix=f"{dotted}."))
        else:
            items.append((dotted, value))
    return items


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


def _header_lines(cfg: dict, seed, extra: dict) -> list[str]:
    lines = [f"# config.{k} = {_fmt(v)}" for k, v in _flatten(cfg)]
    lines.append(f"# seed = {seed if seed is not None else 'none'}")
    lines.extend(f"# {k} = {_fmt(v)}" for k, v in extra.items())
    return lines


def _write_report(path: Path, header: list[str], columns: list[str] | None, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("\n".join(header) + "\n")
        if columns is not None:
            fh.write("# columns: " + "\t".join(columns) + "\n")
            for row in rows:
                fh.write("\t".join(_fmt(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_phasematch(cfg: dict, args) -> int:
    model, _ = _dispersion_model(cfg, Path(args.config))
    geom = _geometry(cfg)
    length = _length_m(cfg)

    if geom.poling_period_um is None:
        period = disp.optimal_poling_period(geom, model)
        if period is None:
            raise ConfigError("average mismatch already zero; nothing to pole")
        geom = dataclasses.replace(geom, poling_period_um=period)
    mm = disp.phase_mismatches(geom, model)
    t_match = disp.phase_matching_temperature(geom, model, geom.poling_period_um)

    report = {
        "signal_thz": geom.signal.thz,
        "signal_nm": geom.signal.nm,
        "target_thz": geom.target.thz,
        "target_nm": geom.target.nm,
        "pump1_thz": geom.pump1.thz,
        "pump1_nm": geom.pump1.nm,
        "pump2_thz": geom.pump2.thz,
        "pump2_nm": geom.pump2.nm,
        "sfg_thz": geom.sfg_frequency.thz,
        "sfg_nm": geom.sfg_frequency.nm,
        "temperature_c": geom.temperature_c,
        "length_m": length,
        "poling_period_um": geom.poling_period_um,
        "dk_sfg_rad_per_m": mm.dk_sfg,
        "dk_dfg_rad_per_m": mm.dk_dfg,
        "k_avg_rad_per_m": mm.k_avg,
        "delta_k_rad_per_m": mm.delta_k,
        "delta_k_length_rad": mm.delta_k * length,
        "phase_match_temperature_c": t_match,
    }
    for key, value in report.items():
        print(f"{key} = {_fmt(value)}")
    if args.out:
        header = _header_lines(cfg, args.seed, report)
        _write_report(Path(args.out) / "phasematch.txt", header, None, [])
    return EXIT_OK


def cmd_efficiency(cfg: dict, args) -> int:
    cal = _coupling_calibration(cfg)
    sweep = cfg.get("sweep", {})
    p_min = float(sweep.get("p_min_w", 0.0))
    p_max = float(sweep.get("p_max_w", 2.0))
    points = int(sweep.get("points", 201))
    powers = np.linspace(p_min, p_max, points)

    model_sec = cfg.get("model", {})
    include_loss = bool(model_sec.get("include_loss", False))
    include_wrong_pump = bool(model_sec.get("include_wrong_pump", False))
    loss_alpha = alpha_from_db_per_cm(float(cfg.get("waveguide", {}).get("loss_db_per_cm", 0.0)))
    spurious = None
    if include_wrong_pump:
        from .coupled import SpuriousCoupling

        model, _ = _dispersion_model(cfg, Path(args.config))
        geom = _geometry(cfg)
        if geom.poling_period_um is None:
            geom = dataclasses.replace(
                geom, poling_period_um=disp.optimal_poling_period(geom, model)
            )
        dk1, dk2 = disp.spurious_mismatches(geom, model)
        spurious = SpuriousCoupling(mismatch1=dk1, mismatch2=dk2)

    rows = efficiency_curve(
        cal,
        powers,
        include_loss=include_loss,
        include_wrong_pump=include_wrong_pump,
        loss_alpha=loss_alpha,
        spurious=spurious,
    )
    peak = power_for_max_conversion(cal)
    extra = {
        "delta_k_rad_per_m": cal.delta_k,
        "q_per_watt": cal.q_per_watt,
        "resonance_p_total_w": peak.total_w,
        "resonance_eta": cal.efficiency(peak.total_w),
        "include_loss": include_loss,
        "include_wrong_pump": include_wrong_pump,
    }
    out_dir = Path(args.out) if args.out else Path.cwd()
    path = out_dir / "efficiency.tsv"
    _write_report(path, _header_lines(cfg, args.seed, extra), ["p_total_w", "eta"], rows)
    print(f"wrote {path}")
    print(f"resonance_p_total_w = {_fmt(peak.total_w)}")
    print(f"resonance_eta = {_fmt(extra['resonance_eta'])}")
    return EXIT_OK


def cmd_plan(cfg: dict, args) -> int:
    model, disp_sec = _dispersion_model(cfg, Path(args.config))
    cal = _coupling_calibration(cfg)
    plan_sec = _section(cfg, "plan")
    geom_sec = _section(cfg, "geometry")
    signal = _frequency_from(geom_sec, "signal", "geometry")
    target = _frequency_from(geom_sec, "target", "geometry")

    spectrum_ref = plan_sec.get("noise_spectrum", "builtin")
    if spectrum_ref == "builtin":
        spectrum_path = disp._data_path("illustrative_noise_spectrum.tsv")
    else:
        spectrum_path = _resolve_path(spectrum_ref, Path(args.config))
    noise = NoiseSpectrum.from_file(spectrum_path, unit=plan_sec.get("noise_unit"))

    constraints = PumpSearchConstraints(
        calibration=cal,
        temperature_c=float(_require(_section(cfg, "geometry"), "temperature_c", "geometry")),
        band_thz=(
            float(plan_sec.get("band_min_thz", 190.1)),
            float(plan_sec.get("band_max_thz", 197.2)),
        ),
        grid_step_ghz=float(plan_sec.get("grid_step_ghz", 1.0)),
        weight_noise=float(plan_sec.get("weight_noise", 1.0)),
        weight_mismatch=float(plan_sec.get("weight_mismatch", 1.0)),
    )
    plan = choose_pumps(signal, target, noise, model, constraints)

    requested_eta = plan_sec.get("requested_eta")
    if requested_eta is not None:
        # Power for a specific efficiency is defined by the device calibration;
        # raises (exit 3) when the request exceeds the ceiling.
        powers = power_for_max_conversion(cal, float(requested_eta))
        p1_w, p2_w = powers.p1_w, powers.p2_w
    else:
        p1_w, p2_w = plan.p1_w, plan.p2_w

    report = {
        "signal_thz": plan.signal.thz,
        "target_thz": plan.target.thz,
        "shift_ghz": plan.shift_ghz,
        "pump1_thz": plan.pump1.thz,
        "pump1_nm": plan.pump1.nm,
        "pump2_thz": plan.pump2.thz,
        "pump2_nm": plan.pump2.nm,
        "pump_separation_ghz": plan.pump1.ghz - plan.pump2.ghz,
        "p1_w": p1_w,
        "p2_w": p2_w,
        "p_total_w": p1_w + p2_w,
        "predicted_eta": plan.predicted_eta,
        "predicted_noise_rate_cps": plan.predicted_noise_rate,
        "delta_k_length_rad": plan.delta_k_length,
        "search_noise_rate_min_cps": plan.noise_rate_min,
        "search_noise_rate_max_cps": plan.noise_rate_max,
    }
    for key, value in report.items():
        print(f"{key} = {_fmt(value)}")
    if args.out:
        _write_report(
            Path(args.out) / "plan.txt", _header_lines(cfg, args.seed, report), None, []
        )
    return EXIT_OK


def cmd_noise_fit(cfg: dict, args) -> int:
    sec = _section(cfg, "noise_fit")
    samples_path = _resolve_path(_require(sec, "samples", "noise_fit"), Path(args.config))
    if not Path(samples_path).exists():
        raise ConfigError(f"noise samples file not found: {samples_path}")
    data = np.loadtxt(samples_path, comments="#")
    if data.ndim != 2 or data.shape[1] < 2:
        raise ConfigError(f"expected two columns (power_w, counts_per_s) in {samples_path}")
    model = fit_noise_linear(data[:, 0], data[:, 1])
    extra = {
        "slope_cps_per_w": model.slope_cps_per_w,
        "intercept_cps": model.intercept_cps,
        "residual_rms_cps": float(np.sqrt(np.mean(model.residuals_cps**2))),
    }
    rows = np.column_stack([data[:, 0], data[:, 1], model.residuals_cps])
    out_dir = Path(args.out) if args.out else Path.cwd()
    path = out_dir / "noise_fit.tsv"
    _write_report(
        path,
        _header_lines(cfg, args.seed, extra),
        ["p_total_w", "rate_cps", "residual_cps"],
        rows,
    )
    print(f"wrote {path}")
    for key, value in extra.items():
        print(f"{key} = {_fmt(value)}")
    return EXIT_OK


def cmd_hom(cfg: dict, args) -> int:
    sec = _section(cfg, "hom")
    delays = np.linspace(
        float(sec.get("delay_min_ps", -66.0)),
        float(sec.get("delay_max_ps", 66.0)),
        int(sec.get("delay_points", 67)),
    )
    splitter = sec.get("splitter", [0.5, 0.5])
    hom_cfg = HomConfig(
        splitter=(float(splitter[0]), float(splitter[1])),
        spectral_overlap=float(sec.get("spectral_overlap", 1.0)),
        filter_fwhm_ghz=float(sec.get("filter_fwhm_ghz", 28.6)),
        signal_pair_rate_cps=float(_require(sec, "signal_pair_rate_cps", "hom")),
        noise_floor_cps=float(sec.get("noise_floor_cps", 0.0)),
        delays_ps=delays,
        visibility_override=(
            float(sec["visibility_override"]) if "visibility_override" in sec else None
        ),
    )
    seed = args.seed if args.seed is not None else sec.get("seed")
    rng = None
    if bool(sec.get("poisson", False)):
        if seed is None:
            raise ConfigError("[hom] poisson sampling needs a seed (config or --seed)")
        rng = np.random.default_rng(int(seed))
    scan = simulate_hom_scan(
        hom_cfg, rng=rng, integration_time_s=float(sec.get("integration_time_s", 1.0))
    )
    fit = extract_visibility(scan.delays_ps, scan.rates_cps, hom_cfg.noise_floor_cps)

    extra = {
        "interference_visibility": hom_cfg.interference_visibility,
        "sigma_tau_ps": hom_cfg.sigma_tau_ps,
        "visibility_raw": scan.visibility_raw,
        "visibility_noise_subtracted": scan.visibility_noise_subtracted,
        "fit_visibility_raw": fit.visibility_raw,
        "fit_visibility_noise_subtracted": fit.visibility_noise_subtracted,
        "fit_dip_fwhm_ps": fit.dip_width_fwhm_ps,
        "fit_no_dip": fit.no_dip,
    }
    rows = np.column_stack([scan.delays_ps, scan.rates_cps])
    out_dir = Path(args.out) if args.out else Path.cwd()
    path = out_dir / "hom_scan.tsv"
    _write_report(
        path, _header_lines(cfg, seed, extra), ["delay_ps", "coincidence_rate_cps"], rows
    )
    print(f"wrote {path}")
    for key in (
        "visibility_raw",
        "visibility_noise_subtracted",
        "fit_visibility_raw",
        "fit_visibility_noise_subtracted",
    ):
        print(f"{key} = {_fmt(extra[key])}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "phasematch": cmd_phasematch,
    "efficiency": cmd_efficiency,
    "plan": cmd_plan,
    "noise-fit": cmd_noise_fit,
    "hom": cmd_hom,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wdmshift",
        description="Cascaded chi(2) WDM frequency conversion: design and simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("phasematch", "stage mismatches, poling period and phase-matching temperature"),
        ("efficiency", "conversion efficiency vs total pump power sweep"),
        ("plan", "pump pair and power recommendation for a channel shift"),
        ("noise-fit", "linear fit of noise counts vs pump power"),
        ("hom", "two-photon interference delay scan and visibilities"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        if args.seed is None:
            args.seed = cfg.get("output", {}).get("seed")
        return _COMMANDS[args.command](cfg, args)
    except InfeasibleEfficiencyError as exc:
        print(f"infeasible: {exc} (eta_max = {exc.eta_max!r})", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WdmShiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
