import dataclasses
import math

import numpy as np
import pytest

from wdmshift.dispersion import (
    ConversionGeometry,
    DispersionModel,
    PhaseMismatchSet,
    SellmeierTemperatureModel,
    fit_signal_index_offset,
    load_device_calibration,
    load_sellmeier,
    optimal_poling_period,
    phase_matching_temperature,
    phase_mismatches,
    refractive_index,
    spurious_mismatches,
    wavevector,
)
from wdmshift.errors import GeometryError, NoSolutionError, WavelengthRangeError
from wdmshift.grid import DEFAULT_GRID, OpticalFrequency

# Golden values: direct evaluation of the shipped coefficient polynomial,
# computed independently of the package code paths and frozen here.
GOLDEN_INDEX = [
    (1550.0, 122.5, 2.142131764069563),
    (768.7, 122.5, 2.1845410923580166),
    (1537.4, 122.5, 2.1424997067815856),
]

# First-branch conversion ceiling of 0.896 pins |delta_k|*L to this value.
DKL_TARGET = 2.0 * math.pi * math.sqrt(1.0 - math.sqrt(0.896))


def _constant_index_model(n: float) -> DispersionModel:
    """Synthetic dispersionless coefficient set with index exactly n."""
    sellmeier = SellmeierTemperatureModel(
        name=f"constant n={n}",
        a=(n**2, 0.0, 0.1, 0.0, 11.0, 0.0),
        b=(0.0, 0.0, 0.0, 0.0),
        t_ref_c=24.5,
        t_sum_c=570.82,
        wavelength_range_um=(0.1, 10.0),
    )
    return DispersionModel(sellmeier)


def reference_geometry(temperature_c=122.5, poling_period_um=None) -> ConversionGeometry:
    return ConversionGeometry(
        signal=DEFAULT_GRID.frequency(48),
        target=DEFAULT_GRID.frequency(52),
        pump1=OpticalFrequency.from_nm(1550.28),
        pump2=OpticalFrequency.from_nm(1553.49),
        temperature_c=temperature_c,
        poling_period_um=poling_period_um,
    )


@pytest.mark.parametrize("nm,t_c,expected", GOLDEN_INDEX)
def test_refractive_index_golden_values(bulk_model, nm, t_c, expected):
    assert refractive_index(nm, t_c, bulk_model) == pytest.approx(expected, abs=1e-9)


def test_zero_offset_equals_bulk(bulk_model):
    with_zero = bulk_model.with_offset("signal", 0.0)
    n_bulk = refractive_index(1550.0, 122.5, bulk_model, mode="signal")
    n_zero = refractive_index(1550.0, 122.5, with_zero, mode="signal")
    assert n_bulk == n_zero


def test_offset_applies_only_to_its_mode(bulk_model):
    shifted = bulk_model.with_offset("signal", 1e-4)
    assert refractive_index(1550.0, 122.5, shifted, mode="signal") == pytest.approx(
        refractive_index(1550.0, 122.5, bulk_model) + 1e-4, abs=1e-15
    )
    assert refractive_index(1550.0, 122.5, shifted, mode="target") == refractive_index(
        1550.0, 122.5, bulk_model
    )


def test_unknown_mode_role_rejected(bulk_model):
    with pytest.raises(ValueError):
        bulk_model.with_offset("weird", 1e-4)


def test_index_above_one_over_validity_range(bulk_model):
    lam = np.linspace(350.0, 5000.0, 200)
    for t_c in (20.0, 122.5, 200.0):
        n = refractive_index(lam, t_c, bulk_model)
        assert np.all(n > 1.0)


def test_no_extrapolation_outside_range(bulk_model):
    with pytest.raises(WavelengthRangeError):
        refractive_index(200.0, 122.5, bulk_model)
    with pytest.raises(WavelengthRangeError):
        refractive_index(6000.0, 122.5, bulk_model)
    with pytest.raises(WavelengthRangeError):
        wavevector(OpticalFrequency.from_nm(200.0), 122.5, bulk_model)


def test_wavevector_definition(bulk_model):
    f = OpticalFrequency.from_nm(1550.0)
    n = refractive_index(1550.0, 122.5, bulk_model)
    lam_m = 1550.0e-9
    assert wavevector(f, 122.5, bulk_model) == pytest.approx(2 * math.pi * n / lam_m, rel=1e-12)


def test_wavevector_linear_in_index():
    # n = 2 everywhere gives k = 4 pi / lambda; doubling n doubles k.
    f = OpticalFrequency.from_nm(1550.0)
    k2 = wavevector(f, 50.0, _constant_index_model(2.0))
    k4 = wavevector(f, 50.0, _constant_index_model(4.0))
    assert k2 == pytest.approx(4 * math.pi / 1550.0e-9, rel=1e-12)
    assert k4 == pytest.approx(2 * k2, rel=1e-12)


def test_wavevector_strictly_increasing_with_frequency(bulk_model):
    thz = np.linspace(185.0, 200.0, 400)
    k = wavevector(thz, 122.5, bulk_model)
    assert np.all(np.diff(k) > 0.0)


def test_geometry_energy_conservation_enforced():
    with pytest.raises(GeometryError):
        ConversionGeometry(
            signal=DEFAULT_GRID.frequency(48),
            target=DEFAULT_GRID.frequency(52),
            pump1=OpticalFrequency.from_thz(193.4),
            pump2=OpticalFrequency.from_thz(192.9),  # 500 GHz, shift is 400
            temperature_c=122.5,
        )


def test_geometry_realized_target_close_to_nominal():
    geom = reference_geometry()
    assert abs(geom.realized_target.ghz - geom.target.ghz) <= 0.5
    assert geom.sfg_frequency.ghz == geom.signal.ghz + geom.pump1.ghz


def test_calibrated_reference_mismatch(device):
    mm = phase_mismatches(device.geometry, device.model)
    assert abs(mm.delta_k) * device.length_m == pytest.approx(DKL_TARGET, abs=1e-6)
    # poled average mismatch is nulled at the reference temperature
    assert abs(mm.k_avg) * device.length_m < 1e-9
    assert mm.delta_k * device.length_m == pytest.approx(device.delta_k_length_rad, abs=1e-9)


def test_mismatch_invariants_by_construction(device):
    mm = phase_mismatches(device.geometry, device.model)
    assert mm.k_avg == (mm.dk_dfg + mm.dk_sfg) / 2.0
    assert mm.delta_k == mm.dk_dfg - mm.dk_sfg
    with pytest.raises(ValueError):
        PhaseMismatchSet(dk_sfg=1.0, dk_dfg=2.0, k_avg=0.0, delta_k=1.0)


def test_degenerate_geometry_has_zero_delta(bulk_model):
    f = DEFAULT_GRID.frequency(50)
    geom = ConversionGeometry(
        signal=f, target=f, pump1=f, pump2=f, temperature_c=122.5
    )
    mm = phase_mismatches(geom, bulk_model)
    assert mm.delta_k == 0.0
    assert mm.dk_sfg == mm.dk_dfg


def test_swapping_stages_negates_delta_and_preserves_avg(bulk_model):
    # grid-exact pumps so the swapped geometry is also exactly consistent
    geom = ConversionGeometry(
        signal=DEFAULT_GRID.frequency(48),
        target=DEFAULT_GRID.frequency(52),
        pump1=DEFAULT_GRID.frequency(40),
        pump2=DEFAULT_GRID.frequency(36),
        temperature_c=122.5,
    )
    swapped = ConversionGeometry(
        signal=geom.target,
        target=geom.signal,
        pump1=geom.pump2,
        pump2=geom.pump1,
        temperature_c=122.5,
    )
    mm = phase_mismatches(geom, bulk_model)
    mm_swapped = phase_mismatches(swapped, bulk_model)
    assert mm_swapped.delta_k == pytest.approx(-mm.delta_k, rel=1e-12)
    assert mm_swapped.k_avg == pytest.approx(mm.k_avg, rel=1e-12)


def test_delta_invariant_under_poling_period(bulk_model):
    geom = reference_geometry()
    base = phase_mismatches(geom, bulk_model).delta_k
    rng = np.random.default_rng(7)
    # realistic grating range: stage terms stay within the exact-cancellation
    # regime of floating-point subtraction, so invariance is bit-exact
    for period in rng.uniform(12.0, 30.0, 25):
        mm = phase_mismatches(dataclasses.replace(geom, poling_period_um=period), bulk_model)
        assert mm.delta_k == base
    # wildly off gratings still cancel to rounding noise
    for period in (1.0, 3.0, 300.0, 5000.0):
        mm = phase_mismatches(dataclasses.replace(geom, poling_period_um=period), bulk_model)
        assert mm.delta_k == pytest.approx(base, rel=1e-9)


def test_delta_grows_monotonically_with_shift(bulk_model):
    # photon pair and pump pair both symmetric about fixed midpoints
    photon_mid = 195.0
    pump_mid = 193.2
    deltas = []
    for shift_thz in (0.0, 0.1, 0.2, 0.4):
        geom = ConversionGeometry(
            signal=OpticalFrequency.from_thz(photon_mid - shift_thz / 2),
            target=OpticalFrequency.from_thz(photon_mid + shift_thz / 2),
            pump1=OpticalFrequency.from_thz(pump_mid + shift_thz / 2),
            pump2=OpticalFrequency.from_thz(pump_mid - shift_thz / 2),
            temperature_c=122.5,
        )
        deltas.append(abs(phase_mismatches(geom, bulk_model).delta_k))
    assert deltas[0] == 0.0
    assert deltas[0] < deltas[1] < deltas[2] < deltas[3]


def test_outputs_are_deterministic(device):
    a = phase_mismatches(device.geometry, device.model)
    b = phase_mismatches(device.geometry, device.model)
    assert a == b


def test_optimal_poling_nulls_average(bulk_model):
    geom = reference_geometry()
    period = optimal_poling_period(geom, bulk_model)
    mm = phase_mismatches(dataclasses.replace(geom, poling_period_um=period), bulk_model)
    assert abs(mm.k_avg) * 0.038 < 1e-9


def test_optimal_poling_no_poling_marker():
    # dispersionless medium: k is linear in frequency, so both stages are
    # exactly matched already and no grating is needed
    f = DEFAULT_GRID.frequency(50)
    geom = ConversionGeometry(signal=f, target=f, pump1=f, pump2=f, temperature_c=50.0)
    assert optimal_poling_period(geom, _constant_index_model(2.2)) is None


def test_degenerate_doubling_period_matches_textbook_formula(bulk_model):
    # frequency doubling of channel 50: period = lambda / (2 (n(lambda/2) - n(lambda)))
    f = DEFAULT_GRID.frequency(50)
    geom = ConversionGeometry(signal=f, target=f, pump1=f, pump2=f, temperature_c=122.5)
    period = optimal_poling_period(geom, bulk_model)

    # independent oracle: evaluate the published polynomial directly
    def n_e(lam_um, t_c):
        a = (5.35583, 0.100473, 0.20692, 100.0, 11.34927, 0.015334)
        b = (4.629e-7, 3.862e-8, -0.89e-8, 2.657e-5)
        ff = (t_c - 24.5) * (t_c + 570.82)
        return math.sqrt(
            a[0] + b[0] * ff
            + (a[1] + b[1] * ff) / (lam_um**2 - (a[2] + b[2] * ff) ** 2)
            + (a[3] + b[3] * ff) / (lam_um**2 - a[4] ** 2)
            - a[5] * lam_um**2
        )

    lam_um = f.nm * 1e-3
    expected_um = lam_um / (2.0 * (n_e(lam_um / 2.0, 122.5) - n_e(lam_um, 122.5)))
    assert period == pytest.approx(expected_um, rel=1e-9)


def test_poling_period_slope_matches_analytic(bulk_model):
    # d(period)/dT from a symbolic derivative of the same coefficient set
    sympy = pytest.importorskip("sympy")
    geom = reference_geometry()
    freqs = [
        geom.signal.hz,
        geom.realized_target.hz,
        geom.pump1.hz,
        geom.pump2.hz,
        geom.sfg_frequency.hz,
    ]
    c = 299792458.0
    lams_um = [c / f * 1e6 for f in freqs]

    T = sympy.symbols("T")
    sm = bulk_model.sellmeier
    a, b = sm.a, sm.b
    ff = (T - sm.t_ref_c) * (T + sm.t_sum_c)

    def n_sym(lam_um):
        return sympy.sqrt(
            a[0] + b[0] * ff
            + (a[1] + b[1] * ff) / (lam_um**2 - (a[2] + b[2] * ff) ** 2)
            + (a[3] + b[3] * ff) / (lam_um**2 - a[4] ** 2)
            - a[5] * lam_um**2
        )

    def k_sym(lam_um):
        return 2 * sympy.pi * n_sym(lam_um) / (lam_um * 1e-6)

    k_avg = k_sym(lams_um[4]) - (
        k_sym(lams_um[0]) + k_sym(lams_um[1]) + k_sym(lams_um[2]) + k_sym(lams_um[3])
    ) / 2
    period_um = 2 * sympy.pi / k_avg * 1e6
    analytic = float(sympy.diff(period_um, T).evalf(subs={T: 122.5}))

    h = 0.5
    lo = optimal_poling_period(dataclasses.replace(geom, temperature_c=122.5 - h), bulk_model)
    hi = optimal_poling_period(dataclasses.replace(geom, temperature_c=122.5 + h), bulk_model)
    finite_difference = (hi - lo) / (2 * h)
    assert finite_difference == pytest.approx(analytic, rel=0.01)


@pytest.mark.parametrize("t0", [80.0, 122.5, 160.0])
def test_phase_matching_temperature_round_trip(bulk_model, t0):
    geom = reference_geometry(temperature_c=t0)
    period = optimal_poling_period(geom, bulk_model)
    t_found = phase_matching_temperature(geom, bulk_model, period)
    assert t_found == pytest.approx(t0, abs=0.01)


def test_phase_matching_temperature_shifts_monotonically_with_period(bulk_model):
    geom = reference_geometry()
    period = optimal_poling_period(geom, bulk_model)
    t_mid = phase_matching_temperature(geom, bulk_model, period)
    t_up = phase_matching_temperature(geom, bulk_model, period * 1.001)
    t_dn = phase_matching_temperature(geom, bulk_model, period * 0.999)
    assert t_dn > t_mid > t_up  # longer period -> lower matching temperature here


def test_phase_matching_temperature_no_solution(bulk_model):
    geom = reference_geometry()
    period = optimal_poling_period(geom, bulk_model)
    with pytest.raises(NoSolutionError):
        phase_matching_temperature(geom, bulk_model, period * 1.05)


def test_calibrated_device_phase_matches_at_reference(device):
    t_found = phase_matching_temperature(
        device.geometry, device.model, device.geometry.poling_period_um
    )
    assert t_found == pytest.approx(122.5, abs=0.1)


def test_spurious_mismatches_far_detuned_for_reference(device):
    dk1, dk2 = spurious_mismatches(device.geometry, device.model)
    mm = phase_mismatches(device.geometry, device.model)
    # wrong-pump channels sit deep in the rapid-phase regime (|dk*L| >> 1,
    # ~29 rad for this geometry) and far above the residual mismatch
    assert abs(dk1) > 10 * abs(mm.delta_k)
    assert abs(dk2) > 10 * abs(mm.delta_k)
    assert abs(dk1 * device.length_m) > 20.0
    assert abs(dk2 * device.length_m) > 20.0
    # opposite signs: one parasitic channel sits above, one below the sum
    assert dk1 * dk2 < 0.0


def test_fit_signal_index_offset_round_trip(bulk_model, device):
    geom = reference_geometry()
    target_delta = device.delta_k_length_rad / device.length_m
    offset = fit_signal_index_offset(geom, bulk_model, target_delta)
    assert offset == pytest.approx(device.model.mode_offsets["signal"], rel=1e-9)
    refit = phase_mismatches(geom, bulk_model.with_offset("signal", offset), )
    assert refit.delta_k == pytest.approx(target_delta, rel=1e-12)


def test_missing_coefficient_file_names_path(tmp_path):
    missing = tmp_path / "nope.toml"
    with pytest.raises(FileNotFoundError, match="nope.toml"):
        load_sellmeier(missing)
    with pytest.raises(FileNotFoundError, match="nope.toml"):
        load_device_calibration(missing)


def test_shipped_calibration_is_consistent(device):
    assert device.length_m == 0.038
    assert device.conversion_ceiling == 0.896
    assert device.phase_match_temperature_c == 122.5
    ceiling = (1.0 - device.delta_k_length_rad**2 / (4.0 * math.pi**2)) ** 2
    assert ceiling == pytest.approx(0.896, abs=1e-9)
