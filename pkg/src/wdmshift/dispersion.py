"""Temperature-dependent dispersion of the nonlinear waveguide.

The bulk medium is congruent lithium niobate; the extraordinary index is
evaluated from a temperature-dependent Sellmeier coefficient set shipped as
a data file (Jundt 1997 by default, user-replaceable).  A guided mode in a
proton-exchanged waveguide does not see exactly the bulk index, so the
model carries small additive per-mode effective-index offsets (default 0)
that act as calibration knobs.  The shipped calibration file pins these so
that the reference channel-48-to-52 conversion geometry phase-matches at
122.5 C with a residual stage-mismatch difference |delta_k|*L = 1.4523 rad
over the 3.8 cm device.

A cascaded conversion involves two concurrent three-wave processes in one
waveguide: the signal is summed with pump 1 up to an intermediate sum
frequency, which pump 2 brings back down to the target.  Each stage has a
wavevector mismatch::

    dk_up   = k_sum - k_signal - k_pump1 - 2*pi/poling_period
    dk_down = k_sum - k_target - k_pump2 - 2*pi/poling_period

Periodic poling can cancel only one linear combination of the two; the
best choice compensates their average ``k_avg = (dk_down + dk_up)/2``,
while the difference ``delta_k = dk_down - dk_up`` is immune to poling and
sets the conversion ceiling (see :mod:`wdmshift.coupled`).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy.optimize import bisect

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import GeometryError, NoSolutionError, WavelengthRangeError
from .grid import C_VACUUM, OpticalFrequency, WavelengthVacuum

TWO_PI = 2.0 * math.pi

# Mode roles recognised by the per-mode index offsets.
MODE_ROLES = ("signal", "sfg", "target", "pump1", "pump2", "spurious1", "spurious2")


@dataclass(frozen=True)
class SellmeierTemperatureModel:
    """A temperature-dependent Sellmeier coefficient set.

    The functional form is the one commonly used for lithium niobate
    (lambda in micrometres, T in degrees Celsius)::

        n^2 = a1 + b1*f + (a2 + b2*f) / (L^2 - (a3 + b3*f)^2)
              + (a4 + b4*f) / (L^2 - a5^2) - a6 * L^2
        f   = (T - t_ref_c) * (T + t_sum_c)

    Coefficient sets are shipped as TOML files with a provenance comment
    block; see ``data/linbo3_ne_jundt1997.toml``.
    """

    name: str
    a: tuple[float, float, float, float, float, float]
    b: tuple[float, float, float, float]
    t_ref_c: float
    t_sum_c: float
    wavelength_range_um: tuple[float, float]

    @classmethod
    def from_toml(cls, path: str | Path) -> "SellmeierTemperatureModel":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Sellmeier coefficient file not found: {path}")
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        return cls(
            name=raw["name"],
            a=tuple(float(x) for x in raw["a"]),
            b=tuple(float(x) for x in raw["b"]),
            t_ref_c=float(raw["t_ref_c"]),
            t_sum_c=float(raw["t_sum_c"]),
            wavelength_range_um=tuple(float(x) for x in raw["wavelength_range_um"]),
        )

    def index(self, wavelength_um, temperature_c: float):
        """n(lambda, T); accepts scalar or ndarray wavelengths [um].

        Raises :class:`WavelengthRangeError` outside the validity range;
        there is deliberately no extrapolation.
        """
        lam = np.asarray(wavelength_um, dtype=float)
        lo, hi = self.wavelength_range_um
        if np.any(lam < lo) or np.any(lam > hi):
            raise WavelengthRangeError(
                f"wavelength outside validity range [{lo}, {hi}] um "
                f"of coefficient set '{self.name}'"
            )
        a1, a2, a3, a4, a5, a6 = self.a
        b1, b2, b3, b4 = self.b
        f = (temperature_c - self.t_ref_c) * (temperature_c + self.t_sum_c)
        lam2 = lam**2
        n2 = (
            a1
            + b1 * f
            + (a2 + b2 * f) / (lam2 - (a3 + b3 * f) ** 2)
            + (a4 + b4 * f) / (lam2 - a5**2)
            - a6 * lam2
        )
        n = np.sqrt(n2)
        return float(n) if np.isscalar(wavelength_um) else n


def _data_path(filename: str) -> Path:
    return Path(resources.files("wdmshift.data").joinpath(filename))


def load_sellmeier(path: str | Path | None = None) -> SellmeierTemperatureModel:
    """Load a coefficient set; defaults to the shipped congruent LiNbO3 n_e."""
    if path is None:
        path = _data_path("linbo3_ne_jundt1997.toml")
    return SellmeierTemperatureModel.from_toml(path)


@dataclass(frozen=True)
class DispersionModel:
    """Bulk Sellmeier model plus per-mode effective-index offsets.

    ``mode_offsets`` maps a mode role (one of :data:`MODE_ROLES`) to an
    additive index correction; missing roles default to 0, i.e. the bulk
    index.  The model is immutable after construction and safe to share
    across threads in parameter sweeps.
    """

    sellmeier: SellmeierTemperatureModel
    mode_offsets: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for role in self.mode_offsets:
            if role not in MODE_ROLES:
                raise ValueError(f"unknown mode role {role!r}; expected one of {MODE_ROLES}")
        object.__setattr__(self, "mode_offsets", MappingProxyType(dict(self.mode_offsets)))

    def offset(self, mode: str | None) -> float:
        if mode is None:
            return 0.0
        return self.mode_offsets.get(mode, 0.0)

    def with_offset(self, mode: str, value: float) -> "DispersionModel":
        offs = dict(self.mode_offsets)
        offs[mode] = value
        return DispersionModel(self.sellmeier, offs)


def refractive_index(
    wavelength: WavelengthVacuum | float,
    temperature_c: float,
    model: DispersionModel,
    mode: str | None = None,
):
    """Effective index n(lambda, T) + per-mode offset.

    ``wavelength`` is a :class:`WavelengthVacuum` or a bare value in nm
    (scalar or ndarray).
    """
    nm = wavelength.nm if isinstance(wavelength, WavelengthVacuum) else wavelength
    n = model.sellmeier.index(np.asarray(nm, dtype=float) * 1e-3, temperature_c)
    n = n + model.offset(mode)
    return float(n) if np.isscalar(nm) else n


def wavevector(
    frequency: OpticalFrequency | float,
    temperature_c: float,
    model: DispersionModel,
    mode: str | None = None,
):
    """Propagation constant k = 2*pi*n/lambda [rad/m].

    ``frequency`` is an :class:`OpticalFrequency` or a bare value in THz
    (scalar or ndarray).
    """
    thz = frequency.thz if isinstance(frequency, OpticalFrequency) else frequency
    lam_m = C_VACUUM / (np.asarray(thz, dtype=float) * 1e12)
    n = model.sellmeier.index(lam_m * 1e6, temperature_c) + model.offset(mode)
    k = TWO_PI * n / lam_m
    return float(k) if np.isscalar(thz) else k


@dataclass(frozen=True)
class ConversionGeometry:
    """The four external frequencies of a cascaded conversion, plus device state.

    Energy conservation ties the intermediate sum frequency to both stages:
    it is ``signal + pump1`` exactly, and the down-conversion stage then
    delivers light at ``signal + pump1 - pump2``.  The nominal ``target`` is
    allowed to differ from that realized frequency by at most
    ``shift_tolerance_ghz`` (pump wavelengths quoted to 0.01 nm land within
    ~0.5 GHz of a grid-exact shift); all wavevector evaluations use the
    realized frequency.

    ``poling_period_um = None`` means "no poling term" in the mismatches,
    which is also how the optimal period is computed (auto mode).
    """

    signal: OpticalFrequency
    target: OpticalFrequency
    pump1: OpticalFrequency
    pump2: OpticalFrequency
    temperature_c: float
    poling_period_um: float | None = None
    shift_tolerance_ghz: float = 0.5

    def __post_init__(self):
        dev = abs((self.target.ghz - self.signal.ghz) - (self.pump1.ghz - self.pump2.ghz))
        if dev > self.shift_tolerance_ghz:
            raise GeometryError(
                "pump separation does not match the requested signal-to-target "
                f"shift: off by {dev:.3f} GHz (tolerance {self.shift_tolerance_ghz} GHz)"
            )

    @property
    def sfg_frequency(self) -> OpticalFrequency:
        """Intermediate sum frequency, signal + pump1."""
        return OpticalFrequency(self.signal.ghz + self.pump1.ghz)

    @property
    def realized_target(self) -> OpticalFrequency:
        """Where stage two actually delivers: signal + pump1 - pump2."""
        return OpticalFrequency(self.signal.ghz + self.pump1.ghz - self.pump2.ghz)

    @property
    def shift_ghz(self) -> float:
        return self.target.ghz - self.signal.ghz


@dataclass(frozen=True)
class PhaseMismatchSet:
    """Stage mismatches of a cascaded conversion and their invariant combinations.

    ``k_avg`` is the poling-compensable average, ``delta_k`` the
    poling-immune difference; both are fixed by the stage values at
    construction so the defining relations hold exactly.
    """

    dk_sfg: float  # [rad/m] up-conversion stage
    dk_dfg: float  # [rad/m] down-conversion stage
    k_avg: float  # [rad/m] (dk_dfg + dk_sfg) / 2
    delta_k: float  # [rad/m] dk_dfg - dk_sfg
    poling_period_um: float | None = None

    def __post_init__(self):
        if self.k_avg != (self.dk_dfg + self.dk_sfg) / 2.0:
            raise ValueError("k_avg must equal (dk_dfg + dk_sfg)/2; use a constructor")
        if self.delta_k != self.dk_dfg - self.dk_sfg:
            raise ValueError("delta_k must equal dk_dfg - dk_sfg; use a constructor")

    @classmethod
    def from_stages(
        cls, dk_sfg: float, dk_dfg: float, poling_period_um: float | None = None
    ) -> "PhaseMismatchSet":
        return cls(
            dk_sfg=dk_sfg,
            dk_dfg=dk_dfg,
            k_avg=(dk_dfg + dk_sfg) / 2.0,
            delta_k=dk_dfg - dk_sfg,
            poling_period_um=poling_period_um,
        )

    @classmethod
    def from_avg_diff(
        cls, k_avg: float, delta_k: float, poling_period_um: float | None = None
    ) -> "PhaseMismatchSet":
        """Build directly from the average and difference (theory work)."""
        dk_sfg = k_avg - delta_k / 2.0
        dk_dfg = k_avg + delta_k / 2.0
        return cls(
            dk_sfg=dk_sfg,
            dk_dfg=dk_dfg,
            k_avg=(dk_dfg + dk_sfg) / 2.0,
            delta_k=dk_dfg - dk_sfg,
            poling_period_um=poling_period_um,
        )


def _stage_wavevectors(geom: ConversionGeometry, model: DispersionModel):
    T = geom.temperature_c
    k_s = wavevector(geom.signal, T, model, mode="signal")
    k_t = wavevector(geom.realized_target, T, model, mode="target")
    k_p1 = wavevector(geom.pump1, T, model, mode="pump1")
    k_p2 = wavevector(geom.pump2, T, model, mode="pump2")
    k_sfg = wavevector(geom.sfg_frequency, T, model, mode="sfg")
    return k_s, k_t, k_p1, k_p2, k_sfg


def phase_mismatches(geom: ConversionGeometry, model: DispersionModel) -> PhaseMismatchSet:
    """Both stage mismatches for a geometry, including the poling term if set."""
    k_s, k_t, k_p1, k_p2, k_sfg = _stage_wavevectors(geom, model)
    grating = 0.0
    if geom.poling_period_um is not None:
        grating = TWO_PI / (geom.poling_period_um * 1e-6)
    dk_sfg = k_sfg - k_s - k_p1 - grating
    dk_dfg = k_sfg - k_t - k_p2 - grating
    return PhaseMismatchSet.from_stages(dk_sfg, dk_dfg, geom.poling_period_um)


def optimal_poling_period(geom: ConversionGeometry, model: DispersionModel) -> float | None:
    """First-order poling period [um] that nulls the average mismatch.

    Returns ``None`` when the unpoled average is already zero (no poling
    needed).  The sign of the returned period follows the sign of the
    average mismatch: a negative value just means the grating vector points
    the other way; its magnitude is the physical period.
    """
    unpoled = dataclasses.replace(geom, poling_period_um=None)
    k_avg = phase_mismatches(unpoled, model).k_avg
    if k_avg == 0.0:
        return None
    return TWO_PI / k_avg * 1e6


def phase_matching_temperature(
    geom: ConversionGeometry,
    model: DispersionModel,
    poling_period_um: float,
    search_range_c: tuple[float, float] = (20.0, 200.0),
    k_tolerance: float = 1e-3,
) -> float:
    """Temperature [C] at which the poled average mismatch crosses zero.

    Bracketed bisection over ``search_range_c``; the residual |k_avg| at the
    solution is verified against ``k_tolerance`` [rad/m].  Raises
    :class:`NoSolutionError` when the average mismatch does not change sign
    in the interval.
    """

    def k_avg_at(T: float) -> float:
        g = dataclasses.replace(geom, temperature_c=T, poling_period_um=poling_period_um)
        return phase_mismatches(g, model).k_avg

    lo, hi = search_range_c
    f_lo, f_hi = k_avg_at(lo), k_avg_at(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise NoSolutionError(
            f"average mismatch does not change sign on [{lo}, {hi}] C "
            f"(k_avg = {f_lo:.3g} and {f_hi:.3g} rad/m)"
        )
    # xtol well below the 0.001 C reporting resolution so the |k_avg|
    # post-condition is met (dK/dT is tens of rad/m per C here).
    t_star = bisect(k_avg_at, lo, hi, xtol=1e-7)
    residual = abs(k_avg_at(t_star))
    if residual > k_tolerance:
        raise NoSolutionError(
            f"bisection converged to T = {t_star:.4f} C but |k_avg| = "
            f"{residual:.3g} rad/m exceeds {k_tolerance} rad/m"
        )
    return float(t_star)


def spurious_mismatches(
    geom: ConversionGeometry, model: DispersionModel
) -> tuple[float, float]:
    """Mismatches of the two wrong-pump sum-frequency channels [rad/m].

    The signal can also sum with pump 2 (landing at signal + pump2) and the
    target with pump 1 (landing at target + pump1).  Both parasitic stages
    see the same poling grating as the intended ones.  Returned as
    ``(signal + pump2 channel, target + pump1 channel)``.
    """
    T = geom.temperature_c
    grating = 0.0
    if geom.poling_period_um is not None:
        grating = TWO_PI / (geom.poling_period_um * 1e-6)
    k_s = wavevector(geom.signal, T, model, mode="signal")
    k_t = wavevector(geom.realized_target, T, model, mode="target")
    k_p1 = wavevector(geom.pump1, T, model, mode="pump1")
    k_p2 = wavevector(geom.pump2, T, model, mode="pump2")
    f_spur1 = OpticalFrequency(geom.signal.ghz + geom.pump2.ghz)
    f_spur2 = OpticalFrequency(geom.realized_target.ghz + geom.pump1.ghz)
    k_u1 = wavevector(f_spur1, T, model, mode="spurious1")
    k_u2 = wavevector(f_spur2, T, model, mode="spurious2")
    dk1 = k_u1 - k_s - k_p2 - grating
    dk2 = k_u2 - k_t - k_p1 - grating
    return dk1, dk2


def fit_signal_index_offset(
    geom: ConversionGeometry,
    model: DispersionModel,
    target_delta_k: float,
) -> float:
    """Signal-mode index offset that makes delta_k equal ``target_delta_k``.

    delta_k depends linearly on the signal-mode index (through k_signal
    alone, with slope +2*pi/lambda_signal), so the fit is closed-form.
    This is the knob used to reconcile the bulk dispersion model with a
    waveguide device whose conversion ceiling has been measured.
    """
    current = phase_mismatches(geom, model).delta_k
    lam_s_m = C_VACUUM / geom.signal.hz
    return model.offset("signal") + (target_delta_k - current) * lam_s_m / TWO_PI


@dataclass(frozen=True)
class DeviceCalibration:
    """A dispersion model reconciled to a physical device, plus its geometry.

    Loaded from a TOML calibration file recording the reference geometry,
    the fitted per-mode index offsets, the poling period that nulls the
    average mismatch at the reference temperature, and the device length.
    """

    model: DispersionModel
    geometry: ConversionGeometry  # poling period included
    length_m: float
    conversion_ceiling: float
    delta_k_length_rad: float

    @property
    def phase_match_temperature_c(self) -> float:
        return self.geometry.temperature_c


def load_device_calibration(path: str | Path | None = None) -> DeviceCalibration:
    """Load the shipped (or a user-supplied) device calibration file."""
    from .grid import DEFAULT_GRID  # local import to keep module load order simple

    if path is None:
        path = _data_path("rpe_waveguide_calibration.toml")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"device calibration file not found: {path}")
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)

    ref = raw["reference_geometry"]
    dev = raw["device"]
    offsets = {k: float(v) for k, v in raw.get("index_offsets", {}).items()}
    model = DispersionModel(load_sellmeier(), offsets)
    geometry = ConversionGeometry(
        signal=DEFAULT_GRID.frequency(int(ref["signal_channel"])),
        target=DEFAULT_GRID.frequency(int(ref["target_channel"])),
        pump1=OpticalFrequency.from_nm(float(ref["pump1_nm"])),
        pump2=OpticalFrequency.from_nm(float(ref["pump2_nm"])),
        temperature_c=float(ref["temperature_c"]),
        poling_period_um=float(dev["poling_period_um"]),
    )
    return DeviceCalibration(
        model=model,
        geometry=geometry,
        length_m=float(dev["length_m"]),
        conversion_ceiling=float(dev["conversion_ceiling"]),
        delta_k_length_rad=float(dev["delta_k_length_rad"]),
    )
