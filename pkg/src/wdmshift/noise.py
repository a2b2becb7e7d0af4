"""Noise-count handling: measured spectra and the linear power model.

The dominant background in a strongly pumped chi(2) waveguide is Raman
scattering from the pumps, which grows linearly with total pump power and
varies slowly with pump frequency.  Two small tools cover what the planner
and the experiment reproductions need:

* :class:`NoiseSpectrum` ingests a digitised noise-vs-frequency table
  (two-column text, frequency in THz or wavelength in nm) and interpolates
  it, refusing to extrapolate.
* :func:`fit_noise_linear` fits counts vs total pump power with a straight
  line and keeps the residuals for inspection.

The spectrum shipped under ``data/illustrative_noise_spectrum.tsv`` is a
synthetic stand-in with a realistic shape, for demos and tests only; feed
measured data for real planning.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FitError
from .grid import C_VACUUM, OpticalFrequency

_THZ_HINT = (50.0, 999.0)  # telecom frequencies land here [THz]
_NM_HINT = (1000.0, 20000.0)  # telecom wavelengths land here [nm]


@dataclass(frozen=True, eq=False)
class NoiseSpectrum:
    """A measured (or synthesised) noise-rate spectrum, linear interpolation.

    Stored sorted by frequency; queries outside the tabulated range raise
    rather than extrapolate.
    """

    f_ghz: np.ndarray
    rate_cps: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f_ghz, dtype=float)
        r = np.asarray(self.rate_cps, dtype=float)
        if f.ndim != 1 or f.shape != r.shape or f.size < 2:
            raise ValueError("spectrum needs matching 1-d arrays with >= 2 points")
        if np.any(r < 0.0):
            raise ValueError("noise rates must be non-negative")
        order = np.argsort(f)
        object.__setattr__(self, "f_ghz", f[order])
        object.__setattr__(self, "rate_cps", r[order])
        if np.any(np.diff(self.f_ghz) == 0.0):
            raise ValueError("duplicate frequency points in spectrum")

    @property
    def f_min_ghz(self) -> float:
        return float(self.f_ghz[0])

    @property
    def f_max_ghz(self) -> float:
        return float(self.f_ghz[-1])

    def value_ghz(self, f_ghz):
        """Interpolated rate(s) [counts/s] at frequencies given in GHz."""
        f = np.asarray(f_ghz, dtype=float)
        if np.any(f < self.f_ghz[0]) or np.any(f > self.f_ghz[-1]):
            raise ValueError(
                f"frequency outside tabulated spectrum range "
                f"[{self.f_min_ghz / 1e3:.4f}, {self.f_max_ghz / 1e3:.4f}] THz"
            )
        out = np.interp(f, self.f_ghz, self.rate_cps)
        return float(out) if np.isscalar(f_ghz) else out

    def value(self, f: OpticalFrequency | float):
        """Interpolated rate at an :class:`OpticalFrequency` or a THz value."""
        ghz = f.ghz if isinstance(f, OpticalFrequency) else np.asarray(f) * 1e3
        return self.value_ghz(ghz)

    @classmethod
    def from_arrays(cls, frequency_thz=None, wavelength_nm=None, rate_cps=None) -> "NoiseSpectrum":
        if (frequency_thz is None) == (wavelength_nm is None):
            raise ValueError("give exactly one of frequency_thz or wavelength_nm")
        if wavelength_nm is not None:
            f_ghz = C_VACUUM / (np.asarray(wavelength_nm, dtype=float) * 1e-9) / 1e9
        else:
            f_ghz = np.asarray(frequency_thz, dtype=float) * 1e3
        return cls(f_ghz=f_ghz, rate_cps=np.asarray(rate_cps, dtype=float))

    @classmethod
    def from_file(cls, path: str | Path, unit: str | None = None) -> "NoiseSpectrum":
        """Load a two-column text table: frequency/wavelength, counts/s.

        Lines starting with '#' are comments.  ``unit`` is ``"thz"`` or
        ``"nm"``; when omitted it is inferred from the magnitude of the
        first column (190-ish means THz, 1500-ish means nm), and ambiguous
        data is rejected.
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"noise spectrum file not found: {path}")
        data = np.loadtxt(path, comments="#")
        if data.ndim != 2 or data.shape[1] < 2:
            raise ValueError(f"expected two columns in {path}")
        x, rate = data[:, 0], data[:, 1]
        if unit is None:
            med = float(np.median(x))
            if _THZ_HINT[0] <= med <= _THZ_HINT[1]:
                unit = "thz"
            elif _NM_HINT[0] <= med <= _NM_HINT[1]:
                unit = "nm"
            else:
                raise ValueError(
                    f"cannot infer unit of first column (median {med:g}); "
                    "pass unit='thz' or unit='nm'"
                )
        unit = unit.lower()
        if unit == "thz":
            return cls.from_arrays(frequency_thz=x, rate_cps=rate)
        if unit == "nm":
            return cls.from_arrays(wavelength_nm=x, rate_cps=rate)
        raise ValueError(f"unknown unit {unit!r}; expected 'thz' or 'nm'")


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Linear noise-vs-power model with the data it was fitted to.

    ``predict`` must be non-negative over the fitted power range and the
    slope non-negative; violations indicate bad input data and are
    rejected at construction.
    """

    slope_cps_per_w: float
    intercept_cps: float
    power_range_w: tuple[float, float]
    residuals_cps: np.ndarray
    spectrum: NoiseSpectrum | None = None

    def __post_init__(self):
        if self.slope_cps_per_w < 0.0:
            raise FitError(f"fitted noise slope is negative: {self.slope_cps_per_w:g}")
        lo, hi = self.power_range_w
        if min(self.predict(lo), self.predict(hi)) < 0.0:
            raise FitError("fitted noise model predicts negative counts in range")

    def predict(self, p_total_w):
        """Expected noise rate [counts/s] at a total pump power [W]."""
        return self.slope_cps_per_w * np.asarray(p_total_w, dtype=float) + self.intercept_cps


def fit_noise_linear(
    powers_w,
    rates_cps,
    spectrum: NoiseSpectrum | None = None,
) -> NoiseModel:
    """Least-squares line through noise rate vs total pump power samples.

    Needs at least two distinct powers.  The all-zero-counts case fits
    slope 0, intercept 0 exactly.
    """
    p = np.asarray(powers_w, dtype=float)
    r = np.asarray(rates_cps, dtype=float)
    if p.ndim != 1 or p.shape != r.shape:
        raise FitError("powers and rates must be matching 1-d arrays")
    if np.unique(p).size < 2:
        raise FitError("need samples at >= 2 distinct powers for a line fit")
    A = np.column_stack([p, np.ones_like(p)])
    (slope, intercept), *_ = np.linalg.lstsq(A, r, rcond=None)
    # Snap exact-zero data to the exact-zero model (lstsq returns tiny noise).
    if np.all(r == 0.0):
        slope, intercept = 0.0, 0.0
    residuals = r - (slope * p + intercept)
    return NoiseModel(
        slope_cps_per_w=float(slope),
        intercept_cps=float(intercept),
        power_range_w=(float(p.min()), float(p.max())),
        residuals_cps=residuals,
        spectrum=spectrum,
    )
