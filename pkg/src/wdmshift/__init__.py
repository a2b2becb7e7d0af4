"""wdmshift: cascaded chi(2) frequency conversion between telecom WDM channels.

A design and simulation toolkit for shifting single photons (or classical
light) between dense-WDM channels with two concurrent three-wave mixing
stages in one periodically poled waveguide: signal + pump1 up to a sum
frequency, then down to signal + pump1 - pump2.  The package covers

* exact channel/frequency/wavelength bookkeeping (:mod:`wdmshift.grid`),
* temperature-dependent dispersion, stage mismatches and poling design
  (:mod:`wdmshift.dispersion`),
* coupled-mode propagation and the closed-form conversion efficiency
  (:mod:`wdmshift.coupled`),
* device calibration, pump-pair planning and power selection
  (:mod:`wdmshift.planner`),
* noise spectra/budgets and two-photon interference scans
  (:mod:`wdmshift.noise`, :mod:`wdmshift.hom`),

plus a small CLI (``wdmshift --help``) that wires TOML run configs to all
of the above and writes reproducible tabular reports.
"""

from .coupled import (
    CouplingConfig,
    EfficiencyResult,
    PropagationState,
    SpuriousCoupling,
    alpha_from_db_per_cm,
    build_generator,
    build_generator_extended,
    conversion_efficiency,
    efficiency_formula,
    max_efficiency,
    propagate_analytic,
    propagate_extended,
    propagate_numeric,
    resonant_coupling_rate,
    trajectory,
)
from .dispersion import (
    ConversionGeometry,
    DeviceCalibration,
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
from .grid import (
    C_VACUUM,
    DEFAULT_GRID,
    FrequencyShift,
    OpticalFrequency,
    WavelengthVacuum,
    WdmChannel,
    WdmGrid,
    channel_to_frequency,
    frequency_to_channel,
    frequency_to_wavelength,
    is_shift_consistent,
    shift_between,
    shift_consistency_ghz,
    wavelength_to_frequency,
)
from .hom import (
    HomConfig,
    HomScan,
    VisibilityFit,
    beamsplitter_visibility,
    car,
    extract_visibility,
    simulate_hom_scan,
)
from .noise import NoiseModel, NoiseSpectrum, fit_noise_linear
from .planner import (
    CalibrationTargets,
    ConversionPlan,
    CouplingCalibration,
    PumpPowers,
    PumpSearchConstraints,
    calibrate,
    choose_pumps,
    efficiency_curve,
    power_for_max_conversion,
)

__version__ = "0.1.0"
