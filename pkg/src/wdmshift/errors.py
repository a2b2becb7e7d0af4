"""Exception types raised across the package.

Everything derives from :class:`WdmShiftError` so callers can catch the
package's failures with a single except clause; most types also subclass
``ValueError`` because they signal bad inputs rather than internal faults.
"""


class WdmShiftError(Exception):
    """Base class for all errors raised by this package."""


class GridRangeError(WdmShiftError, ValueError):
    """Channel index outside the configured WDM grid validity range."""


class WavelengthRangeError(WdmShiftError, ValueError):
    """Wavelength outside the dispersion model's validity range.

    The index model refuses to extrapolate: values outside the fitted
    range look plausible but are meaningless.
    """


class GeometryError(WdmShiftError, ValueError):
    """Conversion geometry violates energy conservation beyond tolerance."""


class NoSolutionError(WdmShiftError, RuntimeError):
    """A bracketed root search found no sign change in the interval."""


class BalanceError(WdmShiftError, ValueError):
    """Pump powers unbalanced beyond the tolerance of the closed-form
    efficiency expression."""


class CalibrationError(WdmShiftError, ValueError):
    """Calibration targets are inconsistent or out of the admissible regime."""


class InfeasibleEfficiencyError(WdmShiftError, ValueError):
    """Requested conversion efficiency exceeds the device ceiling.

    Carries the ceiling in :attr:`eta_max` so callers can report it.
    """

    def __init__(self, message: str, eta_max: float):
        super().__init__(message)
        self.eta_max = eta_max


class PlanningError(WdmShiftError, ValueError):
    """Pump-pair search has no candidates after applying constraints."""


class FitError(WdmShiftError, ValueError):
    """Degenerate or invalid data handed to a fitting routine."""


class IntegrationError(WdmShiftError, RuntimeError):
    """Adaptive ODE integration failed to reach the requested tolerance."""


class ConfigError(WdmShiftError, ValueError):
    """Run configuration file is missing, unparsable, or inconsistent."""
