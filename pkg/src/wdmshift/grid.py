"""Unit-safe optical frequencies, vacuum wavelengths and dense-WDM channels.

Frequencies are the primary representation everywhere in this package:
channel arithmetic and pump/photon frequency shifts are exact in frequency
space, while wavelengths pick up rounding through the c/f conversion.
Wavelengths are therefore treated as display/ingest forms only.

Internally :class:`OpticalFrequency` stores GHz, so 100 GHz grid points and
their differences are exact integers in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import GridRangeError

# Vacuum speed of light [m/s], exact by SI definition.
C_VACUUM = 299_792_458.0


@dataclass(frozen=True)
class OpticalFrequency:
    """An optical frequency, stored in GHz (positive).

    >>> OpticalFrequency.from_thz(195.0).nm
    1537.3972205128204
    """

    ghz: float

    def __post_init__(self):
        if not self.ghz > 0.0:
            raise ValueError(f"frequency must be positive, got {self.ghz} GHz")

    @classmethod
    def from_thz(cls, thz: float) -> "OpticalFrequency":
        return cls(thz * 1e3)

    @classmethod
    def from_nm(cls, nm: float) -> "OpticalFrequency":
        """Frequency of a vacuum wavelength given in nm."""
        if not nm > 0.0:
            raise ValueError(f"wavelength must be positive, got {nm} nm")
        return cls(C_VACUUM / (nm * 1e-9) / 1e9)

    @property
    def thz(self) -> float:
        return self.ghz / 1e3

    @property
    def hz(self) -> float:
        return self.ghz * 1e9

    @property
    def nm(self) -> float:
        """Vacuum wavelength [nm]."""
        return C_VACUUM / self.hz * 1e9

    def wavelength(self) -> "WavelengthVacuum":
        return WavelengthVacuum(self.nm)


@dataclass(frozen=True)
class WavelengthVacuum:
    """A vacuum wavelength in nm (positive)."""

    nm: float

    def __post_init__(self):
        if not self.nm > 0.0:
            raise ValueError(f"wavelength must be positive, got {self.nm} nm")

    @property
    def um(self) -> float:
        return self.nm * 1e-3

    @property
    def meters(self) -> float:
        return self.nm * 1e-9

    def frequency(self) -> OpticalFrequency:
        return OpticalFrequency.from_nm(self.nm)


@dataclass(frozen=True)
class FrequencyShift:
    """A signed frequency difference in GHz."""

    ghz: float

    @property
    def thz(self) -> float:
        return self.ghz / 1e3


@dataclass(frozen=True)
class WdmGrid:
    """A fixed-spacing DWDM channel plan.

    The default anchors channel ``n`` at ``190.0 THz + n * 100 GHz``, which
    reproduces the usual C-band channel numbering (channel 50 at 195.0 THz,
    i.e. 1537.40 nm), with a validity range of channels 1-72 spanning the
    7.2 THz of the 100 GHz grid.  Both anchor and range are configurable.
    """

    anchor_ghz: float = 190_000.0
    spacing_ghz: float = 100.0
    channel_range: tuple[int, int] = (1, 72)

    def frequency(self, index: int) -> OpticalFrequency:
        """Centre frequency of a channel index (validated against the range)."""
        lo, hi = self.channel_range
        if not lo <= index <= hi:
            raise GridRangeError(
                f"channel {index} outside grid validity range {lo}..{hi}"
            )
        return OpticalFrequency(self.anchor_ghz + index * self.spacing_ghz)

    def channel(self, f: OpticalFrequency, tol_ghz: float = 1e-6) -> "WdmChannel":
        """Channel whose centre equals ``f``; errors if off-grid or out of range."""
        idx = round((f.ghz - self.anchor_ghz) / self.spacing_ghz)
        if abs(self.anchor_ghz + idx * self.spacing_ghz - f.ghz) > tol_ghz:
            raise GridRangeError(f"{f.thz} THz is not on the {self.spacing_ghz} GHz grid")
        lo, hi = self.channel_range
        if not lo <= idx <= hi:
            raise GridRangeError(
                f"{f.thz} THz maps to channel {idx}, outside range {lo}..{hi}"
            )
        return WdmChannel(idx, self)


DEFAULT_GRID = WdmGrid()


@dataclass(frozen=True)
class WdmChannel:
    """An integer channel index on a :class:`WdmGrid`."""

    index: int
    grid: WdmGrid = DEFAULT_GRID

    def __post_init__(self):
        lo, hi = self.grid.channel_range
        if not lo <= self.index <= hi:
            raise GridRangeError(
                f"channel {self.index} outside grid validity range {lo}..{hi}"
            )

    def frequency(self) -> OpticalFrequency:
        return self.grid.frequency(self.index)


def channel_to_frequency(ch: WdmChannel | int, grid: WdmGrid = DEFAULT_GRID) -> OpticalFrequency:
    """Centre frequency of a WDM channel.

    >>> channel_to_frequency(50).thz
    195.0
    """
    if isinstance(ch, WdmChannel):
        return ch.frequency()
    return grid.frequency(ch)


def frequency_to_channel(f: OpticalFrequency, grid: WdmGrid = DEFAULT_GRID) -> WdmChannel:
    """Inverse of :func:`channel_to_frequency` for on-grid frequencies."""
    return grid.channel(f)


def frequency_to_wavelength(f: OpticalFrequency) -> WavelengthVacuum:
    """Vacuum wavelength of a frequency (lambda = c / f)."""
    return f.wavelength()


def wavelength_to_frequency(wl: WavelengthVacuum | float) -> OpticalFrequency:
    """Frequency of a vacuum wavelength; a bare float is taken as nm."""
    if isinstance(wl, WavelengthVacuum):
        return wl.frequency()
    return OpticalFrequency.from_nm(wl)


def shift_between(a: OpticalFrequency, b: OpticalFrequency) -> FrequencyShift:
    """Signed difference a - b. Exact for grid frequencies.

    >>> shift_between(channel_to_frequency(52), channel_to_frequency(48)).ghz
    400.0
    """
    return FrequencyShift(a.ghz - b.ghz)


def shift_consistency_ghz(
    signal: OpticalFrequency,
    target: OpticalFrequency,
    pump1: OpticalFrequency,
    pump2: OpticalFrequency,
) -> float:
    """How far a conversion plan is from (target - signal) == (pump1 - pump2).

    Returns the absolute deviation in GHz; 0 means the pump separation
    matches the requested photon shift exactly.
    """
    return abs((target.ghz - signal.ghz) - (pump1.ghz - pump2.ghz))


def is_shift_consistent(
    signal: OpticalFrequency,
    target: OpticalFrequency,
    pump1: OpticalFrequency,
    pump2: OpticalFrequency,
    tol_ghz: float = 0.5,
) -> bool:
    """Pure predicate form of :func:`shift_consistency_ghz`."""
    return shift_consistency_ghz(signal, target, pump1, pump2) <= tol_ghz
