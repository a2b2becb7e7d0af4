"""Calibration against measured landmarks and pump-pair planning.

A real device is characterised by a handful of landmarks rather than ab
initio coupling constants: its length, the total pump power at which
conversion peaks, and the conversion ceiling inferred from the efficiency
curve fit.  :func:`calibrate` inverts the closed forms of
:mod:`wdmshift.coupled` to turn those landmarks into a residual mismatch
``delta_k`` and a coupling rate per watt, after which efficiency at any
pump power, and the power needed for any target efficiency, follow.

:func:`choose_pumps` picks a pump pair for a requested channel-to-channel
shift.  The pair separation is pinned to the shift exactly; within that
constraint the cost is a weighted sum of (a) measured noise at both pump
frequencies and (b) the conversion-ceiling penalty from the residual
mismatch the dispersion model predicts for that pair, both min-max
normalised over the candidate set.  Ties go to the pair farthest from the
photon frequencies, where parasitic interactions are weakest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .coupled import (
    CouplingConfig,
    PropagationState,
    SpuriousCoupling,
    conversion_efficiency,
    efficiency_formula,
    max_efficiency,
    propagate_analytic,
    propagate_extended,
    resonant_coupling_rate,
)
from .dispersion import DispersionModel, PhaseMismatchSet, wavevector
from .errors import CalibrationError, InfeasibleEfficiencyError, PlanningError
from .grid import OpticalFrequency, WdmChannel
from .noise import NoiseSpectrum

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CalibrationTargets:
    """Measured landmarks a coupling calibration is fitted to."""

    length_m: float
    p_total_peak_w: float  # total pump power at the conversion peak
    eta_theory_max: float  # conversion ceiling from the curve fit
    balance_tolerance: float = 0.002

    def __post_init__(self):
        if self.length_m <= 0.0 or self.p_total_peak_w <= 0.0:
            raise CalibrationError("length and peak power must be positive")
        if not 0.0 < self.eta_theory_max <= 1.0:
            raise CalibrationError(
                f"eta_theory_max must be in (0, 1], got {self.eta_theory_max}"
            )


@dataclass(frozen=True)
class CouplingCalibration:
    """Fitted coupling model: residual mismatch plus coupling rate per watt.

    ``q_per_watt`` converts per-pump power to the coupling rate Q
    [rad^2/m^2/W]; ``delta_k`` is the fitted residual mismatch [rad/m]
    (its magnitude is what the ceiling fixes; the sign is immaterial).
    """

    delta_k: float
    q_per_watt: float
    length_m: float
    targets: CalibrationTargets

    def mismatch(self) -> PhaseMismatchSet:
        """Average-compensated mismatch set with the fitted difference."""
        return PhaseMismatchSet.from_avg_diff(0.0, self.delta_k)

    def coupling_config(self, p_total_w: float, loss_alpha: float = 0.0) -> CouplingConfig:
        """Balanced pump configuration delivering ``p_total_w`` in total."""
        chi = math.sqrt(self.q_per_watt / 2.0)
        return CouplingConfig(
            chi1=chi,
            chi2=chi,
            p1_w=p_total_w / 2.0,
            p2_w=p_total_w / 2.0,
            length_m=self.length_m,
            loss_alpha=loss_alpha,
        )

    def efficiency(self, p_total_w: float) -> float:
        """Closed-form conversion efficiency at a total pump power."""
        if p_total_w == 0.0:
            return 0.0
        return conversion_efficiency(
            self.coupling_config(p_total_w),
            self.mismatch(),
            self.targets.balance_tolerance,
        ).eta


def calibrate(targets: CalibrationTargets) -> CouplingCalibration:
    """Invert the closed forms: ceiling -> delta_k, peak power -> Q/W.

    The ceiling formula gives |delta_k|*L = 2 pi sqrt(1 - sqrt(eta_max));
    the first-resonance condition at the peak power then fixes the coupling
    rate per watt of per-pump power.  Round trip: the calibrated model
    returns eta_theory_max at p_total_peak_w to numerical precision.
    """
    L = targets.length_m
    dkl = TWO_PI * math.sqrt(1.0 - math.sqrt(targets.eta_theory_max))
    delta_k = dkl / L
    q_peak = resonant_coupling_rate(delta_k, L, m=0)
    q_per_watt = q_peak / (targets.p_total_peak_w / 2.0)
    return CouplingCalibration(
        delta_k=delta_k, q_per_watt=q_per_watt, length_m=L, targets=targets
    )


@dataclass(frozen=True)
class PumpPowers:
    """A balanced pump power choice."""

    p1_w: float
    p2_w: float

    @property
    def total_w(self) -> float:
        return self.p1_w + self.p2_w


def power_for_max_conversion(
    calibration: CouplingCalibration,
    requested_eta: float | None = None,
) -> PumpPowers:
    """Balanced pump powers hitting the first resonance, or a requested eta.

    With no ``requested_eta`` this returns the peak (resonance) powers.
    Otherwise the lower of the two power solutions on the first branch is
    returned; requests above the ceiling raise
    :class:`InfeasibleEfficiencyError` carrying the ceiling.
    """
    q_peak = resonant_coupling_rate(calibration.delta_k, calibration.length_m, m=0)
    p_peak = q_peak / calibration.q_per_watt  # per pump
    if requested_eta is None:
        return PumpPowers(p_peak, p_peak)
    eta_max = max_efficiency(calibration.delta_k, calibration.length_m)
    if requested_eta < 0.0:
        raise ValueError("requested_eta must be non-negative")
    if requested_eta > eta_max:
        raise InfeasibleEfficiencyError(
            f"requested efficiency {requested_eta:.4g} exceeds the ceiling "
            f"{eta_max:.4g} for delta_k*L = "
            f"{abs(calibration.delta_k) * calibration.length_m:.4g}",
            eta_max=eta_max,
        )
    if requested_eta == 0.0:
        return PumpPowers(0.0, 0.0)

    def gap(q: float) -> float:
        return (
            efficiency_formula(calibration.delta_k, q, calibration.length_m)
            - requested_eta
        )

    if gap(q_peak) <= 0.0:  # requested_eta == eta_max up to rounding
        q_star = q_peak
    else:
        q_star = brentq(gap, 0.0, q_peak, xtol=1e-15 * max(q_peak, 1.0), rtol=1e-14)
    p = q_star / calibration.q_per_watt
    return PumpPowers(p, p)


def efficiency_curve(
    calibration: CouplingCalibration,
    powers_w,
    include_loss: bool = False,
    include_wrong_pump: bool = False,
    loss_alpha: float = 0.0,
    spurious: SpuriousCoupling | None = None,
) -> np.ndarray:
    """Conversion efficiency over a total-power sweep; columns (P_total, eta).

    With both flags off this is the closed form (pointwise identical to
    :func:`wdmshift.coupled.conversion_efficiency`).  ``include_loss``
    propagates with the uniform loss rate ``loss_alpha``;
    ``include_wrong_pump`` switches to the five-mode model and needs the
    ``spurious`` channel parameters from the dispersion module.
    """
    if include_wrong_pump and spurious is None:
        raise ValueError("include_wrong_pump requires the spurious coupling parameters")
    rows = np.empty((len(powers_w), 2))
    mm = calibration.mismatch()
    for i, p_total in enumerate(np.asarray(powers_w, dtype=float)):
        if p_total == 0.0:
            rows[i] = (0.0, 0.0)
            continue
        if not include_loss and not include_wrong_pump:
            eta = calibration.efficiency(p_total)
        else:
            cfg = calibration.coupling_config(
                p_total, loss_alpha=loss_alpha if include_loss else 0.0
            )
            L = calibration.length_m
            if include_wrong_pump:
                state = PropagationState.single_photon_signal(5)
                out = propagate_extended(cfg, mm, spurious, state, L)
            else:
                state = PropagationState.single_photon_signal(3)
                out = propagate_analytic(cfg, mm, state, L)
            eta = float(out.powers[2])
        rows[i] = (p_total, eta)
    return rows


@dataclass(frozen=True)
class PumpSearchConstraints:
    """Search space and cost weights for :func:`choose_pumps`.

    Candidates are pump-1 frequencies on an absolute ``grid_step_ghz`` grid
    within ``band_thz`` (further clipped to the noise spectrum's support);
    pump 2 trails pump 1 by exactly the requested shift.  ``calibration``
    supplies the device length, the coupling rate per watt for the power
    recommendation, and the balance convention.
    """

    calibration: CouplingCalibration
    temperature_c: float
    band_thz: tuple[float, float] = (190.1, 197.2)
    grid_step_ghz: float = 1.0
    weight_noise: float = 1.0
    weight_mismatch: float = 1.0
    tie_tolerance: float = 1e-12


@dataclass(frozen=True)
class ConversionPlan:
    """A pump-pair recommendation for one channel-to-channel conversion."""

    signal: OpticalFrequency
    target: OpticalFrequency
    pump1: OpticalFrequency
    pump2: OpticalFrequency
    p1_w: float
    p2_w: float
    predicted_eta: float
    predicted_noise_rate: float  # [counts/s] spectrum sum at both pumps
    delta_k_length: float  # [rad] residual mismatch times device length
    noise_rate_min: float  # [counts/s] best pair noise over the search
    noise_rate_max: float  # [counts/s] worst pair noise over the search

    @property
    def p_total_w(self) -> float:
        return self.p1_w + self.p2_w

    @property
    def shift_ghz(self) -> float:
        return self.target.ghz - self.signal.ghz


def _as_frequency(x: WdmChannel | OpticalFrequency) -> OpticalFrequency:
    return x.frequency() if isinstance(x, WdmChannel) else x


def choose_pumps(
    signal: WdmChannel | OpticalFrequency,
    target: WdmChannel | OpticalFrequency,
    noise: NoiseSpectrum,
    model: DispersionModel,
    constraints: PumpSearchConstraints,
) -> ConversionPlan:
    """Pick the pump pair minimising combined noise and mismatch penalty.

    Cost per candidate pair = ``weight_noise * normalised(noise(p1) +
    noise(p2)) + weight_mismatch * normalised(1 - ceiling(delta_k, L))``,
    with each term min-max normalised over the candidate set (a constant
    term normalises to zero).  Exact ties are broken toward the pair whose
    pumps sit farthest from the signal and target frequencies, then toward
    the lower pump-1 frequency for determinism.
    """
    f_s = _as_frequency(signal)
    f_t = _as_frequency(target)
    shift_ghz = f_t.ghz - f_s.ghz
    cal = constraints.calibration
    L = cal.length_m

    lo_ghz = max(constraints.band_thz[0] * 1e3, noise.f_min_ghz)
    hi_ghz = min(constraints.band_thz[1] * 1e3, noise.f_max_ghz)
    p1_lo = lo_ghz + max(shift_ghz, 0.0)
    p1_hi = hi_ghz + min(shift_ghz, 0.0)
    step = constraints.grid_step_ghz
    start = math.ceil(p1_lo / step - 1e-9) * step
    if start > p1_hi + 1e-9:
        raise PlanningError(
            f"no pump-1 candidates on the {step} GHz grid within "
            f"[{p1_lo / 1e3:.4f}, {p1_hi / 1e3:.4f}] THz"
        )
    p1 = np.arange(start, p1_hi + step * 1e-6, step)  # [GHz]
    p2 = p1 - shift_ghz

    pair_noise = noise.value_ghz(p1) + noise.value_ghz(p2)

    # Residual mismatch per candidate: delta_k = k_s + k_p1 - k_t - k_p2.
    T = constraints.temperature_c
    k_s = wavevector(f_s, T, model, mode="signal")
    k_t = wavevector(f_t, T, model, mode="target")
    k_p1 = wavevector(p1 / 1e3, T, model, mode="pump1")
    k_p2 = wavevector(p2 / 1e3, T, model, mode="pump2")
    delta_k = (k_s + k_p1) - (k_t + k_p2)
    x = (delta_k * L) ** 2 / (4.0 * math.pi**2)
    ceiling = np.where(x <= 1.0, (1.0 - np.minimum(x, 1.0)) ** 2, 0.0)
    mismatch_penalty = 1.0 - ceiling

    def normalise(v: np.ndarray) -> np.ndarray:
        span = v.max() - v.min()
        if span == 0.0:
            return np.zeros_like(v)
        return (v - v.min()) / span

    cost = (
        constraints.weight_noise * normalise(pair_noise)
        + constraints.weight_mismatch * normalise(mismatch_penalty)
    )

    tie = np.flatnonzero(cost <= cost.min() + constraints.tie_tolerance)
    # Distance of the nearer pump from the nearer photon frequency [GHz].
    photon_gap = np.minimum.reduce(
        [
            np.abs(p1[tie] - f_s.ghz),
            np.abs(p1[tie] - f_t.ghz),
            np.abs(p2[tie] - f_s.ghz),
            np.abs(p2[tie] - f_t.ghz),
        ]
    )
    best_gap = photon_gap.max()
    furthest = tie[np.abs(photon_gap - best_gap) <= 1e-9]
    winner = int(furthest[np.argmin(p1[furthest])])

    dk_win = float(delta_k[winner])
    q_res = resonant_coupling_rate(dk_win, L, m=0) if abs(dk_win) * L < TWO_PI else None
    if q_res is None:
        powers = PumpPowers(0.0, 0.0)
        eta = 0.0
    else:
        p_per_pump = q_res / cal.q_per_watt
        powers = PumpPowers(p_per_pump, p_per_pump)
        eta = max_efficiency(dk_win, L)

    return ConversionPlan(
        signal=f_s,
        target=f_t,
        pump1=OpticalFrequency(float(p1[winner])),
        pump2=OpticalFrequency(float(p2[winner])),
        p1_w=powers.p1_w,
        p2_w=powers.p2_w,
        predicted_eta=eta,
        predicted_noise_rate=float(pair_noise[winner]),
        delta_k_length=dk_win * L,
        noise_rate_min=float(pair_noise.min()),
        noise_rate_max=float(pair_noise.max()),
    )
