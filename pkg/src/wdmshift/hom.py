"""Two-photon interference at a fibre splitter: dip simulation and analysis.

When a converted and an unconverted photon meet at a beamsplitter, the
coincidence rate between the output ports dips as their relative delay
goes through zero.  For intensity splitting fractions (r, t), r + t = 1,
and a spectral overlap M between the two arms' filters, the interference
visibility of the dip is::

    V_int = 2 r t / (r^2 + t^2) * M

(r = t = 1/2 and M = 1 give V_int = 1, the textbook case).  Both arms are
filtered to near-Gaussian passbands of FWHM df, so the dip vs delay tau is
Gaussian too.  For a Gaussian intensity spectrum the dip factor is the
Fourier transform of the normalised spectrum, exp(-sigma_w^2 tau^2 / 2)
with sigma_w the spectral rms width; converting FWHM df to sigma_w =
pi*df/sqrt(2 ln 2) gives the dip's delay scale::

    sigma_tau = sqrt(2 ln 2) / (pi * df)

On top of the interfering pairs sits a constant accidental floor N from
noise photons; the simulated scan is::

    C(tau) = N + C0 * (1 - V_int * exp(-tau^2 / (2 sigma_tau^2)))

with C0 the genuine-pair coincidence rate away from the dip.  Two
visibilities summarise a scan: raw, (C_far - C_dip) / C_far, and
noise-subtracted, (C_far - C_dip) / (C_far - N); they are tied by
V_raw = V_ns * (1 - N / C_far).

Counting statistics are reproduced by Poisson-sampling each delay point
with a caller-supplied seeded generator, so Monte Carlo repetitions are
deterministic per seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .errors import FitError

SQRT_2LN2 = math.sqrt(2.0 * math.log(2.0))


def beamsplitter_visibility(r: float, t: float) -> float:
    """2rt/(r^2+t^2) for intensity splitting fractions r + t = 1."""
    return 2.0 * r * t / (r**2 + t**2)


def sigma_tau_ps(filter_fwhm_ghz: float) -> float:
    """Dip delay scale [ps] for a Gaussian filter of the given FWHM [GHz]."""
    return 1e3 * SQRT_2LN2 / (math.pi * filter_fwhm_ghz)


@dataclass(frozen=True, eq=False)
class HomConfig:
    """Parameters of a delay-scan coincidence measurement.

    ``splitter`` holds the intensity fractions of the two splitter ports
    (must sum to 1).  ``visibility_override`` replaces the splitter/overlap
    product with a directly specified interference visibility, for fitting
    scans whose contrast is limited by effects beyond those two factors.
    """

    splitter: tuple[float, float] = (0.5, 0.5)
    spectral_overlap: float = 1.0
    filter_fwhm_ghz: float = 28.6
    signal_pair_rate_cps: float = 1.0  # genuine-pair coincidences away from dip
    noise_floor_cps: float = 0.0  # accidental coincidences, delay-independent
    delays_ps: np.ndarray = None
    visibility_override: float | None = None

    def __post_init__(self):
        r, t = self.splitter
        if not (0.0 < r < 1.0 and 0.0 < t < 1.0) or abs(r + t - 1.0) > 1e-9:
            raise ValueError(f"splitter fractions must be in (0,1) and sum to 1, got {self.splitter}")
        if not 0.0 <= self.spectral_overlap <= 1.0:
            raise ValueError("spectral_overlap must be in [0, 1]")
        if self.filter_fwhm_ghz <= 0.0:
            raise ValueError("filter_fwhm_ghz must be positive")
        if self.signal_pair_rate_cps < 0.0 or self.noise_floor_cps < 0.0:
            raise ValueError("rates must be non-negative")
        if self.delays_ps is None:
            delays = np.linspace(-66.0, 66.0, 67)
        else:
            delays = np.asarray(self.delays_ps, dtype=float)
        if delays.size == 0:
            raise ValueError("delay grid must not be empty")
        object.__setattr__(self, "delays_ps", delays)
        if self.visibility_override is not None and not 0.0 <= self.visibility_override <= 1.0:
            raise ValueError("visibility_override must be in [0, 1]")

    @property
    def sigma_tau_ps(self) -> float:
        return sigma_tau_ps(self.filter_fwhm_ghz)

    @property
    def interference_visibility(self) -> float:
        """Dip contrast of the genuine pairs (before the noise floor)."""
        if self.visibility_override is not None:
            return self.visibility_override
        r, t = self.splitter
        return beamsplitter_visibility(r, t) * self.spectral_overlap


@dataclass(frozen=True, eq=False)
class HomScan:
    """A delay scan with its scan-derived visibility summary.

    ``visibility_raw`` and ``visibility_noise_subtracted`` are computed
    from the scan's extreme rates (deepest point vs farthest-delay level);
    for Poisson-sampled scans those are crude estimates and
    :func:`extract_visibility` is the proper analysis.
    """

    delays_ps: np.ndarray
    rates_cps: np.ndarray
    noise_floor_cps: float
    visibility_raw: float
    visibility_noise_subtracted: float


def simulate_hom_scan(
    cfg: HomConfig,
    rng: np.random.Generator | None = None,
    integration_time_s: float = 1.0,
) -> HomScan:
    """Generate a coincidence scan; Poisson counting noise when rng given.

    The noiseless path evaluates the model exactly, so the scan-derived
    visibilities obey V_raw = V_ns * (1 - N / C_far) identically.
    """
    tau = cfg.delays_ps
    sig = cfg.sigma_tau_ps
    v_int = cfg.interference_visibility
    rates = cfg.noise_floor_cps + cfg.signal_pair_rate_cps * (
        1.0 - v_int * np.exp(-(tau**2) / (2.0 * sig**2))
    )
    if rng is not None:
        if integration_time_s <= 0.0:
            raise ValueError("integration_time_s must be positive")
        rates = rng.poisson(rates * integration_time_s) / integration_time_s

    c_dip = float(rates.min())
    c_far = float(rates[np.argmax(np.abs(tau))])
    if c_far <= 0.0:
        v_raw = 0.0
        v_ns = 0.0
    else:
        v_raw = (c_far - c_dip) / c_far
        denom = c_far - cfg.noise_floor_cps
        v_ns = (c_far - c_dip) / denom if denom > 0.0 else 1.0
    return HomScan(
        delays_ps=tau,
        rates_cps=np.asarray(rates, dtype=float),
        noise_floor_cps=cfg.noise_floor_cps,
        visibility_raw=min(max(v_raw, 0.0), 1.0),
        visibility_noise_subtracted=min(max(v_ns, 0.0), 1.0),
    )


@dataclass(frozen=True)
class VisibilityFit:
    """Result of fitting a Gaussian dip to a measured or simulated scan.

    ``no_dip`` is set (with NaN visibilities) when no statistically
    significant dip is found; that is a report, not an error.
    """

    visibility_raw: float
    visibility_noise_subtracted: float
    dip_width_fwhm_ps: float
    dip_delay_ps: float
    baseline_cps: float
    dip_depth_cps: float
    depth_uncertainty_cps: float
    no_dip: bool = False


def _dip_model(tau, base, depth, tau0, sig):
    return base - depth * np.exp(-((tau - tau0) ** 2) / (2.0 * sig**2))


def extract_visibility(
    delays_ps,
    rates_cps,
    noise_floor_cps: float = 0.0,
) -> VisibilityFit:
    """Least-squares Gaussian-dip fit returning both visibilities.

    The scan must extend beyond ~3 dip widths from the dip so the fit can
    pin the baseline; scans with no significant dip (fitted depth below 3x
    its uncertainty) come back flagged ``no_dip``.
    """
    tau = np.asarray(delays_ps, dtype=float)
    rates = np.asarray(rates_cps, dtype=float)
    if tau.ndim != 1 or tau.shape != rates.shape or tau.size < 5:
        raise FitError("need matching 1-d delay/rate arrays with >= 5 points")

    n_far = max(3, tau.size // 4)
    far_idx = np.argsort(np.abs(tau))[-n_far:]
    base0 = float(np.mean(rates[far_idx]))
    i_min = int(np.argmin(rates))
    depth0 = base0 - float(rates[i_min])
    tau00 = float(tau[i_min])
    below_half = rates < base0 - 0.5 * depth0
    if depth0 > 0.0 and np.count_nonzero(below_half) >= 2:
        sig0 = float(tau[below_half].max() - tau[below_half].min()) / (2.0 * SQRT_2LN2)
        sig0 = max(sig0, np.ptp(tau) / 100.0)
    else:
        sig0 = np.ptp(tau) / 10.0

    no_dip = VisibilityFit(
        visibility_raw=float("nan"),
        visibility_noise_subtracted=float("nan"),
        dip_width_fwhm_ps=float("nan"),
        dip_delay_ps=float("nan"),
        baseline_cps=base0,
        dip_depth_cps=0.0,
        depth_uncertainty_cps=float("nan"),
        no_dip=True,
    )
    if depth0 <= 0.0:
        return no_dip
    try:
        with warnings.catch_warnings():
            # pcov is inf on (near-)exact data; handled by the fallback below.
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(
                _dip_model,
                tau,
                rates,
                p0=(base0, depth0, tau00, sig0),
                maxfev=20_000,
            )
    except RuntimeError:
        return no_dip
    base, depth, tau0, sig = popt
    sig = abs(float(sig))
    if np.all(np.isfinite(pcov)):
        depth_err = float(np.sqrt(np.diag(pcov))[1])
    else:
        # Zero-residual fits leave the covariance undefined; fall back to
        # the residual scatter as a conservative uncertainty proxy.
        resid = rates - _dip_model(tau, *popt)
        depth_err = float(np.sqrt(np.mean(resid**2)))
    if depth <= 0.0 or depth < 3.0 * depth_err:
        return no_dip
    if np.max(np.abs(tau - tau0)) < 3.0 * sig:
        raise FitError(
            "scan does not reach 3 dip widths from the dip centre; "
            "cannot pin the far-delay baseline"
        )
    if base <= 0.0:
        return no_dip
    v_raw = float(depth / base)
    denom = base - noise_floor_cps
    v_ns = float(depth / denom) if denom > 0.0 else float("inf")
    return VisibilityFit(
        visibility_raw=v_raw,
        visibility_noise_subtracted=v_ns,
        dip_width_fwhm_ps=2.0 * SQRT_2LN2 * sig,
        dip_delay_ps=float(tau0),
        baseline_cps=float(base),
        dip_depth_cps=float(depth),
        depth_uncertainty_cps=depth_err,
    )


def car(coincidences_cps: float, accidentals_cps: float) -> float:
    """Coincidence-to-accidental ratio, the usual pair-source quality figure."""
    if accidentals_cps <= 0.0:
        raise ValueError("accidental rate must be positive for a defined ratio")
    return coincidences_cps / accidentals_cps
