"""Coupled-mode propagation of the cascaded conversion and its closed forms.

With undepleted classical pumps the three interacting single-photon modes
(signal, intermediate sum frequency, target) obey a linear system in the
propagation coordinate z::

    d/dz (a_s, a_sum, a_t)^T = i * G * (a_s, a_sum, a_t)^T

where, in the co-rotating frame that absorbs the optical carriers,

    G = [ -delta_k/2        chi1*conj(E1)   0            ]
        [  chi1*E1          k_avg           chi2*E2      ]
        [  0                chi2*conj(E2)   delta_k/2    ]

``E_i = sqrt(P_i) * exp(i*phi_i)`` are pump phasors normalised so that
|E_i|^2 is the coupled pump power in watts, and the coupling strengths
``chi_i`` [(rad/m)/sqrt(W)] absorb every mode-overlap and impedance factor
(they are calibrated against a measured device, not derived ab initio).
G is Hermitian for any pump phases, so lossless propagation is unitary and
a single photon's conversion probability equals the classical field
transfer ratio |U_31|^2.

When the poling grating nulls ``k_avg`` and the pumps are balanced
(chi1^2 P1 = chi2^2 P2), the transfer has the closed form::

    eta(L) = 16 Q^2 / (delta_k^2 + 4 Q)^2
             * sin^4( L/4 * sqrt(delta_k^2 + 4 Q) )

with coupling rate ``Q = 2 chi1^2 P1`` [rad^2/m^2].  The first maximum in
power sits at the resonance ``L/4 * sqrt(delta_k^2 + 4 Q) = pi/2``, where
eta equals the conversion ceiling::

    eta_ceiling = (1 - delta_k^2 L^2 / (4 pi^2))^2

Driving harder than the first resonance can nudge eta slightly above this
ceiling (the amplitude prefactor keeps growing while the sin^4 factor
falls), so the ceiling formula is meaningful on the first rising branch
and at resonance, which is where devices are operated.

Two parasitic channels extend the system to five modes: the signal can sum
with the wrong pump (pump 2) and the target with pump 1.  Each adds one
far-detuned bond whose mismatch comes from the dispersion module; see
:func:`propagate_extended`.

All sign conventions here fix an overall gauge only; every quantity this
module reports (populations, efficiencies) is gauge-invariant.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh, expm

from .dispersion import PhaseMismatchSet
from .errors import BalanceError, CalibrationError, IntegrationError

TWO_PI = 2.0 * math.pi


class EfficiencyRegimeWarning(UserWarning):
    """Ceiling formula evaluated outside its first-branch admissibility."""


@dataclass(frozen=True)
class CouplingConfig:
    """Pump powers, coupling strengths and device length of a conversion run.

    ``loss_alpha`` is a uniform power-loss rate [1/m] applied to every mode
    (field amplitudes decay as exp(-alpha z / 2)); 0.1 dB/cm is a typical
    proton-exchanged-waveguide figure, see :func:`alpha_from_db_per_cm`.
    """

    chi1: float  # [(rad/m)/sqrt(W)] up-conversion coupling
    chi2: float  # [(rad/m)/sqrt(W)] down-conversion coupling
    p1_w: float  # coupled pump-1 power [W]
    p2_w: float  # coupled pump-2 power [W]
    length_m: float
    loss_alpha: float = 0.0  # [1/m] power loss rate
    pump1_phase_rad: float = 0.0
    pump2_phase_rad: float = 0.0

    def __post_init__(self):
        for name in ("chi1", "chi2", "p1_w", "p2_w", "length_m"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        if self.loss_alpha < 0.0:
            raise ValueError("loss_alpha must be non-negative")

    @property
    def e1(self) -> complex:
        """Pump-1 phasor, |e1|^2 = p1_w."""
        return math.sqrt(self.p1_w) * complex(
            math.cos(self.pump1_phase_rad), math.sin(self.pump1_phase_rad)
        )

    @property
    def e2(self) -> complex:
        return math.sqrt(self.p2_w) * complex(
            math.cos(self.pump2_phase_rad), math.sin(self.pump2_phase_rad)
        )

    @property
    def q(self) -> float:
        """Coupling rate [rad^2/m^2], symmetrised over the two stages.

        Equals the textbook 2*chi1^2*|E1|^2 when the balance condition
        chi1^2 P1 = chi2^2 P2 holds exactly.
        """
        return self.chi1**2 * self.p1_w + self.chi2**2 * self.p2_w

    def balance_imbalance(self) -> float:
        """Relative mismatch of chi1^2 P1 vs chi2^2 P2 (0 = balanced)."""
        q1 = self.chi1**2 * self.p1_w
        q2 = self.chi2**2 * self.p2_w
        mean = 0.5 * (q1 + q2)
        if mean == 0.0:
            return 0.0
        return abs(q1 - q2) / mean

    def is_balanced(self, tolerance: float = 0.002) -> bool:
        return self.balance_imbalance() <= tolerance


def alpha_from_db_per_cm(db_per_cm: float) -> float:
    """Convert a dB/cm power loss figure to the alpha [1/m] used here."""
    return db_per_cm * 100.0 * math.log(10.0) / 10.0


@dataclass(frozen=True, eq=False)
class PropagationState:
    """Complex modal amplitudes at position z [m].

    Three modes (signal, sum, target) or five (plus the two wrong-pump
    channels).  With zero loss the total norm is conserved along z.
    """

    z_m: float
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape not in ((3,), (5,)):
            raise ValueError("amplitudes must be a length-3 or length-5 complex vector")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def single_photon_signal(cls, n_modes: int = 3) -> "PropagationState":
        """Unit amplitude in the signal mode at z = 0."""
        amps = np.zeros(n_modes, dtype=complex)
        amps[0] = 1.0
        return cls(0.0, amps)

    @property
    def powers(self) -> np.ndarray:
        """|a_i|^2 per mode."""
        return np.abs(self.amplitudes) ** 2

    @property
    def norm_squared(self) -> float:
        return float(np.sum(self.powers))


@dataclass(frozen=True)
class SpuriousCoupling:
    """Wrong-pump channel parameters for the five-mode model.

    ``mismatch1`` detunes the signal + pump2 bond, ``mismatch2`` the
    target + pump1 bond [rad/m].  The parasitic coupling strengths default
    to the strengths of the pump that drives them.
    """

    mismatch1: float
    mismatch2: float
    chi_spur1: float | None = None  # defaults to chi2 (pump 2 drives it)
    chi_spur2: float | None = None  # defaults to chi1


def build_generator(cfg: CouplingConfig, mm: PhaseMismatchSet) -> np.ndarray:
    """The 3x3 generator G of d/dz a = i G a (see module docstring).

    Hermitian for any pump phases when ``loss_alpha`` is 0; uniform loss
    adds +i*alpha/2 to every diagonal entry so that amplitudes decay.
    """
    g1 = cfg.chi1 * cfg.e1
    g2 = cfg.chi2 * cfg.e2
    d = mm.delta_k
    G = np.array(
        [
            [-d / 2.0, np.conj(g1), 0.0],
            [g1, mm.k_avg, g2],
            [0.0, np.conj(g2), d / 2.0],
        ],
        dtype=complex,
    )
    if cfg.loss_alpha != 0.0:
        G = G + 1j * (cfg.loss_alpha / 2.0) * np.eye(3)
    return G


def build_generator_extended(
    cfg: CouplingConfig, mm: PhaseMismatchSet, spur: SpuriousCoupling
) -> np.ndarray:
    """Five-mode generator: modes (signal, sum, target, spur1, spur2).

    Rows/columns 4 and 5 add the wrong-pump bonds signal<->spur1 (driven by
    pump 2) and target<->spur2 (driven by pump 1); their diagonal entries
    sit at the partner mode's phase rate plus the bond mismatch, so setting
    a mismatch to zero makes that parasitic stage fully resonant.
    """
    chi_s1 = cfg.chi2 if spur.chi_spur1 is None else spur.chi_spur1
    chi_s2 = cfg.chi1 if spur.chi_spur2 is None else spur.chi_spur2
    gs1 = chi_s1 * cfg.e2
    gs2 = chi_s2 * cfg.e1
    d = mm.delta_k
    G = np.zeros((5, 5), dtype=complex)
    G[:3, :3] = build_generator(dataclasses.replace(cfg, loss_alpha=0.0), mm)
    G[3, 3] = -d / 2.0 + spur.mismatch1
    G[4, 4] = d / 2.0 + spur.mismatch2
    G[0, 3] = np.conj(gs1)
    G[3, 0] = gs1
    G[2, 4] = np.conj(gs2)
    G[4, 2] = gs2
    if cfg.loss_alpha != 0.0:
        G = G + 1j * (cfg.loss_alpha / 2.0) * np.eye(5)
    return G


def _propagator(G: np.ndarray, z: float) -> np.ndarray:
    """exp(i G z) by exact eigendecomposition when G is Hermitian.

    Non-Hermitian generators (uniform loss, user extensions) fall back to
    scipy's scaling-and-squaring matrix exponential, accurate to ~1e-13
    for the matrix norms that occur here.
    """
    if np.array_equal(G, G.conj().T) or np.allclose(G, G.conj().T, rtol=0.0, atol=1e-14):
        w, V = eigh(G)
        return (V * np.exp(1j * w * z)) @ V.conj().T
    return expm(1j * z * G)


def propagate_analytic(
    cfg: CouplingConfig, mm: PhaseMismatchSet, state: PropagationState, z: float
) -> PropagationState:
    """Exact propagation of a 3-mode state from state.z_m to z."""
    if state.amplitudes.shape != (3,):
        raise ValueError("propagate_analytic expects a 3-mode state")
    G = build_generator(cfg, mm)
    U = _propagator(G, z - state.z_m)
    return PropagationState(z, U @ state.amplitudes)


def propagate_extended(
    cfg: CouplingConfig,
    mm: PhaseMismatchSet,
    spur: SpuriousCoupling,
    state: PropagationState,
    z: float,
) -> PropagationState:
    """Exact propagation of a 5-mode state (wrong-pump channels included)."""
    if state.amplitudes.shape != (5,):
        raise ValueError("propagate_extended expects a 5-mode state")
    G = build_generator_extended(cfg, mm, spur)
    U = _propagator(G, z - state.z_m)
    return PropagationState(z, U @ state.amplitudes)


def propagate_numeric(
    cfg: CouplingConfig,
    mm: PhaseMismatchSet,
    state: PropagationState,
    z: float,
    tol: float = 1e-9,
    spur: SpuriousCoupling | None = None,
) -> PropagationState:
    """Adaptive Runge-Kutta integration of the same linear system.

    Independent verification path for :func:`propagate_analytic` /
    :func:`propagate_extended`; agreement is expected within ~10*tol.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if spur is not None:
        G = build_generator_extended(cfg, mm, spur)
    elif state.amplitudes.shape == (3,):
        G = build_generator(cfg, mm)
    else:
        raise ValueError("5-mode states need the spurious coupling argument")
    M = 1j * G

    def rhs(_z, y):
        return M @ y

    if z == state.z_m:
        return PropagationState(z, state.amplitudes.copy())
    sol = solve_ivp(
        rhs,
        (state.z_m, z),
        state.amplitudes,
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3,
    )
    if not sol.success:
        raise IntegrationError(f"ODE integration failed: {sol.message}")
    return PropagationState(z, sol.y[:, -1])


def trajectory(
    cfg: CouplingConfig,
    mm: PhaseMismatchSet,
    state: PropagationState,
    z_points: np.ndarray,
    spur: SpuriousCoupling | None = None,
) -> np.ndarray:
    """Tabulated propagation: columns are z, |a_i|^2 per mode, phase per mode."""
    if spur is not None:
        G = build_generator_extended(cfg, mm, spur)
    else:
        G = build_generator(cfg, mm)
    rows = []
    for z in np.asarray(z_points, dtype=float):
        amps = _propagator(G, z - state.z_m) @ state.amplitudes
        rows.append([z, *np.abs(amps) ** 2, *np.angle(amps)])
    return np.asarray(rows)


@dataclass(frozen=True)
class EfficiencyResult:
    """Closed-form conversion efficiency and its first-branch ceiling.

    ``resonance_argument`` is L/4 * sqrt(delta_k^2 + 4Q); the first
    resonance sits at pi/2.  ``eta`` can exceed ``eta_max`` slightly when
    driven past the first resonance (see module docstring); ``eta_max``
    is the ceiling attained exactly at resonance.
    """

    eta: float
    eta_max: float
    resonance_argument: float

    def __post_init__(self):
        if not (0.0 <= self.eta <= 1.0 + 1e-12):
            raise ValueError(f"eta out of range: {self.eta}")


def efficiency_formula(delta_k: float, q: float, length_m: float) -> float:
    """eta = 16 Q^2/(delta_k^2+4Q)^2 * sin^4(L/4 sqrt(delta_k^2+4Q)).

    Valid when the average mismatch is poled away and the pumps are
    balanced; :func:`conversion_efficiency` enforces those premises.
    """
    if q == 0.0:
        return 0.0
    s = delta_k**2 + 4.0 * q
    return 16.0 * q**2 / s**2 * math.sin(length_m / 4.0 * math.sqrt(s)) ** 4


def max_efficiency(
    delta_k: float,
    length_m: float,
    m: int = 0,
    on_out_of_regime: str = "warn",
) -> float:
    """Conversion ceiling (1 - delta_k^2 L^2 / (4 pi^2 (1+2m)^2))^2.

    The branch index m counts resonances; m = 0 is the first (lowest
    power) one, admissible while delta_k^2 L^2 <= 4 pi^2 (1+2m)^2.  When
    the requested branch is inadmissible, either raises
    :class:`CalibrationError` (``on_out_of_regime="raise"``) or warns and
    returns the ceiling of the smallest admissible branch.
    """
    x = (delta_k * length_m) ** 2 / (4.0 * math.pi**2)
    admissible = x <= (1 + 2 * m) ** 2
    if not admissible:
        if on_out_of_regime == "raise":
            raise CalibrationError(
                f"delta_k*L = {abs(delta_k) * length_m:.4g} rad exceeds the "
                f"branch-{m} admissibility bound {2 * math.pi * (1 + 2 * m):.4g}"
            )
        m_min = math.ceil((math.sqrt(x) - 1.0) / 2.0)
        warnings.warn(
            f"branch m={m} inadmissible for delta_k*L = "
            f"{abs(delta_k) * length_m:.4g}; using m={m_min}",
            EfficiencyRegimeWarning,
            stacklevel=2,
        )
        m = m_min
    return (1.0 - x / (1 + 2 * m) ** 2) ** 2


def resonant_coupling_rate(delta_k: float, length_m: float, m: int = 0) -> float:
    """Q at which the branch-m resonance condition holds [rad^2/m^2].

    Solves L/4 * sqrt(delta_k^2 + 4Q) = pi/2 + m*pi for Q.
    """
    q = (math.pi * (1 + 2 * m) / length_m) ** 2 - delta_k**2 / 4.0
    if q < 0.0:
        raise CalibrationError(
            f"no branch-{m} resonance: delta_k*L = {abs(delta_k) * length_m:.4g} "
            f"exceeds {2 * math.pi * (1 + 2 * m):.4g}"
        )
    return q


def conversion_efficiency(
    cfg: CouplingConfig,
    mm: PhaseMismatchSet,
    balance_tolerance: float = 0.002,
) -> EfficiencyResult:
    """Closed-form efficiency of a balanced, average-compensated conversion.

    Raises :class:`BalanceError` when chi1^2 P1 and chi2^2 P2 differ by
    more than ``balance_tolerance`` (relative); unbalanced configurations
    are handled exactly by :func:`propagate_analytic`, which has no balance
    requirement.
    """
    imbalance = cfg.balance_imbalance()
    if imbalance > balance_tolerance:
        raise BalanceError(
            f"pump powers unbalanced by {imbalance:.3%} (tolerance "
            f"{balance_tolerance:.3%}); use propagate_analytic for the "
            "unbalanced case"
        )
    q = cfg.q
    eta = efficiency_formula(mm.delta_k, q, cfg.length_m)
    ceiling = max_efficiency(mm.delta_k, cfg.length_m, on_out_of_regime="warn")
    arg = cfg.length_m / 4.0 * math.sqrt(mm.delta_k**2 + 4.0 * q)
    return EfficiencyResult(eta=eta, eta_max=ceiling, resonance_argument=arg)
