"""Secular electron-nuclear Hamiltonian and its conditional-rotation algebra.

The two-spin Hamiltonian (angular frequencies throughout, hbar = 1) is

    H = 2 S_z (A_par I_z + A_perp I_x) + omega_l I_z
      = |0><0| (x) H_plus + |1><1| (x) H_minus,
    H_pm = (+-A_par + omega_l) I_z +- A_perp I_x,

so the nuclear spin precesses about the axis ``m_pm`` at ``omega_pm``
conditioned on the electron state.  Interleaving free evolution with electron
pi-pulses turns this conditional precession into an effective conditional
rotation about nearly antiparallel axes ``q_pm`` by an angle ``alpha`` per
pulse; this module computes those quantities both exactly (by composing the
rotations) and in the strong-field approximation.

Unit convention: every frequency in this package is angular (rad/s).  Use
``HyperfineParams.from_khz`` at the boundary; reports and the CLI convert
back to ordinary kHz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .qmat import (
    SIGMA_X,
    SIGMA_Z,
    IDENT2,
    ArgumentError,
    AxisAngle,
    DomainError,
    compose_axis_angle,
    expm_hermitian,
    rotation_matrix,
    tensor,
)

__all__ = [
    "ConditionalPrecession",
    "DDBlockResult",
    "HyperfineParams",
    "REFERENCE_PARAMS",
    "PI_PULSE_DURATION",
    "alpha_closed_form",
    "antiparallel_residual",
    "conditional_hamiltonians",
    "dd_block",
    "free_propagator",
    "full_hamiltonian",
    "resonance_times",
    "xyn_propagator",
]

_KHZ = 2.0 * np.pi * 1e3

# Finite microwave pi-pulse duration; carried as metadata for timing budgets
# only, pulses are ideal and instantaneous in the propagators.
PI_PULSE_DURATION = 31e-9

_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)
_IZ = SIGMA_Z / 2.0
_IX = SIGMA_X / 2.0


@dataclass(frozen=True)
class HyperfineParams:
    """Secular coupling parameters, angular rad/s.

    ``a_par`` is signed (its sign is not fixed by the difference-frequency
    measurement, so callers must treat both branches explicitly); ``a_perp``
    is gauge-fixed nonnegative; ``omega_l`` is the bare nuclear precession
    frequency and must be positive.
    """

    a_par: float
    a_perp: float
    omega_l: float

    def __post_init__(self):
        if self.a_perp < 0:
            raise DomainError("a_perp must be >= 0 (x-axis gauge)")
        if self.omega_l <= 0:
            raise DomainError("omega_l must be > 0")

    @classmethod
    def from_khz(cls, a_par_khz: float, a_perp_khz: float,
                 omega_l_khz: float) -> "HyperfineParams":
        return cls(a_par_khz * _KHZ, a_perp_khz * _KHZ, omega_l_khz * _KHZ)

    def as_khz(self) -> tuple[float, float, float]:
        return (self.a_par / _KHZ, self.a_perp / _KHZ, self.omega_l / _KHZ)

    def with_shift(self, omega_l_shift: float) -> "HyperfineParams":
        """Same couplings with the precession frequency shifted (rad/s)."""
        return HyperfineParams(self.a_par, self.a_perp,
                               self.omega_l + omega_l_shift)

    def flipped_sign(self) -> "HyperfineParams":
        return HyperfineParams(-self.a_par, self.a_perp, self.omega_l)


# Coupling parameters of the register studied throughout the test-suite and
# demos: (|A_par|, A_perp, omega_l) = 2*pi*(19.4, 50.5, 567.4) kHz.
REFERENCE_PARAMS = HyperfineParams.from_khz(19.4, 50.5, 567.4)


@dataclass(frozen=True)
class ConditionalPrecession:
    """Electron-conditioned nuclear precession frequencies and axes."""

    omega_plus: float
    omega_minus: float
    m_plus: np.ndarray
    m_minus: np.ndarray
    gamma_axes: float   # angle between m_plus and m_minus, radians

    @property
    def omega_0(self) -> float:
        return 0.5 * (self.omega_plus + self.omega_minus)

    @property
    def omega_delta(self) -> float:
        return 0.5 * (self.omega_plus - self.omega_minus)


def conditional_hamiltonians(
        p: HyperfineParams) -> tuple[np.ndarray, np.ndarray,
                                     ConditionalPrecession]:
    """2x2 nuclear Hamiltonians for each electron state, plus axis data."""
    h_plus = (p.a_par + p.omega_l) * _IZ + p.a_perp * _IX
    h_minus = (-p.a_par + p.omega_l) * _IZ - p.a_perp * _IX
    wp = np.hypot(p.omega_l + p.a_par, p.a_perp)
    wm = np.hypot(p.omega_l - p.a_par, p.a_perp)
    m_plus = np.array([p.a_perp, 0.0, p.omega_l + p.a_par]) / wp
    m_minus = np.array([-p.a_perp, 0.0, p.omega_l - p.a_par]) / wm
    gamma = float(np.arccos(np.clip(np.dot(m_plus, m_minus), -1.0, 1.0)))
    return h_plus, h_minus, ConditionalPrecession(wp, wm, m_plus, m_minus,
                                                  gamma)


def full_hamiltonian(p: HyperfineParams) -> np.ndarray:
    """4x4 two-spin Hamiltonian, electron leftmost."""
    h_plus, h_minus, _ = conditional_hamiltonians(p)
    return tensor(_P0, h_plus) + tensor(_P1, h_minus)


def free_propagator(p: HyperfineParams, t: float) -> np.ndarray:
    """Exact 4x4 free-evolution propagator for duration ``t``."""
    return expm_hermitian(full_hamiltonian(p), t)


@dataclass(frozen=True)
class DDBlockResult:
    """Effective rotations of one (tau - pi - 2tau - pi - tau) block.

    ``v_plus/v_minus`` are the half-block nuclear rotations, ``q_plus`` and
    ``q_minus`` the full-block rotation axes (rotation angle ``2 * alpha``),
    and the exact 4x4 propagators are included for oracle checks.
    """

    v_plus: AxisAngle
    v_minus: AxisAngle
    q_plus: AxisAngle
    q_minus: AxisAngle
    alpha: float
    half_block_unitary: np.ndarray
    block_unitary: np.ndarray


def dd_block(p: HyperfineParams, tau: float) -> DDBlockResult:
    """Axis-angle algebra of the basic decoupling block at half-spacing ``tau``."""
    if tau <= 0:
        raise DomainError("tau must be > 0")
    _, _, cp = conditional_hamiltonians(p)
    u_plus = AxisAngle(cp.m_plus, cp.omega_plus * tau)
    u_minus = AxisAngle(cp.m_minus, cp.omega_minus * tau)
    v_plus = compose_axis_angle(u_plus, u_minus)
    v_minus = compose_axis_angle(u_minus, u_plus)
    w_plus = compose_axis_angle(v_plus, v_minus)
    w_minus = compose_axis_angle(v_minus, v_plus)
    alpha = 0.5 * w_plus.angle

    u_free = free_propagator(p, tau)
    pi_x = tensor(rotation_matrix([1, 0, 0], np.pi), IDENT2)
    half = u_free @ pi_x @ u_free
    return DDBlockResult(v_plus, v_minus, w_plus, w_minus, alpha,
                         half, half @ half)


def alpha_closed_form(p: HyperfineParams) -> float:
    """Strong-field rotation per pi-pulse, ``2 A_perp omega_l / (w+ w-)``."""
    _, _, cp = conditional_hamiltonians(p)
    return 2.0 * p.a_perp * p.omega_l / (cp.omega_plus * cp.omega_minus)


def antiparallel_residual(p: HyperfineParams, tau: float) -> float:
    """Deviation from the maximal-entanglement condition at half-spacing tau.

    Returns ``cos(phi+/2) cos(phi-/2) - sin(phi+/2) sin(phi-/2) cos(gamma)``
    which vanishes exactly when the block axes ``q_pm`` are antiparallel.
    Sign changes of this residual bracket each resonance.
    """
    if tau <= 0:
        raise DomainError("tau must be > 0")
    _, _, cp = conditional_hamiltonians(p)
    hp = 0.5 * cp.omega_plus * tau
    hm = 0.5 * cp.omega_minus * tau
    return float(np.cos(hp) * np.cos(hm)
                 - np.sin(hp) * np.sin(hm) * np.cos(cp.gamma_axes))


def _refine_spacing(p: HyperfineParams, spacing: float) -> float:
    # Bisection bracket of +-10% around the strong-field value; the residual
    # changes sign across each resonance.
    lo, hi = 0.45 * spacing, 0.55 * spacing
    f_lo, f_hi = antiparallel_residual(p, lo), antiparallel_residual(p, hi)
    if f_lo * f_hi > 0:
        raise DomainError("no resonance root inside +-10% bracket")
    tau = brentq(lambda t: antiparallel_residual(p, t), lo, hi,
                 xtol=1e-6 * spacing)
    return 2.0 * tau


def resonance_times(p: HyperfineParams, m_max: int,
                    refine: bool = False) -> np.ndarray:
    """Inter-pulse spacings ``2 tau`` of the decoupling resonances m = 0..m_max.

    The strong-field approximation gives ``2 tau = (pi + 2 pi m) / omega_0``;
    with ``refine=True`` each value is polished to the root of
    :func:`antiparallel_residual` (relative tolerance 1e-6).
    """
    if m_max < 0:
        raise ArgumentError("m_max must be >= 0")
    _, _, cp = conditional_hamiltonians(p)
    m = np.arange(m_max + 1)
    spacings = (np.pi + 2.0 * np.pi * m) / cp.omega_0
    if refine:
        spacings = np.array([_refine_spacing(p, s) for s in spacings])
    return spacings


_XY8_AXES = ("x", "y", "x", "y", "y", "x", "y", "x")
_AXIS_VECS = {"x": np.array([1.0, 0.0, 0.0]), "y": np.array([0.0, 1.0, 0.0])}


def xy_pulse_axes(n_pulses: int) -> tuple[str, ...]:
    """x/y phase pattern of an XY-N sequence (metadata; ideal pulses are
    phase-insensitive at the propagator level)."""
    reps = -(-n_pulses // 8)
    return (_XY8_AXES * reps)[:n_pulses]


def xyn_propagator(p: HyperfineParams, tau: float, n_pulses: int) -> np.ndarray:
    """Exact 4x4 propagator of ``(tau - pi - tau)^N`` with ideal pi-pulses.

    For even ``N`` this is block diagonal in the electron basis and equals
    ``|0><0| (x) R(N alpha) + |1><1| (x) R(-N alpha)`` about the effective
    axes; at resonance with ``N alpha = pi/2`` it is the maximally entangling
    conditional rotation.
    """
    if n_pulses < 2 or n_pulses % 2 != 0:
        raise ArgumentError("n_pulses must be even and >= 2")
    if tau <= 0:
        raise DomainError("tau must be > 0")
    u_free = free_propagator(p, tau)
    u = np.eye(4, dtype=complex)
    for axis in xy_pulse_axes(n_pulses):
        pulse = tensor(rotation_matrix(_AXIS_VECS[axis], np.pi), IDENT2)
        u = u_free @ pulse @ u_free @ u
    return u
