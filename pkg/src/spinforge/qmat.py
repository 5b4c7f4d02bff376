"""Dense complex linear algebra for small spin Hilbert spaces.

Everything here operates on plain ``numpy`` arrays of complex128 ("CMatrix"),
dimension 2, 4, 8 or 16 (one to four spins-1/2).  Conventions, fixed for the
whole package:

- basis ordering: ``|0> = |up>`` is the first basis state of every qubit,
- tensor ordering: electron is the leftmost factor, then the nuclear spin,
  then any auxiliary spins,
- rotations: ``AxisAngle(axis, angle)`` represents the SU(2) element
  ``exp(-i * angle/2 * axis.sigma)``; the global phase is quotiented out
  everywhere, so the canonical angle lives in ``[0, pi]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ArgumentError",
    "AxisAngle",
    "DensityMatrix",
    "DimensionError",
    "DomainError",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "IDENT2",
    "axis_angle_of_su2",
    "compose_axis_angle",
    "expm_hermitian",
    "is_hermitian",
    "partial_trace",
    "rotation_matrix",
    "tensor",
]


class DomainError(ValueError):
    """Input violates a mathematical precondition (non-Hermitian, non-PSD...)."""


class DimensionError(ValueError):
    """Operands have incompatible or unsupported dimensions."""


class ArgumentError(ValueError):
    """Argument outside the supported set (odd pulse count, ragged grid...)."""


SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENT2 = np.eye(2, dtype=complex)

_ALLOWED_DIMS = (2, 4, 8, 16)
_Z_AXIS = np.array([0.0, 0.0, 1.0])


def _check_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] not in _ALLOWED_DIMS:
        raise DimensionError(
            f"dimension {m.shape[0]} unsupported (allowed: {_ALLOWED_DIMS})")
    return m


def is_hermitian(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) < tol)


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """Unitary ``exp(-i h t)`` of a Hermitian generator, by eigendecomposition.

    ``t`` may be negative (time-reversed propagation).  Raises
    :class:`DomainError` if ``h`` is not Hermitian to 1e-10.
    """
    h = _check_square(h)
    if not is_hermitian(h):
        raise DomainError("generator is not Hermitian within 1e-10")
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; left operand acts on the leftmost subsystem."""
    a = _check_square(a)
    b = _check_square(b)
    if a.shape[0] * b.shape[0] not in _ALLOWED_DIMS:
        raise DimensionError("tensor result exceeds supported dimensions")
    return np.kron(a, b)


def partial_trace(m: np.ndarray, subsystem_index: int) -> np.ndarray:
    """Trace out the qubit at ``subsystem_index`` (0 = leftmost factor)."""
    m = _check_square(m)
    n = int(np.log2(m.shape[0]))
    if not 0 <= subsystem_index < n:
        raise DimensionError(
            f"subsystem_index {subsystem_index} out of range for {n} qubits")
    t = m.reshape((2,) * (2 * n))
    t = np.trace(t, axis1=subsystem_index, axis2=n + subsystem_index)
    return t.reshape(2 ** (n - 1), 2 ** (n - 1))


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """SU(2) rotation ``exp(-i angle/2 axis.sigma)`` about a (normalized) axis."""
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        raise DomainError("rotation axis must be nonzero")
    n = axis / norm
    return (np.cos(angle / 2) * IDENT2
            - 1j * np.sin(angle / 2) * (n[0] * SIGMA_X + n[1] * SIGMA_Y
                                        + n[2] * SIGMA_Z))


def _canonical(axis: np.ndarray, angle: float) -> tuple[np.ndarray, float]:
    # Fold into the projective canonical form: angle in [0, pi], unit axis;
    # angle 0 gets the conventional z axis, angle pi a fixed axis sign.
    angle = float(np.mod(angle, 4.0 * np.pi))
    if angle > 2.0 * np.pi:
        angle -= 4.0 * np.pi
    if angle < 0.0:
        angle, axis = -angle, -axis
    if angle > np.pi:  # rotation by angle about n == (2pi - angle) about -n
        angle, axis = 2.0 * np.pi - angle, -axis
    if angle < 1e-14:
        return _Z_AXIS.copy(), 0.0
    if abs(angle - np.pi) < 1e-14:
        for c in axis:
            if abs(c) > 1e-12:
                if c < 0:
                    axis = -axis
                break
    return axis, angle


@dataclass(frozen=True)
class AxisAngle:
    """Rotation by ``angle`` about the unit vector ``axis`` (canonicalized)."""

    axis: np.ndarray
    angle: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        angle = float(self.angle)
        norm = np.linalg.norm(axis)
        if abs(np.mod(angle + np.pi, 2 * np.pi) - np.pi) > 1e-14 and norm == 0:
            raise DomainError("nonzero rotation needs a nonzero axis")
        if norm > 0:
            axis = axis / norm
        else:
            axis = _Z_AXIS.copy()
        axis, angle = _canonical(axis, angle)
        axis.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "angle", angle)

    def as_matrix(self) -> np.ndarray:
        return rotation_matrix(self.axis, self.angle)

    def inverse(self) -> "AxisAngle":
        return AxisAngle(-self.axis, self.angle)

    def isclose(self, other: "AxisAngle", tol: float = 1e-10) -> bool:
        """Projective comparison through the matrix representation."""
        a, b = self.as_matrix(), other.as_matrix()
        return min(np.max(np.abs(a - b)), np.max(np.abs(a + b))) < tol


def compose_axis_angle(r1: AxisAngle, r2: AxisAngle) -> AxisAngle:
    """Axis-angle of the product ``r1 * r2`` (r2 acts first).

    Uses the half-angle product identity
    ``cos a = cos a1 cos a2 - sin a1 sin a2 (p1.p2)`` and
    ``p sin a = sin a1 sin a2 (p1 x p2) + sin a1 cos a2 p1 + sin a2 cos a1 p2``
    with ``a_i = angle_i / 2``, then canonicalizes.
    """
    h1, h2 = r1.angle / 2.0, r2.angle / 2.0
    p1, p2 = r1.axis, r2.axis
    c = np.cos(h1) * np.cos(h2) - np.sin(h1) * np.sin(h2) * np.dot(p1, p2)
    v = (np.sin(h1) * np.sin(h2) * np.cross(p1, p2)
         + np.sin(h1) * np.cos(h2) * p1
         + np.sin(h2) * np.cos(h1) * p2)
    s = np.linalg.norm(v)
    if s < 1e-15:
        return AxisAngle(_Z_AXIS, 0.0 if c > 0 else 2.0 * np.pi)
    return AxisAngle(v / s, 2.0 * np.arctan2(s, c))


def axis_angle_of_su2(u: np.ndarray) -> AxisAngle:
    """Extract the axis-angle of a 2x2 unitary, quotienting the global phase."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise DimensionError("axis_angle_of_su2 expects a 2x2 matrix")
    w = np.trace(u) / 2.0
    v = 1j * np.array([np.trace(SIGMA_X @ u),
                       np.trace(SIGMA_Y @ u),
                       np.trace(SIGMA_Z @ u)]) / 2.0
    # u = e^{i phi} (w0 I - i v0.sigma); remove phi by rotating the largest
    # component of the quaternion (w, v) onto the real axis.
    quat = np.concatenate([[w], v])
    pivot = quat[np.argmax(np.abs(quat))]
    if abs(pivot) < 1e-15:
        raise DomainError("matrix is not proportional to a unitary")
    quat = quat / (pivot / abs(pivot))
    w0, v0 = quat[0].real, quat[1:].real
    s = np.linalg.norm(v0)
    if s < 1e-15:
        return AxisAngle(_Z_AXIS, 0.0)
    return AxisAngle(v0 / s, 2.0 * np.arctan2(s, w0))


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix: Hermitian, unit trace, PSD (to tolerance)."""

    mat: np.ndarray
    _htol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        m = _check_square(self.mat)
        if np.max(np.abs(m - m.conj().T)) > self._htol:
            raise DomainError("density matrix is not Hermitian within 1e-10")
        if abs(np.trace(m) - 1.0) > 1e-10:
            raise DomainError("density matrix trace differs from 1 by > 1e-10")
        if np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) < -1e-9:
            raise DomainError("density matrix has an eigenvalue below -1e-9")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def pure(cls, ket) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    def expectation(self, op: np.ndarray) -> float:
        return float(np.real(np.trace(self.mat @ op)))

    def evolve(self, u: np.ndarray) -> "DensityMatrix":
        return DensityMatrix(u @ self.mat @ u.conj().T)
