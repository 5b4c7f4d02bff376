"""Trace-preserving channel models for the state-transfer experiment.

Channels act on the two-spin (electron x nucleus) density matrix and are
stored as 16x16 superoperators in the row-major vec convention
(``vec(A rho B) = (A (x) B^T) vec(rho)``); Kraus operators are extracted on
demand from the Choi matrix.

Model summary (all defaults overridable):

- The nuclear precession frequency is classically averaged over four static
  detunings (two environmental couplings give ``+-A1 +- A2``).
- Electron pure dephasing is a Lindblad z-term with coherence decay
  ``exp(-t/T2)``, ``T2 = 16.1 us`` (the decoupled value).  By default it is
  applied during the undecoupled free-precession waits of the transfer gate
  only; the decoupling blocks are compiled as exact unitaries because the
  pulse train refocuses the slow bath (a white-noise z-term inside the
  blocks, available via ``dephase_during_blocks=True``, double-counts that
  noise and is pessimistic by design).
- Optical excitation is projective per pulse: the addressed electron state
  evolves under the excited-state Hamiltonian for an exponentially
  distributed decay time inside the collection window, which dephases the
  nucleus through the ground/excited hyperfine difference.  Spin flips from
  finite cyclicity are a per-pulse classical branching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm as _expm

from . import hyperfine as hf
from .qmat import (
    IDENT2,
    SIGMA_X,
    SIGMA_Z,
    DensityMatrix,
    DimensionError,
    DomainError,
    rotation_matrix,
    tensor,
)

__all__ = [
    "LarmorEnsemble",
    "OpticalParams",
    "PipelineResult",
    "QuantumChannel",
    "SwapExperimentResult",
    "SwapGateResult",
    "coherence_factor",
    "computational_swap_fidelity",
    "dephasing_purity",
    "excitation_channel",
    "free_evolution_channel",
    "iswap_from_swap",
    "readout_pipeline",
    "swap_channel",
    "swap_experiment",
    "swap_unitary",
    "t1_bound",
]

_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)
_KHZ = 2.0 * np.pi * 1e3


def _vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1)


def _unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return v.reshape(d, d)


@dataclass(frozen=True)
class QuantumChannel:
    """CPTP map stored as a superoperator (row-major vec convention)."""

    sop: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sop, dtype=complex)
        d2 = s.shape[0]
        if s.ndim != 2 or s.shape[0] != s.shape[1] or int(np.sqrt(d2)) ** 2 != d2:
            raise DimensionError("superoperator must be d^2 x d^2")
        object.__setattr__(self, "sop", s)

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.sop.shape[0])))

    @classmethod
    def from_kraus(cls, kraus_ops) -> "QuantumChannel":
        ops = [np.asarray(k, dtype=complex) for k in kraus_ops]
        s = sum(np.kron(k, k.conj()) for k in ops)
        return cls(s)

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "QuantumChannel":
        return cls.from_kraus([u])

    @classmethod
    def identity(cls, dim: int) -> "QuantumChannel":
        return cls(np.eye(dim * dim, dtype=complex))

    def apply(self, rho) -> np.ndarray:
        mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
        return _unvec(self.sop @ _vec(mat))

    def __matmul__(self, other: "QuantumChannel") -> "QuantumChannel":
        # (a @ b) applies b first, matching superoperator multiplication
        return QuantumChannel(self.sop @ other.sop)

    def power(self, n: int) -> "QuantumChannel":
        return QuantumChannel(np.linalg.matrix_power(self.sop, n))

    def choi(self) -> np.ndarray:
        d = self.dim
        s4 = self.sop.reshape(d, d, d, d)
        return s4.transpose(2, 0, 3, 1).reshape(d * d, d * d)

    def kraus_ops(self, tol: float = 1e-12) -> list[np.ndarray]:
        d = self.dim
        evals, evecs = np.linalg.eigh((self.choi() + self.choi().conj().T) / 2)
        ops = []
        for lam, vec in zip(evals, evecs.T):
            if lam > tol:
                ops.append(np.sqrt(lam) * vec.reshape(d, d).T)
        return ops

    def is_trace_preserving(self, tol: float = 1e-8) -> bool:
        d = self.dim
        ident_bra = _vec(np.eye(d))
        return bool(np.max(np.abs(ident_bra @ self.sop - ident_bra)) < tol)

    def min_choi_eigenvalue(self) -> float:
        c = self.choi()
        return float(np.min(np.linalg.eigvalsh((c + c.conj().T) / 2)))

    def is_completely_positive(self, tol: float = -1e-8) -> bool:
        return self.min_choi_eigenvalue() > tol


def free_evolution_channel(p: hf.HyperfineParams, duration: float,
                           dephasing_t2: float | None = None,
                           omega_l_shift: float = 0.0) -> QuantumChannel:
    """Lindblad free-evolution step: coherent two-spin evolution plus
    optional electron z-dephasing at rate ``1/dephasing_t2``."""
    if duration < 0:
        raise DomainError("channel durations must be nonnegative")
    h = hf.full_hamiltonian(p.with_shift(omega_l_shift))
    if dephasing_t2 is None or not np.isfinite(dephasing_t2):
        evals, evecs = np.linalg.eigh(h)
        u = (evecs * np.exp(-1j * evals * duration)) @ evecs.conj().T
        return QuantumChannel.from_unitary(u)
    ident = np.eye(4)
    lind = -1j * (np.kron(h, ident) - np.kron(ident, h.T))
    lop = tensor(SIGMA_Z, IDENT2)
    g = 1.0 / (2.0 * dephasing_t2)
    lind = lind + g * (np.kron(lop, lop.conj()) - np.eye(16))
    return QuantumChannel(_expm(lind * duration))


@dataclass(frozen=True)
class LarmorEnsemble:
    """Static nuclear-precession detunings with classical weights (rad/s)."""

    detunings: tuple
    weights: tuple

    def __post_init__(self):
        det = tuple(float(d) for d in self.detunings)
        w = tuple(float(x) for x in self.weights)
        if len(det) != len(w) or not det:
            raise DimensionError("detunings and weights must match, nonempty")
        if abs(sum(w) - 1.0) > 1e-12:
            raise DomainError("ensemble weights must sum to 1")
        object.__setattr__(self, "detunings", det)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_couplings(cls, a1: float, a2: float) -> "LarmorEnsemble":
        """Four equally weighted shifts ``+-a1 +- a2`` (rad/s inputs)."""
        det = (a1 + a2, a2 - a1, a1 - a2, -a1 - a2)
        return cls(det, (0.25,) * 4)

    @classmethod
    def single(cls, detuning: float = 0.0) -> "LarmorEnsemble":
        return cls((detuning,), (1.0,))

    def scaled(self, factor: float) -> "LarmorEnsemble":
        return LarmorEnsemble(tuple(d * factor for d in self.detunings),
                              self.weights)


# Default environmental couplings 2.25 kHz and 7.18 kHz give the four
# detunings +-4.93, +-9.43 kHz.
DEFAULT_ENSEMBLE = LarmorEnsemble.from_couplings(2.25 * _KHZ, 7.18 * _KHZ)


# ---------------------------------------------------------------------------
# state-transfer gate

@dataclass(frozen=True)
class SwapGateResult:
    unitary: np.ndarray
    n_alpha: float               # conditional rotation per block, N * alpha
    tau0: float
    off_resonance_warning: bool  # N*alpha misses pi/2 by more than 20%


def _ideal_cond_rx(angle: float) -> np.ndarray:
    return (tensor(_P0, rotation_matrix([1, 0, 0], angle))
            + tensor(_P1, rotation_matrix([1, 0, 0], -angle)))


def swap_unitary(p: hf.HyperfineParams, tau0: float | None = None,
                 n_pulses: int = 8, ideal: bool = False) -> SwapGateResult:
    """Two-spin state-transfer unitary built from three conditional-rotation
    blocks and single-qubit rotations.

    The nuclear z-rotations are realized by free precession for one
    half-spacing ``tau0`` (a pi/2 precession phase); electron pulses are
    applied right after each block, then the wait follows.  With
    ``ideal=True`` the blocks are exact conditional ``R_x(+-pi/2)`` and the
    z-rotations exact, reproducing the permutation-with-phases target matrix.
    """
    if tau0 is None:
        tau0 = 0.5 * hf.resonance_times(p, 0, refine=True)[0]
    blk = hf.dd_block(p, tau0)
    n_alpha = n_pulses * blk.alpha
    warning = abs(n_alpha - np.pi / 2) > 0.2 * (np.pi / 2)
    if ideal:
        u_block = _ideal_cond_rx(np.pi / 2)
        u_zwait = tensor(IDENT2, rotation_matrix([0, 0, 1], np.pi / 2))
    else:
        u_block = hf.xyn_propagator(p, tau0, n_pulses)
        u_zwait = hf.free_propagator(p, tau0)
    rx = tensor(rotation_matrix([1, 0, 0], np.pi / 2), IDENT2)
    ry = tensor(rotation_matrix([0, 1, 0], -np.pi / 2), IDENT2)
    u = u_block @ u_zwait @ ry @ u_block @ u_zwait @ rx @ u_block
    return SwapGateResult(u, n_alpha, tau0, warning)


def iswap_from_swap(u_swap: np.ndarray) -> np.ndarray:
    """Frame the transfer unitary with z-rotations to the iSWAP form."""
    pre = tensor(rotation_matrix([0, 0, 1], np.pi),
                 rotation_matrix([0, 0, 1], np.pi / 4))
    post = tensor(rotation_matrix([0, 0, 1], 5 * np.pi / 4), IDENT2)
    return post @ u_swap @ pre


def _xy_block_channel(p: hf.HyperfineParams, tau0: float, n_pulses: int,
                      shift: float, dephasing_t2, dephase_blocks: bool
                      ) -> QuantumChannel:
    t2 = dephasing_t2 if dephase_blocks else None
    f_tau = free_evolution_channel(p, tau0, t2, shift)
    f_2tau = free_evolution_channel(p, 2 * tau0, t2, shift)
    chan = f_tau
    axes = hf.xy_pulse_axes(n_pulses)
    for i, axis in enumerate(axes):
        vec = {"x": [1, 0, 0], "y": [0, 1, 0]}[axis]
        pulse = QuantumChannel.from_unitary(
            tensor(rotation_matrix(vec, np.pi), IDENT2))
        chan = pulse @ chan
        chan = (f_2tau if i < len(axes) - 1 else f_tau) @ chan
    return chan


def swap_channel(p: hf.HyperfineParams, ens: LarmorEnsemble = DEFAULT_ENSEMBLE,
                 dephasing_t2: float | None = 16.1e-6,
                 tau0: float | None = None, n_pulses: int = 8,
                 dephase_during_blocks: bool = False) -> QuantumChannel:
    """Transfer-gate channel averaged over the detuning ensemble.

    Each ensemble branch compiles the gate decomposition with the branch's
    shifted precession frequency; electron dephasing follows the model
    described in the module docstring.
    """
    if tau0 is None:
        tau0 = 0.5 * hf.resonance_times(p, 0, refine=True)[0]
    rx = QuantumChannel.from_unitary(
        tensor(rotation_matrix([1, 0, 0], np.pi / 2), IDENT2))
    ry = QuantumChannel.from_unitary(
        tensor(rotation_matrix([0, 1, 0], -np.pi / 2), IDENT2))
    total = np.zeros((16, 16), dtype=complex)
    for det, w in zip(ens.detunings, ens.weights):
        blockc = _xy_block_channel(p, tau0, n_pulses, det, dephasing_t2,
                                   dephase_during_blocks)
        zwait = free_evolution_channel(p, tau0, dephasing_t2, det)
        branch = blockc @ zwait @ ry @ blockc @ zwait @ rx @ blockc
        total += w * branch.sop
    return QuantumChannel(total)


def computational_swap_fidelity(channel: QuantumChannel) -> float:
    """Mean probability that a computational basis state ``|ab>`` is read out
    as ``|ba>`` after the channel."""
    kets = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    fid = 0.0
    for a in (0, 1):
        for b in (0, 1):
            rho = tensor(np.outer(kets[a], kets[a]).astype(complex),
                         np.outer(kets[b], kets[b]).astype(complex))
            target = tensor(np.outer(kets[b], kets[b]).astype(complex),
                            np.outer(kets[a], kets[a]).astype(complex))
            fid += np.real(np.trace(channel.apply(rho) @ target)) / 4.0
    return float(fid)


# ---------------------------------------------------------------------------
# optical excitation / readout / initialization

@dataclass(frozen=True)
class OpticalParams:
    """Optical-cycle parameters plus the ground/excited coupling parameters."""

    ground: hf.HyperfineParams
    excited: hf.HyperfineParams
    t1_op: float = 60e-6
    t_window: float = 120e-6
    p_flip: float = 0.002
    n_readout_pulses: int = 450
    n_init_pulses: int = 40

    def __post_init__(self):
        if not 0.0 <= self.p_flip <= 1.0:
            raise DomainError("p_flip must be a probability")
        if self.n_readout_pulses < 1 or self.n_init_pulses < 1:
            raise DomainError("pulse counts must be >= 1")
        if self.t1_op <= 0 or self.t_window <= 0:
            raise DomainError("optical times must be positive")

    @property
    def delta_a_par(self) -> float:
        return self.ground.a_par - self.excited.a_par


def default_optical_params(ground: hf.HyperfineParams | None = None,
                           g_tensor_path=None) -> OpticalParams:
    """Documented optical parameter set for the shipped register.

    The excited-state couplings are recomputed from the shipped excited-state
    g-tensor at the fitted nuclear position (first field setting); the bare
    precession frequency is carried over from the ground parameters.  Pass a
    ``g_tensor_path`` to override the tensors (the simulated fidelities are
    sensitive to this file; see README).
    """
    from . import locate

    if ground is None:
        ground = hf.REFERENCE_PARAMS
    tensors = locate.load_g_tensors(g_tensor_path)
    setting = locate.load_field_settings()[0]
    exc = locate.dipolar_hyperfine(locate.reference_position(),
                                   tensors["excited"], setting)
    excited = hf.HyperfineParams(exc.a_par, exc.a_perp, ground.omega_l)
    return OpticalParams(ground=ground, excited=excited)


def excitation_channel(opt: OpticalParams, branch: str = "readout",
                       ens: LarmorEnsemble = DEFAULT_ENSEMBLE,
                       n_nodes: int = 64) -> QuantumChannel:
    """Single optical pulse as a CPTP map on the two-spin state.

    The addressed electron projector (``|1>`` for readout, ``|0>`` for
    initialization) is excited; the decay-time integral over the collection
    window uses Gauss-Legendre quadrature with ``n_nodes`` nodes plus the
    analytic no-decay remainder.  The ensemble average runs over the four
    nuclear detunings.  Electron spin flips are NOT included here; see
    :func:`readout_pipeline`.
    """
    if branch not in ("readout", "init"):
        raise DomainError("branch must be 'readout' or 'init'")
    p_exc = tensor(_P1 if branch == "readout" else _P0, IDENT2)
    p_dark = tensor(_P0 if branch == "readout" else _P1, IDENT2)
    proj_exc = np.kron(p_exc, p_exc.conj())
    proj_dark = np.kron(p_dark, p_dark.conj())
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    times = (nodes + 1.0) / 2.0 * opt.t_window
    weights = weights * opt.t_window / 2.0
    p_remain = np.exp(-opt.t_window / opt.t1_op)

    total = np.zeros((16, 16), dtype=complex)
    for det, w in zip(ens.detunings, ens.weights):
        h_g = hf.full_hamiltonian(opt.ground.with_shift(det))
        h_e = hf.full_hamiltonian(opt.excited.with_shift(det))
        wg, vg = np.linalg.eigh(h_g)
        we, ve = np.linalg.eigh(h_e)
        u_g = lambda t: (vg * np.exp(-1j * wg * t)) @ vg.conj().T
        u_e = lambda t: (ve * np.exp(-1j * we * t)) @ ve.conj().T
        sop = np.kron(u_g(opt.t_window), u_g(opt.t_window).conj()) @ proj_dark
        u_full = u_e(opt.t_window)
        sop += p_remain * np.kron(u_full, u_full.conj()) @ proj_exc
        for t, wt in zip(times, weights):
            pdf = np.exp(-t / opt.t1_op) / opt.t1_op
            u = u_g(opt.t_window - t) @ u_e(t)
            sop += wt * pdf * np.kron(u, u.conj()) @ proj_exc
        total += w * sop
    return QuantumChannel(total)


def _flip_channel(branch: str, p_flip: float) -> QuantumChannel:
    """Classical per-pulse spin flip of the addressed electron state."""
    p_exc = tensor(_P1 if branch == "readout" else _P0, IDENT2)
    p_other = tensor(_P0 if branch == "readout" else _P1, IDENT2)
    x_e = tensor(SIGMA_X, IDENT2)
    return QuantumChannel.from_kraus(
        [p_other, np.sqrt(1.0 - p_flip) * p_exc,
         np.sqrt(p_flip) * x_e @ p_exc])


def init_pump_probability(opt: OpticalParams) -> float:
    """Per-pulse pumping probability during initialization: the excited-state
    microwave pi-pulse converts every in-window, spin-conserving decay into a
    ground-state flip."""
    return (1.0 - np.exp(-opt.t_window / opt.t1_op)) * (1.0 - opt.p_flip)


@dataclass(frozen=True)
class PipelineResult:
    state: DensityMatrix
    outcome_probs: dict


def pipeline_channel(opt: OpticalParams, branch: str,
                     ens: LarmorEnsemble = DEFAULT_ENSEMBLE,
                     n_nodes: int = 64) -> QuantumChannel:
    """Full multi-pulse readout or initialization channel."""
    single = excitation_channel(opt, branch, ens, n_nodes)
    if branch == "readout":
        flip = _flip_channel("readout", opt.p_flip)
        return (flip @ single).power(opt.n_readout_pulses)
    flip = _flip_channel("init", init_pump_probability(opt))
    return (flip @ single).power(opt.n_init_pulses)


def readout_pipeline(opt: OpticalParams, ens: LarmorEnsemble,
                     rho_in: DensityMatrix, branch: str = "readout",
                     n_nodes: int = 64) -> PipelineResult:
    """Apply the full optical pipeline and report electron outcome odds.

    The outcome probabilities are the electron populations at the start of
    the pipeline (the photon-counting statistics that map populations to
    click records are out of scope).
    """
    if rho_in.dim != 4:
        raise DimensionError("pipeline expects a two-spin state")
    p_up = float(np.real(rho_in.mat[0, 0] + rho_in.mat[1, 1]))
    chan = pipeline_channel(opt, branch, ens, n_nodes)
    out = chan.apply(rho_in)
    return PipelineResult(DensityMatrix(out),
                          {"up": p_up, "down": 1.0 - p_up})


# ---------------------------------------------------------------------------
# closed-form dephasing of a stored superposition

def coherence_factor(delta_f: float, gamma_decay: float) -> complex:
    """Per-excitation coherence multiplier ``(1/tau) / (1/tau - i delta_a)``
    for an exponential decay at rate ``gamma_decay`` and a parallel coupling
    difference ``delta_f`` in ordinary Hz."""
    delta_a = 2.0 * np.pi * delta_f
    return gamma_decay / (gamma_decay - 1j * delta_a)


def dephasing_purity(delta_f: float, gamma_decay: float,
                     n_excitations: int) -> float:
    """Bloch-vector length of an equal superposition after N excitation-decay
    cycles: ``(1 + 4 pi^2 delta_f^2 / gamma^2)^(-N/2)``."""
    if gamma_decay <= 0:
        raise DomainError("gamma_decay must be > 0")
    if n_excitations < 0:
        raise DomainError("n_excitations must be >= 0")
    ratio2 = (2.0 * np.pi * delta_f / gamma_decay) ** 2
    return float((1.0 + ratio2) ** (-n_excitations / 2.0))


def t1_bound(f_exp: float, f_sim: float, t_store: float) -> float:
    """Lower bound on the nuclear lifetime from ``f_exp = exp(-t/T1) f_sim``.

    Returns ``+inf`` when the fidelities coincide; raises
    :class:`DomainError` when ``f_exp > f_sim`` (model violated).
    """
    if not (0.0 < f_exp <= 1.0 and 0.0 < f_sim <= 1.0):
        raise DomainError("fidelities must be in (0, 1]")
    if f_exp > f_sim:
        raise DomainError("f_exp exceeds f_sim; decay model violated")
    if f_exp == f_sim:
        return float("inf")
    return float(t_store / np.log(f_sim / f_exp))


# ---------------------------------------------------------------------------
# looped state-transfer experiment

@dataclass(frozen=True)
class SwapExperimentResult:
    pattern: tuple
    n_loops: int
    counts_same: np.ndarray      # counts[i_k][m_k]
    counts_next: np.ndarray      # counts[i_k][m_{k+1}]
    fidelity: float              # sampled P(m_{k+1} == i_k)
    expected_fidelity: float     # probability-averaged retrieval fidelity
    control: bool
    seed: int

    def correlation_next(self) -> float:
        return float((self.counts_next[0, 0] + self.counts_next[1, 1])
                     / max(self.counts_next.sum(), 1))

    def correlation_same(self) -> float:
        return float((self.counts_same[0, 0] + self.counts_same[1, 1])
                     / max(self.counts_same.sum(), 1))

    def to_json(self, path, header: dict | None = None) -> None:
        payload = {
            "pattern": list(self.pattern),
            "n_loops": self.n_loops,
            "control": self.control,
            "seed": self.seed,
            "counts_i_m_same": self.counts_same.tolist(),
            "counts_i_m_next": self.counts_next.tolist(),
            "fidelity": self.fidelity,
            "expected_fidelity": self.expected_fidelity,
        }
        if header:
            payload["metadata"] = header
        with open(path, "w") as f:
            json.dump(payload, f, indent=1)


def swap_experiment(p: hf.HyperfineParams, opt: OpticalParams,
                    ens: LarmorEnsemble = DEFAULT_ENSEMBLE,
                    loop_pattern=(0, 0, 1, 1), n_loops: int = 1500,
                    seed: int = 0, control: bool = False,
                    dephasing_t2: float | None = 16.1e-6,
                    n_nodes: int = 64) -> SwapExperimentResult:
    """Simulate init -> transfer -> readout loops and correlate outcomes.

    Measurement outcomes are sampled (seeded) from the exact electron
    populations; the post-measurement state is conditioned on the outcome
    before the readout channel acts.  ``control=True`` replaces the transfer
    gate by the identity, which correlates each readout with the same-loop
    initialization instead of the next one.
    """
    rng = np.random.default_rng(seed)
    pattern = tuple(int(b) for b in loop_pattern)
    if any(b not in (0, 1) for b in pattern):
        raise DomainError("loop pattern entries must be 0 or 1")

    swap_sop = (QuantumChannel.identity(4) if control
                else swap_channel(p, ens, dephasing_t2))
    init_chan = pipeline_channel(opt, "init", ens, n_nodes)
    read_chan = pipeline_channel(opt, "readout", ens, n_nodes)
    flip_e = QuantumChannel.from_unitary(tensor(SIGMA_X, IDENT2))
    proj = [tensor(_P0, IDENT2), tensor(_P1, IDENT2)]

    rho = tensor(_P1, IDENT2 / 2.0)
    counts_same = np.zeros((2, 2), dtype=int)
    counts_next = np.zeros((2, 2), dtype=int)
    n_match = 0
    expected = 0.0
    n_pairs = 0
    prev_init = None
    total_steps = n_loops * len(pattern)
    for k in range(total_steps):
        i_k = pattern[k % len(pattern)]
        rho = init_chan.apply(rho)
        if i_k == 0:  # pumping targets |1>; a pi-pulse prepares |0>
            rho = flip_e.apply(rho)
        rho = swap_sop.apply(rho)
        p_up = float(np.real(np.trace(rho @ proj[0])))
        p_up = min(max(p_up, 0.0), 1.0)
        m_k = 0 if rng.random() < p_up else 1
        counts_same[i_k, m_k] += 1
        if prev_init is not None:
            counts_next[prev_init, m_k] += 1
            n_match += int(m_k == prev_init)
            expected += p_up if prev_init == 0 else 1.0 - p_up
            n_pairs += 1
        # condition on the outcome, then let the readout channel act
        sel = proj[m_k] @ rho @ proj[m_k]
        rho = sel / max(np.real(np.trace(sel)), 1e-300)
        rho = read_chan.apply(rho)
        prev_init = i_k
    return SwapExperimentResult(pattern, n_loops, counts_same, counts_next,
                                n_match / max(n_pairs, 1),
                                expected / max(n_pairs, 1), control, seed)
