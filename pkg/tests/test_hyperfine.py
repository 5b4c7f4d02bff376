import numpy as np
import pytest

from spinforge import hyperfine as hf
from spinforge.qmat import ArgumentError, DomainError, axis_angle_of_su2

KHZ = 2 * np.pi * 1e3


def random_params(rng):
    return hf.HyperfineParams(rng.uniform(-80, 80) * KHZ,
                              rng.uniform(1, 120) * KHZ,
                              rng.uniform(300, 1200) * KHZ)


class TestConditionalHamiltonians:
    def test_no_perpendicular_coupling(self, ref_params):
        p = hf.HyperfineParams(ref_params.a_par, 0.0, ref_params.omega_l)
        _, _, cp = hf.conditional_hamiltonians(p)
        assert np.allclose(cp.m_plus, [0, 0, 1])
        assert np.allclose(cp.m_minus, [0, 0, 1])
        assert cp.gamma_axes == pytest.approx(0.0, abs=1e-12)

    def test_reference_frequencies(self, ref_params):
        _, _, cp = hf.conditional_hamiltonians(ref_params)
        assert cp.omega_plus / KHZ == pytest.approx(588.97, abs=0.01)
        assert cp.omega_minus / KHZ == pytest.approx(550.32, abs=0.01)

    def test_mean_frequency_matches_resonance(self, ref_params):
        # omega_0 ~ 569.6 kHz, consistent with the measured 0.875 us spacing
        _, _, cp = hf.conditional_hamiltonians(ref_params)
        assert cp.omega_0 / KHZ == pytest.approx(569.6, abs=0.1)
        spacing = np.pi / cp.omega_0
        assert spacing == pytest.approx(0.875e-6, rel=0.01)

    def test_axis_invariants(self, rng):
        for _ in range(50):
            p = random_params(rng)
            _, _, cp = hf.conditional_hamiltonians(p)
            assert cp.omega_plus == pytest.approx(
                np.hypot(p.omega_l + p.a_par, p.a_perp), rel=1e-14)
            assert np.cos(cp.gamma_axes) == pytest.approx(
                float(np.dot(cp.m_plus, cp.m_minus)), abs=1e-12)

    def test_param_validation(self):
        with pytest.raises(DomainError):
            hf.HyperfineParams(0.0, -1.0, 1.0)
        with pytest.raises(DomainError):
            hf.HyperfineParams(0.0, 1.0, 0.0)


class TestDDBlock:
    def test_small_tau_degenerates(self, ref_params):
        # alpha vanishes linearly (~2 omega_0 tau) as the spacing shrinks
        _, _, cp = hf.conditional_hamiltonians(ref_params)
        blk = hf.dd_block(ref_params, 1e-12)
        assert blk.alpha == pytest.approx(0.0, abs=1e-5)
        assert blk.alpha == pytest.approx(2 * cp.omega_0 * 1e-12, rel=1e-3)

    def test_alpha_at_resonance(self, ref_params, tau0_refined):
        blk = hf.dd_block(ref_params, tau0_refined)
        assert np.degrees(blk.alpha) == pytest.approx(10.2, abs=0.2)

    def test_block_angle_is_twice_alpha(self, ref_params, tau0_refined):
        blk = hf.dd_block(ref_params, tau0_refined)
        assert blk.q_plus.angle == pytest.approx(2 * blk.alpha, rel=1e-12)

    def test_antiparallel_axes_at_resonance(self, ref_params, tau0_refined):
        blk = hf.dd_block(ref_params, tau0_refined)
        assert float(np.dot(blk.q_plus.axis, blk.q_minus.axis)) < -0.999

    def test_axis_angle_matches_propagator_oracle(self, rng):
        # W blocks from the composition equal the direct 2x2 product chain
        for _ in range(30):
            p = random_params(rng)
            tau = rng.uniform(0.05e-6, 2e-6)
            blk = hf.dd_block(p, tau)
            hp, hm, _ = hf.conditional_hamiltonians(p)
            up = _expm2(hp, tau)
            um = _expm2(hm, tau)
            w_plus = up @ um @ um @ up
            expected = axis_angle_of_su2(w_plus)
            assert blk.q_plus.isclose(expected, tol=1e-9)

    def test_closed_form_alpha_within_two_percent(self, ref_params,
                                                  tau0_refined):
        exact = hf.dd_block(ref_params, tau0_refined).alpha
        closed = hf.alpha_closed_form(ref_params)
        assert abs(closed - exact) / exact < 0.02

    def test_q_axis_tilt_scale(self, ref_params, tau0_refined):
        # z-component of the effective axis ~ a_par a_perp / omega_l^2
        blk = hf.dd_block(ref_params, tau0_refined)
        predicted = (ref_params.a_perp * abs(ref_params.a_par)
                     / ref_params.omega_l ** 2)
        z = abs(blk.q_plus.axis[2])
        assert predicted / 2 < z < predicted * 2


def _expm2(h, t):
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


class TestResonanceTimes:
    def test_reference_value(self, ref_params):
        spacing = hf.resonance_times(ref_params, 0)[0]
        assert spacing == pytest.approx(0.878e-6, abs=0.001e-6)
        assert spacing == pytest.approx(0.875e-6, rel=0.01)

    def test_odd_harmonic_spacing(self, ref_params):
        times = hf.resonance_times(ref_params, 1)
        assert times[1] / times[0] == pytest.approx(3.0, rel=1e-12)

    def test_frequency_scaling(self, ref_params):
        doubled = hf.HyperfineParams(2 * ref_params.a_par,
                                     2 * ref_params.a_perp,
                                     2 * ref_params.omega_l)
        ratio = (hf.resonance_times(ref_params, 2)
                 / hf.resonance_times(doubled, 2))
        assert np.allclose(ratio, 2.0)

    def test_refined_close_to_strong_field(self, ref_params):
        # The refinement shifts the reference spacing by ~0.5%; the shift
        # scales as (2/pi) (a_perp/omega_l)^2, so well inside the strong
        # field regime it drops below 0.5%.
        plain = hf.resonance_times(ref_params, 0)[0]
        refined = hf.resonance_times(ref_params, 0, refine=True)[0]
        assert abs(refined - plain) / plain < 0.006
        strong = hf.HyperfineParams(ref_params.a_par, ref_params.a_perp,
                                    12 * np.hypot(ref_params.a_par,
                                                  ref_params.a_perp))
        plain_s = hf.resonance_times(strong, 0)[0]
        refined_s = hf.resonance_times(strong, 0, refine=True)[0]
        assert abs(refined_s - plain_s) / plain_s < 0.005

    def test_refinement_shift_scaling(self, ref_params):
        shifts = []
        for scale in (1.0, 2.0):
            p = hf.HyperfineParams(ref_params.a_par, ref_params.a_perp,
                                   scale * ref_params.omega_l)
            plain = hf.resonance_times(p, 0)[0]
            refined = hf.resonance_times(p, 0, refine=True)[0]
            shifts.append((refined - plain) / plain)
        assert shifts[0] / shifts[1] == pytest.approx(4.0, rel=0.15)

    def test_negative_m_rejected(self, ref_params):
        with pytest.raises(ArgumentError):
            hf.resonance_times(ref_params, -1)


class TestAntiparallelResidual:
    def test_vanishes_at_refined_resonance(self, ref_params, tau0_refined):
        assert abs(hf.antiparallel_residual(ref_params, tau0_refined)) < 1e-3

    def test_collinear_limit(self, ref_params):
        p = hf.HyperfineParams(ref_params.a_par, 0.0, ref_params.omega_l)
        _, _, cp = hf.conditional_hamiltonians(p)
        tau = 0.3e-6
        expected = np.cos((cp.omega_plus + cp.omega_minus) * tau / 2)
        assert hf.antiparallel_residual(p, tau) == pytest.approx(expected,
                                                                 abs=1e-12)

    def test_sign_change_brackets_resonance(self, ref_params):
        for m in range(3):
            spacing = hf.resonance_times(ref_params, m)[m]
            lo = hf.antiparallel_residual(ref_params, 0.45 * spacing)
            hi = hf.antiparallel_residual(ref_params, 0.55 * spacing)
            assert lo * hi < 0


class TestXYNPropagator:
    def test_two_pulses_equal_block(self, ref_params, tau0_refined):
        # N = 2 realizes the basic block: identical conditional rotations
        # (pulse x/y phases only dress the electron blocks with a phase)
        u = hf.xyn_propagator(ref_params, tau0_refined, 2)
        blk = hf.dd_block(ref_params, tau0_refined)
        up = axis_angle_of_su2(u[:2, :2])
        lo = axis_angle_of_su2(u[2:, 2:])
        assert up.isclose(blk.q_plus, tol=1e-10)
        assert lo.isclose(blk.q_minus, tol=1e-10)
        # the four-pulse pattern closes the phase: equals W^2 globally
        u4 = hf.xyn_propagator(ref_params, tau0_refined, 4)
        w2 = blk.block_unitary @ blk.block_unitary
        overlap = abs(np.trace(u4.conj().T @ w2)) / 4
        assert overlap == pytest.approx(1.0, abs=1e-10)

    def test_eight_pulse_rotation_angle(self, ref_params, tau0_refined):
        # 8 pulses at resonance: conditional rotation close to pi/2 (81.7 deg)
        u = hf.xyn_propagator(ref_params, tau0_refined, 8)
        upper = u[:2, :2]
        rot = axis_angle_of_su2(upper)
        assert np.degrees(rot.angle) == pytest.approx(8 * 10.21, abs=0.5)

    def test_matches_brute_force_product(self, rng):
        for _ in range(20):
            p = random_params(rng)
            tau = rng.uniform(0.05e-6, 1.5e-6)
            n = int(rng.choice([2, 4, 8, 16, 32]))
            u = hf.xyn_propagator(p, tau, n)
            brute = np.eye(4, dtype=complex)
            u_free = hf.free_propagator(p, tau)
            from spinforge.qmat import IDENT2, rotation_matrix, tensor
            axes = {"x": [1, 0, 0], "y": [0, 1, 0]}
            for axis in hf.xy_pulse_axes(n):
                pulse = tensor(rotation_matrix(axes[axis], np.pi), IDENT2)
                brute = u_free @ pulse @ u_free @ brute
            assert np.max(np.abs(u - brute)) < 1e-9

    def test_unitary_and_block_diagonal(self, rng):
        for _ in range(20):
            p = random_params(rng)
            tau = rng.uniform(0.05e-6, 1.5e-6)
            n = int(rng.choice([2, 4, 8, 16]))
            u = hf.xyn_propagator(p, tau, n)
            assert np.max(np.abs(u @ u.conj().T - np.eye(4))) < 1e-10
            assert np.max(np.abs(u[:2, 2:])) < 1e-10
            assert np.max(np.abs(u[2:, :2])) < 1e-10

    def test_odd_pulse_count_rejected(self, ref_params):
        with pytest.raises(ArgumentError):
            hf.xyn_propagator(ref_params, 0.4e-6, 7)
