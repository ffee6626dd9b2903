from __future__ import annotations

import math

import numpy as np
import pytest

from etppc.controller import (AlphaHistory, ControllerParams, alpha_derivative, control_command,
                              disturbance_compensation, pq_term, alpha_norm_bound, saturate, virtual_control,
                              virtual_control_rate)
from etppc.dynamics import InertiaModel, SpacecraftState, input_error, state_derivative
from etppc.errors import InvalidInputError, SingularityError
from etppc.mathcore import jacobian_Fs
from etppc.ppc import BlfParams, blf_value_and_gradient
from etppc.simulation import _Core
from oracles import oracle_virtual_control

rng = np.random.default_rng(5)
J_REF = [2.8, 2.5, 1.9]


def random_state(q0_min=0.2):
    while True:
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        if abs(q[3]) > q0_min:
            return q


class TestVirtualControl:
    def test_zero_error(self):
        q = random_state()
        assert not np.any(virtual_control(q, np.zeros(3), np.ones(3), ControllerParams()))

    def test_numeric_case_matches_oracle(self):
        p = ControllerParams()
        q = np.array([0.48, -0.36, 0.0, 0.8])
        eps = np.array([0.3, -0.2, 0.1])
        got = virtual_control(q, eps, np.eye(3), p)
        ref = oracle_virtual_control(q, eps, [1, 1, 1], p.k_m, p.M_omega, p.gamma)
        assert np.allclose(got, ref, rtol=0, atol=1e-15)

    def test_random_cases_match_oracle(self):
        p = ControllerParams(gamma=3.0)
        for _ in range(200):
            q = random_state()
            rho = rng.uniform(0.1, 1.0, 3)
            eps = q[:3] / rho
            got = virtual_control(q, eps, 1.0 / rho, p)
            assert np.allclose(got, oracle_virtual_control(q, eps, rho, p.k_m, p.M_omega, p.gamma), atol=1e-14)

    def test_exact_bound_holds(self):
        # |q0|/2 F_s^-1 is norm-preserving, so ||alpha|| <= k_m M_w ||rho o tanh(gamma eps)||
        p = ControllerParams()
        for _ in range(1000):
            q = random_state(0.05)
            rho = rng.uniform(0.05, 1.0, 3)
            eps = rng.uniform(-1.5, 1.5, 3)
            a = virtual_control(q, eps, 1.0 / rho, p)
            assert np.linalg.norm(a) <= p.k_m * p.M_omega * np.linalg.norm(rho * np.tanh(p.gamma * eps)) + 1e-12

    @pytest.mark.xfail(strict=True, reason="the stated alpha bound omits the sqrt(3) factor of ||tanh(gamma eps)||")
    def test_nominal_bound_on_random_states(self):
        p = ControllerParams()
        worst = 0.0
        for _ in range(1000):
            q = random_state(0.05)
            rho = rng.uniform(0.05, 1.0, 3)
            eps = rng.uniform(-1.5, 1.5, 3)
            a = virtual_control(q, eps, 1.0 / rho, p)
            worst = max(worst, np.linalg.norm(a) - alpha_norm_bound(p, rho))
        assert worst <= 1e-12

    def test_singularity_guard(self):
        with pytest.raises(SingularityError):
            virtual_control([1.0, 0.0, 0.0, 0.0], [0.1, 0, 0], np.ones(3), ControllerParams())


class TestVirtualControlRate:
    def test_matches_time_derivative_along_flow(self):
        p = ControllerParams(gamma=5.0)
        inertia = InertiaModel(J_REF)
        from etppc.ppc import PerfFunctionParams, perf_value
        pf = PerfFunctionParams(rho0=[0.6, 0.5, 0.4], rho_inf=[0.01, 0.02, 0.03], Ts=20, fs=8)
        h = 1e-6
        for _ in range(20):
            q = random_state(0.3)
            w = rng.normal(size=3) * 0.03
            t = rng.uniform(0, 60)

            def alpha_at(tt):
                s = SpacecraftState(q, w)
                dqv, dq0, dw = state_derivative(s, np.zeros(3), np.zeros(3), inertia)
                qq = q + (tt - t) * np.concatenate([dqv, [dq0]])
                rho, _ = perf_value(tt, pf)
                return virtual_control(qq, qq[:3] / rho, 1.0 / rho, p)

            rho, rdot = perf_value(t, pf)
            fd = (alpha_at(t + h) - alpha_at(t - h)) / (2 * h)
            assert np.allclose(virtual_control_rate(q, w, rho, rdot, p), fd, atol=1e-8)


class TestAlphaDerivative:
    def test_constant_history(self):
        h = AlphaHistory()
        for k in range(3):
            h.push(k * 1e-3, [1.0, 2.0, 3.0])
        assert np.array_equal(alpha_derivative(h), np.zeros(3))

    def test_single_sample(self):
        h = AlphaHistory()
        h.push(0.0, [1.0, 2.0, 3.0])
        assert np.array_equal(alpha_derivative(h), np.zeros(3))

    def test_linear_ramp(self):
        h = AlphaHistory()
        dt = 1e-3
        for k in range(5):
            t = k * dt
            h.push(t, [t, 2 * t, 3 * t])
        assert np.allclose(alpha_derivative(h), [1, 2, 3], rtol=1e-9)

    def test_sine_truncation_bound(self):
        h = AlphaHistory()
        dt = 1e-3
        worst = 0.0
        for k in range(10_001):
            t = k * dt
            h.push(t, [math.sin(t)] * 3)
            if k:
                worst = max(worst, abs(alpha_derivative(h)[0] - math.cos(t)))
        assert worst <= dt

    def test_history_contract(self):
        h = AlphaHistory()
        h.push(1.0, np.zeros(3))
        with pytest.raises(InvalidInputError):
            h.push(1.0, np.zeros(3))
        with pytest.raises(InvalidInputError):
            alpha_derivative(AlphaHistory())


class TestCompensationTerms:
    def test_disturbance_compensation(self):
        p = ControllerParams()
        assert np.array_equal(disturbance_compensation(np.zeros(3), p), np.zeros(3))
        d = disturbance_compensation(np.full(3, 10 * p.p), p)
        assert np.allclose(d, p.D_m * math.tanh(10.0), rtol=1e-15)
        assert p.D_m * 0.99999995 < d[0] < p.D_m
        z = rng.normal(size=3)
        assert np.array_equal(disturbance_compensation(-z, p), -disturbance_compensation(z, p))
        big = disturbance_compensation(rng.normal(size=(100, 3)) * 1e3, p)
        assert np.all(np.abs(big) <= p.D_m)

    def test_pq_zero(self):
        assert np.array_equal(pq_term(np.zeros(3), np.ones(3), jacobian_Fs(random_state()), BlfParams()), np.zeros(3))

    def test_pq_numeric_case(self):
        blf = BlfParams(k1=0.5, F1=1.0)
        q = np.array([0.48, -0.36, 0.0, 0.8])
        rho = np.array([0.5, 0.4, 0.8])
        eps = q[:3] / rho
        x = float(eps @ eps)
        Fe = 0.5 * np.array([q[3] * eps[0] + q[1] * eps[2] - q[2] * eps[1],
                             q[3] * eps[1] + q[2] * eps[0] - q[0] * eps[2],
                             q[3] * eps[2] + q[0] * eps[1] - q[1] * eps[0]])
        ref = 0.5 * math.tanh(x) * Fe / rho
        assert np.allclose(pq_term(eps, 1.0 / rho, jacobian_Fs(q), blf), ref, atol=1e-16)

    def test_pq_bound(self):
        blf = BlfParams(k1=0.5)
        k_u = 1.5
        for _ in range(1000):
            rho = rng.uniform(0.05, 1.0, 3)
            eps = rng.uniform(-k_u, k_u, 3)
            P = pq_term(eps, 1.0 / rho, jacobian_Fs(random_state(0.0)), blf)
            assert np.linalg.norm(P) <= math.sqrt(3) * blf.k1 * k_u / rho.min()

    @pytest.mark.xfail(strict=True, reason="the coupling term is applied as psi F_s eps; the gradient "
                                           "cross term needs F_s^T psi eps (transposed Jacobian)")
    def test_pq_equals_gradient_coupling(self):
        blf = BlfParams()
        for _ in range(50):
            q = random_state()
            rho = rng.uniform(0.1, 1.0, 3)
            eps = q[:3] / rho
            _, g = blf_value_and_gradient(eps, blf)
            ref = (g @ np.diag(1.0 / rho) @ jacobian_Fs(q)).T
            assert np.allclose(pq_term(eps, 1.0 / rho, jacobian_Fs(q), blf), ref, atol=1e-12)

    def test_pq_gradient_identity_with_isotropic_funnel_on_axis(self):
        # with psi ~ I and eps parallel to q_v the two forms coincide
        blf = BlfParams()
        q = random_state()
        rho = np.full(3, 0.7)
        eps = q[:3] / rho
        _, g = blf_value_and_gradient(eps, blf)
        ref = (g @ np.diag(1.0 / rho) @ jacobian_Fs(q)).T
        assert np.allclose(pq_term(eps, 1.0 / rho, jacobian_Fs(q), blf), ref, atol=1e-12)


class TestControlCommand:
    def setup_method(self):
        self.inertia = InertiaModel(J_REF)
        self.p = ControllerParams()
        self.blf = BlfParams()

    def test_equilibrium(self):
        s = SpacecraftState([0, 0, 0, 1], [0, 0, 0])
        u = control_command(s, np.zeros(3), np.zeros(3), np.zeros(3), self.inertia, self.p, self.blf, np.ones(3))
        assert np.array_equal(u, np.zeros(3))

    def test_term_by_term(self):
        for _ in range(20):
            q = random_state()
            w = rng.normal(size=3) * 0.02
            a, ad = rng.normal(size=(2, 3)) * 0.01
            rho = rng.uniform(0.1, 1, 3)
            eps = q[:3] / rho
            s = SpacecraftState(q, w)
            J = np.diag(J_REF)
            z2 = w - a
            ref = (np.cross(w, J @ w) - self.p.K2 * z2 + J @ ad - self.p.D_m * np.tanh(z2 / self.p.p)
                   - pq_term(eps, 1.0 / rho, jacobian_Fs(q), self.blf))
            got = control_command(s, a, ad, eps, self.inertia, self.p, self.blf, rho)
            assert np.allclose(got, ref, atol=1e-16)

    def test_linear_in_alpha_dot(self):
        s = SpacecraftState(random_state(), rng.normal(size=3) * 0.01)
        a, ad1, ad2 = rng.normal(size=(3, 3)) * 0.01
        rho = np.full(3, 0.5)
        eps = s.q_e[:3] / rho
        u1 = control_command(s, a, ad1, eps, self.inertia, self.p, self.blf, rho)
        u12 = control_command(s, a, ad1 + ad2, eps, self.inertia, self.p, self.blf, rho)
        assert np.allclose(u12 - u1, self.inertia.J @ ad2, atol=1e-16)

    def test_z2_substitution_identity(self):
        # J z2_dot = -K2 z2 + (d - d_hat) - e_u - P_q when the plant receives u - e_u
        for _ in range(100):
            q = random_state()
            w = rng.normal(size=3) * 0.02
            a, ad = rng.normal(size=(2, 3)) * 0.01
            rho = rng.uniform(0.1, 1, 3)
            eps = q[:3] / rho
            s = SpacecraftState(q, w)
            u = control_command(s, a, ad, eps, self.inertia, self.p, self.blf, rho)
            held = u + rng.normal(size=3) * 1e-3
            e_u = input_error(u, held)
            d = rng.normal(size=3) * 1e-3
            _, _, dw = state_derivative(s, held, d, self.inertia)
            lhs = self.inertia.J @ (dw - ad)
            z2 = w - a
            rhs = (-self.p.K2 * z2 + d - disturbance_compensation(z2, self.p) - e_u
                   - pq_term(eps, 1.0 / rho, jacobian_Fs(q), self.blf))
            assert np.allclose(lhs, rhs, atol=1e-12, rtol=0)

    def test_saturate(self):
        u_sat, flags = saturate([0.1, -0.02, -0.3], 0.05)
        assert np.array_equal(u_sat, [0.05, -0.02, -0.05])
        assert flags.tolist() == [True, False, True]


def test_fast_path_matches_reference(ref_cfg):
    """The scalar simulator core agrees with the numpy reference implementation."""
    core = _Core(ref_cfg)
    c = ref_cfg.controller
    from etppc.ppc import perf_value
    for _ in range(200):
        q = random_state(0.3)
        w = rng.normal(size=3) * 0.03
        t = float(rng.uniform(0, 100))
        out = core.control(t, tuple(q) + tuple(w))
        rho, rdot = perf_value(t, ref_cfg.perf)
        eps = q[:3] / rho
        alpha = virtual_control(q, eps, 1.0 / rho, c)
        adot = virtual_control_rate(q, w, rho, rdot, c)
        u = control_command(SpacecraftState(q, w), alpha, adot, eps, ref_cfg.inertia, c, ref_cfg.blf, rho)
        assert np.allclose(out[0], rho, rtol=1e-14)
        assert np.allclose(out[2], alpha, atol=1e-15)
        assert np.allclose(out[3], u, atol=1e-14)
        assert np.allclose(out[4], saturate(u, c.u_max)[0], atol=1e-14)
