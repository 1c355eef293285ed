"""Synchronous machine variants, saturation law, shared AVR/governor."""

import math

import numpy as np
import pytest

from gridmf.machines import (
    AvrGovernorGroup,
    AvrGovernorParams,
    Model22Group,
    Model22Params,
    SaturationParams,
    SimplifiedSGGroup,
    SimplifiedSGParams,
    apply_saturation,
    saturation_factor,
    simplified_sg_derivs,
)

OMEGA_NOM = 2 * math.pi * 50.0

M22 = Model22Params(
    r_s=0.003, x_l=0.15, x_md=1.66, x_mq=1.58,
    x_lf=0.165, r_f=0.0006, x_lkd=0.171, r_kd=0.0284,
    x_lg1=0.1, r_g1=0.0062, x_lg2=0.326, r_g2=0.0237,
    h_s=6.5, s_rated=900e6,
)

SIMPLE = SimplifiedSGParams(h_s=6.5, tau_f=5.0, x_s=0.3, r_s=0.003,
                            s_rated=900e6)


def make_m22(saturation=None):
    return Model22Group([M22], OMEGA_NOM, 900e6, saturation=saturation)


class TestSimplified:
    def test_balanced_power_gives_zero_acceleration(self):
        d_om, _, _ = simplified_sg_derivs(1.0, 1.1, 0.7, 0.7, 1.1, SIMPLE,
                                          OMEGA_NOM)
        assert d_om == 0.0

    def test_swing_arithmetic(self):
        d_om, _, _ = simplified_sg_derivs(1.0, 1.1, 0.9, 0.2, 1.1, SIMPLE,
                                          OMEGA_NOM)
        assert d_om == pytest.approx(0.7 / (2 * 3.5) * (3.5 / SIMPLE.h_s))
        # same check with the spec'd H = 3.5 s machine
        p35 = SimplifiedSGParams(h_s=3.5, tau_f=5.0, x_s=0.3, r_s=0.003,
                                 s_rated=900e6)
        d_om, _, _ = simplified_sg_derivs(1.0, 1.1, 0.9, 0.2, 1.1, p35,
                                          OMEGA_NOM)
        assert d_om == pytest.approx(0.1)

    def test_field_lag_step_response(self):
        # E_s(tau_f) = 1 + 0.5 (1 - e^-1) after a 1.0 -> 1.5 field step
        g = SimplifiedSGGroup([SIMPLE], OMEGA_NOM, 900e6)
        g.e_s[:] = 1.0
        h = 1e-4
        for _ in range(round(SIMPLE.tau_f / h)):
            g.e_s += h * (1.5 - g.e_s) / SIMPLE.tau_f
        assert g.e_s[0] == pytest.approx(1.0 + 0.5 * (1 - math.exp(-1)),
                                         abs=2e-4)

    def test_initialize_reproduces_terminal_point(self):
        g = SimplifiedSGGroup([SIMPLE], OMEGA_NOM, 900e6)
        v = np.array([1.02 * np.exp(1j * 0.1)])
        s = np.array([0.8 + 0.2j])
        g.initialize(v, s)
        rot = np.exp(-1j * g.delta)
        i, _ = g.electrical(v * rot)
        s_back = (v * rot) * np.conj(i)
        assert abs(s_back[0] - s[0]) < 1e-12


class TestModel22:
    def test_steady_state_derivatives_vanish(self):
        g = make_m22()
        v = np.array([1.0 + 0.0j])
        s = np.array([0.85 + 0.25j])
        _, vf0, _ = g.initialize(v, s)
        d_rot, i_d, i_q = g._rotor_derivs(vf0)
        assert np.max(np.abs(d_rot)) < 1e-9
        # recovered stator currents match the initialization point
        assert i_d[0] == pytest.approx(g.i_d[0], abs=1e-9)
        assert i_q[0] == pytest.approx(g.i_q[0], abs=1e-9)

    def test_open_circuit_voltage_is_xmd_times_field_current(self):
        g = make_m22()
        v = np.array([1.03 + 0.0j])
        s = np.array([0.0 + 0.0j])
        _, vf0, _ = g.initialize(v, s)
        # at open circuit psi_f = (x_md + x_lf) i_f and |V| = x_md i_f
        i_f = g.psi_f[0] / (M22.x_md + M22.x_lf)
        assert M22.x_md * i_f == pytest.approx(1.03, rel=1e-9)
        assert vf0[0] == pytest.approx(1.03, rel=1e-9)

    def test_zero_excitation_zero_currents_is_a_fixed_point(self):
        g = make_m22()
        g.psi_rot[:] = 0.0
        g.psi_d[:] = 0.0
        g.psi_q[:] = 0.0
        g.i_d[:] = 0.0
        g.i_q[:] = 0.0
        d_rot, i_d, i_q = g._rotor_derivs(np.zeros(1))
        assert np.max(np.abs(d_rot)) == 0.0
        assert i_d[0] == 0.0 and i_q[0] == 0.0

    def test_saturated_group_with_identity_law_matches_plain(self):
        # forcing k == 1 must reproduce the unsaturated trajectories
        sat = SaturationParams(knee=10.0, coeff=0.0)
        ga = make_m22()
        gb = make_m22(saturation=sat)
        v = np.array([1.0 + 0.0j])
        s = np.array([0.85 + 0.25j])
        _, vfa, pma = ga.initialize(v, s)
        _, vfb, pmb = gb.initialize(v, s)
        assert np.array_equal(vfa, vfb)
        h = 5e-5
        i = (ga.internal_emf() - v) / ga.subtransient_source()[1]
        for _ in range(200):
            ga.advance_from_currents(i, vfa, pma * 1.01, h)
            gb.advance_from_currents(i, vfb, pmb * 1.01, h)
        assert np.array_equal(ga.psi_rot, gb.psi_rot)
        assert np.array_equal(ga.omega, gb.omega)

    def test_energy_balance_lossless(self):
        # zero resistances, constant P_m: kinetic energy change matches
        # net accelerating energy within 1 % over 1 s
        p = Model22Params(
            r_s=0.0, x_l=M22.x_l, x_md=M22.x_md, x_mq=M22.x_mq,
            x_lf=M22.x_lf, r_f=0.0, x_lkd=M22.x_lkd, r_kd=0.0,
            x_lg1=M22.x_lg1, r_g1=0.0, x_lg2=M22.x_lg2, r_g2=0.0,
            h_s=M22.h_s, s_rated=M22.s_rated,
        )
        g = Model22Group([p], OMEGA_NOM, 900e6)
        v = np.array([1.0 + 0.0j])
        _, vf0, pm0 = g.initialize(v, np.array([0.8 + 0.1j]))
        h = 5e-5
        pm = pm0 + 0.05
        i_fixed = np.array([complex(g.i_d[0], g.i_q[0])])
        e_acc = 0.0
        om0 = g.omega[0]
        for _ in range(round(1.0 / h)):
            e_acc += h * (pm[0] - g.p_e[0])
            g.advance_from_currents(i_fixed, vf0, pm, h)
        dE_kin = p.h_s * (g.omega[0] ** 2 - om0**2)
        assert dE_kin == pytest.approx(e_acc, rel=0.01)


class TestSaturation:
    def test_identity_below_knee(self):
        sat = SaturationParams()
        psi = np.linspace(0.0, 0.8, 20)
        assert np.array_equal(apply_saturation(psi, sat), psi)

    def test_zero_maps_to_zero(self):
        assert apply_saturation(0.0, SaturationParams()) == 0.0

    def test_above_knee_strictly_reduced(self):
        sat = SaturationParams()
        psi = 0.8 * 1.2
        out = apply_saturation(psi, sat)
        expected = psi / (1.0 + sat.coeff * (psi - sat.knee))
        assert out == pytest.approx(expected, rel=1e-12)
        assert out < psi

    def test_ten_percent_at_design_point(self):
        assert saturation_factor(1.2, SaturationParams()) == pytest.approx(1.1)

    def test_monotone_and_bounded_by_identity(self):
        sat = SaturationParams()
        psi = np.linspace(0.0, 2.0, 500)
        out = apply_saturation(psi, sat)
        assert np.all(out <= psi + 1e-15)
        assert np.all(np.diff(out) >= -1e-12)


class TestAvrGovernor:
    def test_voltage_at_setpoint_holds_field(self):
        g = AvrGovernorGroup(AvrGovernorParams(), 1)
        g.initialize([1.0], [1.8], [0.7])
        vf, _ = g.step(np.array([1.0]), np.array([1.0]), 1e-3)
        assert vf[0] == pytest.approx(1.8)

    def test_droop_steady_state(self):
        p = AvrGovernorParams(r_droop=0.05, t_servo=0.01)
        g = AvrGovernorGroup(p, 1)
        g.initialize([1.0], [1.8], [0.5])
        for _ in range(5000):
            _, pm = g.step(np.array([1.0]), np.array([0.99]), 1e-3)
        assert pm[0] == pytest.approx(0.5 + 0.2, rel=1e-3)

    def test_nominal_speed_returns_to_reference(self):
        p = AvrGovernorParams(t_servo=0.01)
        g = AvrGovernorGroup(p, 1)
        g.initialize([1.0], [1.8], [0.6])
        for _ in range(5000):
            _, pm = g.step(np.array([1.0]), np.array([1.0]), 1e-3)
        assert pm[0] == pytest.approx(0.6, rel=1e-6)

    def test_field_ceiling_respected(self):
        p = AvrGovernorParams(vf_max=3.0)
        g = AvrGovernorGroup(p, 1)
        g.initialize([1.0], [1.8], [0.6])
        for _ in range(2000):
            vf, _ = g.step(np.array([0.2]), np.array([1.0]), 1e-3)
            assert vf[0] <= 3.0
