"""Grid-side converter controls: PLL, droop, FRT, loops, DC link."""

import math

import numpy as np
import pytest

from gridmf.converter import (
    Vsc,
    VscParams,
    VscState,
    current_loop_step,
    dc_link_step,
    droop_correction,
    frt_limit,
    outer_loop_step,
    phasor_injection,
    pll_step,
)
from gridmf.res import IdealDcSource
from gridmf.simcore import TWO_PI, SimulationAbort

F_NOM = 50.0
P = VscParams()


class TestPll:
    def test_locked_at_nominal(self):
        st = VscState(f_meas=F_NOM, f_droop=F_NOM)
        theta, f = pll_step(st, 1.0, 0.0, P, F_NOM, 50e-6)
        assert f == pytest.approx(F_NOM)
        assert theta == pytest.approx(TWO_PI * F_NOM * 50e-6)

    def test_tracks_frequency_offset(self):
        # +0.5 Hz grid: the PLL frequency settles to f_nom + 0.5 within
        # a few loop time constants
        st = VscState(f_meas=F_NOM, f_droop=F_NOM)
        h = 50e-6
        f_grid = F_NOM + 0.5
        for k in range(round(0.5 / h)):
            t = k * h
            ang = TWO_PI * f_grid * t - st.theta_pll
            v_d, v_q = math.cos(ang), math.sin(ang)
            pll_step(st, v_d, v_q, P, F_NOM, h)
        assert st.f_meas == pytest.approx(f_grid, abs=0.01)

    def test_phase_jump_realigns_without_steady_error(self):
        st = VscState(f_meas=F_NOM, f_droop=F_NOM)
        h = 50e-6
        jump = math.radians(30.0)
        for k in range(round(0.5 / h)):
            t = k * h
            ang = TWO_PI * F_NOM * t + jump - st.theta_pll
            pll_step(st, math.cos(ang), math.sin(ang), P, F_NOM, h)
        # frame angle equals grid angle modulo 2 pi
        t_end = round(0.5 / h) * h
        err = (TWO_PI * F_NOM * t_end + jump - st.theta_pll) % TWO_PI
        err = min(err, TWO_PI - err)
        assert err < 1e-3

    def test_droop_channel_is_low_pass(self):
        st = VscState(f_meas=F_NOM, f_droop=F_NOM)
        st.f_meas = F_NOM  # large transient on the raw frequency
        h = 50e-6
        pll_step(st, 0.5, 0.5, P, F_NOM, h)
        # a single noisy step moves the filtered frequency by at most
        # h/tau of the raw deviation
        assert abs(st.f_droop - F_NOM) <= \
            abs(st.f_meas - F_NOM) * h / P.f_droop_tau + 1e-12


class TestDroop:
    def test_zero_inside_deadband(self):
        assert droop_correction(F_NOM + 0.09, F_NOM, P) == 0.0
        assert droop_correction(F_NOM - 0.09, F_NOM, P) == 0.0

    def test_reduces_power_above_nominal(self):
        corr = droop_correction(F_NOM + 0.6, F_NOM, P)
        assert corr == pytest.approx(-P.droop_gain * 0.5 / F_NOM)
        assert corr < 0.0

    def test_symmetric_sign(self):
        up = droop_correction(F_NOM + 0.6, F_NOM, P)
        dn = droop_correction(F_NOM - 0.6, F_NOM, P)
        assert up == pytest.approx(-dn)


class TestFrtLimit:
    def test_healthy_within_limit_unchanged(self):
        assert frt_limit(0.8, -0.2, 1.0, P) == (0.8, -0.2)

    def test_healthy_overcurrent_scaled_preserving_angle(self):
        i_d, i_q = frt_limit(2.0 * P.i_max, 0.0, 1.0, P)
        assert math.hypot(i_d, i_q) == pytest.approx(P.i_max)
        assert i_q == 0.0
        i_d, i_q = frt_limit(1.5, 1.5, 1.0, P)
        assert i_d == pytest.approx(i_q)
        assert math.hypot(i_d, i_q) == pytest.approx(P.i_max)

    def test_fault_blocks_active_and_supports_reactive(self):
        v = 0.3
        i_d, i_q = frt_limit(1.0, 0.0, v, P)
        assert i_d == 0.0
        support = min(2.0 * (P.frt_v_threshold - v) * P.i_max, P.i_max)
        assert i_q == pytest.approx(-support)
        assert math.hypot(i_d, i_q) <= P.i_max + 1e-12

    def test_magnitude_never_exceeds_limit(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            i_d, i_q = frt_limit(rng.uniform(-3, 3), rng.uniform(-3, 3),
                                 rng.uniform(0.0, 1.2), P)
            assert math.hypot(i_d, i_q) <= P.i_max + 1e-12


class TestOuterLoop:
    def test_unity_point_gives_unit_current(self):
        st = VscState(f_meas=F_NOM, f_droop=F_NOM, v_mag_filt=1.0)
        i_d, i_q = outer_loop_step(st, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, P,
                                   F_NOM, 50e-6)
        assert i_d == pytest.approx(1.0, abs=1e-9)
        assert i_q == pytest.approx(0.0, abs=1e-9)

    def test_high_frequency_reduces_demand(self):
        st = VscState(f_meas=F_NOM + 0.6, f_droop=F_NOM + 0.6,
                      v_mag_filt=1.0)
        i_d, _ = outer_loop_step(st, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, P,
                                 F_NOM, 50e-6)
        assert i_d < 1.0


class TestCurrentLoop:
    def test_zero_error_zero_integrators_is_feedforward(self):
        st = VscState()
        st.i_d, st.i_q = 0.9, -0.1
        v_d, v_q = 1.0, 0.05
        c_d, c_q = current_loop_step(st, 0.9, -0.1, v_d, v_q, P,
                                     TWO_PI * F_NOM, 50e-6)
        assert c_d == pytest.approx(v_d - P.x_f * st.i_q)
        assert c_q == pytest.approx(v_q + P.x_f * st.i_d)

    def test_axis_swap_symmetry(self):
        st1 = VscState()
        st1.i_d, st1.i_q = 0.2, 0.5
        a_d, a_q = current_loop_step(st1, 0.7, 0.3, 1.0, 0.1, P,
                                     TWO_PI * F_NOM, 50e-6)
        st2 = VscState()
        st2.i_d, st2.i_q = 0.5, 0.2
        b_d, b_q = current_loop_step(st2, 0.3, 0.7, 0.1, 1.0, P,
                                     TWO_PI * F_NOM, 50e-6)
        # swapping d/q in reference, state and voltage swaps the outputs
        # apart from the antisymmetric decoupling term
        assert a_d - (1.0 - P.x_f * 0.5) == pytest.approx(
            b_q - (1.0 + P.x_f * 0.5))


class TestPhasorInjection:
    def test_aligned_injection_in_phase(self):
        st = VscState(theta_pll=0.3)
        inj = phasor_injection(st, 1.0, 0.0)
        assert inj == pytest.approx(np.exp(1j * 0.3))

    def test_zero_reference_zero_injection(self):
        assert phasor_injection(VscState(theta_pll=1.1), 0.0, 0.0) == 0.0


class TestDcLink:
    def test_balanced_power_holds_voltage(self):
        st = VscState(v_dc=1.0)
        dc_link_step(st, 0.5, 0.5, P, 50e-6)
        assert st.v_dc == 1.0

    def test_rate_arithmetic(self):
        p_small = VscParams(c_dc=0.05)
        st = VscState(v_dc=1.0)
        h = 1e-6
        dc_link_step(st, 0.6, 0.5, p_small, h)
        assert (st.v_dc - 1.0) / h == pytest.approx(2.0, rel=1e-9)

    def test_energy_bookkeeping(self):
        st = VscState(v_dc=1.0)
        h = 50e-6
        e_net = 0.0
        rng = np.random.default_rng(2)
        for _ in range(2000):
            p_in = 0.5 + 0.05 * rng.standard_normal()
            p_out = 0.5
            e_net += h * (p_in - p_out)
            dc_link_step(st, p_in, p_out, P, h)
        de_cap = 0.5 * P.c_dc * (st.v_dc**2 - 1.0)
        assert de_cap == pytest.approx(e_net, abs=0.005 * max(abs(e_net), 1e-3))

    def test_chopper_clamps_overvoltage(self):
        st = VscState(v_dc=P.v_chop)
        dc_link_step(st, 5.0, 0.0, P, 1e-3)
        assert st.v_dc == P.v_chop

    def test_collapse_aborts(self):
        st = VscState(v_dc=1e-6)
        with pytest.raises(SimulationAbort):
            dc_link_step(st, -10.0, 10.0, P, 1e-3)


class TestVscSetpointTracking:
    def test_emt_mode_reaches_setpoint_with_ideal_source(self):
        # stiff 1 pu grid behind the filter, ideal DC source: P settles
        # within 1 % of the reference; the filter current is emulated
        # quasi-statically from the bridge command
        vsc = Vsc(VscParams(), IdealDcSource(100e6), F_NOM, 100e6, emt=True)
        vsc.initialize(1.0 + 0.0j, 0.0, 0.0)
        vsc.p_ref, vsc.q_ref = 0.8, 0.0
        h = 50e-6
        i = complex(0.0, 0.0)
        gain = TWO_PI * F_NOM * h / vsc.p.x_f
        for k in range(round(1.0 / h)):
            t = k * h
            ang = TWO_PI * F_NOM * t - vsc.st.theta_pll
            v_dq = complex(math.cos(ang), math.sin(ang))
            c_d, c_q = vsc.bridge_voltage()
            # filter inductor dynamics in the rotating frame
            i += gain * (complex(c_d, c_q) - v_dq
                         - complex(vsc.p.r_f, vsc.p.x_f) * i)
            vsc.advance_emt(v_dq.real, v_dq.imag, i.real, i.imag, h)
        assert vsc.st.p_out == pytest.approx(0.8, rel=0.01)
        assert abs(vsc.st.q_out) < 0.02
        assert math.hypot(vsc.st.i_d, vsc.st.i_q) <= vsc.p.i_max + 1e-9

    def test_phasor_mode_reaches_setpoint_with_ideal_source(self):
        vsc = Vsc(VscParams(), IdealDcSource(100e6), F_NOM, 100e6,
                  emt=False)
        vsc.initialize(1.0 + 0.0j, 0.0, 0.0)
        vsc.p_ref, vsc.q_ref = 0.8, 0.3
        h = 1e-3
        for _ in range(round(2.0 / h)):
            vsc.advance_phasor(1.0 + 0.0j, h)
        assert vsc.st.p_out == pytest.approx(0.8, rel=0.01)
        assert vsc.st.q_out == pytest.approx(0.3, rel=0.01)
