"""Grid-side voltage-source converter in EMT-average and phasor form.

Shared control chain in both formulations: synchronous-reference-frame
PLL, outer P/Q regulators with frequency droop and DC-voltage
correction, fault-ride-through current limiting.  The EMT formulation
adds the inner current loop and the R-L filter current dynamics; the
filter itself lives in the network solution as a companion branch fed
by the bridge voltage command, so the converter only has to report that
command and consume the solved filter current.  The phasor formulation
sends the limited current reference straight to a current source.  The
DC link is retained in both modes; the renewable
source behind it is any object with a ``power_into_dc`` step method.

dq convention: PLL frame with the d-axis on the terminal voltage, so
p = v_d i_d + v_q i_q and q = v_q i_d - v_d i_q in per unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from gridmf.simcore import ConfigurationError, SimulationAbort, TWO_PI


@dataclass
class VscParams:
    s_rated: float = 100e6       # VA
    r_f: float = 0.005           # filter resistance, p.u.
    x_f: float = 0.15            # filter reactance, p.u.
    c_dc: float = 0.10           # DC-link energy constant, s
    i_max: float = 1.1           # current limit, p.u.
    droop_gain: float = 20.0     # p.u. power per p.u. frequency deviation
    droop_deadband_hz: float = 0.1
    frt_v_threshold: float = 0.85
    v_chop: float = 1.05         # DC chopper clamp level, p.u.
    pll_kp: float = 60.0
    pll_ki: float = 1400.0
    outer_kp: float = 0.5
    outer_ki: float = 20.0
    inner_tau: float = 0.005     # current-loop time constant, s (EMT only)
    k_dc: float = 4.0            # grid-power correction per p.u. v_dc error
    v_meas_tau: float = 0.01     # voltage-magnitude filter for FRT, s
    f_droop_tau: float = 0.2     # frequency filter for the droop channel, s

    def __post_init__(self):
        if self.i_max < 1.0:
            raise ConfigurationError("i_max must be at least 1 p.u.")
        if self.c_dc <= 0:
            raise ConfigurationError("DC-link capacitance must be positive")


@dataclass
class VscState:
    theta_pll: float = 0.0
    pll_integ: float = 0.0
    f_meas: float = 50.0
    f_droop: float = 50.0        # low-pass frequency seen by the droop
    p_integ: float = 0.0
    q_integ: float = 0.0
    id_integ: float = 0.0        # inner loop (EMT only)
    iq_integ: float = 0.0
    i_d: float = 0.0             # filter currents (EMT only)
    i_q: float = 0.0
    v_dc: float = 1.0
    v_mag_filt: float = 1.0
    p_out: float = 0.0
    q_out: float = 0.0


def pll_step(state: VscState, v_d: float, v_q: float, params: VscParams,
             f_nom: float, h: float, rotating_frame: bool = True
             ) -> tuple[float, float]:
    """Advance the SRF-PLL one step; returns (frame angle, measured Hz).

    The PI acts on the normalized q-axis voltage, driving the frame onto
    the terminal-voltage angle.  In EMT mode the angle advances at the
    nominal speed plus the PI output; in phasor mode (synchronous frame)
    only the deviation is integrated.  During faults the PLL slews but
    never raises.
    """
    v_mag = math.hypot(v_d, v_q)
    err = v_q / max(v_mag, 0.05)
    d_omega = params.pll_kp * err + state.pll_integ
    state.pll_integ += h * params.pll_ki * err
    base = TWO_PI * f_nom if rotating_frame else 0.0
    state.theta_pll += h * (base + d_omega)
    state.f_meas = f_nom + d_omega / TWO_PI
    state.f_droop += h * (state.f_meas - state.f_droop) / params.f_droop_tau
    return state.theta_pll, state.f_meas


def droop_correction(f_meas: float, f_nom: float, params: VscParams) -> float:
    """Power setpoint correction from frequency droop, zero in deadband."""
    df = f_meas - f_nom
    db = params.droop_deadband_hz
    if abs(df) <= db:
        return 0.0
    beyond = df - math.copysign(db, df)
    return -params.droop_gain * beyond / f_nom


def frt_limit(i_d_ref: float, i_q_ref: float, v_mag: float,
              params: VscParams) -> tuple[float, float]:
    """Current limiting with reactive priority below the FRT threshold.

    Healthy voltage: proportional scaling to i_max preserving the angle.
    Faulted voltage: active current is blocked and the q axis injects
    the reactive-support droop 2*(V_thr - V)*i_max (capacitive); the
    renewable surplus meanwhile lands in the DC link and its chopper.
    """
    imax = params.i_max
    if v_mag < params.frt_v_threshold:
        support = min(2.0 * (params.frt_v_threshold - v_mag) * imax, imax)
        return 0.0, -support    # negative i_q injects reactive power
    mag = math.hypot(i_d_ref, i_q_ref)
    if mag > imax:
        s = imax / mag
        return i_d_ref * s, i_q_ref * s
    return i_d_ref, i_q_ref


def outer_loop_step(state: VscState, p_ref: float, q_ref: float,
                    v_d: float, v_q: float, p_meas: float, q_meas: float,
                    params: VscParams, f_nom: float,
                    h: float) -> tuple[float, float]:
    """P/Q regulators with droop and DC-link correction -> dq current refs."""
    droop = droop_correction(state.f_droop, f_nom, params)
    p_cmd = p_ref + droop + params.k_dc * (state.v_dc - 1.0)
    q_cmd = q_ref
    v_eff = max(state.v_mag_filt, 0.2)
    e_p = p_cmd - p_meas
    e_q = q_cmd - q_meas
    # PI acts on power commands, then converts to currents; q maps to
    # i_q with negative gain, hence the sign flip on the whole q channel
    i_d_ref = (p_cmd + params.outer_kp * e_p + state.p_integ) / v_eff
    i_q_ref = -(q_cmd + params.outer_kp * e_q + state.q_integ) / v_eff
    # integrate with simple conditional anti-windup at the current limit
    if math.hypot(i_d_ref, i_q_ref) < params.i_max:
        state.p_integ += h * params.outer_ki * e_p
        state.q_integ += h * params.outer_ki * e_q
    v_mag = math.hypot(v_d, v_q)
    state.v_mag_filt += h * (v_mag - state.v_mag_filt) / params.v_meas_tau
    return frt_limit(i_d_ref, i_q_ref, state.v_mag_filt, params)


def current_loop_step(state: VscState, i_d_ref: float, i_q_ref: float,
                      v_d: float, v_q: float, params: VscParams,
                      omega_nom: float, h: float) -> tuple[float, float]:
    """Inner PI current loop with cross-coupling decoupling (EMT only).

    Returns the converter bridge voltage command; gains place the closed
    loop at a first-order response of time constant ``inner_tau``.
    """
    kp = params.x_f / (omega_nom * params.inner_tau)
    ki = params.r_f / params.inner_tau
    e_d = i_d_ref - state.i_d
    e_q = i_q_ref - state.i_q
    u_d = kp * e_d + state.id_integ
    u_q = kp * e_q + state.iq_integ
    state.id_integ += h * ki * e_d
    state.iq_integ += h * ki * e_q
    v_cmd_d = v_d - params.x_f * state.i_q + u_d
    v_cmd_q = v_q + params.x_f * state.i_d + u_q
    return v_cmd_d, v_cmd_q


def phasor_injection(state: VscState, i_d_ref: float, i_q_ref: float) -> complex:
    """Current-source injection: limited reference rotated by the PLL angle."""
    return complex(i_d_ref, i_q_ref) * complex(
        math.cos(state.theta_pll), math.sin(state.theta_pll)
    )


def dc_link_step(state: VscState, p_in: float, p_out: float,
                 params: VscParams, h: float) -> float:
    """Euler step of C * dv/dt = (p_in - p_out) / v."""
    if state.v_dc <= 0:
        raise SimulationAbort("DC-link voltage collapsed to zero")
    state.v_dc += h * (p_in - p_out) / (params.c_dc * state.v_dc)
    if state.v_dc <= 0:
        raise SimulationAbort("DC-link voltage collapsed after step")
    # braking chopper burns any surplus above its clamp level
    if state.v_dc > params.v_chop:
        state.v_dc = params.v_chop
    return state.v_dc


class Vsc:
    """One grid-side converter plus its renewable source, either mode."""

    def __init__(self, params: VscParams, source, f_nom: float,
                 s_base: float, emt: bool):
        self.p = params
        self.source = source
        self.f_nom = f_nom
        self.omega_nom = TWO_PI * f_nom
        self.scale = params.s_rated / s_base
        self.emt = emt
        self.st = VscState(f_meas=f_nom, f_droop=f_nom)
        self.p_ref = 0.0
        self.q_ref = 0.0
        self._i_d_ref = 0.0
        self._i_q_ref = 0.0
        self._v_cmd_d = 1.0
        self._v_cmd_q = 0.0
        self.v_dq = complex(1.0, 0.0)
        self.p_dem = 0.0

    def interface_impedance(self) -> tuple[float, float]:
        """(r, x) of the filter branch on the converter base (EMT)."""
        return self.p.r_f, self.p.x_f

    @property
    def norton_y(self) -> complex:
        """Interface admittance on the system base (phasor)."""
        return self.scale / complex(self.p.r_f, self.p.x_f)

    def initialize(self, v_phasor: complex, p0: float, q0: float):
        """Back-initialize from a power-flow operating point (conv. base)."""
        st = self.st
        st.theta_pll = math.atan2(v_phasor.imag, v_phasor.real)
        st.pll_integ = 0.0
        st.f_meas = self.f_nom
        v = abs(v_phasor)
        st.v_mag_filt = v
        st.v_dc = 1.0
        st.i_d = p0 / v
        st.i_q = -q0 / v
        st.p_integ = 0.0
        st.q_integ = 0.0
        st.id_integ = self.p.r_f * st.i_d
        st.iq_integ = self.p.r_f * st.i_q
        st.p_out = p0
        st.q_out = q0
        self.p_ref = p0
        self.q_ref = q0
        self._i_d_ref = st.i_d
        self._i_q_ref = st.i_q
        self._v_cmd_d = v + self.p.r_f * st.i_d - self.p.x_f * st.i_q
        self._v_cmd_q = self.p.x_f * st.i_d + self.p.r_f * st.i_q
        self.p_dem = p0
        self.source.initialize(p0)

    def _controls(self, v_d: float, v_q: float, h: float):
        st = self.st
        p_meas = v_d * st.i_d + v_q * st.i_q if self.emt else st.p_out
        q_meas = v_q * st.i_d - v_d * st.i_q if self.emt else st.q_out
        i_d_ref, i_q_ref = outer_loop_step(
            st, self.p_ref, self.q_ref, v_d, v_q, p_meas, q_meas,
            self.p, self.f_nom, h,
        )
        self._i_d_ref, self._i_q_ref = i_d_ref, i_q_ref
        # droop-corrected demand sent to the source (no DC correction)
        self.p_dem = self.p_ref + droop_correction(st.f_droop, self.f_nom, self.p)
        if st.v_mag_filt < self.p.frt_v_threshold:
            # ride-through blocks active current, so nothing reaches the
            # grid and the source demand collapses with it
            self.p_dem = 0.0
        return i_d_ref, i_q_ref, p_meas, q_meas

    # -- EMT ---------------------------------------------------------------

    def bridge_voltage(self) -> tuple[float, float]:
        """Bridge voltage command in the PLL frame (converter base)."""
        return self._v_cmd_d, self._v_cmd_q

    def advance_emt(self, v_d: float, v_q: float, i_d: float, i_q: float,
                    h: float):
        """Advance all converter states given the terminal dq voltage and
        the solved filter current (PLL frame, converter p.u. base)."""
        st = self.st
        st.i_d, st.i_q = i_d, i_q
        i_d_ref, i_q_ref, p_meas, q_meas = self._controls(v_d, v_q, h)
        self._v_cmd_d, self._v_cmd_q = current_loop_step(
            st, i_d_ref, i_q_ref, v_d, v_q, self.p, self.omega_nom, h
        )
        st.p_out = p_meas
        st.q_out = q_meas
        self._dc_step(p_meas, h)
        pll_step(st, v_d, v_q, self.p, self.f_nom, h)

    def _dc_step(self, p_out: float, h: float):
        """DC side: stiff sources hold 1 p.u., others integrate the link."""
        if getattr(self.source, "stiff_dc", False):
            self.st.v_dc = 1.0
            return
        src = self.source
        if hasattr(src, "v_dc_pu"):
            # sources tied to the link voltage (boost-interfaced PV) see
            # the actual DC bus, so fault ride-through displaces their
            # operating point
            src.v_dc_pu = self.st.v_dc
        p_in = src.power_into_dc(self.p_dem, h)
        dc_link_step(self.st, p_in, p_out, self.p, h)

    # -- phasor ------------------------------------------------------------

    def injection_phasor(self) -> complex:
        """Network-frame current injection on the system base."""
        return phasor_injection(self.st, self._i_d_ref, self._i_q_ref) * self.scale

    def advance_phasor(self, v_bus: complex, h: float):
        st = self.st
        rot = complex(math.cos(st.theta_pll), -math.sin(st.theta_pll))
        v_dq = v_bus * rot
        i = complex(self._i_d_ref, self._i_q_ref)
        st.p_out = v_dq.real * i.real + v_dq.imag * i.imag
        st.q_out = v_dq.imag * i.real - v_dq.real * i.imag
        self._controls(v_dq.real, v_dq.imag, h)
        self._dc_step(st.p_out, h)
        pll_step(st, v_dq.real, v_dq.imag, self.p, self.f_nom, h,
                 rotating_frame=False)
