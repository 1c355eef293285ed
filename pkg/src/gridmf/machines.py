"""Synchronous generator models and their shared excitation/governor controls.

Three electrical variants are provided:

* inertia-only voltage-behind-impedance machine (swing equation plus a
  first-order field lag on the internal EMF),
* full dq flux model with field winding, one d-axis damper and two q-axis
  dampers (stator transients integrated in EMT mode, algebraic in phasor
  mode),
* the same flux model with a magnetizing-path saturation factor.

Conventions: generator sign convention (stator current positive out of
the machine), per-unit on the machine base, q-axis leading the d-axis by
90 electrical degrees with the field EMF on the q-axis.  The machine
frame angle ``delta`` is defined so that a network phasor ``V`` maps to
``v_d + j v_q = V * exp(-j delta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gridmf.simcore import ConfigurationError


@dataclass(frozen=True)
class SimplifiedSGParams:
    """Inertia-only machine: swing equation + field-lag internal EMF."""

    h_s: float          # inertia constant, s
    tau_f: float        # field circuit time constant, s
    x_s: float          # internal reactance, p.u.
    r_s: float          # internal resistance, p.u.
    s_rated: float      # machine base power, VA

    def __post_init__(self):
        if self.h_s <= 0 or self.tau_f <= 0 or self.x_s <= 0:
            raise ConfigurationError("H, tau_f and x_s must be positive")


@dataclass(frozen=True)
class Model22Params:
    """Fundamental (circuit) dq parameters, two rotor circuits per axis."""

    r_s: float
    x_l: float          # stator leakage
    x_md: float         # d-axis magnetizing
    x_mq: float         # q-axis magnetizing
    x_lf: float         # field leakage
    r_f: float
    x_lkd: float        # d-axis damper leakage
    r_kd: float
    x_lg1: float        # q-axis damper 1 leakage
    r_g1: float
    x_lg2: float        # q-axis damper 2 leakage
    r_g2: float
    h_s: float
    s_rated: float

    def __post_init__(self):
        for name in ("x_l", "x_md", "x_mq", "x_lf", "x_lkd", "x_lg1", "x_lg2"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"reactance {name} must be positive")
        for name in ("r_s", "r_f", "r_kd", "r_g1", "r_g2"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"resistance {name} must be >= 0")


@dataclass(frozen=True)
class SaturationParams:
    """k(psi) = 1 + coeff * max(0, psi - knee)**exponent, k >= 1.

    The defaults give 10 % saturation at 1.2 p.u. flux; with exponent 1
    the map psi -> psi/k(psi) is monotone for coeff * knee < 1.
    """

    knee: float = 0.8
    coeff: float = 0.25
    exponent: float = 1.0

    def __post_init__(self):
        if self.coeff < 0 or self.exponent <= 0 or self.knee < 0:
            raise ConfigurationError("invalid saturation parameters")


def saturation_factor(psi, params: SaturationParams):
    """Monotone nondecreasing factor k >= 1; identity below the knee."""
    psi = np.asarray(psi, dtype=float)
    excess = np.maximum(0.0, psi - params.knee)
    return 1.0 + params.coeff * excess**params.exponent


def apply_saturation(psi, params: SaturationParams):
    """Saturated magnetizing flux: psi / k(psi).  Never exceeds psi."""
    return np.asarray(psi, dtype=float) / saturation_factor(psi, params)


@dataclass
class AvrGovernorParams:
    """First-order AVR with PI + ceilings, and droop governor with servo."""

    t_meas: float = 0.02        # voltage measurement filter, s
    avr_kp: float = 20.0
    avr_ki: float = 10.0
    vf_min: float = 0.0
    vf_max: float = 5.0
    r_droop: float = 0.05       # p.u. speed per p.u. power (machine base)
    t_servo: float = 0.5        # governor servo time constant, s
    pm_max: float = 1.1


class AvrGovernorGroup:
    """Vectorized excitation + governor controls for n machines.

    The same controls drive every SG variant so that machine-model
    comparisons are not confounded by different controllers.
    """

    def __init__(self, params: AvrGovernorParams, n: int):
        self.p = params
        self.n = n
        self.v_ref = np.ones(n)
        self.p_ref = np.zeros(n)
        self.v_filt = np.ones(n)
        self.integ = np.zeros(n)
        self.vf = np.ones(n)
        self.pm = np.zeros(n)

    def initialize(self, v_mag0, vf0, pm0):
        self.v_ref = np.array(v_mag0, dtype=float)
        self.v_filt = np.array(v_mag0, dtype=float)
        self.integ = np.array(vf0, dtype=float)
        self.vf = np.array(vf0, dtype=float)
        self.p_ref = np.array(pm0, dtype=float)
        self.pm = np.array(pm0, dtype=float)

    def step(self, v_mag, omega, h: float):
        p = self.p
        self.v_filt += h / p.t_meas * (v_mag - self.v_filt)
        err = self.v_ref - self.v_filt
        vf_raw = p.avr_kp * err + self.integ
        # anti-windup: freeze the integrator while pushing into a ceiling
        push_hi = (vf_raw >= p.vf_max) & (err > 0)
        push_lo = (vf_raw <= p.vf_min) & (err < 0)
        self.integ += h * p.avr_ki * err * ~(push_hi | push_lo)
        self.vf = np.minimum(
            np.maximum(p.avr_kp * err + self.integ, p.vf_min), p.vf_max
        )
        target = np.minimum(
            np.maximum(self.p_ref + (1.0 - omega) / p.r_droop, 0.0), p.pm_max
        )
        self.pm += h / p.t_servo * (target - self.pm)
        return self.vf, self.pm


def simplified_sg_derivs(omega, e_s, p_m, p_e, v_f, params: SimplifiedSGParams,
                         omega_nom: float):
    """Swing + field-lag derivatives of the inertia-only machine."""
    d_omega = (p_m - p_e) / (2.0 * params.h_s)
    d_es = (v_f - e_s) / params.tau_f
    d_delta = omega_nom * (omega - 1.0)
    return d_omega, d_es, d_delta


class SimplifiedSGGroup:
    """Vectorized inertia-only machines (quasi-stationary stator).

    The stator is the algebraic voltage-behind-impedance circuit in both
    simulation modes; only omega, delta and the internal EMF are states.
    """

    variant = "simplified"

    def __init__(self, params: list[SimplifiedSGParams], omega_nom: float,
                 s_base: float):
        self.params = params
        self.n = len(params)
        self.omega_nom = omega_nom
        self.scale = np.array([p.s_rated for p in params]) / s_base
        self.h_s = np.array([p.h_s for p in params])
        self.tau_f = np.array([p.tau_f for p in params])
        self.z_int = np.array([p.r_s + 1j * p.x_s for p in params])
        self.omega = np.ones(self.n)
        self.delta = np.zeros(self.n)
        self.e_s = np.ones(self.n)
        self.p_e = np.zeros(self.n)
        self.i_dq = np.zeros(self.n, dtype=complex)
        self.online = np.ones(self.n, dtype=bool)
        # Norton admittance on the system base (angle-independent magnitude
        # is not; the engine rotates it -- see norton_admittance)
        self.y_int_mach = 1.0 / self.z_int

    state_slots = ["omega", "delta", "e_s"]

    @property
    def i_d(self):
        return self.i_dq.real

    @property
    def i_q(self):
        return self.i_dq.imag

    def initialize(self, v_phasor, s_pu_mach):
        """Back-initialize from a power-flow terminal point (machine base)."""
        i = np.conj(s_pu_mach / v_phasor)
        e = v_phasor + self.z_int * i
        self.delta = np.angle(e) - 0.5 * math.pi
        self.e_s = np.abs(e)
        self.omega = np.ones(self.n)
        rot = np.exp(-1j * self.delta)
        self.i_dq = i * rot
        v_dq = v_phasor * rot
        e_dq = 1j * self.e_s
        self.p_e = (e_dq * np.conj(self.i_dq)).real
        vf0 = self.e_s.copy()
        pm0 = self.p_e.copy()
        return np.abs(v_phasor), vf0, pm0

    def electrical(self, v_dq):
        """Stator solve in the machine frame: i = (jE - v) / z_int."""
        e_dq = 1j * self.e_s
        i = (e_dq - v_dq) / self.z_int
        i = np.where(self.online, i, 0.0)
        p_airgap = (e_dq * np.conj(i)).real
        return i, p_airgap

    def internal_emf(self):
        """Machine-frame EMF behind the internal impedance."""
        return 1j * self.e_s

    def interface_impedance(self):
        """Per-machine (r, x) of the network-side companion branch."""
        return (np.array([p.r_s for p in self.params]),
                np.array([p.x_s for p in self.params]))

    def advance_from_currents(self, i_dq, vf, pm, h: float):
        """Advance swing and field given the solved stator currents."""
        self.i_dq = np.where(self.online, i_dq, 0.0)
        self.p_e = (self.internal_emf() * np.conj(self.i_dq)).real
        d_om = np.where(self.online, (pm - self.p_e) / (2.0 * self.h_s), 0.0)
        d_es = (vf - self.e_s) / self.tau_f
        self.omega += h * d_om
        self.e_s += h * d_es
        self.delta += h * self.omega_nom * (self.omega - 1.0)

    def advance(self, v_dq, vf, pm, h: float):
        i, _ = self.electrical(v_dq)
        self.advance_from_currents(i, vf, pm, h)


def _axis_matrix(x_m, x_leak_stator, x_leak_a, x_leak_b):
    """Flux-current matrix for one axis: [psi_s, psi_a, psi_b] vs
    [-i_s, i_a, i_b] (stator current positive out)."""
    return np.array(
        [
            [x_leak_stator + x_m, x_m, x_m],
            [x_m, x_leak_a + x_m, x_m],
            [x_m, x_m, x_leak_b + x_m],
        ]
    )


class Model22Group:
    """Vectorized dq flux-model machines (field + 3 damper circuits).

    EMT mode integrates the stator flux derivatives; phasor mode removes
    them algebraically, leaving rotor fluxes, speed and angle as states.
    """

    variant = "model22"

    state_slots = [
        "psi_d", "psi_q", "psi_f", "psi_kd", "psi_g1", "psi_g2",
        "omega", "delta",
    ]

    def __init__(self, params: list[Model22Params], omega_nom: float,
                 s_base: float, saturation: SaturationParams | None = None):
        self.params = params
        self.n = len(params)
        self.omega_nom = omega_nom
        self.saturation = saturation
        self.scale = np.array([p.s_rated for p in params]) / s_base
        self.h_s = np.array([p.h_s for p in params])
        self.r_s = np.array([p.r_s for p in params])
        self.x_l = np.array([p.x_l for p in params])
        self.x_md = np.array([p.x_md for p in params])
        self.x_mq = np.array([p.x_mq for p in params])
        self.r_rot_d = np.stack([[p.r_f, p.r_kd] for p in params])
        self.r_rot_q = np.stack([[p.r_g1, p.r_g2] for p in params])
        self._build_matrices(np.ones(self.n))
        self._cache_unsat = (self.minv_d, self.minv_q, self.red_d, self.red_q)


        z = np.zeros(self.n)
        self.psi_d = z.copy()
        self.psi_q = z.copy()
        # rotor winding fluxes packed per machine: f, kd, g1, g2
        self.psi_rot = np.zeros((self.n, 4))
        self.omega = np.ones(self.n)
        self.delta = z.copy()
        self.i_d = z.copy()
        self.i_q = z.copy()
        self.p_e = z.copy()
        self.online = np.ones(self.n, dtype=bool)
        self._k_sat = np.ones(self.n)
        self._src_cache = None
        self._buf_d = np.empty((self.n, 3))
        self._buf_q = np.empty((self.n, 3))
        self._buf_rot = np.empty((self.n, 4))

    def _build_matrices(self, k):
        """(Re)build flux-current inverses with magnetizing branches
        scaled by 1/k (k = saturation factor, 1 = unsaturated)."""
        m_d = np.zeros((self.n, 3, 3))
        m_q = np.zeros((self.n, 3, 3))
        for i, p in enumerate(self.params):
            m_d[i] = _axis_matrix(p.x_md / k[i], p.x_l, p.x_lf, p.x_lkd)
            m_q[i] = _axis_matrix(p.x_mq / k[i], p.x_l, p.x_lg1, p.x_lg2)
        self.minv_d = np.linalg.inv(m_d)
        self.minv_q = np.linalg.inv(m_q)
        # phasor-mode reduction: psi_s = -x'' i_s + c . psi_rotor
        self.red_d = self._reduce(m_d, self.x_md / k)
        self.red_q = self._reduce(m_q, self.x_mq / k)

    @staticmethod
    def _reduce(m, x_m):
        """Eliminate rotor currents: returns (x_sub, c) with
        psi_stator = -x_sub * i_s + c @ psi_rotor."""
        n = m.shape[0]
        x_sub = np.zeros(n)
        c = np.zeros((n, 2))
        for i in range(n):
            rot = m[i, 1:, 1:]
            try:
                rinv = np.linalg.inv(rot)
            except np.linalg.LinAlgError as exc:
                raise ConfigurationError("singular flux-current matrix") from exc
            u = np.array([1.0, 1.0]) @ rinv
            x_sub[i] = m[i, 0, 0] - x_m[i] ** 2 * u.sum()
            c[i] = x_m[i] * u
        return x_sub, c

    @property
    def psi_f(self):
        return self.psi_rot[:, 0]

    @property
    def psi_kd(self):
        return self.psi_rot[:, 1]

    @property
    def psi_g1(self):
        return self.psi_rot[:, 2]

    @property
    def psi_g2(self):
        return self.psi_rot[:, 3]

    @property
    def x_sub(self):
        """Mean subtransient reactance used for the Norton interface."""
        return 0.5 * (self._cache_unsat[2][0] + self._cache_unsat[3][0])

    # -- initialization ----------------------------------------------------

    def initialize(self, v_phasor, s_pu_mach):
        i = np.conj(s_pu_mach / v_phasor)
        x_q = self.x_l + self.x_mq
        e_q = v_phasor + (self.r_s + 1j * x_q) * i
        self.delta = np.angle(e_q) - 0.5 * math.pi
        rot = np.exp(-1j * self.delta)
        v_dq = v_phasor * rot
        i_dq = i * rot
        v_d, v_q = v_dq.real, v_dq.imag
        self.i_d, self.i_q = i_dq.real, i_dq.imag
        # steady state at omega = 1, damper currents zero
        self.psi_d = v_q + self.r_s * self.i_q
        self.psi_q = -(v_d + self.r_s * self.i_d)
        k = np.ones(self.n)
        if self.saturation is not None:
            psi_ad = self.psi_d + self.x_l * self.i_d
            psi_aq = self.psi_q + self.x_l * self.i_q
            k = saturation_factor(np.hypot(psi_ad, psi_aq), self.saturation)
        x_md_eff = self.x_md / k
        x_mq_eff = self.x_mq / k
        x_lf = np.array([p.x_lf for p in self.params])
        i_f = (self.psi_d + (self.x_l + x_md_eff) * self.i_d) / x_md_eff
        self.psi_rot[:, 0] = -x_md_eff * self.i_d + (x_md_eff + x_lf) * i_f
        self.psi_rot[:, 1] = -x_md_eff * self.i_d + x_md_eff * i_f
        self.psi_rot[:, 2] = -x_mq_eff * self.i_q
        self.psi_rot[:, 3] = -x_mq_eff * self.i_q
        self.omega = np.ones(self.n)
        self._k_sat = k
        if self.saturation is not None:
            self._build_matrices(k)
        t_e = self.psi_d * self.i_q - self.psi_q * self.i_d
        self.p_e = t_e.copy()
        self._src_cache = None
        e_fd0 = x_md_eff * i_f
        return np.abs(v_phasor), e_fd0, t_e.copy()

    # -- shared pieces -----------------------------------------------------

    def _update_saturation(self):
        if self.saturation is None:
            return
        psi_ad = self.psi_d + self.x_l * self.i_d
        psi_aq = self.psi_q + self.x_l * self.i_q
        k = saturation_factor(np.hypot(psi_ad, psi_aq), self.saturation)
        if np.array_equal(k, np.ones(self.n)):
            if not np.array_equal(self._k_sat, k):
                (self.minv_d, self.minv_q,
                 self.red_d, self.red_q) = self._cache_unsat
                self._k_sat = k
        else:
            self._build_matrices(k)
            self._k_sat = k

    def _rotor_derivs(self, vf):
        """Rotor winding flux derivatives; also returns rotor currents."""
        mid = self.minv_d
        miq = self.minv_q
        pr = self.psi_rot
        full_d = self._buf_d
        full_d[:, 0] = self.psi_d
        full_d[:, 1] = pr[:, 0]
        full_d[:, 2] = pr[:, 1]
        full_q = self._buf_q
        full_q[:, 0] = self.psi_q
        full_q[:, 1] = pr[:, 2]
        full_q[:, 2] = pr[:, 3]
        cur_d = np.einsum("nij,nj->ni", mid, full_d)
        cur_q = np.einsum("nij,nj->ni", miq, full_q)
        # cur[:, 0] = -i_stator (by matrix convention), cur[:, 1:] = rotor
        x_md_eff = self.x_md / self._k_sat
        v_field = self.r_rot_d[:, 0] * vf / x_md_eff
        d_rot = self._buf_rot
        d_rot[:, 0] = v_field - self.r_rot_d[:, 0] * cur_d[:, 1]
        d_rot[:, 1] = -self.r_rot_d[:, 1] * cur_d[:, 2]
        d_rot[:, 2] = -self.r_rot_q[:, 0] * cur_q[:, 1]
        d_rot[:, 3] = -self.r_rot_q[:, 1] * cur_q[:, 2]
        d_rot *= self.omega_nom
        return d_rot, -cur_d[:, 0], -cur_q[:, 0]

    def _swing(self, pm, h):
        t_e = self.psi_d * self.i_q - self.psi_q * self.i_d
        self.p_e = t_e * self.omega
        d_om = np.where(self.online, (pm - self.p_e) / (2.0 * self.h_s), 0.0)
        self.omega += h * d_om
        self.delta += h * self.omega_nom * (self.omega - 1.0)

    # -- internal source ---------------------------------------------------

    def subtransient_source(self):
        """Machine-frame subtransient EMF and internal impedance.

        v_dq = E'' - (r_s + j x'') i_dq with the stator algebraic.  The
        d/q reactance difference cannot enter a complex impedance, so it
        is carried in the source as a saliency term built from the
        previous-step current (exact at equilibrium, lagged one step in
        transients).  The result is cached until the next state update
        since both engines query it more than once per step.
        """
        if self._src_cache is not None:
            return self._src_cache
        xd2, c_d = self.red_d
        xq2, c_q = self.red_q
        pr = self.psi_rot
        psi_d2 = c_d[:, 0] * pr[:, 0] + c_d[:, 1] * pr[:, 1]
        psi_q2 = c_q[:, 0] * pr[:, 2] + c_q[:, 1] * pr[:, 3]
        x_common = 0.5 * (xd2 + xq2)
        dx = 0.5 * (xq2 - xd2)
        e2 = self.omega * (
            -psi_q2 + 1j * psi_d2 + dx * (self.i_q + 1j * self.i_d)
        )
        self._src_cache = (e2, self.r_s + 1j * x_common, psi_d2, psi_q2,
                           xd2, xq2)
        return self._src_cache

    def internal_emf(self):
        """Machine-frame subtransient EMF for the network companion."""
        e2, _, _, _, _, _ = self.subtransient_source()
        return e2

    def interface_impedance(self):
        """Per-machine (r, x) of the network-side companion branch.

        Uses the unsaturated mean subtransient reactance so the companion
        stamp stays constant; saturation is carried in the source EMF.
        """
        xd2 = self._cache_unsat[2][0]
        xq2 = self._cache_unsat[3][0]
        return self.r_s, 0.5 * (xd2 + xq2)

    def advance_from_currents(self, i_dq, vf, pm, h: float):
        """Advance rotor fluxes and swing given the solved stator currents.

        The stator flux follows algebraically from the subtransient
        reduction; its fast dynamics live in the network-side companion
        branch of the interface reactance.
        """
        _, _, psi_d2, psi_q2, xd2, xq2 = self.subtransient_source()
        i_dq = np.where(self.online, i_dq, 0.0)
        self.i_d, self.i_q = i_dq.real, i_dq.imag
        self.psi_d = -xd2 * self.i_d + psi_d2
        self.psi_q = -xq2 * self.i_q + psi_q2
        d_rot, _, _ = self._rotor_derivs(vf)
        self._swing(pm, h)
        self.psi_rot += (h * self.online)[:, None] * d_rot
        self._update_saturation()
        self._src_cache = None

    def advance_phasor(self, v_dq, vf, pm, h: float):
        """One Euler step with the stator flux derivatives neglected."""
        e2, z2, _, _, _, _ = self.subtransient_source()
        i = (e2 - v_dq) / z2
        i = np.where(self.online, i, 0.0)
        self.advance_from_currents(i, vf, pm, h)
