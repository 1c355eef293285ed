"""EMT and phasor simulation engines over a common system description.

Both engines initialize from the same power-flow solution, fire the same
scripted events and record the same named signals so that runs are
directly comparable.  A single run is strictly single-threaded and
deterministic.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field

import numpy as np

from gridmf import converter as cv
from gridmf import machines as mc
from gridmf import network as nw
from gridmf.simcore import (
    ConfigurationError,
    IntegratorConfig,
    SimulationAbort,
    SimulationMode,
    StateVector,
    TWO_PI,
)

_NONFINITE_CHECK_EVERY = 200


@dataclass
class MachineSpec:
    name: str
    bus: str
    model22: mc.Model22Params
    simplified: mc.SimplifiedSGParams
    p_mw: float            # scheduled active power
    v_set: float           # terminal voltage setpoint, p.u.


@dataclass
class VscSpec:
    name: str
    bus: str
    params: cv.VscParams
    p0_mw: float
    q0_mvar: float


@dataclass
class Event:
    t: float
    kind: str
    payload: dict = field(default_factory=dict)


@dataclass
class System:
    """Assembled network + device description, pre-selection of models."""

    model: nw.NetworkModel
    machines: list[MachineSpec]
    vsc: VscSpec
    slack: int = 0          # index into machines

    @property
    def f_nom(self) -> float:
        return self.model.base.f_nom


@dataclass
class RunResult:
    times: np.ndarray
    signals: dict[str, np.ndarray]
    wall_seconds: float
    meta: dict

    def signal(self, name: str) -> np.ndarray:
        if name not in self.signals:
            raise KeyError(f"unknown signal {name}")
        return self.signals[name]


def _build_machine_group(system: System, sg_model: str, omega_nom, s_base,
                         saturation):
    if sg_model == "simplified":
        return mc.SimplifiedSGGroup(
            [m.simplified for m in system.machines], omega_nom, s_base
        )
    if sg_model == "model22":
        return mc.Model22Group(
            [m.model22 for m in system.machines], omega_nom, s_base
        )
    if sg_model == "model22_sat":
        return mc.Model22Group(
            [m.model22 for m in system.machines], omega_nom, s_base,
            saturation=saturation or mc.SaturationParams(),
        )
    raise ConfigurationError(f"unknown SG model {sg_model}")


def _power_flow_solution(system: System, h_snap: float | None = None):
    """Newton power flow on the selected network; returns bus voltages and
    per-machine / converter initial complex powers (system p.u.)."""
    model = system.model
    base = model.base
    net = nw.PhasorNetwork(model, emt_step_for_bergeron=h_snap)
    y = net.lines_only_admittance()
    n = len(model.buses)
    p_sched = np.zeros(n)
    q_sched = np.zeros(n)
    v_sched = np.ones(n)
    gen_buses = [model.bus_index(m.bus) for m in system.machines]
    for m, b in zip(system.machines, gen_buses):
        p_sched[b] += m.p_mw * 1e6 / base.s_base
        v_sched[b] = m.v_set
    vb = model.bus_index(system.vsc.bus)
    p_sched[vb] += system.vsc.p0_mw * 1e6 / base.s_base
    q_sched[vb] += system.vsc.q0_mvar * 1e6 / base.s_base
    for ld in model.loads:
        b = model.bus_index(ld.bus)
        p_sched[b] -= ld.p_mw * 1e6 / base.s_base
        q_sched[b] -= ld.q_mvar * 1e6 / base.s_base

    slack_bus = gen_buses[system.slack]
    pv = [b for b in gen_buses if b != slack_bus]
    pq = [b for b in range(n) if b not in gen_buses]
    v = nw.solve_power_flow(y, slack_bus, pv, pq, p_sched, q_sched, v_sched)

    s_net = v * np.conj(y @ v)
    s_gen = []
    for m, b in zip(system.machines, gen_buses):
        s_gen.append(s_net[b])        # gen buses carry no loads or converter
    s_vsc = complex(system.vsc.p0_mw, system.vsc.q0_mvar) * 1e6 / base.s_base
    return v, np.array(s_gen), s_vsc


class _RunCommon:
    """State and helpers shared by the two engines."""

    def __init__(self, system: System, selection, events: list[Event],
                 duration: float, config: IntegratorConfig,
                 res_factory, signals: list[str] | None,
                 output_dt: float = 1e-3):
        self.system = system
        self.selection = selection
        self.base = system.model.base
        self.h = config.step_h
        self.duration = duration
        self.output_dt = output_dt
        self.rec_every = max(1, int(round(output_dt / self.h)))
        self.events = sorted(events, key=lambda e: e.t)
        self.machines = _build_machine_group(
            system, selection.sg_model, self.base.omega_nom, self.base.s_base,
            getattr(selection, "saturation", None),
        )
        self.gen_buses = np.array(
            [system.model.bus_index(m.bus) for m in system.machines]
        )
        self.avrgov = mc.AvrGovernorGroup(
            mc.AvrGovernorParams(), len(system.machines)
        )
        source = res_factory(system.vsc.params.s_rated)
        self.vsc = cv.Vsc(
            system.vsc.params, source, self.base.f_nom, self.base.s_base,
            emt=isinstance(self, EmtEngine),
        )
        self.vsc_bus = system.model.bus_index(system.vsc.bus)
        self.requested_signals = signals
        self.state = StateVector()
        for m, spec in zip(range(len(system.machines)), system.machines):
            self.state.register_block(spec.name, self.machines.state_slots)
        self.state.register_block(system.vsc.name, ["v_dc", "theta_pll"])
        self.state.finalize()

    def _signal_names(self):
        names = []
        for spec in self.system.machines:
            names += [f"{spec.name}.speed", f"{spec.name}.p_mw"]
        names += ["RES.p_mw", "RES.q_mvar", "RES.v_dc", "RES.f_pll_hz"]
        names += [f"bus{b}.v_pu" for b in self.system.model.buses]
        if self.requested_signals:
            unknown = [s for s in self.requested_signals if s not in names]
            if unknown:
                raise ConfigurationError(f"unknown signals: {unknown}")
            return self.requested_signals
        return names

    def _check_finite(self, step):
        g = self.machines
        groups = [("omega", g.omega), ("delta", g.delta),
                  ("i_d", np.atleast_1d(g.i_d)), ("i_q", np.atleast_1d(g.i_q))]
        for slot, vals in groups:
            bad = np.flatnonzero(~np.isfinite(vals))
            if bad.size:
                name = self.system.machines[bad[0]].name
                raise SimulationAbort(
                    f"non-finite {name}.{slot} at step {step} "
                    f"(t={step * self.h:.6f} s)"
                )
        st = self.vsc.st
        for slot, val in (("v_dc", st.v_dc), ("theta_pll", st.theta_pll),
                          ("i_d", st.i_d), ("i_q", st.i_q)):
            if not math.isfinite(val):
                raise SimulationAbort(
                    f"non-finite {self.system.vsc.name}.{slot} at step "
                    f"{step} (t={step * self.h:.6f} s)"
                )

    def _machine_pm_vf(self, v_mag, h):
        return self.avrgov.step(v_mag, self.machines.omega, h)

    @property
    def _n_cols(self):
        return 2 * len(self.system.machines) + 4 + len(self.system.model.buses)

    def _package(self, times, rec, names, wall, mode):
        full_names = []
        for spec in self.system.machines:
            full_names += [f"{spec.name}.speed", f"{spec.name}.p_mw"]
        full_names += ["RES.p_mw", "RES.q_mvar", "RES.v_dc", "RES.f_pll_hz"]
        full_names += [f"bus{b}.v_pu" for b in self.system.model.buses]
        signals = {
            n: rec[:, i].copy() for i, n in enumerate(full_names) if n in names
        }
        return RunResult(
            times=times,
            signals=signals,
            wall_seconds=wall,
            meta={
                "mode": mode,
                "step_h": self.h,
                "duration": self.duration,
                "selection": repr(self.selection),
            },
        )

    def _record_row(self, row, v_mag_bus):
        g = self.machines
        sb = self.base.s_base
        k = 0
        for i, spec in enumerate(self.system.machines):
            row[k] = g.omega[i]
            row[k + 1] = g.p_e[i] * g.scale[i] * sb / 1e6
            k += 2
        st = self.vsc.st
        srat = self.vsc.p.s_rated
        row[k] = st.p_out * srat / 1e6
        row[k + 1] = st.q_out * srat / 1e6
        row[k + 2] = st.v_dc
        row[k + 3] = st.f_meas
        k += 4
        row[k: k + len(v_mag_bus)] = v_mag_bus


class EmtEngine(_RunCommon):
    """abc-domain EMT simulation with trapezoidal network companions and
    forward-Euler device integration.

    Machines and the converter couple to the network through companion
    branches of their interface impedance (r + jx'' for machines, the
    R-L filter for the converter) driven by internal EMF sources.  The
    fast stator and filter dynamics are therefore integrated inside the
    A-stable network solution; injecting them as bare current sources
    makes the LC modes against the line charging capacitance unstable
    under explicit integration at this step size.
    """

    def __init__(self, system, selection, events, duration, config,
                 res_factory, signals=None, settle_time: float = 1.0,
                 output_dt: float = 1e-3):
        if config.mode is not SimulationMode.EMT:
            raise ConfigurationError("EMT engine needs an EMT step config")
        super().__init__(system, selection, events, duration, config,
                         res_factory, signals, output_dt)
        self.settle = settle_time
        self.net = nw.EmtCompanionNetwork(system.model, self.h)

    def _setup_interfaces(self):
        """Constant companion stamps for the machine and converter branches."""
        g = self.machines
        h = self.h
        wb = self.base.omega_nom
        r_m, x_m = g.interface_impedance()
        r_sys = np.asarray(r_m, dtype=float) / g.scale
        l_sys = np.asarray(x_m, dtype=float) / wb / g.scale
        self._g_dev = 1.0 / (r_sys + 2.0 * l_sys / h)
        self._k_dev = (2.0 * l_sys / h - r_sys) * self._g_dev
        self._hist_m = np.zeros((len(r_sys), 3))
        for i, spec in enumerate(self.system.machines):
            self.net.add_device_norton(spec.name, spec.bus, self._g_dev[i])
        r_f, x_f = self.vsc.interface_impedance()
        r_vs = r_f / self.vsc.scale
        l_vs = x_f / wb / self.vsc.scale
        self._g_vsc = 1.0 / (r_vs + 2.0 * l_vs / h)
        self._k_vsc = (2.0 * l_vs / h - r_vs) * self._g_vsc
        self._hist_v = np.zeros(3)
        self.net.add_device_norton(self.system.vsc.name, self.system.vsc.bus,
                                   self._g_vsc)
        self._gen_unique = len(set(self.gen_buses)) == len(self.gen_buses)

    def run(self) -> RunResult:
        sysm = self.system
        base = self.base
        wb = base.omega_nom
        h = self.h
        v0, s_gen, s_vsc = _power_flow_solution(sysm, h_snap=h)

        # device initialization from the power-flow point
        g = self.machines
        v_gen = v0[self.gen_buses]
        vmag0, vf0, pm0 = g.initialize(v_gen, s_gen / g.scale)
        self.avrgov.initialize(vmag0, vf0, pm0)
        self.vsc.initialize(
            v0[self.vsc_bus], s_vsc.real / self.vsc.scale,
            s_vsc.imag / self.vsc.scale,
        )
        # loads converted to impedances at their solved voltages
        self._stamp_loads(v0)
        self._setup_interfaces()
        self._precharge(v0, s_gen, s_vsc)

        n_settle = int(round(self.settle / h))
        n_run = int(round(self.duration / h))
        n_total = n_settle + n_run
        # events snapped to step boundaries, shifted past the settle window
        ev_steps = [
            (int(round(e.t / h)) + n_settle, e) for e in self.events
        ]
        ev_i = 0

        names = self._signal_names()
        n_rec = n_run // self.rec_every + 1
        rec = np.zeros((n_rec, self._n_cols))
        times = np.zeros(n_rec)
        rec_k = 0

        off = np.array([0.0, -TWO_PI / 3.0, TWO_PI / 3.0])
        scale = g.scale
        n_m = len(sysm.machines)
        on3 = np.ones((n_m, 1))
        # machine rotor angles and the PLL angle share one trig evaluation
        ang_all = np.empty((n_m + 1, 3))

        t_start = time.perf_counter()
        for step in range(n_total):
            t = step * h
            while ev_i < len(ev_steps) and ev_steps[ev_i][0] <= step:
                self._apply_event(ev_steps[ev_i][1], v0)
                ev_i += 1
            on3[:, 0] = g.online

            # internal EMF sources behind the interface companions
            st = self.vsc.st
            theta = wb * t + g.delta
            ang_all[:n_m] = theta[:, None] + off[None, :]
            ang_all[n_m] = st.theta_pll + off
            c_all = np.cos(ang_all)
            s_all = np.sin(ang_all)
            cth, cp3 = c_all[:n_m], c_all[n_m]
            sth, sp3 = s_all[:n_m], s_all[n_m]
            e_dq = g.internal_emf()
            e_abc = e_dq.real[:, None] * cth - e_dq.imag[:, None] * sth
            inj = self.net.history_injections()
            src_m = (self._g_dev[:, None] * e_abc + self._hist_m) * on3
            if self._gen_unique:
                inj[self.gen_buses] += src_m
            else:
                np.add.at(inj, self.gen_buses, src_m)

            vc_d, vc_q = self.vsc.bridge_voltage()
            ev_abc = vc_d * cp3 - vc_q * sp3
            inj[self.vsc_bus] += self._g_vsc * ev_abc + self._hist_v

            v_nodes = self.net.solve(inj)
            self.net.update_histories(v_nodes)

            # interface branch currents and their history update
            u_m = e_abc - v_nodes[self.gen_buses]
            i_br = (self._g_dev[:, None] * u_m + self._hist_m) * on3
            self._hist_m = (self._g_dev[:, None] * u_m
                            + self._k_dev[:, None] * i_br) * on3
            i_mach = i_br / scale[:, None]
            i_d = (2.0 / 3.0) * np.einsum("mp,mp->m", i_mach, cth)
            i_q = -(2.0 / 3.0) * np.einsum("mp,mp->m", i_mach, sth)

            u_v = ev_abc - v_nodes[self.vsc_bus]
            i_brv = self._g_vsc * u_v + self._hist_v
            self._hist_v = self._g_vsc * u_v + self._k_vsc * i_brv
            i_conv = i_brv / self.vsc.scale
            id_vsc = (2.0 / 3.0) * float(i_conv @ cp3)
            iq_vsc = -(2.0 / 3.0) * float(i_conv @ sp3)

            # machine frame voltages and state advance
            v_gen_abc = v_nodes[self.gen_buses]
            v_d = (2.0 / 3.0) * np.einsum("mp,mp->m", v_gen_abc, cth)
            v_q = -(2.0 / 3.0) * np.einsum("mp,mp->m", v_gen_abc, sth)
            v_mag = np.hypot(v_d, v_q)
            vf, pm = self._machine_pm_vf(v_mag, h)
            g.advance_from_currents(i_d + 1j * i_q, vf, pm, h)

            v_vsc_abc = v_nodes[self.vsc_bus]
            vd_vsc = (2.0 / 3.0) * float(v_vsc_abc @ cp3)
            vq_vsc = -(2.0 / 3.0) * float(v_vsc_abc @ sp3)
            self.vsc.advance_emt(vd_vsc, vq_vsc, id_vsc, iq_vsc, h)

            if step % _NONFINITE_CHECK_EVERY == 0:
                self._check_finite(step)

            rstep = step - n_settle
            if rstep >= 0 and rstep % self.rec_every == 0 and rec_k < n_rec:
                vb_mag = np.sqrt((2.0 / 3.0) * np.sum(v_nodes**2, axis=1))
                self._record_row(rec[rec_k], vb_mag)
                times[rec_k] = rstep * h
                rec_k += 1
        wall = time.perf_counter() - t_start

        return self._package(times[:rec_k], rec[:rec_k], names, wall, "emt")

    # -- helpers -----------------------------------------------------------

    def _stamp_loads(self, v0):
        # replace the nominal-voltage load impedances with ones computed at
        # the solved voltages so the steady state matches the power flow
        for ld in self.system.model.loads:
            b = self.system.model.bus_index(ld.bus)
            slot = self.net._load_slots[ld.name]
            z = abs(v0[b]) ** 2 / np.conj(
                complex(ld.p_mw, ld.q_mvar) * 1e6 / self.base.s_base
            )
            hh = self.net.h
            l_eff = z.imag / self.base.omega_nom
            denom = z.real + 2.0 * l_eff / hh
            self.net._rl_g[slot] = 1.0 / denom
            self.net._rl_k[slot] = (2.0 * l_eff / hh - z.real) / denom
        self.net.rebuild()

    def _precharge(self, v0, s_gen, s_vsc):
        """Start all companion histories on the sinusoidal steady state.

        Branch phasors follow from the power-flow voltages; companion
        currents use the exact discrete-time sinusoidal response of the
        trapezoidal rule, so the network starts essentially settled
        instead of energizing from rest.
        """
        net = self.net
        h = net.h
        w = self.base.omega_nom
        off = np.array([0.0, -TWO_PI / 3.0, TWO_PI / 3.0])
        ph = np.exp(1j * off)
        zm1 = cmath.exp(-1j * w * h)

        # series R-L branches (lines and loads)
        for b in range(len(net._rl_g)):
            if not net._rl_on[b]:
                continue
            i, j = net._rl_i[b], net._rl_j[b]
            u_ph = v0[i] - (v0[j] if j >= 0 else 0.0)
            g_b, k_b = net._rl_g[b], net._rl_k[b]
            i_ph = g_b * u_ph * (1.0 + zm1) / (1.0 - k_b * zm1)
            net._hist_rl[b] = np.real((i_ph - g_b * u_ph) * ph)
            net._i_rl[b] = np.real(i_ph * zm1 * ph)

        # shunt capacitors: state is the previous-step sample
        for c in range(len(net._c_g)):
            node = net._c_node[c]
            i_ph = net._c_g[c] * v0[node] * (1.0 - zm1) / (1.0 + zm1)
            net._v_c[c] = np.real(v0[node] * zm1 * ph)
            net._i_c[c] = np.real(i_ph * zm1 * ph)

        # travelling-wave ring buffers, one entry per delayed step
        for line in net._bg:
            br = self.system.model.branch_by_name(line["name"])
            zc = br.z_surge / self.base.z_base
            r_pu = br.r_total / self.base.z_base
            tau = line["depth"] * h
            y11, y12 = nw.bergeron_phasor_two_port(zc, r_pu, tau, w)
            vi, vj = v0[line["i"]], v0[line["j"]]
            ii = y11 * vi + y12 * vj
            ij = y11 * vj + y12 * vi
            for nstep in range(line["depth"]):
                rot = cmath.exp(1j * w * nstep * h) * ph
                line["src_i"][nstep] = np.real((ii - line["g"] * vi) * rot)
                line["src_j"][nstep] = np.real((ij - line["g"] * vj) * rot)

        # machine and converter interface branches
        g = self.machines
        e_net = g.internal_emf() * np.exp(1j * g.delta)
        i_sys = np.conj(s_gen / v0[self.gen_buses])
        u_ph = e_net - v0[self.gen_buses]
        for m in range(len(self.system.machines)):
            self._hist_m[m] = np.real(
                (i_sys[m] - self._g_dev[m] * u_ph[m]) * ph
            )
        st = self.vsc.st
        vc_d, vc_q = self.vsc.bridge_voltage()
        e_vsc = complex(vc_d, vc_q) * cmath.exp(1j * st.theta_pll)
        i_vsc = np.conj(s_vsc / v0[self.vsc_bus])
        u_vsc = e_vsc - v0[self.vsc_bus]
        self._hist_v = np.real((i_vsc - self._g_vsc * u_vsc) * ph)

    def _apply_event(self, e: Event, v0):
        if e.kind == "res_setpoint":
            self.vsc.p_ref = e.payload["p_mw"] * 1e6 / self.vsc.p.s_rated
            self.vsc.q_ref = e.payload["q_mvar"] * 1e6 / self.vsc.p.s_rated
        elif e.kind == "load_on":
            self.net.connect_load(e.payload["load"])
        elif e.kind == "fault_on":
            self.net.apply_fault(e.payload["fault"])
        elif e.kind == "fault_off":
            self.net.clear_fault(e.payload["fault"])
        elif e.kind == "disconnect_gen":
            idx = [m.name for m in self.system.machines].index(
                e.payload["name"]
            )
            self.machines.online[idx] = False
            self._hist_m[idx] = 0.0
            self.net.remove_device_norton(e.payload["name"])
        elif e.kind == "open_branch":
            self.net.open_branch(e.payload["name"])
        else:
            raise ConfigurationError(f"unknown event kind {e.kind}")


class PhasorEngine(_RunCommon):
    """Positive-sequence phasor simulation with algebraic network."""

    def __init__(self, system, selection, events, duration, config,
                 res_factory, signals=None, output_dt: float = 1e-3):
        if config.mode is not SimulationMode.PHASOR:
            raise ConfigurationError("phasor engine needs a phasor step config")
        super().__init__(system, selection, events, duration, config,
                         res_factory, signals, output_dt)
        self.net = nw.PhasorNetwork(
            system.model,
            emt_step_for_bergeron=IntegratorConfig(SimulationMode.EMT).step_h,
        )

    def run(self) -> RunResult:
        sysm = self.system
        h = self.h
        v0, s_gen, s_vsc = _power_flow_solution(
            sysm, h_snap=self.net._h_snap
        )
        g = self.machines
        v_gen = v0[self.gen_buses]
        vmag0, vf0, pm0 = g.initialize(v_gen, s_gen / g.scale)
        self.avrgov.initialize(vmag0, vf0, pm0)
        self.vsc.initialize(
            v0[self.vsc_bus], s_vsc.real / self.vsc.scale,
            s_vsc.imag / self.vsc.scale,
        )
        self._stamp_loads(v0)
        if isinstance(g, mc.SimplifiedSGGroup):
            z_int = np.array([complex(p.r_s, p.x_s) for p in g.params])
        else:
            z_int = g.r_s + 1j * g.x_sub
        self._z_int = z_int
        y_m = g.scale / z_int
        for i, spec in enumerate(sysm.machines):
            self.net.add_device_admittance(spec.name, spec.bus, y_m[i])
        self._y_m = y_m

        n_run = int(round(self.duration / h))
        ev_steps = [(int(round(e.t / h)), e) for e in self.events]
        ev_i = 0

        names = self._signal_names()
        n_rec = n_run // self.rec_every + 1
        rec = np.zeros((n_rec, self._n_cols))
        times = np.zeros(n_rec)
        rec_k = 0

        t_start = time.perf_counter()
        for step in range(n_run):
            while ev_i < len(ev_steps) and ev_steps[ev_i][0] <= step:
                self._apply_event(ev_steps[ev_i][1])
                ev_i += 1

            inj = np.zeros(self.net.n, dtype=complex)
            rot = np.exp(1j * g.delta)
            if isinstance(g, mc.SimplifiedSGGroup):
                e_int = 1j * g.e_s
            else:
                e_int = g.subtransient_source()[0]
            i_src = np.where(self.machines.online,
                             e_int * rot * self._y_m, 0.0)
            np.add.at(inj, self.gen_buses, i_src)
            inj[self.vsc_bus] += self.vsc.injection_phasor()

            v = self.net.solve(inj)
            v_gen_ph = v[self.gen_buses]
            v_dq = v_gen_ph * np.conj(rot)
            v_mag = np.abs(v_gen_ph)
            vf, pm = self._machine_pm_vf(v_mag, h)
            if isinstance(g, mc.SimplifiedSGGroup):
                g.advance(v_dq, vf, pm, h)
            else:
                g.advance_phasor(v_dq, vf, pm, h)
            self.vsc.advance_phasor(complex(v[self.vsc_bus]), h)

            if step % _NONFINITE_CHECK_EVERY == 0:
                self._check_finite(step)
            if step % self.rec_every == 0 and rec_k < n_rec:
                self._record_row(rec[rec_k], np.abs(v))
                times[rec_k] = step * h
                rec_k += 1
        wall = time.perf_counter() - t_start

        return self._package(times[:rec_k], rec[:rec_k], names, wall,
                             "phasor")

    def _stamp_loads(self, v0):
        model = self.system.model
        for ld in model.loads:
            b = model.bus_index(ld.bus)
            s = complex(ld.p_mw, ld.q_mvar) * 1e6 / self.base.s_base
            y_nominal = s.conjugate()
            y_actual = s.conjugate() / abs(v0[b]) ** 2
            self.net._extra_load_y[b] += y_actual - y_nominal
        self.net.rebuild()

    def _machine_neg_y(self):
        return {
            spec.name: (self.system.model.bus_index(spec.bus), self._y_m[i])
            for i, spec in enumerate(self.system.machines)
            if self.machines.online[i]
        }

    def _apply_event(self, e: Event):
        if e.kind == "res_setpoint":
            self.vsc.p_ref = e.payload["p_mw"] * 1e6 / self.vsc.p.s_rated
            self.vsc.q_ref = e.payload["q_mvar"] * 1e6 / self.vsc.p.s_rated
        elif e.kind == "load_on":
            self.net.connect_load(e.payload["load"])
        elif e.kind == "fault_on":
            self.net.apply_fault(e.payload["fault"], self._machine_neg_y())
        elif e.kind == "fault_off":
            self.net.clear_fault(e.payload["fault"])
        elif e.kind == "disconnect_gen":
            idx = [m.name for m in self.system.machines].index(
                e.payload["name"]
            )
            self.machines.online[idx] = False
            self.net.remove_device_admittance(e.payload["name"])
        elif e.kind == "open_branch":
            self.net.open_branch(e.payload["name"])
        else:
            raise ConfigurationError(f"unknown event kind {e.kind}")
