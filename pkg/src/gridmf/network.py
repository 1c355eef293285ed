"""Bus/branch network, line models, fault handling and the two solvers.

The EMT solver works per phase in the abc domain with trapezoidal
companion models for R, L and C elements and travelling-wave history
sources for Bergeron lines.  The phasor solver assembles complex nodal
admittance matrices per sequence; asymmetric faults enter the
positive-sequence network through the standard sequence-interconnection
equivalent.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from gridmf.simcore import ConfigurationError, PerUnitBase, SimulationAbort

PI_MODEL = "pi"
BERGERON_MODEL = "bergeron"


@dataclass
class BranchSpec:
    """Transmission line between two buses, PI or Bergeron variant."""

    name: str
    from_bus: str
    to_bus: str
    length_km: float
    r_ohm_per_km: float
    l_mh_per_km: float
    c_nf_per_km: float
    model: str = PI_MODEL

    def __post_init__(self):
        if self.length_km <= 0 or self.l_mh_per_km <= 0:
            raise ConfigurationError(f"branch {self.name}: length and L must be > 0")
        if self.r_ohm_per_km < 0 or self.c_nf_per_km < 0:
            raise ConfigurationError(f"branch {self.name}: R and C must be >= 0")
        if self.model not in (PI_MODEL, BERGERON_MODEL):
            raise ConfigurationError(f"branch {self.name}: unknown model {self.model}")

    # -- derived SI quantities --------------------------------------------

    @property
    def r_total(self) -> float:
        return self.r_ohm_per_km * self.length_km

    @property
    def l_total(self) -> float:
        return self.l_mh_per_km * 1e-3 * self.length_km

    @property
    def c_total(self) -> float:
        return self.c_nf_per_km * 1e-9 * self.length_km

    @property
    def z_surge(self) -> float:
        """Characteristic impedance sqrt(L'/C'), ohms."""
        if self.c_nf_per_km <= 0:
            raise ConfigurationError(f"branch {self.name}: bergeron needs C' > 0")
        return math.sqrt(self.l_mh_per_km * 1e-3 / (self.c_nf_per_km * 1e-9))

    @property
    def travel_time(self) -> float:
        """Wave travel time length * sqrt(L'C'), seconds."""
        return self.length_km * math.sqrt(
            self.l_mh_per_km * 1e-3 * self.c_nf_per_km * 1e-9
        )


@dataclass
class LoadSpec:
    name: str
    bus: str
    p_mw: float
    q_mvar: float


@dataclass
class FaultElement:
    bus: str
    r_ohm: float
    kind: str = "three_phase"          # or "single_phase"
    phase: str = "b"
    t_on: float = 0.0
    t_off: float | None = None         # None = permanent

    def __post_init__(self):
        if self.r_ohm <= 0:
            raise ConfigurationError("fault resistance must be > 0")
        if self.t_off is not None and self.t_off <= self.t_on:
            raise ConfigurationError("fault t_off must exceed t_on")
        if self.kind not in ("three_phase", "single_phase"):
            raise ConfigurationError(f"unknown fault kind {self.kind}")


@dataclass
class NetworkModel:
    """Bus/branch description on a single voltage zone."""

    base: PerUnitBase
    buses: list[str]
    branches: list[BranchSpec]
    loads: list[LoadSpec] = field(default_factory=list)
    zero_seq_z_factor: float = 3.0

    def __post_init__(self):
        if len(set(self.buses)) != len(self.buses):
            raise ConfigurationError("bus ids must be unique")
        known = set(self.buses)
        for br in self.branches:
            if br.from_bus not in known or br.to_bus not in known:
                raise ConfigurationError(
                    f"branch {br.name} references unknown bus"
                )
        for ld in self.loads:
            if ld.bus not in known:
                raise ConfigurationError(f"load {ld.name} references unknown bus")

    def bus_index(self, bus: str) -> int:
        try:
            return self.buses.index(bus)
        except ValueError as exc:
            raise ConfigurationError(f"unknown bus {bus}") from exc

    def branch_by_name(self, name: str) -> BranchSpec:
        for br in self.branches:
            if br.name == name:
                return br
        raise ConfigurationError(f"unknown branch {name}")


_PHASES = {"a": 0, "b": 1, "c": 2}


def _branch_pu(br: BranchSpec, base: PerUnitBase):
    """Series R (pu), L (pu*s i.e. X/omega), total shunt C (pu*s)."""
    zb = base.z_base
    r = br.r_total / zb
    l_eff = br.l_total / zb
    c_eff = br.c_total * zb
    return r, l_eff, c_eff


class EmtCompanionNetwork:
    """Per-phase trapezoidal companion network for the EMT engine.

    Owns the conductance matrices (one per phase), history states of all
    R-L branches, capacitor shunts and Bergeron lines, plus event hooks
    for faults, breakers, load switching and device disconnection.
    """

    def __init__(self, model: NetworkModel, h: float):
        self.model = model
        self.h = h
        self.n = len(model.buses)
        base = model.base
        self.omega = base.omega_nom

        # R-L series elements: lines (bus-bus) and loads (bus-ground)
        self._rl_g = []
        self._rl_k = []
        self._rl_i = []      # from-node index
        self._rl_j = []      # to-node index, -1 = ground
        self._rl_on = []
        self._rl_names = []

        # capacitive shunts (node-ground)
        self._c_g = []
        self._c_node = []
        self._c_on = []

        # Bergeron lines
        self._bg = []        # dicts of per-line data
        self._branch_slots = {}   # branch name -> ("rl", idx) | ("bg", idx)

        for br in model.branches:
            if br.model == BERGERON_MODEL:
                self._add_bergeron(br)
            else:
                self._add_pi(br)

        self._load_slots = {}
        for ld in model.loads:
            self._load_slots[ld.name] = self._add_load_z(
                ld.bus, self._load_z_pu(ld)
            )

        # per-phase diagonal extras: device Nortons and faults
        self._diag = np.zeros((self.n, 3))
        self._device_g = {}     # device id -> (node, g)
        self._fault_g = {}      # fault key -> (node, g, phases)

        self._finalize_arrays()
        self.step_index = 0
        self.rebuild()

    # -- element construction ---------------------------------------------

    def _add_pi(self, br: BranchSpec):
        r, l_eff, c_eff = _branch_pu(br, self.model.base)
        i = self.model.bus_index(br.from_bus)
        j = self.model.bus_index(br.to_bus)
        idx = self._add_rl(i, j, r, l_eff, br.name)
        self._branch_slots[br.name] = ("rl", idx, [])
        if c_eff > 0:
            ci = self._add_c(i, c_eff / 2.0)
            cj = self._add_c(j, c_eff / 2.0)
            self._branch_slots[br.name] = ("rl", idx, [ci, cj])

    def _add_rl(self, i, j, r, l_eff, name):
        h = self.h
        denom = r + 2.0 * l_eff / h
        if denom <= 0:
            raise ConfigurationError(f"branch {name}: non-positive companion")
        self._rl_g.append(1.0 / denom)
        self._rl_k.append((2.0 * l_eff / h - r) / (2.0 * l_eff / h + r))
        self._rl_i.append(i)
        self._rl_j.append(j)
        self._rl_on.append(True)
        self._rl_names.append(name)
        return len(self._rl_g) - 1

    def _add_c(self, node, c_eff):
        self._c_g.append(2.0 * c_eff / self.h)
        self._c_node.append(node)
        self._c_on.append(True)
        return len(self._c_g) - 1

    def _add_bergeron(self, br: BranchSpec):
        tau = br.travel_time
        depth = int(round(tau / self.h))
        if depth < 1:
            raise ConfigurationError(
                f"branch {br.name}: travel time {tau * 1e6:.1f} us is below the "
                f"step {self.h * 1e6:.1f} us; configure this line as PI instead"
            )
        zb = self.model.base.z_base
        zc = br.z_surge / zb
        r4 = br.r_total / zb / 4.0
        z = zc + r4
        hf = (zc - r4) / (zc + r4)
        line = {
            "name": br.name,
            "i": self.model.bus_index(br.from_bus),
            "j": self.model.bus_index(br.to_bus),
            "g": 1.0 / z,
            "hf": hf,
            "depth": depth,
            # ring buffers of history current sources per end
            "src_i": np.zeros((depth, 3)),
            "src_j": np.zeros((depth, 3)),
            "on": True,
        }
        self._bg.append(line)
        self._branch_slots[br.name] = ("bg", len(self._bg) - 1, [])

    def _load_z_pu(self, ld: LoadSpec, v_pu: complex = 1.0 + 0j):
        s = complex(ld.p_mw, ld.q_mvar) * 1e6 / self.model.base.s_base
        if s == 0:
            raise ConfigurationError(f"load {ld.name} has zero power")
        return abs(v_pu) ** 2 / s.conjugate()

    def _add_load_z(self, bus, z_pu: complex):
        node = self.model.bus_index(bus)
        r = z_pu.real
        l_eff = z_pu.imag / 1.0      # X at nominal -> L*omega ; L_eff = X/omega
        l_eff = l_eff / self.omega
        if l_eff <= 0:
            # purely resistive load: tiny series L keeps one companion form
            l_eff = max(1e-6 / self.omega, 0.0)
        return self._add_rl(node, -1, r, l_eff, f"load@{bus}")

    def _finalize_arrays(self):
        self._rl_g = np.array(self._rl_g)
        self._rl_k = np.array(self._rl_k)
        self._rl_i = np.array(self._rl_i, dtype=int)
        self._rl_j = np.array(self._rl_j, dtype=int)
        self._rl_on = np.array(self._rl_on, dtype=bool)
        self._c_g = np.array(self._c_g)
        self._c_node = np.array(self._c_node, dtype=int)
        self._c_on = np.array(self._c_on, dtype=bool)
        nrl = len(self._rl_g)
        ncs = len(self._c_g)
        self._i_rl = np.zeros((nrl, 3))       # branch currents
        self._hist_rl = np.zeros((nrl, 3))    # pending history sources
        self._i_c = np.zeros((ncs, 3))
        self._v_c = np.zeros((ncs, 3))
        self._build_c_incidence()
        # incidence for fast gather/scatter: A[b, n] = +1 at from, -1 at to
        self._a_rl = np.zeros((nrl, self.n))
        for b in range(nrl):
            self._a_rl[b, self._rl_i[b]] = 1.0
            if self._rl_j[b] >= 0:
                self._a_rl[b, self._rl_j[b]] = -1.0

    # -- assembly ----------------------------------------------------------

    def rebuild(self):
        """Reassemble and refactorize the conductance matrices."""
        g0 = np.zeros((self.n, self.n))
        on = self._rl_on
        for b in np.flatnonzero(on):
            g = self._rl_g[b]
            i, j = self._rl_i[b], self._rl_j[b]
            g0[i, i] += g
            if j >= 0:
                g0[j, j] += g
                g0[i, j] -= g
                g0[j, i] -= g
        for c in np.flatnonzero(self._c_on):
            g0[self._c_node[c], self._c_node[c]] += self._c_g[c]
        for line in self._bg:
            if line["on"]:
                g0[line["i"], line["i"]] += line["g"]
                g0[line["j"], line["j"]] += line["g"]
        for node, g in self._device_g.values():
            g0[node, node] += g

        diag_extra = np.zeros((self.n, 3))
        for node, g, phases in self._fault_g.values():
            for p in phases:
                diag_extra[node, p] += g
        # three-phase (balanced) faults keep the matrix identical per phase
        self._symmetric = bool(
            np.array_equal(diag_extra[:, 0], diag_extra[:, 1])
            and np.array_equal(diag_extra[:, 0], diag_extra[:, 2])
        )
        try:
            if self._symmetric:
                ga = g0.copy()
                ga[np.arange(self.n), np.arange(self.n)] += diag_extra[:, 0]
                self._ginv = np.linalg.inv(ga)
            else:
                mats = []
                for p in range(3):
                    gp = g0.copy()
                    gp[np.arange(self.n), np.arange(self.n)] += diag_extra[:, p]
                    mats.append(np.linalg.inv(gp))
                self._ginv3 = np.stack(mats)
        except np.linalg.LinAlgError as exc:
            raise ConfigurationError(
                "singular conductance matrix: a subnetwork is floating"
            ) from exc
        self._g0 = g0
        self._diag_extra = diag_extra
        # effective incidence respects open branches
        self._a_eff = self._a_rl * on[:, None]

    def conductance_matrix(self, phase: int = 0) -> np.ndarray:
        g = self._g0.copy()
        g[np.arange(self.n), np.arange(self.n)] += self._diag_extra[:, phase]
        return g

    # -- events ------------------------------------------------------------

    def add_device_norton(self, device: str, bus: str, g: float):
        self._device_g[device] = (self.model.bus_index(bus), g)
        self.rebuild()

    def remove_device_norton(self, device: str):
        self._device_g.pop(device, None)
        self.rebuild()

    def apply_fault(self, fault: FaultElement):
        node = self.model.bus_index(fault.bus)
        g = 1.0 / (fault.r_ohm / self.model.base.z_base)
        if fault.kind == "three_phase":
            phases = (0, 1, 2)
        else:
            phases = (_PHASES[fault.phase.lower()],)
        self._fault_g[(fault.bus, fault.kind, fault.phase)] = (node, g, phases)
        self.rebuild()

    def clear_fault(self, fault: FaultElement):
        self._fault_g.pop((fault.bus, fault.kind, fault.phase), None)
        self.rebuild()

    def open_branch(self, name: str):
        """Ideal breaker: branch conducts zero current afterwards."""
        kind, idx, extras = self._branch_slots[name]
        if kind == "rl":
            self._rl_on[idx] = False
            self._i_rl[idx] = 0.0
            self._hist_rl[idx] = 0.0
            for c in extras:
                self._c_on[c] = False
                self._i_c[c] = 0.0
        else:
            line = self._bg[idx]
            line["on"] = False
            line["src_i"][:] = 0.0
            line["src_j"][:] = 0.0
        self.rebuild()

    def connect_load(self, ld: LoadSpec):
        # appending to finalized arrays: grow them
        z = self._load_z_pu(ld)
        node = self.model.bus_index(ld.bus)
        r = z.real
        l_eff = z.imag / self.omega
        denom = r + 2.0 * l_eff / self.h
        self._rl_g = np.append(self._rl_g, 1.0 / denom)
        self._rl_k = np.append(
            self._rl_k, (2.0 * l_eff / self.h - r) / (2.0 * l_eff / self.h + r)
        )
        self._rl_i = np.append(self._rl_i, node)
        self._rl_j = np.append(self._rl_j, -1)
        self._rl_on = np.append(self._rl_on, True)
        self._rl_names.append(f"load@{ld.bus}")
        self._i_rl = np.vstack([self._i_rl, np.zeros((1, 3))])
        self._hist_rl = np.vstack([self._hist_rl, np.zeros((1, 3))])
        row = np.zeros((1, self.n))
        row[0, node] = 1.0
        self._a_rl = np.vstack([self._a_rl, row])
        self.rebuild()

    def _build_c_incidence(self):
        nc = len(self._c_g)
        self._a_c = np.zeros((nc, self.n))
        for c in range(nc):
            self._a_c[c, self._c_node[c]] = 1.0

    # -- per-step solve ----------------------------------------------------

    def history_injections(self) -> np.ndarray:
        """RHS contributions of all companion histories, shape (n, 3)."""
        rhs = -self._a_eff.T @ self._hist_rl
        if len(self._c_g):
            hist_c = self._c_g[:, None] * self._v_c + self._i_c
            rhs += self._a_c.T @ (hist_c * self._c_on[:, None])
        slot = None
        for line in self._bg:
            if not line["on"]:
                continue
            slot = self.step_index % line["depth"]
            rhs[line["i"]] -= line["src_i"][slot]
            rhs[line["j"]] -= line["src_j"][slot]
        return rhs

    def solve(self, injections: np.ndarray) -> np.ndarray:
        """Nodal solve for one step; injections shape (n, 3)."""
        if self._symmetric:
            v = self._ginv @ injections
        else:
            v = np.einsum("pij,jp->ip", self._ginv3, injections)
        return v

    def update_histories(self, v: np.ndarray):
        """Advance companion histories using the solved node voltages."""
        v_br = self._a_eff @ v
        gv = self._rl_g[:, None] * v_br
        self._i_rl = gv + self._hist_rl
        self._hist_rl = gv + self._rl_k[:, None] * self._i_rl
        if not self._rl_on.all():
            self._i_rl *= self._rl_on[:, None]
            self._hist_rl *= self._rl_on[:, None]

        v_nodes_c = v[self._c_node]
        hist_c = self._c_g[:, None] * self._v_c + self._i_c
        self._i_c = self._c_g[:, None] * v_nodes_c - hist_c
        self._v_c = v_nodes_c
        self._i_c *= self._c_on[:, None]

        for line in self._bg:
            if not line["on"]:
                continue
            slot = self.step_index % line["depth"]
            g, hf = line["g"], line["hf"]
            vi, vj = v[line["i"]], v[line["j"]]
            src_i, src_j = line["src_i"][slot], line["src_j"][slot]
            i_ij = g * vi + src_i          # current leaving node i into line
            i_ji = g * vj + src_j
            new_i = -0.5 * (1 + hf) * (g * vj + hf * i_ji) \
                    - 0.5 * (1 - hf) * (g * vi + hf * i_ij)
            new_j = -0.5 * (1 + hf) * (g * vi + hf * i_ij) \
                    - 0.5 * (1 - hf) * (g * vj + hf * i_ji)
            line["src_i"][slot] = new_i
            line["src_j"][slot] = new_j
        self.step_index += 1

    def branch_current(self, name: str, v: np.ndarray) -> np.ndarray:
        """Instantaneous from-end branch current, shape (3,)."""
        kind, idx, _ = self._branch_slots[name]
        if kind == "rl":
            return self._i_rl[idx].copy()
        line = self._bg[idx]
        if not line["on"]:
            return np.zeros(3)
        slot = self.step_index % line["depth"]
        return line["g"] * v[line["i"]] + line["src_i"][slot]


def bergeron_phasor_two_port(zc_pu, r_pu, tau, omega):
    """Exact-at-frequency two-port (y11, y12) of the lumped-loss Bergeron
    cascade R/4 - lossless(tau/2) - R/2 - lossless(tau/2) - R/4."""

    def series(z):
        return np.array([[1.0, z], [0.0, 1.0]], dtype=complex)

    bl = omega * tau / 2.0
    line = np.array(
        [
            [cmath.cos(bl), 1j * zc_pu * cmath.sin(bl)],
            [1j * cmath.sin(bl) / zc_pu, cmath.cos(bl)],
        ]
    )
    m = series(r_pu / 4) @ line @ series(r_pu / 2) @ line @ series(r_pu / 4)
    a, b = m[0, 0], m[0, 1]
    d = m[1, 1]
    y11 = d / b
    y12 = -1.0 / b
    return y11, y12      # symmetric, reciprocal: y22 = a/b = y11 here


class PhasorNetwork:
    """Complex nodal admittance network per sequence for phasor mode."""

    def __init__(self, model: NetworkModel, line_model: str = PI_MODEL,
                 emt_step_for_bergeron: float | None = None):
        self.model = model
        self.n = len(model.buses)
        self.omega = model.base.omega_nom
        self._line_model = line_model
        self._h_snap = emt_step_for_bergeron
        self._device_y = {}
        self._fault_y = {}
        self._extra_load_y = np.zeros(self.n, dtype=complex)
        self._open = set()
        self.rebuild()

    def _line_stamps(self, br: BranchSpec, seq: str):
        base = self.model.base
        r, l_eff, c_eff = _branch_pu(br, base)
        zf = self.model.zero_seq_z_factor if seq == "zero" else 1.0
        if br.model == BERGERON_MODEL and seq == "pos":
            zc = br.z_surge / base.z_base
            tau = br.travel_time
            if self._h_snap:
                depth = max(1, int(round(tau / self._h_snap)))
                tau = depth * self._h_snap
            y11, y12 = bergeron_phasor_two_port(zc, r, tau, self.omega)
            return y11, y12
        z = (r + 1j * self.omega * l_eff) * zf
        ysh = 1j * self.omega * c_eff / 2.0
        y11 = 1.0 / z + ysh
        y12 = -1.0 / z
        return y11, y12

    def _build_seq(self, seq: str) -> np.ndarray:
        y = np.zeros((self.n, self.n), dtype=complex)
        for br in self.model.branches:
            if br.name in self._open:
                continue
            i = self.model.bus_index(br.from_bus)
            j = self.model.bus_index(br.to_bus)
            y11, y12 = self._line_stamps(br, seq)
            y[i, i] += y11
            y[j, j] += y11
            y[i, j] += y12
            y[j, i] += y12
        for ld in self.model.loads:
            k = self.model.bus_index(ld.bus)
            s = complex(ld.p_mw, ld.q_mvar) * 1e6 / self.model.base.s_base
            y[k, k] += s.conjugate()   # 1/Z at V = 1 pu
        y[np.arange(self.n), np.arange(self.n)] += self._extra_load_y
        return y

    def rebuild(self):
        y = self._build_seq("pos")
        for node, yd in self._device_y.values():
            y[node, node] += yd
        for node, yf in self._fault_y.values():
            y[node, node] += yf
        self.y_pos = y
        try:
            self._yinv = np.linalg.inv(y)
        except np.linalg.LinAlgError as exc:
            raise ConfigurationError("singular admittance matrix") from exc

    def lines_only_admittance(self) -> np.ndarray:
        """Positive-sequence Y of lines alone (for power flow)."""
        y = np.zeros((self.n, self.n), dtype=complex)
        for br in self.model.branches:
            if br.name in self._open:
                continue
            i = self.model.bus_index(br.from_bus)
            j = self.model.bus_index(br.to_bus)
            y11, y12 = self._line_stamps(br, "pos")
            y[i, i] += y11
            y[j, j] += y11
            y[i, j] += y12
            y[j, i] += y12
        return y

    def negative_seq_admittance(self, machine_y: dict[str, tuple[int, complex]]):
        y = self._build_seq("pos")     # passive part identical to positive
        for node, ym in machine_y.values():
            y[node, node] += ym
        return y

    def zero_seq_admittance(self):
        # machines and the converter provide no zero-sequence path
        return self._build_seq("zero")

    # -- events ------------------------------------------------------------

    def add_device_admittance(self, device: str, bus: str, y: complex):
        self._device_y[device] = (self.model.bus_index(bus), y)
        self.rebuild()

    def remove_device_admittance(self, device: str):
        self._device_y.pop(device, None)
        self.rebuild()

    def apply_fault(self, fault: FaultElement,
                    machine_neg_y: dict[str, tuple[int, complex]] | None = None):
        node = self.model.bus_index(fault.bus)
        r_pu = fault.r_ohm / self.model.base.z_base
        if fault.kind == "three_phase":
            yf = 1.0 / r_pu
        else:
            neg = self.negative_seq_admittance(machine_neg_y or {})
            zero = self.zero_seq_admittance()
            z2 = np.linalg.inv(neg)[node, node]
            z0 = np.linalg.inv(zero)[node, node]
            yf = 1.0 / (z2 + z0 + 3.0 * r_pu)
        self._fault_y[(fault.bus, fault.kind, fault.phase)] = (node, yf)
        self.rebuild()

    def clear_fault(self, fault: FaultElement):
        self._fault_y.pop((fault.bus, fault.kind, fault.phase), None)
        self.rebuild()

    def open_branch(self, name: str):
        self._open.add(name)
        self.rebuild()

    def connect_load(self, ld: LoadSpec):
        k = self.model.bus_index(ld.bus)
        s = complex(ld.p_mw, ld.q_mvar) * 1e6 / self.model.base.s_base
        self._extra_load_y[k] += s.conjugate()
        self.rebuild()

    def solve(self, injections: np.ndarray) -> np.ndarray:
        v = self._yinv @ injections
        if not np.all(np.isfinite(v)):
            raise SimulationAbort("non-finite phasor network solution")
        return v

    def thevenin_impedance(self, bus: str) -> complex:
        return np.linalg.inv(self.y_pos)[
            self.model.bus_index(bus), self.model.bus_index(bus)
        ]


def solve_power_flow(y: np.ndarray, slack: int, pv: list[int], pq: list[int],
                     p_sched: np.ndarray, q_sched: np.ndarray,
                     v_sched: np.ndarray, tol: float = 1e-10,
                     max_iter: int = 50) -> np.ndarray:
    """Newton-Raphson power flow in polar form.

    p_sched/q_sched are net injections in per unit; v_sched holds the
    slack and PV voltage magnitudes.  Returns complex bus voltages.
    """
    n = y.shape[0]
    vm = np.ones(n)
    va = np.zeros(n)
    vm[slack] = v_sched[slack]
    for b in pv:
        vm[b] = v_sched[b]
    non_slack = [b for b in range(n) if b != slack]

    for _ in range(max_iter):
        v = vm * np.exp(1j * va)
        s = v * np.conj(y @ v)
        dp = p_sched - s.real
        dq = q_sched - s.imag
        mis = np.concatenate([dp[non_slack], dq[pq]])
        if np.max(np.abs(mis)) < tol:
            return v
        ibus = y @ v
        diag_v = np.diag(v)
        ds_dva = 1j * diag_v @ np.conj(np.diag(ibus) - y @ diag_v)
        ds_dvm = diag_v @ np.conj(y @ np.diag(v / vm)) + np.diag(
            np.conj(ibus) * v / vm
        )
        j11 = ds_dva.real[np.ix_(non_slack, non_slack)]
        j12 = ds_dvm.real[np.ix_(non_slack, pq)]
        j21 = ds_dva.imag[np.ix_(pq, non_slack)]
        j22 = ds_dvm.imag[np.ix_(pq, pq)]
        jac = np.block([[j11, j12], [j21, j22]])
        try:
            dx = np.linalg.solve(jac, mis)
        except np.linalg.LinAlgError as exc:
            raise SimulationAbort("power flow Jacobian is singular") from exc
        va[non_slack] += dx[: len(non_slack)]
        vm[pq] += dx[len(non_slack):]
    raise SimulationAbort("power flow did not converge")
