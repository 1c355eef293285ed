"""Renewable-source models feeding the converter DC side.

Five variants: ideal DC source, static PV (per-string single-diode
array evaluated at its tracked maximum), dynamic PV (diode array +
boost conversion ratio + perturb-and-observe tracking), static wind
(per-turbine power law with cP table) and dynamic wind (per-turbine
two-mass drivetrain, first-order pitch/torque actuators, gain-scheduled
power controller).

Every source exposes ``initialize(p0_pu)`` and
``power_into_dc(p_dem_pu, h) -> p.u. power`` on the converter base.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace

import numpy as np

from gridmf.simcore import ConfigurationError

BOLTZMANN = 1.380649e-23
ELEMENTARY_CHARGE = 1.602176634e-19
BETZ_LIMIT = 16.0 / 27.0


# ---------------------------------------------------------------------------
# photovoltaics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PvCellParams:
    """Single-diode cell with irradiance-scaled photon current.

    With r_series == 0 the cell equation is explicit in the current;
    a positive series resistance makes it implicit and the evaluation
    falls back to a Newton solve.
    """

    i_ph_stc: float = 8.0        # A
    i_s: float = 1.2e-7          # A
    a_n: float = 1.3             # diode ideality factor
    r_h: float = 8.0             # shunt resistance, ohm
    r_series: float = 0.0        # ohm
    alpha_t: float = 4e-4        # 1/K
    t_c: float = 298.15          # K, fixed at STC
    t_stc: float = 298.15
    s_stc: float = 1000.0        # W/m^2

    def __post_init__(self):
        if self.i_ph_stc <= 0 or self.i_s <= 0 or self.r_h <= 0:
            raise ConfigurationError("PV currents and shunt must be positive")
        if self.r_series < 0:
            raise ConfigurationError("series resistance must be >= 0")
        if not 1.0 <= self.a_n <= 2.0:
            raise ConfigurationError("diode ideality factor must be in [1, 2]")

    @property
    def v_thermal(self) -> float:
        return self.a_n * BOLTZMANN * self.t_c / ELEMENTARY_CHARGE


def photon_current(s_irr, params: PvCellParams):
    """Photon current: linear in irradiance, temperature-corrected."""
    return params.i_ph_stc * (s_irr / params.s_stc) * (
        1.0 + params.alpha_t * (params.t_c - params.t_stc)
    )


def pv_cell_current(v_pv, s_irr, params: PvCellParams):
    """Single-diode cell current at cell voltage v_pv and irradiance S.

    Accepts scalars or arrays (broadcast) for voltage and irradiance.
    """
    if np.any(np.asarray(s_irr) < 0):
        raise ConfigurationError("irradiance must be >= 0")
    i_ph = photon_current(s_irr, params)
    vt = params.v_thermal
    r_s = params.r_series
    if r_s == 0.0:
        return i_ph - params.i_s * np.expm1(v_pv / vt) - v_pv / params.r_h
    # implicit form: i = i_ph - i_s(exp((v + i r_s)/vt) - 1) - (v + i r_s)/r_h
    i = i_ph - params.i_s * np.expm1(v_pv / vt) - v_pv / params.r_h
    for _ in range(25):
        vj = v_pv + i * r_s
        e = np.exp(vj / vt)
        f = i_ph - params.i_s * (e - 1.0) - vj / params.r_h - i
        fp = -params.i_s * r_s / vt * e - r_s / params.r_h - 1.0
        dx = f / fp
        i = i - dx
        if np.max(np.abs(dx)) < 1e-12 * (1.0 + np.max(np.abs(i))):
            break
    return i


@dataclass(frozen=True)
class PvArrayParams:
    cell: PvCellParams
    n_series: int = 1400
    n_parallel: int = 18500
    n_strings: int = 64          # resolved string groups across the plant
    mismatch: float = 0.05       # fractional irradiance spread over strings
    temp_spread: float = 10.0    # K cell-temperature spread over strings
    v_dc_nom: float = 1200.0     # physical DC-link voltage at 1 p.u.
    d_max: float = 0.85
    delta_d: float = 0.002       # P&O perturbation step
    po_period: float = 0.010     # P&O sampling period, s

    def __post_init__(self):
        if self.n_strings < 1:
            raise ConfigurationError("n_strings must be >= 1")
        if not 0.0 <= self.mismatch < 1.0:
            raise ConfigurationError("mismatch must be in [0, 1)")
        if self.temp_spread < 0.0:
            raise ConfigurationError("temp_spread must be >= 0")


class PvArray:
    """Series/parallel cell array resolved into parallel string groups.

    The plant is split into n_strings groups on a common DC bus; each
    group sees a slightly different irradiance (soiling, orientation and
    partial-shading spread) and cell temperature, so the diode equation
    is evaluated per group and the currents summed.
    """

    def __init__(self, params: PvArrayParams):
        self.p = params
        n = params.n_strings
        if n > 1:
            self._irr_fac = 1.0 + params.mismatch * np.linspace(-1.0, 1.0, n)
            t_off = params.temp_spread * np.linspace(-0.5, 0.5, n)
            self._cell = replace(params.cell, t_c=params.cell.t_c + t_off)
        else:
            self._irr_fac = np.ones(1)
            self._cell = params.cell
        self._par_per_string = params.n_parallel / n

    def string_currents(self, v_array: float, s_irr: float) -> np.ndarray:
        return self._par_per_string * pv_cell_current(
            v_array / self.p.n_series, s_irr * self._irr_fac, self._cell
        )

    def current(self, v_array: float, s_irr: float) -> float:
        return float(self.string_currents(v_array, s_irr).sum())

    def power(self, v_array: float, s_irr: float) -> float:
        return v_array * self.current(v_array, s_irr)

    def open_circuit_voltage(self, s_irr: float) -> float:
        """Bisection for zero total array current."""
        lo, hi = 0.0, float(self.p.n_series)
        while self.current(hi, s_irr) > 0:
            hi *= 2.0
        while hi - lo > 1e-10 * self.p.n_series:
            mid = 0.5 * (lo + hi)
            if self.current(mid, s_irr) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def mpp(self, s_irr: float, n_grid: int = 400) -> tuple[float, float]:
        """Maximum power point (v, p) by grid scan plus local refinement."""
        v_oc = self.open_circuit_voltage(s_irr)
        vs = np.linspace(0.0, v_oc, n_grid)
        ps = vs * np.array([self.current(v, s_irr) for v in vs])
        k = int(np.argmax(ps))
        lo = vs[max(k - 1, 0)]
        hi = vs[min(k + 1, n_grid - 1)]
        for _ in range(60):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if self.power(m1, s_irr) < self.power(m2, s_irr):
                lo = m1
            else:
                hi = m2
        v = 0.5 * (lo + hi)
        return v, self.power(v, s_irr)


def boost_interface(duty: float, v_dc: float) -> float:
    """Continuous-conduction boost conversion: v_pv = (1 - D) * v_dc."""
    return (1.0 - duty) * v_dc


@dataclass
class TrackerState:
    """Perturb-and-observe state over one scalar setting (the array
    voltage reference for the boost's voltage-mode control)."""

    setting: float = 0.0
    direction: float = 1.0
    last_feedback: float | None = None


def perturb_observe_step(state: TrackerState, feedback: float, delta: float,
                         lo: float, hi: float) -> float:
    """One P&O update: keep direction if the feedback improved, else
    reverse; then perturb the setting by delta within [lo, hi]."""
    if state.last_feedback is not None and feedback < state.last_feedback:
        state.direction = -state.direction
    state.last_feedback = feedback
    state.setting = min(max(state.setting + state.direction * delta, lo), hi)
    return state.setting


class IdealDcSource:
    """Stiff DC bus: delivers the demanded power in the same step."""

    stiff_dc = True

    def __init__(self, s_rated: float):
        self.s_rated = s_rated

    def initialize(self, p0_pu: float):
        pass

    def power_into_dc(self, p_dem_pu: float, h: float) -> float:
        return p_dem_pu


class StaticPv:
    """Algebraic PV plant: min(demand, tracked maximum power).

    The MPP voltage is re-solved only when irradiance changes; the array
    equation is still evaluated every step at that voltage.
    """

    stiff_dc = False

    def __init__(self, params: PvArrayParams, s_rated: float,
                 irradiance: float = 1000.0):
        self.array = PvArray(params)
        self.s_rated = s_rated
        self.irradiance = irradiance
        self._s_cached = None
        self._v_mpp = 0.0

    def initialize(self, p0_pu: float):
        self._refresh()

    def _refresh(self):
        self._v_mpp, _ = self.array.mpp(self.irradiance)
        self._s_cached = self.irradiance

    def power_into_dc(self, p_dem_pu: float, h: float) -> float:
        if self.irradiance != self._s_cached:
            self._refresh()
        p_avail = self.array.power(self._v_mpp, self.irradiance) / self.s_rated
        return min(max(p_dem_pu, 0.0), p_avail)


class DynamicPv:
    """Diode array + boost converter + P&O tracking (MPP or DPP).

    The boost runs in voltage mode: the tracker perturbs the array
    voltage reference and the duty cycle follows from the conversion
    ratio against the actual DC-link voltage, within the duty limits.
    The array uses the implicit series-resistance diode equation, where
    the static variant drops r_series for an explicit evaluation.
    """

    stiff_dc = False

    def __init__(self, params: PvArrayParams, s_rated: float,
                 irradiance: float = 1000.0, mode: str = "dpp"):
        if mode not in ("mpp", "dpp"):
            raise ConfigurationError(f"unknown tracking mode {mode}")
        self.p = params
        self.array = PvArray(params)
        self.s_rated = s_rated
        self.irradiance = irradiance
        self.mode = mode
        self.tracker = TrackerState()
        self.v_dc_pu = 1.0
        self._elapsed = 0.0
        self._delta_v = params.delta_d * params.v_dc_nom

    @property
    def duty(self) -> float:
        """Boost duty implied by the current reference and link voltage."""
        v_dc = self.v_dc_pu * self.p.v_dc_nom
        return min(max(1.0 - self.tracker.setting / v_dc, 0.0),
                   self.p.d_max)

    def _v_bounds(self) -> tuple[float, float]:
        v_dc = self.v_dc_pu * self.p.v_dc_nom
        return (1.0 - self.p.d_max) * v_dc, v_dc

    def initialize(self, p0_pu: float):
        """Start at the array voltage whose operating point meets the
        initial demand (DPP) or the MPP (MPP mode)."""
        if self.mode == "mpp":
            v_target, _ = self.array.mpp(self.irradiance)
        else:
            p_target = p0_pu * self.s_rated
            v_mpp, p_max = self.array.mpp(self.irradiance)
            if p_target >= p_max:
                v_target = v_mpp
            else:
                # demand point on the high-voltage side of the P-V curve
                lo, hi = v_mpp, self.array.open_circuit_voltage(self.irradiance)
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if self.array.power(mid, self.irradiance) > p_target:
                        lo = mid
                    else:
                        hi = mid
                v_target = 0.5 * (lo + hi)
        v_lo, v_hi = self._v_bounds()
        self.tracker = TrackerState(setting=min(max(v_target, v_lo), v_hi))
        self._elapsed = 0.0

    def power_into_dc(self, p_dem_pu: float, h: float) -> float:
        v_lo, v_hi = self._v_bounds()
        v_pv = min(max(self.tracker.setting, v_lo), v_hi)
        p_pv = self.array.power(v_pv, self.irradiance)
        self._elapsed += h
        if self._elapsed >= self.p.po_period:
            self._elapsed -= self.p.po_period
            if self.mode == "mpp":
                feedback = p_pv
            else:
                feedback = -abs(p_pv - p_dem_pu * self.s_rated)
            perturb_observe_step(
                self.tracker, feedback, self._delta_v, v_lo, v_hi
            )
        return max(p_pv, 0.0) / self.s_rated


# ---------------------------------------------------------------------------
# wind
# ---------------------------------------------------------------------------

class CpTable:
    """Rectangular power-coefficient lookup over (tip-speed ratio, pitch)."""

    def __init__(self, lambdas: np.ndarray, betas: np.ndarray,
                 values: np.ndarray):
        lambdas = np.asarray(lambdas, dtype=float)
        betas = np.asarray(betas, dtype=float)
        values = np.asarray(values, dtype=float)
        if np.any(np.diff(lambdas) <= 0) or np.any(np.diff(betas) <= 0):
            raise ConfigurationError("cP table axes must be strictly increasing")
        if values.shape != (betas.size, lambdas.size):
            raise ConfigurationError("cP matrix shape must be (n_beta, n_lambda)")
        if np.any(values < 0) or np.any(values > BETZ_LIMIT):
            raise ConfigurationError("cP values must lie in [0, 0.593]")
        self.lambdas = lambdas
        self.betas = betas
        self.values = values
        self._lam_list = lambdas.tolist()
        self._beta_list = betas.tolist()
        self._val_list = values.tolist()
        k = np.unravel_index(np.argmax(values), values.shape)
        self.cp_max = float(values[k])
        self.lambda_opt = float(lambdas[k[1]])
        self.beta_opt = float(betas[k[0]])

    def __call__(self, lam: float, beta: float) -> float:
        # scalar bisection on plain lists; this sits on the per-step hot
        # path of the wind sources where array dispatch overhead dominates
        ll, bb = self._lam_list, self._beta_list
        lam = min(max(lam, ll[0]), ll[-1])
        beta = min(max(beta, bb[0]), bb[-1])
        i = min(max(bisect.bisect_right(ll, lam) - 1, 0), len(ll) - 2)
        j = min(max(bisect.bisect_right(bb, beta) - 1, 0), len(bb) - 2)
        tl = (lam - ll[i]) / (ll[i + 1] - ll[i])
        tb = (beta - bb[j]) / (bb[j + 1] - bb[j])
        v = self._val_list
        return (
            v[j][i] * (1 - tl) * (1 - tb)
            + v[j][i + 1] * tl * (1 - tb)
            + v[j + 1][i] * (1 - tl) * tb
            + v[j + 1][i + 1] * tl * tb
        )

    def lookup(self, lam: np.ndarray, beta: np.ndarray) -> np.ndarray:
        """Vectorized bilinear interpolation over turbine arrays."""
        ll, bb, v = self.lambdas, self.betas, self.values
        lam = np.clip(lam, ll[0], ll[-1])
        beta = np.clip(beta, bb[0], bb[-1])
        i = np.clip(np.searchsorted(ll, lam, side="right") - 1, 0, ll.size - 2)
        j = np.clip(np.searchsorted(bb, beta, side="right") - 1, 0, bb.size - 2)
        tl = (lam - ll[i]) / (ll[i + 1] - ll[i])
        tb = (beta - bb[j]) / (bb[j + 1] - bb[j])
        return (
            v[j, i] * (1 - tl) * (1 - tb)
            + v[j, i + 1] * tl * (1 - tb)
            + v[j + 1, i] * (1 - tl) * tb
            + v[j + 1, i + 1] * tl * tb
        )

    @classmethod
    def from_file(cls, path) -> "CpTable":
        lambdas = betas = None
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if line.startswith("lambda:"):
                    lambdas = np.array(line.split(":", 1)[1].split(), dtype=float)
                elif line.startswith("beta:"):
                    betas = np.array(line.split(":", 1)[1].split(), dtype=float)
                else:
                    rows.append(np.array(line.split(), dtype=float))
        if lambdas is None or betas is None:
            raise ConfigurationError(f"cP table {path}: missing axis header")
        return cls(lambdas, betas, np.vstack(rows))


def heier_cp(lam: float, beta: float) -> float:
    """Analytic cP surface used to generate the shipped table."""
    li = 1.0 / (lam + 0.08 * beta) - 0.035 / (beta**3 + 1.0)
    cp = 0.5176 * (116.0 * li - 0.4 * beta - 5.0) * math.exp(-21.0 * li) \
        + 0.0068 * lam
    return min(max(cp, 0.0), BETZ_LIMIT - 1e-6)


def make_cp_table(lambdas=None, betas=None) -> CpTable:
    if lambdas is None:
        lambdas = np.linspace(1.0, 14.0, 27)
    if betas is None:
        betas = np.linspace(0.0, 25.0, 26)
    vals = np.array([[heier_cp(l, b) for l in lambdas] for b in betas])
    return CpTable(np.asarray(lambdas), np.asarray(betas), vals)


@dataclass(frozen=True)
class WindStaticParams:
    rotor_radius: float = 63.0       # m
    air_density: float = 1.225       # kg/m^3
    rated_power: float = 5.0e6       # W per turbine
    n_turbines: int = 20
    wind_speed: float = 12.0         # m/s, plant mean
    speed_spread: float = 0.06       # fractional spread over the layout
    omega_rated: float = 1.267       # rad/s (slow shaft)

    def __post_init__(self):
        if self.n_turbines < 1:
            raise ConfigurationError("n_turbines must be >= 1")
        if not 0.0 <= self.speed_spread < 1.0:
            raise ConfigurationError("speed_spread must be in [0, 1)")


def turbine_wind_speeds(params: WindStaticParams) -> np.ndarray:
    """Per-turbine wind speeds from the plant mean and a deterministic
    siting/wake spread across the layout."""
    n = params.n_turbines
    if n == 1:
        return np.array([params.wind_speed])
    return params.wind_speed * (
        1.0 + params.speed_spread * np.linspace(-1.0, 1.0, n)
    )


def wind_power_law(cp, rho: float, radius: float, v):
    """P = 1/2 cP rho pi R^2 v^3."""
    return 0.5 * cp * rho * math.pi * radius**2 * v**3


def scheduling_weights(x, anchors) -> np.ndarray:
    """Triangular convex blending weights over a sorted anchor grid.

    Returns shape ``(len(x), len(anchors))``; each row is nonnegative,
    sums to 1, and ``weights @ values`` equals piecewise-linear
    interpolation of ``values`` with end clamping.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = np.asarray(anchors, dtype=float)
    xc = np.clip(x, a[0], a[-1])
    j = np.clip(np.searchsorted(a, xc, side="right") - 1, 0, a.size - 2)
    frac = (xc - a[j]) / (a[j + 1] - a[j])
    w = np.zeros((x.size, a.size))
    rows = np.arange(x.size)
    w[rows, j] = 1.0 - frac
    w[rows, j + 1] += frac
    return w


def wind_static_power(v: np.ndarray, p_setpoint: float,
                      params: WindStaticParams, table: CpTable) -> float:
    """Plant-level available power from per-turbine operating points.

    Each turbine holds its optimal tip-speed ratio until the rated rotor
    speed clamps it, so the power coefficient is looked up per turbine;
    availability is capped at rated per turbine before summing, then the
    total is clipped to the setpoint (W)."""
    if np.any(v < 0):
        raise ConfigurationError("wind speed must be >= 0")
    v_f = np.maximum(v, 0.1)
    omega = np.minimum(table.lambda_opt * v_f / params.rotor_radius,
                       params.omega_rated)
    lam = omega * params.rotor_radius / v_f
    cp = table.lookup(lam, np.full_like(lam, table.beta_opt))
    avail = np.minimum(
        wind_power_law(cp, params.air_density, params.rotor_radius, v),
        params.rated_power,
    )
    return min(max(p_setpoint, 0.0), float(avail.sum()))


class StaticWind:
    """Algebraic wind plant resolved per turbine.

    Per-step work is the body of wind_static_power with the wind speeds
    validated once at construction.
    """

    stiff_dc = False

    def __init__(self, params: WindStaticParams, table: CpTable,
                 s_rated: float):
        self.p = params
        self.table = table
        self.s_rated = s_rated
        self._v = turbine_wind_speeds(params)
        if np.any(self._v < 0):
            raise ConfigurationError("wind speed must be >= 0")
        self._beta = np.full(params.n_turbines, table.beta_opt)

    def initialize(self, p0_pu: float):
        pass

    def power_into_dc(self, p_dem_pu: float, h: float) -> float:
        st = self.p
        v = np.maximum(self._v, 0.1)
        omega = np.minimum(self.table.lambda_opt * v / st.rotor_radius,
                           st.omega_rated)
        lam = omega * st.rotor_radius / v
        cp = self.table.lookup(lam, self._beta)
        avail = np.minimum(
            wind_power_law(cp, st.air_density, st.rotor_radius, self._v),
            st.rated_power,
        )
        p_dem = max(p_dem_pu, 0.0) * self.s_rated
        return min(p_dem, float(avail.sum())) / self.s_rated


@dataclass(frozen=True)
class WindDynamicParams:
    static: WindStaticParams = WindStaticParams()
    j_rotor: float = 3.5e7           # kg m^2
    j_gen: float = 6.0e6             # kg m^2, referred to the slow shaft
    k_shaft: float = 8.7e8           # N m / rad
    d_shaft: float = 6.2e6           # N m s / rad
    tau_pitch: float = 0.30          # s
    tau_torque: float = 0.10         # s
    pitch_rate_limit: float = 8.0    # deg/s
    beta_min: float = 0.0
    beta_max: float = 25.0
    # pitch-PI gain scheduling anchors (beta in deg -> kp, ki)
    sched_betas: tuple = (0.0, 10.0, 20.0)
    sched_kp: tuple = (300.0, 190.0, 140.0)
    sched_ki: tuple = (100.0, 63.0, 47.0)


class DynamicWind:
    """Closed-loop wind plant resolved per turbine.

    Each turbine carries a two-mass drivetrain with first-order pitch
    and torque actuators and a gain-scheduled power controller; the
    per-turbine wind speeds follow the plant layout spread, so the
    turbines settle at different pitch and speed operating points.
    """

    stiff_dc = False

    def __init__(self, params: WindDynamicParams, table: CpTable,
                 s_rated: float):
        self.p = params
        self.table = table
        self.s_rated = s_rated
        st = params.static
        n = st.n_turbines
        self._v = turbine_wind_speeds(st)
        self.omega_r = np.full(n, st.omega_rated)
        self.omega_g = np.full(n, st.omega_rated)
        self.twist = np.zeros(n)
        self.beta = np.zeros(n)
        self.t_gen = np.zeros(n)
        self.pitch_integ = np.zeros(n)
        self.k_opt = (
            0.5 * st.air_density * math.pi * st.rotor_radius**5
            * table.cp_max / table.lambda_opt**3
        )
        self.t_max = 1.3 * st.rated_power / st.omega_rated
        self._sched_b = np.asarray(params.sched_betas, dtype=float)
        self._sched_kp = np.asarray(params.sched_kp, dtype=float)
        self._sched_ki = np.asarray(params.sched_ki, dtype=float)
        self._bmin = np.full(n, params.beta_min)

    def _omega_ref(self) -> np.ndarray:
        return np.minimum(
            self.table.lambda_opt * self._v / self.p.static.rotor_radius,
            self.p.static.omega_rated,
        )

    def initialize(self, p0_pu: float):
        p = self.p
        st = p.static
        v = self._v
        p_turb = np.full(st.n_turbines,
                         p0_pu * self.s_rated / st.n_turbines)
        omega = self._omega_ref()
        lam = omega * st.rotor_radius / v
        cp_best = self.table.lookup(lam, np.full_like(lam, p.beta_min))
        p_avail = np.minimum(
            wind_power_law(cp_best, st.air_density, st.rotor_radius, v),
            st.rated_power,
        )
        p_turb = np.minimum(p_turb, p_avail)
        # curtailed turbines: pitch sheds the excess aerodynamic power
        lo = np.full(st.n_turbines, p.beta_min)
        hi = np.full(st.n_turbines, p.beta_max)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            p_mid = wind_power_law(self.table.lookup(lam, mid),
                                   st.air_density, st.rotor_radius, v)
            above = p_mid > p_turb
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        self.beta = np.where(p_turb < p_avail * (1.0 - 1e-9),
                             0.5 * (lo + hi), p.beta_min)
        self.omega_r = omega.copy()
        self.omega_g = omega.copy()
        self.t_gen = p_turb / omega
        self.twist = self.t_gen / p.k_shaft
        self.pitch_integ = self.beta.copy()

    def power_into_dc(self, p_dem_pu: float, h: float) -> float:
        p = self.p
        st = p.static
        v = self._v
        p_turb_dem = max(p_dem_pu, 0.0) * self.s_rated / st.n_turbines
        p_track = min(p_turb_dem, st.rated_power)

        om_r = self.omega_r
        lam = om_r * st.rotor_radius / np.maximum(v, 0.1)
        cp = self.table.lookup(lam, self.beta)
        t_aero = wind_power_law(cp, st.air_density, st.rotor_radius, v) \
            / np.maximum(om_r, 0.05)

        # achievable power at the speed reference with fine pitch, capped
        # at rated: the per-turbine availability the dispatch works against
        ref = self._omega_ref()
        lam_ref = ref * st.rotor_radius / np.maximum(v, 0.1)
        cp_ref = self.table.lookup(lam_ref, self._bmin)
        p_avail = np.minimum(
            wind_power_law(cp_ref, st.air_density, st.rotor_radius, v),
            st.rated_power,
        )
        # torque loop: track the demand share (held just under the
        # achievable power for speed stability); turbines below rated
        # speed maximize capture when the demand exceeds availability
        p_cap = np.minimum(p_track, 0.98 * p_avail)
        t_cmd = np.where(
            (ref < st.omega_rated * 0.999) & (p_track >= p_avail * 0.999),
            self.k_opt * om_r**2,
            p_cap / np.maximum(om_r, 0.2),
        )
        t_cmd = np.minimum(np.maximum(t_cmd, 0.0), self.t_max)

        # pitch PI regulating rotor speed, gains blended over beta anchors
        w = scheduling_weights(self.beta, self._sched_b)
        kp = w @ self._sched_kp
        ki = w @ self._sched_ki
        e_omega = om_r - ref
        beta_cmd = kp * e_omega + self.pitch_integ
        free = (
            ((beta_cmd > p.beta_min) & (beta_cmd < p.beta_max))
            | ((beta_cmd <= p.beta_min) & (e_omega > 0))
            | ((beta_cmd >= p.beta_max) & (e_omega < 0))
        )
        self.pitch_integ += h * ki * e_omega * free
        np.clip(self.pitch_integ, p.beta_min, p.beta_max,
                out=self.pitch_integ)
        beta_cmd = np.clip(kp * e_omega + self.pitch_integ,
                           p.beta_min, p.beta_max)

        # first-order actuators with pitch rate limit
        rate = (beta_cmd - self.beta) / p.tau_pitch
        rate = np.clip(rate, -p.pitch_rate_limit, p.pitch_rate_limit)
        self.beta = np.clip(self.beta + h * rate, p.beta_min, p.beta_max)
        self.t_gen += h * (t_cmd - self.t_gen) / p.tau_torque

        # two-mass drivetrain
        t_shaft = p.k_shaft * self.twist \
            + p.d_shaft * (om_r - self.omega_g)
        d_om_r = (t_aero - t_shaft) / p.j_rotor
        d_om_g = (t_shaft - self.t_gen) / p.j_gen
        self.omega_r = np.maximum(om_r + h * d_om_r, 0.0)
        self.omega_g = np.maximum(self.omega_g + h * d_om_g, 0.0)
        self.twist += h * (self.omega_r - self.omega_g)

        p_elec = float((self.t_gen * self.omega_g).sum())
        return max(p_elec, 0.0) / self.s_rated
