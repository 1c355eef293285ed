"""Eight-bus study system builder and the six scripted disturbance tests.

The methodology is one-factor-at-a-time: a base model group (full-order
machines, PI lines, EMT-average converter, ideal DC source) and run
matrices that swap exactly one component class per run.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, replace

import yaml

from gridmf import machines as mc
from gridmf import res as rs
from gridmf.converter import VscParams
from gridmf.network import BranchSpec, FaultElement, LoadSpec, NetworkModel
from gridmf.simcore import (
    ConfigurationError,
    IntegratorConfig,
    PerUnitBase,
    SimulationAbort,
    SimulationMode,
)
from gridmf.simulation import (
    EmtEngine,
    Event,
    MachineSpec,
    PhasorEngine,
    RunResult,
    System,
    VscSpec,
)

SG_MODELS = ("simplified", "model22", "model22_sat")
LINE_MODELS = ("pi", "bergeron")
CONVERTER_MODELS = ("emt_avg", "phasor")
RES_MODELS = ("ideal_dc", "static_pv", "dynamic_pv", "static_wind",
              "dynamic_wind")
AXES = {
    "sg": ("sg_model", SG_MODELS),
    "line": ("line_model", LINE_MODELS),
    "converter": ("converter_model", CONVERTER_MODELS),
    "res": ("res_model", RES_MODELS),
}


@dataclass(frozen=True)
class ModelSelection:
    """One model variant per component class; defaults are the base group."""

    sg_model: str = "model22"
    line_model: str = "pi"
    converter_model: str = "emt_avg"
    res_model: str = "ideal_dc"

    def __post_init__(self):
        pairs = [
            (self.sg_model, SG_MODELS), (self.line_model, LINE_MODELS),
            (self.converter_model, CONVERTER_MODELS),
            (self.res_model, RES_MODELS),
        ]
        for value, allowed in pairs:
            if value not in allowed:
                raise ConfigurationError(
                    f"unknown model {value!r}; choose from {allowed}"
                )

    @property
    def mode(self) -> SimulationMode:
        return (SimulationMode.PHASOR if self.converter_model == "phasor"
                else SimulationMode.EMT)


@dataclass
class TestCase:
    id: int
    events: list[Event]
    duration: float
    signals: list[str] | None = None
    split_branch: str | None = None

    def __post_init__(self):
        for e in self.events:
            if not 0.0 <= e.t <= self.duration:
                raise ConfigurationError(
                    f"test {self.id}: event at t={e.t:g} s outside duration"
                )


def _data_path(name: str):
    path = importlib.resources.files("gridmf") / "data" / name
    if not path.is_file():
        raise ConfigurationError(f"missing parameter file {name}")
    return path


def _load_yaml(name: str) -> dict:
    with _data_path(name).open() as fh:
        return yaml.safe_load(fh)


def load_network(data: dict, line_model: str) -> NetworkModel:
    base = PerUnitBase(
        s_base=data["base"]["s_base_mva"] * 1e6,
        v_base=data["base"]["v_base_kv"] * 1e3,
        f_nom=data["base"]["f_nom_hz"],
    )
    lc = data["line_constants"]
    branches = [
        BranchSpec(
            name=ln["name"], from_bus=ln["from"], to_bus=ln["to"],
            length_km=ln["length_km"], r_ohm_per_km=lc["r_ohm_per_km"],
            l_mh_per_km=lc["l_mh_per_km"], c_nf_per_km=lc["c_nf_per_km"],
            model=line_model,
        )
        for ln in data["lines"]
    ]
    loads = [
        LoadSpec(ld["name"], ld["bus"], ld["p_mw"], ld["q_mvar"])
        for ld in data["loads"]
    ]
    return NetworkModel(base=base, buses=list(data["buses"]),
                        branches=branches, loads=loads)


def split_line(model: NetworkModel, name: str,
               mid_bus: str) -> NetworkModel:
    """Replace one line by two half-length lines joined at a new bus,
    preserving total series impedance and charging."""
    br = model.branch_by_name(name)
    halves = [
        BranchSpec(f"{name}{suffix}", a, b, br.length_km / 2.0,
                   br.r_ohm_per_km, br.l_mh_per_km, br.c_nf_per_km,
                   model=br.model)
        for suffix, a, b in (("a", br.from_bus, mid_bus),
                             ("b", mid_bus, br.to_bus))
    ]
    branches = [b for b in model.branches if b.name != name] + halves
    return NetworkModel(base=model.base, buses=model.buses + [mid_bus],
                        branches=branches, loads=model.loads,
                        zero_seq_z_factor=model.zero_seq_z_factor)


def _machine_specs(bench: dict, machs: dict) -> list[MachineSpec]:
    m22 = machs["model22"]
    simp = machs["simplified"]
    specs = []
    for g in bench["generators"]:
        s_rated = g["s_rated_mva"] * 1e6
        specs.append(
            MachineSpec(
                name=g["name"], bus=g["bus"],
                model22=mc.Model22Params(h_s=g["h_s"], s_rated=s_rated, **m22),
                simplified=mc.SimplifiedSGParams(
                    h_s=g["h_s"], s_rated=s_rated, **simp
                ),
                p_mw=g["p_mw"], v_set=g["v_set"],
            )
        )
    return specs


def build_benchmark(selection: ModelSelection,
                    vsc_bus: str | None = None) -> System:
    """Assemble the study system for one model selection."""
    bench = _load_yaml("benchmark.yaml")
    machs = _load_yaml("machines.yaml")
    model = load_network(bench, selection.line_model)
    vd = bench["vsc"]
    vsc = VscSpec(
        name=vd["name"], bus=vsc_bus or vd["bus"],
        params=VscParams(s_rated=vd["s_rated_mva"] * 1e6),
        p0_mw=vd["p_mw"], q0_mvar=vd["q_mvar"],
    )
    model.bus_index(vsc.bus)
    return System(model=model, machines=_machine_specs(bench, machs),
                  vsc=vsc, slack=0)


def make_res_factory(res_model: str):
    """Source constructor for the converter DC side, by variant name."""
    if res_model == "ideal_dc":
        return rs.IdealDcSource
    data = _load_yaml("res.yaml")
    if res_model in ("static_pv", "dynamic_pv"):
        pv = data["pv"]
        cell = dict(pv["cell"])
        if res_model == "static_pv":
            cell["r_series"] = 0.0    # the static variant drops r_series
        params = rs.PvArrayParams(
            cell=rs.PvCellParams(**cell),
            n_series=pv["n_series"], n_parallel=pv["n_parallel"],
            n_strings=pv["n_strings"], mismatch=pv["mismatch"],
            v_dc_nom=pv["v_dc_nom"], d_max=pv["d_max"],
            delta_d=pv["delta_d"], po_period=pv["po_period"],
        )
        irr = pv["irradiance"]
        if res_model == "static_pv":
            return lambda s_rated: rs.StaticPv(params, s_rated, irr)
        return lambda s_rated: rs.DynamicPv(params, s_rated, irr)
    wind = _load_yaml("res.yaml")["wind"]
    table = rs.CpTable.from_file(_data_path(data["cp_table_file"]))
    static = rs.WindStaticParams(
        rotor_radius=wind["rotor_radius"], air_density=wind["air_density"],
        rated_power=wind["rated_power_mw"] * 1e6,
        n_turbines=wind["n_turbines"], wind_speed=wind["wind_speed"],
        speed_spread=wind["speed_spread"], omega_rated=wind["omega_rated"],
    )
    if res_model == "static_wind":
        return lambda s_rated: rs.StaticWind(static, table, s_rated)
    if res_model == "dynamic_wind":
        dyn = dict(wind["dynamic"])
        for key in ("sched_betas", "sched_kp", "sched_ki"):
            dyn[key] = tuple(dyn[key])
        params = rs.WindDynamicParams(static=static, **dyn)
        return lambda s_rated: rs.DynamicWind(params, table, s_rated)
    raise ConfigurationError(f"unknown RES model {res_model}")


def make_test(test_id: int) -> TestCase:
    """Scripted disturbance test definitions 1 through 6."""
    if test_id == 1:
        return TestCase(
            id=1, duration=4.0,
            events=[Event(1.0, "res_setpoint",
                          {"p_mw": 100.0, "q_mvar": 30.0})],
        )
    if test_id == 2:
        return TestCase(
            id=2, duration=8.0,
            events=[Event(5.0, "load_on",
                          {"load": LoadSpec("step_load", "6", 100.0, 20.0)})],
        )
    if test_id == 3:
        f = FaultElement("2", 5.0, kind="three_phase", t_on=5.0, t_off=5.2)
        return TestCase(
            id=3, duration=8.0,
            events=[Event(5.0, "fault_on", {"fault": f}),
                    Event(5.2, "fault_off", {"fault": f})],
        )
    if test_id == 4:
        f = FaultElement("1", 10.0, kind="single_phase", phase="b",
                         t_on=5.0, t_off=5.5)
        return TestCase(
            id=4, duration=8.0,
            events=[Event(5.0, "fault_on", {"fault": f}),
                    Event(5.5, "fault_off", {"fault": f})],
        )
    if test_id == 5:
        return TestCase(
            id=5, duration=8.0,
            events=[Event(5.0, "disconnect_gen", {"name": "G2"})],
        )
    if test_id == 6:
        f = FaultElement("f13", 1.0, kind="three_phase", t_on=5.0)
        return TestCase(
            id=6, duration=8.0, split_branch="L1-3",
            events=[Event(5.0, "fault_on", {"fault": f}),
                    Event(5.1, "open_branch", {"name": "L1-3a"}),
                    Event(5.1, "open_branch", {"name": "L1-3b"})],
        )
    raise ConfigurationError(f"unknown test id {test_id}; valid ids are 1-6")


def make_engine(selection: ModelSelection, test: TestCase,
                step_h: float = 0.0, duration: float | None = None,
                signals: list[str] | None = None,
                vsc_bus: str | None = None):
    """System + engine for one (selection, test) pair, ready to run."""
    system = build_benchmark(selection, vsc_bus=vsc_bus)
    if test.split_branch:
        mid = f"f{test.split_branch[1:].replace('-', '')}"
        system = replace(
            system, model=split_line(system.model, test.split_branch, mid)
        )
    config = IntegratorConfig(selection.mode, step_h)
    engine_cls = (EmtEngine if selection.mode is SimulationMode.EMT
                  else PhasorEngine)
    return engine_cls(
        system, selection, test.events,
        duration if duration is not None else test.duration,
        config, make_res_factory(selection.res_model),
        signals=signals if signals is not None else test.signals,
    )


def run_test(selection: ModelSelection, test_id: int,
             step_h: float = 0.0, duration: float | None = None,
             signals: list[str] | None = None) -> RunResult:
    engine = make_engine(selection, make_test(test_id), step_h=step_h,
                         duration=duration, signals=signals)
    result = engine.run()
    result.meta["test_id"] = test_id
    return result


def axis_variants(axis: str | None) -> list[ModelSelection]:
    """Model selections swept one factor at a time from the base group."""
    if axis is None:
        return [ModelSelection()]
    if axis not in AXES:
        raise ConfigurationError(
            f"unknown axis {axis!r}; choose from {sorted(AXES)}"
        )
    field_name, values = AXES[axis]
    return [ModelSelection(**{field_name: v}) for v in values]


def run_matrix(tests: list[int], axis: str | None = None,
               step_h: float = 0.0,
               duration: float | None = None) -> list[dict]:
    """Run every axis variant over the requested tests, base group held
    fixed elsewhere; deterministic ordering (variant-major)."""
    results = []
    for selection in axis_variants(axis):
        variant = getattr(selection, AXES[axis][0]) if axis else "base"
        for test_id in tests:
            try:
                result = run_test(selection, test_id, step_h=step_h,
                                  duration=duration)
            except SimulationAbort as exc:
                raise SimulationAbort(
                    f"test {test_id}, variant {variant}: {exc}"
                ) from exc
            results.append(
                {"axis": axis, "variant": variant, "test_id": test_id,
                 "selection": selection, "result": result}
            )
    return results
