"""Multi-fidelity dynamic simulation of AC power systems with renewables.

The package couples electromagnetic-transient (EMT) and phasor simulation
engines with interchangeable component models: three synchronous generator
variants, PI and Bergeron transmission lines, an averaged / phasor
voltage-source converter, and five renewable-source models feeding the
converter DC side.  A benchmark system and six scripted disturbance tests
support precision-vs-runtime comparisons between model choices.
"""

from gridmf.simcore import (
    PerUnitBase,
    IntegratorConfig,
    SimulationMode,
    StateVector,
    EventQueue,
    euler_step,
    abc_to_dq0,
    dq0_to_abc,
)
from gridmf.benchmark import ModelSelection, build_benchmark, make_test, run_matrix
from gridmf.harness import ScenarioConfig, run_scenario, compute_metrics, timing_report

__all__ = [
    "PerUnitBase",
    "IntegratorConfig",
    "SimulationMode",
    "StateVector",
    "EventQueue",
    "euler_step",
    "abc_to_dq0",
    "dq0_to_abc",
    "ModelSelection",
    "build_benchmark",
    "make_test",
    "run_matrix",
    "ScenarioConfig",
    "run_scenario",
    "compute_metrics",
    "timing_report",
]
