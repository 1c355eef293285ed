"""Numerical foundations shared by both simulation engines.

Fixed-step forward-Euler integration, amplitude-invariant abc<->dq0
reference-frame transforms, the per-unit system and the step-snapped
discrete event queue.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# Amplitude-invariant Clarke matrix (abc -> alpha/beta/zero) and inverse.
_CLARKE = np.array(
    [
        [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0],
        [0.0, 1.0 / math.sqrt(3.0), -1.0 / math.sqrt(3.0)],
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    ]
)
_CLARKE_INV = np.linalg.inv(_CLARKE)


class SimulationMode(enum.Enum):
    EMT = "emt"
    PHASOR = "phasor"


class ConfigurationError(ValueError):
    """Raised for invalid model, network or scenario configuration."""


class SimulationAbort(RuntimeError):
    """Raised when the numerical solution becomes non-finite mid-run."""


@dataclass(frozen=True)
class PerUnitBase:
    """System base quantities: power (VA), line-line RMS voltage (V), Hz."""

    s_base: float
    v_base: float
    f_nom: float

    def __post_init__(self):
        if self.s_base <= 0 or self.v_base <= 0 or self.f_nom <= 0:
            raise ConfigurationError("per-unit bases must be strictly positive")

    @property
    def z_base(self) -> float:
        return self.v_base**2 / self.s_base

    @property
    def i_base(self) -> float:
        return self.s_base / (math.sqrt(3.0) * self.v_base)

    @property
    def omega_nom(self) -> float:
        return TWO_PI * self.f_nom

    def z_to_pu(self, z_ohm):
        return z_ohm / self.z_base

    def z_from_pu(self, z_pu):
        return z_pu * self.z_base

    def s_to_pu(self, s_va):
        return s_va / self.s_base

    def s_from_pu(self, s_pu):
        return s_pu * self.s_base


# Step-size ceilings per mode, seconds.
MAX_STEP = {SimulationMode.EMT: 100e-6, SimulationMode.PHASOR: 10e-3}
DEFAULT_STEP = {SimulationMode.EMT: 50e-6, SimulationMode.PHASOR: 1e-3}


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed forward-Euler step configuration for one simulation mode."""

    mode: SimulationMode
    step_h: float = 0.0

    def __post_init__(self):
        h = self.step_h if self.step_h > 0 else DEFAULT_STEP[self.mode]
        object.__setattr__(self, "step_h", h)
        if h > MAX_STEP[self.mode] * (1 + 1e-12):
            raise ConfigurationError(
                f"step {h:g} s exceeds the {MAX_STEP[self.mode]:g} s ceiling "
                f"for {self.mode.value} mode"
            )


class StateVector:
    """Flat real state array with a device-id/slot-name registry.

    Devices register named slots (or contiguous blocks of slots) and get
    back integer indices / slices into the shared value array.
    """

    def __init__(self):
        self.names: list[str] = []
        self._index: dict[str, int] = {}
        self.values = np.zeros(0)

    def register(self, device: str, slot: str) -> int:
        key = f"{device}.{slot}"
        if key in self._index:
            raise ConfigurationError(f"duplicate state slot {key}")
        idx = len(self.names)
        self.names.append(key)
        self._index[key] = idx
        return idx

    def register_block(self, device: str, slots: list[str]) -> slice:
        start = len(self.names)
        for s in slots:
            self.register(device, s)
        return slice(start, len(self.names))

    def finalize(self):
        self.values = np.zeros(len(self.names))

    def index_of(self, device: str, slot: str) -> int:
        return self._index[f"{device}.{slot}"]

    def __len__(self):
        return len(self.names)

    def first_nonfinite(self) -> str | None:
        bad = np.flatnonzero(~np.isfinite(self.values))
        return self.names[bad[0]] if bad.size else None


def euler_step(state: np.ndarray, derivative, h: float) -> np.ndarray:
    """One explicit forward-Euler step: state + h * derivative(state)."""
    if h <= 0:
        raise ConfigurationError("step size must be positive")
    dx = np.asarray(derivative(state), dtype=float)
    if dx.shape != np.shape(state):
        raise ConfigurationError("derivative length does not match state length")
    bad = np.flatnonzero(~np.isfinite(dx))
    if bad.size:
        raise SimulationAbort(f"non-finite derivative at slot index {bad[0]}")
    return state + h * dx


def abc_to_dq0(v_abc, theta: float) -> np.ndarray:
    """Amplitude-invariant Park transform at rotor/frame angle theta.

    d-axis along theta; q-axis leading by 90 degrees.  A balanced cosine
    set of amplitude V aligned with theta maps to (V, 0, 0).
    """
    ab0 = _CLARKE @ np.asarray(v_abc, dtype=float)
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [c * ab0[0] + s * ab0[1], -s * ab0[0] + c * ab0[1], ab0[2]]
    )


def dq0_to_abc(v_dq0, theta: float) -> np.ndarray:
    """Inverse of :func:`abc_to_dq0`."""
    d, q, z = v_dq0
    c, s = math.cos(theta), math.sin(theta)
    return _CLARKE_INV @ np.array([c * d - s * q, s * d + c * q, z])


@dataclass(order=True)
class _Event:
    step: int
    seq: int
    kind: str = field(compare=False)
    payload: object = field(compare=False)


class EventQueue:
    """Time-ordered event list with times snapped to step boundaries.

    Events scheduled at the same snapped step fire in insertion order.
    """

    def __init__(self, step_h: float):
        if step_h <= 0:
            raise ConfigurationError("step size must be positive")
        self.step_h = step_h
        self._events: list[_Event] = []
        self._seq = 0
        self._cursor = 0

    def schedule(self, t: float, kind: str, payload=None, now: float = 0.0):
        if t < now - 1e-12:
            raise ConfigurationError(f"event at t={t:g} s is in the past")
        step = int(round(t / self.step_h))
        self._events.append(_Event(step, self._seq, kind, payload))
        self._seq += 1
        self._events.sort()

    def __len__(self):
        return len(self._events) - self._cursor

    def peek_step(self) -> int | None:
        if self._cursor >= len(self._events):
            return None
        return self._events[self._cursor].step

    def pop_due(self, step: int) -> list[_Event]:
        due = []
        while (
            self._cursor < len(self._events)
            and self._events[self._cursor].step <= step
        ):
            due.append(self._events[self._cursor])
            self._cursor += 1
        return due

    def fire_time(self, t: float) -> float:
        """Snapped firing time for an event requested at t."""
        return round(t / self.step_h) * self.step_h
