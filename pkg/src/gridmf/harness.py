"""Scenario configs, CSV export, precision metrics and runtime tables.

The CSV schema is the package's stable external interface: first column
``time_s``, remaining columns named ``<device>.<signal>``, LF line
endings, decimal-point floats printed with enough digits to reload the
exact double-precision values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from gridmf import benchmark as bm
from gridmf.simcore import ConfigurationError
from gridmf.simulation import RunResult

_FLOAT_FMT = "{:.17g}"


@dataclass
class ScenarioConfig:
    """One run: a scripted test under one model selection."""

    test_id: int
    selection: bm.ModelSelection = field(default_factory=bm.ModelSelection)
    step_h: float = 0.0              # 0 = mode default
    duration: float | None = None    # None = test default
    signals: list[str] | None = None
    output: str | None = None
    seed: int = 0                    # recorded for provenance; runs are
                                     # deterministic regardless

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
        return cls.from_dict(raw, origin=str(path))

    @classmethod
    def from_dict(cls, raw: dict, origin: str = "<config>") -> "ScenarioConfig":
        problems = []
        test_id = raw.get("test")
        if not isinstance(test_id, int) or not 1 <= test_id <= 6:
            problems.append(f"test must be an integer 1-6, got {test_id!r}")
        sel_raw = raw.get("models", {})
        selection = bm.ModelSelection()
        try:
            selection = bm.ModelSelection(**sel_raw)
        except (TypeError, ConfigurationError) as exc:
            problems.append(f"models: {exc}")
        step_h = raw.get("step_s", 0.0)
        if not isinstance(step_h, (int, float)) or step_h < 0:
            problems.append(f"step_s must be a nonnegative number, got {step_h!r}")
        duration = raw.get("duration_s")
        if duration is not None and (
            not isinstance(duration, (int, float)) or duration < 0
        ):
            problems.append(f"duration_s must be >= 0, got {duration!r}")
        signals = raw.get("signals")
        if signals is not None and (
            not isinstance(signals, list)
            or not all(isinstance(s, str) for s in signals)
        ):
            problems.append("signals must be a list of strings")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int):
            problems.append(f"seed must be an integer, got {seed!r}")
        known = {"test", "models", "step_s", "duration_s", "signals",
                 "output", "seed"}
        for key in sorted(set(raw) - known):
            problems.append(f"unknown key {key!r}")
        if problems:
            raise ConfigurationError(
                f"{origin}: " + "; ".join(problems)
            )
        return cls(test_id=test_id, selection=selection, step_h=float(step_h),
                   duration=duration, signals=signals,
                   output=raw.get("output"), seed=seed)


def write_csv(result: RunResult, path) -> None:
    """Write a run to CSV (LF endings, reload-exact float text)."""
    names = sorted(result.signals)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(["time_s"] + names) + "\n")
        cols = [result.signals[n] for n in names]
        for k in range(result.times.size):
            row = [result.times[k]] + [c[k] for c in cols]
            fh.write(",".join(_FLOAT_FMT.format(x) for x in row) + "\n")


def read_csv(path) -> RunResult:
    """Reload a run CSV written by :func:`write_csv`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("time_s"):
            raise ConfigurationError(f"{path}: first column must be time_s")
        names = header.split(",")[1:]
        body = fh.read()
    if body.strip():
        data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    else:
        data = np.zeros((0, len(names) + 1))
    return RunResult(
        times=data[:, 0],
        signals={n: data[:, i + 1] for i, n in enumerate(names)},
        wall_seconds=0.0,
        meta={"source": str(path)},
    )


def run_scenario(config: ScenarioConfig) -> RunResult:
    """Execute one scenario; writes the CSV when an output path is set."""
    if config.duration == 0:
        result = RunResult(times=np.zeros(0), signals={}, wall_seconds=0.0,
                           meta={"mode": config.selection.mode.value,
                                 "test_id": config.test_id})
    else:
        result = bm.run_test(
            config.selection, config.test_id, step_h=config.step_h,
            duration=config.duration, signals=config.signals,
        )
    result.meta["seed"] = config.seed
    if config.output:
        write_csv(result, config.output)
    return result


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with edge shrinkage, window in samples."""
    if window <= 1:
        return np.asarray(x, dtype=float)
    kernel = np.ones(window) / window
    num = np.convolve(x, kernel, mode="same")
    norm = np.convolve(np.ones_like(x), kernel, mode="same")
    return num / norm


@dataclass
class SignalMetrics:
    rms_error: float
    max_abs_error: float
    ma_rms_error: float      # after one-cycle moving average
    ma_max_error: float


@dataclass
class MetricsReport:
    per_signal: dict[str, SignalMetrics]
    wall_seconds: float
    ref_wall_seconds: float

    @property
    def runtime_ratio(self) -> float:
        if self.ref_wall_seconds <= 0:
            return math.nan
        return self.wall_seconds / self.ref_wall_seconds

    def to_dict(self) -> dict:
        return {
            "signals": {
                name: vars(m) for name, m in sorted(self.per_signal.items())
            },
            "wall_seconds": self.wall_seconds,
            "ref_wall_seconds": self.ref_wall_seconds,
        }


def compute_metrics(run: RunResult, reference: RunResult,
                    transient_windows: list[tuple[float, float]] | None = None,
                    f_nom: float = 50.0) -> MetricsReport:
    """Per-signal error metrics of ``run`` against ``reference``.

    The reference is resampled onto the run's time grid by linear
    interpolation over the overlapping range; samples inside any
    transient window are excluded from all error statistics.
    """
    missing = sorted(set(reference.signals) ^ set(run.signals))
    if missing:
        raise ConfigurationError(
            f"signal sets differ; unmatched: {missing}"
        )
    t0 = max(run.times[0], reference.times[0])
    t1 = min(run.times[-1], reference.times[-1])
    if t1 <= t0:
        raise ConfigurationError("runs do not overlap in time")
    sel = (run.times >= t0) & (run.times <= t1)
    t = run.times[sel]
    keep = np.ones(t.size, dtype=bool)
    for a, b in transient_windows or []:
        keep &= ~((t >= a) & (t <= b))
    if not keep.any():
        raise ConfigurationError("transient windows exclude all samples")
    dt = float(np.median(np.diff(t))) if t.size > 1 else 1.0
    window = max(1, int(round(1.0 / (f_nom * dt))))

    per_signal = {}
    for name in sorted(run.signals):
        a = np.asarray(run.signals[name], dtype=float)[sel]
        b = np.interp(t, reference.times, reference.signals[name])
        err = (a - b)[keep]
        ma_err = (moving_average(a, window) - moving_average(b, window))[keep]
        per_signal[name] = SignalMetrics(
            rms_error=float(np.sqrt(np.mean(err**2))),
            max_abs_error=float(np.max(np.abs(err))),
            ma_rms_error=float(np.sqrt(np.mean(ma_err**2))),
            ma_max_error=float(np.max(np.abs(ma_err))),
        )
    return MetricsReport(
        per_signal=per_signal,
        wall_seconds=run.wall_seconds,
        ref_wall_seconds=reference.wall_seconds,
    )


def default_transient_windows(events: list, pad: float = 0.5):
    """[event, event + pad] exclusion window per scripted event."""
    return [(e.t, e.t + pad) for e in events]


def timing_report(labelled_walls: dict[str, list[float]],
                  baseline: str | None = None) -> dict:
    """Relative runtime table from repeated wall-clock measurements.

    Each label maps to >= 1 measurements; minimum-of-N is used to reduce
    scheduler noise.  Ratios are relative to the named baseline (default:
    first label in insertion order).
    """
    if not labelled_walls:
        raise ConfigurationError("timing report needs at least one entry")
    mins = {}
    for label, walls in labelled_walls.items():
        if not walls or any(w <= 0 for w in walls):
            raise ConfigurationError(
                f"timing entry {label!r} needs positive wall-clock samples"
            )
        mins[label] = min(walls)
    if baseline is None:
        baseline = next(iter(labelled_walls))
    if baseline not in mins:
        raise ConfigurationError(f"unknown baseline {baseline!r}")
    ref = mins[baseline]
    return {
        "baseline": baseline,
        "entries": {
            label: {"min_seconds": m, "ratio": m / ref}
            for label, m in mins.items()
        },
    }


def timing_report_from_dir(directory) -> dict:
    """Aggregate ``*.timing.json`` files ({label, wall_seconds}) in a
    directory into one report."""
    directory = Path(directory)
    walls: dict[str, list[float]] = {}
    for path in sorted(directory.glob("*.timing.json")):
        with open(path) as fh:
            entry = json.load(fh)
        walls.setdefault(entry["label"], []).append(float(entry["wall_seconds"]))
    if not walls:
        raise ConfigurationError(f"no *.timing.json files in {directory}")
    return timing_report(walls)
