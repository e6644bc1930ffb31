"""Closed-loop experiments: definition, execution, scoring and comparison."""

from __future__ import annotations

import configparser
import csv
import io
import math
from dataclasses import dataclass, field, fields, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from magpair.control import (
    CONTROLLER_KINDS,
    ControllerStack,
    EnvelopeConfig,
    PidConfig,
    SmootherConfig,
    bang_bang_phi,
)
from magpair.dynamics import IntegratorConfig, SimState, step
from magpair.errors import ConfigError, MetricsUndefinedError, ModelInapplicableError
from magpair.physics import DerivedConstants, PhysicalParams, derive_constants

CSV_COLUMNS = ("t", "r", "r_des", "psi_cmd", "psi_applied", "phi", "clamped", "branch")

CONVERGENCE_BAND = 0.02
FLUCTUATION_WINDOW = 0.30
STEADY_WINDOW = 0.10
MIN_SEGMENT_STEPS = 10

SWEEP_PARAMETERS = ("medium_viscosity", "k_p", "k_i", "k_d", "k_p2", "k_d2", "dt", "initial_r")


@dataclass(frozen=True)
class ControllerSpec:
    """Controller choice plus gains.

    ``gain_dt`` is the step the per-step PID/smoother gains were tuned at.
    Running at another step rescales them so the continuous-time behaviour is
    preserved. ``None`` means the gains are taken as given at any step.
    """

    kind: str = "PID"
    pid: PidConfig = field(default_factory=PidConfig)
    smoother: Optional[SmootherConfig] = None
    signed_error: bool = True
    gain_dt: Optional[float] = None

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ConfigError(f"unknown controller kind {self.kind!r}; expected one of {CONTROLLER_KINDS}")
        if self.kind == "PID_PD" and self.smoother is None:
            raise ConfigError("PID_PD controller requires smoother gains")
        if self.smoother is not None:
            self.smoother.validate()
        if self.gain_dt is not None and not (math.isfinite(self.gain_dt) and self.gain_dt > 0):
            raise ConfigError(f"gain_dt must be > 0, got {self.gain_dt!r}")

    def build(self, envelope_cfg: EnvelopeConfig, dt: float) -> ControllerStack:
        ratio = 1.0 if self.gain_dt is None else dt / self.gain_dt
        pid = self.pid.rescaled(ratio) if ratio != 1.0 else self.pid
        smoother = self.smoother
        if smoother is not None and ratio != 1.0:
            smoother = smoother.rescaled(ratio)
        return ControllerStack(self.kind, envelope_cfg, pid, smoother, self.signed_error)


@dataclass(frozen=True)
class ScenarioSpec:
    initial_r: float
    target_schedule: Tuple[Tuple[float, float], ...]
    controller: ControllerSpec = field(default_factory=ControllerSpec)
    envelope: EnvelopeConfig = field(default_factory=EnvelopeConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    duration: float = 2.0
    initial_phi: float = 0.0

    def __post_init__(self):
        schedule = tuple((float(t), float(r)) for t, r in self.target_schedule)
        object.__setattr__(self, "target_schedule", schedule)
        if not schedule:
            raise ConfigError("target_schedule must not be empty")
        if schedule[0][0] != 0.0:
            raise ConfigError("first target must start at t = 0")
        times = [t for t, _ in schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("target start times must be strictly increasing")
        if any(not (math.isfinite(r) and r > 0) for _, r in schedule):
            raise ConfigError("target radii must be finite and > 0")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ConfigError(f"duration must be > 0, got {self.duration!r}")
        if self.duration < times[-1]:
            raise ConfigError("duration must not precede the last target change")
        if not (math.isfinite(self.initial_r) and self.initial_r > 0):
            raise ConfigError(f"initial_r must be > 0, got {self.initial_r!r}")
        if not math.isfinite(self.initial_phi):
            raise ConfigError("initial_phi must be finite")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.integrator.dt))

    def segment_starts(self) -> List[int]:
        """Row index at which each schedule segment begins."""
        dt = self.integrator.dt
        return [int(round(t / dt)) for t, _ in self.target_schedule]

    def with_dt(self, dt: float) -> "ScenarioSpec":
        """Same experiment at another integration step, gains kept equivalent."""
        controller = self.controller
        if controller.gain_dt is None:
            controller = replace(controller, gain_dt=self.integrator.dt)
        return replace(self, integrator=replace(self.integrator, dt=dt), controller=controller)


@dataclass
class Trace:
    """Per-step record of a closed-loop run.

    Row ``k`` holds the state at ``t[k]`` and the angles applied over
    ``[t[k], t[k] + dt)``. ``error`` is set when the run aborted early; the
    rows up to the abort are kept.
    """

    dt: float
    schedule: Tuple[Tuple[float, float], ...]
    t: np.ndarray
    r: np.ndarray
    r_des: np.ndarray
    psi_cmd: np.ndarray
    psi_applied: np.ndarray
    phi: np.ndarray
    clamped: np.ndarray
    branch: List[str]
    final_state: Optional[SimState] = None
    error: Optional[str] = None

    def __len__(self):
        return len(self.t)

    @property
    def aborted(self) -> bool:
        return self.error is not None

    def segment_bounds(self) -> List[Tuple[int, int]]:
        """Half-open row ranges of each schedule segment present in the trace."""
        starts = [int(round(t / self.dt)) for t, _ in self.schedule]
        n = len(self.t)
        bounds = []
        for i, start in enumerate(starts):
            stop = starts[i + 1] if i + 1 < len(starts) else n
            stop = min(stop, n)
            if start >= stop:
                break
            bounds.append((start, stop))
        return bounds


@dataclass(frozen=True)
class SegmentMetrics:
    index: int
    start_time: float
    r_des: float
    length: float
    convergence_time: Optional[float]
    steady_state_error: float
    fluctuation_band: float
    final_psi_mean: float

    @property
    def reached_target(self) -> bool:
        return self.convergence_time is not None


@dataclass(frozen=True)
class Metrics:
    segments: Tuple[SegmentMetrics, ...]
    max_angle_step: float
    undefined_segments: Tuple[int, ...] = ()
    error: Optional[str] = None

    def segment(self, index: int) -> SegmentMetrics:
        for seg in self.segments:
            if seg.index == index:
                return seg
        raise KeyError(index)


def run_scenario(spec: ScenarioSpec, consts: DerivedConstants) -> Trace:
    """Execute the closed loop described by ``spec``."""
    cfg = spec.integrator
    dt = cfg.dt
    stack = spec.controller.build(spec.envelope, dt)
    n = spec.n_steps
    starts = spec.segment_starts()
    targets = [r for _, r in spec.target_schedule]

    rows_t, rows_r, rows_rdes, rows_cmd, rows_app, rows_phi, rows_clamp, rows_branch = (
        [], [], [], [], [], [], [], []
    )
    state = SimState(t=0.0, r=spec.initial_r, phi=spec.initial_phi)
    seg = 0
    error = None
    for k in range(n):
        while seg + 1 < len(starts) and k >= starts[seg + 1]:
            seg += 1
        r_des = targets[seg]
        try:
            psi_cmd, psi_applied, branch = stack.command(state.r, r_des)
        except ModelInapplicableError as exc:
            error = f"model_inapplicable: {exc}"
            break
        rows_t.append(k * dt)
        rows_r.append(state.r)
        rows_rdes.append(r_des)
        rows_cmd.append(psi_cmd)
        rows_app.append(psi_applied)
        rows_phi.append(state.phi)
        rows_clamp.append(state.clamped)
        rows_branch.append(branch)
        state = step(state, psi_applied, cfg, consts)

    return Trace(
        dt=dt,
        schedule=spec.target_schedule,
        t=np.asarray(rows_t, dtype=float),
        r=np.asarray(rows_r, dtype=float),
        r_des=np.asarray(rows_rdes, dtype=float),
        psi_cmd=np.asarray(rows_cmd, dtype=float),
        psi_applied=np.asarray(rows_app, dtype=float),
        phi=np.asarray(rows_phi, dtype=float),
        clamped=np.asarray(rows_clamp, dtype=bool),
        branch=rows_branch,
        final_state=state,
        error=error,
    )


def _convergence_time(r: np.ndarray, r_des: float, dt: float) -> Optional[float]:
    inside = np.abs(r - r_des) <= CONVERGENCE_BAND * r_des
    if not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    first = 0 if outside.size == 0 else int(outside[-1]) + 1
    return first * dt


def segment_metrics(trace: Trace, index: int, start: int, stop: int) -> SegmentMetrics:
    length = stop - start
    if length < MIN_SEGMENT_STEPS:
        raise MetricsUndefinedError(f"segment {index} has {length} steps; need at least {MIN_SEGMENT_STEPS}")
    r = trace.r[start:stop]
    psi = trace.psi_applied[start:stop]
    r_des = float(trace.r_des[start])

    steady = max(1, int(math.ceil(STEADY_WINDOW * length)))
    window = max(1, int(math.ceil(FLUCTUATION_WINDOW * length)))
    tail = psi[-window:]
    return SegmentMetrics(
        index=index,
        start_time=float(trace.t[start]),
        r_des=r_des,
        length=length * trace.dt,
        convergence_time=_convergence_time(r, r_des, trace.dt),
        steady_state_error=float(abs(np.mean(r[-steady:]) - r_des)),
        fluctuation_band=float(np.max(np.abs(tail - np.mean(tail)))),
        final_psi_mean=float(np.mean(psi[-steady:])),
    )


def compute_metrics(trace: Trace, strict: bool = True) -> Metrics:
    """Score every schedule segment of ``trace``.

    With ``strict=False`` segments too short to score are listed in
    ``undefined_segments`` instead of raising.
    """
    if len(trace) == 0:
        raise MetricsUndefinedError("trace is empty")
    segments, undefined = [], []
    for i, (start, stop) in enumerate(trace.segment_bounds()):
        try:
            segments.append(segment_metrics(trace, i, start, stop))
        except MetricsUndefinedError:
            if strict:
                raise
            undefined.append(i)
    steps = np.abs(np.diff(trace.psi_applied))
    return Metrics(
        segments=tuple(segments),
        max_angle_step=float(steps.max()) if steps.size else 0.0,
        undefined_segments=tuple(undefined),
        error=trace.error,
    )


def _ratio(b, a):
    if a is None or b is None:
        return None
    if a == b:
        return 1.0
    if a == 0:
        return math.inf
    return b / a


@dataclass(frozen=True)
class ComparisonReport:
    """Paired metrics; every ratio is B over A."""

    metrics_a: Metrics
    metrics_b: Metrics
    convergence_ratios: Tuple[Optional[float], ...]
    fluctuation_ratios: Tuple[Optional[float], ...]
    max_angle_step_ratio: Optional[float]
    label_a: str = "A"
    label_b: str = "B"

    @property
    def convergence_ratio(self) -> Optional[float]:
        return self.convergence_ratios[0] if self.convergence_ratios else None


def _check_comparable(spec_a: ScenarioSpec, spec_b: ScenarioSpec):
    for f in fields(ScenarioSpec):
        if f.name == "controller":
            continue
        if getattr(spec_a, f.name) != getattr(spec_b, f.name):
            raise ConfigError(f"scenarios differ in {f.name!r}; only the controller may differ")


def compare_traces(
    spec_a: ScenarioSpec, trace_a: Trace, spec_b: ScenarioSpec, trace_b: Trace
) -> ComparisonReport:
    _check_comparable(spec_a, spec_b)
    ma, mb = compute_metrics(trace_a, strict=False), compute_metrics(trace_b, strict=False)
    conv, fluct = [], []
    for seg_a in ma.segments:
        try:
            seg_b = mb.segment(seg_a.index)
        except KeyError:
            conv.append(None)
            fluct.append(None)
            continue
        conv.append(_ratio(seg_b.convergence_time, seg_a.convergence_time))
        fluct.append(_ratio(seg_b.fluctuation_band, seg_a.fluctuation_band))
    return ComparisonReport(
        metrics_a=ma,
        metrics_b=mb,
        convergence_ratios=tuple(conv),
        fluctuation_ratios=tuple(fluct),
        max_angle_step_ratio=_ratio(mb.max_angle_step, ma.max_angle_step),
        label_a=spec_a.controller.kind,
        label_b=spec_b.controller.kind,
    )


def compare(spec_a: ScenarioSpec, spec_b: ScenarioSpec, consts: DerivedConstants) -> ComparisonReport:
    """Run two scenarios that differ only in their controller and pair the metrics."""
    _check_comparable(spec_a, spec_b)
    return compare_traces(spec_a, run_scenario(spec_a, consts), spec_b, run_scenario(spec_b, consts))


def apply_parameter(params: PhysicalParams, spec: ScenarioSpec, parameter: str, value: float):
    """Return ``(params, spec)`` with one whitelisted knob replaced."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"cannot sweep {parameter!r}; choose one of {SWEEP_PARAMETERS}")
    value = float(value)
    ctrl = spec.controller
    if parameter == "medium_viscosity":
        return replace(params, medium_viscosity=value), spec
    if parameter == "dt":
        return params, spec.with_dt(value)
    if parameter == "initial_r":
        return params, replace(spec, initial_r=value)
    if parameter in ("k_p", "k_i", "k_d"):
        return params, replace(spec, controller=replace(ctrl, pid=replace(ctrl.pid, **{parameter: value})))
    if ctrl.smoother is None:
        raise ConfigError(f"{parameter!r} needs a PID_PD controller")
    smoother = replace(ctrl.smoother, **{parameter: value})
    return params, replace(spec, controller=replace(ctrl, smoother=smoother))


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    metrics: Metrics


def sweep(params: PhysicalParams, spec: ScenarioSpec, parameter: str, values: Sequence[float]) -> List[SweepRow]:
    """Independent runs of ``spec`` with ``parameter`` set to each of ``values``."""
    if len(values) == 0:
        raise ConfigError("sweep needs at least one value")
    rows = []
    for value in values:
        p, s = apply_parameter(params, spec, parameter, value)
        trace = run_scenario(s, derive_constants(p))
        rows.append(SweepRow(parameter, float(value), compute_metrics(trace, strict=False)))
    return rows


def regulate_phase(
    state: SimState,
    phi_des: float,
    deadband: float,
    duration: float,
    cfg: IntegratorConfig,
    consts: DerivedConstants,
) -> List[SimState]:
    """Steer the bearing with sign-switched zero-force angles from ``state``."""
    states = [state]
    for _ in range(int(round(duration / cfg.dt))):
        psi = bang_bang_phi(states[-1].phi, phi_des, deadband, consts)
        states.append(step(states[-1], psi, cfg, consts))
    return states


# -- serialization ---------------------------------------------------------


def write_trace_csv(trace: Trace, fh, stride: int = 1):
    """Write ``trace`` as CSV. Floats use ``repr`` so stride-1 output is lossless."""
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride!r}")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for k in range(0, len(trace), stride):
        writer.writerow(
            (
                repr(float(trace.t[k])),
                repr(float(trace.r[k])),
                repr(float(trace.r_des[k])),
                repr(float(trace.psi_cmd[k])),
                repr(float(trace.psi_applied[k])),
                repr(float(trace.phi[k])),
                int(bool(trace.clamped[k])),
                trace.branch[k],
            )
        )


def read_trace_csv(fh, dt: float, schedule) -> Trace:
    reader = csv.reader(fh)
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ConfigError(f"unexpected trace header {header!r}")
    cols = {name: [] for name in CSV_COLUMNS}
    for row in reader:
        for name, value in zip(CSV_COLUMNS, row):
            cols[name].append(value)
    return Trace(
        dt=dt,
        schedule=tuple(schedule),
        t=np.array(cols["t"], dtype=float),
        r=np.array(cols["r"], dtype=float),
        r_des=np.array(cols["r_des"], dtype=float),
        psi_cmd=np.array(cols["psi_cmd"], dtype=float),
        psi_applied=np.array(cols["psi_applied"], dtype=float),
        phi=np.array(cols["phi"], dtype=float),
        clamped=np.array([v == "1" for v in cols["clamped"]], dtype=bool),
        branch=cols["branch"],
    )


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metrics_report(metrics: Metrics) -> str:
    """INI-style text report with one section per segment index."""
    parser = configparser.ConfigParser()
    parser["summary"] = {
        "segments": _fmt(len(metrics.segments)),
        "max_angle_step": _fmt(metrics.max_angle_step),
        "undefined_segments": ",".join(str(i) for i in metrics.undefined_segments) or "none",
        "error": _fmt(metrics.error),
    }
    for seg in metrics.segments:
        parser[f"segment.{seg.index}"] = {
            "start_time": _fmt(seg.start_time),
            "r_des": _fmt(seg.r_des),
            "length": _fmt(seg.length),
            "reached_target": _fmt(seg.reached_target),
            "convergence_time": _fmt(seg.convergence_time),
            "steady_state_error": _fmt(seg.steady_state_error),
            "fluctuation_band": _fmt(seg.fluctuation_band),
            "final_psi_mean": _fmt(seg.final_psi_mean),
        }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def comparison_report(report: ComparisonReport, envelope_cfg: Optional[EnvelopeConfig] = None) -> str:
    parser = configparser.ConfigParser()
    parser["summary"] = {
        "label_a": report.label_a,
        "label_b": report.label_b,
        "max_angle_step_a": _fmt(report.metrics_a.max_angle_step),
        "max_angle_step_b": _fmt(report.metrics_b.max_angle_step),
        "max_angle_step_ratio": _fmt(report.max_angle_step_ratio),
    }
    notes = []
    for i, seg_a in enumerate(report.metrics_a.segments):
        section = {
            "r_des": _fmt(seg_a.r_des),
            "reached_a": _fmt(seg_a.reached_target),
            "convergence_time_a": _fmt(seg_a.convergence_time),
            "fluctuation_band_a": _fmt(seg_a.fluctuation_band),
            "convergence_ratio": _fmt(report.convergence_ratios[i]),
            "fluctuation_ratio": _fmt(report.fluctuation_ratios[i]),
        }
        try:
            seg_b = report.metrics_b.segment(seg_a.index)
            section.update(
                reached_b=_fmt(seg_b.reached_target),
                convergence_time_b=_fmt(seg_b.convergence_time),
                fluctuation_band_b=_fmt(seg_b.fluctuation_band),
            )
        except KeyError:
            seg_b = None
        parser[f"segment.{seg_a.index}"] = section
        in_range = envelope_cfg is None or envelope_cfg.r_min <= seg_a.r_des <= envelope_cfg.r_max
        for label, seg in ((report.label_a, seg_a), (report.label_b, seg_b)):
            if seg is not None and not seg.reached_target:
                kind = "in-range" if in_range else "out-of-range"
                notes.append(f"{label} did not reach {kind} target {seg.r_des:g} m in segment {seg.index}")
    parser["notes"] = {f"note.{i}": text for i, text in enumerate(notes)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
