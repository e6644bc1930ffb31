"""JSON run configuration.

Every physical quantity must appear in the document; only harness knobs
(output directory, trace stride, initial bearing, P error sign, gain step)
have defaults. Unknown keys are rejected so typos cannot silently fall back.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional

from magpair.control import EnvelopeConfig, PidConfig, SmootherConfig
from magpair.dynamics import IntegratorConfig
from magpair.errors import ConfigError, DomainError
from magpair.physics import PhysicalParams
from magpair.scenario import ControllerSpec, ScenarioSpec

DEFAULT_OUTPUT_DIR = "magpair_out"

_MISSING = object()


@dataclass(frozen=True)
class RunConfig:
    physical: PhysicalParams
    scenario: ScenarioSpec
    output_dir: str = DEFAULT_OUTPUT_DIR
    trace_stride: int = 1

    def __post_init__(self):
        if isinstance(self.trace_stride, bool) or not isinstance(self.trace_stride, int) or self.trace_stride < 1:
            raise ConfigError(f"output.trace_stride: must be an integer >= 1, got {self.trace_stride!r}")


class _Block:
    """Key accessor that tracks consumption so leftovers can be reported."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or '<root>'}: expected an object")
        self.data = data
        self.path = path
        self.seen = set()

    def _key(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, default=_MISSING):
        self.seen.add(key)
        if key not in self.data:
            if default is _MISSING:
                raise ConfigError(f"{self._key(key)}: missing required key")
            return default
        return self.data[key]

    def number(self, key, default=_MISSING) -> float:
        value = self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{self._key(key)}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{self._key(key)}: must be finite")
        return value

    def boolean(self, key, default=_MISSING) -> bool:
        value = self.get(key, default)
        if not isinstance(value, bool):
            raise ConfigError(f"{self._key(key)}: expected true/false, got {value!r}")
        return value

    def block(self, key, default=_MISSING) -> Optional["_Block"]:
        value = self.get(key, default)
        if value is None:
            return None
        return _Block(value, self._key(key))

    def finish(self):
        extra = sorted(set(self.data) - self.seen)
        if extra:
            raise ConfigError(f"{self._key(extra[0])}: unknown key")


def _build(path: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except (ConfigError, DomainError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_physical(b: _Block) -> PhysicalParams:
    params = _build(
        b.path,
        PhysicalParams,
        magnetization=b.number("magnetization"),
        agent_radius=b.number("agent_radius"),
        medium_viscosity=b.number("medium_viscosity"),
        relative_permeability=b.number("relative_permeability"),
        max_error_angle=b.number("max_error_angle"),
    )
    b.finish()
    return params


def _parse_controller(b: _Block) -> ControllerSpec:
    kind = b.get("kind")
    if kind not in ("P", "PID", "PID_PD"):
        raise ConfigError(f"{b.path}.kind: expected P, PID or PID_PD, got {kind!r}")
    if kind == "P":
        k_i = b.number("k_i", 0.0)
        k_d = b.number("k_d", 0.0)
    else:
        k_i, k_d = b.number("k_i"), b.number("k_d")
    pid = _build(
        b.path,
        PidConfig,
        k_p=b.number("k_p"),
        k_i=k_i,
        k_d=k_d,
        error_unit_scale=b.number("error_unit_scale"),
    )
    smoother = None
    sb = b.block("smoother", None if kind != "PID_PD" else _MISSING)
    if sb is not None:
        smoother = _build(sb.path, SmootherConfig, k_p2=sb.number("k_p2"), k_d2=sb.number("k_d2"))
        _build(sb.path, smoother.validate)
        sb.finish()
    gain_dt = b.get("gain_dt", None)
    if gain_dt is not None:
        gain_dt = b.number("gain_dt")
    spec = _build(
        b.path,
        ControllerSpec,
        kind=kind,
        pid=pid,
        smoother=smoother,
        signed_error=b.boolean("signed_error", True),
        gain_dt=gain_dt,
    )
    b.finish()
    return spec


def _parse_targets(value, path) -> List[tuple]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of [start_time, r_des] pairs")
    out = []
    for i, item in enumerate(value):
        if (
            not isinstance(item, list)
            or len(item) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in item)
        ):
            raise ConfigError(f"{path}[{i}]: expected [start_time, r_des]")
        out.append((float(item[0]), float(item[1])))
    return out


def _parse_scenario(b: _Block) -> ScenarioSpec:
    controller = _parse_controller(b.block("controller"))
    eb = b.block("envelope")
    envelope = _build(
        eb.path, EnvelopeConfig, r_min=eb.number("r_min"), r_max=eb.number("r_max"), epsilon=eb.number("epsilon")
    )
    eb.finish()
    ib = b.block("integrator")
    integrator = _build(
        ib.path,
        IntegratorConfig,
        dt=ib.number("dt"),
        epsilon_floor=ib.number("epsilon_floor"),
        alpha=ib.number("alpha"),
    )
    ib.finish()
    spec = _build(
        b.path,
        ScenarioSpec,
        initial_r=b.number("initial_r"),
        initial_phi=b.number("initial_phi", 0.0),
        target_schedule=tuple(_parse_targets(b.get("targets"), f"{b.path}.targets")),
        controller=controller,
        envelope=envelope,
        integrator=integrator,
        duration=b.number("duration"),
    )
    b.finish()
    return spec


def parse_config(data: Dict[str, Any]) -> RunConfig:
    """Validate a decoded JSON document into a :class:`RunConfig`."""
    root = _Block(data, "")
    physical = _parse_physical(root.block("physical"))
    scenario = _parse_scenario(root.block("scenario"))
    output_dir, stride = DEFAULT_OUTPUT_DIR, 1
    ob = root.block("output", None)
    if ob is not None:
        output_dir = ob.get("dir", DEFAULT_OUTPUT_DIR)
        if not isinstance(output_dir, str) or not output_dir:
            raise ConfigError("output.dir: expected a non-empty string")
        stride = ob.get("trace_stride", 1)
        ob.finish()
    root.finish()
    return RunConfig(physical=physical, scenario=scenario, output_dir=output_dir, trace_stride=stride)


def resolve_config_path(path: str) -> Path:
    """Return ``path`` if it exists, else the bundled config of that name."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix == ".json" else f"{p.name}.json"
    bundled = resources.files("magpair") / "configs" / name
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"config file not found: {path}")


def load_config(path) -> RunConfig:
    p = resolve_config_path(str(path))
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    return parse_config(data)


def bundled_configs() -> List[str]:
    root = resources.files("magpair") / "configs"
    return sorted(entry.name[:-5] for entry in root.iterdir() if entry.name.endswith(".json"))


def config_to_dict(cfg: RunConfig) -> Dict[str, Any]:
    """Inverse of :func:`parse_config`."""
    s = cfg.scenario
    c = s.controller
    controller: Dict[str, Any] = {
        "kind": c.kind,
        "k_p": c.pid.k_p,
        "k_i": c.pid.k_i,
        "k_d": c.pid.k_d,
        "error_unit_scale": c.pid.error_unit_scale,
        "signed_error": c.signed_error,
        "gain_dt": c.gain_dt,
    }
    if c.smoother is not None:
        controller["smoother"] = {"k_p2": c.smoother.k_p2, "k_d2": c.smoother.k_d2}
    p = cfg.physical
    return {
        "physical": {
            "magnetization": p.magnetization,
            "agent_radius": p.agent_radius,
            "medium_viscosity": p.medium_viscosity,
            "relative_permeability": p.relative_permeability,
            "max_error_angle": p.max_error_angle,
        },
        "scenario": {
            "initial_r": s.initial_r,
            "initial_phi": s.initial_phi,
            "duration": s.duration,
            "targets": [[t, r] for t, r in s.target_schedule],
            "controller": controller,
            "envelope": {"r_min": s.envelope.r_min, "r_max": s.envelope.r_max, "epsilon": s.envelope.epsilon},
            "integrator": {
                "dt": s.integrator.dt,
                "epsilon_floor": s.integrator.epsilon_floor,
                "alpha": s.integrator.alpha,
            },
        },
        "output": {"dir": cfg.output_dir, "trace_stride": cfg.trace_stride},
    }


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2)
