"""Scenario files: what to simulate, with what inputs, for how long.

Two kinds:

* ``scene``       -- load a scene, drive the finger from a trajectory file or
                     a named generator, run the full pipeline.
* ``reach-bench`` -- no scene; uniformly random targets are issued every
                     ``trial_period`` seconds and the time until the last
                     robot enters its stop band is recorded per trial.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .config import EngineConfig
from .hand import GENERATORS, FingerSample, load_trajectory
from .scene import Scene, load_scene

SCENARIO_SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Malformed or unresolvable scenario document."""


@dataclass
class ScenarioSpec:
    kind: str = "scene"                    # "scene" | "reach-bench"
    scene_path: str | None = None
    trajectory_path: str | None = None
    generator: str | None = None
    generator_params: dict = field(default_factory=dict)
    robot_count: int = 7
    duration: float = 30.0
    seed: int = 0
    trials: int = 100                      # reach-bench only
    trial_period: float = 5.0              # reach-bench only
    targets_per_trial: int = 1             # reach-bench only; robots race to the nearest
    config_overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.kind not in ("scene", "reach-bench"):
            raise ScenarioError(f"unknown scenario kind {self.kind!r}")
        if self.robot_count < 1:
            raise ScenarioError("robot_count must be >= 1")
        if self.duration < 0:
            raise ScenarioError("duration must be >= 0")
        if self.kind == "scene":
            if self.scene_path is None:
                raise ScenarioError("scene scenario needs a scene_path")
            if not Path(self.scene_path).exists():
                raise ScenarioError(f"scene file not found: {self.scene_path}")
            if self.trajectory_path is not None and not Path(self.trajectory_path).exists():
                raise ScenarioError(f"trajectory file not found: {self.trajectory_path}")
            if self.generator is not None and self.generator not in GENERATORS:
                raise ScenarioError(f"unknown trajectory generator {self.generator!r}")
        else:
            if self.trials < 1:
                raise ScenarioError("reach-bench needs trials >= 1")
            if self.trial_period <= 0:
                raise ScenarioError("trial_period must be positive")
            if self.targets_per_trial < 1:
                raise ScenarioError("targets_per_trial must be >= 1")

    def build_config(self, base: EngineConfig | None = None) -> EngineConfig:
        cfg = base if base is not None else EngineConfig()
        doc = cfg.to_dict()
        doc.update(self.config_overrides)
        doc["robot_count"] = self.robot_count
        doc["seed"] = self.seed
        return EngineConfig.from_dict(doc)

    def load_scene(self) -> Scene | None:
        if self.kind != "scene":
            return None
        return load_scene(self.scene_path)

    def load_track(self) -> list[FingerSample] | None:
        if self.kind != "scene":
            return None
        if self.trajectory_path is not None:
            return load_trajectory(self.trajectory_path)
        if self.generator is not None:
            return GENERATORS[self.generator](**self.generator_params)
        return None


def scenario_from_dict(doc: dict) -> ScenarioSpec:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    doc = dict(doc)
    schema = doc.pop("schema", SCENARIO_SCHEMA_VERSION)
    if schema != SCENARIO_SCHEMA_VERSION:
        raise ScenarioError(f"unsupported scenario schema {schema!r}")
    try:
        spec = ScenarioSpec(**doc)
    except TypeError as exc:
        raise ScenarioError(f"bad scenario field: {exc}") from None
    spec.validate()
    return spec


def load_scenario(path: str | Path) -> ScenarioSpec:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    # Relative file references resolve against the scenario's own directory.
    for key in ("scene_path", "trajectory_path"):
        ref = doc.get(key)
        if ref and not Path(ref).is_absolute() and not Path(ref).exists():
            cand = path.parent / ref
            if cand.exists():
                doc[key] = str(cand)
    return scenario_from_dict(doc)


def save_scenario(spec: ScenarioSpec, path: str | Path) -> None:
    doc = {"schema": SCENARIO_SCHEMA_VERSION, **spec.__dict__}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
