"""Desk-scale encountered-haptics robot swarm: planner, simulator and gateway."""

from .assignment import Assignment, Target, prioritize_targets, reassign_policy, solve_munkres
from .config import EngineConfig, load_config, save_config
from .engine import Engine, MetricsReport, build_engine, run_scenario
from .hand import Calibration, FingerSample, calibrate, load_trajectory, resample, save_trajectory
from .motion import RvoParams, preferred_velocity, rvo_step, yaw_controller
from .plant import (MotionCommand, NoiseParams, PlantConfig, RobotState, enqueue_command,
                    grasp, place, read_sensors, step_robot)
from .regions import HeightMap, Region, build_heightmap, extract_regions
from .scenario import ScenarioSpec, load_scenario, save_scenario
from .scene import (BoundsError, Scene, SceneError, SurfaceSample, TiltSample, load_scene,
                    raycast_down, sample_tilt, save_scene)

__version__ = "0.1.0"
