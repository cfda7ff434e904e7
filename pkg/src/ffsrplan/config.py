"""Scenario configuration: a documented YAML schema with explicit units.

Every physical field name carries its unit (``mass_kg``, ``t_c_s``,
``theta1_deg``); attitudes are unit quaternions ``[w, x, y, z]``.  Validation
errors name the offending field path.  The packaged ``paper_scenario.yaml``
is the reference scenario used across the test suite and the docs.
"""

from __future__ import annotations

import importlib.resources
from pathlib import Path

import numpy as np
import yaml

from .avoidance import CdfParams, Obstacle
from .ga import GaConfig
from .geom import Pose
from .model import LinkParam, RobotModel, SystemState
from .planner import PlannerParams
from .sim import Scenario


class ConfigError(ValueError):
    """Configuration problem; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


def _require(section: dict, field: str, path: str):
    if not isinstance(section, dict) or field not in section:
        raise ConfigError(f"{path}.{field}", "missing required field")
    return section[field]


def _number(section: dict, field: str, path: str, default=None) -> float:
    if default is not None and (not isinstance(section, dict) or field not in section):
        return float(default)
    value = _require(section, field, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{field}", f"expected a number, got {value!r}")
    return float(value)


def _vector(section: dict, field: str, path: str, n: int, default=None) -> np.ndarray:
    if default is not None and (not isinstance(section, dict) or field not in section):
        return np.asarray(default, dtype=float)
    value = _require(section, field, path)
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{field}", f"expected {n} numbers, got {value!r}")
    if arr.shape != (n,):
        raise ConfigError(f"{path}.{field}", f"expected {n} numbers, got shape {arr.shape}")
    return arr


def _matrix3(section: dict, field: str, path: str) -> np.ndarray:
    value = _require(section, field, path)
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{field}", f"expected a 3x3 matrix, got {value!r}")
    if arr.shape != (3, 3):
        raise ConfigError(f"{path}.{field}", f"expected a 3x3 matrix, got shape {arr.shape}")
    return arr


def _string(section: dict, field: str, path: str, default=None) -> str:
    if default is not None and (not isinstance(section, dict) or field not in section):
        return default
    value = _require(section, field, path)
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{field}", f"expected a string, got {value!r}")
    return value


def _pose(section: dict, path: str, pos_field="position_m", att_field="attitude_wxyz") -> Pose:
    return Pose(
        _vector(section, pos_field, path, 3),
        _vector(section, att_field, path, 4),
    )


def _link(entry: dict, path: str) -> LinkParam:
    try:
        return LinkParam(
            length=_number(entry, "length_m", path),
            mass=_number(entry, "mass_kg", path),
            inertia=_matrix3(entry, "inertia_kg_m2", path),
            axis=_vector(entry, "axis", path, 3),
            offset=_vector(entry, "offset_m", path, 3),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc))


def _robot(section: dict, path: str) -> RobotModel:
    base = _require(section, "base", path)
    mounts = _require(section, "mounts", path)
    arms = []
    for name in ("arm1", "arm2"):
        entries = _require(section, name, path)
        if not isinstance(entries, list) or len(entries) != 6:
            raise ConfigError(f"{path}.{name}", "expected a list of 6 links")
        arms.append(
            tuple(_link(e, f"{path}.{name}[{i}]") for i, e in enumerate(entries))
        )
    tools = section.get("tool_attitude_wxyz", {})
    try:
        return RobotModel(
            base_mass=_number(base, "mass_kg", f"{path}.base"),
            base_inertia=_matrix3(base, "inertia_kg_m2", f"{path}.base"),
            mounts=(
                _pose(_require(mounts, "arm1", f"{path}.mounts"), f"{path}.mounts.arm1"),
                _pose(_require(mounts, "arm2", f"{path}.mounts"), f"{path}.mounts.arm2"),
            ),
            arm1=arms[0],
            arm2=arms[1],
            tool_attitudes=(
                _vector(tools, "arm1", f"{path}.tool_attitude_wxyz", 4, default=[1, 0, 0, 0]),
                _vector(tools, "arm2", f"{path}.tool_attitude_wxyz", 4, default=[1, 0, 0, 0]),
            ),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc))


def load_scenario(path) -> tuple[Scenario, GaConfig | None]:
    """Parse and validate a scenario file; returns (scenario, ga config)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "top level must be a mapping")
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> tuple[Scenario, GaConfig | None]:
    robot = _robot(_require(raw, "robot", "scenario"), "robot")

    initial_sec = _require(raw, "initial", "scenario")
    initial = SystemState(
        base=_pose(initial_sec, "initial", "base_position_m", "base_attitude_wxyz"),
        theta1=np.radians(_vector(initial_sec, "theta1_deg", "initial", 6)),
        theta2=np.radians(_vector(initial_sec, "theta2_deg", "initial", 6)),
    )

    target = _pose(_require(raw, "target", "scenario"), "target")

    traj = _require(raw, "trajectory", "scenario")
    start = None
    if "start_position_m" in traj or "start_attitude_wxyz" in traj:
        start = _pose(traj, "trajectory", "start_position_m", "start_attitude_wxyz")
    total_time = _number(traj, "total_time_s", "trajectory")
    ramp_time = _number(traj, "ramp_time_s", "trajectory", default=4.0)

    obstacle = None
    if raw.get("obstacle") is not None:
        obs = raw["obstacle"]
        try:
            obstacle = Obstacle(
                center=_vector(obs, "center_m", "obstacle", 3),
                danger_radius=_number(obs, "danger_radius_m", "obstacle"),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("obstacle", str(exc))

    planner_sec = raw.get("planner", {})
    singularity = raw.get("singularity", {})
    try:
        planner = PlannerParams(
            m=_number(planner_sec, "m", "planner", default=0.1),
            t_c=_number(planner_sec, "t_c_s", "planner", default=3.0),
            feedback_mode=_string(
                planner_sec, "feedback_mode", "planner", default="predefined_time"
            ),
            k_p=_number(planner_sec, "k_p", "planner", default=0.15),
            phi_form=_string(planner_sec, "phi_form", "planner", default="canonical"),
            deadband=_number(planner_sec, "deadband", "planner", default=1e-9),
            eps=_number(singularity, "eps", "singularity", default=0.02),
            lambda_max=_number(singularity, "lambda_max", "singularity", default=0.08),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("planner", str(exc))

    cdf_sec = raw.get("cdf", {})
    try:
        cdf = CdfParams(
            xi=_number(cdf_sec, "xi", "cdf", default=0.1),
            delta=_number(cdf_sec, "delta", "cdf", default=17.25),
            mu=_number(cdf_sec, "mu", "cdf", default=0.5),
            escape_gain=_number(cdf_sec, "escape_gain", "cdf", default=60.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("cdf", str(exc))

    sim_sec = raw.get("sim", {})
    try:
        scenario = Scenario(
            robot=robot,
            initial=initial,
            target=target,
            planner=planner,
            cdf=cdf,
            obstacle=obstacle,
            total_time=total_time,
            dt=_number(sim_sec, "dt_s", "sim", default=1e-3),
            method=_string(sim_sec, "method", "sim", default="predefined_time"),
            start=start,
            ramp_time=ramp_time,
            momentum=_vector(sim_sec, "momentum", "sim", 6, default=np.zeros(6)),
            settle_tol=_number(sim_sec, "settle_tol_m", "sim", default=1e-6),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("scenario", str(exc))

    ga_cfg = None
    if raw.get("ga") is not None:
        ga_sec = raw["ga"]
        tc_fixed = ga_sec.get("tc_fixed_s")
        if tc_fixed is not None and (
            isinstance(tc_fixed, bool) or not isinstance(tc_fixed, (int, float))
        ):
            raise ConfigError("ga.tc_fixed_s", f"expected a number or null, got {tc_fixed!r}")
        m_bounds = _vector(ga_sec, "m_bounds", "ga", 2, default=[0.05, 0.95])
        tc_bounds = _vector(ga_sec, "tc_bounds_s", "ga", 2, default=[0.5, 5.0])
        try:
            ga_cfg = GaConfig(
                population=int(_number(ga_sec, "population", "ga", default=100)),
                crossover_prob=_number(ga_sec, "crossover_prob", "ga", default=0.6),
                mutation_prob=_number(ga_sec, "mutation_prob", "ga", default=0.1),
                generations=int(_number(ga_sec, "generations", "ga", default=100)),
                alpha=_number(ga_sec, "alpha", "ga", default=0.35),
                beta=_number(ga_sec, "beta", "ga", default=0.65),
                gamma=_number(ga_sec, "gamma", "ga", default=1e-4),
                danger_speed_deg=_number(ga_sec, "danger_speed_deg_s", "ga", default=150.0),
                max_speed_deg=_number(ga_sec, "max_speed_deg_s", "ga", default=200.0),
                seed=int(_number(ga_sec, "seed", "ga", default=0)),
                m_bounds=(float(m_bounds[0]), float(m_bounds[1])),
                tc_bounds=(float(tc_bounds[0]), float(tc_bounds[1])),
                tc_fixed=None if tc_fixed is None else float(tc_fixed),
                workers=int(_number(ga_sec, "workers", "ga", default=1)),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("ga", str(exc))

    return scenario, ga_cfg


def paper_scenario_path() -> Path:
    """Path of the packaged reference scenario."""
    return Path(
        importlib.resources.files("ffsrplan").joinpath("data/paper_scenario.yaml")
    )
