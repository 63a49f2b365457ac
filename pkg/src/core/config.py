"""
Settings for planning runs.

Precedence: built-in defaults < environment (.env, PTL_* variables) <
JSON config file < explicit overrides (CLI flags).
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

import pydantic
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, field_validator

from src.core.costs import CostFunction, CostKind
from src.core.errors import ParameterError, ValidationError
from src.core.model import EnergyModel, calibrated_energy

load_dotenv()

ENV_PREFIX = "PTL_"


class Settings(BaseModel):
    """Every tunable of the planner, solver and window sweep."""
    model_config = ConfigDict(extra="forbid")

    # solver
    restarts: int = 50
    rcl_alpha: float = 0.3
    seed: int = 0
    max_local_search_passes: int = 1000
    cost_function: CostKind = CostKind.COMBINED
    k_c: float = 1000.0
    workers: int = 1

    # re-planning and window sweep
    replan_restarts: int = 50
    replan_cost_function: Optional[CostKind] = None
    stop_on_feasible: bool = True
    dt: Optional[float] = None
    refine_tol: float = 0.1
    full_sweep: bool = False

    # vehicle and energy model
    v_max: float = 5.0
    v_insp: float = 1.0
    calibration_distance_m: float = 700.0
    calibration_inspection_share: float = 0.5
    inspection_power_ratio: float = 1.0

    log_level: str = "INFO"

    @field_validator("restarts", "replan_restarts", "workers", "max_local_search_passes")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @field_validator("seed")
    @classmethod
    def _non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("seed must be >= 0")
        return value

    @field_validator("rcl_alpha", "calibration_inspection_share")
    @classmethod
    def _unit_interval(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError("must lie in [0, 1]")
        return value

    @field_validator("k_c", "refine_tol", "v_max", "v_insp", "calibration_distance_m", "inspection_power_ratio")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be > 0")
        return value

    @field_validator("dt")
    @classmethod
    def _positive_dt(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not value > 0:
            raise ValueError("dt must be > 0")
        return value

    def energy_model(self, v_max: Optional[float] = None, v_insp: Optional[float] = None) -> EnergyModel:
        return calibrated_energy(
            v_max or self.v_max,
            v_insp or self.v_insp,
            self.calibration_distance_m,
            self.calibration_inspection_share,
            self.inspection_power_ratio,
        )

    def cost(self, c_max: float, *, replan: bool = False) -> CostFunction:
        kind = self.cost_function
        if replan and self.replan_cost_function is not None:
            kind = self.replan_cost_function
        return CostFunction(kind, c_max, self.k_c)


def _from_env() -> Dict[str, Any]:
    values = {}
    for name in Settings.model_fields:
        raw = os.getenv(ENV_PREFIX + name.upper())
        if raw not in (None, ""):
            values[name] = raw
    return values


def load_settings(config_path: Optional[str | Path] = None, **overrides: Any) -> Settings:
    """
    Resolve settings from env, an optional JSON file and overrides.

    Args:
        config_path: Path to a JSON object of setting keys
        overrides: Explicit values; None means "not given"

    Returns:
        Validated Settings
    """
    values = _from_env()

    if config_path:
        try:
            data = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"Config file {config_path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError(f"Config file {config_path} must hold a JSON object")
        values.update(data)

    values.update({k: v for k, v in overrides.items() if v is not None})

    try:
        return Settings(**values)
    except pydantic.ValidationError as exc:
        raise ParameterError(f"Invalid settings: {exc}") from exc
