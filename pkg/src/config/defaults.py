"""Default configuration values for two-scale expansion runs.

This module provides the constants used when a configuration omits an
optional key, and the shipped configuration of every preset.
"""

import copy
from typing import TYPE_CHECKING, Any, NamedTuple

if TYPE_CHECKING:
    from src.config.models import RunConfig

DEFAULT_EPS = (1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128, 1 / 256)
DEFAULT_N_FAST = 64
DEFAULT_DRIFT_SAMPLES = 4
DEFAULT_TAU_POINTS = 32
DEFAULT_CHECKPOINTS = 64
DEFAULT_MAX_MEMORY_MB = 4096.0
DEFAULT_OUTPUT_DIRECTORY = "results"
DEFAULT_CONFIG_PATH = "config.toml"
WORKERS_ENV_VAR = "TS_WORKERS"

PRESET_DIMS = {"beam": 2, "gc4d": 4, "flr4d": 4}


class Resolution(NamedTuple):
    """Grid resolution of a preset run.

    Attributes:
        points: Grid points per phase-space axis
        tau_points: Number of τ nodes
        checkpoints: Number of slow-time intervals
    """

    points: int
    tau_points: int
    checkpoints: int


RUN_RESOLUTION = {
    "beam": Resolution(points=128, tau_points=32, checkpoints=64),
    "gc4d": Resolution(points=16, tau_points=16, checkpoints=16),
    "flr4d": Resolution(points=16, tau_points=16, checkpoints=16),
}

CHECK_RESOLUTION = {
    "beam": Resolution(points=48, tau_points=32, checkpoints=8),
    "gc4d": Resolution(points=12, tau_points=16, checkpoints=4),
    "flr4d": Resolution(points=12, tau_points=16, checkpoints=4),
}

_BOX_HALF_WIDTH = {"beam": 6.0, "gc4d": 5.0, "flr4d": 5.0}

_GAUSSIAN_INITIAL: dict[str, Any] = {"kind": "gaussian_mode", "width": 1.0}

_PRESET_FIELDS: dict[str, dict[str, Any]] = {
    "beam": {
        "initial": _GAUSSIAN_INITIAL,
        "e": [
            {
                "kind": "gaussian_mode",
                "harmonic": 1,
                "poly": {"constant": 0.0, "linear": [1.0]},
                "width": 1.0,
            }
        ],
    },
    "gc4d": {
        "initial": _GAUSSIAN_INITIAL,
        "e_x": [
            {
                "kind": "gaussian_mode",
                "amplitude": 0.5,
                "harmonic": 1,
                "poly": {"constant": 0.0, "linear": [0.0, 1.0]},
                "width": 1.5,
            }
        ],
        "e_y": [
            {
                "kind": "gaussian_mode",
                "amplitude": -0.5,
                "harmonic": 1,
                "poly": {"constant": 0.0, "linear": [1.0, 0.0]},
                "width": 1.5,
            }
        ],
        "b_z": [{"kind": "constant", "value": 0.2}],
    },
    "flr4d": {
        "initial": _GAUSSIAN_INITIAL,
        "e_x": [
            {
                "kind": "gaussian_mode",
                "amplitude": 0.5,
                "harmonic": 1,
                "poly": {"constant": 1.0},
                "width": 1.5,
            }
        ],
        "e_y": [{"kind": "mode", "amplitude": 0.25, "harmonic": 0, "poly": {"constant": 1.0}}],
        "b_z": [],
    },
}


def default_config_dict(preset: str, resolution: Resolution | None = None) -> dict[str, Any]:
    """Return the shipped configuration of a preset as a TOML-ready dictionary.

    Args:
        preset: Preset name (beam, gc4d or flr4d)
        resolution: Optional resolution override (defaults to the run resolution)

    Returns:
        Configuration dictionary using the file's key names

    Raises:
        KeyError: If the preset is unknown
    """
    dims = PRESET_DIMS[preset]
    res = resolution or RUN_RESOLUTION[preset]
    half = _BOX_HALF_WIDTH[preset]
    return {
        "problem": {
            "preset": preset,
            "lower": [-half] * dims,
            "upper": [half] * dims,
            "points": [res.points] * dims,
            "T": 1.0,
        },
        "fields": copy.deepcopy(_PRESET_FIELDS[preset]),
        "expansion": {
            "K": 1,
            "tau_points": res.tau_points,
            "checkpoints": res.checkpoints,
        },
        "reference": {"n_fast": DEFAULT_N_FAST},
        "sweep": {"eps": list(DEFAULT_EPS), "norm": "2"},
        "output": {"directory": DEFAULT_OUTPUT_DIRECTORY},
    }


def default_run_config(preset: str, resolution: Resolution | None = None) -> "RunConfig":
    """Return the validated shipped configuration of a preset.

    Args:
        preset: Preset name (beam, gc4d or flr4d)
        resolution: Optional resolution override

    Returns:
        Validated run configuration
    """
    from src.config.models import RunConfig

    return RunConfig.model_validate(default_config_dict(preset, resolution))
