"""Python access to the ostk C++ core.

Array functions take numpy rows: (n, 2) pixels or (n, 3) world points.
Scenes and benchmark results come back as plain dicts.
"""

import json
import os

from . import _core
from ._core import (
    OstkError,
    __version__,
    check_reported_sum,
    compose_camera_matrix,
    constant_velocity_predict,
    estimate_camera_matrix,
    kalman_denoise,
    mse_t,
    project_points,
)

__all__ = [
    "OstkError",
    "__version__",
    "check_reported_sum",
    "compose_camera_matrix",
    "constant_velocity_predict",
    "estimate_camera_matrix",
    "kalman_denoise",
    "mse_t",
    "project_points",
    "run_benchmark",
    "simulate_scene",
]


def simulate_scene(seed=0, config=None):
    """Synthetic scene as the scene-file dict. `config` overrides simulator defaults."""
    return json.loads(_core.simulate_scene_json(json.dumps(config or {}), int(seed)))


def run_benchmark(config, jobs=1):
    """Runs an experiment config (dict or path to a JSON file).

    Returns {"fingerprint", "reports", "per_scene", "failures"}.
    """
    base_dir = ""
    if isinstance(config, (str, os.PathLike)):
        path = os.fspath(config)
        with open(path, encoding="utf-8") as f:
            config = json.load(f)
        base_dir = os.path.dirname(os.path.abspath(path))
    return json.loads(_core.run_benchmark_json(json.dumps(config), base_dir, int(jobs)))
