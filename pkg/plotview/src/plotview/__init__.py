"""Offline renderer for solver trajectory/flow CSV files."""

from .render import (
    FLOW_COLUMNS,
    PROBLEMS,
    TRAJECTORY_COLUMNS,
    SchemaError,
    Trajectory,
    cost,
    load_trajectory,
    paraboloid_mesh,
    render,
    sphere_mesh,
)

__version__ = "0.1.0"

__all__ = [
    "FLOW_COLUMNS",
    "PROBLEMS",
    "SchemaError",
    "TRAJECTORY_COLUMNS",
    "Trajectory",
    "cost",
    "load_trajectory",
    "paraboloid_mesh",
    "render",
    "sphere_mesh",
    "__version__",
]
