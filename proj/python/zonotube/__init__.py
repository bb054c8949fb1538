"""Zonotopic tube LPV-MPC for a scheduled bicycle model."""

from importlib import resources

from ._zonotube import (
    GainSchedule,
    Zonotope,
    benchmark_tube,
    disturbance_bounds,
    erode_box,
    linear_image,
    lpv_derivatives,
    lpv_matrices,
    minkowski_sum,
    reduce_generators,
    simulate,
    terminal_set,
)

__all__ = [
    "GainSchedule",
    "Zonotope",
    "benchmark_tube",
    "disturbance_bounds",
    "erode_box",
    "linear_image",
    "lpv_derivatives",
    "lpv_matrices",
    "minkowski_sum",
    "reduce_generators",
    "reference_gains_path",
    "simulate",
    "terminal_set",
]


def reference_gains_path() -> str:
    """Path of the reference gain schedule shipped with the package."""
    return str(resources.files(__name__) / "data" / "reference_gains.json")
