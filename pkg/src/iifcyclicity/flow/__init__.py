"""Numerical flow: trajectories, transition maps and orbit integrals."""
from ._backend import BACKEND, COMPILED, available_kernels, get_kernel
from .integrate import (
    Beta1,
    CycleData,
    DivergentIntegralError,
    EventHit,
    FlowSettings,
    MapSample,
    Section,
    Trajectory,
    characteristic_exponent,
    cycle_data,
    finite_difference_derivative,
    integrate,
    return_map,
    saddle_eigen,
    separatrix_quantity_beta1,
    trace_homoclinic,
    transition_map,
    write_map_csv,
)

__all__ = [
    "BACKEND",
    "COMPILED",
    "Beta1",
    "CycleData",
    "DivergentIntegralError",
    "EventHit",
    "FlowSettings",
    "MapSample",
    "Section",
    "Trajectory",
    "available_kernels",
    "characteristic_exponent",
    "cycle_data",
    "finite_difference_derivative",
    "get_kernel",
    "integrate",
    "return_map",
    "saddle_eigen",
    "separatrix_quantity_beta1",
    "trace_homoclinic",
    "transition_map",
    "write_map_csv",
]
