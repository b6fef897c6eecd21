"""Floquet dynamical quantum phase transitions in a flux-quenched XY chain."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ChainParams,
    DegenerateModeError,
    InvalidParameterError,
    MomentumGrid,
    ModeGeometry,
    dense_grid,
    mode_geometry,
    momentum_grid,
)
from .floquet import EffectiveMode, Modes, Overlaps, floquet_modes  # noqa: E402
from .dynamics import (  # noqa: E402
    DomainError,
    RateSeries,
    TimeGrid,
    echo_map,
    loschmidt_amplitude,
    rate_function,
    time_grid,
)
from .criticality import (  # noqa: E402
    CriticalMode,
    anticommutator_norm,
    critical_times,
    echo_minimum,
    fidelity_profile,
    find_fdqpts,
)
from .topology import DtopSeries, PhaseSeries, dtop, phase_series  # noqa: E402
from .bloch import BlochTrajectory, antiparallel_events, trajectory  # noqa: E402

__all__ = [
    "BlochTrajectory", "ChainParams", "CriticalMode", "DegenerateModeError", "DomainError",
    "DtopSeries", "EffectiveMode", "InvalidParameterError", "ModeGeometry", "Modes",
    "MomentumGrid", "Overlaps", "PhaseSeries", "RateSeries", "TimeGrid",
    "anticommutator_norm", "antiparallel_events", "critical_times", "dense_grid", "dtop",
    "echo_map", "echo_minimum", "fidelity_profile", "find_fdqpts", "floquet_modes",
    "loschmidt_amplitude", "mode_geometry", "momentum_grid", "phase_series", "rate_function",
    "time_grid", "trajectory",
]
