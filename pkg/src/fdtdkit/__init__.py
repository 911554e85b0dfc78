"""Yee-grid FDTD solver with deterministic execution backends and benchmarks."""

from .backends import (
    Backend,
    BackendResourceError,
    InsufficientSamplesError,
    KernelPlan,
    StencilExecutor,
    backend_report,
    execute_stencil,
)
from .bench import (
    compute_bandwidth,
    compute_speedup,
    flop_count,
    measure_copy_bandwidth,
    run_fdtd_bench,
    run_linsolve_bench,
)
from .engine import (
    SnapshotSeries,
    UpdateCoefficients,
    field_energy,
    inject_source,
    run,
    step_1d,
    step_3d,
    update_e_1d,
    update_e_3d,
    update_h_1d,
    update_h_3d,
)
from .linalg import (
    LuFactorization,
    SingularMatrixError,
    lu_factor,
    lu_solve,
    relative_residual,
    residual_bound,
    solve,
)
from .model import (
    FieldState1D,
    FieldState3D,
    MaterialGrid,
    Precision,
    SimulationConfig,
    SourceSpec,
    UnstableCourantError,
    central_difference,
    courant_bound,
    make_vacuum_materials,
    validate_stability,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BackendResourceError",
    "FieldState1D",
    "FieldState3D",
    "InsufficientSamplesError",
    "KernelPlan",
    "LuFactorization",
    "MaterialGrid",
    "Precision",
    "SimulationConfig",
    "SingularMatrixError",
    "SnapshotSeries",
    "SourceSpec",
    "StencilExecutor",
    "UnstableCourantError",
    "UpdateCoefficients",
    "backend_report",
    "central_difference",
    "compute_bandwidth",
    "compute_speedup",
    "courant_bound",
    "execute_stencil",
    "field_energy",
    "flop_count",
    "inject_source",
    "lu_factor",
    "lu_solve",
    "make_vacuum_materials",
    "measure_copy_bandwidth",
    "relative_residual",
    "residual_bound",
    "run",
    "run_fdtd_bench",
    "run_linsolve_bench",
    "solve",
    "step_1d",
    "step_3d",
    "update_e_1d",
    "update_e_3d",
    "update_h_1d",
    "update_h_3d",
    "validate_stability",
]
