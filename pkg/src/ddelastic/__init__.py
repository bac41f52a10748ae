"""Data-driven elasticity for bars and planar trusses.

The solvers minimize the weighted distance between mechanically admissible
strain/stress fields and a finite material dataset, for linear or
geometrically nonlinear (Green-Lagrange type) strain measures.
"""

from .assembly import (
    KktSystem,
    SolverConfig,
    State,
    assemble_kkt,
    element_objective,
    element_objectives,
    global_objective,
    kkt_residual,
    strain,
)
from .dataset import (
    ConsistencyReport,
    DataPoint,
    Dataset,
    DatasetError,
    add_noise,
    check_consistency,
    generate_linear,
    generate_sigmoid,
    load_csv,
    make_unsymmetric,
    repair_noisy,
    split_subsets,
)
from .oracle import OracleResult, enumerate_global
from .solvers import (
    RunRecord,
    SolverError,
    adm_solve,
    go_adm_solve,
    initialize_data,
    local_state_assignment,
    newton_solve,
    solve_structure,
)
from .structure import (
    BenchmarkSpec,
    Structure,
    build_bar,
    build_truss,
    load_structure,
    manufactured_bar_load,
    simplified_truss,
)

__version__ = "0.1.0"

__all__ = [
    "KktSystem", "SolverConfig", "State", "assemble_kkt", "element_objective",
    "element_objectives", "global_objective", "kkt_residual", "strain",
    "ConsistencyReport", "DataPoint", "Dataset", "DatasetError", "add_noise",
    "check_consistency", "generate_linear", "generate_sigmoid", "load_csv",
    "make_unsymmetric", "repair_noisy", "split_subsets",
    "OracleResult", "enumerate_global",
    "RunRecord", "SolverError", "adm_solve", "go_adm_solve", "initialize_data",
    "local_state_assignment", "newton_solve", "solve_structure",
    "BenchmarkSpec", "Structure", "build_bar", "build_truss", "load_structure",
    "manufactured_bar_load", "simplified_truss",
]
