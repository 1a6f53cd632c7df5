"""Topological correlation and anyonic charge entanglement of bipartite anyonic states."""

from .anyon_model import (
    AnyonModel,
    Charge,
    ModelError,
    ValidationReport,
    builtin,
    f_symbol,
    fibonacci,
    fusion_multiplicity,
    ising,
    load_model,
    quantum_dimensions,
    total_quantum_dimension,
    verify_pentagon,
    zn,
)
from .anyonic_state import (
    AnyonicDensityOperator,
    FactorizedOperator,
    InvalidStateError,
    anyonic_entropy,
    embed,
    is_maximal_rank,
    load_state,
    maximally_mixed,
    mix,
    quantum_trace,
    random_state,
    save_state,
    sever,
)
from .fusion_space import BipartiteBasis, FusionTree, SectorBasis, bipartite_basis, enumerate_trees, sector_dimensions
from .inference import (
    MaxEntSolver,
    ace,
    binary_entropy,
    fib4_topo,
    fib_pure_topo,
    inferred_state_closed_form,
    inferred_state_numeric,
    topo_correlation_via_limit,
    topological_correlation,
)
from .measurement import MeasurementRecord, ObservableBasis, build_observable_basis, measure_all, verify_algebra

__version__ = "0.1.0"
