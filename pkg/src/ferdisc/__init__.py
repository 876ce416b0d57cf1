"""Discrimination of pure bipartite Fermionic states under LOCC."""

from .decomp import (
    SectorSplit,
    WalgateDecomposition,
    sector_overlaps,
    sector_split,
    to_even_sector,
    walgate_decompose,
    zero_diagonal_basis,
)
from .discrim import (
    MAX_ANCILLA,
    CriticalPrior,
    DeltaOperator,
    DiscriminabilityVerdict,
    DiscriminationInstance,
    OptimalityReport,
    attach_ancilla,
    classify_perfect,
    critical_prior,
    delta,
    helstrom_error,
    is_locc_optimal,
    locc_error,
    optimality_report,
    sector_compression,
    trace_norm,
)
from .errors import ConvergenceError, FerdiscError, ProtocolError, SuperselectionError, ValidationError
from .fock import (
    FockVector,
    ModePartition,
    SectorProjectors,
    jw_mode_operator,
    make_state,
    sector_projectors,
)
from .oracle import SepEffectSample, best_sep_value, random_sep_sample, unconstrained_best_value
from .protocol import (
    LoccProtocol,
    SimulationReport,
    build_optimal_locc_protocol,
    build_perfect_protocol,
    simulate,
)
from .sweep import (
    PerturbationPoint,
    appendix_states,
    bound_constants,
    delta_perr,
    delta_perr_prime,
    fig1_grid,
    perturbed_delta,
)

__version__ = "0.1.0"
