"""Exact solver for random standard quadratic programs via defect-graph
decomposition, with a statistics engine for the exactness probabilities."""

from .defect import (
    DefectDecomposition,
    MatrixFormatError,
    build_defect_graph,
    diag_min,
    read_matrix,
    shifted_entry,
    shifted_matrix,
    validate_matrix,
    write_matrix,
)
from .ensembles import (
    EndpointPower,
    Ensemble,
    GOE,
    GaussianWigner,
    HeavyTail,
    ShiftedExponential,
    sample_entries,
    sample_matrix,
)
from .kkt import (
    CapacityError,
    DEFAULT_TOLERANCES,
    LocalSolution,
    RejectionReason,
    SINGULAR,
    SupportCandidate,
    Tolerances,
    dyadic_matrix,
    is_admissible,
    kkt_solve,
    local_stqp,
    tangent_basis,
)
from .oracle import brute_force_stqp, grid_refine_check
from .solver import (
    BlockMassReport,
    EmbeddingCheckError,
    ProbeResult,
    RankOneEmbedding,
    Solution,
    block_masses,
    embed_rank_one,
    lower_bound_probe,
    solve,
)
from .stats import (
    MomentReport,
    QuadratureError,
    SimulationSummary,
    TailReport,
    TrialRecord,
    exp_moment_closed_form,
    five_tree_bound,
    moment_closed_form,
    moment_mc,
    moment_quadrature,
    sample_diag_min,
    simulate,
    tail_condition_report,
)

__version__ = "0.1.0"
