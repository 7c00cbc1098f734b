"""Tracking leading eigenpairs of evolving graphs."""
from .graph import (
    DynamicGraphStream,
    GraphUpdate,
    SpectrumShiftWarning,
    SymSparseMatrix,
    apply_update,
    assemble_update,
    degrees,
    matvec,
    pad,
    split_difference,
    to_shifted_laplacian,
)
from .linalg import (
    EigResult,
    LanczosConvergenceError,
    SpectralEmbedding,
    lanczos_topk,
    orthonormalize,
    rsvd_basis,
    solve_linear_small,
    sym_eig_dense,
)
from .trackers import (
    METHODS,
    TrackerConfig,
    TrackerState,
    build_projection_basis,
    iasc_step,
    grest_step,
    laplacian_tracking_adapter,
    rayleigh_ritz_step,
    residual_modes_step,
    run_tracker,
    shifted_laplacian_stream,
    step,
    timers_step,
    tracker_init,
    trip_basic_step,
    trip_step,
)
from .dynamics import (
    SbmConfig,
    TimestampedEdgeList,
    sample_sbm,
    sbm_dynamic_stream,
    scenario1_stream,
    scenario2_stream,
)
from .metrics import (
    adjusted_rand_index,
    angle_summaries,
    eigenvector_angles,
    exp_apply_scaled,
    kmeans_cluster,
    matrix_function_apply,
    principal_angle,
    subgraph_centrality_topj,
    subspace_distance,
    top_j_overlap,
)
from .io import ingest_edge_list
from .experiment import ExperimentConfig, emit_summary, run_experiment

__version__ = "0.1.0"
