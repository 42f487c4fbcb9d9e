"""Inhomogeneous random digraphs: exact generation, limit theory, verification."""

__version__ = "0.1.0"

from .digraph import (
    Digraph,
    DegreeTable,
    arcs_per_vertex,
    fraction_both_components_ge_k,
    joint_degree_table,
    largest_scc,
    read_edge_list,
    write_edge_list,
)
from .generate import GenConfig, generate, expected_arc_count
from .kernels import (
    ConstantKernel,
    CoordPower,
    FinitaryKernel,
    ModelSpec,
    ModelValidityError,
    Rank1Kernel,
    WeightPerturbation,
    ZeroPerturbation,
    arc_probability,
    block_model,
    erdos_renyi,
    finitary_approximation,
    is_irreducible,
    kernel_eval,
    quasi_irreducible_restriction,
    weight_model,
)
from .theory import (
    BlockBranchingProcess,
    SurvivalSolution,
    build_bp,
    mixed_poisson_pmf,
    rank1_threshold,
    spectral_radius,
    survival_ge_k,
    survival_probabilities,
)
from .typespace import (
    ConfigurationError,
    DiscreteMeasure,
    Exponential,
    Pareto,
    ProductMeasure,
    TwoPoint,
    TypeSample,
    Uniform,
    empirical_cell_weights,
    partition_for,
    sample_types,
    theoretical_cell_weights,
)
from .experiments import (
    SweepSpec,
    SweepResult,
    compare_N_geq_k,
    degree_gof,
    hill_tail_index,
    run_sweep,
)
