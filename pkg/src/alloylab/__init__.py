"""Finite-volume laboratory for multi-particle continuum Anderson models
with alloy-type disorder: cube geometry and separability, random fields,
Dirichlet Hamiltonians, Green-block singularity classification, window
spectral analysis, and dynamical-localization diagnostics."""

__version__ = "0.1.0"

from .geometry import (
    MultiCube,
    PartitionIndex,
    ScaleSequence,
    annulus_index,
    are_separable,
    covering_family,
    cube_regions,
    is_J_separable,
    scale_sequence,
    separability_witness,
)
from .disorder import (
    AlloyField,
    BumpFunction,
    InteractionSpec,
    LatticeBox,
    ModelConfig,
    interaction_energy,
    sample_field,
    single_potential,
    total_potential,
    validate_assumptions,
)
from .hamiltonian import (
    FiniteVolumeOperator,
    Grid,
    assemble,
    cell_indices,
    dump_matrix,
    restrict_to_cells,
)
from .resolvent import (
    CubeVerdict,
    GreenBlock,
    GreenSolver,
    PairSurveyRow,
    ResonantEnergyError,
    classify_cube,
    green_block_norm,
    pair_survey,
    wilson_interval,
)
from .spectral import (
    DecayFit,
    EigenPair,
    center_count,
    count_in_window,
    decay_fit,
    edi_check,
    eigenpairs_in_window,
    localization_centers,
    mass_concentration,
)
from .dynamics import (
    AnnularReport,
    CorrelatorReport,
    MomentObservable,
    annular_decomposition,
    correlator_bound,
    evolve,
    moment_at,
    phase_function,
    spectral_coefficients,
)
from .lab import ExperimentConfig, RunManifest, load_config, report, run, sample_seed
