"""Spherical harmonic expansion from uniform samples by kernel least squares."""

from .errors import (
    DomainError,
    FileAccessError,
    FormatError,
    InputDataError,
    InvalidParameterError,
    NumericalError,
    SphexError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    NoisyRecoveryReport,
    emit_csv,
    parse_csv,
    read_csv,
    results_to_csv,
    run_cells,
    run_noisy_recovery,
    run_phase_transition,
)
from .harmonics import (
    GegenbauerPoly,
    ProblemParams,
    ZonalSeries,
    cumulative_dim,
    gegenbauer_build,
    gegenbauer_eval,
    gegenbauer_table,
    harmonic_dim,
    sphere_area,
    zonal_series,
)
from .modelio import deserialize_model, load_model, save_model, serialize_model
from .regression import (
    ExpansionModel,
    GramMatrix,
    build_gram,
    evaluate,
    fit,
    fit_samples,
    kernel_value,
    pinv_solve,
    sample_count,
)
from .sampling import SampleSet, SphereRNG, derive_trial_seed, sample_uniform_sphere
from .validation import (
    CheckReport,
    ZonalFunction,
    make_bandlimited,
    mc_inner_product,
    quad_orthogonality,
    run_suite,
    zonal_harmonic,
)

__version__ = "0.1.0"
