"""denoiserlab: analytic denoiser families inside a DDIM sampler, with
statistical verification of the distribution each architecture generates."""

__version__ = "0.1.0"

from .datasets import (
    Dataset,
    GmmSpec,
    MomentTable,
    default_3gmm_spec,
    gmm_cov,
    gmm_mean,
    load_dataset,
    matched_moment_pair,
    matched_moment_specs,
    moments,
    sample_gmm,
    sample_tile_images,
    save_dataset,
    shuffle_tiles,
)
from .denoisers import (
    Denoiser,
    ExactGmmDenoiser,
    LinearDenoiser,
    MlpBottleneckDenoiser,
    PatchwiseDenoiser,
    PolynomialDenoiser,
    exact_gaussian_denoiser,
    fit_linear,
    fit_mlp,
    fit_patchwise,
    fit_polynomial_exact,
    fit_polynomial_rf,
    fit_rank_k_linear,
    jacobian_rank,
    load_denoiser,
    save_denoiser,
)
from .errors import NumericalError, SamplingError, TrainingError, ValidationError
from .linalg import EigenDecomposition, eig_sym, rank_k_approx
from .pipeline import FittedModel, GenerationResult, fit_model, generate, sample_model
from .sampler import (
    NoiseSchedule,
    SamplerRun,
    Standardizer,
    cosine_schedule,
    ddim_sample,
    score_from_denoiser,
)
from .stats import (
    MemorizationReport,
    PermutationTest,
    data_scale,
    empirical_cov,
    empirical_mean,
    energy_distance,
    energy_permutation_test,
    intrinsic_dim,
    local_intrinsic_dim,
    nn_memorization,
)
from .verification import (
    THRESHOLDS,
    Thresholds,
    VerificationReport,
    check_linear_gaussian,
    check_linear_matched_pair,
    check_log_polynomial_family,
    check_manifold,
    check_memorization_tradeoff,
    check_moment_dependence,
    check_rank_k,
    negative_controls,
)
