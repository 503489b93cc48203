"""The denoiser zoo: every family exposes denoise(y, sigma) -> clean estimate."""

from .base import Denoiser, finite_difference_jacobian, jacobian_rank
from .linear import (
    ExactGmmDenoiser,
    LinearDenoiser,
    exact_gaussian_denoiser,
    fit_linear,
    fit_rank_k_linear,
)
from .mlp import MlpBottleneckDenoiser, fit_mlp
from .patch import (
    PatchGrid,
    PatchSizeMap,
    PatchwiseDenoiser,
    default_patch_size_map,
    fit_patchwise,
    image_side,
)
from .polynomial import (
    PolynomialDenoiser,
    feature_moments_from_table,
    fit_polynomial_exact,
    fit_polynomial_rf,
    log_spaced_sigma_grid,
    monomial_exponents,
    polynomial_fit_from_moments,
    sample_feature_moments,
)
from .serialize import denoiser_from_dict, denoiser_to_dict, load_denoiser, save_denoiser

__all__ = [
    "Denoiser",
    "ExactGmmDenoiser",
    "LinearDenoiser",
    "MlpBottleneckDenoiser",
    "PatchGrid",
    "PatchSizeMap",
    "PatchwiseDenoiser",
    "PolynomialDenoiser",
    "default_patch_size_map",
    "denoiser_from_dict",
    "denoiser_to_dict",
    "exact_gaussian_denoiser",
    "feature_moments_from_table",
    "finite_difference_jacobian",
    "fit_linear",
    "fit_mlp",
    "fit_patchwise",
    "fit_polynomial_exact",
    "fit_polynomial_rf",
    "fit_rank_k_linear",
    "image_side",
    "jacobian_rank",
    "load_denoiser",
    "log_spaced_sigma_grid",
    "monomial_exponents",
    "polynomial_fit_from_moments",
    "sample_feature_moments",
    "save_denoiser",
]
