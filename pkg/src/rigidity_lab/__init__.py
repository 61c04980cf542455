"""Numerical laboratory for determinantal point processes on the unit disc
with sub-Bergman projection kernels."""

from .hyperbolic import (
    Cutoff,
    c2_constant,
    eval_cutoff,
    full_lemma_check,
    lemma_bounds,
    lemma_integral_I,
    lemma_integral_II,
    lemma_integral_III,
    lemma_integral_IV,
    mobius,
    poincare,
)
from .indexset import (
    DomainError,
    IndexSet,
    bloch_norm_estimate,
    decompose_lacunary,
    dyadic_block_counts,
    gap_ratio,
    merge_pieces,
    verify_decomposition,
)
from .kernel import (
    KernelSpec,
    angular_avg_sq,
    eval_kernel,
    expected_count_in_disc,
    intensity,
    w_via_derivatives,
)
from .quadrature import QuadResult, QuadSettings
from .random_subset import (
    BernoulliDraw,
    block_counts,
    empirical_block_law,
    non_lacunarity_witness,
    sample_lambda,
)
from .rng import RngState
from .sampler import Configuration, mc_count_stats, mc_linear_stat, sample_dpp
from .variance import (
    RadialStatistic,
    bernoulli_expected_variance,
    bloch_bound_integral,
    cutoff_statistic,
    indicator_statistic,
    rigidity_sweep,
    variance_radial,
)

__version__ = "0.1.0"
