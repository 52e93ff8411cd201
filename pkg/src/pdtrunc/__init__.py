"""pdtrunc: effects of truncating separable matrix priors onto the PD cone.

The library estimates the truncation constant c = P(draw is positive
definite) by reproducible Monte Carlo, evaluates analytic bounds on c and
on the distances between truncated and untruncated priors, classifies
large-dimension regimes, and calibrates prior scales to a target c.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundResult,
    DistanceBounds,
    LimitClassification,
    bernstein_lower,
    classify_limit,
    dense_sandwich,
    marginal_distance_bounds,
    sparse_marginal_bounds,
    truncation_distances,
)
from .calibrate import CalibrationReport, sigma_from_bound, sigma_from_mc, wigner_threshold
from .errors import (
    BudgetExceeded,
    ConfigError,
    DegenerateNormalizer,
    DomainError,
    NonConvergence,
    PdtruncError,
    Unachievable,
    UnknownPreset,
)
from .estimators import (
    Estimate,
    MarginalDistortion,
    estimate_c,
    estimate_c_cond,
    estimate_c_given_z,
    estimate_marginal_kl,
    estimate_marginal_tv,
    estimate_mean_min_eig,
    min_eig_samples,
    structure_ratio,
    wilson_interval,
)
from .model import (
    BernoulliSparsity,
    Dense,
    DiagonalLaw,
    ExponentialDiagonal,
    FixedDiagonal,
    FixedPattern,
    GammaDiagonal,
    GaussianSlab,
    LaplaceSlab,
    PriorSpec,
    SlabLaw,
    SparsityLaw,
    StructureMatrix,
    StudentTSlab,
    SymMatrix,
    TruncatedGaussianSlab,
    coupled_scale,
    is_pd,
    max_degree,
    min_eig,
    sample_matrix,
    sample_structure,
)
from .numerics import (
    QuadratureSpec,
    integrate_positive_halfline,
    normal_cdf,
    normal_quantile,
)
from .rng import RngStream
from .schedules import Const, Power, Schedule
