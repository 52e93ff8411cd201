"""Closed-form and quadrature bounds on truncation constants and distances.

All functions are pure and thread-safe.  Bounds that involve a base raised
to the pair count m = O(k^2) are evaluated in log space: at k = 200 the
exponent is ~2e4 and the direct power underflows double precision for any
base below ~0.9983.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError
from .model import (
    DiagonalLaw,
    ExponentialDiagonal,
    FixedDiagonal,
    GammaDiagonal,
    GaussianSlab,
    SlabLaw,
)
from .numerics import QuadratureSpec, integrate_positive_halfline
from .schedules import Const, Power, Schedule


@dataclass(frozen=True)
class BoundResult:
    """Analytic lower/upper bound pair for a truncation constant.

    ``valid`` is False when a bound's hypothesis fails (the numbers are then
    placeholders).  Lower bounds that go negative before clamping are
    clamped to 0 with a note: the bound is vacuous, not invalid.
    """

    lower: float
    upper: float
    method: str
    valid: bool = True
    notes: str = ""

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "method": self.method,
            "valid": self.valid,
            "notes": self.notes,
        }


@dataclass(frozen=True)
class DistanceBounds:
    """Bounds on distances between the truncated and untruncated priors.

    Joint fields are exact identities in the truncation constant; marginal
    fields are upper bounds.  Fields that a mode does not produce are None
    and omitted from JSON.
    """

    tv_joint: Optional[float] = None
    kl_joint: Optional[float] = None
    tv_mean_marginal: Optional[float] = None
    kl_mean_marginal: Optional[float] = None
    tv_diag_marginal: Optional[float] = None
    kl_diag_marginal: Optional[float] = None
    tv_offdiag_marginal: Optional[float] = None
    kl_offdiag_marginal: Optional[float] = None

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def _check_c(c: float) -> None:
    if not 0.0 < c <= 1.0:
        raise DomainError(f"truncation constant must be in (0,1], got {c}")


def truncation_distances(c: float) -> DistanceBounds:
    """Exact joint distances induced by truncating onto the cone.

    Total variation is 1 - c and Kullback-Leibler is -log c; the truncated
    prior attains both minima among all distributions supported on the
    positive-definite cone.
    """
    _check_c(c)
    return DistanceBounds(tv_joint=1.0 - c, kl_joint=-math.log(c))


def marginal_distance_bounds(c: float, k: int, iid: bool) -> DistanceBounds:
    """Bounds on marginal (per-entry) distances from the truncation constant.

    Without identical entries only the mean marginal distance is controlled:
    the summed marginal KL is at most the joint KL = -log c, so the mean over
    the k(k+1)/2 entries is at most -2 log c / (k(k+1)), and the TV bound is
    the better of Pinsker and Bretagnolle-Huber applied to that budget.

    With identically distributed entries the KL budget splits between the k
    diagonal and k(k-1)/2 off-diagonal marginals, giving per-marginal bounds
    instead of a mean.  The first TV term is sharper when c is near 1, the
    second when c is near 0.
    """
    _check_c(c)
    if k < 2:
        raise DomainError("k must be >= 2")
    logc = math.log(c)
    if not iid:
        pairs = k * (k + 1)
        kl = -2.0 * logc / pairs
        tv = min(math.sqrt(-logc / pairs), math.sqrt(1.0 - c ** (2.0 / pairs)))
        return DistanceBounds(tv_mean_marginal=tv, kl_mean_marginal=kl)
    offd = k * (k - 1)
    kl_diag = -logc / k
    kl_off = -2.0 * logc / offd
    tv_diag = min(math.sqrt(-logc / (2.0 * k)), math.sqrt(1.0 - c ** (1.0 / k)))
    tv_off = min(math.sqrt(-logc / offd), math.sqrt(1.0 - c ** (2.0 / offd)))
    return DistanceBounds(
        tv_diag_marginal=tv_diag,
        kl_diag_marginal=kl_diag,
        tv_offdiag_marginal=tv_off,
        kl_offdiag_marginal=kl_off,
    )


# ---------------------------------------------------------------------------
# Sandwich bounds from diagonal dominance / the pairwise necessary condition
# ---------------------------------------------------------------------------


def dense_sandwich(
    diag: DiagonalLaw,
    sigma: float,
    k: int,
    m: Optional[int] = None,
    quad: QuadratureSpec = QuadratureSpec(),
    slab: Optional[SlabLaw] = None,
) -> BoundResult:
    """Sandwich the truncation constant between two product bounds.

    Lower bound: diagonal dominance holds whenever every active off-diagonal
    is below theta_min/(k-1) in magnitude, so c >= E[P(|entry| <
    theta_min/(k-1))^m] over the law of the smallest diagonal.  Upper bound:
    |entry| < theta_max is necessary entrywise, so c <= E[P(|entry| <
    theta_max)^m] over the largest diagonal.  ``m`` is the number of active
    off-diagonal pairs (defaults to the dense count k(k-1)/2; pass the edge
    count of a fixed pattern for its conditional constant).

    The bounds are stated for Gaussian entries; for another slab law the
    same union argument goes through with that law's own central
    probability, which is recorded in ``notes``.

    Fixed diagonals give closed forms; stochastic diagonals integrate the
    order-statistic densities k*f*(1-F)^(k-1) and k*f*F^(k-1) by quadrature.
    """
    if k < 2:
        raise DomainError("k must be >= 2")
    n_pairs = k * (k - 1) // 2
    if m is None:
        m = n_pairs
    if not 0 <= m <= n_pairs:
        raise DomainError(f"m must be in [0, {n_pairs}]")
    if not sigma > 0.0 and slab is None:
        raise DomainError("sigma must be > 0")

    notes = ""
    if slab is None:
        slab = GaussianSlab(sigma)
    elif not isinstance(slab, GaussianSlab):
        notes = "non-Gaussian slab: product bounds use the slab's own central probability"

    def log_base(radius: float) -> float:
        return slab.log_central_prob(radius)

    shrink = 1.0 / (k - 1)

    if isinstance(diag, FixedDiagonal):
        lower = math.exp(m * log_base(diag.mu * shrink))
        upper = math.exp(m * log_base(diag.mu))
        return BoundResult(lower, upper, "sandwich:fixed", True, notes)

    log_k = math.log(k)

    if isinstance(diag, ExponentialDiagonal):
        tag = "sandwich:exponential"
    elif isinstance(diag, GammaDiagonal):
        tag = "sandwich:gamma"
    else:
        raise DomainError(f"unsupported diagonal law {diag!r}")

    def f_min(x: float) -> float:
        pdf = diag.pdf(x)
        if pdf <= 0.0:
            return 0.0
        tail = 1.0 - diag.cdf(x)
        if tail <= 0.0:
            return 0.0
        expo = log_k + math.log(pdf) + (k - 1) * math.log(tail) + m * log_base(x * shrink)
        return math.exp(expo)

    def f_max(x: float) -> float:
        pdf = diag.pdf(x)
        if pdf <= 0.0:
            return 0.0
        head = diag.cdf(x)
        if head <= 0.0:
            return 0.0
        expo = log_k + math.log(pdf) + (k - 1) * math.log(head) + m * log_base(x)
        return math.exp(expo)

    # Transform scales track where the order statistics live: the smallest
    # of k draws concentrates near the 1/(k+1) quantile, the largest near
    # the k/(k+1) quantile (for exponentials these are ~1/(k*rate) and
    # ~log(k)/rate respectively).
    lower = integrate_positive_halfline(
        f_min, quad, scale=diag.quantile(1.0 / (k + 1.0))
    )
    upper = integrate_positive_halfline(
        f_max, quad, scale=diag.quantile(k / (k + 1.0))
    )
    lower = min(max(lower, 0.0), 1.0)
    upper = min(max(upper, 0.0), 1.0)
    return BoundResult(lower, upper, tag, True, notes)


# ---------------------------------------------------------------------------
# One-sided concentration lower bounds (matrix Gaussian series / Bernstein)
# ---------------------------------------------------------------------------

BERNSTEIN_GAUSS_FIXED = "gauss-fixed"
BERNSTEIN_BOUNDED_FIXED = "bounded-fixed"
BERNSTEIN_GAUSS_EXPDIAG = "gauss-expdiag"


def bernstein_lower(
    kind: str,
    mu: float,
    sigma: float,
    d: int,
    k: int,
    a: Optional[float] = None,
    t: Optional[float] = None,
) -> BoundResult:
    """One-sided lower bounds on c_z from spectral-norm concentration.

    The off-diagonal part is a random matrix series whose variance statistic
    is sigma^2 * d for maximum degree d, so its spectral norm exceeds the
    (fixed or minimum) diagonal level only with exponentially small
    probability:

    - "gauss-fixed":   fixed diagonal mu, Gaussian entries:
                       c_z >= 1 - 2k exp(-mu^2 / (2 sigma^2 d)).
    - "bounded-fixed": fixed diagonal mu, entries bounded by ``a``:
                       c_z >= 1 - 2k exp(-mu^2 / (2 (sigma^2 d + a mu / 3))).
    - "gauss-expdiag": exponential diagonals with mean mu, Gaussian entries.
                       With a free threshold t > 0 splitting the failure
                       modes (small minimum diagonal vs large norm):
                       c_z >= exp(-k t / mu) - 2k exp(-t^2 / (2 sigma^2 d)).
                       With t omitted the threshold is optimised in closed
                       form, valid whenever sigma * sqrt(d) / mu <= 2*sqrt(2):
                       c_z >= 1 - sqrt(2) k sigma sqrt(d) / mu *
                              [sqrt(ln(2 sqrt(2) mu / (sigma sqrt(d)))) + 1].

    The upper bound is always the trivial 1.  Negative lower bounds clamp
    to 0 with a note.
    """
    if not mu > 0.0:
        raise DomainError("mu must be > 0")
    if sigma < 0.0:
        raise DomainError("sigma must be >= 0")
    if d < 1:
        raise DomainError("d must be >= 1")
    if k < 2:
        raise DomainError("k must be >= 2")

    method = f"bernstein:{kind}"
    if kind == BERNSTEIN_GAUSS_FIXED:
        raw = 1.0 - 2.0 * k * _exp_neg(mu * mu, 2.0 * sigma * sigma * d)
    elif kind == BERNSTEIN_BOUNDED_FIXED:
        if a is None or not a > 0.0:
            raise DomainError("bounded-fixed needs the entry bound a > 0")
        raw = 1.0 - 2.0 * k * _exp_neg(mu * mu, 2.0 * (sigma * sigma * d + a * mu / 3.0))
    elif kind == BERNSTEIN_GAUSS_EXPDIAG:
        if t is not None:
            if not t > 0.0:
                raise DomainError("threshold t must be > 0")
            raw = math.exp(-k * t / mu) - 2.0 * k * _exp_neg(t * t, 2.0 * sigma * sigma * d)
            method += ":free-t"
        else:
            method += ":optimised-t"
            if sigma == 0.0:
                raw = 1.0
            else:
                ratio = sigma * math.sqrt(d) / mu
                if ratio > 2.0 * math.sqrt(2.0):
                    return BoundResult(
                        0.0,
                        1.0,
                        method,
                        valid=False,
                        notes="hypothesis sigma*sqrt(d)/mu <= 2*sqrt(2) fails",
                    )
                raw = 1.0 - math.sqrt(2.0) * k * ratio * (
                    math.sqrt(math.log(2.0 * math.sqrt(2.0) / ratio)) + 1.0
                )
    else:
        raise DomainError(f"unknown bound kind {kind!r}")

    notes = ""
    if raw < 0.0:
        notes = "lower bound clamped at 0 (vacuous at these parameters)"
        raw = 0.0
    return BoundResult(min(raw, 1.0), 1.0, method, True, notes)


def _exp_neg(num: float, den: float) -> float:
    """exp(-num/den) with den=0 treated as the limit 0."""
    if den == 0.0:
        return 0.0
    return math.exp(-num / den)


# ---------------------------------------------------------------------------
# Sparse-prior marginal bounds
# ---------------------------------------------------------------------------


def sparse_marginal_bounds(b: float, k: int, eta: float) -> DistanceBounds:
    """Distance bounds for a degree-capped sparse prior with c_z >= 1 - b.

    When every structure carried by the prior satisfies c_z >= 1 - b, the
    mixture constant satisfies c >= 1 - b, hence TV <= b and KL <=
    -log(1 - b) for the joint, and the identically-distributed off-diagonal
    marginals inherit kl <= -2 log(1-b) / (k(k-1)) and the Pinsker /
    Bretagnolle-Huber TV bounds.  The off-diagonal TV bound also caps the
    shift in the prior edge-inclusion probability away from eta, which is
    the natural prior sparsity measure.
    """
    if not 0.0 <= b < 1.0:
        raise DomainError("b must be in [0, 1)")
    if k < 2:
        raise DomainError("k must be >= 2")
    if not 0.0 <= eta <= 1.0:
        raise DomainError("eta must be in [0,1]")
    log1mb = math.log1p(-b)
    offd = k * (k - 1)
    kl_off = -2.0 * log1mb / offd
    tv_off = min(math.sqrt(-log1mb / offd), math.sqrt(1.0 - math.exp(2.0 * log1mb / offd)))
    return DistanceBounds(
        tv_joint=b,
        kl_joint=-log1mb,
        kl_offdiag_marginal=kl_off,
        tv_offdiag_marginal=tv_off,
    )


# ---------------------------------------------------------------------------
# Asymptotic regime classification
# ---------------------------------------------------------------------------

LIMIT_ONE = "LimitOne"
LIMIT_ZERO = "LimitZero"
INDETERMINATE = "Indeterminate"

FAMILY_DENSE_FIXED = "dense-fixed"
FAMILY_DENSE_EXP = "dense-stochastic-exp"
FAMILY_DENSE_GAMMA = "dense-stochastic-gamma"
FAMILY_SPARSE_FIXED = "sparse-fixed"

FAMILIES = (FAMILY_DENSE_FIXED, FAMILY_DENSE_EXP, FAMILY_DENSE_GAMMA, FAMILY_SPARSE_FIXED)


@dataclass(frozen=True)
class LimitClassification:
    verdict: str
    rule: str

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "rule": self.rule}


def classify_limit(
    family: str,
    delta: Optional[Schedule] = None,
    sigma: Optional[Schedule] = None,
    eta: Optional[Schedule] = None,
    alpha: Optional[float] = None,
) -> LimitClassification:
    """Classify the large-k limit of the truncation constant.

    Only the enumerated schedule families (constants and pure powers) are
    accepted: the supported edge rules come from Wigner semicircle-edge
    theory and its sparse and stochastic-diagonal refinements, and guessing
    asymptotics for free-form schedules is out of scope.  Returns the
    verdict together with the rule that fired; anything not covered by a
    listed rule is Indeterminate.

    Families:
      dense-fixed           fixed diagonal, scale set via sigma =
                            mu / ((2 + delta_k) sqrt(k)); needs ``delta``.
      dense-stochastic-exp  unit-mean exponential diagonal, direct sigma(k)
                            schedule; needs ``sigma``.
      dense-stochastic-gamma  Gamma(alpha, alpha) diagonal (alpha > 1),
                            direct sigma(k) schedule; needs ``sigma`` and
                            ``alpha``.
      sparse-fixed          fixed diagonal with Bernoulli(eta_k) sparsity
                            and sigma = mu / ((2 + delta_k) sqrt(eta_k k));
                            needs ``delta`` and ``eta``.
    """
    if family not in FAMILIES:
        raise DomainError(f"unknown family {family!r}; choose one of {FAMILIES}")

    if family == FAMILY_DENSE_FIXED:
        _require(delta, "delta")
        return _classify_delta(delta, sparse=False)

    if family == FAMILY_DENSE_EXP:
        _require(sigma, "sigma")
        if _schedule_level(sigma) <= 0.0:
            raise DomainError("sigma schedule must be positive")
        exponent = _power_exponent(sigma)
        if exponent is None:  # constant sigma > 0
            return LimitClassification(
                LIMIT_ZERO, "exp-diagonal rule: k^-1/2 log k = o(sigma_k)"
            )
        if exponent < -1.5:
            return LimitClassification(
                LIMIT_ONE, "exp-diagonal rule: sigma_k = o(k^-3/2)"
            )
        if exponent > -0.5:
            return LimitClassification(
                LIMIT_ZERO, "exp-diagonal rule: k^-1/2 log k = o(sigma_k)"
            )
        return LimitClassification(
            INDETERMINATE, "exp-diagonal: sigma exponent in [-3/2, -1/2] not covered"
        )

    if family == FAMILY_DENSE_GAMMA:
        _require(sigma, "sigma")
        if alpha is None or not alpha > 1.0:
            raise DomainError("dense-stochastic-gamma needs shape alpha > 1")
        exponent = _power_exponent(sigma)
        threshold = -0.5 - 1.0 / alpha
        if exponent is not None and exponent < threshold:
            return LimitClassification(
                LIMIT_ONE, f"gamma-diagonal rule: sigma_k = o(k^{threshold:g})"
            )
        return LimitClassification(
            INDETERMINATE, "gamma-diagonal: only the sigma_k = o(k^(-1/2-1/alpha)) rule is known"
        )

    # sparse-fixed
    _require(delta, "delta")
    _require(eta, "eta")
    eta_exponent = _power_exponent(eta)
    if _schedule_level(eta) <= 0.0:
        raise DomainError("eta schedule must be positive")
    if eta_exponent is not None and eta_exponent <= -1.0 / 3.0:
        return LimitClassification(
            INDETERMINATE,
            "sparse edge theory needs k^-1/3 = o(eta_k); this eta decays too fast",
        )
    return _classify_delta(delta, sparse=True)


def _classify_delta(delta: Schedule, sparse: bool) -> LimitClassification:
    where = "sparse Wigner threshold" if sparse else "Wigner threshold"
    if isinstance(delta, Const):
        if delta.value > 0.0:
            return LimitClassification(LIMIT_ONE, f"{where}: liminf delta_k > 0")
        if delta.value < 0.0:
            return LimitClassification(LIMIT_ZERO, f"{where}: limsup delta_k < 0")
        return LimitClassification(
            INDETERMINATE, f"{where}: delta_k = 0 sits on the semicircle edge"
        )
    exponent = delta.exponent
    coef = delta.coef
    if exponent == 0.0:
        return _classify_delta(Const(coef), sparse)
    if exponent > 0.0:
        if coef > 0.0:
            return LimitClassification(LIMIT_ONE, f"{where}: liminf delta_k > 0")
        return LimitClassification(LIMIT_ZERO, f"{where}: limsup delta_k < 0")
    # decaying schedules
    if coef > 0.0:
        if exponent > -2.0 / 3.0:
            return LimitClassification(
                LIMIT_ONE, f"{where}: delta_k -> 0+ with k^-2/3 = o(delta_k)"
            )
        return LimitClassification(
            INDETERMINATE,
            f"{where}: delta_k -> 0+ but decays at least as fast as the k^-2/3 edge fluctuations",
        )
    if coef < 0.0:
        return LimitClassification(
            INDETERMINATE, f"{where}: delta_k -> 0- approaches the edge from below"
        )
    return LimitClassification(INDETERMINATE, f"{where}: delta_k identically 0")


def _power_exponent(schedule: Schedule) -> Optional[float]:
    """Exponent of a decaying/growing power schedule, None for constants."""
    if isinstance(schedule, Const):
        return None
    if isinstance(schedule, Power):
        if schedule.exponent == 0.0:
            return None
        return schedule.exponent
    raise DomainError(f"unsupported schedule {schedule!r}")


def _schedule_level(schedule: Schedule) -> float:
    return schedule.value if isinstance(schedule, Const) else schedule.coef


def _require(value, name: str) -> None:
    if value is None:
        raise DomainError(f"this family needs a {name} schedule")
