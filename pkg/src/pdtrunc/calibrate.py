"""Solve for the off-diagonal scale hitting a target truncation constant.

Two routes: invert an analytic lower bound (deterministic bisection on a
continuous, strictly decreasing function of the scale), or calibrate
against a Monte Carlo estimate using common random numbers.  The latter
scales one shared sample set, so the estimated constant is an exactly
nonincreasing step function of the scale and the bisection never
flip-flops near the root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import bounds as bounds_mod
from .errors import BudgetExceeded, DomainError, Unachievable
from .estimators import DEFAULT_LEVEL, Estimate, _binomial_estimate
from .model import (
    DiagonalLaw,
    PriorSpec,
    SlabLaw,
    _triu_indices,
    sample_matrix,
    sample_structure,
)
from .numerics import QuadratureSpec
from .rng import StreamPool


@dataclass(frozen=True)
class CalibrationReport:
    """Outcome of a scale calibration run."""

    sigma: float
    target_c: float
    achieved: Union[Estimate, float]
    iterations: int
    method: str

    def to_json(self) -> dict:
        achieved = (
            self.achieved.to_json() if isinstance(self.achieved, Estimate) else self.achieved
        )
        return {
            "sigma": self.sigma,
            "target_c": self.target_c,
            "achieved_estimate": achieved,
            "iterations": self.iterations,
            "method": self.method,
        }


def wigner_threshold(mu: float, k: int, delta: float, eta: float = 1.0) -> float:
    """Scale placing the semicircle edge a relative margin delta inside the
    diagonal level:  sigma = mu / ((2 + delta) * sqrt(eta * k)).

    With Bernoulli(eta) sparsity the effective edge sits at 2*sigma*
    sqrt(eta*k), hence the eta factor; eta = 1 recovers the dense form.
    Homogeneous of degree one in mu.
    """
    if not mu > 0.0:
        raise DomainError("mu must be > 0")
    if k < 2:
        raise DomainError("k must be >= 2")
    if not 2.0 + delta > 0.0:
        raise DomainError("delta must exceed -2")
    if not 0.0 < eta <= 1.0:
        raise DomainError("eta must be in (0,1]")
    return mu / ((2.0 + delta) * math.sqrt(eta * k))


SANDWICH_LOWER = "sandwich-lower"


def sigma_from_bound(
    target_c: float,
    bound: str,
    *,
    diag: Optional[DiagonalLaw] = None,
    k: int,
    m: Optional[int] = None,
    quad: QuadratureSpec = QuadratureSpec(),
    slab_factory=None,
    mu: Optional[float] = None,
    d: Optional[int] = None,
    a: Optional[float] = None,
    t: Optional[float] = None,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> CalibrationReport:
    """Bisection on sigma so that the chosen lower bound equals target_c.

    ``bound`` is "sandwich-lower" (needs ``diag``; ``slab_factory`` maps a
    scale to a slab law and defaults to a Gaussian) or one of the
    concentration-bound kinds ("gauss-fixed", "bounded-fixed",
    "gauss-expdiag"; need ``mu`` and ``d``).  Every supported bound tends to
    1 as sigma -> 0 and decays continuously and monotonically, so the target
    always brackets; the doubling cap exists only as a defensive guard.
    """
    if not 0.0 < target_c < 1.0:
        raise DomainError("target_c must be in (0,1)")
    if not tol > 0.0:
        raise DomainError("tol must be > 0")

    if bound == SANDWICH_LOWER:
        if diag is None:
            raise DomainError("sandwich-lower needs a diagonal law")
        factory = slab_factory or (lambda s: None)

        def bound_at(s: float) -> float:
            return bounds_mod.dense_sandwich(diag, s, k, m, quad, slab=factory(s)).lower

        method = "sigma-from-bound:sandwich-lower"
    elif bound in (
        bounds_mod.BERNSTEIN_GAUSS_FIXED,
        bounds_mod.BERNSTEIN_BOUNDED_FIXED,
        bounds_mod.BERNSTEIN_GAUSS_EXPDIAG,
    ):
        if mu is None or d is None:
            raise DomainError("concentration bounds need mu and d")

        def bound_at(s: float) -> float:
            return bounds_mod.bernstein_lower(bound, mu, s, d, k, a=a, t=t).lower

        method = f"sigma-from-bound:{bound}"
    else:
        raise DomainError(f"unknown bound {bound!r}")

    hi = 1.0
    doublings = 0
    while bound_at(hi) >= target_c:
        hi *= 2.0
        doublings += 1
        if doublings > 200:
            raise Unachievable("could not bracket the target from above")
    lo = 0.0
    iterations = 0
    sigma = hi
    value = bound_at(hi)
    while iterations < max_iter:
        sigma = 0.5 * (lo + hi)
        if sigma == lo or sigma == hi:  # float resolution exhausted
            break
        value = bound_at(sigma)
        if abs(value - target_c) <= tol:
            break
        if value > target_c:
            lo = sigma
        else:
            hi = sigma
        iterations += 1
    if abs(value - target_c) > tol:
        raise BudgetExceeded(
            f"bisection did not reach |bound - target| <= {tol:g} in {max_iter} iterations"
        )
    return CalibrationReport(sigma, target_c, value, iterations, method)


def sigma_from_mc(
    spec: PriorSpec,
    target_c: float,
    n: int,
    tol_c: float,
    seed: int,
    max_iter: int = 60,
    level: float = DEFAULT_LEVEL,
) -> CalibrationReport:
    """Calibrate the slab scale against a coupled Monte Carlo estimate.

    One base sample set (structures, diagonals, unit-scale slab values) is
    drawn up front; evaluating a candidate sigma just rescales the shared
    off-diagonals, so the sample estimate of the truncation constant is an
    exactly nonincreasing step function of sigma.  Bisection runs on the
    fixed dyadic grid over [0, sigma_max] (sigma_max found by doubling until
    no sample stays positive definite, independently of the target), which
    makes the returned sigma exactly monotone in the target under a shared
    seed.  Returns the largest grid point whose estimate still reaches the
    target, with the estimate at that point.

    Per-sample positive definiteness is resolved lazily: once a sample
    fails at some sigma it fails for all larger sigma, so each bisection
    step only re-factorises the still-ambiguous samples.
    """
    if not 0.0 < target_c <= 1.0:
        raise DomainError("target_c must be in (0,1]")
    if not tol_c > 0.0:
        raise DomainError("tol_c must be > 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    mc_res = 3.0 * math.sqrt(target_c * (1.0 - target_c) / n)
    if mc_res >= tol_c:
        raise DomainError(
            f"n too small for tol_c: 3*sqrt(target(1-target)/n) = {mc_res:.4g} >= {tol_c:g}"
        )

    k = spec.k
    base_slab: SlabLaw = spec.slab.with_scale(1.0)
    base_spec = PriorSpec(k, spec.diagonal, base_slab, spec.sparsity)
    pool = StreamPool()
    diags = np.empty((n, k))
    offs = np.empty((n, k * (k - 1) // 2))
    for r in range(n):
        gen = pool.generator(seed, r)
        z = sample_structure(base_spec, gen)
        m = sample_matrix(base_spec, z, gen)
        diags[r] = m.diag
        offs[r] = m.off

    iu = _triu_indices(k)

    def pd_at(sigma: float, candidates: np.ndarray) -> np.ndarray:
        ok = np.zeros(candidates.size, dtype=bool)
        for idx, r in enumerate(candidates):
            m = np.zeros((k, k))
            m[iu] = sigma * offs[r]
            m = m + m.T
            np.fill_diagonal(m, diags[r])
            try:
                np.linalg.cholesky(m)
                ok[idx] = True
            except np.linalg.LinAlgError:
                pass
        return ok

    evaluations = 0

    # Bracket from above: sigma_max with zero surviving samples.
    all_idx = np.arange(n)
    hi = 1.0
    hi_alive = all_idx[pd_at(hi, all_idx)]
    evaluations += 1
    doublings = 0
    while hi_alive.size > 0:
        hi *= 2.0
        hi_alive = hi_alive[pd_at(hi, hi_alive)]
        evaluations += 1
        doublings += 1
        if doublings > 200:
            raise Unachievable("no finite sigma kills every sample; degenerate spec")

    lo = 0.0
    lo_alive = all_idx  # sigma = 0 leaves the (positive) diagonal: all PD
    iterations = 0
    while iterations < max_iter and (hi - lo) > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        ambiguous = np.setdiff1d(lo_alive, hi_alive, assume_unique=True)
        mid_alive = np.union1d(hi_alive, ambiguous[pd_at(mid, ambiguous)])
        evaluations += 1
        if mid_alive.size / n >= target_c:
            lo, lo_alive = mid, mid_alive
        else:
            hi, hi_alive = mid, mid_alive
        iterations += 1

    successes = int(lo_alive.size)
    achieved = _binomial_estimate(successes, n, seed, level)
    if not (achieved.ci_low - tol_c <= target_c <= achieved.ci_high + tol_c):
        raise BudgetExceeded(
            f"estimate {achieved.value:.4f} at sigma={lo:.6g} does not cover the "
            f"target {target_c} within tol_c={tol_c}"
        )
    return CalibrationReport(lo, target_c, achieved, iterations, "sigma-from-mc:coupled-bisection")
