"""Prior specification, matrix sampling, and positive-definiteness primitives.

The priors handled here put independent entries on a symmetric k x k matrix:
a positive law on each diagonal entry, a zero-mean "slab" law on each active
off-diagonal entry, and an optional sparsity law deciding which off-diagonals
are active.  Sampling is stream-parameterized (callers pass independent
streams), so there is no shared mutable state and concurrent use with
distinct streams is safe.

Draw order within one stream is part of the reproducibility contract:
structure first (when random), then the diagonal block, then the slab values
for active entries only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import special as sp_special

from .errors import ConfigError, DomainError
from .numerics import log_central_normal_prob, normal_cdf, normal_quantile
from .rng import RngStream

StreamLike = Union[RngStream, np.random.Generator]


def _resolve_generator(stream: StreamLike) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return stream.generator()


@lru_cache(maxsize=64)
def _triu_indices(k: int):
    return np.triu_indices(k, 1)


def pair_index(i: int, j: int, k: int) -> int:
    """Position of off-diagonal pair (i, j), i < j, in condensed row-major order."""
    if not 0 <= i < j < k:
        raise DomainError(f"pair ({i},{j}) out of range for k={k}")
    return i * k - i * (i + 1) // 2 + (j - i - 1)


# ---------------------------------------------------------------------------
# Diagonal laws
# ---------------------------------------------------------------------------


class DiagonalLaw:
    """Positive law for the diagonal entries."""

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def pdf(self, x: float) -> float:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def quantile(self, p: float) -> float:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class FixedDiagonal(DiagonalLaw):
    """Degenerate diagonal: every entry equals mu."""

    mu: float

    def __post_init__(self) -> None:
        if not self.mu > 0.0:
            raise DomainError("FixedDiagonal needs mu > 0")

    def sample(self, gen, size):
        return np.full(size, self.mu)

    def mean(self):
        return self.mu

    def to_json(self):
        return {"type": "fixed", "params": {"mu": self.mu}}


@dataclass(frozen=True)
class ExponentialDiagonal(DiagonalLaw):
    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0.0:
            raise DomainError("ExponentialDiagonal needs rate > 0")

    def sample(self, gen, size):
        return gen.exponential(scale=1.0 / self.rate, size=size)

    def mean(self):
        return 1.0 / self.rate

    def pdf(self, x):
        return self.rate * math.exp(-self.rate * x) if x >= 0.0 else 0.0

    def cdf(self, x):
        return -math.expm1(-self.rate * x) if x > 0.0 else 0.0

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise DomainError("quantile needs p in (0,1)")
        return -math.log1p(-p) / self.rate

    def to_json(self):
        return {"type": "exponential", "params": {"rate": self.rate}}


@dataclass(frozen=True)
class GammaDiagonal(DiagonalLaw):
    shape: float
    rate: float

    def __post_init__(self) -> None:
        if not (self.shape > 0.0 and self.rate > 0.0):
            raise DomainError("GammaDiagonal needs shape > 0 and rate > 0")

    def sample(self, gen, size):
        return gen.gamma(self.shape, scale=1.0 / self.rate, size=size)

    def mean(self):
        return self.shape / self.rate

    def pdf(self, x):
        if x <= 0.0:
            return 0.0
        a, b = self.shape, self.rate
        return math.exp(a * math.log(b) + (a - 1.0) * math.log(x) - b * x - math.lgamma(a))

    def cdf(self, x):
        if x <= 0.0:
            return 0.0
        return float(sp_special.gammainc(self.shape, self.rate * x))

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise DomainError("quantile needs p in (0,1)")
        return float(sp_special.gammaincinv(self.shape, p)) / self.rate

    def to_json(self):
        return {"type": "gamma", "params": {"shape": self.shape, "rate": self.rate}}


# ---------------------------------------------------------------------------
# Slab laws (zero-mean off-diagonal entry laws)
# ---------------------------------------------------------------------------


class SlabLaw:
    """Zero-mean, finite-variance law for active off-diagonal entries.

    Every slab exposes its scale parameter, can be rebuilt at another scale
    (scale-family coupling underpins the monotone-in-sigma machinery), and
    reports P(|X| <= r), which the product bounds consume.
    """

    scale: float

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def with_scale(self, scale: float) -> "SlabLaw":
        raise NotImplementedError

    def central_prob(self, r: float) -> float:
        """P(|X| <= r) for r >= 0."""
        raise NotImplementedError

    def log_central_prob(self, r: float) -> float:
        p = self.central_prob(r)
        return math.log(p) if p > 0.0 else -math.inf

    def quantile(self, p: float) -> float:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianSlab(SlabLaw):
    sigma: float

    def __post_init__(self) -> None:
        if self.sigma < 0.0:
            raise DomainError("GaussianSlab needs sigma >= 0")

    @property
    def scale(self):
        return self.sigma

    def sample(self, gen, size):
        return gen.standard_normal(size) * self.sigma

    def variance(self):
        return self.sigma**2

    def with_scale(self, scale):
        return GaussianSlab(scale)

    def central_prob(self, r):
        if self.sigma == 0.0:
            return 1.0
        return 2.0 * normal_cdf(r / self.sigma) - 1.0 if r > 0.0 else 0.0

    def log_central_prob(self, r):
        if self.sigma == 0.0:
            return 0.0
        return log_central_normal_prob(r / self.sigma)

    def quantile(self, p):
        return self.sigma * normal_quantile(p)

    def to_json(self):
        return {"type": "gaussian", "params": {"sigma": self.sigma}}


@dataclass(frozen=True)
class LaplaceSlab(SlabLaw):
    """Laplace slab, sampled as a Gaussian scale mixture.

    With mixing variance V ~ Exp(mean 2b^2) and X | V ~ N(0, V), X is
    Laplace(0, b).  The mixture construction (rather than inverse-CDF
    sampling) keeps the law inside the conditionally-Gaussian family that
    the minimum-eigenvalue comparison results require.
    """

    b: float

    def __post_init__(self) -> None:
        if self.b < 0.0:
            raise DomainError("LaplaceSlab needs scale b >= 0")

    @property
    def scale(self):
        return self.b

    def sample(self, gen, size):
        mixing = gen.exponential(scale=2.0 * self.b**2, size=size)
        return gen.standard_normal(size) * np.sqrt(mixing)

    def variance(self):
        return 2.0 * self.b**2

    def with_scale(self, scale):
        return LaplaceSlab(scale)

    def central_prob(self, r):
        if self.b == 0.0:
            return 1.0
        return -math.expm1(-r / self.b) if r > 0.0 else 0.0

    def log_central_prob(self, r):
        if self.b == 0.0:
            return 0.0
        if r <= 0.0:
            return -math.inf
        return math.log(-math.expm1(-r / self.b))

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise DomainError("quantile needs p in (0,1)")
        q = p - 0.5
        return -self.b * math.copysign(math.log1p(-2.0 * abs(q)), -q)

    def to_json(self):
        return {"type": "laplace", "params": {"b": self.b}}


@dataclass(frozen=True)
class StudentTSlab(SlabLaw):
    """Student-t slab (dof > 2), sampled via inverse-gamma variance mixing.

    X = Z * sqrt(dof * s^2 / V) with V ~ chi-square(dof), i.e. the mixing
    variance is inverse-gamma; again a Gaussian scale mixture by
    construction.  Variance is s^2 * dof / (dof - 2).
    """

    dof: float
    s: float

    def __post_init__(self) -> None:
        if not self.dof > 2.0:
            raise DomainError("StudentTSlab needs dof > 2 for a finite variance")
        if self.s < 0.0:
            raise DomainError("StudentTSlab needs scale s >= 0")

    @property
    def scale(self):
        return self.s

    def sample(self, gen, size):
        v = gen.chisquare(self.dof, size=size)
        mixing = self.dof * self.s**2 / v
        return gen.standard_normal(size) * np.sqrt(mixing)

    def variance(self):
        return self.s**2 * self.dof / (self.dof - 2.0)

    def with_scale(self, scale):
        return StudentTSlab(self.dof, scale)

    def central_prob(self, r):
        if self.s == 0.0:
            return 1.0
        if r <= 0.0:
            return 0.0
        return 1.0 - 2.0 * float(sp_special.stdtr(self.dof, -r / self.s))

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise DomainError("quantile needs p in (0,1)")
        return self.s * float(sp_special.stdtrit(self.dof, p))

    def to_json(self):
        return {"type": "student_t", "params": {"dof": self.dof, "s": self.s}}


@dataclass(frozen=True)
class TruncatedGaussianSlab(SlabLaw):
    """N(0, sigma^2) conditioned on |X| <= cap, sampled by rejection.

    Rescaling multiplies sigma and cap together, so the truncation shape
    cap/sigma is scale-invariant and the law stays in a scale family.
    """

    sigma: float
    cap: float

    def __post_init__(self) -> None:
        if self.sigma < 0.0:
            raise DomainError("TruncatedGaussianSlab needs sigma >= 0")
        if not self.cap > 0.0:
            raise DomainError("TruncatedGaussianSlab needs cap > 0")

    @property
    def scale(self):
        return self.sigma

    def sample(self, gen, size):
        if self.sigma == 0.0:
            return np.zeros(size)
        out = np.empty(size)
        filled = 0
        while filled < size:
            batch = gen.standard_normal(size - filled) * self.sigma
            keep = batch[np.abs(batch) <= self.cap]
            out[filled : filled + keep.size] = keep
            filled += keep.size
        return out

    def variance(self):
        if self.sigma == 0.0:
            return 0.0
        alpha = self.cap / self.sigma
        phi = math.exp(-0.5 * alpha * alpha) / math.sqrt(2.0 * math.pi)
        mass = 2.0 * normal_cdf(alpha) - 1.0
        return self.sigma**2 * (1.0 - 2.0 * alpha * phi / mass)

    def with_scale(self, scale):
        if self.sigma == 0.0:
            raise DomainError("cannot rescale a degenerate truncated slab")
        return TruncatedGaussianSlab(scale, self.cap * scale / self.sigma)

    def central_prob(self, r):
        if self.sigma == 0.0:
            return 1.0
        if r <= 0.0:
            return 0.0
        mass = 2.0 * normal_cdf(self.cap / self.sigma) - 1.0
        inner = 2.0 * normal_cdf(min(r, self.cap) / self.sigma) - 1.0
        return inner / mass

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise DomainError("quantile needs p in (0,1)")
        lo = normal_cdf(-self.cap / self.sigma)
        mass = 1.0 - 2.0 * lo
        return self.sigma * normal_quantile(lo + p * mass)

    def to_json(self):
        return {"type": "truncated_gaussian", "params": {"sigma": self.sigma, "cap": self.cap}}


# ---------------------------------------------------------------------------
# Structure (sparsity pattern) and sparsity laws
# ---------------------------------------------------------------------------


class StructureMatrix:
    """Symmetric binary pattern with zero diagonal, stored once per pair.

    ``bits`` holds the strict upper triangle in condensed row-major order
    ((0,1), (0,2), ..., (1,2), ...), so symmetry and the zero diagonal hold
    by construction.
    """

    __slots__ = ("k", "bits")

    def __init__(self, k: int, bits: np.ndarray):
        if k < 2:
            raise DomainError("StructureMatrix needs k >= 2")
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        if bits.shape != (k * (k - 1) // 2,):
            raise DomainError("bits must have length k*(k-1)/2")
        if not np.all((bits == 0) | (bits == 1)):
            raise DomainError("bits must be 0/1")
        bits.flags.writeable = False
        self.k = k
        self.bits = bits

    @classmethod
    def empty(cls, k: int) -> "StructureMatrix":
        return cls(k, np.zeros(k * (k - 1) // 2, dtype=np.uint8))

    @classmethod
    def complete(cls, k: int) -> "StructureMatrix":
        return cls(k, np.ones(k * (k - 1) // 2, dtype=np.uint8))

    @classmethod
    def from_edges(cls, k: int, edges) -> "StructureMatrix":
        bits = np.zeros(k * (k - 1) // 2, dtype=np.uint8)
        for i, j in edges:
            i, j = (int(i), int(j)) if i < j else (int(j), int(i))
            if i == j:
                raise DomainError("self-loops are not allowed (zero diagonal)")
            bits[pair_index(i, j, k)] = 1
        return cls(k, bits)

    @classmethod
    def from_dense(cls, z: np.ndarray) -> "StructureMatrix":
        z = np.asarray(z)
        k = z.shape[0]
        if z.shape != (k, k) or not np.array_equal(z, z.T):
            raise DomainError("dense pattern must be square and symmetric")
        if np.any(np.diag(z) != 0):
            raise DomainError("dense pattern must have a zero diagonal")
        return cls(k, z[_triu_indices(k)].astype(np.uint8))

    def to_dense(self) -> np.ndarray:
        z = np.zeros((self.k, self.k), dtype=np.uint8)
        z[_triu_indices(self.k)] = self.bits
        return z + z.T

    def edges(self):
        iu, ju = _triu_indices(self.k)
        active = self.bits.astype(bool)
        return [[int(a), int(b)] for a, b in zip(iu[active], ju[active])]

    def degrees(self) -> np.ndarray:
        return self.to_dense().sum(axis=1).astype(np.int64)

    def edge_count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StructureMatrix)
            and self.k == other.k
            and np.array_equal(self.bits, other.bits)
        )

    def __repr__(self) -> str:
        return f"StructureMatrix(k={self.k}, edges={self.edge_count()})"


class SparsityLaw:
    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Dense(SparsityLaw):
    """Every off-diagonal entry is active; consumes no randomness."""

    def to_json(self):
        return {"type": "dense", "params": {}}


@dataclass(frozen=True)
class BernoulliSparsity(SparsityLaw):
    eta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError("BernoulliSparsity needs eta in [0,1]")

    def to_json(self):
        return {"type": "bernoulli", "params": {"eta": self.eta}}


@dataclass(frozen=True, eq=False)
class FixedPattern(SparsityLaw):
    pattern: StructureMatrix

    def to_json(self):
        return {
            "type": "fixed_pattern",
            "params": {"k": self.pattern.k, "edges": self.pattern.edges()},
        }


# ---------------------------------------------------------------------------
# Prior specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PriorSpec:
    """Separable prior over symmetric k x k matrices.

    Entries are mutually independent given the sparsity pattern.
    """

    k: int
    diagonal: DiagonalLaw
    slab: SlabLaw
    sparsity: SparsityLaw = Dense()

    def __post_init__(self) -> None:
        if self.k < 2:
            raise DomainError("PriorSpec needs k >= 2")
        if isinstance(self.sparsity, FixedPattern) and self.sparsity.pattern.k != self.k:
            raise DomainError("FixedPattern dimension does not match spec.k")

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "diagonal": self.diagonal.to_json(),
            "slab": self.slab.to_json(),
            "sparsity": self.sparsity.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PriorSpec":
        try:
            k = int(obj["k"])
            diagonal = diagonal_from_json(obj["diagonal"])
            slab = slab_from_json(obj["slab"])
            sparsity = sparsity_from_json(obj.get("sparsity", {"type": "dense"}))
        except KeyError as exc:
            raise ConfigError(f"spec: missing field {exc}") from exc
        return cls(k=k, diagonal=diagonal, slab=slab, sparsity=sparsity)


def diagonal_from_json(obj: dict, path: str = "diagonal") -> DiagonalLaw:
    kind, params = _kind_params(obj, path)
    try:
        if kind == "fixed":
            return FixedDiagonal(float(params["mu"]))
        if kind == "exponential":
            return ExponentialDiagonal(float(params["rate"]))
        if kind == "gamma":
            return GammaDiagonal(float(params["shape"]), float(params["rate"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.params: {exc}") from exc
    raise ConfigError(f"{path}.type: unknown diagonal law {kind!r}")


def slab_from_json(obj: dict, path: str = "slab") -> SlabLaw:
    kind, params = _kind_params(obj, path)
    try:
        if kind == "gaussian":
            return GaussianSlab(float(params["sigma"]))
        if kind == "laplace":
            return LaplaceSlab(float(params["b"]))
        if kind == "student_t":
            return StudentTSlab(float(params["dof"]), float(params["s"]))
        if kind == "truncated_gaussian":
            return TruncatedGaussianSlab(float(params["sigma"]), float(params["cap"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.params: {exc}") from exc
    raise ConfigError(f"{path}.type: unknown slab law {kind!r}")


def sparsity_from_json(obj: dict, path: str = "sparsity") -> SparsityLaw:
    kind, params = _kind_params(obj, path)
    try:
        if kind == "dense":
            return Dense()
        if kind == "bernoulli":
            return BernoulliSparsity(float(params["eta"]))
        if kind == "fixed_pattern":
            return FixedPattern(StructureMatrix.from_edges(int(params["k"]), params["edges"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.params: {exc}") from exc
    raise ConfigError(f"{path}.type: unknown sparsity law {kind!r}")


def _kind_params(obj, path):
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError(f"{path}: expected an object with a 'type' field")
    return obj["type"], obj.get("params", {})


# ---------------------------------------------------------------------------
# Symmetric matrix realisation
# ---------------------------------------------------------------------------


@dataclass
class SymMatrix:
    """Dense symmetric matrix stored once per entry (diag + condensed triangle)."""

    k: int
    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self) -> None:
        self.diag = np.asarray(self.diag, dtype=np.float64)
        self.off = np.asarray(self.off, dtype=np.float64)
        if self.diag.shape != (self.k,):
            raise DomainError("diag must have length k")
        if self.off.shape != (self.k * (self.k - 1) // 2,):
            raise DomainError("off must have length k*(k-1)/2")

    @classmethod
    def from_dense(cls, m: np.ndarray) -> "SymMatrix":
        m = np.asarray(m, dtype=np.float64)
        k = m.shape[0]
        if m.shape != (k, k) or not np.allclose(m, m.T):
            raise DomainError("matrix must be square and symmetric")
        return cls(k, np.diag(m).copy(), m[_triu_indices(k)].copy())

    def to_dense(self) -> np.ndarray:
        m = np.zeros((self.k, self.k))
        m[_triu_indices(self.k)] = self.off
        m = m + m.T
        np.fill_diagonal(m, self.diag)
        return m

    def entry(self, i: int, j: int) -> float:
        if i == j:
            return float(self.diag[i])
        i, j = (i, j) if i < j else (j, i)
        return float(self.off[pair_index(i, j, self.k)])

    def set_entry(self, i: int, j: int, value: float) -> None:
        if i == j:
            self.diag[i] = value
        else:
            i, j = (i, j) if i < j else (j, i)
            self.off[pair_index(i, j, self.k)] = value


# ---------------------------------------------------------------------------
# Sampling operations
# ---------------------------------------------------------------------------


def sample_structure(spec: PriorSpec, stream: StreamLike) -> StructureMatrix:
    """Draw the sparsity pattern; deterministic laws consume no randomness."""
    gen = _resolve_generator(stream)
    law = spec.sparsity
    n_pairs = spec.k * (spec.k - 1) // 2
    if isinstance(law, Dense):
        return StructureMatrix.complete(spec.k)
    if isinstance(law, BernoulliSparsity):
        bits = (gen.random(n_pairs) < law.eta).astype(np.uint8)
        return StructureMatrix(spec.k, bits)
    if isinstance(law, FixedPattern):
        return law.pattern
    raise DomainError(f"unknown sparsity law {law!r}")


def sample_matrix(spec: PriorSpec, z: StructureMatrix, stream: StreamLike) -> SymMatrix:
    """Draw a matrix realisation given the structure.

    Diagonal entries are i.i.d. from the diagonal law; an off-diagonal is 0
    where z is 0 and a fresh slab draw where z is 1 (values drawn for active
    entries only, in condensed order).
    """
    if z.k != spec.k:
        raise DomainError("structure dimension does not match spec.k")
    gen = _resolve_generator(stream)
    diag = spec.diagonal.sample(gen, spec.k)
    off = np.zeros(spec.k * (spec.k - 1) // 2)
    active = z.bits.astype(bool)
    n_active = int(active.sum())
    if n_active:
        off[active] = spec.slab.sample(gen, n_active)
    return SymMatrix(spec.k, diag, off)


# ---------------------------------------------------------------------------
# Positive-definiteness and eigenvalue primitives
# ---------------------------------------------------------------------------


def is_pd(m: Union[SymMatrix, np.ndarray]) -> bool:
    """True iff the Cholesky factorization succeeds with positive pivots.

    No tolerance slack: a floating-point failure counts as not positive
    definite, which is the conservative and deterministic convention for
    the truncation indicator.
    """
    dense = m.to_dense() if isinstance(m, SymMatrix) else np.asarray(m, dtype=np.float64)
    return _cholesky_ok(dense)


def _cholesky_ok(dense: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(dense)
        return True
    except np.linalg.LinAlgError:
        return False


def min_eig(m: Union[SymMatrix, np.ndarray]) -> float:
    """Smallest eigenvalue via the symmetric (LAPACK) eigensolver."""
    dense = m.to_dense() if isinstance(m, SymMatrix) else np.asarray(m, dtype=np.float64)
    return float(np.linalg.eigvalsh(dense)[0])


def max_degree(z: StructureMatrix) -> int:
    """Largest row degree of the pattern."""
    if z.edge_count() == 0:
        return 0
    return int(z.degrees().max())


def coupled_scale(m: SymMatrix, sigma: float, sigma_prime: float) -> SymMatrix:
    """Rescale off-diagonals by sigma'/sigma, keeping the diagonal.

    This is the exact scale-family coupling: if ``m`` was sampled with slab
    scale sigma, the result is distributed as a draw at scale sigma', and
    losing positive definiteness is monotone along the coupling (once a
    draw leaves the cone it never re-enters as sigma' grows).
    """
    if not sigma > 0.0:
        raise DomainError("coupled_scale needs sigma > 0")
    if sigma_prime < 0.0:
        raise DomainError("coupled_scale needs sigma' >= 0")
    return SymMatrix(m.k, m.diag.copy(), m.off * (sigma_prime / sigma))
