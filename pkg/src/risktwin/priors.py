"""Prior models for the basic random vector.

Marginals are independent; each variable carries its own one-dimensional
distribution. Every marginal knows how to map standard-normal draws into
its own space, which is what the staged conditional sampler and all
ensemble generation are built on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats


class PriorSpecError(ValueError):
    """Raised when a marginal specification violates its invariants."""


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise PriorSpecError(f"uniform bounds must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise PriorSpecError(f"uniform requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def std(self) -> float:
        return (self.hi - self.lo) / math.sqrt(12.0)

    def from_standard_normal(self, u):
        return self.lo + (self.hi - self.lo) * stats.norm.cdf(u)


@dataclass(frozen=True)
class Normal:
    mean: float
    sd: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.sd)):
            raise PriorSpecError(f"normal parameters must be finite, got ({self.mean}, {self.sd})")
        if self.sd <= 0:
            raise PriorSpecError(f"normal sd must be > 0, got {self.sd}")

    @property
    def std(self) -> float:
        return self.sd

    def from_standard_normal(self, u):
        return self.mean + self.sd * np.asarray(u)


@dataclass(frozen=True)
class Lognormal:
    """Lognormal parameterized by the mean and sd of the variable itself."""

    mean: float
    sd: float

    def __post_init__(self):
        if self.mean <= 0 or self.sd <= 0:
            raise PriorSpecError(
                f"lognormal requires mean > 0 and sd > 0, got ({self.mean}, {self.sd})"
            )

    @property
    def log_sigma(self) -> float:
        return math.sqrt(math.log1p((self.sd / self.mean) ** 2))

    @property
    def log_mu(self) -> float:
        return math.log(self.mean) - 0.5 * self.log_sigma**2

    @property
    def std(self) -> float:
        return self.sd

    def from_standard_normal(self, u):
        return np.exp(self.log_mu + self.log_sigma * np.asarray(u))


@dataclass(frozen=True)
class Deterministic:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise PriorSpecError(f"deterministic value must be finite, got {self.value}")

    @property
    def mean(self) -> float:
        return self.value

    @property
    def std(self) -> float:
        return 0.0

    def from_standard_normal(self, u):
        return np.full(np.shape(u), self.value)


@dataclass(frozen=True)
class GaussianProcessRef:
    """Stationary deviation of a Gaussian-process channel.

    The ensemble stores the zero-mean deviation from; the runtime adds the
    time-varying mean profile when predicting measurements. Marginally this
    behaves as Normal(0, sd).
    """

    sd: float
    channel: str = ""

    def __post_init__(self):
        if self.sd <= 0:
            raise PriorSpecError(f"gp-ref sd must be > 0, got {self.sd}")

    @property
    def mean(self) -> float:
        return 0.0

    @property
    def std(self) -> float:
        return self.sd

    def from_standard_normal(self, u):
        return self.sd * np.asarray(u)


Marginal = Uniform | Normal | Lognormal | Deterministic | GaussianProcessRef


@dataclass
class PriorModel:
    """Independent-marginal distribution of the basic random vector."""

    variables: list[tuple[str, Marginal]] = field(default_factory=list)

    def __post_init__(self):
        names = [name for name, _ in self.variables]
        if len(set(names)) != len(names):
            raise PriorSpecError(f"duplicate variable names in prior: {names}")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.variables]

    @property
    def dim(self) -> int:
        return len(self.variables)

    def marginal(self, name: str) -> Marginal:
        for n, m in self.variables:
            if n == name:
                return m
        raise KeyError(name)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n independent rows of x ~ f(x); shape (n, dim)."""
        if n < 1:
            raise ValueError(f"sample count must be >= 1, got {n}")
        u = rng.standard_normal((n, self.dim))
        return self.from_standard_normal(u)

    def from_standard_normal(self, u: np.ndarray) -> np.ndarray:
        """Map standard-normal rows to physical space via marginal inverse CDFs."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.empty_like(u)
        for j, (_, m) in enumerate(self.variables):
            out[:, j] = m.from_standard_normal(u[:, j])
        return out

    def means(self) -> np.ndarray:
        return np.array([m.mean for _, m in self.variables])

    def stds(self) -> np.ndarray:
        return np.array([m.std for _, m in self.variables])

    def stochastic_indices(self) -> np.ndarray:
        """Indices of non-deterministic components (the ones MCMC may move)."""
        return np.array(
            [j for j, (_, m) in enumerate(self.variables) if not isinstance(m, Deterministic)],
            dtype=int,
        )
