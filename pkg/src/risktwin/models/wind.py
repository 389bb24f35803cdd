"""Gaussian-process wind field: speed and direction as independent
homogeneous GPs around piecewise-linear mean profiles.

Sampling is incremental: each new time point is drawn from its exact
conditional given a sliding window of recent history (the squared
exponential kernel decays fast enough that older points carry no
information). Measured values add independent Gaussian sensor noise.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg


def squared_exponential(t1, t2, sigma_f: float, tau: float):
    """kappa(t1, t2) = sigma_f^2 exp(-(t1 - t2)^2 / (2 tau))."""
    d = np.asarray(t1, dtype=float) - np.asarray(t2, dtype=float)
    return sigma_f**2 * np.exp(-(d * d) / (2.0 * tau))


@dataclass(frozen=True)
class MeanProfile:
    """Piecewise-linear mean over time from (t, value) breakpoints."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.times) != len(self.values) or len(self.times) < 1:
            raise ValueError("profile needs matching, non-empty breakpoint lists")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("profile breakpoints must be strictly increasing")

    def __call__(self, t):
        return np.interp(t, self.times, self.values)


@dataclass(frozen=True)
class WindFieldSpec:
    speed_mean: MeanProfile
    direction_mean: MeanProfile            # radians
    sigma_speed: float = 1.0               # process std, m/s
    sigma_direction: float = math.radians(1.0)
    tau: float = 1.0                       # correlation length scale, s^2 units per kernel
    noise_speed: float = 0.5               # phi_v sd, m/s
    noise_direction: float = math.radians(3.0)   # phi_theta sd

    def __post_init__(self):
        if self.sigma_speed <= 0 or self.sigma_direction <= 0:
            raise ValueError("process std must be > 0")
        if self.tau <= 0:
            raise ValueError("correlation length must be > 0")
        if np.any(np.asarray(self.speed_mean.values) < 0):
            raise ValueError("mean speed profile must be non-negative")


class IncrementalGP:
    """Zero-mean stationary GP sampled sequentially at arbitrary times."""

    _JITTER = 1e-9

    def __init__(self, sigma_f: float, tau: float, rng: np.random.Generator,
                 window: int = 96):
        self.sigma_f = sigma_f
        self.tau = tau
        self.rng = rng
        # beyond this lag the correlation is < ~1e-10 and carries nothing
        self.max_lag = math.sqrt(2.0 * tau * math.log(1e10))
        self.window = window
        self.history: deque[tuple[float, float]] = deque()

    def sample(self, t: float) -> float:
        while self.history and (t - self.history[0][0] > self.max_lag
                                or len(self.history) >= self.window):
            self.history.popleft()
        if not self.history:
            value = self.sigma_f * self.rng.standard_normal()
        else:
            ts = np.array([h[0] for h in self.history])
            vs = np.array([h[1] for h in self.history])
            k_xx = squared_exponential(ts[:, None], ts[None, :], self.sigma_f, self.tau)
            k_xx[np.diag_indices_from(k_xx)] += self._JITTER * self.sigma_f**2
            k_star = squared_exponential(ts, t, self.sigma_f, self.tau)
            sol = linalg.cho_solve(linalg.cho_factor(k_xx, lower=True), k_star)
            mean = float(sol @ vs)
            var = max(self.sigma_f**2 - float(k_star @ sol), 0.0)
            value = mean + math.sqrt(var) * self.rng.standard_normal()
        self.history.append((t, value))
        return value


@dataclass
class WindField:
    """Paired speed/direction processes plus their noisy measurements."""

    spec: WindFieldSpec
    seed: int = 0
    _speed_gp: IncrementalGP = field(init=False, repr=False)
    _dir_gp: IncrementalGP = field(init=False, repr=False)
    _noise_rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        root = np.random.default_rng(self.seed)
        seeds = root.spawn(3)
        self._speed_gp = IncrementalGP(self.spec.sigma_speed, self.spec.tau, seeds[0])
        self._dir_gp = IncrementalGP(self.spec.sigma_direction, self.spec.tau, seeds[1])
        self._noise_rng = seeds[2]

    def step(self, t: float) -> tuple[float, float, float, float]:
        """True and measured (speed, direction) at simulation time t.

        Returns (V_w, theta_w, V_hat, theta_hat); true speed floored at 0.
        """
        v_w = max(float(self.spec.speed_mean(t)) + self._speed_gp.sample(t), 0.0)
        theta_w = float(self.spec.direction_mean(t)) + self._dir_gp.sample(t)
        v_hat = v_w + self.spec.noise_speed * self._noise_rng.standard_normal()
        theta_hat = theta_w + self.spec.noise_direction * self._noise_rng.standard_normal()
        return v_w, theta_w, v_hat, theta_hat
