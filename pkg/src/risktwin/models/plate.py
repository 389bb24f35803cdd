"""Simply supported square plate on four corner supports.

A weight w at (u0, v0) splits into four support reactions by bilinear
lever arms; the reactions are the measured quantities and always sum to w.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PlateParams:
    side: float = 0.75          # effective side length l, m
    sigma_eps: float = 0.1      # sensor noise, kg
    weight_lo: float = 0.0      # weight prior bounds, kg
    weight_hi: float = 10.0

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError(f"plate side must be > 0, got {self.side}")
        if self.sigma_eps <= 0:
            raise ValueError(f"sensor noise must be > 0, got {self.sigma_eps}")


def plate_reactions(w, u0, v0, params: PlateParams = PlateParams()):
    """Reaction forces (f_A, f_B, f_C, f_D) for weight w at (u0, v0).

    Accepts scalars or equally shaped arrays; reactions carry w's units.
    """
    w = np.asarray(w, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    l = params.side
    if np.any(u0 < 0) or np.any(u0 > l) or np.any(v0 < 0) or np.any(v0 > l):
        raise ValueError(f"load position outside the plate [0, {l}]^2")
    if np.any(w < 0):
        raise ValueError("weight must be non-negative")
    l2 = l * l
    f_a = w * (l - u0) * v0 / l2
    f_b = w * u0 * v0 / l2
    f_c = w * (l - u0) * (l - v0) / l2
    f_d = w * u0 * (l - v0) / l2
    return f_a, f_b, f_c, f_d


def plate_measurement_map(samples: np.ndarray, params: PlateParams = PlateParams()) -> np.ndarray:
    """Forward model over ensemble rows [w, u0, v0] -> 4 reaction channels."""
    samples = np.atleast_2d(samples)
    f_a, f_b, f_c, f_d = plate_reactions(
        samples[:, 0], samples[:, 1], samples[:, 2], params
    )
    return np.column_stack([f_a, f_b, f_c, f_d])
