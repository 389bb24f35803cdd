"""Columnar lookup tables for blade geometry and aerodynamic coefficients.

Plain text files, numeric columns separated by whitespace, '#' comments.
Interpolation is linear; queries outside the domain clamp to the nearest
endpoint (the power-coefficient path warns when that happens).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np


class TableDomainWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LookupTable:
    x: np.ndarray
    y: np.ndarray
    name: str = ""

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValueError(f"table '{self.name}' needs two equal 1-d columns of >= 2 rows")
        if np.any(np.diff(x) <= 0):
            raise ValueError(f"table '{self.name}' abscissae must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def __call__(self, q, warn_clamp: bool = False):
        q = np.asarray(q, dtype=float)
        if warn_clamp and (np.any(q < self.x[0]) or np.any(q > self.x[-1])):
            warnings.warn(
                f"table '{self.name}' queried outside [{self.x[0]:g}, {self.x[-1]:g}]; "
                "clamping to nearest endpoint",
                TableDomainWarning,
                stacklevel=2,
            )
        if q.size >= 4096:
            return self._fast_eval(q)
        return np.interp(q, self.x, self.y)

    def _fast_eval(self, q: np.ndarray) -> np.ndarray:
        """Linear interpolation via a dense uniform resample of the table;
        exact at the resample resolution, much faster than searchsorted on
        large query blocks."""
        cache = getattr(self, "_uniform", None)
        if cache is None:
            lo, hi = self.domain
            grid = np.linspace(lo, hi, 4097)
            cache = (lo, (len(grid) - 1) / (hi - lo), np.interp(grid, self.x, self.y))
            object.__setattr__(self, "_uniform", cache)
        lo, inv_step, values = cache
        pos = np.clip((q - lo) * inv_step, 0.0, len(values) - 1.000001)
        idx = pos.astype(np.int64)
        frac = pos - idx
        return values[idx] * (1.0 - frac) + values[idx + 1] * frac


def load_table(path: str | Path, name: str = "") -> LookupTable:
    data = np.loadtxt(path, comments="#")
    if data.ndim != 2 or data.shape[1] < 2:
        raise ValueError(f"{path}: expected at least two numeric columns")
    return LookupTable(data[:, 0], data[:, 1], name or Path(path).stem)


def default_table(filename: str) -> LookupTable:
    """Load one of the tables shipped under risktwin/scenarios/data."""
    ref = resources.files("risktwin.scenarios").joinpath("data").joinpath(filename)
    with resources.as_file(ref) as path:
        return load_table(path, Path(filename).stem)
