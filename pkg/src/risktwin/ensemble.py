"""Precomputed sample ensembles and their on-disk format.

An ensemble holds N rows of basic random variables together with cached
forward-model outputs and cached limit-state values, so the online phase
never has to call the forward model. Files are columnar binary: a JSON
header (scenario id, seed, N, variable names/units) followed by row-major
float64 blocks; a sibling ``.manifest.txt`` records provenance.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_MAGIC = b"RTEN1\n"


class EnsembleError(ValueError):
    pass


@dataclass
class PrecomputedEnsemble:
    """Offline sample set with cached model outputs and limit-state values.

    provenance is ``"prior"`` or ``"failure-conditional:<limit-state-id>"``.
    """

    samples: np.ndarray                    # (N, n_x)
    model_outputs: np.ndarray              # (N, n_y)
    variable_names: list[str]
    provenance: str = "prior"
    seed: int | None = None
    scenario_id: str = ""
    units: list[str] = field(default_factory=list)
    limit_state_values: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        self.model_outputs = np.atleast_2d(np.asarray(self.model_outputs, dtype=float))
        if self.samples.shape[0] < 1:
            raise EnsembleError("ensemble must contain at least one row")
        if self.model_outputs.shape[0] != self.samples.shape[0]:
            raise EnsembleError(
                f"model_outputs rows ({self.model_outputs.shape[0]}) != "
                f"samples rows ({self.samples.shape[0]})"
            )
        for ls_id, g in self.limit_state_values.items():
            g = np.asarray(g, dtype=float)
            if g.shape[0] != self.samples.shape[0]:
                raise EnsembleError(f"limit-state '{ls_id}' row count mismatch")
            self.limit_state_values[ls_id] = g
        self._check_failure_conditional()

    def _check_failure_conditional(self):
        """Failure-conditional ensembles must satisfy G <= 0 on every row."""
        if not self.provenance.startswith("failure-conditional:"):
            return
        ls_id = self.provenance.split(":", 1)[1]
        g = self.limit_state_values.get(ls_id)
        if g is None:
            raise EnsembleError(f"failure-conditional ensemble lacks G values for '{ls_id}'")
        if np.any(g > 0):
            raise EnsembleError(
                f"failure-conditional ensemble for '{ls_id}' has rows with G > 0"
            )

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.samples[:, self.variable_names.index(name)]

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------

    def save(self, path: str | Path, extra_manifest: dict | None = None) -> Path:
        path = Path(path)
        header = {
            "scenario_id": self.scenario_id,
            "seed": self.seed,
            "n": int(self.n),
            "variable_names": self.variable_names,
            "units": self.units,
            "provenance": self.provenance,
            "n_outputs": int(self.model_outputs.shape[1]),
            "limit_states": sorted(self.limit_state_values.keys()),
        }
        blob = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as f:
            f.write(_MAGIC)
            f.write(struct.pack("<I", len(blob)))
            f.write(blob)
            f.write(np.ascontiguousarray(self.samples, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(self.model_outputs, dtype="<f8").tobytes())
            for ls_id in header["limit_states"]:
                f.write(np.ascontiguousarray(self.limit_state_values[ls_id], dtype="<f8").tobytes())
        manifest = path.with_suffix(path.suffix + ".manifest.txt")
        lines = [
            f"ensemble: {path.name}",
            f"scenario: {self.scenario_id}",
            f"provenance: {self.provenance}",
            f"seed: {self.seed}",
            f"rows: {self.n}",
            f"variables: {', '.join(self.variable_names)}",
        ]
        for k, v in sorted((extra_manifest or {}).items()):
            lines.append(f"{k}: {v}")
        manifest.write_text("\n".join(lines) + "\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "PrecomputedEnsemble":
        path = Path(path)
        with open(path, "rb") as f:
            magic = f.read(len(_MAGIC))
            if magic != _MAGIC:
                raise EnsembleError(f"{path}: not an ensemble file")
            (hlen,) = struct.unpack("<I", f.read(4))
            header = json.loads(f.read(hlen))
            n = header["n"]
            n_x = len(header["variable_names"])
            n_y = header["n_outputs"]
            samples = np.frombuffer(f.read(8 * n * n_x), dtype="<f8").reshape(n, n_x).copy()
            outputs = np.frombuffer(f.read(8 * n * n_y), dtype="<f8").reshape(n, n_y).copy()
            g_values = {}
            for ls_id in header["limit_states"]:
                g_values[ls_id] = np.frombuffer(f.read(8 * n), dtype="<f8").copy()
        return cls(
            samples=samples,
            model_outputs=outputs,
            variable_names=list(header["variable_names"]),
            provenance=header["provenance"],
            seed=header["seed"],
            scenario_id=header["scenario_id"],
            units=list(header["units"]),
            limit_state_values=g_values,
        )


def write_asset_manifest(path: str | Path, entries: list[dict], prep_seconds: float) -> Path:
    """Write the offline-phase manifest listing every produced ensemble."""
    path = Path(path)
    lines = [f"prepared_wall_time_s: {prep_seconds:.3f}",
             f"created_unix: {int(time.time())}"]
    for e in entries:
        lines.append(json.dumps(e, sort_keys=True))
    path.write_text("\n".join(lines) + "\n")
    return path
