"""Append-only session traces: length-prefixed JSON records behind a
self-describing header.

Record kinds: raw-sensor | observation | frame | command | audit. The
sequence number is gap-free per session, and serialization is canonical
(sorted keys, shortest float repr), so a re-run with identical seed and
config produces byte-identical files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

_MAGIC = b"RTTR1\n"
KINDS = ("raw-sensor", "observation", "frame", "command", "audit")


class TraceError(RuntimeError):
    pass


def _dumps(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True).encode()


class TraceWriter:
    def __init__(self, path: str | Path, scenario_id: str, config_hash: str, seed: int):
        self.path = Path(path)
        self._f = open(self.path, "wb")
        self._seq = 0
        header = {"scenario": scenario_id, "config_hash": config_hash, "seed": seed}
        blob = _dumps(header)
        self._f.write(_MAGIC)
        self._f.write(struct.pack("<I", len(blob)))
        self._f.write(blob)

    def append(self, kind: str, t: int, clock: float, payload: dict) -> int:
        if kind not in KINDS:
            raise ValueError(f"unknown record kind '{kind}'")
        rec = {"seq": self._seq, "kind": kind, "t": t, "clock": clock, "payload": payload}
        blob = _dumps(rec)
        self._f.write(struct.pack("<I", len(blob)))
        self._f.write(blob)
        self._seq += 1
        return self._seq - 1

    def flush(self):
        self._f.flush()

    def close(self):
        if not self._f.closed:
            self._f.flush()
            self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class TraceReader:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._f = open(self.path, "rb")
        magic = self._f.read(len(_MAGIC))
        if magic != _MAGIC:
            raise TraceError(f"{self.path}: not a trace file")
        self.header = self._read_blob("header")

    def _read_blob(self, what: str):
        raw = self._f.read(4)
        if len(raw) == 0:
            return None
        if len(raw) < 4:
            raise TraceError(f"{self.path}: truncated {what} length")
        (n,) = struct.unpack("<I", raw)
        blob = self._f.read(n)
        if len(blob) < n:
            raise TraceError(f"{self.path}: truncated {what}")
        try:
            return json.loads(blob)
        except json.JSONDecodeError as e:
            raise TraceError(f"{self.path}: corrupt {what}: {e}") from e

    def __iter__(self):
        expected = 0
        while True:
            rec = self._read_blob(f"record {expected}")
            if rec is None:
                return
            if rec.get("seq") != expected:
                raise TraceError(
                    f"{self.path}: sequence gap (expected {expected}, got {rec.get('seq')})"
                )
            expected += 1
            yield rec

    def records(self, kind: str | None = None):
        for rec in self:
            if kind is None or rec["kind"] == kind:
                yield rec

    def frames(self):
        for rec in self.records("frame"):
            yield rec["payload"]

    def close(self):
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
