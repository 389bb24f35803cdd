"""Streaming service boundary: frame streams, command endpoint, session
lifecycle, and trace replay over HTTP.

Frames are pushed as server-sent events. Slow consumers never block the
step loop: each subscriber holds a latest-frame slot, so intermediate
frames are dropped and only the newest is delivered. Commands are always
queued (never dropped) and apply at step boundaries.
"""

from __future__ import annotations

import asyncio
import json
import math
import threading
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse, StreamingResponse

from .runtime import Session
from .scenario import load_scenario
from .trace import TraceReader


def _sse(payload: dict) -> str:
    return f"data: {json.dumps(payload, sort_keys=True)}\n\n"


class _Subscriber:
    """Latest-frame slot: backpressure drops intermediate frames."""

    def __init__(self):
        self.event = asyncio.Event()
        self.latest: dict | None = None
        self.loop = asyncio.get_running_loop()

    def push(self, frame: dict):
        self.latest = frame
        self.loop.call_soon_threadsafe(self.event.set)


class SessionRunner:
    """Owns one session and its serialized background step loop."""

    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()
        self.running = False
        self.subscribers: list[_Subscriber] = []
        self._thread: threading.Thread | None = None
        session.subscribers.append(self._publish)

    def _publish(self, frame: dict):
        for sub in list(self.subscribers):
            sub.push(frame)

    def step(self, n: int = 1) -> dict:
        with self.lock:
            frame = None
            for _ in range(n):
                frame = self.session.step()
            return frame

    def start(self):
        if self.running:
            return
        self.running = True

        def loop():
            import time as _time
            while self.running:
                t0 = _time.perf_counter()
                self.step()
                rest = self.session.scenario.dt - (_time.perf_counter() - t0)
                if rest > 0:
                    _time.sleep(rest)

        self._thread = threading.Thread(target=loop, daemon=True)
        self._thread.start()

    def pause(self):
        self.running = False
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None


def create_app(scenarios: dict | None = None, trace_dir: str | Path | None = None) -> FastAPI:
    """Build the service; ``scenarios`` maps ids to scenario objects or
    config paths (defaults to the three bundled scenarios)."""
    app = FastAPI(title="risktwin")
    registry: dict[str, SessionRunner] = {}
    scenario_sources = scenarios or {"plate": "plate", "beam-arm": "beam-arm",
                                     "turbine": "turbine"}
    trace_dir = Path(trace_dir) if trace_dir else None
    counter = {"n": 0}

    def _bad(msg: str, code: int = 400) -> JSONResponse:
        return JSONResponse({"error": msg}, status_code=code)

    @app.get("/scenarios")
    def list_scenarios():
        return {"scenarios": sorted(scenario_sources)}

    @app.post("/sessions")
    def create_session(body: dict):
        sid = body.get("scenario")
        if sid not in scenario_sources:
            return _bad(f"unknown scenario '{sid}'")
        source = scenario_sources[sid]
        scenario = source if not isinstance(source, (str, Path)) else load_scenario(source)
        seed = int(body.get("seed", scenario.seed))
        counter["n"] += 1
        key = f"{sid}-{seed}-{counter['n']}"
        trace_path = trace_dir / f"{key}.rttr" if trace_dir else None
        session = Session(scenario, seed=seed, trace_path=trace_path)
        registry[key] = SessionRunner(session)
        return {"session": key, "scenario": sid, "seed": seed}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": [
            {"session": key, "t": r.session.t, "running": r.running,
             "scenario": r.session.scenario.id}
            for key, r in registry.items()
        ]}

    def _runner(key: str) -> SessionRunner | None:
        return registry.get(key)

    @app.post("/sessions/{key}/step")
    def step_session(key: str, n: int = 1):
        r = _runner(key)
        if r is None:
            return _bad(f"no session '{key}'", 404)
        if r.running:
            return _bad("session is free-running; pause it to step manually", 409)
        return r.step(max(1, min(n, 10_000)))

    @app.post("/sessions/{key}/start")
    def start_session(key: str):
        r = _runner(key)
        if r is None:
            return _bad(f"no session '{key}'", 404)
        r.start()
        return {"running": True}

    @app.post("/sessions/{key}/pause")
    def pause_session(key: str):
        r = _runner(key)
        if r is None:
            return _bad(f"no session '{key}'", 404)
        r.pause()
        return {"running": False}

    @app.post("/sessions/{key}/command")
    def command(key: str, body: dict):
        r = _runner(key)
        if r is None:
            return _bad(f"no session '{key}'", 404)
        ack = r.session.submit_command(body)
        status = 200 if ack.get("accepted") else 422
        return JSONResponse(ack, status_code=status)

    @app.post("/sessions/{key}/rebaseline")
    def rebaseline(key: str, body: dict | None = None):
        r = _runner(key)
        if r is None:
            return _bad(f"no session '{key}'", 404)
        with r.lock:
            audit = r.session.rebaseline(seed=(body or {}).get("seed"))
        return audit

    @app.get("/sessions/{key}/frames")
    async def frames(key: str):
        r = _runner(key)
        if r is None:
            return _bad(f"no session '{key}'", 404)
        sub = _Subscriber()
        r.subscribers.append(sub)

        async def stream():
            try:
                if r.session.frames:
                    yield _sse(r.session.frames[-1])
                while True:
                    await sub.event.wait()
                    sub.event.clear()
                    if sub.latest is not None:
                        yield _sse(sub.latest)
            finally:
                r.subscribers.remove(sub)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/sessions/{key}/snapshot")
    def snapshot(key: str):
        r = _runner(key)
        if r is None:
            return _bad(f"no session '{key}'", 404)
        s = r.session
        return {
            "session": s.id, "t": s.t, "clock": s.clock,
            "baseline": s.baseline_id,
            "frame": s.frames[-1] if s.frames else None,
        }

    @app.get("/replay")
    async def replay(trace: str, speed: float = 1.0):
        path = Path(trace)
        if not path.exists():
            return _bad(f"trace '{trace}' not found", 404)
        if speed <= 0:
            return _bad("speed must be > 0")

        async def stream():
            reader = TraceReader(path)
            prev_clock = None
            try:
                for rec in reader.records("frame"):
                    frame = rec["payload"]
                    if prev_clock is not None:
                        delay = (frame["clock"] - prev_clock) / speed
                        if delay > 0 and math.isfinite(delay):
                            await asyncio.sleep(delay)
                    prev_clock = frame["clock"]
                    yield _sse(frame)
            finally:
                reader.close()

        return StreamingResponse(stream(), media_type="text/event-stream")

    app.state.registry = registry
    return app


def serve(bind: str | None = None, scenarios: dict | None = None,
          trace_dir: str | Path | None = None):
    """Host the service; bind address from the argument or RISKTWIN_BIND."""
    import os

    import uvicorn

    bind = bind or os.environ.get("RISKTWIN_BIND", "127.0.0.1:8710")
    host, _, port = bind.partition(":")
    app = create_app(scenarios, trace_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8710), log_level="warning")
