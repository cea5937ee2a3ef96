"""Local HTTP service wrapping the solver for the browser client.

Jobs are held in a bounded in-memory store (no persistence) and solved on
a worker pool; state transitions are atomic and only move forward
(queued -> running -> done | failed). A scenario posted here produces the
same field bytes as the run command on the same machine.
"""

from __future__ import annotations

import io
import itertools
import json
import threading
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import __version__
from .iofmt import field_dump_bytes, render_heatmap, scenario_overlay
from .scenario import Scenario, ScenarioError, scenario_from_dict
from .schema import SCENARIO_SCHEMA
from .solver import SolveReport, compute_rx_power, solve


@dataclass
class Job:
    id: str
    scenario: Scenario
    status: str = "queued"  # queued | running | done | failed
    error: Optional[str] = None
    report: Optional[SolveReport] = None
    timings: dict = field(default_factory=dict)
    created: float = field(default_factory=time.time)


class JobStore:
    """LRU-bounded job registry with atomic state transitions."""

    _ORDER = {"queued": 0, "running": 1, "done": 2, "failed": 2}

    def __init__(self, max_jobs: int = 32):
        self.max_jobs = max_jobs
        self._jobs: OrderedDict[str, Job] = OrderedDict()
        self._lock = threading.Lock()
        self._counter = itertools.count(1)

    def create(self, scenario: Scenario) -> Job:
        with self._lock:
            job = Job(id=f"job-{next(self._counter):06d}", scenario=scenario)
            self._jobs[job.id] = job
            while len(self._jobs) > self.max_jobs:
                victim = next(
                    (k for k, v in self._jobs.items() if v.status in ("done", "failed")), None
                )
                if victim is None:
                    break
                del self._jobs[victim]
            return job

    def get(self, job_id: str) -> Optional[Job]:
        with self._lock:
            return self._jobs.get(job_id)

    def transition(self, job: Job, status: str, **updates) -> None:
        with self._lock:
            if self._ORDER[status] < self._ORDER[job.status]:
                raise RuntimeError(f"illegal transition {job.status} -> {status}")
            job.status = status
            for k, v in updates.items():
                setattr(job, k, v)


def create_app(ui_dir=None, max_jobs: int = 32, workers: Optional[int] = None) -> FastAPI:
    app = FastAPI(title="nearfield", version=__version__)
    store = JobStore(max_jobs=max_jobs)
    pool = ThreadPoolExecutor(max_workers=workers)
    app.state.jobs = store

    def run_job(job: Job) -> None:
        store.transition(job, "running")
        try:
            report = solve(job.scenario)
            store.transition(job, "done", report=report, timings=report.timings)
        except Exception as e:  # failure surfaces via job status
            store.transition(job, "failed", error=str(e))

    @app.post("/api/simulate", status_code=202)
    async def simulate(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "request body must be JSON"}, status_code=400)
        try:
            scenario = scenario_from_dict(body)
        except ScenarioError as e:
            return JSONResponse({"error": str(e)}, status_code=400)
        job = store.create(scenario)
        pool.submit(run_job, job)
        return {"job_id": job.id}

    def _job_or_404(job_id: str):
        job = store.get(job_id)
        if job is None:
            return None, JSONResponse({"error": f"unknown job {job_id}"}, status_code=404)
        return job, None

    def _done_or_error(job_id: str):
        job, err = _job_or_404(job_id)
        if err:
            return None, err
        if job.status == "failed":
            return None, JSONResponse({"error": job.error}, status_code=409)
        if job.status != "done":
            return None, JSONResponse({"error": f"job is {job.status}"}, status_code=409)
        return job, None

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        job, err = _job_or_404(job_id)
        if err:
            return err
        return {"job_id": job.id, "status": job.status, "error": job.error, "timings": job.timings}

    @app.get("/api/jobs/{job_id}/field")
    def job_field(job_id: str):
        job, err = _done_or_error(job_id)
        if err:
            return err
        g = job.scenario.grid
        data = field_dump_bytes(
            job.report.total.columns, g.dx, g.dy, job.scenario.physical.frequency
        )
        return Response(content=data, media_type="application/octet-stream")

    @app.get("/api/jobs/{job_id}/heatmap.png")
    def job_heatmap(job_id: str, db: float = 60.0, overlay: bool = True):
        job, err = _done_or_error(job_id)
        if err:
            return err
        g = job.scenario.grid
        buf = io.BytesIO()
        render_heatmap(
            job.report.total.columns,
            g.dx,
            g.dy,
            buf,
            db_range=db,
            overlay=scenario_overlay(job.scenario) if overlay else None,
        )
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/api/jobs/{job_id}/rx")
    def job_rx(job_id: str):
        job, err = _done_or_error(job_id)
        if err:
            return err
        lam = job.scenario.physical.wavelength
        return [compute_rx_power(job.report.total, r, lam) for r in job.scenario.rx]

    @app.get("/api/schema")
    def schema():
        return SCENARIO_SCHEMA

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
