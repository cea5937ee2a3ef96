"""Multi-bounce solve: primary sweeps, virtual-source discovery, recursion.

The solve walks a source tree. Depth 0 holds the TX apertures; each deeper
level holds reflector/RIS sides whose incident field (sampled from their
parent's map) clears the relative energy threshold. Every node sweeps its
own half-space with all other segments rasterized as obstacles, and every
local map is summed into the global total. Work at a given depth is
processed in a fixed (object id, side) order so results are bit-stable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .propagation import propagate_sweep, rasterize_blockers
from .scatterers import (
    LocalFrame,
    VirtualSource,
    accumulate_into_global,
    incident_side,
    make_ris_source,
    make_rough_source,
    make_specular_source,
    obstacles_for,
    sample_incident_field,
    segment_frame,
    sweep_virtual_source,
)
from .scenario import Scenario, RxArray, validate_scenario
from .spectral import ComplexField, CoverageMap, eval_map_at_points
from .wavefronts import rasterize_excitation, synthesize


@dataclass
class SourceNode:
    """One entry of the source tree: who radiated, how strongly, and whether pruned."""

    object_id: str
    depth: int
    peak_incident: float
    pruned: bool
    side: int = 0
    parent: Optional[str] = None


@dataclass
class SolveReport:
    total: CoverageMap
    per_bounce: list[CoverageMap]
    source_tree: list[SourceNode]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def depth_reached(self) -> int:
        return len(self.per_bounce) - 1


@dataclass
class _Job:
    source_id: str
    depth: int
    vs: VirtualSource
    sort_key: tuple


def _tx_job(scenario: Scenario, i: int, base_dir) -> _Job:
    tx = scenario.tx[i]
    lam = scenario.physical.wavelength
    exc = synthesize(tx, lam, base_dir)
    g = scenario.grid
    n = max(2, int(math.floor(tx.length / g.dy)) + 1)
    y_off = -((n - 1) / 2.0) * g.dy
    samples = rasterize_excitation(exc, n, g.dy, y_off)
    frame = LocalFrame(origin=tx.center, rotation=tx.orientation, normal_sign=1)
    vs = VirtualSource(
        field=ComplexField(samples=samples, dy=g.dy, y_offset=y_off),
        frame=frame,
        bounce_depth=1,  # depth bookkeeping for TX handled by the job itself
        parent_object=None,
    )
    return _Job(source_id=f"tx[{i}]", depth=0, vs=vs, sort_key=(0, i, 0))


def _tx_on_global_grid(scenario: Scenario, job: _Job) -> bool:
    """Untilted TX on the x = 0 plane sweeps the global grid directly."""
    f = job.vs.frame
    return f.is_identity and abs(f.origin[0]) <= 1e-12


def _sweep_identity_tx(scenario: Scenario, job: _Job, base_dir) -> CoverageMap:
    """Global-grid sweep for an untilted TX: elements land on their nearest rows."""
    tx = scenario.tx[int(job.source_id[3:-1])]
    g = scenario.grid
    exc = synthesize(tx, scenario.physical.wavelength, base_dir)
    src = rasterize_excitation(exc, g.Ny, g.dy, g.y0 - tx.center[1])
    mask = rasterize_blockers(obstacles_for(scenario), g)
    return propagate_sweep(
        ComplexField(samples=src, dy=g.dy, y_offset=g.y0),
        mask,
        g,
        scenario.physical,
        theta=0.0,
        padding_factor=scenario.solver.padding_factor,
        apodization_width=scenario.solver.apodization_width,
    )


def solve(scenario: Scenario, base_dir=".") -> SolveReport:
    """Compute the total coverage map and its per-bounce decomposition."""
    validate_scenario(scenario)
    g = scenario.grid
    lam = scenario.physical.wavelength
    settings = scenario.solver
    timings = {"synthesis": 0.0, "sweeps": 0.0, "discovery": 0.0, "accumulate": 0.0}

    def global_zero() -> CoverageMap:
        return CoverageMap(columns=np.zeros((g.Kx, g.Ny), dtype=np.complex128), grid=g)

    t0 = time.perf_counter()
    jobs = [_tx_job(scenario, i, base_dir) for i in range(len(scenario.tx))]
    timings["synthesis"] += time.perf_counter() - t0

    objects = [(f"reflector[{i}]", r) for i, r in enumerate(scenario.reflectors)]
    objects += [(f"ris[{i}]", p) for i, p in enumerate(scenario.ris)]

    per_bounce: list[CoverageMap] = []
    tree: list[SourceNode] = []
    peak0 = 0.0
    depth = 0
    while jobs and depth <= settings.max_bounce_depth:
        jobs.sort(key=lambda j: j.sort_key)
        bounce_map = global_zero()
        results = []
        for job in jobs:
            t0 = time.perf_counter()
            if job.depth == 0 and _tx_on_global_grid(scenario, job):
                local = _sweep_identity_tx(scenario, job, base_dir)
                frame = LocalFrame(origin=(0.0, 0.0), rotation=0.0)
                direct = True
            else:
                local = sweep_virtual_source(job.vs, scenario, exclude_id=job.source_id if job.depth else None)
                frame = job.vs.frame
                direct = False
            timings["sweeps"] += time.perf_counter() - t0
            if local is None:
                continue
            t0 = time.perf_counter()
            if direct:
                bounce_map.columns[:] += local.columns
            else:
                accumulate_into_global(local, frame, bounce_map, lam)
            timings["accumulate"] += time.perf_counter() - t0
            results.append((job, local, frame))
        per_bounce.append(bounce_map)
        if depth == 0:
            peak0 = float(np.abs(bounce_map.columns).max())
            for job in jobs:
                tree.append(SourceNode(job.source_id, 0, peak0, pruned=False))

        # Discover children for the next depth.
        next_jobs: list[_Job] = []
        if depth < settings.max_bounce_depth and peak0 > 0.0:
            t0 = time.perf_counter()
            threshold = settings.source_energy_threshold * peak0
            for job, local, frame in results:
                parent_point = job.vs.frame.origin
                for obj_index, (obj_id, obj) in enumerate(objects):
                    if obj_id == job.source_id:
                        continue  # no immediate self-bounce
                    side = incident_side(obj, parent_point)
                    if side == 0:
                        continue
                    incident = sample_incident_field(
                        local, obj, side, lam, map_frame=frame, fill_outside=0.0
                    )
                    peak = float(np.abs(incident.samples).max())
                    pruned = peak < threshold
                    tree.append(
                        SourceNode(obj_id, depth + 1, peak, pruned, side, job.source_id)
                    )
                    if pruned:
                        continue
                    if obj_id.startswith("reflector"):
                        if obj.roughness is not None and obj.roughness.h_rms > 0:
                            vs = make_rough_source(incident, obj, side, lam, obj_id)
                        else:
                            vs = make_specular_source(incident, obj, side, obj_id)
                    else:
                        vs = make_ris_source(incident, obj, side, obj_id)
                    next_jobs.append(
                        _Job(
                            source_id=obj_id,
                            depth=depth + 1,
                            vs=vs,
                            sort_key=(depth + 1, obj_index, side),
                        )
                    )
            timings["discovery"] += time.perf_counter() - t0
        jobs = next_jobs
        depth += 1

    total = global_zero()
    for m in per_bounce:
        total.columns[:] += m.columns
    return SolveReport(total=total, per_bounce=per_bounce, source_tree=tree, timings=timings)


def rx_element_points(rx: RxArray) -> np.ndarray:
    frame = segment_frame(rx, 1)
    spacing = rx.length / rx.element_count
    offs = (np.arange(rx.element_count) - (rx.element_count - 1) / 2.0) * spacing
    return frame.to_global(np.column_stack([np.zeros(rx.element_count), offs]))


def compute_rx_power(cmap: CoverageMap, rx: RxArray, wavelength: float) -> dict:
    """Per-element and combined received power at an RX array.

    Fully digital arrays report |E_i|^2 per element plus their sum; analog
    arrays report |sum w_i E_i|^2 for the configured weight vector.
    """
    pts = rx_element_points(rx)
    g = cmap.grid
    x_max = (g.Kx - 1) * g.dx
    y_max = g.y0 + (g.Ny - 1) * g.dy
    if (
        pts[:, 0].min() < -1e-9
        or pts[:, 0].max() > x_max + 1e-9
        or pts[:, 1].min() < g.y0 - 1e-9
        or pts[:, 1].max() > y_max + 1e-9
    ):
        raise ValueError("rx array extends outside the computed map")
    amps = eval_map_at_points(cmap, pts, wavelength)
    per_element = np.abs(amps) ** 2
    if rx.combining == "analog":
        combined = float(np.abs(np.sum(rx.weights * amps)) ** 2)
    else:
        combined = float(per_element.sum())
    return {
        "combining": rx.combining,
        "per_element": [float(p) for p in per_element],
        "element_amplitudes": [[float(a.real), float(a.imag)] for a in amps],
        "combined": combined,
    }
