"""Deterministic batch dataset generation.

A batch spec holds a base scenario plus sampling ranges; sample i is drawn
from a generator seeded with (master_seed, i), so any sample can be
regenerated independently and re-runs are bit-identical. Completed samples
are tracked in a manifest and skipped on resume.

Batch spec layout (YAML):

    count: 100
    master_seed: 7
    base: { ...scenario mapping... }
    ranges:
      wavefront:                  # choices, picked uniformly
        - {kind: gaussian, w0_m: 0.02}
        - {kind: focused, focal_length_m: 0.5}
      reflectors:
        count: [0, 2]             # inclusive integer range
        x_m: [0.3, 0.7]           # uniform floats
        y_m: [-0.1, 0.1]
        length_m: [0.1, 0.2]
        orientation_deg: [20.0, 70.0]
        reflection_coefficient: [0.5, 1.0]
        roughness:                # optional; seed is drawn per sample
          h_rms_m: [0.0, 0.0005]
          correlation_length_m: [0.002, 0.004]
      blockers:
        count: [0, 1]
        x_m: [0.2, 0.5]
        y_m: [-0.1, 0.1]
        length_m: [0.05, 0.15]
        thickness_m: [0.01, 0.05]
        attenuation: [0.0, 0.3]
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np
import yaml

from .iofmt import scenario_hash, write_field_dump
from .scenario import ScenarioError, scenario_from_dict, serialize_scenario
from .solver import compute_rx_power, solve

SHARD_SIZE = 1000
MANIFEST_NAME = "dataset_manifest.json"


def load_batch_spec(text: str) -> dict:
    try:
        spec = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ScenarioError(f"batch spec syntax error: {e}") from e
    if not isinstance(spec, dict):
        raise ScenarioError("batch spec root must be a mapping")
    for key in ("count", "master_seed", "base"):
        if key not in spec:
            raise ScenarioError(f"batch spec field '{key}' is required")
    if int(spec["count"]) < 1:
        raise ScenarioError("count must be >= 1")
    base = scenario_from_dict(spec["base"])  # validates the base scenario
    _validate_ranges(spec.get("ranges", {}) or {}, base)
    return spec


def _validate_ranges(ranges: dict, base) -> None:
    g = base.grid
    for section in ("reflectors", "blockers"):
        r = ranges.get(section)
        if not r:
            continue
        for key, lo_hi in r.items():
            if key in ("count", "roughness"):
                continue
            lo, hi = float(lo_hi[0]), float(lo_hi[1])
            if lo > hi:
                raise ScenarioError(f"ranges.{section}.{key}: empty range [{lo}, {hi}]")
            if key == "x_m" and not (0.0 <= lo and hi <= g.Lx):
                raise ScenarioError(f"ranges.{section}.x_m outside domain [0, {g.Lx}]")
            if key == "y_m" and not (g.y0 <= lo and hi <= -g.y0):
                raise ScenarioError(f"ranges.{section}.y_m outside domain [{g.y0}, {-g.y0}]")


def _draw(rng, lo_hi) -> float:
    lo, hi = float(lo_hi[0]), float(lo_hi[1])
    return float(rng.uniform(lo, hi))


def _draw_count(rng, lo_hi) -> int:
    lo, hi = int(lo_hi[0]), int(lo_hi[1])
    return int(rng.integers(lo, hi + 1))


def sample_scenario_dict(spec: dict, index: int) -> dict:
    """Scenario mapping for sample `index`, fully determined by (master_seed, index)."""
    rng = np.random.default_rng(np.random.SeedSequence([int(spec["master_seed"]), index]))
    data = copy.deepcopy(spec["base"])
    ranges = spec.get("ranges", {}) or {}

    wf_choices = ranges.get("wavefront")
    if wf_choices:
        pick = copy.deepcopy(wf_choices[int(rng.integers(0, len(wf_choices)))])
        for t in data.get("tx", []):
            t["wavefront"] = pick

    refl = ranges.get("reflectors")
    if refl:
        out = []
        for _ in range(_draw_count(rng, refl.get("count", [1, 1]))):
            r = {
                "center_m": [_draw(rng, refl["x_m"]), _draw(rng, refl["y_m"])],
                "length_m": _draw(rng, refl["length_m"]),
                "orientation_deg": _draw(rng, refl.get("orientation_deg", [0.0, 0.0])),
                "reflection_coefficient": _draw(
                    rng, refl.get("reflection_coefficient", [1.0, 1.0])
                ),
            }
            rough = refl.get("roughness")
            if rough:
                r["roughness"] = {
                    "h_rms_m": _draw(rng, rough["h_rms_m"]),
                    "correlation_length_m": _draw(rng, rough["correlation_length_m"]),
                    "seed": int(rng.integers(0, 2**31 - 1)),
                }
            out.append(r)
        data["reflectors"] = (data.get("reflectors") or []) + out

    blk = ranges.get("blockers")
    if blk:
        out = []
        for _ in range(_draw_count(rng, blk.get("count", [1, 1]))):
            out.append(
                {
                    "center_m": [_draw(rng, blk["x_m"]), _draw(rng, blk["y_m"])],
                    "length_m": _draw(rng, blk["length_m"]),
                    "thickness_m": _draw(rng, blk["thickness_m"]),
                    "orientation_deg": _draw(rng, blk.get("orientation_deg", [0.0, 0.0])),
                    "attenuation": _draw(rng, blk.get("attenuation", [0.0, 0.0])),
                }
            )
        data["blockers"] = (data.get("blockers") or []) + out
    return data


def sample_dir(out_dir: Path, index: int) -> Path:
    return Path(out_dir) / f"shard-{index // SHARD_SIZE:04d}" / f"sample-{index:06d}"


def _write_manifest(out_dir: Path, manifest: dict) -> None:
    tmp = Path(out_dir) / (MANIFEST_NAME + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    tmp.replace(Path(out_dir) / MANIFEST_NAME)


def generate_dataset(spec_text: str, out_dir, max_samples: int | None = None) -> list[int]:
    """Generate (or resume) a dataset; returns the indices computed this run.

    Each sample directory holds scenario.yaml, field.nwf and rx.json. The
    manifest is rewritten after every completed sample, so an interrupted
    run resumes exactly where it stopped.
    """
    spec = load_batch_spec(spec_text)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec_sha = scenario_hash(spec_text)

    manifest_path = out_dir / MANIFEST_NAME
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("spec_sha256") != spec_sha:
            raise ScenarioError("output directory holds a dataset for a different batch spec")
    else:
        manifest = {"spec_sha256": spec_sha, "count": int(spec["count"]), "completed": {}}

    done: list[int] = []
    count = int(spec["count"])
    budget = count if max_samples is None else min(count, max_samples)
    for index in range(count):
        if len(done) >= budget:
            break
        if str(index) in manifest["completed"]:
            continue
        data = sample_scenario_dict(spec, index)
        scenario = scenario_from_dict(data)
        text = serialize_scenario(scenario)
        report = solve(scenario)
        d = sample_dir(out_dir, index)
        d.mkdir(parents=True, exist_ok=True)
        (d / "scenario.yaml").write_text(text)
        write_field_dump(
            d / "field.nwf",
            report.total.columns,
            scenario.grid.dx,
            scenario.grid.dy,
            scenario.physical.frequency,
        )
        rx_report = [
            compute_rx_power(report.total, r, scenario.physical.wavelength) for r in scenario.rx
        ]
        (d / "rx.json").write_text(json.dumps(rx_report, indent=2) + "\n")
        manifest["completed"][str(index)] = str(d.relative_to(out_dir))
        _write_manifest(out_dir, manifest)
        done.append(index)
    return done
