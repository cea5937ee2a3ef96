"""Command line interface: run, compare, dataset, serve, export-csv, schema."""

from __future__ import annotations

import json
import socket
import sys
import tempfile
import time
from pathlib import Path

import click

from . import __version__
from .analysis import beam_trajectory, compare_maps
from .dataset import generate_dataset
from .iofmt import (
    RunManifest,
    read_field_dump,
    render_heatmap,
    scenario_hash,
    scenario_overlay,
    write_field_csv,
    write_field_dump,
)
from .scenario import ScenarioError, parse_scenario
from .schema import SCENARIO_SCHEMA
from .solver import compute_rx_power, solve

EXIT_INVALID = 1
EXIT_RUNTIME = 2


@click.group()
@click.version_option(version=__version__, prog_name="nearfield")
def main():
    """2D scalar-diffraction coverage-map simulator for near-field links."""


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _apply_seed_default(scenario, seed):
    if seed is None:
        return scenario
    from dataclasses import replace

    reflectors = []
    for r in scenario.reflectors:
        if r.roughness is not None and r.roughness.seed == 0:
            reflectors.append(
                replace(r, roughness=replace(r.roughness, seed=int(seed)))
            )
        else:
            reflectors.append(r)
    return replace(scenario, reflectors=tuple(reflectors))


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("out"),
              show_default=True, help="output directory (created atomically; must not be non-empty)")
@click.option("--db-range", type=float, default=60.0, show_default=True,
              help="heatmap dynamic range in dB")
@click.option("--overlay", is_flag=True, help="draw object outlines on the heatmap")
@click.option("--diagnostics", is_flag=True, help="emit a per-column beam trajectory sidecar")
@click.option("--seed", type=int, default=None,
              help="default seed for roughness profiles that omit one")
@click.option("--reference", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="field dump to compare the result against")
def run(scenario_path: Path, out_dir: Path, db_range: float, overlay: bool,
        diagnostics: bool, seed, reference):
    """Solve a scenario file and write coverage artifacts."""
    text = scenario_path.read_text()
    try:
        scenario = _apply_seed_default(parse_scenario(text), seed)
    except ScenarioError as e:
        _fail(EXIT_INVALID, str(e))

    if out_dir.exists() and any(out_dir.iterdir()):
        _fail(EXIT_INVALID, f"output directory {out_dir} is not empty")

    t0 = time.perf_counter()
    try:
        report = solve(scenario, base_dir=scenario_path.parent)
    except Exception as e:
        _fail(EXIT_RUNTIME, f"solve failed: {e}")
    wall = time.perf_counter() - t0

    # Stage everything in a sibling temp dir, then rename into place.
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".stage-", dir=out_dir.parent))
    try:
        g = scenario.grid
        outputs = []

        write_field_dump(stage / "field.nwf", report.total.columns, g.dx, g.dy,
                         scenario.physical.frequency)
        outputs.append("field.nwf")

        render_heatmap(report.total.columns, g.dx, g.dy, stage / "heatmap.png",
                       db_range=db_range,
                       overlay=scenario_overlay(scenario) if overlay else None)
        outputs.append("heatmap.png")

        lam = scenario.physical.wavelength
        rx_report = [compute_rx_power(report.total, r, lam) for r in scenario.rx]
        (stage / "rx.json").write_text(json.dumps(rx_report, indent=2) + "\n")
        outputs.append("rx.json")

        if diagnostics:
            traj = beam_trajectory(report.total)
            with open(stage / "trajectory.csv", "w") as f:
                f.write("x_m,y_peak_m,peak_intensity,width_m\n")
                for k in range(g.Kx):
                    f.write(f"{k * g.dx:.9g},{traj.y_peak[k]:.9g},"
                            f"{traj.peak[k]:.9g},{traj.width[k]:.9g}\n")
            outputs.append("trajectory.csv")

        metrics = None
        if reference is not None:
            ref_cols, *_ = read_field_dump(reference)
            if ref_cols.shape != report.total.columns.shape:
                _fail(EXIT_INVALID,
                      f"reference shape {ref_cols.shape} != map shape {report.total.columns.shape}")
            m = compare_maps(ref_cols, report.total.columns)
            metrics = {"rmse": m.rmse, "ncc_peak": m.ncc_peak, "peak_offset": list(m.peak_offset)}
            (stage / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
            outputs.append("metrics.json")

        seeds = {
            f"reflector[{i}]": r.roughness.seed
            for i, r in enumerate(scenario.reflectors)
            if r.roughness is not None
        }
        manifest = RunManifest(
            scenario_sha256=scenario_hash(text),
            tool_version=__version__,
            seeds=seeds,
            outputs=sorted(outputs + ["manifest.json"]),
            timings={**report.timings, "wall": wall},
            metrics=metrics,
        )
        manifest.write(stage / "manifest.json")

        if out_dir.exists():
            out_dir.rmdir()  # empty, checked above
        stage.rename(out_dir)
    except Exception:
        import shutil

        shutil.rmtree(stage, ignore_errors=True)
        raise
    click.echo(f"wrote {len(manifest.outputs)} artifacts to {out_dir}")


@main.command()
@click.argument("dump_a", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("dump_b", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="write the metrics report to this JSON file")
def compare(dump_a: Path, dump_b: Path, out_path):
    """Similarity metrics between two field dumps."""
    a, *_ = read_field_dump(dump_a)
    b, *_ = read_field_dump(dump_b)
    if a.shape != b.shape:
        _fail(EXIT_INVALID, f"map dimensions differ: {a.shape} vs {b.shape}")
    m = compare_maps(a, b)
    click.echo(f"rmse: {m.rmse:.6g}")
    click.echo(f"ncc_peak: {m.ncc_peak:.6g} at lag {m.peak_offset}")
    if out_path is not None:
        Path(out_path).write_text(json.dumps(
            {"rmse": m.rmse, "ncc_peak": m.ncc_peak, "peak_offset": list(m.peak_offset)},
            indent=2) + "\n")


@main.command()
@click.argument("batch_spec", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("out_dir", type=click.Path(path_type=Path))
def dataset(batch_spec: Path, out_dir: Path):
    """Generate (or resume) a sampled scenario dataset."""
    try:
        done = generate_dataset(batch_spec.read_text(), out_dir)
    except ScenarioError as e:
        _fail(EXIT_INVALID, str(e))
    except OSError as e:
        _fail(EXIT_RUNTIME, str(e))
    click.echo(f"computed {len(done)} samples: {done if len(done) <= 20 else '...'}")


@main.command()
@click.option("--port", type=int, default=8750, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False, path_type=Path),
              default=None, help="directory with the built browser client")
@click.option("--max-jobs", type=int, default=32, show_default=True)
def serve(port: int, host: str, ui_dir, max_jobs: int):
    """Run the local HTTP service consumed by the browser client."""
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError:
        _fail(EXIT_RUNTIME, f"port {port} is busy")
    finally:
        probe.close()

    import uvicorn

    from .server import create_app

    app = create_app(ui_dir=ui_dir, max_jobs=max_jobs)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("export-csv")
@click.argument("dump", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("csv_path", type=click.Path(path_type=Path))
def export_csv(dump: Path, csv_path: Path):
    """Convert a binary field dump to CSV."""
    cols, dx, dy, _freq = read_field_dump(dump)
    write_field_csv(csv_path, cols, dx, dy)
    click.echo(f"wrote {csv_path}")


@main.command()
def schema():
    """Print the scenario JSON schema."""
    click.echo(json.dumps(SCENARIO_SCHEMA, indent=2))


if __name__ == "__main__":
    main()
