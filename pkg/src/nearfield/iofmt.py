"""Output artifacts: raw field dumps, CSV export, heatmaps, run manifests.

Field dump layout (binary, little endian): magic "NWF1", u32 Kx, u32 Ny,
f64 dx, f64 dy, f64 frequency, then Kx*Ny interleaved (re, im) f64 pairs
in column-major order (column 0 first). Bit-exact across platforms, which
the compare and dataset paths rely on.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MAGIC = b"NWF1"
_HEADER = struct.Struct("<4sII ddd")


def field_dump_bytes(columns: np.ndarray, dx: float, dy: float, frequency: float) -> bytes:
    kx, ny = columns.shape
    buf = bytearray(_HEADER.pack(MAGIC, kx, ny, dx, dy, frequency))
    data = np.empty((kx, ny, 2), dtype="<f8")
    data[:, :, 0] = columns.real
    data[:, :, 1] = columns.imag
    buf += data.tobytes()
    return bytes(buf)


def write_field_dump(path, columns: np.ndarray, dx: float, dy: float, frequency: float) -> None:
    Path(path).write_bytes(field_dump_bytes(columns, dx, dy, frequency))


def read_field_dump(path):
    """Returns (columns, dx, dy, frequency)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size or raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a field dump (missing NWF1 magic)")
    magic, kx, ny, dx, dy, freq = _HEADER.unpack_from(raw)
    expected = _HEADER.size + kx * ny * 16
    if len(raw) != expected:
        raise ValueError(f"{path}: truncated dump ({len(raw)} bytes, expected {expected})")
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(kx, ny, 2)
    return flat[:, :, 0] + 1j * flat[:, :, 1], dx, dy, freq


def write_field_csv(path, columns: np.ndarray, dx: float, dy: float) -> None:
    """Interoperability export: x_m,y_m,re,im rows with a header line."""
    kx, ny = columns.shape
    y0 = -0.5 * (ny * dy)
    with open(path, "w") as f:
        f.write("x_m,y_m,re,im\n")
        for k in range(kx):
            x = k * dx
            col = columns[k]
            for j in range(ny):
                f.write(f"{x:.9g},{y0 + j * dy:.9g},{col[j].real:.17g},{col[j].imag:.17g}\n")


def _segment_xy(center, length, orientation):
    import math

    ux, uy = -math.sin(orientation), math.cos(orientation)
    h = length / 2.0
    return (
        [center[0] - h * ux, center[0] + h * ux],
        [center[1] - h * uy, center[1] + h * uy],
    )


def render_heatmap(
    columns: np.ndarray,
    dx: float,
    dy: float,
    out,
    db_range: float = 60.0,
    overlay: list | None = None,
    title: str | None = None,
) -> None:
    """dB-scaled |E| map: 20*log10(|E|/max), clipped to [-db_range, 0], viridis.

    `overlay` takes (kind, center, length, orientation) tuples drawn as
    segment outlines. `out` may be a path or a binary file object.
    """
    mag = np.abs(columns)
    peak = mag.max()
    if peak == 0.0:
        peak = 1.0
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    db = np.clip(db, -db_range, 0.0)
    kx, ny = columns.shape
    extent = [0.0, kx * dx, -0.5 * ny * dy, 0.5 * ny * dy]
    fig, ax = plt.subplots(figsize=(8, 5))
    im = ax.imshow(
        db.T, origin="lower", extent=extent, aspect="equal", cmap="viridis",
        vmin=-db_range, vmax=0.0, interpolation="nearest",
    )
    fig.colorbar(im, ax=ax, label="|E| (dB rel. max)")
    if overlay:
        colors = {"blocker": "crimson", "reflector": "white", "ris": "orange", "tx": "lime", "rx": "cyan"}
        for kind, center, length, orientation in overlay:
            xs, ys = _segment_xy(center, length, orientation)
            ax.plot(xs, ys, color=colors.get(kind, "white"), lw=1.5)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out, format="png", dpi=130)
    plt.close(fig)


def scenario_overlay(scenario) -> list:
    out = []
    for t in scenario.tx:
        out.append(("tx", t.center, t.length, t.orientation))
    for b in scenario.blockers:
        out.append(("blocker", b.center, b.length, b.orientation))
    for r in scenario.reflectors:
        out.append(("reflector", r.center, r.length, r.orientation))
    for p in scenario.ris:
        out.append(("ris", p.center, p.length, p.orientation))
    for r in scenario.rx:
        out.append(("rx", r.center, r.length, r.orientation))
    return out


def scenario_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class RunManifest:
    scenario_sha256: str
    tool_version: str
    seeds: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    metrics: dict | None = None

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))
