"""Turn solver trajectory/flow CSV files into surface figures.

The renderer draws the benchmark constraint surface colored by the cost
(cooler colors mean lower cost) and overlays the iterate path from the
CSV, with start and end markers. It is a read-only consumer of the CSV
schemas written by the solver CLI:

    k,x1,x2,x3,f,V,grad_ftilde_norm,feas_norm,step      (trajectory)
    t,x1,x2,x3,f,V,feas_norm[,z_norm]                   (flow)

Numeric data is never altered: the plotted polyline vertices are exactly
the parsed CSV values.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import cm

#: Benchmark cost shared by both surfaces: (x1+3)^2 + (x2+2)^2 + (x3+2)^2.
COST_SHIFT = np.array([3.0, 2.0, 2.0])

#: Surface mesh resolution; cosmetic only.
MESH_POINTS = 64

TRAJECTORY_COLUMNS = ["k", "x1", "x2", "x3", "f", "V",
                      "grad_ftilde_norm", "feas_norm", "step"]
FLOW_COLUMNS = ["t", "x1", "x2", "x3", "f", "V", "feas_norm"]
PROBLEMS = ("sphere", "paraboloid")


class SchemaError(Exception):
    """The CSV does not match the solver output schema.

    The message carries row/column diagnostics.
    """


@dataclass(frozen=True)
class Trajectory:
    """Parsed CSV: header names, full table, and the x1..x3 vertices."""

    columns: list
    table: np.ndarray  # shape (rows, len(columns)); empty rows allowed
    vertices: np.ndarray  # shape (rows, 3)


def load_trajectory(path) -> Trajectory:
    """Parse and validate a trajectory or flow CSV.

    Raises SchemaError with row/column diagnostics on any mismatch.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    lines = [ln for ln in lines if ln.strip() != ""]
    if not lines:
        raise SchemaError("row 1: empty file, expected a header row")
    columns = lines[0].split(",")
    if not (
        columns == TRAJECTORY_COLUMNS
        or columns == FLOW_COLUMNS
        or columns == FLOW_COLUMNS + ["z_norm"]
    ):
        raise SchemaError(
            f"row 1: unrecognized header {','.join(columns)!r}; expected "
            f"{','.join(TRAJECTORY_COLUMNS)!r} or {','.join(FLOW_COLUMNS)!r}"
            " (optionally with z_norm)"
        )
    rows = []
    for r, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(columns):
            raise SchemaError(
                f"row {r}: {len(parts)} fields, expected {len(columns)}"
            )
        values = []
        for c, part in enumerate(parts, start=1):
            try:
                values.append(float(part))
            except ValueError:
                raise SchemaError(
                    f"row {r}, column {c} ({columns[c - 1]}): "
                    f"not a number: {part!r}"
                ) from None
        rows.append(values)
    table = np.array(rows) if rows else np.empty((0, len(columns)))
    x_cols = [columns.index(name) for name in ("x1", "x2", "x3")]
    return Trajectory(columns=columns, table=table, vertices=table[:, x_cols])


def cost(points) -> np.ndarray:
    shifted = np.asarray(points) + COST_SHIFT
    return np.sum(shifted * shifted, axis=-1)


def sphere_mesh(resolution=MESH_POINTS):
    """Latitude/longitude grid of the unit sphere."""
    theta = np.linspace(0.0, np.pi, resolution)
    phi = np.linspace(0.0, 2.0 * np.pi, resolution)
    theta, phi = np.meshgrid(theta, phi)
    x = np.sin(theta) * np.cos(phi)
    y = np.sin(theta) * np.sin(phi)
    z = np.cos(theta)
    return x, y, z


def paraboloid_mesh(resolution=MESH_POINTS, extent=2.0):
    """Rectangular grid over [-extent, extent]^2 with x3 = x1^2 + x2^2."""
    u = np.linspace(-extent, extent, resolution)
    x, y = np.meshgrid(u, u)
    return x, y, x * x + y * y


def render(traj_file, problem, out_image) -> np.ndarray:
    """Render one CSV onto the named benchmark surface and save an image.

    Returns the polyline vertex array exactly as parsed from the CSV (an
    empty array for header-only files, which produce a surface-only image
    and a warning on stderr).
    """
    if problem not in PROBLEMS:
        raise ValueError(
            f"unknown problem {problem!r}; expected one of {PROBLEMS}"
        )
    traj = load_trajectory(traj_file)
    if problem == "sphere":
        mx, my, mz = sphere_mesh()
    else:
        mx, my, mz = paraboloid_mesh()
    mesh_cost = cost(np.stack([mx, my, mz], axis=-1))
    normed = (mesh_cost - mesh_cost.min()) / (mesh_cost.max() - mesh_cost.min())

    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(111, projection="3d")
    ax.plot_surface(
        mx, my, mz,
        facecolors=cm.coolwarm(normed),
        rstride=1, cstride=1,
        linewidth=0, antialiased=False, alpha=0.55, shade=False,
    )
    verts = traj.vertices
    if len(verts) == 0:
        print(
            f"warning: {traj_file} has no data rows; rendering surface only",
            file=sys.stderr,
        )
    else:
        ax.plot(verts[:, 0], verts[:, 1], verts[:, 2],
                color="black", linewidth=1.5, zorder=5)
        ax.scatter(*verts[0], color="lime", s=45, marker="o",
                   label="start", zorder=6, edgecolors="black")
        ax.scatter(*verts[-1], color="red", s=70, marker="*",
                   label="end", zorder=6, edgecolors="black")
        ax.legend(loc="upper right")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_zlabel("x3")
    ax.set_title(f"{problem}: cost-colored surface (cool = low)")
    mappable = cm.ScalarMappable(cmap=cm.coolwarm)
    mappable.set_array(mesh_cost)
    fig.colorbar(mappable, ax=ax, shrink=0.6, label="cost")
    fig.tight_layout()
    fig.savefig(out_image, dpi=130)
    plt.close(fig)
    return verts
