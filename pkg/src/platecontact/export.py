"""CSV and legacy VTK exports.  Floats are written with 17 significant digits."""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from . import bfs
from .mesh import StructuredMesh
from .poisson import q1_evaluate
from .postprocess import ShearProfile


class ExportError(OSError):
    pass


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _open(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc


def write_nodal_csv(mesh: StructuredMesh, u_h: np.ndarray, path, dofs_per_node: int = 4) -> Path:
    """x, y and the nodal DOFs, one row per node in mesh order."""
    path = Path(path)
    xy = mesh.nodes
    U = np.asarray(u_h).reshape(mesh.n_nodes, dofs_per_node)
    header = ["x", "y", "u", "u_x", "u_y", "u_xy"][: 2 + dofs_per_node]
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p, row in zip(xy, U):
            w.writerow([_fmt(v) for v in (*p, *row)])
    return path


def read_nodal_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Node coordinates and the flattened DOF vector from ``write_nodal_csv`` output."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :2], data[:, 2:].ravel()


def write_shear_csv(profile: ShearProfile, path) -> Path:
    path = Path(path)
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "x", "y", "T", "lambda", "active"])
        for k in range(len(profile)):
            w.writerow([_fmt(profile.s[k]), _fmt(profile.x[k]), _fmt(profile.y[k]),
                        _fmt(profile.T[k]), _fmt(profile.lam[k]), int(profile.active[k])])
    return path


def sample_lattice(mesh: StructuredMesh, n: int):
    x = np.linspace(mesh.origin[0], mesh.origin[0] + mesh.extents[0], n)
    y = np.linspace(mesh.origin[1], mesh.origin[1] + mesh.extents[1], n)
    X, Y = np.meshgrid(x, y)
    return x, y, np.column_stack([X.ravel(), Y.ravel()])


def write_vtk_grid(mesh: StructuredMesh, values: np.ndarray, n: int, path,
                   name: str = "u", title: str = "plate deflection") -> Path:
    """Legacy ASCII VTK STRUCTURED_POINTS file of ``values`` on an n x n lattice
    (x index running fastest)."""
    path = Path(path)
    x, y, _ = sample_lattice(mesh, n)
    dx = x[1] - x[0] if n > 1 else 1.0
    dy = y[1] - y[0] if n > 1 else 1.0
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {n} {n} 1",
        f"ORIGIN {_fmt(x[0])} {_fmt(y[0])} 0",
        f"SPACING {_fmt(dx)} {_fmt(dy)} 1",
        f"POINT_DATA {n * n}",
        f"SCALARS {name} double 1",
        "LOOKUP_TABLE default",
    ]
    with _open(path) as fh:
        fh.write("\n".join(lines) + "\n")
        for v in values:
            fh.write(_fmt(v) + "\n")
    return path


def export_fields(mesh: StructuredMesh, u_h: np.ndarray, profile: ShearProfile | None,
                  outdir, n_grid: int = 41, prefix: str = "") -> dict:
    """Write nodal CSV, shear-profile CSV and the sampled displacement grid.

    Returns a mapping of artifact kind to written path.
    """
    outdir = Path(outdir)
    if outdir.exists() and not outdir.is_dir():
        raise ExportError(f"output path {outdir} exists and is not a directory")
    per_node = len(u_h) // mesh.n_nodes
    out = {"nodal": write_nodal_csv(mesh, u_h, outdir / f"{prefix}nodal.csv", per_node)}
    if profile is not None:
        out["shear"] = write_shear_csv(profile, outdir / f"{prefix}shear.csv")
    _, _, pts = sample_lattice(mesh, n_grid)
    if per_node == 4:
        vals = bfs.evaluate_at(mesh, u_h, pts)[:, bfs.V]
    else:
        e, local = bfs.locate_points(mesh, pts)
        vals, _ = q1_evaluate(mesh, u_h, e, local)
    out["grid"] = write_vtk_grid(mesh, vals, n_grid, outdir / f"{prefix}displacement.vtk")
    return {k: os.fspath(v) for k, v in out.items()}
