"""Output frames: legacy VTK files, profile CSV extraction and error norms.

All floating-point text is written with 9 significant digits, which round-
trips well below the 1e-7 tolerance the VTK reader tests use.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mesh import TriMesh
from .physics import primitive_from_conserved
from .stepping import SolutionField

__all__ = ["Frame", "frame_from_field", "write_vtk", "read_vtk",
           "sample_profile", "profile_csv", "l1_error"]

_FMT = "{:.9g}"


@dataclass
class Frame:
    """Snapshot of one output time: mesh plus per-cell fields."""
    time: float
    mesh: TriMesh
    h: np.ndarray
    hu: np.ndarray
    hv: np.ndarray
    u: np.ndarray
    v: np.ndarray
    indicator: np.ndarray


def frame_from_field(mesh: TriMesh, field: SolutionField, h_dry: float,
                     indicator=None) -> Frame:
    prim = primitive_from_conserved(field.U, h_dry)
    if indicator is None:
        indicator = np.zeros(mesh.n_cells)
    return Frame(field.t, mesh, field.U[:, 0].copy(), field.U[:, 1].copy(),
                 field.U[:, 2].copy(), np.asarray(prim.u), np.asarray(prim.v),
                 np.asarray(indicator))


def write_vtk(frame: Frame, path) -> None:
    """Write a legacy ASCII VTK unstructured grid with cell data
    ``h, u, v, E_tau``."""
    mesh = frame.mesh
    lines = ["# vtk DataFile Version 3.0",
             f"granufv frame t={_FMT.format(frame.time)}",
             "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} double"]
    for x, y in mesh.points:
        lines.append(f"{_FMT.format(x)} {_FMT.format(y)} 0")
    lines.append(f"CELLS {mesh.n_cells} {4 * mesh.n_cells}")
    for a, b, c in mesh.cells:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines.extend(["5"] * mesh.n_cells)
    lines.append(f"CELL_DATA {mesh.n_cells}")
    for name, values in (("h", frame.h), ("u", frame.u), ("v", frame.v),
                         ("E_tau", frame.indicator)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_FMT.format(val) for val in values)
    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk(path):
    """Parse a file written by :func:`write_vtk`.

    Returns ``(points, cells, cell_data)`` where ``cell_data`` maps array
    names to numpy arrays.
    """
    tokens = []
    for line in Path(path).read_text().splitlines()[2:]:
        tokens.extend(line.split())
    it = iter(tokens)

    def expect(word):
        got = next(it)
        if got != word:
            raise ValueError(f"expected {word!r}, found {got!r}")

    expect("ASCII")
    expect("DATASET")
    expect("UNSTRUCTURED_GRID")
    expect("POINTS")
    n_pts = int(next(it))
    next(it)  # dtype
    points = np.array([[float(next(it)) for _ in range(3)]
                       for _ in range(n_pts)])[:, :2]
    expect("CELLS")
    n_cells = int(next(it))
    next(it)  # total ints
    cells = np.empty((n_cells, 3), dtype=np.int64)
    for c in range(n_cells):
        if int(next(it)) != 3:
            raise ValueError("only triangles supported")
        cells[c] = [int(next(it)) for _ in range(3)]
    expect("CELL_TYPES")
    n = int(next(it))
    for _ in range(n):
        next(it)
    expect("CELL_DATA")
    n = int(next(it))
    data = {}
    while True:
        try:
            expect("SCALARS")
        except StopIteration:
            break
        name = next(it)
        next(it)  # dtype
        next(it)  # components
        expect("LOOKUP_TABLE")
        next(it)  # table name
        data[name] = np.array([float(next(it)) for _ in range(n)])
    return points, cells, data


def _locate_cells(mesh: TriMesh, pts, tol=1e-12):
    """Containing cell id per point (lowest id wins on edges), -1 outside."""
    p0 = mesh.points[mesh.cells[:, 0]]
    p1 = mesh.points[mesh.cells[:, 1]]
    p2 = mesh.points[mesh.cells[:, 2]]
    d1 = p1 - p0
    d2 = p2 - p0
    det = d1[:, 0] * d2[:, 1] - d2[:, 0] * d1[:, 1]
    out = np.full(len(pts), -1, dtype=np.int64)
    for i, (x, y) in enumerate(pts):
        rx = x - p0[:, 0]
        ry = y - p0[:, 1]
        a = (rx * d2[:, 1] - ry * d2[:, 0]) / det
        b = (ry * d1[:, 0] - rx * d1[:, 1]) / det
        inside = (a >= -tol) & (b >= -tol) & (a + b <= 1.0 + tol)
        hit = np.nonzero(inside)[0]
        if hit.size:
            out[i] = hit[0]
    return out


def sample_profile(frame: Frame, axis: str, offset: float, n_samples: int,
                   span=None, gradients=None):
    """Sample ``(s, h, u, v)`` along an axis-aligned line.

    ``axis`` names the coordinate that varies ("x" samples the line
    y = offset).  Values are the containing cell's value (optionally its
    linear trace when ``gradients`` for (h, hu, hv) are supplied); sample
    points outside the mesh produce an ``h = 0`` row.
    """
    mesh = frame.mesh
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    k = 0 if axis == "x" else 1
    if span is None:
        span = (mesh.points[:, k].min(), mesh.points[:, k].max())
    s = np.linspace(span[0], span[1], n_samples)
    pts = np.empty((n_samples, 2))
    pts[:, k] = s
    pts[:, 1 - k] = offset

    cell = _locate_cells(mesh, pts)
    rows = np.zeros((n_samples, 4))
    rows[:, 0] = s
    found = cell >= 0
    idx = cell[found]
    if gradients is not None:
        off = pts[found] - mesh.cell_centroid[idx]
        U = np.stack((frame.h[idx], frame.hu[idx], frame.hv[idx]), axis=-1)
        g = np.asarray(gradients)[idx]
        U = U + (g[:, :, 0] * off[:, None, 0] + g[:, :, 1] * off[:, None, 1])
        h = np.maximum(U[:, 0], 0.0)
        wet = h > 0.0
        hs = np.where(wet, h, 1.0)
        rows[found, 1] = h
        rows[found, 2] = np.where(wet, U[:, 1] / hs, 0.0)
        rows[found, 3] = np.where(wet, U[:, 2] / hs, 0.0)
    else:
        rows[found, 1] = frame.h[idx]
        rows[found, 2] = frame.u[idx]
        rows[found, 3] = frame.v[idx]
    return rows


def profile_csv(rows) -> str:
    out = ["s,h,u,v"]
    for s, h, u, v in rows:
        out.append(",".join(_FMT.format(val) for val in (s, h, u, v)))
    return "\n".join(out) + "\n"


def l1_error(mesh: TriMesh, h, h_exact) -> float:
    """Relative L1 depth error against exact values at the barycenters."""
    h = np.asarray(h, dtype=float)
    h_exact = np.asarray(h_exact, dtype=float)
    denom = float(np.sum(np.abs(h_exact) * mesh.cell_area))
    if denom == 0.0:
        raise ValueError("exact solution has zero mass; relative error undefined")
    return float(np.sum(np.abs(h - h_exact) * mesh.cell_area)) / denom
