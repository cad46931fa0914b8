"""Unstructured triangular meshes and the geometry the solver needs.

A :class:`TriMesh` stores vertices, counterclockwise cell triples and a
unique edge table with unit normals.  All arrays are frozen after
construction; queries are read-only and safe to share between threads.
"""

from __future__ import annotations

import numpy as np

__all__ = ["MeshError", "TriMesh", "load_mesh", "save_mesh", "generate_box_mesh"]


class MeshError(Exception):
    """Invalid mesh input or geometry."""


class TriMesh:
    """Triangular mesh with derived per-cell and per-edge geometry.

    Cells are vertex triples in counterclockwise order.  Edge slot ``k`` of a
    cell is the edge from local vertex ``k`` to ``k+1`` (mod 3).  Every edge
    has a "left" cell (the lower cell id) and a unit normal pointing outward
    from it; interior edges also have a "right" cell.

    Attributes
    ----------
    points : (nv, 2) float array
    cells : (nc, 3) int array, counterclockwise
    cell_area, cell_size : (nc,) float arrays
    cell_centroid : (nc, 2) float array
    cell_neighbors : (nc, 3) int array, -1 where the slot edge is boundary
    cell_edges : (nc, 3) int array, edge id per slot
    cell_edge_sign : (nc, 3) float array, +1 if the cell is the edge's left cell
    edge_vertices : (ne, 2) int array
    edge_cells : (ne, 2) int array, column 1 is -1 on boundary edges
    edge_normal : (ne, 2) float array, unit, outward from the left cell
    edge_length, edge_midpoint : per-edge geometry
    """

    def __init__(self, points, cells, cell_area=None, cell_centroid=None):
        points = np.ascontiguousarray(points, dtype=float)
        cells = np.ascontiguousarray(cells, dtype=np.int64)
        if points.ndim != 2 or points.shape[1] != 2:
            raise MeshError("points must be an (nv, 2) array")
        if cells.ndim != 2 or cells.shape[1] != 3 or len(cells) == 0:
            raise MeshError("cells must be a nonempty (nc, 3) array")
        if not np.isfinite(points).all():
            raise MeshError("non-finite vertex coordinates")
        if cells.min() < 0 or cells.max() >= len(points):
            raise MeshError("cell vertex index out of range")

        p0 = points[cells[:, 0]]
        p1 = points[cells[:, 1]]
        p2 = points[cells[:, 2]]
        signed = 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                        - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
        bad = np.nonzero(signed <= 0.0)[0]
        if bad.size:
            raise MeshError(f"cell {bad[0]} is degenerate or clockwise "
                            f"(signed area {signed[bad[0]]:g})")

        self.points = points
        self.cells = cells
        # Callers that know areas/centroids exactly (mirror-symmetric box
        # meshes, bisection halves) may pass them to avoid re-deriving with
        # different rounding.
        self.cell_area = (np.ascontiguousarray(cell_area, dtype=float)
                          if cell_area is not None else signed)
        self.cell_centroid = (np.ascontiguousarray(cell_centroid, dtype=float)
                              if cell_centroid is not None
                              else (p0 + p1 + p2) / 3.0)

        self._build_edges()
        self._build_cell_sizes()
        for arr in (self.points, self.cells, self.cell_area, self.cell_centroid,
                    self.cell_neighbors, self.cell_edges, self.cell_edge_sign,
                    self.edge_vertices, self.edge_cells, self.edge_normal,
                    self.edge_length, self.edge_midpoint, self.cell_size):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edge_vertices)

    @property
    def total_area(self) -> float:
        return float(self.cell_area.sum())

    @property
    def boundary_edge_ids(self) -> np.ndarray:
        return np.nonzero(self.edge_cells[:, 1] < 0)[0]

    @property
    def interior_edge_ids(self) -> np.ndarray:
        return np.nonzero(self.edge_cells[:, 1] >= 0)[0]

    def _build_edges(self):
        nc = self.n_cells
        lookup: dict[tuple[int, int], int] = {}
        edge_verts: list[tuple[int, int]] = []
        edge_cells: list[list[int]] = []
        left_slot: list[tuple[int, int]] = []
        cell_edges = np.empty((nc, 3), dtype=np.int64)
        cell_sign = np.empty((nc, 3), dtype=float)

        for c in range(nc):
            tri = self.cells[c]
            for k in range(3):
                a = int(tri[k])
                b = int(tri[(k + 1) % 3])
                key = (a, b) if a < b else (b, a)
                e = lookup.get(key)
                if e is None:
                    e = len(edge_verts)
                    lookup[key] = e
                    edge_verts.append((a, b))
                    edge_cells.append([c, -1])
                    left_slot.append((c, k))
                    cell_edges[c, k] = e
                    cell_sign[c, k] = 1.0
                else:
                    if edge_cells[e][1] >= 0:
                        raise MeshError(f"edge {key} shared by more than two cells")
                    edge_cells[e][1] = c
                    cell_edges[c, k] = e
                    cell_sign[c, k] = -1.0

        self.edge_vertices = np.array(edge_verts, dtype=np.int64)
        self.edge_cells = np.array(edge_cells, dtype=np.int64)
        self.cell_edges = cell_edges
        self.cell_edge_sign = cell_sign

        # Normal from the left cell's traversal direction, rotated -90 deg,
        # so it points outward from the left cell.
        lc = np.array([cs[0] for cs in left_slot], dtype=np.int64)
        lk = np.array([cs[1] for cs in left_slot], dtype=np.int64)
        va = self.cells[lc, lk]
        vb = self.cells[lc, (lk + 1) % 3]
        d = self.points[vb] - self.points[va]
        length = np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2)
        if np.any(length <= 0.0):
            raise MeshError("zero-length edge")
        self.edge_normal = np.column_stack((d[:, 1] / length, -d[:, 0] / length))
        self.edge_length = length
        self.edge_midpoint = 0.5 * (self.points[va] + self.points[vb])

        neighbors = np.full((nc, 3), -1, dtype=np.int64)
        e_ids = self.cell_edges
        other = np.where(self.cell_edge_sign > 0,
                         self.edge_cells[e_ids, 1], self.edge_cells[e_ids, 0])
        neighbors[:, :] = other
        self.cell_neighbors = neighbors

    def _build_cell_sizes(self):
        # Minimum centroid-to-centroid distance to the edge neighbors; cells
        # with no neighbor fall back to twice the inradius.
        nb = self.cell_neighbors
        valid = nb >= 0
        cc = self.cell_centroid
        d = cc[np.clip(nb, 0, None)] - cc[:, None, :]
        dist = np.sqrt(d[:, :, 0] ** 2 + d[:, :, 1] ** 2)
        dist = np.where(valid, dist, np.inf)
        size = dist.min(axis=1)

        isolated = ~valid.any(axis=1)
        if isolated.any():
            perim = self.edge_length[self.cell_edges].sum(axis=1)
            size = np.where(isolated, 4.0 * self.cell_area / perim, size)
        self.cell_size = size


def load_mesh(text: str) -> TriMesh:
    """Parse the plain-text mesh format.

    Line 1 holds ``NV NC``; then NV lines ``id x y`` and NC lines
    ``id v0 v1 v2`` with counterclockwise, 0-based vertex indices.
    ``#`` starts a comment.
    """
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows:
        raise MeshError("empty mesh document")
    if len(rows[0]) != 2:
        raise MeshError("header must be 'NV NC'")
    try:
        nv, nc = int(rows[0][0]), int(rows[0][1])
    except ValueError as exc:
        raise MeshError(f"bad header: {exc}") from None
    if nv < 3 or nc < 1:
        raise MeshError("mesh needs at least 3 vertices and 1 triangle")
    if len(rows) != 1 + nv + nc:
        raise MeshError(f"expected {1 + nv + nc} records, found {len(rows)}")

    points = np.full((nv, 2), np.nan)
    seen = np.zeros(nv, dtype=bool)
    for row in rows[1:1 + nv]:
        if len(row) != 3:
            raise MeshError(f"vertex record needs 'id x y': {' '.join(row)}")
        try:
            vid = int(row[0])
            x, y = float(row[1]), float(row[2])
        except ValueError as exc:
            raise MeshError(f"bad vertex record: {exc}") from None
        if not 0 <= vid < nv:
            raise MeshError(f"vertex id {vid} out of range")
        if seen[vid]:
            raise MeshError(f"vertex id {vid} repeated")
        seen[vid] = True
        points[vid] = (x, y)
    if not seen.all():
        raise MeshError("missing vertex records")

    cells = np.empty((nc, 3), dtype=np.int64)
    seen = np.zeros(nc, dtype=bool)
    for row in rows[1 + nv:]:
        if len(row) != 4:
            raise MeshError(f"cell record needs 'id v0 v1 v2': {' '.join(row)}")
        try:
            cid = int(row[0])
            tri = [int(v) for v in row[1:]]
        except ValueError as exc:
            raise MeshError(f"bad cell record: {exc}") from None
        if not 0 <= cid < nc:
            raise MeshError(f"cell id {cid} out of range")
        if seen[cid]:
            raise MeshError(f"cell id {cid} repeated")
        seen[cid] = True
        cells[cid] = tri

    _check_duplicate_points(points)
    return TriMesh(points, cells)


def save_mesh(mesh: TriMesh) -> str:
    """Serialize a mesh to the text format accepted by :func:`load_mesh`."""
    out = [f"{mesh.n_vertices} {mesh.n_cells}"]
    for i, (x, y) in enumerate(mesh.points):
        out.append(f"{i} {float(x)!r} {float(y)!r}")
    for i, (a, b, c) in enumerate(mesh.cells):
        out.append(f"{i} {a} {b} {c}")
    return "\n".join(out) + "\n"


def _check_duplicate_points(points, tol=1e-12):
    order = np.lexsort((points[:, 1], points[:, 0]))
    ps = points[order]
    n = len(ps)
    for i in range(n - 1):
        j = i + 1
        while j < n and ps[j, 0] - ps[i, 0] <= tol:
            if abs(ps[j, 1] - ps[i, 1]) <= tol:
                raise MeshError(f"vertices {order[i]} and {order[j]} coincide "
                                f"within {tol:g}")
            j += 1


def generate_box_mesh(x_range, y_range, nx: int, ny: int) -> TriMesh:
    """Structured triangulation of a rectangle with alternating diagonals.

    Each of the ``nx`` x ``ny`` quads is split along a diagonal chosen by the
    parity of ``i + j``, giving ``2*nx*ny`` cells.  When ``y_range`` is
    symmetric about 0 and ``ny`` is even, the upper half-plane is built as an
    exact mirror of the lower half: coordinates, areas and centroids of
    mirrored cells match bitwise, which keeps y-symmetric simulations
    symmetric to machine precision.
    """
    x0, x1 = float(x_range[0]), float(x_range[1])
    y0, y1 = float(y_range[0]), float(y_range[1])
    if not (x1 > x0 and y1 > y0):
        raise MeshError("degenerate box range")
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be >= 1")

    symmetric = (y0 == -y1) and (ny % 2 == 0)

    xs = x0 + (x1 - x0) / nx * np.arange(nx + 1)
    xs[nx] = x1
    ys = np.empty(ny + 1)
    if symmetric:
        dy = (y1 - y0) / ny
        for j in range(ny + 1):
            if 2 * j < ny:
                ys[j] = y0 + j * dy
            elif 2 * j == ny:
                ys[j] = 0.0
            else:
                ys[j] = -ys[ny - j]
    else:
        ys = y0 + (y1 - y0) / ny * np.arange(ny + 1)
        ys[ny] = y1

    def vid(i, j):
        return i * (ny + 1) + j

    points = np.empty(((nx + 1) * (ny + 1), 2))
    for i in range(nx + 1):
        points[i * (ny + 1):(i + 1) * (ny + 1), 0] = xs[i]
        points[i * (ny + 1):(i + 1) * (ny + 1), 1] = ys

    def quad_triples(i, j):
        v00 = vid(i, j)
        v10 = vid(i + 1, j)
        v11 = vid(i + 1, j + 1)
        v01 = vid(i, j + 1)
        if (i + j) % 2 == 0:
            return (v00, v10, v11), (v00, v11, v01)
        return (v00, v10, v01), (v10, v11, v01)

    triples: list[tuple[int, int, int]] = []
    if symmetric:
        half = ny // 2
        for i in range(nx):
            for j in range(half):
                triples.extend(quad_triples(i, j))
        n_half = len(triples)
        # Mirror cell (a, b, c) -> (c', b', a'): reversing the mirrored triple
        # restores counterclockwise order, and this particular reversal keeps
        # per-cell slot sums reproducible under the mirror.
        for a, b, c in triples[:n_half]:
            triples.append((_mirror_vid(c, ny), _mirror_vid(b, ny),
                            _mirror_vid(a, ny)))
    else:
        for i in range(nx):
            for j in range(ny):
                triples.extend(quad_triples(i, j))

    cells = np.array(triples, dtype=np.int64)
    area = None
    centroid = None
    if symmetric:
        p0 = points[cells[:, 0]]
        p1 = points[cells[:, 1]]
        p2 = points[cells[:, 2]]
        area = 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                      - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
        centroid = (p0 + p1 + p2) / 3.0
        n2 = len(cells) // 2
        area[n2:] = area[:n2]
        centroid[n2:, 0] = centroid[:n2, 0]
        centroid[n2:, 1] = -centroid[:n2, 1]
    return TriMesh(points, cells, cell_area=area, cell_centroid=centroid)


def _mirror_vid(v, ny):
    i, j = divmod(v, ny + 1)
    return i * (ny + 1) + (ny - j)
