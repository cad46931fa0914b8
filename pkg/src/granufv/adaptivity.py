"""Jump-indicator driven mesh adaptation by newest-vertex bisection.

An :class:`AdaptiveMesh` keeps the bisection forest over the initial
triangulation.  Refinement bisects a cell across its refinement edge (the
edge opposite the newest vertex), recursively forcing neighbors as needed so
the mesh stays conforming; coarsening merges sibling pairs back once every
leaf around the shared midpoint agrees.  Cell values transfer conservatively
in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriMesh
from .stepping import SolutionField

__all__ = ["AdaptConfig", "AdaptReport", "AdaptiveMesh", "error_indicator",
           "mark", "refine", "coarsen"]


@dataclass(frozen=True)
class AdaptConfig:
    refine_fraction: float = 0.2
    coarsen_fraction: float = 0.05
    max_level: int = 2
    min_level: int = 0
    adapt_interval: int = 5

    def __post_init__(self):
        if not 0.0 < self.coarsen_fraction < self.refine_fraction < 1.0:
            raise ValueError("need 0 < coarsen_fraction < refine_fraction < 1")
        if self.min_level < 0 or self.max_level < self.min_level:
            raise ValueError("need 0 <= min_level <= max_level")
        if self.adapt_interval < 1:
            raise ValueError("adapt_interval must be >= 1")


@dataclass(frozen=True)
class AdaptReport:
    cells_before: int
    cells_after: int
    refined: int
    coarsened: int
    skipped: int
    mass_before: float
    mass_after: float


def error_indicator(mesh: TriMesh, U, gradients) -> np.ndarray:
    """Per-cell jump indicator of the piecewise linear solution.

    Each edge contributes its midpoint value jump (scaled by the cell's
    inverse root area) plus the gradient jump, integrated over the cell
    boundary and weighted by the cell area.  Boundary edges carry no jump.
    All three conserved components are summed.
    """
    U = np.asarray(U, dtype=float)
    gradients = np.asarray(gradients, dtype=float)
    L = mesh.edge_cells[:, 0]
    R = mesh.edge_cells[:, 1]
    interior = R >= 0
    Rc = np.where(interior, R, L)

    offL = mesh.edge_midpoint - mesh.cell_centroid[L]
    offR = mesh.edge_midpoint - mesh.cell_centroid[Rc]
    jump_val = np.zeros(mesh.n_edges)
    jump_grad = np.zeros(mesh.n_edges)
    for f in range(3):
        gL = gradients[L, f]
        gR = gradients[Rc, f]
        tL = U[L, f] + gL[:, 0] * offL[:, 0] + gL[:, 1] * offL[:, 1]
        tR = U[Rc, f] + gR[:, 0] * offR[:, 0] + gR[:, 1] * offR[:, 1]
        jump_val += np.abs(tL - tR)
        jump_grad += np.hypot(gL[:, 0] - gR[:, 0], gL[:, 1] - gR[:, 1])
    jump_val[~interior] = 0.0
    jump_grad[~interior] = 0.0

    ds = mesh.edge_length[mesh.cell_edges]
    sum_val = (ds * jump_val[mesh.cell_edges]).sum(axis=1)
    sum_grad = (ds * jump_grad[mesh.cell_edges]).sum(axis=1)
    return np.sqrt(mesh.cell_area) * sum_val + mesh.cell_area * sum_grad


def mark(indicator, config: AdaptConfig, level=None):
    """Threshold the indicator against its maximum.

    Returns ``(refine_ids, coarsen_ids)``; cells at the level limits are
    filtered out.  The sets are disjoint because the coarsen fraction is
    below the refine fraction.
    """
    indicator = np.asarray(indicator, dtype=float)
    if level is None:
        level = np.zeros(len(indicator), dtype=int)
    top = indicator.max(initial=0.0)
    if top <= 0.0:
        empty = np.empty(0, dtype=int)
        return empty, empty.copy()
    refine_ids = np.nonzero((indicator > config.refine_fraction * top)
                            & (level < config.max_level))[0]
    coarsen_ids = np.nonzero((indicator < config.coarsen_fraction * top)
                             & (level > config.min_level))[0]
    return refine_ids, coarsen_ids


class AdaptiveMesh:
    """Bisection forest whose leaves form the current :class:`TriMesh`.

    Node triples are stored as ``(peak, b1, b2)`` with the refinement edge
    ``(b1, b2)`` opposite the newest vertex ``peak``.  Root cells use their
    longest edge.  Child areas are exactly half the parent area, so value
    transfer conserves mass to rounding.
    """

    def __init__(self, mesh: TriMesh):
        self._coords: list[tuple[float, float]] = [tuple(p) for p in mesh.points]
        self._verts: list[tuple[int, int, int]] = []
        self._level: list[int] = []
        self._parent: list[int] = []
        self._children: list[tuple[int, int] | None] = []
        self._area: list[float] = []
        self._mid_of_edge: dict[tuple[int, int], int] = {}
        self._mid_creators: dict[int, list[int]] = {}
        self._values: list[np.ndarray | None] = []

        pts = mesh.points
        for c in range(mesh.n_cells):
            tri = mesh.cells[c]
            lengths = [np.hypot(*(pts[tri[(k + 1) % 3]] - pts[tri[k]]))
                       for k in range(3)]
            k = int(np.argmax(lengths))
            triple = (int(tri[(k + 2) % 3]), int(tri[k]), int(tri[(k + 1) % 3]))
            self._verts.append(triple)
            self._level.append(0)
            self._parent.append(-1)
            self._children.append(None)
            self._area.append(float(mesh.cell_area[c]))
            self._values.append(None)
        self.leaves: list[int] = list(range(mesh.n_cells))
        self._tri = mesh

    @property
    def tri(self) -> TriMesh:
        return self._tri

    @property
    def levels(self) -> np.ndarray:
        return np.array([self._level[n] for n in self.leaves], dtype=int)

    def load_values(self, U) -> None:
        U = np.asarray(U, dtype=float)
        for pos, node in enumerate(self.leaves):
            self._values[node] = U[pos].copy()

    def _edge_leaf_table(self) -> dict[tuple[int, int], list[int]]:
        table: dict[tuple[int, int], list[int]] = {}
        for node in self.leaves:
            a, b, c = self._verts[node]
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                table.setdefault(key, []).append(node)
        return table

    def _base_key(self, node) -> tuple[int, int]:
        _, b1, b2 = self._verts[node]
        return (b1, b2) if b1 < b2 else (b2, b1)

    def _midpoint(self, key: tuple[int, int]) -> int:
        m = self._mid_of_edge.get(key)
        if m is None:
            pa = self._coords[key[0]]
            pb = self._coords[key[1]]
            m = len(self._coords)
            self._coords.append((0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])))
            self._mid_of_edge[key] = m
        return m

    def _new_node(self, triple, level, parent) -> int:
        i = len(self._verts)
        self._verts.append(triple)
        self._level.append(level)
        self._parent.append(parent)
        self._children.append(None)
        self._area.append(0.5 * self._area[parent])
        self._values.append(None if self._values[parent] is None
                            else self._values[parent].copy())
        return i

    def _bisect(self, node, table) -> None:
        peak, b1, b2 = self._verts[node]
        key = self._base_key(node)
        m = self._midpoint(key)
        c1 = self._new_node((m, peak, b1), self._level[node] + 1, node)
        c2 = self._new_node((m, b2, peak), self._level[node] + 1, node)
        self._children[node] = (c1, c2)
        self._mid_creators.setdefault(m, []).append(node)

        pos = self._leaf_pos.pop(node)
        self.leaves[pos] = c1
        self._leaf_pos[c1] = pos
        self.leaves.append(c2)
        self._leaf_pos[c2] = len(self.leaves) - 1

        a, b, c = self._verts[node]
        for u, v in ((a, b), (b, c), (c, a)):
            k = (u, v) if u < v else (v, u)
            table[k].remove(node)
        for child in (c1, c2):
            a, b, c = self._verts[child]
            for u, v in ((a, b), (b, c), (c, a)):
                k = (u, v) if u < v else (v, u)
                table.setdefault(k, []).append(child)

    def _refine_leaf(self, node, table) -> None:
        if self._children[node] is not None:
            return
        key = self._base_key(node)
        partners = [k for k in table.get(key, ()) if k != node]
        if partners:
            j = partners[0]
            if self._base_key(j) != key:
                # Neighbor's refinement edge differs: force it first, then a
                # child of it becomes the compatible partner across our edge.
                self._refine_leaf(j, table)
                partners = [k for k in table.get(key, ()) if k != node]
                j = partners[0]
                assert self._base_key(j) == key
            self._bisect(node, table)
            self._bisect(j, table)
        else:
            self._bisect(node, table)

    def refine_cells(self, cell_ids, max_level=None) -> int:
        """Bisect the given leaf cells (by current cell index), with closure.

        Cells already at ``max_level`` are skipped (closure-forced bisections
        are exempt); returns the skip count.
        """
        table = self._edge_leaf_table()
        self._leaf_pos = {n: i for i, n in enumerate(self.leaves)}
        nodes = [self.leaves[int(c)] for c in cell_ids]
        skipped = 0
        for node in nodes:
            if self._children[node] is not None:
                continue
            if max_level is not None and self._level[node] >= max_level:
                skipped += 1
                continue
            self._refine_leaf(node, table)
        self._rebuild()
        return skipped

    def coarsen_cells(self, cell_ids) -> tuple[int, int]:
        """Merge marked sibling pairs; incomplete groups are skipped.

        A bisection midpoint disappears only when every leaf touching it is
        one of the (one or two) marked sibling pairs that created it, which
        keeps the mesh conforming.  Returns ``(merged_pairs, skipped)``.
        """
        marked = {self.leaves[int(c)] for c in cell_ids}
        candidates: dict[int, list[int]] = {}
        for node in marked:
            parent = self._parent[node]
            if parent < 0:
                continue
            c1, c2 = self._children[parent]
            if (self._children[c1] is None and self._children[c2] is None
                    and c1 in marked and c2 in marked):
                m = self._verts[c1][0]
                candidates.setdefault(m, [])
                if parent not in candidates[m]:
                    candidates[m].append(parent)

        merged: set[int] = set()
        pairs = 0
        skipped = 0
        for m, parents in candidates.items():
            creators = self._mid_creators.get(m, [])
            ready = [p for p in creators
                     if self._children[p] is not None
                     and all(self._children[q] is None
                             for q in self._children[p])
                     and all(q in marked for q in self._children[p])]
            if len(ready) != len(creators) or set(parents) != set(ready):
                skipped += len(parents)
                continue
            for p in ready:
                c1, c2 = self._children[p]
                v1, v2 = self._values[c1], self._values[c2]
                if v1 is not None and v2 is not None:
                    a1, a2 = self._area[c1], self._area[c2]
                    self._values[p] = (a1 * v1 + a2 * v2) / (a1 + a2)
                self._children[p] = None
                merged.add(c1)
                merged.add(c2)
                self._mid_creators[m] = []
                pairs += 1

        if merged:
            emitted: set[int] = set()
            new_leaves = []
            for node in self.leaves:
                if node in merged:
                    parent = self._parent[node]
                    if parent not in emitted:
                        new_leaves.append(parent)
                        emitted.add(parent)
                else:
                    new_leaves.append(node)
            self.leaves = new_leaves
            self._rebuild()
        return pairs, skipped

    def _rebuild(self) -> None:
        used = sorted({v for node in self.leaves for v in self._verts[node]})
        remap = {v: i for i, v in enumerate(used)}
        points = np.array([self._coords[v] for v in used])
        cells = np.array([[remap[v] for v in self._verts[node]]
                          for node in self.leaves], dtype=np.int64)
        areas = np.array([self._area[node] for node in self.leaves])
        self._tri = TriMesh(points, cells, cell_area=areas)

    def values(self) -> np.ndarray:
        return np.array([self._values[node] for node in self.leaves])


def refine(amesh: AdaptiveMesh, field: SolutionField, marks, max_level=None
           ) -> tuple[TriMesh, SolutionField, AdaptReport]:
    """Bisect marked cells; children inherit the parent cell average."""
    before = amesh.tri.n_cells
    mass_before = field.total_mass(amesh.tri)
    amesh.load_values(field.U)
    skipped = amesh.refine_cells(marks, max_level=max_level)
    new_field = SolutionField(amesh.values(), field.t, field.step_count)
    report = AdaptReport(before, amesh.tri.n_cells,
                         refined=amesh.tri.n_cells - before, coarsened=0,
                         skipped=skipped, mass_before=mass_before,
                         mass_after=new_field.total_mass(amesh.tri))
    return amesh.tri, new_field, report


def coarsen(amesh: AdaptiveMesh, field: SolutionField, marks
            ) -> tuple[TriMesh, SolutionField, AdaptReport]:
    """Merge marked sibling pairs with area-weighted value restriction."""
    before = amesh.tri.n_cells
    mass_before = field.total_mass(amesh.tri)
    amesh.load_values(field.U)
    pairs, skipped = amesh.coarsen_cells(marks)
    new_field = SolutionField(amesh.values(), field.t, field.step_count)
    report = AdaptReport(before, amesh.tri.n_cells, refined=0,
                         coarsened=pairs, skipped=skipped,
                         mass_before=mass_before,
                         mass_after=new_field.total_mass(amesh.tri))
    return amesh.tri, new_field, report
