"""Limited piecewise linear reconstruction on cell patches.

For each cell the gradient candidates are the planes through the cell's
barycenter value and each pair of distinct neighbor barycenter values; the
candidate with the smallest Euclidean norm wins.  A local-extremum limiter
and a depth positivity guard then flatten the slope where needed.
"""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh

__all__ = ["candidate_gradients", "eno_select", "limit_extremum",
           "positivity_guard", "evaluate_trace", "scalar_gradients",
           "limited_field_gradients"]

# Candidate stencils use neighbor pairs in this fixed slot order; the
# order doubles as the tie-break for equal-norm candidates.
_PAIRS = ((0, 1), (1, 2), (2, 0))


def _stencil_geometry(mesh: TriMesh):
    geom = getattr(mesh, "_stencil_geom", None)
    if geom is not None:
        return geom
    nb = mesh.cell_neighbors
    ok = nb >= 0
    delta = mesh.cell_centroid[np.clip(nb, 0, None)] - mesh.cell_centroid[:, None, :]
    dx = np.where(ok, delta[:, :, 0], 0.0)
    dy = np.where(ok, delta[:, :, 1], 0.0)

    det = np.empty((mesh.n_cells, 3))
    valid = np.empty((mesh.n_cells, 3), dtype=bool)
    for p, (a, b) in enumerate(_PAIRS):
        det[:, p] = dx[:, a] * dy[:, b] - dx[:, b] * dy[:, a]
        scale = (np.sqrt(dx[:, a] ** 2 + dy[:, a] ** 2)
                 * np.sqrt(dx[:, b] ** 2 + dy[:, b] ** 2))
        valid[:, p] = ok[:, a] & ok[:, b] & (np.abs(det[:, p]) > 1e-13 * scale)
    geom = (ok, dx, dy, det, valid)
    mesh._stencil_geom = geom
    return geom


def candidate_gradients(mesh: TriMesh, psi):
    """Plane-fit gradient candidates for every cell.

    Returns ``(candidates, valid)`` with shapes ``(nc, 3, 2)`` and
    ``(nc, 3)``.  Cells with fewer than two neighbors have no valid
    candidate; collinear stencils are dropped.
    """
    psi = np.asarray(psi, dtype=float)
    ok, dx, dy, det, valid = _stencil_geometry(mesh)
    dpsi = np.where(ok, psi[np.clip(mesh.cell_neighbors, 0, None)] - psi[:, None], 0.0)

    cands = np.zeros((mesh.n_cells, 3, 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        for p, (a, b) in enumerate(_PAIRS):
            d = np.where(valid[:, p], det[:, p], 1.0)
            cands[:, p, 0] = np.where(valid[:, p],
                                      (dpsi[:, a] * dy[:, b] - dpsi[:, b] * dy[:, a]) / d,
                                      0.0)
            cands[:, p, 1] = np.where(valid[:, p],
                                      (dx[:, a] * dpsi[:, b] - dx[:, b] * dpsi[:, a]) / d,
                                      0.0)
    return cands, valid


def eno_select(candidates, valid=None) -> np.ndarray:
    """Pick the candidate with minimal Euclidean norm.

    Ties go to the earliest candidate; no valid candidate gives a zero
    gradient.  Accepts a bare ``(k, 2)`` candidate list or the batched
    ``(nc, k, 2)`` form.
    """
    candidates = np.asarray(candidates, dtype=float)
    single = candidates.ndim == 2
    if single:
        candidates = candidates[None]
    if candidates.shape[-2] == 0:
        out = np.zeros((len(candidates), 2))
        return out[0] if single else out
    norm2 = candidates[..., 0] ** 2 + candidates[..., 1] ** 2
    if valid is not None:
        norm2 = np.where(valid, norm2, np.inf)
        none_valid = ~np.asarray(valid).any(axis=-1)
    else:
        none_valid = np.zeros(len(candidates), dtype=bool)
    pick = np.argmin(norm2, axis=-1)
    out = np.take_along_axis(candidates, pick[:, None, None], axis=1)[:, 0, :]
    out[none_valid] = 0.0
    return out[0] if single else out


def limit_extremum(mesh: TriMesh, psi, grad) -> np.ndarray:
    """Zero the gradient wherever the cell value is a local extremum."""
    psi = np.asarray(psi, dtype=float)
    nb = mesh.cell_neighbors
    ok = nb >= 0
    nbv = psi[np.clip(nb, 0, None)]
    hi = np.where(ok, nbv, -np.inf).max(axis=1)
    lo = np.where(ok, nbv, np.inf).min(axis=1)
    flat = ok.any(axis=1) & ((psi >= hi) | (psi <= lo))
    return np.where(flat[:, None], 0.0, grad)


def positivity_guard(mesh: TriMesh, h, grad_h) -> np.ndarray:
    """Zero the depth gradient if any edge-midpoint trace would go negative."""
    h = np.asarray(h, dtype=float)
    grad_h = np.asarray(grad_h, dtype=float)
    mids = mesh.edge_midpoint[mesh.cell_edges]
    off = mids - mesh.cell_centroid[:, None, :]
    trace = (h[:, None] + grad_h[:, None, 0] * off[:, :, 0]
             + grad_h[:, None, 1] * off[:, :, 1])
    bad = (trace < 0.0).any(axis=1)
    return np.where(bad[:, None], 0.0, grad_h)


def evaluate_trace(U, grad, offset) -> np.ndarray:
    """Linear extrapolation ``U + grad . offset`` with the depth clamped at 0."""
    U = np.asarray(U, dtype=float)
    grad = np.asarray(grad, dtype=float)
    offset = np.asarray(offset, dtype=float)
    out = U + (grad[..., 0] * offset[..., None, 0]
               + grad[..., 1] * offset[..., None, 1])
    out[..., 0] = np.maximum(out[..., 0], 0.0)
    return out


def scalar_gradients(mesh: TriMesh, psi) -> np.ndarray:
    """Minimal-norm plane-fit gradient of one cell field, unlimited."""
    cands, valid = candidate_gradients(mesh, psi)
    return eno_select(cands, valid)


def _keyed_select(cands, valid, parity: str) -> np.ndarray:
    """Minimal-norm selection with value-based tie keys.

    Candidate slot order is not invariant under a y-mirror of the mesh, so
    breaking exact norm ties by slot would desynchronize mirrored cell
    pairs.  Instead ties prefer, for y-even fields, the larger x-slope then
    the larger |y-slope|; y-odd fields (cross-slope momentum or velocity)
    swap the roles.  These keys are invariant under the field's mirror map,
    which keeps symmetric runs symmetric to machine precision.
    """
    gx = cands[:, :, 0]
    gy = cands[:, :, 1]
    norm2 = np.where(valid, gx * gx + gy * gy, np.inf)
    if parity == "even":
        k1, k2, k3 = gx, np.abs(gy), gy
    else:
        k1, k2, k3 = gy, np.abs(gx), gx

    def gather(arr, idx):
        return np.take_along_axis(arr, idx[:, None], axis=1)[:, 0]

    def better(ni, ki1, ki2, ki3, nj, kj1, kj2, kj3):
        return ((ni < nj)
                | ((ni == nj)
                   & ((ki1 > kj1)
                      | ((ki1 == kj1)
                         & ((ki2 > kj2)
                            | ((ki2 == kj2) & (ki3 > kj3)))))))

    pick = np.where(
        better(norm2[:, 0], k1[:, 0], k2[:, 0], k3[:, 0],
               norm2[:, 1], k1[:, 1], k2[:, 1], k3[:, 1]), 0, 1)
    keep = better(gather(norm2, pick), gather(k1, pick), gather(k2, pick),
                  gather(k3, pick),
                  norm2[:, 2], k1[:, 2], k2[:, 2], k3[:, 2])
    pick = np.where(keep, pick, 2)
    out = np.take_along_axis(cands, pick[:, None, None], axis=1)[:, 0, :].copy()
    out[~valid.any(axis=1)] = 0.0
    return out


def _pipeline_gradient(mesh: TriMesh, psi, parity: str) -> np.ndarray:
    cands, valid = candidate_gradients(mesh, psi)
    return _keyed_select(cands, valid, parity)


def limited_field_gradients(mesh: TriMesh, U, h_dry: float | None = None
                            ) -> np.ndarray:
    """Limited gradients of ``(h, hu, hv)``, shape ``(nc, 3, 2)``.

    All three components pass the extremum limiter; the depth additionally
    passes the positivity guard.  When ``h_dry`` is given, cells where the
    depth is not resolved by the linear representation fall back to zero
    gradients for all components: at the wet/dry front (own or neighbor
    depth below the threshold) and wherever the reconstructed depth
    variation across the cell reaches the cell depth itself.  Extrapolating
    momentum over a vanishing depth produces unbounded trace velocities and
    destabilizes the front otherwise.
    """
    U = np.asarray(U, dtype=float)
    out = np.empty((mesh.n_cells, 3, 2))
    grad_h_raw = _pipeline_gradient(mesh, U[:, 0], "even")
    g = limit_extremum(mesh, U[:, 0], grad_h_raw)
    out[:, 0, :] = positivity_guard(mesh, U[:, 0], g)
    for f, parity in ((1, "even"), (2, "odd")):
        out[:, f, :] = limit_extremum(mesh, U[:, f],
                                      _pipeline_gradient(mesh, U[:, f], parity))
    if h_dry is not None:
        wet = U[:, 0] >= h_dry
        nb = mesh.cell_neighbors
        nb_ok = nb >= 0
        nb_wet = np.where(nb_ok, wet[np.clip(nb, 0, None)], True).all(axis=1)

        mids = mesh.edge_midpoint[mesh.cell_edges]
        off = mids - mesh.cell_centroid[:, None, :]

        # Trace-velocity consistency: the depth and momentum slopes are
        # selected independently, so their traces can imply velocities far
        # beyond anything in the patch; such cells drop to first order.
        tr = np.empty((mesh.n_cells, 3, 3))
        for f in range(3):
            tr[:, :, f] = (U[:, None, f]
                           + out[:, None, f, 0] * off[:, :, 0]
                           + out[:, None, f, 1] * off[:, :, 1])
        h_tr = np.maximum(tr[:, :, 0], h_dry)
        speed_tr = np.maximum(np.abs(tr[:, :, 1]), np.abs(tr[:, :, 2])) / h_tr
        hsafe = np.where(wet, U[:, 0], 1.0)
        u_cell = np.where(wet, np.abs(U[:, 1]) / hsafe, 0.0)
        v_cell = np.where(wet, np.abs(U[:, 2]) / hsafe, 0.0)
        vmax = np.maximum(u_cell, v_cell)
        patch = np.where(nb_ok, vmax[np.clip(nb, 0, None)], 0.0).max(axis=1)
        patch = np.maximum(patch, vmax)
        consistent = speed_tr.max(axis=1) <= 2.0 * patch

        out[~(wet & nb_wet & consistent)] = 0.0
    return out
