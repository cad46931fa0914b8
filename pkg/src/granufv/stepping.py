"""Predictor-corrector (MUSCL-Hancock) time stepping under a CFL constraint.

The predictor advances cell averages a half step using each cell's own
reconstructed boundary traces; the corrector closes the step with HLL
interface fluxes of the half-step traces.  Per-cell flux sums always run in
a fixed edge-slot order so results are reproducible and mirror-symmetric
meshes evolve symmetrically to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .mesh import TriMesh
from .physics import (BetaPair, EarthPressure, _flux_from_parts, beta,
                      earth_pressure, primitive_from_conserved, source)
from .reconstruction import _pipeline_gradient, limited_field_gradients
from .riemann import RiemannStates, hll_flux
from .scenarios import WALL, ScenarioSpec, ghost_state

__all__ = ["SolverError", "SolutionField", "StepConfig", "StepRecord",
           "PressureState", "initial_field", "pressure_state", "cfl_dt",
           "predictor", "corrector", "step", "advance"]


class SolverError(Exception):
    """The time integration failed (blow-up or non-finite update)."""


@dataclass
class SolutionField:
    """Cell-average conserved states plus the simulated time."""

    U: np.ndarray
    t: float = 0.0
    step_count: int = 0

    def copy(self) -> "SolutionField":
        return SolutionField(self.U.copy(), self.t, self.step_count)

    @property
    def h(self) -> np.ndarray:
        return self.U[:, 0]

    def total_mass(self, mesh: TriMesh) -> float:
        return float(np.sum(self.U[:, 0] * mesh.cell_area))


@dataclass(frozen=True)
class StepConfig:
    cr: float = 0.5
    t_end: float = np.inf
    dt_floor: float = 1e-12
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not 0.0 < self.cr <= 1.0:
            raise ValueError(f"Courant number must be in (0, 1], got {self.cr}")
        if self.dt_floor <= 0.0:
            raise ValueError("dt_floor must be positive")


class StepRecord(NamedTuple):
    step: int
    t: float
    dt: float
    total_mass: float
    max_speed: float
    max_velocity: float
    clamp_count: int
    clamp_interior_count: int
    boundary_mass_flux: float

    def logline(self) -> str:
        return (f"step={self.step} t={self.t:.9g} dt={self.dt:.9g} "
                f"mass={self.total_mass:.9g} max_speed={self.max_speed:.9g} "
                f"clamps={self.clamp_count}")


class PressureState(NamedTuple):
    """Per-cell pressure coefficients and slope data frozen for one step."""
    kx: np.ndarray
    ky: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    zeta: np.ndarray
    dzeta: np.ndarray


def initial_field(mesh: TriMesh, scenario: ScenarioSpec) -> SolutionField:
    """Sample the scenario's initial condition at the cell barycenters."""
    x = mesh.cell_centroid[:, 0]
    y = mesh.cell_centroid[:, 1]
    U = np.ascontiguousarray(scenario.initial_state(x, y), dtype=float)
    return SolutionField(U)


def pressure_state(mesh: TriMesh, field: SolutionField,
                   scenario: ScenarioSpec) -> PressureState:
    """Evaluate pressure coefficients from the current velocity gradients."""
    params = scenario.params
    prim = primitive_from_conserved(field.U, params.h_dry)
    x = mesh.cell_centroid[:, 0]
    zeta, dzeta = scenario.slope_at(x)
    if scenario.pressure_mode == "constant":
        kx = np.full(mesh.n_cells, scenario.k_const)
        ky = kx
    else:
        dudx = _pipeline_gradient(mesh, prim.u, "even")[:, 0]
        dvdy = _pipeline_gradient(mesh, prim.v, "odd")[:, 1]
        kx, ky = earth_pressure(params, dudx, dvdy)
    bx, by = beta(params, zeta, EarthPressure(kx, ky))
    return PressureState(kx, ky, bx, by, zeta, dzeta)


def cfl_dt(mesh: TriMesh, field: SolutionField, scenario: ScenarioSpec,
           config: StepConfig, pressure: PressureState | None = None) -> float:
    """Largest stable step from the per-cell wave-speed estimate.

    Cells with zero depth and zero speed do not restrict the step; an
    all-dry field returns ``dt_floor``.  The result is clipped so the step
    lands exactly on ``t_end``.
    """
    if pressure is None:
        pressure = pressure_state(mesh, field, scenario)
    prim = primitive_from_conserved(field.U, scenario.params.h_dry)
    absb = np.sqrt(pressure.bx ** 2 + pressure.by ** 2)
    denom = np.sqrt(absb * np.maximum(prim.h, 0.0)) + np.hypot(prim.u, prim.v)
    active = denom > 0.0
    if not active.any():
        return float(min(config.dt_floor, config.t_end - field.t))
    dt = config.cr * float(np.min(mesh.cell_size[active] / denom[active]))
    if not np.isfinite(dt) or dt < config.dt_floor:
        raise SolverError(f"time step collapsed to {dt:g} at t={field.t:g}")
    return float(min(dt, config.t_end - field.t))


def _slot_geometry(mesh: TriMesh):
    geom = getattr(mesh, "_slot_geom", None)
    if geom is None:
        ce = mesh.cell_edges
        off = mesh.edge_midpoint[ce] - mesh.cell_centroid[:, None, :]
        n_out = mesh.edge_normal[ce] * mesh.cell_edge_sign[:, :, None]
        ds = mesh.edge_length[ce]
        geom = (off, n_out, ds)
        mesh._slot_geom = geom
    return geom


def _slot_traces(U, gradients, off):
    """Per-cell traces at the three edge midpoints, depth clamped at zero."""
    tr = np.empty((len(U), 3, 3))
    for f in range(3):
        tr[:, :, f] = (U[:, None, f]
                       + gradients[:, None, f, 0] * off[:, :, 0]
                       + gradients[:, None, f, 1] * off[:, :, 1])
    tr[:, :, 0] = np.maximum(tr[:, :, 0], 0.0)
    return tr


def _source_vector(mesh, prim, pressure, scenario):
    gx, gy = scenario.basal_gradient(mesh.cell_centroid[:, 0],
                                     mesh.cell_centroid[:, 1])
    sx, sy = source(prim, pressure.zeta, pressure.dzeta, (gx, gy),
                    scenario.params)
    return np.stack((np.zeros_like(sx), prim.h * sx, prim.h * sy), axis=-1)


def _clamp_dry(U, h_dry: float):
    """Zero out negative depths with their momenta; strip the momentum of
    sub-threshold films so it cannot re-animate with an arbitrary ratio
    when the cell rewets."""
    neg = U[:, 0] < 0.0
    if neg.any():
        U[neg] = 0.0
    film = U[:, 0] < h_dry
    if film.any():
        U[film, 1] = 0.0
        U[film, 2] = 0.0
    return neg


def predictor(mesh: TriMesh, field: SolutionField, gradients, scenario,
              dt: float, pressure: PressureState | None = None):
    """Half-step cell averages from the cell's own boundary fluxes.

    No Riemann problem is solved here: each edge integral uses the physical
    flux of the cell's own reconstructed trace at the edge midpoint, so a
    spatially uniform field is exactly stationary.  Returns the half-step
    averages and the mask of cells whose depth had to be clamped.
    """
    if pressure is None:
        pressure = pressure_state(mesh, field, scenario)
    params = scenario.params
    off, n_out, ds = _slot_geometry(mesh)
    U = field.U

    tr = _slot_traces(U, gradients, off)
    h = tr[:, :, 0]
    wet = h >= params.h_dry
    hsafe = np.where(wet, h, 1.0)
    u = np.where(wet, tr[:, :, 1] / hsafe, 0.0)
    v = np.where(wet, tr[:, :, 2] / hsafe, 0.0)
    flux = _flux_from_parts(h, tr[:, :, 1], tr[:, :, 2], u, v,
                            pressure.bx[:, None], pressure.by[:, None],
                            n_out[:, :, 0], n_out[:, :, 1])
    contrib = flux * ds[:, :, None]
    div = (contrib[:, 0] + contrib[:, 1]) + contrib[:, 2]

    prim = primitive_from_conserved(U, params.h_dry)
    S = _source_vector(mesh, prim, pressure, scenario)

    half = U - (0.5 * dt / mesh.cell_area)[:, None] * div + (0.5 * dt) * S
    if not np.isfinite(half).all():
        cell = int(np.nonzero(~np.isfinite(half).all(axis=1))[0][0])
        raise SolverError(f"non-finite predictor update in cell {cell}")
    clamped = _clamp_dry(half, params.h_dry)
    return half, clamped


def corrector(mesh: TriMesh, field: SolutionField, half, gradients, scenario,
              dt: float, pressure: PressureState | None = None):
    """Full-step update with HLL fluxes of the half-step interface traces.

    Interface traces combine the half-step cell averages with the start-of-
    step slopes.  Boundary edges take their exterior trace from the
    scenario's ghost rule.  Returns the new cell averages, the clamp mask
    and the outward boundary mass flow rate.
    """
    if pressure is None:
        pressure = pressure_state(mesh, field, scenario)
    params = scenario.params

    L = mesh.edge_cells[:, 0]
    R = mesh.edge_cells[:, 1]
    bnd = R < 0
    Rc = np.where(bnd, L, R)

    offL = mesh.edge_midpoint - mesh.cell_centroid[L]
    offR = mesh.edge_midpoint - mesh.cell_centroid[Rc]
    trL = np.empty((mesh.n_edges, 3))
    trR = np.empty((mesh.n_edges, 3))
    for f in range(3):
        gL = gradients[L, f]
        gR = gradients[Rc, f]
        trL[:, f] = half[L, f] + gL[:, 0] * offL[:, 0] + gL[:, 1] * offL[:, 1]
        trR[:, f] = half[Rc, f] + gR[:, 0] * offR[:, 0] + gR[:, 1] * offR[:, 1]
    trL[:, 0] = np.maximum(trL[:, 0], 0.0)
    trR[:, 0] = np.maximum(trR[:, 0], 0.0)

    if bnd.any():
        nb = mesh.edge_normal[bnd]
        rules = scenario.boundary.side_rule(nb)
        ghost = trL[bnd].copy()
        wall = rules == WALL
        if wall.any():
            ghost[wall] = ghost_state(WALL, ghost[wall], nb[wall])
        trR[bnd] = ghost

    betaL = BetaPair(pressure.bx[L], pressure.by[L])
    betaR = BetaPair(np.where(bnd, pressure.bx[L], pressure.bx[Rc]),
                     np.where(bnd, pressure.by[L], pressure.by[Rc]))
    flux = hll_flux(RiemannStates(trL, trR, betaL, betaR, mesh.edge_normal),
                    h_dry=params.h_dry)
    if not np.isfinite(flux).all():
        edge = int(np.nonzero(~np.isfinite(flux).all(axis=1))[0][0])
        raise SolverError(f"non-finite interface flux on edge {edge}")

    fds = flux * mesh.edge_length[:, None]
    contrib = fds[mesh.cell_edges] * mesh.cell_edge_sign[:, :, None]
    div = (contrib[:, 0] + contrib[:, 1]) + contrib[:, 2]

    prim_half = primitive_from_conserved(half, params.h_dry)
    S = _source_vector(mesh, prim_half, pressure, scenario)

    U_new = field.U - (dt / mesh.cell_area)[:, None] * div + dt * S
    clamped = _clamp_dry(U_new, params.h_dry)
    boundary_flux = float(np.sum(fds[bnd, 0])) if bnd.any() else 0.0
    return U_new, clamped, boundary_flux


def step(mesh: TriMesh, field: SolutionField, scenario: ScenarioSpec,
         config: StepConfig):
    """Advance one CFL-limited step; returns the new field and a record."""
    pressure = pressure_state(mesh, field, scenario)
    gradients = limited_field_gradients(mesh, field.U, scenario.params.h_dry)
    dt = cfl_dt(mesh, field, scenario, config, pressure)

    half, clamp_pred = predictor(mesh, field, gradients, scenario, dt, pressure)
    U_new, clamp_corr, bflux = corrector(mesh, field, half, gradients,
                                         scenario, dt, pressure)

    clamped = clamp_pred | clamp_corr
    n_clamp = int(clamped.sum())
    interior = 0
    if n_clamp:
        wet = field.U[:, 0] >= scenario.params.h_dry
        nb = mesh.cell_neighbors
        nb_wet = np.where(nb >= 0, wet[np.clip(nb, 0, None)], True).all(axis=1)
        interior = int((clamped & wet & nb_wet).sum())

    prim = primitive_from_conserved(field.U, scenario.params.h_dry)
    absb = np.sqrt(pressure.bx ** 2 + pressure.by ** 2)
    speed = np.hypot(prim.u, prim.v)
    wave = np.sqrt(absb * np.maximum(prim.h, 0.0)) + speed

    out = SolutionField(U_new, field.t + dt, field.step_count + 1)
    record = StepRecord(out.step_count, out.t, dt, out.total_mass(mesh),
                        float(wave.max()), float(speed.max()),
                        n_clamp, interior, bflux)
    return out, record


def advance(mesh: TriMesh, field: SolutionField, scenario: ScenarioSpec,
            config: StepConfig, t_end: float, on_step=None) -> SolutionField:
    """Step until ``t_end`` (inclusive, the last step is clipped to land on it)."""
    cfg = replace(config, t_end=t_end)
    while field.t < t_end - 1e-14 * max(1.0, abs(t_end)):
        if field.step_count >= cfg.max_steps:
            raise SolverError(f"exceeded max_steps={cfg.max_steps} "
                              f"at t={field.t:g}")
        field, record = step(mesh, field, scenario, cfg)
        if on_step is not None:
            on_step(field, record)
    return field
