"""Benchmark scenario definitions: slope profiles, topography, initial
conditions, boundary rules and the dam-break exact solution.

Three ready-made setups are provided: a dimensional granular dam break on a
uniform 40-degree slope with an exact solution, a nondimensional avalanche
released on a 35-degree chute that merges into a horizontal run-out plane,
and the same chute with a conical obstacle on the incline.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .physics import MaterialParams

__all__ = [
    "ConstantSlope", "ChuteSlope", "FlatBed", "ConeObstacle", "BoundarySpec",
    "ScenarioSpec", "chute_zeta", "cone_zb", "cap_initial", "dam_initial",
    "exact_dambreak", "ghost_state", "dam_break_scenario", "chute_scenario",
    "obstacle_scenario", "flat_rest_scenario",
]

OUTFLOW = "outflow"
WALL = "wall"


def chute_zeta(x, zeta0=np.deg2rad(35.0), ramp_start=17.5, ramp_end=21.5):
    """Piecewise inclination: constant slope, linear ramp, horizontal run-out.

    Returns ``(zeta, dzeta_dx)`` in radians and radians per length unit.
    """
    x = np.asarray(x, dtype=float)
    width = ramp_end - ramp_start
    ramp = (x > ramp_start) & (x < ramp_end)
    zeta = np.where(x <= ramp_start, zeta0,
                    np.where(ramp, zeta0 * (1.0 - (x - ramp_start) / width), 0.0))
    dzeta = np.where(ramp, -zeta0 / width, 0.0)
    return zeta, dzeta


def cone_zb(x, y, center=(13.0, 0.0), radius=1.0, height=1.0):
    """Linear cone elevation and its gradient; zero at and outside the rim.

    The gradient at the apex is set to zero (the symmetric limit).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - center[0]
    dy = y - center[1]
    r = np.sqrt(dx * dx + dy * dy)
    inside = r < radius
    zb = np.where(inside, height * (1.0 - r / radius), 0.0)
    slope = height / radius
    rsafe = np.where(r > 0.0, r, 1.0)
    apex = r == 0.0
    gx = np.where(inside & ~apex, -slope * dx / rsafe, 0.0)
    gy = np.where(inside & ~apex, -slope * dy / rsafe, 0.0)
    return zb, gx, gy


def cap_initial(x, y, center=(4.0, 0.0), r0=1.85):
    """Spherical-cap depth of radius ``r0`` released from rest."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = (x - center[0]) ** 2 + (y - center[1]) ** 2
    return np.sqrt(np.maximum(r0 * r0 - r2, 0.0))


def dam_initial(x, y, h0=10.0):
    """Quiescent column of depth ``h0`` for x < 0, dry for x >= 0."""
    x = np.asarray(x, dtype=float)
    h = np.where(x < 0.0, float(h0), 0.0)
    zero = np.zeros_like(h)
    return np.stack((h, zero, zero), axis=-1)


def exact_dambreak(x, t, h0=10.0, zeta=np.deg2rad(40.0),
                   delta=np.deg2rad(24.5), gravity=9.81):
    """Exact depth and velocity of the frictional dam-break rarefaction.

    The solution is a similarity fan in the shifted coordinate
    ``chi = x + a t^2 / 2`` with the uniform acceleration
    ``a = g cos(zeta) (tan(delta) - tan(zeta))``; the reported velocity
    removes the uniform drift ``a t``.
    """
    x = np.asarray(x, dtype=float)
    accel = gravity * np.cos(zeta) * (np.tan(delta) - np.tan(zeta))
    c0 = np.sqrt(gravity * h0 * np.cos(zeta))
    if t <= 0.0:
        h = np.where(x < 0.0, h0, 0.0)
        return h, np.zeros_like(h)
    chi = x + 0.5 * accel * t * t
    s = chi / (c0 * t)
    h = np.where(s < -1.0, h0,
                 np.where(s <= 2.0, (h0 / 9.0) * (2.0 - s) ** 2, 0.0))
    u_fan = np.where(s < -1.0, 0.0, (2.0 / 3.0) * (chi / t + c0)) - accel * t
    u = np.where(s > 2.0, 0.0, u_fan)
    return h, u


def ghost_state(rule: str, interior, n) -> np.ndarray:
    """Exterior trace for a boundary edge with outward normal ``n``."""
    interior = np.asarray(interior, dtype=float)
    if rule == OUTFLOW:
        return interior.copy()
    if rule == WALL:
        n = np.asarray(n, dtype=float)
        mn = interior[..., 1] * n[..., 0] + interior[..., 2] * n[..., 1]
        out = interior.copy()
        out[..., 1] = interior[..., 1] - 2.0 * mn * n[..., 0]
        out[..., 2] = interior[..., 2] - 2.0 * mn * n[..., 1]
        return out
    raise ValueError(f"unknown boundary rule {rule!r}")


@dataclass(frozen=True)
class ConstantSlope:
    zeta: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, self.zeta), np.zeros_like(x)


@dataclass(frozen=True)
class ChuteSlope:
    zeta0: float = np.deg2rad(35.0)
    ramp_start: float = 17.5
    ramp_end: float = 21.5

    def __call__(self, x):
        return chute_zeta(x, self.zeta0, self.ramp_start, self.ramp_end)


@dataclass(frozen=True)
class FlatBed:
    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        z = np.zeros_like(x)
        return z, z, z


@dataclass(frozen=True)
class ConeObstacle:
    center: tuple[float, float] = (13.0, 0.0)
    radius: float = 1.0
    height: float = 1.0

    def __call__(self, x, y):
        return cone_zb(x, y, self.center, self.radius, self.height)


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary rule per rectangle side."""
    x_min: str = OUTFLOW
    x_max: str = OUTFLOW
    y_min: str = OUTFLOW
    y_max: str = OUTFLOW

    @classmethod
    def all_outflow(cls):
        return cls()

    @classmethod
    def all_wall(cls):
        return cls(WALL, WALL, WALL, WALL)

    def side_rule(self, normals) -> np.ndarray:
        """Classify boundary edges by their dominant outward normal."""
        normals = np.asarray(normals, dtype=float)
        nx, ny = normals[..., 0], normals[..., 1]
        x_side = np.abs(nx) >= np.abs(ny)
        rules = np.where(x_side,
                         np.where(nx < 0.0, self.x_min, self.x_max),
                         np.where(ny < 0.0, self.y_min, self.y_max))
        return rules


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete problem setup the stepper consumes."""

    name: str
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    params: MaterialParams
    slope: Callable = field(default_factory=ConstantSlope)
    topography: Callable = field(default_factory=FlatBed)
    initial: Callable = None
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    pressure_mode: str = "mohr_coulomb"
    k_const: float = 1.0
    exact: Callable | None = None

    def slope_at(self, x):
        return self.slope(x)

    def basal_gradient(self, x, y):
        _, gx, gy = self.topography(x, y)
        return gx, gy

    def initial_state(self, x, y) -> np.ndarray:
        return self.initial(x, y)

    def with_params(self, **kwargs) -> "ScenarioSpec":
        return replace(self, params=replace(self.params, **kwargs))


def _uniform_depth(h0):
    def init(x, y):
        x = np.asarray(x, dtype=float)
        h = np.full_like(x, float(h0))
        zero = np.zeros_like(h)
        return np.stack((h, zero, zero), axis=-1)
    return init


def _cap(center, r0):
    def init(x, y):
        h = cap_initial(x, y, center, r0)
        zero = np.zeros_like(h)
        return np.stack((h, zero, zero), axis=-1)
    return init


def dam_break_scenario(h0=10.0, zeta_deg=40.0, delta_deg=24.5, gravity=9.81,
                       x_range=(-12.8, 12.8), y_range=(-1.6, 1.6),
                       h_dry=1e-8) -> ScenarioSpec:
    """Dimensional dam break on a uniform slope, constant unit pressure
    coefficient, wall sides in y and outflow in x."""
    zeta = np.deg2rad(zeta_deg)
    delta = np.deg2rad(delta_deg)
    params = MaterialParams(phi=delta, delta=delta, epsilon=1.0, stretch=1.0,
                            gravity=gravity, h_dry=h_dry)
    return ScenarioSpec(
        name="dam_break", x_range=x_range, y_range=y_range, params=params,
        slope=ConstantSlope(zeta),
        initial=lambda x, y: dam_initial(x, y, h0),
        boundary=BoundarySpec(OUTFLOW, OUTFLOW, WALL, WALL),
        pressure_mode="constant", k_const=1.0,
        exact=lambda x, t: exact_dambreak(x, t, h0, zeta, delta, gravity))


def chute_scenario(zeta0_deg=35.0, phi_deg=30.0, delta_deg=30.0,
                   cap_center=(4.0, 0.0), cap_r0=1.85,
                   x_range=(0.0, 30.0), y_range=(-7.0, 7.0),
                   boundary: BoundarySpec | None = None,
                   h_dry=1e-8) -> ScenarioSpec:
    """Nondimensional avalanche released on an inclined chute merging into a
    horizontal run-out plane."""
    params = MaterialParams(phi=np.deg2rad(phi_deg), delta=np.deg2rad(delta_deg),
                            epsilon=1.0, stretch=1.0, gravity=1.0, h_dry=h_dry)
    return ScenarioSpec(
        name="chute", x_range=x_range, y_range=y_range, params=params,
        slope=ChuteSlope(np.deg2rad(zeta0_deg)),
        initial=_cap(cap_center, cap_r0),
        boundary=boundary or BoundarySpec.all_outflow())


def obstacle_scenario(cone_center=(13.0, 0.0), cone_radius=1.0, cone_height=1.0,
                      **kwargs) -> ScenarioSpec:
    """Chute scenario with a conical obstacle on the incline."""
    base = chute_scenario(**kwargs)
    return replace(base, name="obstacle",
                   topography=ConeObstacle(cone_center, cone_radius, cone_height))


def flat_rest_scenario(h0=1.0, phi_deg=30.0, delta_deg=30.0,
                       x_range=(0.0, 1.0), y_range=(-0.5, 0.5),
                       h_dry=1e-8) -> ScenarioSpec:
    """Uniform wet depth at rest on a horizontal plane, wall-enclosed."""
    params = MaterialParams(phi=np.deg2rad(phi_deg), delta=np.deg2rad(delta_deg),
                            epsilon=1.0, stretch=1.0, gravity=1.0, h_dry=h_dry)
    return ScenarioSpec(
        name="flat_rest", x_range=x_range, y_range=y_range, params=params,
        slope=ConstantSlope(0.0), initial=_uniform_depth(h0),
        boundary=BoundarySpec.all_wall())
