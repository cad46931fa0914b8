"""Depth-averaged granular flow model: states, pressure coefficients,
fluxes, eigenvalues and source terms.

All functions broadcast over numpy arrays, so the same code serves scalar
unit checks and whole-mesh evaluation.  Conserved states are arrays with a
trailing axis of length 3 holding ``(h, hu, hv)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "HyperbolicityError", "MaterialParams", "PrimitiveState", "EarthPressure",
    "BetaPair", "SourceTerms", "primitive_from_conserved",
    "conserved_from_primitive", "earth_pressure", "beta", "flux_normal",
    "eigenvalues", "source", "rotation_defect",
]


class HyperbolicityError(Exception):
    """The model left its hyperbolic parameter range."""


class PrimitiveState(NamedTuple):
    h: np.ndarray
    u: np.ndarray
    v: np.ndarray


class EarthPressure(NamedTuple):
    kx: np.ndarray
    ky: np.ndarray


class BetaPair(NamedTuple):
    bx: np.ndarray
    by: np.ndarray


class SourceTerms(NamedTuple):
    sx: np.ndarray
    sy: np.ndarray


@dataclass(frozen=True)
class MaterialParams:
    """Friction angles and scaling constants.

    ``gravity`` multiplies both the depth-pressure factors and the source
    accelerations: 1 for the nondimensional chute setups, the physical g for
    the dimensional dam-break benchmark.  ``stretch`` scales the curvature
    term in the Coulomb friction.  Angles are in radians.
    """

    phi: float
    delta: float
    epsilon: float = 1.0
    stretch: float = 1.0
    gravity: float = 1.0
    h_dry: float = 1e-8
    u_reg: float = 1e-8

    def __post_init__(self):
        if not 0.0 <= self.delta <= self.phi < 0.5 * np.pi:
            raise ValueError("need 0 <= delta <= phi < pi/2, got "
                             f"phi={self.phi}, delta={self.delta}")
        if self.epsilon <= 0.0 or self.gravity <= 0.0:
            raise ValueError("epsilon and gravity must be positive")
        if self.h_dry <= 0.0 or self.u_reg <= 0.0:
            raise ValueError("h_dry and u_reg must be positive")


def primitive_from_conserved(U, h_dry) -> PrimitiveState:
    """Desingularized velocities: cells thinner than ``h_dry`` are at rest."""
    U = np.asarray(U, dtype=float)
    h = U[..., 0]
    wet = h >= h_dry
    hsafe = np.where(wet, h, 1.0)
    u = np.where(wet, U[..., 1] / hsafe, 0.0)
    v = np.where(wet, U[..., 2] / hsafe, 0.0)
    return PrimitiveState(h, u, v)


def conserved_from_primitive(h, u, v) -> np.ndarray:
    h, u, v = np.broadcast_arrays(np.asarray(h, float), u, v)
    return np.stack((h, h * u, h * v), axis=-1)


def earth_pressure(params: MaterialParams, dudx, dvdy) -> EarthPressure:
    """Mohr-Coulomb earth pressure coefficients.

    Active branches apply where the corresponding velocity gradient is >= 0
    (expanding flow), passive where it is negative.  The cross-slope
    coefficient is built from the already-selected downslope branch.
    """
    ratio = np.cos(params.phi) ** 2 / np.cos(params.delta) ** 2
    if ratio > 1.0:
        raise HyperbolicityError(
            f"invalid friction angles: cos^2(phi)/cos^2(delta) = {ratio} > 1")
    root = np.sqrt(1.0 - ratio)
    sec2 = 1.0 / np.cos(params.phi) ** 2
    kx_act = 2.0 * (1.0 - root) * sec2 - 1.0
    kx_pass = 2.0 * (1.0 + root) * sec2 - 1.0
    kx = np.where(np.asarray(dudx, float) >= 0.0, kx_act, kx_pass)

    disc = np.sqrt((kx - 1.0) ** 2 + 4.0 * np.tan(params.delta) ** 2)
    ky = np.where(np.asarray(dvdy, float) >= 0.0,
                  0.5 * (kx + 1.0 - disc), 0.5 * (kx + 1.0 + disc))
    return EarthPressure(kx, ky)


def beta(params: MaterialParams, zeta, K: EarthPressure) -> BetaPair:
    """Depth-pressure factors ``gravity * epsilon * cos(zeta) * K``."""
    scale = params.gravity * params.epsilon * np.cos(np.asarray(zeta, float))
    bx = scale * K.kx
    by = scale * K.ky
    if np.any(bx <= 0.0) or np.any(by <= 0.0):
        raise HyperbolicityError("nonpositive depth-pressure factor "
                                 "(cos(zeta) <= 0 loses hyperbolicity)")
    return BetaPair(bx, by)


def _flux_from_parts(h, hu, hv, u, v, bx, by, nx, ny):
    p_x = 0.5 * bx * h * h
    p_y = 0.5 * by * h * h
    f0 = hu * nx + hv * ny
    f1 = (hu * u + p_x) * nx + hu * v * ny
    f2 = hv * u * nx + (hv * v + p_y) * ny
    return np.stack((f0, f1, f2), axis=-1)


def flux_normal(U, beta: BetaPair, n, h_dry: float = 0.0) -> np.ndarray:
    """Physical flux along a unit direction ``n``."""
    U = np.asarray(U, dtype=float)
    n = np.asarray(n, dtype=float)
    h = U[..., 0]
    wet = h > 0.0 if h_dry == 0.0 else h >= h_dry
    hsafe = np.where(wet, h, 1.0)
    u = np.where(wet, U[..., 1] / hsafe, 0.0)
    v = np.where(wet, U[..., 2] / hsafe, 0.0)
    return _flux_from_parts(h, U[..., 1], U[..., 2], u, v,
                            beta.bx, beta.by, n[..., 0], n[..., 1])


def eigenvalues(U, beta: BetaPair, n, h_dry: float = 0.0):
    """Characteristic speeds along ``n``, ascending."""
    U = np.asarray(U, dtype=float)
    n = np.asarray(n, dtype=float)
    prim = primitive_from_conserved(U, h_dry if h_dry > 0.0 else np.finfo(float).tiny)
    un = prim.u * n[..., 0] + prim.v * n[..., 1]
    rad = prim.h * (beta.bx * n[..., 0] ** 2 + beta.by * n[..., 1] ** 2)
    if np.any(rad < 0.0):
        raise HyperbolicityError("negative wave-speed radicand")
    c = np.sqrt(rad)
    return un - c, un + 0.0 * c, un + c


def source(prim: PrimitiveState, zeta, dzeta_dx, grad_zb, params: MaterialParams
           ) -> SourceTerms:
    """Net driving accelerations (gravity, Coulomb friction, basal slope).

    ``grad_zb`` holds the basal topography gradient.  Curvature is
    ``-dzeta_dx``; the friction direction factor is zeroed below the
    ``u_reg`` speed threshold so a resting state stays at rest.  Returned
    values are accelerations: the conserved-momentum source is ``h * s``.
    """
    zeta = np.asarray(zeta, dtype=float)
    kappa = -np.asarray(dzeta_dx, dtype=float)
    dzb_dx, dzb_dy = grad_zb
    cosz = np.cos(zeta)
    speed = np.sqrt(prim.u ** 2 + prim.v ** 2)
    moving = speed >= params.u_reg
    inv = np.where(moving, 1.0 / np.where(moving, speed, 1.0), 0.0)
    fric = np.tan(params.delta) * (cosz + params.stretch * kappa * prim.u ** 2)
    g = params.gravity
    sx = g * (np.sin(zeta) - prim.u * inv * fric - params.epsilon * cosz * dzb_dx)
    sy = g * (-prim.v * inv * fric - params.epsilon * cosz * dzb_dy)
    return SourceTerms(sx, sy)


def rotation_defect(U, beta: BetaPair, theta) -> np.ndarray:
    """Residual of rotating the flux versus evaluating it in a rotated frame.

    Computes ``cos(theta) F(U) + sin(theta) G(U) - T^-1 F(T U)`` for the
    rotation ``T`` acting on the momentum components.  Nonzero third
    component (equal to ``(by - bx) h^2 sin(theta) / 2``) is what makes
    direction-split Riemann solvers inapplicable when ``bx != by``.
    """
    U = np.asarray(U, dtype=float)
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    F = flux_normal(U, beta, np.stack(np.broadcast_arrays(
        np.ones_like(theta), np.zeros_like(theta)), axis=-1))
    G = flux_normal(U, beta, np.stack(np.broadcast_arrays(
        np.zeros_like(theta), np.ones_like(theta)), axis=-1))

    rotated = np.stack((U[..., 0],
                        c * U[..., 1] + s * U[..., 2],
                        -s * U[..., 1] + c * U[..., 2]), axis=-1)
    Fr = flux_normal(rotated, beta, np.stack(np.broadcast_arrays(
        np.ones_like(theta), np.zeros_like(theta)), axis=-1))
    back = np.stack((Fr[..., 0],
                     c * Fr[..., 1] - s * Fr[..., 2],
                     s * Fr[..., 1] + c * Fr[..., 2]), axis=-1)
    return (c[..., None] * F + s[..., None] * G) - back
