"""Modified HLL interface flux with wet/dry wave-speed estimates.

Every function broadcasts, so one code path serves a single interface in a
unit check and all mesh edges at once inside the corrector.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .physics import BetaPair, HyperbolicityError, _flux_from_parts

__all__ = ["RiemannStates", "WaveSpeeds", "gravity_coeff", "star_estimates",
           "wave_speeds", "hll_flux"]


class RiemannStates(NamedTuple):
    """Left/right traces, their depth-pressure factors and the L-to-R normal."""
    uL: np.ndarray
    uR: np.ndarray
    betaL: BetaPair
    betaR: BetaPair
    n: np.ndarray


class WaveSpeeds(NamedTuple):
    sL: np.ndarray
    sR: np.ndarray


def gravity_coeff(beta: BetaPair, n):
    """Directional gravity coefficient ``bx nx^2 + by ny^2``."""
    n = np.asarray(n, dtype=float)
    c = beta.bx * n[..., 0] ** 2 + beta.by * n[..., 1] ** 2
    if np.any(c < 0.0):
        raise HyperbolicityError("negative directional gravity coefficient")
    return c


def _split(states: RiemannStates):
    uL = np.asarray(states.uL, dtype=float)
    uR = np.asarray(states.uR, dtype=float)
    n = np.asarray(states.n, dtype=float)
    hL, hR = uL[..., 0], uR[..., 0]
    cL = gravity_coeff(states.betaL, n)
    cR = gravity_coeff(states.betaR, n)
    return uL, uR, n, hL, hR, cL, cR


def _normal_velocity(U, h, n, wet):
    hsafe = np.where(wet, h, 1.0)
    u = np.where(wet, U[..., 1] / hsafe, 0.0)
    v = np.where(wet, U[..., 2] / hsafe, 0.0)
    return u, v, u * n[..., 0] + v * n[..., 1]


def _star(unL, unR, hL, hR, cL, cR):
    aL = np.sqrt(cL * hL)
    aR = np.sqrt(cR * hR)
    u_star = 0.5 * (unL + unR) + aL - aR
    c_bar = 0.5 * (cL + cR)
    h_star = (0.5 * (aL + aR) + 0.25 * (unL - unR)) ** 2 / c_bar
    return u_star, h_star


def star_estimates(states: RiemannStates):
    """Middle-state estimates ``(u*, h*)`` for two wet sides."""
    uL, uR, n, hL, hR, cL, cR = _split(states)
    if np.any(hL <= 0.0) or np.any(hR <= 0.0):
        raise ValueError("star estimates need wet states on both sides")
    _, _, unL = _normal_velocity(uL, hL, n, hL > 0)
    _, _, unR = _normal_velocity(uR, hR, n, hR > 0)
    return _star(unL, unR, hL, hR, cL, cR)


def _speeds(unL, unR, hL, hR, cL, cR, wetL, wetR):
    with np.errstate(invalid="ignore"):
        hLs = np.where(wetL, hL, 0.0)
        hRs = np.where(wetR, hR, 0.0)
        aL = np.sqrt(cL * hLs)
        aR = np.sqrt(cR * hRs)
        u_star, h_star = _star(unL, unR, np.where(wetL, hLs, 1.0),
                               np.where(wetR, hRs, 1.0), cL, cR)
        h_star = np.maximum(h_star, 0.0)
        sL_wet = np.minimum(unL - aL, u_star - np.sqrt(cL * h_star))
        sR_wet = np.maximum(unR + aR, u_star + np.sqrt(cR * h_star))
    sL = np.where(wetL & wetR, sL_wet,
                  np.where(wetR, unR - 2.0 * aR, unL - aL))
    sR = np.where(wetL & wetR, sR_wet,
                  np.where(wetR, unR + aR, unL + 2.0 * aL))
    return WaveSpeeds(sL, sR)


def wave_speeds(states: RiemannStates, star=None) -> WaveSpeeds:
    """Signal-speed estimates; dry sides use the front-speed branches."""
    uL, uR, n, hL, hR, cL, cR = _split(states)
    wetL = hL > 0.0
    wetR = hR > 0.0
    if not np.any(wetL | wetR):
        raise ValueError("wave speeds undefined with both sides dry")
    _, _, unL = _normal_velocity(uL, hL, n, wetL)
    _, _, unR = _normal_velocity(uR, hR, n, wetR)
    if star is not None and np.all(wetL & wetR):
        u_star, h_star = star
        aL = np.sqrt(cL * hL)
        aR = np.sqrt(cR * hR)
        return WaveSpeeds(np.minimum(unL - aL, u_star - np.sqrt(cL * h_star)),
                          np.maximum(unR + aR, u_star + np.sqrt(cR * h_star)))
    return _speeds(unL, unR, hL, hR, cL, cR, wetL, wetR)


def hll_flux(states: RiemannStates, h_dry: float = 1e-8) -> np.ndarray:
    """HLL interface flux; both-sides-dry interfaces carry exactly no flux."""
    uL, uR, n, hL, hR, cL, cR = _split(states)
    nx, ny = n[..., 0], n[..., 1]
    wetL = hL >= h_dry
    wetR = hR >= h_dry

    uLvel, vLvel, unL = _normal_velocity(uL, hL, n, wetL)
    uRvel, vRvel, unR = _normal_velocity(uR, hR, n, wetR)
    # Momenta rebuilt from desingularized velocities so sub-threshold films
    # carry no spurious momentum into the jump term.
    huL, hvL = hL * uLvel, hL * vLvel
    huR, hvR = hR * uRvel, hR * vRvel

    fL = _flux_from_parts(hL, huL, hvL, uLvel, vLvel,
                          states.betaL.bx, states.betaL.by, nx, ny)
    fR = _flux_from_parts(hR, huR, hvR, uRvel, vRvel,
                          states.betaR.bx, states.betaR.by, nx, ny)

    sL, sR = _speeds(unL, unR, np.where(wetL, hL, 0.0), np.where(wetR, hR, 0.0),
                     cL, cR, wetL, wetR)

    dU = (np.stack((hR, huR, hvR), axis=-1)
          - np.stack((hL, huL, hvL), axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        span = sR - sL
        middle = ((sR[..., None] * fL - sL[..., None] * fR
                   + (sR * sL)[..., None] * dU)
                  / np.where(span == 0.0, 1.0, span)[..., None])

    flux = np.where((sL >= 0.0)[..., None], fL,
                    np.where((sR <= 0.0)[..., None], fR, middle))
    return np.where((wetL | wetR)[..., None], flux, 0.0)
