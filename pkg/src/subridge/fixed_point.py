"""Scalar fixed point governing the asymptotic behaviour of ridge ensembles.

For a penalty ``lam >= 0`` and an aspect ratio ``theta``, v solves

    1/v = lam + theta * int r / (1 + v r) dH(r),

with the boundary conventions v = +inf at (lam = 0, theta < 1) and v = 0 at
theta = +inf. The continuously extended product ell = lam * v and the
rescaled second moment v^2 * int r^2 (1 + v r)^-2 dH stay finite in every
regime and are what downstream formulas consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .spectra import SpectralMeasure

__all__ = [
    "FixedPointSolution",
    "ExcludedBoundaryError",
    "DivergentVarianceError",
    "FixedPointConvergenceError",
    "solve_v",
    "tilde_v",
    "tilde_c",
]

RESIDUAL_TOL = 1e-12
MAX_ITER = 200


class ExcludedBoundaryError(ValueError):
    """The pair (lam = 0, theta = 1) is outside the theory's domain."""


class DivergentVarianceError(ValueError):
    """vartheta at or above the interpolation threshold: variance diverges."""


class FixedPointConvergenceError(RuntimeError):
    def __init__(self, msg, bracket=None):
        super().__init__(msg)
        self.bracket = bracket


@dataclass(frozen=True)
class FixedPointSolution:
    """Solved fixed point for one (lam, theta) pair.

    v may be +inf (ridgeless, theta < 1); ell and scaled_second_moment are
    its finite continuous extensions.
    """

    lam: float
    theta: float
    v: float
    ell: float
    scaled_second_moment: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.v)


def _resolvent_sum(x: float, H: SpectralMeasure) -> float:
    """int r / (1 + x r) dH."""
    return float(np.sum(H.weights * H.values / (1.0 + x * H.values)))


def _scaled_second_moment(x: float, H: SpectralMeasure) -> float:
    """int (x r / (1 + x r))^2 dH, monotone in x with limit 1."""
    t = x * H.values
    return float(np.sum(H.weights * (t / (1.0 + t)) ** 2))


def solve_v(lam: float, theta: float, H: SpectralMeasure) -> FixedPointSolution:
    """Solve the fixed-point equation for v(-lam; theta).

    Handles the boundary regimes: theta = +inf gives v = 0; lam = 0 with
    theta < 1 gives v = +inf with ell = 1 - theta; lam = 0 with theta = 1
    is excluded.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if theta <= 0:
        raise ValueError("theta must be positive")
    if lam == 0.0 and theta == 1.0:
        raise ExcludedBoundaryError("lam = 0 with theta = 1 is excluded")

    if math.isinf(theta):
        return FixedPointSolution(lam, theta, v=0.0, ell=0.0, scaled_second_moment=0.0)

    if lam == 0.0 and theta < 1.0:
        return FixedPointSolution(
            lam, theta, v=math.inf, ell=1.0 - theta, scaled_second_moment=1.0
        )

    def f(x: float) -> float:
        return 1.0 / x - theta * _resolvent_sum(x, H) - lam

    r_min, r_max = H.support
    if lam > 0.0:
        lo, hi = 1e-300, 1.0 / lam
        # f(1/lam) = lam - theta * positive - lam < 0; f(0+) = +inf
        if f(hi) >= 0.0:  # numerically flat spectrum edge case
            hi *= 1.0 + 1e-12
    else:
        # lam = 0, theta > 1: root of 1/x = theta * int r/(1+xr) dH,
        # bracketed by geometric expansion.
        lo = 1e-12
        hi = max(1.0, 2.0 / (r_min * (theta - 1.0)))
        it = 0
        while f(hi) > 0.0:
            hi *= 2.0
            it += 1
            if it > 200:
                raise FixedPointConvergenceError(
                    "bracket expansion failed", bracket=(lo, hi)
                )

    try:
        v = brentq(f, lo, hi, xtol=1e-300, rtol=4.0 * np.finfo(float).eps,
                   maxiter=MAX_ITER)
    except RuntimeError as exc:
        raise FixedPointConvergenceError(str(exc), bracket=(lo, hi)) from exc

    lhs = 1.0 / v
    rhs = lam + theta * _resolvent_sum(v, H)
    if abs(lhs - rhs) > RESIDUAL_TOL * max(abs(lhs), 1.0):
        raise FixedPointConvergenceError(
            f"residual {abs(lhs - rhs):.3e} above tolerance", bracket=(lo, hi)
        )
    return FixedPointSolution(
        lam, theta, v=v, ell=lam * v, scaled_second_moment=_scaled_second_moment(v, H)
    )


def tilde_v(
    lam: float, vartheta: float, theta: float, H: SpectralMeasure,
    sol: FixedPointSolution | None = None,
) -> float:
    """Variance-inflation constant vtilde(-lam; vartheta, theta).

    Equal to vartheta*A / (v^-2 - vartheta*A) with A = int r^2 (1+vr)^-2 dH,
    evaluated in the v^2-rescaled form vartheta*Ahat / (1 - vartheta*Ahat)
    so the v = +inf regime is a regular point.
    """
    if vartheta > theta:
        raise ValueError("vartheta must not exceed theta")
    if sol is None:
        sol = solve_v(lam, theta, H)
    a_hat = sol.scaled_second_moment
    denom = 1.0 - vartheta * a_hat
    if denom <= 0.0:
        raise DivergentVarianceError(
            f"vartheta = {vartheta} at or above the interpolation threshold"
        )
    return vartheta * a_hat / denom


def tilde_c(
    lam: float, theta: float, G: SpectralMeasure,
    sol: FixedPointSolution | None = None,
    H: SpectralMeasure | None = None,
) -> float:
    """Bias constant ctilde(-lam; theta) = int r (1 + v r)^-2 dG.

    Zero when v = +inf; int r dG when v = 0 (theta = inf limit).
    """
    if sol is None:
        if H is None:
            raise ValueError("either sol or H is required")
        sol = solve_v(lam, theta, H)
    if not sol.finite:
        return 0.0
    v = sol.v
    return float(np.sum(G.weights * G.values / (1.0 + v * G.values) ** 2))
