"""Closed-form results for SYK2 on the star graph.

The hub is the last mode; leaf ``i`` couples to it with ``J_i``.  Starting
from ``O^{(s)} = 2^{s/2} gamma^1 ... gamma^s`` the Krylov space has
dimension 3 (dimension 2 when ``s = L - 1``), with

    b_1^2 = sum_{i <= s} J_i^2,    b_2^2 = sum_{i > s} J_i^2,
    b_1^2 + b_2^2 = mu^2.

After rescaling to unit bandwidth the leaf weights ``J_i^2 / mu^2`` are
Dirichlet(1/2, ..., 1/2) distributed for Gaussian couplings, which gives the
even moments of ``b = b_1`` in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtri
from scipy.stats import qmc


def _peak():
    # maximum of (1 - cos t) / t: stationary where t sin t = 1 - cos t
    t = brentq(lambda x: x * np.sin(x) - (1 - np.cos(x)), 2.0, 3.0, xtol=1e-15)
    return t, (1 - np.cos(t)) / t


T_PEAK, P_PEAK = _peak()


@dataclass
class StarParams:
    L: int
    s: int | None = None
    axis: str | None = None
    couplings: np.ndarray | None = None     # J_1 .. J_{L-1}

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("star graph needs L >= 2")
        if (self.s is None) == (self.axis is None):
            raise ValueError("give exactly one of s or axis")
        if self.s is not None and not 1 <= self.s < self.L:
            raise ValueError(f"need 1 <= s < L, got s={self.s}, L={self.L}")
        if self.axis is not None and self.axis not in ("x", "z"):
            raise ValueError(f"axis must be 'x' or 'z', got {self.axis!r}")
        if self.couplings is not None:
            self.couplings = np.asarray(self.couplings, dtype=float)
            if self.couplings.shape != (self.L - 1,):
                raise ValueError(f"expected {self.L - 1} couplings")


def x_leaf_weights(L: int) -> np.ndarray:
    """Weight of ``J_i^2`` in ``b_1^2`` for the x-battery operator."""
    i = np.arange(1, L)
    # leaf i sits inside every sigma^x_j string with 2j - 1 >= i
    count = L // 2 - (i + 2) // 2 + 1
    return 2.0 * count / L


def star_lanczos_coefficients(params: StarParams) -> tuple[float, float]:
    if params.couplings is None:
        raise ValueError("per-realization formulas need couplings")
    J2 = params.couplings ** 2
    if params.s is not None:
        b1sq = J2[: params.s].sum()
    elif params.axis == "x":
        b1sq = x_leaf_weights(params.L) @ J2
    else:
        b1sq = 2.0 / params.L * J2[: params.L - 2].sum()
    return float(np.sqrt(b1sq)), float(np.sqrt(max(J2.sum() - b1sq, 0.0)))


def star_wavefunctions(b1: float, b2: float, t):
    """The three Krylov amplitudes of a K=3 chain with coefficients b1, b2."""
    t = np.asarray(t, dtype=float)
    mu2 = b1 ** 2 + b2 ** 2
    mu = np.sqrt(mu2)
    c, s = np.cos(mu * t), np.sin(mu * t)
    phi0 = (b2 ** 2 + b1 ** 2 * c) / mu2
    phi1 = b1 * s / mu
    phi2 = b1 * b2 * (1 - c) / mu2
    return phi0, phi1, phi2


def star_lanczos_wavefunctions(params: StarParams, t):
    b1, b2 = star_lanczos_coefficients(params)
    return (b1, b2, *star_wavefunctions(b1, b2, t))


def star_moments(n: int, s: int, L: int) -> float:
    """``E[b^{2n}]`` for the rescaled star with a size-``s`` initial string."""
    if n < 1:
        raise ValueError("moment order must be >= 1")
    j = np.arange(n)
    return float(np.prod((s + 2.0 * j) / (L - 1 + 2.0 * j)))


def b2_x_mean(L: int) -> float:
    return 1.0 - 0.5 * (L - 2) / (L - 1)


def b4_x_exact(L: int) -> float:
    """``E[b_x^4]`` from second moments of Dirichlet(1/2) leaf weights."""
    w = x_leaf_weights(L)
    return float((2 * np.sum(w ** 2) + np.sum(w) ** 2) / ((L - 1) * (L + 1)))


def b4_x_sampled(L: int, n_points: int = 2 ** 20, seed: int = 0) -> tuple[float, float]:
    """Quasi-Monte Carlo ``E[b_x^4]`` over Gaussian couplings, with a rough error."""
    d = L - 1
    sob = qmc.Sobol(d, scramble=True, seed=seed)
    total, total2, n = 0.0, 0.0, 0
    w = x_leaf_weights(L)
    chunk = 2 ** 16
    while n < n_points:
        u = sob.random(min(chunk, n_points - n))
        g2 = ndtri(np.clip(u, 1e-16, 1 - 1e-16)) ** 2
        b2 = (g2 @ w) / g2.sum(axis=1)
        total += np.sum(b2 ** 2)
        total2 += np.sum(b2 ** 4)
        n += len(u)
    mean = total / n
    return float(mean), float(np.sqrt(max(total2 / n - mean ** 2, 0.0) / n))


@dataclass
class StarCurves:
    phi0: np.ndarray
    ck: np.ndarray | None = None
    ck_approx: np.ndarray | None = None
    power: np.ndarray | None = None
    p_max: float | None = None


def _power_profile(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = (1 - np.cos(t[pos])) / t[pos]
    return out


def star_ensemble_curves(L: int, t, *, s: int | None = None, axis: str | None = None) -> StarCurves:
    """Coupling-averaged curves for the rescaled star.

    For ``s`` these hold for any i.i.d. couplings except the complexity,
    which uses the Gaussian fourth moment.  For ``axis="z"`` the reference
    closed forms are returned as they stand; see
    :func:`star_z_battery_derived` for the values the pipeline produces.
    """
    StarParams(L, s=s, axis=axis)
    t = np.asarray(t, dtype=float)
    c, sn = np.cos(t), np.sin(t)
    if s is not None:
        b2 = s / (L - 1)
        ck = b2 * sn ** 2 + 2 * s * (L - 1 - s) / ((L - 1) * (L + 1)) * (c - 1) ** 2
        return StarCurves(1 + b2 * (c - 1), ck)
    if axis == "x":
        b2 = b2_x_mean(L)
        ck = b2 * (sn ** 2 + 2 * (1 - c) ** 2) - 2 * b4_x_exact(L) * (1 - c) ** 2
        ck_approx = b2 * (sn ** 2 + 2 * (1 - c) ** 2) - 2 * b2 ** 2 * (1 - c) ** 2
        power = L / 2 * b2 * _power_profile(t)
        return StarCurves(1 + b2 * (c - 1), ck, ck_approx, power, P_PEAK / 2 * b2 * L)
    frac = (L - 2) / (L - 1)
    ck = 2 / L * (frac * sn ** 2 + 2 * frac * (1 - c) ** 2)
    return StarCurves(1 - 2 / L * frac * (1 - c), ck, None, frac * _power_profile(t), P_PEAK * frac)


def star_z_battery_derived(L: int, t) -> StarCurves:
    """z-battery return amplitude and power obtained by direct evaluation.

    Every pair ``(2j-1, 2j)`` of leaves contributes ``2/(L-1)`` to
    ``E[b_1^2]`` and the pair holding the hub contributes ``(L-2)/(L-1)``,
    so ``E[b_1^2] = 4 (L-2) / (L (L-1))``, twice the reference value.
    """
    t = np.asarray(t, dtype=float)
    frac = 2 * (L - 2) / (L - 1)
    return StarCurves(1 - 2 / L * frac * (1 - np.cos(t)), power=frac * _power_profile(t),
                      p_max=P_PEAK * frac)
