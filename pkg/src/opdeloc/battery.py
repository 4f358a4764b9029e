"""Quantum-battery charging observables for SYK2 quenches.

The static battery is ``H_0 = sum_j sigma_j^axis`` on ``L/2`` spins (field
``h = 1``), prepared in its ground state with energy ``-L/2``.  Averaged over
couplings, the stored energy is ``E(t) = (1 - phi_0(t)) L/2`` where
``phi_0`` is the return amplitude of the normalized ``H_0``; the same
expression evaluated on a single realization is what :func:`charging_power`
returns.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .couplings import CouplingMatrix, bandwidth

BANDWIDTH_RTOL = 1e-8


@dataclass
class PowerSeries:
    times: np.ndarray
    energy: np.ndarray
    power: np.ndarray
    p_max: float
    t_star: float
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_energy(cls, times, energy, metadata: dict | None = None) -> "PowerSeries":
        times = np.asarray(times, dtype=float)
        energy = np.asarray(energy, dtype=float)
        power = np.zeros_like(energy)
        pos = times > 0
        power[pos] = energy[pos] / times[pos]
        ps = cls(times, energy, power, np.nan, np.nan, dict(metadata or {}))
        if np.any(pos):
            ps.p_max, ps.t_star = max_power(ps)
        return ps

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, val in self.metadata.items():
            buf.write(f"# {key}={val}\n")
        buf.write(f"# p_max={self.p_max:.12g}\n# t_star={self.t_star:.12g}\n")
        buf.write("t,E,P\n")
        for t, e, p in zip(self.times, self.energy, self.power):
            buf.write(f"{t:.10g},{e:.17g},{p:.17g}\n")
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps({**self.metadata, "p_max": self.p_max, "t_star": self.t_star},
                          sort_keys=True)


def ground_energy(L: int, h: float = 1.0) -> float:
    return -h * L / 2


def return_amplitude(J: CouplingMatrix, axis: str, times, method: str = "determinant",
                     n_max: int = 200) -> np.ndarray:
    """``phi_0(t) = (H_0 | H_0(t)) / (H_0 | H_0)`` for one coupling realization.

    ``method="determinant"`` uses propagator minors; ``method="krylov"``
    runs Lanczos in every size sector of ``H_0`` and recombines the
    per-sector return amplitudes with their Frobenius weights.
    """
    from .opspace import battery_autocorrelation, battery_operator

    op = battery_operator(axis, J.L)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if method == "determinant":
        phi0 = battery_autocorrelation(J, op, times)
    elif method == "krylov":
        from .krylov import evolve_amplitudes, lanczos

        phi0 = np.zeros(times.size)
        for s, (vec, weight) in op.sector_components().items():
            amps = evolve_amplitudes(lanczos(J, vec, n_max=n_max), times)
            phi0 += weight * amps.phi[:, 0]
    else:
        raise ValueError(f"unknown method {method!r}")
    # unit norm makes this exact; the determinant sum only gets it to rounding
    phi0[times == 0] = 1.0
    return phi0


def _check_unit_bandwidth(J: CouplingMatrix) -> None:
    mu = bandwidth(J)
    if abs(mu - 1.0) > BANDWIDTH_RTOL:
        raise ValueError(f"quench couplings must have unit bandwidth (got {mu:.6g}); "
                         "rescale them first")


def charging_power(J: CouplingMatrix, axis: str, times, method: str = "determinant",
                   h: float = 1.0) -> PowerSeries:
    """Single-realization power ``(phi_0(t) - 1) / t * E_0``.

    Only its coupling average equals the directly evolved battery power.
    """
    if axis not in ("x", "z"):
        raise ValueError(f"axis must be 'x' or 'z', got {axis!r}")
    _check_unit_bandwidth(J)
    times = np.asarray(times, dtype=float)
    phi0 = return_amplitude(J, axis, times, method=method)
    energy = (phi0 - 1.0) * ground_energy(J.L, h)
    return PowerSeries.from_energy(times, energy, {"L": J.L, "axis": axis})


def max_power(ps: PowerSeries, power_fn=None) -> tuple[float, float]:
    """Maximum of ``P_av`` over ``t > 0`` with golden-section refinement.

    The refinement searches one grid step either side of the discrete argmax,
    on ``power_fn`` when given and on a cubic spline of the grid otherwise.
    """
    pos = np.flatnonzero(ps.times > 0)
    if pos.size == 0:
        raise ValueError("power series has no positive times")
    t, P = ps.times[pos], ps.power[pos]
    i = int(np.argmax(P))
    if i == 0 or i == len(t) - 1:
        return float(P[i]), float(t[i])
    f = power_fn if power_fn is not None else CubicSpline(t, P)
    res = minimize_scalar(lambda x: -float(f(x)), bracket=(t[i - 1], t[i], t[i + 1]),
                          method="golden", tol=1e-10)
    if -res.fun < P[i] or not t[i - 1] <= res.x <= t[i + 1]:
        return float(P[i]), float(t[i])
    return float(-res.fun), float(res.x)


def perturbative_coefficients(L: int, mu: float, corrected: bool = False) -> np.ndarray:
    """Coefficients of ``t, t^3, t^5, t^7`` in the averaged x-battery power.

    Complete-graph SYK2 with coupling variance ``1/L``, quench Hamiltonian
    divided by ``mu``; valid up to eight nested commutators.

    By default the ``t^7`` bracket contains ``-15 s^3 r^3``.  Exact Wick
    contraction of the eighth moment at L = 4, 6, 8 requires ``+15 s^3 r^3``;
    ``corrected=True`` switches to that sign.
    """
    if L < 4 or L % 2:
        raise ValueError(f"L must be even and >= 4, got {L}")
    if not mu > 0:
        raise ValueError("mu must be positive")
    k = np.arange(1, L // 2 + 1, dtype=float)
    s = 2 * k - 1                  # operator size of sigma^x_k
    r = L + 1 - 2 * k              # = L - s
    h = L / 2 - 1
    c1 = np.sum(s * r) / (2 * L * mu ** 2)
    c3 = -np.sum(s * r * ((6 * k - 4) * L - 3 * s ** 2 + 2)) / (factorial(4) * L ** 2 * mu ** 4)
    c5 = np.sum(5 * s * (L - s) * (-6 * s * h * (L - s) + 3 * s ** 2 * (L - s) ** 2
                                   + 4 * h ** 2)) / (factorial(6) * L ** 3 * mu ** 6)
    quartic = 15 if corrected else -15
    c7 = -np.sum(7 * s * r * (-4 * s * (25 / 4 * L ** 2 - 51 / 2 * L + 32) * (2 * k - L - 1)
                              + quartic * s ** 3 * r ** 3 - 60 * (1 - 2 * k) ** 2 * h * r ** 2
                              - 8 * L ** 3 + 49 * L ** 2 - 118 * L + 80)) \
        / (factorial(8) * L ** 4 * mu ** 8)
    return np.array([c1, c3, c5, c7])


def perturbative_power(L: int, mu: float, times, corrected: bool = False) -> PowerSeries:
    times = np.asarray(times, dtype=float)
    c = perturbative_coefficients(L, mu, corrected)
    power = sum(ci * times ** (2 * i + 1) for i, ci in enumerate(c))
    energy = power * times
    ps = PowerSeries(times, energy, power, np.nan, np.nan, {"L": L, "mu": mu, "order": 7,
                                                      "corrected": corrected})
    if np.any(times > 0):
        ps.p_max, ps.t_star = max_power(
            ps, lambda x: sum(ci * x ** (2 * i + 1) for i, ci in enumerate(c)))
    return ps


@dataclass
class BandwidthFit:
    slope: float
    intercept: float
    residuals: np.ndarray

    def __call__(self, L):
        return self.intercept + self.slope * np.asarray(L, dtype=float)


def bandwidth_fit(samples) -> BandwidthFit:
    """Least-squares line ``mu(L)`` through ``(L, mu)`` pairs."""
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    Ls, mus = arr[:, 0], arr[:, 1]
    if np.unique(Ls).size < 2:
        raise ValueError("bandwidth fit needs at least two distinct L values")
    slope, intercept = np.polyfit(Ls, mus, 1)
    return BandwidthFit(float(slope), float(intercept), mus - (intercept + slope * Ls))
