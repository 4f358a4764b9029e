"""Ensemble summaries behind the figure-level trends.

Each helper runs one ensemble and reduces it to the quantity plotted
against ``L``: complexity curves, the large/small complexity ratio, and the
maximum charging power.  Uncertainties of nonlinear summaries come from a
leave-one-out jackknife over realizations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import battery, ensemble, krylov


@dataclass(frozen=True)
class Model:
    name: str
    family: str
    k: int = 0
    p: float = 0.0


MODELS = (
    Model("full", "complete"),
    Model("ws", "ws", 1, 0.1),
    Model("ws", "ws", 1, 0.9),
    Model("ws", "ws", 2, 0.1),
    Model("ws", "ws", 2, 0.9),
)


def find_model(name: str, k: int = 0, p: float = 0.0) -> Model:
    for m in MODELS:
        if m.name == name and (m.family == "complete" or (m.k == k and m.p == p)):
            return m
    raise KeyError(f"no model {name!r} with k={k}, p={p}")


def jackknife(stat, samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``stat`` of the sample mean and its jackknife standard error.

    ``stat`` maps a mean over axis 0 to an array or scalar.
    """
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    full = np.asarray(stat(samples.mean(axis=0)))
    if n < 2:
        return full, np.zeros_like(full)
    loo = (samples.sum(axis=0) - samples) / (n - 1)
    reps = np.array([stat(m) for m in loo])
    err = np.sqrt((n - 1) / n * np.sum((reps - reps.mean(axis=0)) ** 2, axis=0))
    return full, err


def weighted_slope(x, y, yerr) -> tuple[float, float]:
    """Weighted least-squares slope and its standard error."""
    x, y, yerr = (np.asarray(a, dtype=float) for a in (x, y, yerr))
    if np.unique(x).size < 2:
        raise ValueError("slope needs at least two distinct x values")
    if np.any(yerr <= 0):
        raise ValueError("weighted slope needs positive errors")
    coef, cov = np.polyfit(x, y, 1, w=1.0 / yerr, cov="unscaled")
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


def _spec(model: Model, L: int, realizations: int, seed: int, times) -> ensemble.EnsembleSpec:
    return ensemble.EnsembleSpec(L, model.family, k=max(model.k, 1), p=model.p,
                                 realizations=realizations, master_seed=seed, times=times)


def complexity_samples(model: Model, L: int, sizes, realizations: int, seed: int,
                       times=krylov.DEFAULT_TIMES, threads: int = 1,
                       n_max: int = krylov.DEFAULT_N_MAX) -> np.ndarray:
    """Per-realization complexity curves, shape ``(n, len(sizes), n_times)``."""
    res = ensemble.run_ensemble(_spec(model, L, realizations, seed, times),
                                ensemble.ComplexityTask(tuple(sizes), n_max),
                                threads=threads, keep_samples=True)
    return res.samples


def ratio_from_samples(samples: np.ndarray, times, window=krylov.DEFAULT_WINDOW):
    """``(R, flatness, stderr)`` from size-1 / size-L/2 complexity samples.

    ``samples[:, 0]`` holds the small operator and ``samples[:, 1]`` the large one.
    """
    times = np.asarray(times, dtype=float)

    def stat(mean):
        small = krylov.ComplexitySeries(times, mean[0])
        large = krylov.ComplexitySeries(times, mean[1])
        return krylov.delocalization_ratio(large, small, window)[0]

    R, err = jackknife(stat, samples)
    mean = samples.mean(axis=0)
    _, flat = krylov.delocalization_ratio(krylov.ComplexitySeries(times, mean[1]),
                                          krylov.ComplexitySeries(times, mean[0]), window)
    return float(R), float(flat), float(err)


def power_samples(model: Model, L: int, axis: str, realizations: int, seed: int,
                  times, threads: int = 1) -> np.ndarray:
    res = ensemble.run_ensemble(_spec(model, L, realizations, seed, times),
                                ensemble.BatteryTask(axis), threads=threads, keep_samples=True)
    return res.samples


def pmax_from_samples(samples: np.ndarray, times) -> tuple[float, float, float]:
    """``(p_max, stderr, t_star)`` of the ensemble-mean power curve."""
    times = np.asarray(times, dtype=float)

    def stat(mean):
        return battery.PowerSeries.from_energy(times, mean * times).p_max

    pm, err = jackknife(stat, samples)
    t_star = battery.PowerSeries.from_energy(times, samples.mean(axis=0) * times).t_star
    return float(pm), float(err), float(t_star)


def bandwidth_samples(L_values, realizations: int, seed: int) -> list[tuple[int, float]]:
    """Mean unrescaled complete-graph bandwidth at each ``L``."""
    out = []
    for L in L_values:
        spec = ensemble.EnsembleSpec(L, "complete", realizations=realizations,
                                     master_seed=seed, rescale=False, times=np.zeros(1))
        out.append((int(L), float(ensemble.run_ensemble(spec, ensemble.BandwidthTask()).mean[0])))
    return out
