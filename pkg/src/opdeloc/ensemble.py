"""Disorder and graph ensembles with counter-based seeding.

Realization ``r`` draws from ``SeedSequence(master_seed, spawn_key=(r,))``,
so results do not depend on how many realizations run, in which order, or
on how many worker processes share the work.  Watts-Strogatz graphs are
redrawn for every realization; complete, ring and star graphs are fixed.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import battery, couplings, krylov, netgen, opspace

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.01


class EnsembleError(RuntimeError):
    pass


@dataclass
class EnsembleSpec:
    L: int
    family: str = "complete"
    k: int = 1
    p: float = 0.0
    realizations: int = 1000
    master_seed: int = 0
    variance: float | None = None
    rescale: bool = True
    times: np.ndarray = field(default_factory=lambda: krylov.DEFAULT_TIMES.copy())

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        self.times = np.asarray(self.times, dtype=float)
        if self.family not in ("complete", "full", "star", "ring", "ws"):
            raise ValueError(f"unknown graph family {self.family!r}")


@dataclass
class EnsembleResult:
    mean: np.ndarray
    stderr: np.ndarray
    n: int
    failures: list[tuple[int, str]]
    samples: np.ndarray | None = None


def realization_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))))


def draw_realization(spec: EnsembleSpec, index: int, graph: netgen.Graph | None = None):
    """Graph and (optionally rescaled) couplings of realization ``index``."""
    rng = realization_rng(spec.master_seed, index)
    if graph is None:
        graph = netgen.make_graph(spec.family, spec.L, k=spec.k, p=spec.p, rng=rng)
    J = couplings.sample_couplings(graph, rng, variance=spec.variance)
    if spec.rescale:
        J = couplings.rescale_to_unit_bandwidth(J)
    return graph, J


# Tasks are small picklable callables: (graph, J, times) -> ndarray


@dataclass(frozen=True)
class ComplexityTask:
    """K-complexity curves of ``O = gamma^1 ... gamma^s`` for each size."""

    sizes: tuple[int, ...] = (1,)
    n_max: int = krylov.DEFAULT_N_MAX

    def __call__(self, graph, J, times):
        rows = []
        for s in self.sizes:
            v0 = opspace.SectorVector.basis(J.L, opspace.mask_of(range(s)))
            rows.append(krylov.complexity_curve(J, v0, times, n_max=self.n_max).ck)
        return np.array(rows)


@dataclass(frozen=True)
class BatteryTask:
    """Single-realization power ``(phi_0 - 1) / t * E_0``."""

    axis: str = "x"
    method: str = "determinant"

    def __call__(self, graph, J, times):
        return battery.charging_power(J, self.axis, times, method=self.method).power


@dataclass(frozen=True)
class BandwidthTask:
    """Bandwidth of the unrescaled couplings (use with ``rescale=False``)."""

    def __call__(self, graph, J, times):
        return np.array([couplings.bandwidth(J)])


@dataclass(frozen=True)
class BridgeTask:
    """Directly evolved battery power and the return-amplitude power, stacked."""

    axis: str = "x"

    def __call__(self, graph, J, times):
        from .dense_oracle import dense_evolution_power

        direct = dense_evolution_power(J, self.axis, times).power
        bridge = battery.charging_power(J, self.axis, times).power
        return np.array([direct, bridge])


def _run_chunk(spec: EnsembleSpec, task, indices, fixed_graph):
    out = []
    for r in indices:
        try:
            graph, J = draw_realization(spec, r, fixed_graph)
            out.append((r, np.asarray(task(graph, J, spec.times), dtype=float), None))
        except Exception as exc:  # recorded per realization
            out.append((r, None, f"{type(exc).__name__}: {exc}"))
    return out


def run_ensemble(spec: EnsembleSpec, task, threads: int = 1,
                 keep_samples: bool = False) -> EnsembleResult:
    """Per-time mean and standard error of ``task`` over the ensemble."""
    fixed = None
    if spec.family != "ws":
        fixed = netgen.make_graph(spec.family, spec.L, k=spec.k, p=spec.p)
    indices = list(range(spec.realizations))
    if threads <= 1:
        parts = [_run_chunk(spec, task, indices, fixed)]
    else:
        chunks = [indices[i::threads] for i in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_chunk, [spec] * threads, [task] * threads,
                                  chunks, [fixed] * threads))

    rows: dict[int, np.ndarray] = {}
    failures = []
    for part in parts:
        for r, val, err in part:
            if err is None:
                rows[r] = val
            else:
                failures.append((r, err))
    failures.sort()
    if len(failures) > MAX_FAILURE_FRACTION * spec.realizations:
        raise EnsembleError(f"{len(failures)} of {spec.realizations} realizations failed; "
                            f"first: {failures[0]}")
    for r, err in failures:
        log.warning("realization %d failed: %s", r, err)
    # fold in index order so the reduction is independent of scheduling
    samples = np.stack([rows[r] for r in sorted(rows)])
    n = len(samples)
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    return EnsembleResult(mean, stderr, n, failures, samples if keep_samples else None)
