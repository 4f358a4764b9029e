"""Lanczos tridiagonalization of the sector Liouvillian and K-complexity.

With ``[H, O_S] = i T O_S`` and Krylov operators ``O_n = i^n w_n``, the real
vectors obey ``b_n w_n = T w_{n-1} + b_{n-1} w_{n-2}`` and the amplitudes of
``O(t) = sum_n i^n phi_n(t) O_n`` satisfy
``phi_n' = b_n phi_{n-1} - b_{n+1} phi_{n+1}``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .couplings import CouplingMatrix, bandwidth
from .opspace import SectorVector, liouvillian_operator

DEFAULT_N_MAX = 200
DEFAULT_TIMES = np.round(np.arange(0.0, 10.0 + 1e-9, 0.05), 10)
DEFAULT_WINDOW = (0.5, 2.0)


@dataclass
class LanczosData:
    b: np.ndarray               # b_1 .. b_{K-1}
    truncated: bool = False
    basis: np.ndarray | None = None   # (K, dim) rows w_n, when stored

    @property
    def K(self) -> int:
        return len(self.b) + 1


@dataclass
class KrylovAmplitudes:
    times: np.ndarray
    phi: np.ndarray             # (n_times, K)


@dataclass
class ComplexitySeries:
    times: np.ndarray
    ck: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, val in self.metadata.items():
            buf.write(f"# {key}={val}\n")
        buf.write("t,ck\n")
        for t, c in zip(self.times, self.ck):
            buf.write(f"{t:.10g},{c:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ComplexitySeries":
        meta, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line and not line.startswith("t,"):
                rows.append([float(x) for x in line.split(",")])
        arr = np.array(rows).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], meta)


def lanczos_operator(matvec: Callable[[np.ndarray], np.ndarray], v0: np.ndarray,
                     n_max: int = DEFAULT_N_MAX, tol: float = 1e-10,
                     store_basis: bool = False) -> LanczosData:
    """Lanczos on a real antisymmetric operator with full reorthogonalization."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    v0 = np.asarray(v0, dtype=float)
    if abs(np.linalg.norm(v0) - 1.0) > 1e-12:
        raise ValueError("initial vector must be normalized")
    # preallocated basis; Gram-Schmidt runs against the filled rows only
    W = np.empty((min(n_max, v0.size) + 1, v0.size))
    W[0] = v0
    b = []
    truncated = False
    for n in range(1, n_max + 1):
        r = matvec(W[n - 1])
        if n >= 2:
            r = r + b[-1] * W[n - 2]
        for _ in range(2):
            r -= W[:n].T @ (W[:n] @ r)
        bn = float(np.linalg.norm(r))
        if bn < tol or n >= W.shape[0]:
            break
        b.append(bn)
        W[n] = r / bn
    else:
        truncated = True
    K = len(b) + 1
    return LanczosData(np.array(b), truncated, W[:K].copy() if store_basis else None)


def lanczos(J: CouplingMatrix, v0: SectorVector, n_max: int = DEFAULT_N_MAX,
            tol: float | None = None, store_basis: bool = False) -> LanczosData:
    """Krylov basis and Lanczos coefficients of ``v0`` under ``T``.

    The default termination threshold is ``1e-10`` times the bandwidth, which
    bounds the norm of ``T``.
    """
    if v0.L != J.L:
        raise ValueError("sector vector and couplings disagree on L")
    if tol is None:
        tol = 1e-10 * max(bandwidth(J), np.finfo(float).tiny)
    return lanczos_operator(liouvillian_operator(J, v0.s), v0.amplitudes,
                            n_max=n_max, tol=tol, store_basis=store_basis)


def evolve_amplitudes(ld: LanczosData, times) -> KrylovAmplitudes:
    """Exact amplitudes from the eigendecomposition of the tridiagonal matrix."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        raise ValueError("empty time grid")
    K = ld.K
    if K == 1:
        return KrylovAmplitudes(times, np.ones((times.size, 1)))
    # stemr (the default) can fail to converge on chains with tiny b_n
    lam, V = eigh_tridiagonal(np.zeros(K), ld.b, lapack_driver="stev")
    # psi = exp(i S t) e_0 with psi_n = i^n phi_n
    psi = (np.exp(1j * np.outer(times, lam)) * V[0]) @ V.T
    phi = (psi * (-1j) ** np.arange(K)).real
    # the spectral sum reproduces e_0 at t = 0 only to rounding
    phi[times == 0] = np.eye(1, K)
    return KrylovAmplitudes(times, phi)


def k_complexity(amps: KrylovAmplitudes, metadata: dict | None = None) -> ComplexitySeries:
    n = np.arange(amps.phi.shape[1])
    return ComplexitySeries(amps.times, amps.phi ** 2 @ n, dict(metadata or {}))


def complexity_curve(J: CouplingMatrix, v0: SectorVector, times=DEFAULT_TIMES,
                     n_max: int = DEFAULT_N_MAX, metadata: dict | None = None) -> ComplexitySeries:
    ld = lanczos(J, v0, n_max=n_max)
    return k_complexity(evolve_amplitudes(ld, times), metadata)


def delocalization_ratio(large: ComplexitySeries, small: ComplexitySeries,
                         window=DEFAULT_WINDOW) -> tuple[float, float]:
    """Window mean of ``ck_large / ck_small`` and its relative spread."""
    if large.times.shape != small.times.shape or not np.allclose(large.times, small.times):
        raise ValueError("series must share a time grid")
    lo, hi = window
    sel = (large.times >= lo) & (large.times <= hi)
    if not np.any(sel):
        raise ValueError(f"no grid points in window {window}")
    den = small.ck[sel]
    if np.any(np.abs(den) < 1e-12):
        raise ZeroDivisionError("small-operator complexity vanishes inside the window")
    ratio = large.ck[sel] / den
    mean = float(np.mean(ratio))
    return mean, float(np.std(ratio) / mean)
