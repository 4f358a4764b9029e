"""Brute-force Hilbert-space oracle for small systems.

Everything here works with explicit ``2^{L/2}``-dimensional matrices built
from the Jordan-Wigner map

    gamma^{2j-1} = (prod_{i<j} Z_i) X_j / sqrt(2)
    gamma^{2j}   = (prod_{i<j} Z_i) Y_j / sqrt(2)

and exists only to gate the fast code paths.  Nothing in this module calls
into :mod:`opdeloc.opspace` or :mod:`opdeloc.krylov`.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from .battery import PowerSeries
from .couplings import CouplingMatrix

MAX_MODES = 12
MAX_SUPEROP_MODES = 8
MAX_POWER_MODES = 10

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _cap(L: int, cap: int, what: str) -> None:
    if L % 2 or L < 2:
        raise ValueError(f"dense oracle needs an even L >= 2, got {L}")
    if L > cap:
        raise ValueError(f"{what} is capped at L={cap} (got L={L}); "
                         "use the sector or determinant code paths for larger systems")


def _kron_all(ops) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def pauli(axis: str, site: int, n_sites: int) -> np.ndarray:
    """Pauli ``axis`` on ``site`` (0-based) of an ``n_sites`` chain."""
    P = {"x": _X, "y": _Y, "z": _Z}[axis]
    return _kron_all([P if i == site else _I for i in range(n_sites)])


@lru_cache(maxsize=8)
def _gammas(L: int) -> tuple[np.ndarray, ...]:
    n = L // 2
    out = []
    for j in range(n):
        string = [_Z] * j
        rest = [_I] * (n - j - 1)
        out.append(_kron_all(string + [_X] + rest) / np.sqrt(2))
        out.append(_kron_all(string + [_Y] + rest) / np.sqrt(2))
    for g in out:
        g.setflags(write=False)
    return tuple(out)


def dense_gammas(L: int) -> list[np.ndarray]:
    _cap(L, MAX_MODES, "dense_gammas")
    return list(_gammas(L))


def dense_string(L: int, modes) -> np.ndarray:
    """``2^{s/2} prod gamma^i`` over ``modes`` in ascending order."""
    g = dense_gammas(L)
    modes = sorted(modes)
    out = np.eye(2 ** (L // 2), dtype=complex)
    for i in modes:
        out = out @ g[i]
    return out * 2 ** (len(modes) / 2)


def frobenius(A: np.ndarray, B: np.ndarray) -> complex:
    return np.trace(A.conj().T @ B) / A.shape[0]


def dense_hamiltonian(J: CouplingMatrix) -> np.ndarray:
    g = dense_gammas(J.L)
    H = np.zeros_like(g[0])
    for (a, b), val in zip(J.edges, J.values):
        H += 1j * val * (g[a] @ g[b])
    return H


def dense_bandwidth(J: CouplingMatrix) -> float:
    E = np.linalg.eigvalsh(dense_hamiltonian(J))
    return float(E[-1] - E[0])


def heisenberg(H: np.ndarray, O: np.ndarray, t: float) -> np.ndarray:
    E, V = np.linalg.eigh(H)
    W = V @ np.diag(np.exp(1j * E * t)) @ V.conj().T
    return W @ O @ W.conj().T


def dense_superoperator_sector(J: CouplingMatrix, s: int, *, check_leakage: bool = True):
    """Real matrix ``(O_{S'} | [H, O_S]) / i`` over the size-``s`` strings.

    Strings are ordered by increasing integer mask.  With ``check_leakage``
    the commutator is also projected onto every other size and the largest
    such component must vanish.
    """
    _cap(J.L, MAX_SUPEROP_MODES, "dense_superoperator_sector")
    L = J.L
    H = dense_hamiltonian(J)
    subsets = sorted((sum(1 << i for i in c), c) for c in combinations(range(L), s))
    basis = [dense_string(L, c) for _, c in subsets]
    M = np.zeros((len(basis), len(basis)), dtype=complex)
    others = []
    if check_leakage:
        others = [dense_string(L, c) for r in range(L + 1) if r != s
                  for c in combinations(range(L), r)]
    leak = 0.0
    for col, O in enumerate(basis):
        C = (H @ O - O @ H) / 1j
        for row, P in enumerate(basis):
            M[row, col] = frobenius(P, C)
        for P in others:
            leak = max(leak, abs(frobenius(P, C)))
    if np.max(np.abs(M.imag), initial=0.0) > 1e-12:
        raise AssertionError("superoperator sector has imaginary elements")
    if leak > 1e-12:
        raise AssertionError(f"commutator leaks out of sector s={s}: {leak:.3e}")
    return M.real


def dense_lanczos(J: CouplingMatrix, O0: np.ndarray, n_max: int = 50, tol: float = 1e-10):
    """Lanczos coefficients of ``[H, .]`` from ``O0`` with matrix commutators.

    Uses the Frobenius product and full Gram-Schmidt against all previous
    operators.
    """
    H = dense_hamiltonian(J)
    O0 = O0 / np.sqrt(frobenius(O0, O0).real)
    basis = [O0]
    b = []
    prev, b_prev = np.zeros_like(O0), 0.0
    cur = O0
    for _ in range(n_max):
        A = H @ cur - cur @ H - b_prev * prev
        for _ in range(2):
            for Q in basis:
                A = A - frobenius(Q, A) * Q
        bn = np.sqrt(frobenius(A, A).real)
        if bn < tol:
            break
        b.append(bn)
        prev, cur, b_prev = cur, A / bn, bn
        basis.append(cur)
    return np.array(b)


def battery_hamiltonian(axis: str, L: int) -> np.ndarray:
    n = L // 2
    return sum(pauli(axis, j, n) for j in range(n))


def dense_evolution_power(J: CouplingMatrix, axis: str, times, h: float = 1.0) -> PowerSeries:
    """Stored energy and average power from direct state evolution.

    The quench Hamiltonian is rescaled by its own many-body bandwidth, so a
    unit-bandwidth input is left unchanged.
    """
    _cap(J.L, MAX_POWER_MODES, "dense_evolution_power")
    times = np.asarray(times, dtype=float)
    H0 = h * battery_hamiltonian(axis, J.L)
    E0s, V0 = np.linalg.eigh(H0)
    psi0 = V0[:, 0]
    H1 = dense_hamiltonian(J)
    E1, V1 = np.linalg.eigh(H1)
    E1 = E1 / (E1[-1] - E1[0])
    c = V1.conj().T @ psi0
    psi_t = V1 @ (np.exp(-1j * np.outer(E1, times)) * c[:, None])
    energy = np.einsum("it,ij,jt->t", psi_t.conj(), H0, psi_t).real - E0s[0]
    return PowerSeries.from_energy(times, energy)


def dense_state_norms(J: CouplingMatrix, times) -> np.ndarray:
    """Norm of a random evolved state; a unitarity check."""
    H1 = dense_hamiltonian(J)
    E1, V1 = np.linalg.eigh(H1)
    rng = np.random.default_rng(0)
    psi = rng.normal(size=H1.shape[0]) + 1j * rng.normal(size=H1.shape[0])
    psi /= np.linalg.norm(psi)
    c = V1.conj().T @ psi
    psi_t = V1 @ (np.exp(-1j * np.outer(E1, times)) * c[:, None])
    return np.linalg.norm(psi_t, axis=0)
