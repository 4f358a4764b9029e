"""Majorana-string operator space.

A string is a bitmask over modes (bit ``i`` set means ``gamma^{i+1}`` is
present).  Its canonical operator is ``O_S = 2^{s/2} prod_{i in S} gamma^i``
in ascending mode order; these form an orthonormal basis for the Frobenius
product ``(A|B) = Tr[A^dagger B] / D``.

A quadratic Hamiltonian preserves string size, so the Liouvillian splits
into blocks over the size-``s`` sectors.  Within a sector

    [H, O_S] = i sum_{S'} T_{S'S} O_{S'}

with ``T`` real antisymmetric.  Only edges ``(a, b)`` with exactly one
endpoint in ``S`` contribute, sending ``S`` to ``S ^ {a, b}`` with weight
``J_ab * sigma`` where, for ``m`` the number of modes of ``S`` strictly
between ``a`` and ``b``, ``sigma = -(-1)^m`` if ``a`` is in ``S`` and
``+(-1)^m`` if ``b`` is.

Sector vectors are dense arrays indexed by the colexicographic rank of the
mask, which coincides with the numeric order of the masks.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
import scipy.sparse as sp

from .couplings import CouplingMatrix, propagator

# beyond this many stored nonzeros the Liouvillian is applied edge by edge
SPARSE_NNZ_LIMIT = 40_000_000


def popcount(x):
    return np.bitwise_count(np.asarray(x, dtype=np.int64)).astype(np.int64)


def mask_of(modes) -> int:
    m = 0
    for i in modes:
        m |= 1 << int(i)
    return m


def modes_of(mask: int) -> list[int]:
    return [i for i in range(int(mask).bit_length()) if (mask >> i) & 1]


def sector_rank(mask: int) -> int:
    """Colex rank of ``mask`` among masks of the same popcount."""
    if mask < 0:
        raise ValueError("mask must be non-negative")
    return sum(comb(pos, k + 1) for k, pos in enumerate(modes_of(mask)))


def sector_unrank(index: int, L: int, s: int) -> int:
    """Inverse of :func:`sector_rank` for strings of size ``s`` on ``L`` modes."""
    if not 0 <= s <= L:
        raise ValueError(f"size {s} out of range for L={L}")
    if not 0 <= index < comb(L, s):
        raise ValueError(f"index {index} out of range for C({L},{s})")
    mask, pos = 0, L - 1
    for k in range(s, 0, -1):
        while comb(pos, k) > index:
            pos -= 1
        index -= comb(pos, k)
        mask |= 1 << pos
        pos -= 1
    return mask


class Sector:
    """All strings of size ``s`` on ``L`` modes, sorted by rank."""

    def __init__(self, L: int, s: int):
        if not 0 <= s <= L:
            raise ValueError(f"size {s} out of range for L={L}")
        if L > 62:
            raise ValueError("masks are limited to 62 modes")
        self.L = L
        self.s = s
        if L <= 24:
            allm = np.arange(1 << L, dtype=np.int64)
            self.masks = allm[popcount(allm) == s]
        else:
            self.masks = np.sort(np.fromiter(
                (mask_of(c) for c in itertools.combinations(range(L), s)),
                dtype=np.int64, count=comb(L, s)))
        self.masks.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.masks)

    def index_of(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        idx = np.searchsorted(self.masks, masks)
        if np.any(idx >= self.dim) or np.any(self.masks[np.minimum(idx, self.dim - 1)] != masks):
            raise ValueError(f"mask not in sector (L={self.L}, s={self.s})")
        return idx

    def __repr__(self):
        return f"Sector(L={self.L}, s={self.s}, dim={self.dim})"


@lru_cache(maxsize=32)
def get_sector(L: int, s: int) -> Sector:
    return Sector(L, s)


@dataclass
class SectorVector:
    L: int
    s: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.amplitudes.shape != (comb(self.L, self.s),):
            raise ValueError(f"expected {comb(self.L, self.s)} amplitudes for "
                             f"(L={self.L}, s={self.s}), got {self.amplitudes.shape}")

    @classmethod
    def basis(cls, L: int, mask: int) -> "SectorVector":
        s = int(popcount(mask))
        v = np.zeros(comb(L, s))
        v[get_sector(L, s).index_of(mask)] = 1.0
        return cls(L, s, v)

    @property
    def sector(self) -> Sector:
        return get_sector(self.L, self.s)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _edge_action(sector: Sector, a: int, b: int):
    """Source indices, target indices and signs for one edge ``a < b``."""
    masks = sector.masks
    has_a = (masks >> a) & 1
    has_b = (masks >> b) & 1
    src = np.flatnonzero(has_a != has_b)
    m = masks[src]
    between = ((1 << b) - 1) ^ ((1 << (a + 1)) - 1)
    parity = 1 - 2 * (popcount(m & between) & 1)
    sign = np.where(has_a[src] == 1, -parity, parity).astype(float)
    dst = sector.index_of(m ^ ((1 << a) | (1 << b)))
    return src, dst, sign


def apply_liouvillian(J: CouplingMatrix, v: SectorVector) -> SectorVector:
    """Matrix-free ``w = T v`` streamed edge by edge."""
    if v.L != J.L:
        raise ValueError(f"sector vector has L={v.L}, couplings have L={J.L}")
    sector = v.sector
    w = np.zeros_like(v.amplitudes)
    for (a, b), val in zip(J.edges, J.values):
        if val == 0.0:
            continue
        src, dst, sign = _edge_action(sector, int(a), int(b))
        # targets are distinct for a fixed edge
        w[dst] += val * sign * v.amplitudes[src]
    return SectorVector(v.L, v.s, w)


class _Structure:
    def __init__(self, L: int, s: int, edges: np.ndarray):
        sector = get_sector(L, s)
        rows, cols, signs, eids = [], [], [], []
        for e, (a, b) in enumerate(edges):
            src, dst, sign = _edge_action(sector, int(a), int(b))
            rows.append(dst)
            cols.append(src)
            signs.append(sign)
            eids.append(np.full(len(src), e, dtype=np.int64))
        self.dim = sector.dim
        self.rows = np.concatenate(rows) if rows else np.zeros(0, np.int64)
        self.cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)
        self.signs = np.concatenate(signs) if signs else np.zeros(0)
        self.eids = np.concatenate(eids) if eids else np.zeros(0, np.int64)
        # CSR pattern is fixed; only data changes between realizations
        pattern = sp.csr_matrix((np.arange(1, len(self.rows) + 1, dtype=float),
                                 (self.rows, self.cols)), shape=(self.dim, self.dim))
        self.indptr = pattern.indptr
        self.indices = pattern.indices
        self.order = pattern.data.astype(np.int64) - 1

    def matrix(self, values: np.ndarray) -> sp.csr_matrix:
        data = (values[self.eids] * self.signs)[self.order]
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.dim, self.dim))


@lru_cache(maxsize=16)
def _structure(L: int, s: int, edge_bytes: bytes) -> _Structure:
    edges = np.frombuffer(edge_bytes, dtype=np.int64).reshape(-1, 2)
    return _Structure(L, s, edges)


def _estimated_nnz(J: CouplingMatrix, s: int) -> int:
    # each edge acts on the strings holding exactly one of its endpoints
    return len(J.edges) * 2 * comb(J.L - 2, s - 1) if s >= 1 and J.L >= 2 else 0


def liouvillian_matrix(J: CouplingMatrix, s: int) -> sp.csr_matrix:
    """Sparse sector matrix of ``T``; the structure is cached per graph."""
    st = _structure(J.L, s, np.ascontiguousarray(J.edges, dtype=np.int64).tobytes())
    return st.matrix(J.values)


def liouvillian_operator(J: CouplingMatrix, s: int):
    """Callable ``v -> T v`` on raw amplitude arrays of sector ``s``."""
    if _estimated_nnz(J, s) <= SPARSE_NNZ_LIMIT:
        T = liouvillian_matrix(J, s)
        return T.dot
    L = J.L
    return lambda x: apply_liouvillian(J, SectorVector(L, s, x)).amplitudes


@dataclass(frozen=True)
class BatteryOperator:
    """Normalized static battery Hamiltonian written over Majorana strings."""

    axis: str
    L: int
    terms: tuple[tuple[int, complex], ...]
    normalization: float

    def sector_components(self) -> dict[int, tuple[SectorVector, float]]:
        """Per-size real unit vectors and their Frobenius weights.

        Phases must agree within a size sector (true for both axes), so each
        component is a real vector up to one global phase.
        """
        by_size: dict[int, list[tuple[int, complex]]] = {}
        for mask, phase in self.terms:
            by_size.setdefault(int(popcount(mask)), []).append((mask, phase))
        out = {}
        for s, terms in sorted(by_size.items()):
            phases = {complex(ph) for _, ph in terms}
            if len(phases) != 1:
                raise ValueError(f"mixed phases in size-{s} sector")
            amps = np.zeros(comb(self.L, s))
            amps[get_sector(self.L, s).index_of([m for m, _ in terms])] = 1.0
            weight = self.normalization ** 2 * len(terms)
            out[s] = (SectorVector(self.L, s, amps / np.sqrt(len(terms))), weight)
        return out

    def frobenius_norm(self) -> float:
        return float(self.normalization * np.sqrt(sum(abs(ph) ** 2 for _, ph in self.terms)))


def battery_operator(axis: str, L: int) -> BatteryOperator:
    """Jordan-Wigner image of ``sum_j sigma_j^axis``, normalized to unit norm.

    ``sigma^x_j = (-i)^{j-1} O_{1..2j-1}`` and ``sigma^z_j = -i O_{2j-1,2j}``.
    """
    if L < 2 or L % 2:
        raise ValueError(f"battery needs an even L >= 2, got {L}")
    n = L // 2
    if axis == "x":
        terms = tuple((mask_of(range(2 * j - 1)), (-1j) ** (j - 1)) for j in range(1, n + 1))
    elif axis == "z":
        terms = tuple((mask_of((2 * j - 2, 2 * j - 1)), -1j) for j in range(1, n + 1))
    else:
        raise ValueError(f"axis must be 'x' or 'z', got {axis!r}")
    return BatteryOperator(axis, L, terms, float(np.sqrt(2.0 / L)))


def free_overlap(U: np.ndarray, A: int, B: int) -> np.ndarray:
    """``(O_A | O_B(t)) = det U(t)[B, A]`` for a propagator (stack) ``U``."""
    rows, cols = modes_of(B), modes_of(A)
    if len(rows) != len(cols):
        return np.zeros(U.shape[:-2])
    if not rows:
        return np.ones(U.shape[:-2])
    return np.linalg.det(U[..., rows, :][..., :, cols])


def free_autocorrelation(J: CouplingMatrix, S: int, t) -> np.ndarray | float:
    """``(O_S | O_S(t))`` as the principal minor of ``exp(J t)`` on ``S``."""
    val = free_overlap(propagator(J, t), S, S)
    return float(val) if np.ndim(t) == 0 else val


def battery_autocorrelation(J: CouplingMatrix, op: BatteryOperator, times) -> np.ndarray:
    """``phi_0(t) = (O|O(t))`` for a unit-norm battery operator via minors."""
    U = propagator(J, np.atleast_1d(times))
    acc = np.zeros(U.shape[0], dtype=complex)
    for mA, cA in op.terms:
        for mB, cB in op.terms:
            if popcount(mA) != popcount(mB):
                continue
            acc += np.conj(cA) * cB * free_overlap(U, mA, mB)
    return (op.normalization ** 2 * acc).real
