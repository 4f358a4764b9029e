"""Gaussian edge disorder, free-fermion spectrum, bandwidth rescaling, propagator.

Conventions: Majoranas obey ``{gamma^i, gamma^j} = delta^{ij}`` and the
quadratic Hamiltonian is ``H = i sum_{a<b} J_ab gamma^a gamma^b``.  Then
``d gamma^a / dt = sum_b J_ab gamma^b`` and ``gamma(t) = exp(J t) gamma``.
Block-diagonalizing ``J`` into 2x2 rotations with frequencies ``eps_k``
gives ``H = sum_k eps_k (n_k - 1/2)``, so the many-body bandwidth is
``sum_k eps_k``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .netgen import Graph


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Real antisymmetric coupling matrix stored as upper-triangle triplets.

    ``edges[e] = (a, b)`` with ``a < b`` and ``values[e] = J[a, b]``.
    """

    L: int
    edges: np.ndarray
    values: np.ndarray
    _dense: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(edges) != len(values):
            raise ValueError("edges and values differ in length")
        if len(edges) and not np.all((0 <= edges[:, 0]) & (edges[:, 0] < edges[:, 1])
                                     & (edges[:, 1] < self.L)):
            raise ValueError("edges must satisfy 0 <= a < b < L")
        edges.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_graph(cls, graph: Graph, values) -> "CouplingMatrix":
        return cls(graph.L, graph.edge_array(), np.asarray(values, dtype=float))

    @classmethod
    def from_dense(cls, M, atol: float = 1e-12) -> "CouplingMatrix":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("coupling matrix must be square")
        if not np.allclose(M, -M.T, rtol=0.0, atol=atol):
            raise ValueError("coupling matrix is not antisymmetric")
        L = M.shape[0]
        a, b = np.triu_indices(L, 1)
        keep = M[a, b] != 0.0
        return cls(L, np.stack([a[keep], b[keep]], axis=1), M[a, b][keep])

    def dense(self) -> np.ndarray:
        if self._dense is None:
            M = np.zeros((self.L, self.L))
            a, b = self.edges[:, 0], self.edges[:, 1]
            M[a, b] = self.values
            M[b, a] = -self.values
            M.setflags(write=False)
            object.__setattr__(self, "_dense", M)
        return self._dense

    def scaled(self, factor: float) -> "CouplingMatrix":
        return CouplingMatrix(self.L, self.edges, self.values * factor)

    def to_json(self) -> str:
        triplets = [[int(a) + 1, int(b) + 1, float(v)]
                    for (a, b), v in zip(self.edges, self.values)]
        return json.dumps({"L": self.L, "triplets": triplets})

    @classmethod
    def from_json(cls, text: str) -> "CouplingMatrix":
        data = json.loads(text)
        trip = data["triplets"]
        edges = np.array([[a - 1, b - 1] for a, b, _ in trip], dtype=np.int64).reshape(-1, 2)
        return cls(int(data["L"]), edges, np.array([v for *_, v in trip], dtype=float))


@dataclass(frozen=True, eq=False)
class SingleParticleSpectrum:
    eps: np.ndarray  # L/2 paired singular values, descending

    @property
    def bandwidth(self) -> float:
        return float(np.sum(self.eps))


def default_variance(graph: Graph) -> float:
    """Edge variance ``(L - 1) / (2 n_E)``; equals ``1/L`` on the complete graph."""
    return (graph.L - 1) / (2.0 * graph.n_edges)


def sample_couplings(graph: Graph, rng: np.random.Generator,
                     variance: float | None = None) -> CouplingMatrix:
    """Draw independent zero-mean Gaussian couplings on every edge.

    ``variance`` overrides the default ``(L - 1) / (2 n_E)``; star-graph
    experiments use ``0.5``.
    """
    if graph.n_edges == 0:
        raise ValueError("graph has no edges")
    var = default_variance(graph) if variance is None else float(variance)
    return CouplingMatrix.from_graph(graph, rng.normal(0.0, np.sqrt(var), graph.n_edges))


def single_particle_spectrum(J: CouplingMatrix) -> SingleParticleSpectrum:
    sv = np.linalg.svd(J.dense(), compute_uv=False)
    # singular values of a real antisymmetric matrix come in equal pairs
    eps = np.sort(sv)[::-1][0::2][: J.L // 2]
    return SingleParticleSpectrum(eps)


def bandwidth(J: CouplingMatrix) -> float:
    return single_particle_spectrum(J).bandwidth


def rescale_to_unit_bandwidth(J: CouplingMatrix) -> CouplingMatrix:
    mu = bandwidth(J)
    if not mu > 0.0:
        raise ValueError("cannot rescale a coupling matrix with zero bandwidth")
    return J.scaled(1.0 / mu)


def propagator(J: CouplingMatrix, t) -> np.ndarray:
    """Orthogonal single-mode propagator ``U(t) = exp(J t)``.

    Scalar ``t`` gives an ``(L, L)`` matrix, an array of times gives a stack
    ``(len(t), L, L)``.
    """
    lam, V = np.linalg.eigh(1j * J.dense())
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    # exp(J t) = V exp(-i lam t) V^dagger
    phases = np.exp(-1j * np.multiply.outer(ts, lam))
    U = np.einsum("ik,tk,jk->tij", V, phases, V.conj()).real
    return U[0] if np.ndim(t) == 0 else U
