"""Draw networks from a weighted stochastic block model.

Labels come first, then one uniform per unordered pair from the Philox
substream keyed by ``(seed, i, j)``; each edge weight is the inverse CDF of
its block's law at that uniform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .core import BasisSpec, BlockModelParams, FunctionalSpec, MomentSet, Network
from .errors import ConfigError

__all__ = [
    "SimDraw",
    "draw_labels",
    "draw_network",
    "binary_design",
    "population_moments",
    "population_path_moment",
]


@dataclass(frozen=True, eq=False)
class SimDraw:
    """A simulated network with its latent labels (for oracle checks only)."""

    net: Network
    z: np.ndarray


def draw_labels(p, n: int, seed: int, backend=None) -> np.ndarray:
    """Community labels ``z_i`` (0-based), i.i.d. from ``p``."""
    idx = np.arange(n, dtype=np.uint64)
    u = rng.keyed_uniforms(seed, idx, np.zeros_like(idx), stream=rng.STREAM_LABEL, backend=backend)
    cum = np.cumsum(np.asarray(p, dtype=float))
    return np.minimum(np.searchsorted(cum, u, side="left"), len(cum) - 1)


def draw_network(params: BlockModelParams, n: int, seed: int, backend=None) -> SimDraw:
    """Simulate one network of ``n`` nodes.

    Deterministic in ``(params, n, seed)`` and independent of backend.
    """
    if not isinstance(params, BlockModelParams):
        raise ConfigError("draw_network needs BlockModelParams")
    if n < 4:
        raise ConfigError(f"need n >= 4 nodes, got {n}")
    z = draw_labels(params.p, n, seed, backend=backend)
    iu, ju = np.triu_indices(n, 1)
    u = rng.keyed_uniforms(seed, iu, ju, stream=rng.STREAM_EDGE, backend=backend)
    za, zb = z[iu], z[ju]
    lo, hi = np.minimum(za, zb), np.maximum(za, zb)
    vals = np.empty(u.shape)
    for z1 in range(params.r):
        for z2 in range(z1, params.r):
            mask = (lo == z1) & (hi == z2)
            if mask.any():
                vals[mask] = params.edge_law[z1][z2].ppf(u[mask])
    w = np.zeros((n, n))
    w[iu, ju] = vals
    w[ju, iu] = vals
    return SimDraw(Network(w), z)


def binary_design(k: int) -> BlockModelParams:
    """Binary two-community designs with ``p = (0.3, 0.7)``.

    Success probabilities are 0.2 within community 0, zero across
    communities, and 0.4 / 0.6 / 0.8 within community 1 for designs 1 / 2 / 3.
    """
    theta22 = {1: 0.4, 2: 0.6, 3: 0.8}
    if k not in theta22:
        raise ConfigError(f"design must be 1, 2 or 3, got {k}")
    return BlockModelParams.bernoulli((0.3, 0.7), [[0.2, 0.0], [0.0, theta22[k]]])


def population_moments(params: BlockModelParams, basis: BasisSpec) -> MomentSet:
    """Analytic limits of the star moments for ``params`` under ``basis``.

    ``n`` is recorded as 0 to mark the result as a population quantity.
    """
    G = params.loading_matrix(basis)
    p = np.asarray(params.p)
    a = G @ p
    A0 = (G * p) @ G.T
    A = np.stack([(G * (p * G[k])) @ G.T for k in range(G.shape[0])])
    return MomentSet(a, A0, A, basis, 0)


def population_path_moment(params: BlockModelParams, basis: BasisSpec, phi: FunctionalSpec) -> np.ndarray:
    """Analytic path moment ``G diag(p) Phi diag(p) G'`` for functional ``phi``."""
    G = params.loading_matrix(basis)
    p = np.asarray(params.p)
    H = np.outer(p, p) * params.functional_truth(phi)
    return G @ H @ G.T
