"""Least-squares estimates of community shares and conditional functionals.

Given the loading matrix ``G`` (l x r) and sample moments, community shares
solve ``a = G p`` and each functional ``phi`` enters through
``M_phi = G H_phi G'`` with ``H_phi[z1, z2] = p_z1 p_z2 phi_{z1,z2}``, so
``phi_{z1,z2} = H_phi[z1, z2] / H_1[z1, z2]``.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from .core import BasisSpec, BlockEstimate, FunctionalSpec, KERNELS, Network, default_basis, validate_network
from .errors import ConfigError, IllConditionedError, VanishingShareError
from .jointdiag import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, recover_G
from .moments import PathAccumulator, compute_moments

__all__ = [
    "FunctionalEstimate",
    "DensityEstimate",
    "COND_MAX",
    "H_EPS",
    "estimate_p",
    "estimate_H",
    "estimate_functional",
    "fit",
    "estimate_cdf",
    "rate_bandwidth",
    "estimate_density",
    "canonical_labeling",
    "align_to_truth",
]

COND_MAX = 1e8
H_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class FunctionalEstimate:
    phi: FunctionalSpec | None
    phi_hat: np.ndarray
    H_phi_hat: np.ndarray
    H1_hat: np.ndarray


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """``f_hat[z1, z2, k]`` estimates the conditional density at ``grid[k]``."""

    grid: np.ndarray
    f_hat: np.ndarray
    bandwidth: float
    kernel: str


def _check_conditioning(G):
    cond = float(np.linalg.cond(G))
    if not cond <= COND_MAX:
        raise IllConditionedError(f"loading matrix condition number {cond:.3g} exceeds {COND_MAX:.0e}")
    return cond


def _left_inverse(G):
    # (G'G)^{-1} G' through a least-squares solve
    return np.linalg.lstsq(G, np.eye(G.shape[0]), rcond=None)[0]


def estimate_p(G_hat: np.ndarray, a_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Community shares by least squares on ``a = G p``.

    Returns
    -------
    p_raw : ndarray
        Unconstrained solution; entries may fall outside [0, 1].
    p_normalized : ndarray
        ``p_raw`` clipped at zero and rescaled to sum to one.
    """
    G = np.asarray(G_hat, dtype=float)
    _check_conditioning(G)
    p = np.linalg.lstsq(G, np.asarray(a_hat, dtype=float), rcond=None)[0]
    clipped = np.clip(p, 0.0, None)
    total = clipped.sum()
    normalized = clipped / total if total > 0 else np.full_like(p, 1.0 / p.size)
    return p, normalized


def estimate_H(G_hat: np.ndarray, M_hat: np.ndarray) -> np.ndarray:
    """``(G'G)^{-1} G' M G (G'G)^{-1}``."""
    G = np.asarray(G_hat, dtype=float)
    _check_conditioning(G)
    Gp = _left_inverse(G)
    H = Gp @ np.asarray(M_hat, dtype=float) @ Gp.T
    return 0.5 * (H + H.T)


def estimate_functional(G_hat, H1_hat, M_phi_hat, phi: FunctionalSpec | None = None) -> FunctionalEstimate:
    """Elementwise ratio ``H_phi / H_1``.

    Raises
    ------
    VanishingShareError
        If any ``|H1_hat|`` entry is below ``1e-6``.
    """
    H1 = np.asarray(H1_hat, dtype=float)
    small = np.abs(H1) < H_EPS
    if small.any():
        z1, z2 = np.argwhere(small)[0]
        raise VanishingShareError(
            f"H1_hat[{z1}, {z2}] = {H1[z1, z2]:.3g} is too close to zero; "
            "a community has a vanishing estimated share"
        )
    H_phi = estimate_H(G_hat, M_phi_hat)
    return FunctionalEstimate(phi, H_phi / H1, H_phi, H1)


def fit(
    net: Network,
    r: int,
    basis: BasisSpec | None = None,
    functionals: Sequence[FunctionalSpec] = (),
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    backend: str | None = None,
    accumulator: PathAccumulator | None = None,
) -> BlockEstimate:
    """Estimate a weighted stochastic block model with ``r`` communities.

    Parameters
    ----------
    net : Network
    r : int
        Number of communities.
    basis : BasisSpec, optional
        Defaults to :func:`wsbm.core.default_basis`.
    functionals : sequence of FunctionalSpec
        Conditional means to estimate alongside ``p``.
    tol, max_sweeps : float, int
        Joint-diagonalization stopping rule.
    backend : {"numba", "numpy"}, optional
    accumulator : PathAccumulator, optional
        Reuse path-moment state built for the same network and basis.

    Returns
    -------
    BlockEstimate
        Communities in diagonalizer order; see :func:`canonical_labeling`.
    """
    validate_network(net)
    if r < 1:
        raise ConfigError(f"r must be at least 1, got {r}")
    if basis is None:
        basis = default_basis(net, r)
    if basis.l < r:
        raise ConfigError(f"basis has l={basis.l} functions but r={r} communities; need l >= r")
    if accumulator is None:
        accumulator = PathAccumulator(net, basis, backend=backend)
    moments = compute_moments(net, basis, backend=backend, B=accumulator.B)
    rec = recover_G(moments, r, tol=tol, max_sweeps=max_sweeps)
    p_raw, p_norm = estimate_p(rec.G_hat, moments.a_hat)
    phis = [FunctionalSpec.constant()] + list(functionals)
    Ms = accumulator.moments(phis)
    H1 = estimate_H(rec.G_hat, Ms[0])
    fe = tuple(estimate_functional(rec.G_hat, H1, M, phi) for M, phi in zip(Ms[1:], functionals))
    return BlockEstimate(
        r=r,
        G_hat=rec.G_hat,
        p_hat=p_raw,
        p_normalized=p_norm,
        H1_hat=H1,
        Q_hat=rec.Q_hat,
        V_hat=rec.V_hat,
        offdiag_final=rec.offdiag_final,
        label_order=tuple(range(r)),
        eigvals=rec.whitening.eigvals,
        eiggap=rec.whitening.eiggap,
        converged=rec.jd.converged,
        n_sweeps=rec.jd.n_sweeps,
        cond_G=float(np.linalg.cond(rec.G_hat)),
        moments=moments,
        functionals=fe,
    )


def _functionals_for(net, est, phis, accumulator, backend):
    if accumulator is None:
        accumulator = PathAccumulator(net, est.moments.basis, backend=backend)
    Ms = accumulator.moments(list(phis))
    return [estimate_functional(est.G_hat, est.H1_hat, M, phi) for M, phi in zip(Ms, phis)]


def estimate_cdf(
    net: Network,
    est: BlockEstimate,
    x_points: Sequence[float],
    rearrange: bool = False,
    accumulator: PathAccumulator | None = None,
    backend: str | None = None,
) -> list[FunctionalEstimate]:
    """Conditional CDFs ``F_{z1,z2}(x)`` on a grid, one estimate per point.

    With ``rearrange=True`` the values for each ``(z1, z2)`` are sorted
    along the (sorted) grid, which enforces monotonicity.
    """
    xs = [float(x) for x in x_points]
    out = _functionals_for(net, est, [FunctionalSpec.cdf(x) for x in xs], accumulator, backend)
    if rearrange and out:
        order = np.argsort(xs, kind="stable")
        F = np.stack([fe.phi_hat for fe in out])
        F[order] = np.sort(F[order], axis=0)
        out = [dataclasses.replace(fe, phi_hat=F[k]) for k, fe in enumerate(out)]
    return out


def rate_bandwidth(net: Network, c: float = 1.0, scale_by_std: bool = True) -> float:
    """``c * sd(X) * n^(-2/5)``, or ``c * n^(-2/5)`` without the scale factor."""
    h = c * net.n ** (-0.4)
    if scale_by_std:
        h *= float(np.std(net.edge_values()))
    return h


def estimate_density(
    net: Network,
    est: BlockEstimate,
    grid: Sequence[float],
    bandwidth: float | None = None,
    kernel: str = "epanechnikov",
    accumulator: PathAccumulator | None = None,
    backend: str | None = None,
) -> DensityEstimate:
    """Kernel estimates of the conditional densities ``f_{z1,z2}`` on ``grid``.

    ``bandwidth=None`` uses :func:`rate_bandwidth` with ``c = 1``.
    """
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}")
    h = rate_bandwidth(net) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ConfigError(f"bandwidth must be positive, got {h}")
    if h < 1.0 / net.n:
        warnings.warn(f"bandwidth {h:.3g} is below 1/n; n*h should grow with n", stacklevel=2)
    if net.is_binary():
        warnings.warn("density estimation requested on binary edge weights", stacklevel=2)
    xs = np.asarray(grid, dtype=float)
    phis = [FunctionalSpec.density(x, h, kernel) for x in xs]
    fes = _functionals_for(net, est, phis, accumulator, backend)
    f = np.stack([fe.phi_hat for fe in fes], axis=-1) if fes else np.empty((est.r, est.r, 0))
    return DensityEstimate(xs, f, h, kernel)


def canonical_labeling(est: BlockEstimate, functionals: Sequence[FunctionalEstimate] | None = None):
    """Relabel communities by ascending ``p_hat``.

    Ties are broken by the diagonal of the first functional estimate.  All
    community-indexed quantities are permuted together; ``label_order``
    composes with any earlier relabeling.  When ``functionals`` is given,
    returns ``(estimate, permuted_functionals)``.
    """
    fes = tuple(est.functionals) if functionals is None else tuple(functionals)
    tiebreak = np.diag(fes[0].phi_hat) if fes else np.zeros(est.r)
    perm = np.lexsort((tiebreak, est.p_hat))

    def pm(M):
        return M[np.ix_(perm, perm)]

    new_fes = tuple(
        dataclasses.replace(fe, phi_hat=pm(fe.phi_hat), H_phi_hat=pm(fe.H_phi_hat), H1_hat=pm(fe.H1_hat)) for fe in fes
    )
    relabeled = dataclasses.replace(
        est,
        G_hat=est.G_hat[:, perm],
        p_hat=est.p_hat[perm],
        p_normalized=est.p_normalized[perm],
        H1_hat=pm(est.H1_hat),
        Q_hat=est.Q_hat[:, perm],
        label_order=tuple(est.label_order[k] for k in perm),
        functionals=new_fes if functionals is None else est.functionals,
    )
    if functionals is None:
        return relabeled
    return relabeled, new_fes


def align_to_truth(p_hat, phi_hat, p_true, phi_true) -> np.ndarray:
    """Permutation minimizing squared error on ``(p, diag phi)``.

    Brute force over all ``r!`` orderings; returns ``perm`` such that
    estimate community ``perm[z]`` is matched to true community ``z``.
    """
    r = len(p_true)
    best, best_cost = None, math.inf
    d_hat, d_true = np.diag(phi_hat), np.diag(phi_true)
    for perm in permutations(range(r)):
        idx = list(perm)
        cost = float(np.sum((p_hat[idx] - p_true) ** 2) + np.sum((d_hat[idx] - d_true) ** 2))
        if cost < best_cost:
            best, best_cost = idx, cost
    return np.asarray(best)
