"""Recover the loading matrix G from star moments.

Whiten with the two-star matrix, conjugate the three-star matrices into
``r x r`` matrices that share an orthonormal eigenbasis, find that basis by
Jacobi-angle joint diagonalization, and read the rows of G off the
diagonals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import MomentSet
from .errors import RankDeficiencyError

__all__ = [
    "WhiteningResult",
    "JointDiagResult",
    "ConvergenceWarning",
    "whiten",
    "offdiag_objective",
    "joint_diagonalize",
    "recover_G",
    "eigengap_profile",
]

RANK_EPS = 1e-10
DEFAULT_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 100


class ConvergenceWarning(UserWarning):
    """Jacobi sweeps stopped at ``max_sweeps`` with rotations above ``tol``."""


@dataclass(frozen=True, eq=False)
class WhiteningResult:
    V_hat: np.ndarray
    eigvals: np.ndarray
    eiggap: float
    all_eigvals: np.ndarray


@dataclass(frozen=True, eq=False)
class JointDiagResult:
    Q: np.ndarray
    offdiag_final: float
    converged: bool
    n_sweeps: int
    history: list = field(default_factory=list)

    # unpacks as (Q_hat, offdiag_final)
    def __iter__(self):
        return iter((self.Q, self.offdiag_final))


def whiten(A0_hat: np.ndarray, r: int) -> WhiteningResult:
    """Build ``V`` (r x l) with ``V A0 V' = I_r`` from the top-r eigenpairs.

    Raises
    ------
    RankDeficiencyError
        If the r-th largest eigenvalue is below ``1e-10`` times the largest,
        or ``r`` exceeds the matrix dimension.
    """
    A0 = np.asarray(A0_hat, dtype=float)
    l = A0.shape[0]
    if r < 1 or r > l:
        raise RankDeficiencyError(f"need 1 <= r <= l, got r={r}, l={l}")
    w, U = np.linalg.eigh(0.5 * (A0 + A0.T))
    order = np.argsort(w)[::-1]
    w, U = w[order], U[:, order]
    top = w[0]
    if not top > 0 or w[r - 1] <= RANK_EPS * top:
        raise RankDeficiencyError(
            f"two-star moment matrix has numerical rank below r={r} "
            f"(eigenvalues {np.array2string(w, precision=3)}); "
            "check the number of communities or enlarge the basis"
        )
    if r < l and w[r] != 0:
        gap = abs(w[r - 1]) / abs(w[r])
    else:
        gap = math.inf
    V = (U[:, :r] / np.sqrt(w[:r])).T
    return WhiteningResult(V, w[:r].copy(), gap, w)


def offdiag_objective(mats) -> float:
    """Sum of squared off-diagonal entries across a stack of square matrices."""
    m = np.asarray(mats)
    off = ~np.eye(m.shape[-1], dtype=bool)
    return float(np.sum(m[:, off] ** 2))


def joint_diagonalize(
    N: Sequence[np.ndarray],
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> JointDiagResult:
    """Orthonormal joint approximate diagonalizer of symmetric matrices.

    Cyclic Jacobi sweeps over index pairs (p, q); each Givens angle is the
    closed-form minimizer of the off-diagonal mass for that pair (Cardoso &
    Souloumiac, SIAM J. Matrix Anal. Appl. 17(1), 1996).  Stops once every
    rotation in a sweep has ``|sin| < tol``.

    Parameters
    ----------
    N : sequence of (r, r) arrays
    tol : float
        Threshold on the sine of the rotation angle.
    max_sweeps : int

    Returns
    -------
    JointDiagResult
        ``Q`` is such that ``Q' N_k Q`` is as diagonal as possible.
        ``history[s]`` is the objective after sweep ``s`` (``history[0]``
        is the starting value).  Iterating the result yields
        ``(Q, offdiag_final)``.
    """
    A = np.array(N, dtype=float, copy=True)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"expected a stack of square matrices, got shape {A.shape}")
    A = 0.5 * (A + A.transpose(0, 2, 1))
    r = A.shape[1]
    Q = np.eye(r)
    history = [offdiag_objective(A)]
    converged = r == 1
    sweeps = 0
    while not converged and sweeps < max_sweeps:
        sweeps += 1
        rotated = False
        for p in range(r - 1):
            for q in range(p + 1, r):
                g1 = A[:, p, p] - A[:, q, q]
                g2 = A[:, p, q] + A[:, q, p]
                ton = g1 @ g1 - g2 @ g2
                toff = 2.0 * (g1 @ g2)
                theta = 0.5 * math.atan2(toff, ton + math.hypot(ton, toff))
                c, s = math.cos(theta), math.sin(theta)
                if abs(s) <= tol:
                    continue
                rotated = True
                ap, aq = A[:, :, p].copy(), A[:, :, q].copy()
                A[:, :, p] = c * ap + s * aq
                A[:, :, q] = c * aq - s * ap
                ap, aq = A[:, p, :].copy(), A[:, q, :].copy()
                A[:, p, :] = c * ap + s * aq
                A[:, q, :] = c * aq - s * ap
                vp, vq = Q[:, p].copy(), Q[:, q].copy()
                Q[:, p] = c * vp + s * vq
                Q[:, q] = c * vq - s * vp
        history.append(offdiag_objective(A))
        converged = not rotated
    if not converged:
        warnings.warn(
            f"joint diagonalization did not converge in {max_sweeps} sweeps", ConvergenceWarning, stacklevel=2
        )
    return JointDiagResult(Q, history[-1], converged, sweeps, history)


@dataclass(frozen=True, eq=False)
class GRecovery:
    G_hat: np.ndarray
    Q_hat: np.ndarray
    V_hat: np.ndarray
    offdiag_final: float
    whitening: WhiteningResult
    jd: JointDiagResult
    N: np.ndarray

    def __iter__(self):
        return iter((self.G_hat, self.Q_hat, self.V_hat, self.offdiag_final))


def recover_G(
    moments: MomentSet,
    r: int,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> GRecovery:
    """Estimate the l x r loading matrix from a :class:`MomentSet`.

    ``G[k, z] = (Q' N_k Q)[z, z]`` with ``N_k = V A_k V'`` symmetrized.
    Columns come in the (arbitrary) order produced by the diagonalizer.
    """
    wh = whiten(moments.A0_hat, r)
    V = wh.V_hat
    N = np.einsum("zi,kij,wj->kzw", V, moments.A_hat, V)
    N = 0.5 * (N + N.transpose(0, 2, 1))
    jd = joint_diagonalize(N, tol=tol, max_sweeps=max_sweeps)
    Q = jd.Q
    G = np.einsum("kzz->kz", np.einsum("zi,kij,jw->kzw", Q.T, N, Q)).copy()
    return GRecovery(G, Q, V, jd.offdiag_final, wh, jd, N)


def eigengap_profile(A0_hat: np.ndarray) -> dict:
    """Eigenvalues of the two-star matrix and consecutive magnitude ratios.

    A heuristic for the number of communities: the index with the largest
    ratio ``|lambda_k| / |lambda_{k+1}|`` is reported as ``suggested_r``.
    """
    w = np.sort(np.linalg.eigvalsh(0.5 * (A0_hat + A0_hat.T)))[::-1]
    mag = np.abs(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(mag[1:] > 0, mag[:-1] / mag[1:], np.inf)
    suggested = int(np.argmax(ratios)) + 1 if ratios.size else 1
    return {"eigvals": w, "ratios": ratios, "suggested_r": suggested}
