"""Subgraph moment statistics of a weighted network.

Three families of U-statistics over ordered tuples of distinct nodes:

* two-star   ``A0[x, y]``      sum  a_x(X_{i1 i2}) a_y(X_{i1 i3})
* three-star ``A[w][x, y]``    sum  a_x(X_{i1 i2}) a_w(X_{i1 i3}) a_y(X_{i1 i4})
* path       ``M_phi[x, y]``   sum  a_x(X_{i1 i2}) phi(X_{i2 i3}) a_y(X_{i3 i4})

each normalized by the number of ordered tuples.  Every statistic has a
brute-force enumerator (the oracle, O(n^3) or O(n^4) Python loops) and a
fast separable form built from per-node sums with inclusion-exclusion
corrections for coinciding indices.

Fast-path derivations, with ``S_x[i] = sum_j B_x[i, j]``:

two-star
    sum_i S_x[i] S_y[i] - sum_{i,j} B_x[i,j] B_y[i,j]
three-star
    sum_i (S_x S_w S_y - T_xw S_y - T_xy S_w - T_wy S_x)[i]
    + 2 sum_{i,j} B_x B_w B_y,   with T_xy[i] = sum_j B_x[i,j] B_y[i,j]
path
    sum_{a != b} phi_ab [(S_x[a] - B_x[a,b]) (S_y[b] - B_y[a,b]) - (B_x B_y)[a,b]]
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from . import _kernels
from ._accel import resolve_backend
from .core import BasisSpec, FunctionalSpec, MomentSet, Network, apply_basis, validate_network
from .errors import FunctionalValueError

__all__ = [
    "PathMoment",
    "a_hat",
    "A0_hat_bruteforce",
    "A0_hat_fast",
    "A_lprime_hat_bruteforce",
    "A_lprime_hat_fast",
    "M_phi_hat_bruteforce",
    "M_phi_hat_fast",
    "PathAccumulator",
    "compute_moments",
    "pool_moments",
    "BRUTEFORCE_MAX_N",
]

BRUTEFORCE_MAX_N = 40


@dataclass(frozen=True, eq=False)
class PathMoment:
    M_hat: np.ndarray
    phi: FunctionalSpec
    basis: BasisSpec


def _tuple_count(n, k):
    out = 1
    for m in range(k):
        out *= n - m
    return float(out)


def _evaluate_phi(net: Network, phi) -> np.ndarray:
    fn = phi.evaluate if isinstance(phi, FunctionalSpec) else phi
    out = net.transformed(fn)
    if not np.all(np.isfinite(out)):
        raise FunctionalValueError(f"functional {getattr(phi, 'label', phi)!r} is not finite on the observed weights")
    return out


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def _pair_alphas(net: Network, basis: BasisSpec):
    """alpha vectors per ordered pair via scalar ``apply_basis`` calls."""
    n = net.n
    table = {}
    for i in range(n):
        for j in range(i + 1, n):
            v = apply_basis(basis, net.weights[i, j])
            table[i, j] = table[j, i] = v
    return table


def _guard(net, force):
    validate_network(net)
    if net.n > BRUTEFORCE_MAX_N and not force:
        raise ValueError(f"brute-force enumeration refused for n={net.n} > {BRUTEFORCE_MAX_N}; pass force=True")


def A0_hat_bruteforce(net: Network, basis: BasisSpec, force: bool = False) -> np.ndarray:
    """Two-star moment by enumerating every ordered distinct triple.

    Triples related by swapping the two leaves are accumulated together,
    which makes the result bit-for-bit symmetric.
    """
    _guard(net, force)
    al = _pair_alphas(net, basis)
    l = basis.l
    acc = np.zeros((l, l))
    for i1, i2, i3 in permutations(range(net.n), 3):
        if i2 < i3:
            t = np.outer(al[i1, i2], al[i1, i3])
            acc += t + t.T
    return acc / _tuple_count(net.n, 3)


def A_lprime_hat_bruteforce(net: Network, basis: BasisSpec, force: bool = False) -> np.ndarray:
    """Three-star moments ``A[w]`` by enumerating ordered distinct quadruples."""
    _guard(net, force)
    al = _pair_alphas(net, basis)
    l = basis.l
    acc = np.zeros((l, l, l))
    for i1, i2, i3, i4 in permutations(range(net.n), 4):
        if i2 < i4:
            t = np.outer(al[i1, i2], al[i1, i4])
            acc += al[i1, i3][:, None, None] * (t + t.T)[None, :, :]
    return acc / _tuple_count(net.n, 4)


def M_phi_hat_bruteforce(net: Network, basis: BasisSpec, phi, force: bool = False) -> PathMoment:
    """Path moment by enumerating ordered distinct quadruples.

    A quadruple and its reversal are accumulated together.
    """
    _guard(net, force)
    al = _pair_alphas(net, basis)
    fn = phi.evaluate if isinstance(phi, FunctionalSpec) else phi
    l = basis.l
    acc = np.zeros((l, l))
    for i1, i2, i3, i4 in permutations(range(net.n), 4):
        if i1 < i4:
            f = float(fn(np.float64(net.weights[i2, i3])))
            if not np.isfinite(f):
                raise FunctionalValueError("functional is not finite on the observed weights")
            t = np.outer(al[i1, i2], al[i3, i4]) * f
            acc += t + t.T
    return PathMoment(acc / _tuple_count(net.n, 4), phi, basis)


# ---------------------------------------------------------------------------
# Fast separable forms
# ---------------------------------------------------------------------------


def a_hat(net: Network, basis: BasisSpec) -> np.ndarray:
    """Mean of each basis function over the unordered pairs ``i < j``."""
    return basis.evaluate(net.edge_values()).mean(axis=1)


def _star_accumulators(B, backend):
    if resolve_backend(backend) == "numba":
        return _kernels.star_accumulators_numba(B)
    return _kernels.star_accumulators_numpy(B)


def _A0_from(S, T2, n):
    A0 = S.T @ S - T2.sum(axis=0)
    A0 = 0.5 * (A0 + A0.T)
    return A0 / _tuple_count(n, 3)


def _A_from(S, T2, T3, n):
    t_sss = np.einsum("ix,iw,iy->wxy", S, S, S, optimize=True)
    t_xw_y = np.einsum("ixw,iy->wxy", T2, S, optimize=True)
    t_xy_w = np.einsum("ixy,iw->wxy", T2, S, optimize=True)
    t_wy_x = np.einsum("iwy,ix->wxy", T2, S, optimize=True)
    A = t_sss - t_xw_y - t_xy_w - t_wy_x + 2.0 * np.einsum("xwy->wxy", T3)
    A = 0.5 * (A + A.transpose(0, 2, 1))
    return A / _tuple_count(n, 4)


def A0_hat_fast(net: Network, basis: BasisSpec, backend: str | None = None) -> np.ndarray:
    """Two-star moment in O(l^2 n^2) from per-node sums."""
    S, T2, _ = _star_accumulators(basis.transform(net), backend)
    return _A0_from(S, T2, net.n)


def A_lprime_hat_fast(net: Network, basis: BasisSpec, backend: str | None = None) -> np.ndarray:
    """Three-star moments in O(l^3 n^2); shape ``(l, l, l)`` indexed ``[w, x, y]``."""
    S, T2, T3 = _star_accumulators(basis.transform(net), backend)
    return _A_from(S, T2, T3, net.n)


class PathAccumulator:
    """Shared state for evaluating path moments of many functionals.

    Construction builds the corrected pair weights ``K_xy`` for every
    ``x <= y`` (O(l^2 n^3) time, ``l(l+1)/2 * n^2`` doubles); each functional
    afterwards is one contraction, O(l^2 n^2).
    """

    def __init__(self, net: Network, basis: BasisSpec, backend: str | None = None, B: np.ndarray | None = None):
        validate_network(net)
        self.net = net
        self.basis = basis
        self.backend = resolve_backend(backend)
        self.B = basis.transform(net) if B is None else B
        l = self.B.shape[0]
        S = np.ascontiguousarray(self.B.sum(axis=2).T)
        self.pairs = np.array([(x, y) for x in range(l) for y in range(x, l)], dtype=np.int64)
        P = np.stack([self.B[x] @ self.B[y] for x, y in self.pairs])
        build = _kernels.path_K_numba if self.backend == "numba" else _kernels.path_K_numpy
        self.K = build(S, self.B, P, self.pairs)
        self._norm = _tuple_count(net.n, 4)

    def moments(self, phis: Sequence, chunk: int = 16) -> np.ndarray:
        """Path moments for each functional in ``phis``; shape ``(len(phis), l, l)``."""
        l = self.B.shape[0]
        out = np.empty((len(phis), l, l))
        xs, ys = self.pairs[:, 0], self.pairs[:, 1]
        for start in range(0, len(phis), chunk):
            block = phis[start : start + chunk]
            Phis = np.stack([_evaluate_phi(self.net, phi) for phi in block])
            flat = Phis.reshape(len(block), -1) @ self.K.T
            out[start : start + len(block), xs, ys] = flat
            out[start : start + len(block), ys, xs] = flat
        return out / self._norm


def M_phi_hat_fast(net: Network, basis: BasisSpec, phi, backend: str | None = None):
    """Path moment(s) via the separable form.

    ``phi`` may be a single functional (returns a :class:`PathMoment`) or a
    sequence of functionals (returns a list, sharing one accumulator).
    """
    acc = PathAccumulator(net, basis, backend=backend)
    if isinstance(phi, (list, tuple)):
        Ms = acc.moments(phi)
        return [PathMoment(M, f, basis) for M, f in zip(Ms, phi)]
    return PathMoment(acc.moments([phi])[0], phi, basis)


def compute_moments(net: Network, basis: BasisSpec, backend: str | None = None, B: np.ndarray | None = None) -> MomentSet:
    """All star statistics for one network in one pass."""
    validate_network(net)
    B = basis.transform(net) if B is None else B
    S, T2, T3 = _star_accumulators(B, backend)
    return MomentSet(a_hat(net, basis), _A0_from(S, T2, net.n), _A_from(S, T2, T3, net.n), basis, net.n)


def pool_moments(sets: Sequence[MomentSet]) -> MomentSet:
    """Average moment sets from independent networks sharing one basis."""
    if not sets:
        raise ValueError("nothing to pool")
    basis = sets[0].basis
    if any(m.basis != basis for m in sets):
        raise ValueError("moment sets use different bases")
    return MomentSet(
        np.mean([m.a_hat for m in sets], axis=0),
        np.mean([m.A0_hat for m in sets], axis=0),
        np.mean([m.A_hat for m in sets], axis=0),
        basis,
        sum(m.n for m in sets),
    )
