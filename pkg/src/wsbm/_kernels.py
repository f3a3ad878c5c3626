"""Hot accumulation kernels, numba and numpy twins.

Inputs are basis-transformed adjacency stacks ``B`` of shape ``(l, n, n)``
with zero diagonals.  Each function here has a ``*_numba`` and a
``*_numpy`` version returning identical quantities; callers pick one via
:func:`wsbm._accel.resolve_backend`.
"""

import numpy as np

from ._accel import njit

# ---------------------------------------------------------------------------
# Star accumulators
#   S[i, x]        = sum_j B[x, i, j]
#   T2[i, x, y]    = sum_j B[x, i, j] B[y, i, j]
#   T3[x, y, w]    = sum_{i, j} B[x, i, j] B[y, i, j] B[w, i, j]
# ---------------------------------------------------------------------------


def star_accumulators_numpy(B):
    S = B.sum(axis=2).T.copy()
    T2 = np.einsum("xij,yij->ixy", B, B, optimize=True)
    T3 = np.einsum("xij,yij,wij->xyw", B, B, B, optimize=True)
    return S, T2, T3


@njit(cache=True)
def star_accumulators_numba(B):
    l, n, _ = B.shape
    S = np.zeros((n, l))
    T2 = np.zeros((n, l, l))
    T3 = np.zeros((l, l, l))
    b = np.empty(l)
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            for x in range(l):
                b[x] = B[x, i, j]
            for x in range(l):
                bx = b[x]
                S[i, x] += bx
                if bx == 0.0:
                    continue
                for y in range(l):
                    bxy = bx * b[y]
                    T2[i, x, y] += bxy
                    if bxy == 0.0:
                        continue
                    for w in range(l):
                        T3[x, y, w] += bxy * b[w]
    return S, T2, T3


# ---------------------------------------------------------------------------
# Path accumulator
#   K_xy[a, b] = (S_x[a] - B_x[a, b]) (S_y[b] - B_y[a, b]) - (B_x B_y)[a, b]
#   out[g, k]  = sum_{a != b} Phi_g[a, b] K_{pairs[k]}[a, b]
# ---------------------------------------------------------------------------


def path_K_numpy(S, B, P, pairs):
    n = B.shape[1]
    diag = np.arange(n)
    K = np.empty((len(pairs), n, n))
    for k, (x, y) in enumerate(pairs):
        np.multiply(S[:, x][:, None] - B[x], S[:, y][None, :] - B[y], out=K[k])
        K[k] -= P[k]
        K[k, diag, diag] = 0.0
    return K.reshape(len(pairs), n * n)


@njit(cache=True)
def path_K_numba(S, B, P, pairs):
    npairs = pairs.shape[0]
    n = B.shape[1]
    K = np.empty((npairs, n * n))
    for k in range(npairs):
        x = pairs[k, 0]
        y = pairs[k, 1]
        for a in range(n):
            sa = S[a, x]
            row = a * n
            for b in range(n):
                K[k, row + b] = (sa - B[x, a, b]) * (S[b, y] - B[y, a, b]) - P[k, a, b]
            K[k, row + a] = 0.0
    return K
