"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--n 400] [--l 5] [--repeat 5]

Both backends run in one process through the ``backend=`` argument, after
checking that they return the same numbers.  Setting WSBM_DISABLE_NUMBA=1
only changes which backend the library picks by default.
"""

import argparse
import time

import numpy as np

from wsbm import _kernels, rng
from wsbm._accel import HAVE_NUMBA, default_backend
from wsbm.core import BasisSpec, FunctionalSpec, Network
from wsbm.estimate import fit
from wsbm.moments import PathAccumulator, compute_moments
from wsbm.simulate import draw_network, binary_design


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, l):
    g = np.random.default_rng(0)
    W = np.triu(g.normal(size=(n, n)), 1)
    net = Network(W + W.T)
    basis = BasisSpec.indicator(np.linspace(-1, 1, l))
    iu, ju = np.triu_indices(n, 1)
    grid = [FunctionalSpec.cdf(x) for x in np.linspace(-2, 2, 32)]

    def philox(be):
        return lambda: rng.keyed_uniforms(1, iu, ju, backend=be)

    def stars(be):
        return lambda: compute_moments(net, basis, backend=be).A_hat

    B = basis.transform(net)
    S = np.ascontiguousarray(B.sum(axis=2).T)
    pairs = np.array([(x, y) for x in range(l) for y in range(x, l)], dtype=np.int64)
    P = np.stack([B[x] @ B[y] for x, y in pairs])

    def k_build(be):
        fn = _kernels.path_K_numba if be == "numba" else _kernels.path_K_numpy
        return lambda: fn(S, B, P, pairs)

    def paths(be):
        return lambda: PathAccumulator(net, basis, backend=be).moments(grid)

    def replication(be):
        return lambda: fit(draw_network(binary_design(1), 100, 0, backend=be).net, 2, backend=be).p_hat

    return {
        f"philox uniforms ({iu.size} pairs)": philox,
        f"star moments (n={n}, l={l})": stars,
        f"path weights K (n={n}, l={l})": k_build,
        f"path moments x{len(grid)} (n={n}, l={l})": paths,
        "design 1 replication (n=100)": replication,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--l", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = ["numpy", "numba"] if HAVE_NUMBA else ["numpy"]
    print(f"default backend: {default_backend()}  (numba installed: {HAVE_NUMBA})")
    print(f"{'kernel':<40}" + "".join(f"{b:>12}" for b in backends) + ("    speedup" if len(backends) > 1 else ""))
    table = cases(args.n, args.l)
    for name, make in table.items():
        outs = [make(b)() for b in backends]
        for o in outs[1:]:
            np.testing.assert_allclose(o, outs[0], rtol=1e-12, atol=1e-14)
        secs = [best_of(make(b), args.repeat) for b in backends]
        line = f"{name:<40}" + "".join(f"{s * 1e3:>10.2f}ms" for s in secs)
        if len(secs) > 1:
            line += f"{secs[0] / secs[1]:>10.1f}x"
        print(line)


if __name__ == "__main__":
    main()
