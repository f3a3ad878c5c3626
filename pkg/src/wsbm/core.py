"""Domain types shared across the package.

Community indices are 0-based everywhere in the Python API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, stats

from .errors import ConfigError, NetworkValidationError

__all__ = [
    "PointMass",
    "Bernoulli",
    "Discrete",
    "Beta",
    "Normal",
    "edge_law_from_dict",
    "BlockModelParams",
    "Network",
    "validate_network",
    "BasisSpec",
    "apply_basis",
    "default_basis",
    "FunctionalSpec",
    "MomentSet",
    "BlockEstimate",
    "KERNELS",
]


# ---------------------------------------------------------------------------
# Edge-weight laws
# ---------------------------------------------------------------------------
# Every law is sampled by inverse transform from one uniform per edge, so the
# simulator only needs a stream of uniforms keyed by node pair.


@dataclass(frozen=True)
class PointMass:
    value: float

    def ppf(self, u):
        return np.full(np.shape(u), float(self.value))

    def cdf(self, x):
        return np.where(np.asarray(x) >= self.value, 1.0, 0.0)

    def pmf(self, v):
        return 1.0 if v == self.value else 0.0

    def moment(self, k):
        return float(self.value) ** k

    def expect(self, fn):
        return float(fn(np.array([self.value]))[0])

    def to_dict(self):
        return {"family": "point", "value": self.value}


@dataclass(frozen=True)
class Bernoulli:
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"Bernoulli theta must lie in [0, 1], got {self.theta}")

    def ppf(self, u):
        return np.where(np.asarray(u) > 1.0 - self.theta, 1.0, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0.0, 0.0, np.where(x < 1.0, 1.0 - self.theta, 1.0))

    def pmf(self, v):
        return {0.0: 1.0 - self.theta, 1.0: self.theta}.get(float(v), 0.0)

    def moment(self, k):
        return 1.0 if k == 0 else float(self.theta)

    def expect(self, fn):
        vals = fn(np.array([0.0, 1.0]))
        return float((1.0 - self.theta) * vals[0] + self.theta * vals[1])

    def to_dict(self):
        return {"family": "bernoulli", "theta": self.theta}


@dataclass(frozen=True)
class Discrete:
    values: tuple
    probs: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(q) for q in self.probs)
        if len(values) != len(probs) or not values:
            raise ConfigError("discrete law needs matching, non-empty values and probs")
        if len(set(values)) != len(values):
            raise ConfigError("discrete law has repeated support points")
        if min(probs) < 0 or abs(math.fsum(probs) - 1.0) > 1e-9:
            raise ConfigError("discrete law probabilities must be >= 0 and sum to 1")
        order = np.argsort(values, kind="stable")
        object.__setattr__(self, "values", tuple(values[k] for k in order))
        object.__setattr__(self, "probs", tuple(probs[k] for k in order))

    def ppf(self, u):
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, np.asarray(u), side="left")
        return np.asarray(self.values)[np.minimum(idx, len(self.values) - 1)]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        vals = np.asarray(self.values)
        return (np.asarray(self.probs)[None, :] * (vals[None, :] <= x.reshape(-1, 1))).sum(1).reshape(x.shape)

    def pmf(self, v):
        return dict(zip(self.values, self.probs)).get(float(v), 0.0)

    def moment(self, k):
        return math.fsum(q * v**k for v, q in zip(self.values, self.probs))

    def expect(self, fn):
        vals = fn(np.asarray(self.values))
        return math.fsum(q * f for q, f in zip(self.probs, vals))

    def to_dict(self):
        return {"family": "discrete", "values": list(self.values), "probs": list(self.probs)}


class _Continuous:
    """Shared behaviour for laws backed by a frozen scipy distribution."""

    def _dist(self):
        raise NotImplementedError

    def _support(self):
        raise NotImplementedError

    def ppf(self, u):
        return self._dist().ppf(np.asarray(u))

    def cdf(self, x):
        return self._dist().cdf(x)

    def pdf(self, x):
        return self._dist().pdf(x)

    def pmf(self, v):
        return 0.0

    def moment(self, k):
        return float(self._dist().moment(k))

    def expect(self, fn, points=None):
        lo, hi = self._support()
        dist = self._dist()

        def integrand(t):
            return float(fn(np.array([t]))[0]) * dist.pdf(t)

        if points is not None and math.isfinite(lo) and math.isfinite(hi):
            pts = [p for p in points if lo < p < hi]
            return integrate.quad(integrand, lo, hi, points=pts or None, limit=200)[0]
        return integrate.quad(integrand, lo, hi, limit=200)[0]


@dataclass(frozen=True)
class Beta(_Continuous):
    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ConfigError("Beta shape parameters must be positive")

    def _dist(self):
        return stats.beta(self.a, self.b)

    def _support(self):
        return 0.0, 1.0

    def to_dict(self):
        return {"family": "beta", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Normal(_Continuous):
    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigError("Normal sigma must be positive")

    def _dist(self):
        return stats.norm(self.mu, self.sigma)

    def _support(self):
        return -math.inf, math.inf

    def to_dict(self):
        return {"family": "normal", "mu": self.mu, "sigma": self.sigma}


_LAW_FAMILIES = {
    "point": lambda d: PointMass(float(d["value"])),
    "bernoulli": lambda d: Bernoulli(float(d["theta"])),
    "discrete": lambda d: Discrete(tuple(d["values"]), tuple(d["probs"])),
    "beta": lambda d: Beta(float(d["a"]), float(d["b"])),
    "normal": lambda d: Normal(float(d["mu"]), float(d["sigma"])),
}


def edge_law_from_dict(d):
    try:
        return _LAW_FAMILIES[d["family"]](d)
    except KeyError as exc:
        raise ConfigError(f"bad edge law specification {d!r}: missing {exc}") from None


# ---------------------------------------------------------------------------
# Block model parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockModelParams:
    """Ground truth for the simulator: community shares and edge laws.

    Parameters
    ----------
    p : sequence of float
        Community probabilities, strictly positive and summing to one.
    edge_law : r x r nested sequence
        ``edge_law[z1][z2]`` is the law of an edge between communities
        ``z1`` and ``z2``; must be symmetric.
    """

    p: tuple
    edge_law: tuple

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        laws = tuple(tuple(row) for row in self.edge_law)
        r = len(p)
        if r < 1:
            raise ConfigError("need at least one community")
        if min(p) <= 0 or abs(math.fsum(p) - 1.0) > 1e-9:
            raise ConfigError(f"community shares must be positive and sum to one, got {p}")
        if len(laws) != r or any(len(row) != r for row in laws):
            raise ConfigError("edge_law must be an r x r table")
        for z1 in range(r):
            for z2 in range(z1 + 1, r):
                if laws[z1][z2] != laws[z2][z1]:
                    raise ConfigError(f"edge_law is not symmetric at ({z1}, {z2})")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "edge_law", laws)

    @property
    def r(self) -> int:
        return len(self.p)

    @classmethod
    def bernoulli(cls, p, theta):
        theta = np.asarray(theta, dtype=float)
        return cls(tuple(p), tuple(tuple(Bernoulli(float(t)) for t in row) for row in theta))

    def loading_matrix(self, basis: BasisSpec) -> np.ndarray:
        """Population ``G[l', z] = E(alpha_l'(X_ij) | Z_i = z)`` (shape l x r)."""
        cond = np.array(
            [[basis.population_means(self.edge_law[z1][z2]) for z2 in range(self.r)] for z1 in range(self.r)]
        )  # r x r x l
        return np.einsum("abl,b->la", cond, np.asarray(self.p))

    def functional_truth(self, phi: FunctionalSpec) -> np.ndarray:
        """Population ``phi_{z1,z2} = E(phi(X_ij) | Z_i = z1, Z_j = z2)``."""
        r = self.r
        out = np.empty((r, r))
        for z1 in range(r):
            for z2 in range(z1, r):
                out[z1, z2] = out[z2, z1] = phi.population_value(self.edge_law[z1][z2])
        return out

    def to_dict(self):
        return {
            "format_version": 1,
            "r": self.r,
            "p": list(self.p),
            "edge_law": [[law.to_dict() for law in row] for row in self.edge_law],
        }

    @classmethod
    def from_dict(cls, d):
        if "p" not in d or "edge_law" not in d:
            raise ConfigError("block model parameters need 'p' and 'edge_law'")
        laws = tuple(tuple(edge_law_from_dict(e) for e in row) for row in d["edge_law"])
        params = cls(tuple(d["p"]), laws)
        if "r" in d and int(d["r"]) != params.r:
            raise ConfigError(f"declared r={d['r']} does not match len(p)={params.r}")
        return params


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------


def _check_matrix(w, min_nodes):
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise NetworkValidationError("not-square", f"weight matrix must be square, got shape {w.shape}")
    n = w.shape[0]
    if n < min_nodes:
        raise NetworkValidationError("too-few-nodes", f"need at least {min_nodes} nodes, got {n}")
    iu, ju = np.triu_indices(n, 1)
    upper, lower = w[iu, ju], w[ju, iu]
    bad = ~(np.isfinite(upper) & np.isfinite(lower))
    if bad.any():
        k = int(np.argmax(bad))
        pair = (int(iu[k]), int(ju[k]))
        raise NetworkValidationError("non-finite-entry", f"non-finite weight at {pair}", pair)
    asym = upper != lower
    if asym.any():
        k = int(np.argmax(asym))
        pair = (int(iu[k]), int(ju[k]))
        raise NetworkValidationError(
            "asymmetric-weights", f"weights{pair}={upper[k]!r} differs from its transpose {lower[k]!r}", pair
        )


@dataclass(frozen=True, eq=False)
class Network:
    """A complete undirected weighted graph without self-loops.

    The diagonal of ``weights`` is kept as given but never read.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        _check_matrix(w, 2)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def edge_values(self) -> np.ndarray:
        """Weights of the unordered pairs ``i < j`` in lexicographic order."""
        return self.weights[np.triu_indices(self.n, 1)]

    def transformed(self, fn: Callable) -> np.ndarray:
        """Apply ``fn`` elementwise to the off-diagonal weights; diagonal set to 0."""
        out = np.asarray(fn(self.weights), dtype=np.float64).copy()
        np.fill_diagonal(out, 0.0)
        return out

    def is_binary(self) -> bool:
        v = self.edge_values()
        return bool(np.all((v == 0.0) | (v == 1.0)))

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        if other.n != self.n:
            return False
        iu = np.triu_indices(self.n, 1)
        return bool(np.array_equal(self.weights[iu], other.weights[iu]))

    __hash__ = None


def validate_network(net) -> None:
    """Check the invariants required by the estimators.

    Accepts a :class:`Network` or a raw square array.  Returns ``None`` when
    the input is valid and raises :class:`NetworkValidationError` otherwise;
    the error's ``reason`` is ``too-few-nodes`` for n < 4 (path statistics
    need four distinct nodes), ``non-finite-entry`` or ``asymmetric-weights``
    with the first offending pair.
    """
    w = net.weights if isinstance(net, Network) else np.asarray(net, dtype=np.float64)
    _check_matrix(w, 4)


# ---------------------------------------------------------------------------
# Basis functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BasisSpec:
    """Transformations ``alpha_1 .. alpha_l`` applied to edge weights.

    Use the constructors :meth:`indicator`, :meth:`polynomial` and
    :meth:`custom`.
    """

    kind: str
    thresholds: tuple = ()
    degree: int = 0
    functions: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.kind == "indicator-grid":
            t = tuple(float(x) for x in self.thresholds)
            if not t:
                raise ConfigError("indicator grid needs at least one threshold")
            if any(b <= a for a, b in zip(t, t[1:])):
                raise ConfigError(f"indicator thresholds must be strictly increasing, got {t}")
            if not all(math.isfinite(x) for x in t):
                raise ConfigError("indicator thresholds must be finite")
            object.__setattr__(self, "thresholds", t)
        elif self.kind == "polynomial":
            if int(self.degree) < 0:
                raise ConfigError("polynomial degree must be non-negative")
            object.__setattr__(self, "degree", int(self.degree))
        elif self.kind == "custom":
            if not self.functions or not all(callable(f) for f in self.functions):
                raise ConfigError("custom basis needs a non-empty sequence of callables")
            object.__setattr__(self, "functions", tuple(self.functions))
        else:
            raise ConfigError(f"unknown basis kind {self.kind!r}")

    @classmethod
    def indicator(cls, thresholds: Sequence[float]) -> BasisSpec:
        return cls("indicator-grid", thresholds=tuple(thresholds))

    @classmethod
    def polynomial(cls, degree: int) -> BasisSpec:
        return cls("polynomial", degree=degree)

    @classmethod
    def custom(cls, functions: Sequence[Callable]) -> BasisSpec:
        return cls("custom", functions=tuple(functions))

    @property
    def l(self) -> int:  # noqa: E743
        if self.kind == "indicator-grid":
            return len(self.thresholds)
        if self.kind == "polynomial":
            return self.degree + 1
        return len(self.functions)

    def evaluate(self, x) -> np.ndarray:
        """Stack ``alpha_k(x)`` along a new leading axis of length ``l``."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "indicator-grid":
            t = np.asarray(self.thresholds).reshape((-1,) + (1,) * x.ndim)
            return (x[None] <= t).astype(np.float64)
        if self.kind == "polynomial":
            return np.stack([x**k for k in range(self.degree + 1)])
        return np.stack([np.broadcast_to(np.asarray(f(x), dtype=np.float64), x.shape) for f in self.functions])

    def transform(self, net: Network) -> np.ndarray:
        """Basis-transformed adjacency matrices, shape ``(l, n, n)``, zero diagonal."""
        out = self.evaluate(net.weights)
        idx = np.arange(net.n)
        out[:, idx, idx] = 0.0
        return np.ascontiguousarray(out)

    def population_means(self, law) -> np.ndarray:
        """``E alpha_k(X)`` for ``X`` drawn from ``law``."""
        if self.kind == "indicator-grid":
            return np.asarray(law.cdf(np.asarray(self.thresholds)), dtype=float)
        if self.kind == "polynomial":
            return np.array([law.moment(k) for k in range(self.degree + 1)])
        return np.array([law.expect(f) for f in self.functions])

    def describe(self) -> dict:
        if self.kind == "indicator-grid":
            return {"kind": self.kind, "thresholds": list(self.thresholds)}
        if self.kind == "polynomial":
            return {"kind": self.kind, "degree": self.degree}
        return {"kind": self.kind, "l": self.l}


def apply_basis(spec: BasisSpec, x: float) -> np.ndarray:
    """Return the length-``l`` vector ``(alpha_1(x), ..., alpha_l(x))``."""
    return spec.evaluate(np.float64(x)).reshape(spec.l)


def default_basis(net: Network, r: int, n_levels: int | None = None) -> BasisSpec:
    """Indicator grid used when the caller does not choose a basis.

    Binary networks get the grid ``{0, 1}``.  Otherwise thresholds sit at
    the empirical quantiles of the edge weights at probability levels
    ``k / (l + 1)``, ``k = 1..l`` with ``l = max(r + 1, 5)``, deduplicated.
    """
    if net.is_binary():
        return BasisSpec.indicator((0.0, 1.0))
    l = n_levels if n_levels is not None else max(r + 1, 5)
    levels = np.arange(1, l + 1) / (l + 1)
    q = np.unique(np.quantile(net.edge_values(), levels))
    return BasisSpec.indicator(tuple(float(v) for v in q))


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------


def _gaussian_kernel(u):
    return np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def _epanechnikov_kernel(u):
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


KERNELS = {"gaussian": _gaussian_kernel, "epanechnikov": _epanechnikov_kernel}
_KERNEL_REACH = {"gaussian": 8.0, "epanechnikov": 1.0}


@dataclass(frozen=True)
class FunctionalSpec:
    """A scalar transformation ``phi`` whose conditional mean is estimated.

    Kinds: ``constant`` (phi = 1), ``cdf`` (1{x <= at}), ``pmf`` (1{x == at}),
    ``moment`` (x ** power) and ``kernel-density``
    (k((x - at) / bandwidth) / bandwidth).
    """

    kind: str
    at: float = 0.0
    power: int = 1
    bandwidth: float = 0.0
    kernel: str = "epanechnikov"

    def __post_init__(self):
        if self.kind not in ("constant", "cdf", "pmf", "moment", "kernel-density"):
            raise ConfigError(f"unknown functional kind {self.kind!r}")
        if self.kind == "kernel-density":
            if not self.bandwidth > 0:
                raise ConfigError(f"kernel bandwidth must be positive, got {self.bandwidth}")
            if self.kernel not in KERNELS:
                raise ConfigError(f"unknown kernel {self.kernel!r}")

    @classmethod
    def constant(cls):
        return cls("constant")

    @classmethod
    def cdf(cls, x):
        return cls("cdf", at=float(x))

    @classmethod
    def pmf(cls, v):
        return cls("pmf", at=float(v))

    @classmethod
    def moment(cls, power=1):
        return cls("moment", power=int(power))

    @classmethod
    def density(cls, x, bandwidth, kernel="epanechnikov"):
        return cls("kernel-density", at=float(x), bandwidth=float(bandwidth), kernel=kernel)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "constant":
            return np.ones_like(x)
        if self.kind == "cdf":
            return (x <= self.at).astype(np.float64)
        if self.kind == "pmf":
            return (x == self.at).astype(np.float64)
        if self.kind == "moment":
            return x**self.power
        return KERNELS[self.kernel]((x - self.at) / self.bandwidth) / self.bandwidth

    def population_value(self, law) -> float:
        if self.kind == "constant":
            return 1.0
        if self.kind == "cdf":
            return float(law.cdf(np.array([self.at]))[0])
        if self.kind == "pmf":
            return float(law.pmf(self.at))
        if self.kind == "moment":
            return float(law.moment(self.power))
        if isinstance(law, _Continuous):
            reach = _KERNEL_REACH[self.kernel] * self.bandwidth
            return law.expect(self.evaluate, points=(self.at - reach, self.at, self.at + reach))
        return float(law.expect(self.evaluate))

    @property
    def label(self) -> str:
        if self.kind == "constant":
            return "constant"
        if self.kind == "moment":
            return f"moment({self.power})"
        if self.kind == "kernel-density":
            return f"density({self.at!r},h={self.bandwidth!r},{self.kernel})"
        return f"{self.kind}({self.at!r})"

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("cdf", "pmf", "kernel-density"):
            d["at"] = self.at
        if self.kind == "moment":
            d["power"] = self.power
        if self.kind == "kernel-density":
            d["bandwidth"] = self.bandwidth
            d["kernel"] = self.kernel
        return d


# ---------------------------------------------------------------------------
# Moment and estimate containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentSet:
    """Two-star and three-star moment statistics.

    ``A_hat[k]`` is the three-star matrix whose centre edge uses basis
    function ``k``; shape ``(l, l, l)``.
    """

    a_hat: np.ndarray
    A0_hat: np.ndarray
    A_hat: np.ndarray
    basis: BasisSpec
    n: int

    @property
    def l(self) -> int:  # noqa: E743
        return self.a_hat.shape[0]


@dataclass(frozen=True, eq=False)
class BlockEstimate:
    """Output of the diagonalization and least-squares steps.

    ``functionals`` holds the :class:`~wsbm.estimate.FunctionalEstimate`
    objects computed alongside, and ``label_order[k]`` is the original
    index of the community reported in position ``k``.
    """

    r: int
    G_hat: np.ndarray
    p_hat: np.ndarray
    p_normalized: np.ndarray
    H1_hat: np.ndarray
    Q_hat: np.ndarray
    V_hat: np.ndarray
    offdiag_final: float
    label_order: tuple
    eigvals: np.ndarray
    eiggap: float
    converged: bool
    n_sweeps: int
    cond_G: float
    moments: MomentSet | None = None
    functionals: tuple = ()
