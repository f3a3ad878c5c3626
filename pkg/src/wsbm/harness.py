"""Monte Carlo replication of the estimator on simulated designs.

Replication ``k`` simulates with seed ``seed0 + k``, estimates, and aligns
estimated communities to the truth by the permutation minimizing squared
error on ``(p, diag phi)``.  Summaries cover the successful replications;
failures are counted, never imputed.
"""

from __future__ import annotations

import csv
import io
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import BasisSpec, BlockModelParams, FunctionalSpec
from .errors import WSBMError
from .estimate import align_to_truth, fit
from .jointdiag import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, ConvergenceWarning
from .simulate import draw_network

__all__ = ["EstimationConfig", "ParamSummary", "McSummary", "run_replication", "run_design"]


@dataclass(frozen=True)
class EstimationConfig:
    """Estimator settings shared by every replication.

    ``basis=None`` picks :func:`wsbm.core.default_basis` per network, which
    is the grid ``{0, 1}`` for binary designs.
    """

    basis: BasisSpec | None = None
    functional: FunctionalSpec = field(default_factory=lambda: FunctionalSpec.moment(1))
    tol: float = DEFAULT_TOL
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    backend: str | None = None


@dataclass(frozen=True)
class ParamSummary:
    name: str
    true: float
    mean: float
    median: float
    std_dev: float
    iqr: float
    min: float
    max: float


@dataclass(frozen=True, eq=False)
class McSummary:
    design: BlockModelParams
    n: int
    reps: int
    seed0: int
    rows: tuple
    failures: int
    nonconverged: int
    values: np.ndarray
    failure_messages: tuple = ()
    seconds_per_rep: float = float("nan")

    def row(self, name: str) -> ParamSummary:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "design": self.design.to_dict(),
            "n": self.n,
            "reps": self.reps,
            "seed0": self.seed0,
            "failures": self.failures,
            "nonconverged": self.nonconverged,
            "rows": [vars(r) for r in self.rows],
        }

    def table_csv(self) -> str:
        """Rows ``true value, mean, median, std. dev., iqr`` by parameter column."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["statistic"] + [r.name for r in self.rows])
        for label, attr in (("true value", "true"), ("mean", "mean"), ("median", "median"),
                            ("std. dev.", "std_dev"), ("iqr", "iqr")):
            w.writerow([label] + [repr(float(getattr(r, attr))) for r in self.rows])
        return buf.getvalue()

    def report(self) -> str:
        names = [r.name for r in self.rows]
        lines = [
            f"n={self.n} reps={self.reps} seed0={self.seed0} failures={self.failures}",
            f"{'':<11}" + "".join(f"{nm:>10}" for nm in names),
        ]
        for label, attr in (("true value", "true"), ("mean", "mean"), ("median", "median"),
                            ("std. dev.", "std_dev"), ("iqr", "iqr")):
            lines.append(f"{label:<11}" + "".join(f"{getattr(r, attr):>10.3f}" for r in self.rows))
        return "\n".join(lines)


def param_names(r: int) -> list[str]:
    names = [f"phi[{a},{b}]" for a in range(r) for b in range(a, r)]
    return names + [f"p[{z}]" for z in range(r)]


def _truth_vector(design: BlockModelParams, phi: FunctionalSpec) -> np.ndarray:
    r = design.r
    truth = design.functional_truth(phi)
    return np.array([truth[a, b] for a in range(r) for b in range(a, r)] + list(design.p))


def run_replication(design: BlockModelParams, n: int, seed: int, config: EstimationConfig):
    """One simulate-estimate-align cycle.

    Returns ``(values, converged)`` with values ordered as :func:`param_names`.
    """
    draw = draw_network(design, n, seed, backend=config.backend)
    est = fit(
        draw.net,
        design.r,
        basis=config.basis,
        functionals=[config.functional],
        tol=config.tol,
        max_sweeps=config.max_sweeps,
        backend=config.backend,
    )
    phi_hat = est.functionals[0].phi_hat
    p_true = np.asarray(design.p)
    perm = align_to_truth(est.p_hat, phi_hat, p_true, design.functional_truth(config.functional))
    phi_al = phi_hat[np.ix_(perm, perm)]
    r = design.r
    vals = [phi_al[a, b] for a in range(r) for b in range(a, r)] + list(est.p_hat[perm])
    return np.asarray(vals, dtype=float), est.converged


def _worker(args):
    k, design, n, seed, config = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        try:
            vals, converged = run_replication(design, n, seed, config)
        except WSBMError as exc:
            return k, None, True, f"{type(exc).__name__}: {exc}"
    return k, vals, converged, None


def run_design(
    design: BlockModelParams,
    n: int,
    reps: int,
    seed0: int = 0,
    config: EstimationConfig | None = None,
    workers: int = 1,
) -> McSummary:
    """Replicate simulation and estimation ``reps`` times and summarize.

    Results do not depend on ``workers``: replication seeds are fixed by
    index and outputs are reduced in index order.
    """
    if reps < 2:
        raise ValueError(f"need reps >= 2, got {reps}")
    config = config or EstimationConfig()
    jobs = [(k, design, n, seed0 + k, config) for k in range(reps)]
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, jobs, chunksize=max(1, reps // (4 * workers))))
    else:
        results = [_worker(job) for job in jobs]
    elapsed = time.perf_counter() - t0
    results.sort(key=lambda t: t[0])

    ok = [vals for _, vals, _, err in results if err is None]
    failures = [err for _, _, _, err in results if err is not None]
    nonconverged = sum(1 for _, _, conv, err in results if err is None and not conv)
    if not ok:
        raise WSBMError(f"all {reps} replications failed; first error: {failures[0]}")
    values = np.vstack(ok)
    truth = _truth_vector(design, config.functional)
    rows = []
    for k, name in enumerate(param_names(design.r)):
        col = values[:, k]
        q75, q25 = np.percentile(col, [75, 25])
        rows.append(
            ParamSummary(
                name=name,
                true=float(truth[k]),
                mean=float(np.mean(col)),
                median=float(np.median(col)),
                std_dev=float(np.std(col, ddof=1)) if col.size > 1 else 0.0,
                iqr=float(q75 - q25),
                min=float(col.min()),
                max=float(col.max()),
            )
        )
    return McSummary(
        design=design,
        n=n,
        reps=reps,
        seed0=seed0,
        rows=tuple(rows),
        failures=len(failures),
        nonconverged=nonconverged,
        values=values,
        failure_messages=tuple(failures[:10]),
        seconds_per_rep=elapsed / reps,
    )
