"""Command-line interface: ``wsbm simulate | estimate | montecarlo``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, NumericalError
from .estimate import canonical_labeling, estimate_cdf, estimate_density, fit, rate_bandwidth
from .harness import EstimationConfig, run_design
from .io import parse_config, read_network, read_params, to_jsonable, write_estimate, write_labels, write_network
from .jointdiag import ConvergenceWarning
from .moments import PathAccumulator
from .simulate import draw_network, binary_design

log = logging.getLogger("wsbm")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wsbm", description="Moment estimation of weighted stochastic block models.")
    parser.add_argument("--version", action="version", version=f"wsbm {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="YAML config file; flags override its keys")
        p.add_argument("--output", "-o", help="output path")
        p.add_argument("--seed", type=int)
        p.add_argument("--backend", choices=["auto", "numba", "numpy"])

    def design_opts(p):
        p.add_argument("--design", type=int, choices=[1, 2, 3], help="built-in binary two-community design")
        p.add_argument("--params", help="JSON file with block-model parameters")
        p.add_argument("--n", type=int, help="number of nodes")

    def estimation_opts(p):
        p.add_argument("--r", type=int, help="number of communities")
        p.add_argument("--basis", choices=["auto", "indicator", "polynomial"])
        p.add_argument("--thresholds", type=_floats, help="comma-separated indicator thresholds")
        p.add_argument("--degree", type=int, help="polynomial basis degree")
        p.add_argument("--n-levels", dest="n_levels", type=int, help="number of quantile thresholds for auto basis")
        p.add_argument("--tol", type=float)
        p.add_argument("--max-sweeps", dest="max_sweeps", type=int)

    p_sim = sub.add_parser("simulate", help="draw a network from a block model")
    common(p_sim)
    design_opts(p_sim)
    p_sim.add_argument("--labels", help="also write the latent community labels here")
    p_sim.add_argument("--network-format", dest="network_format", choices=["edgelist", "dense"])

    p_est = sub.add_parser("estimate", help="estimate a block model from a network file")
    common(p_est)
    estimation_opts(p_est)
    p_est.add_argument("--input", "-i", help="edge-list or dense-matrix network file")
    p_est.add_argument("--moments", type=_floats, help="comma-separated powers k for E(X^k | z1, z2)")
    p_est.add_argument("--pmf-values", dest="pmf_values", type=_floats, help="values v for P(X = v | z1, z2)")
    p_est.add_argument("--cdf-grid", dest="cdf_grid", type=_floats, help="points x for P(X <= x | z1, z2)")
    p_est.add_argument("--rearrange-cdf", dest="rearrange_cdf", action="store_const", const=True)
    p_est.add_argument("--density-grid", dest="density_grid", type=_floats, help="points for conditional densities")
    p_est.add_argument("--bandwidth", help="'rate' (c * sd * n^-2/5) or a fixed positive number")
    p_est.add_argument("--bandwidth-c", dest="bandwidth_c", type=float)
    p_est.add_argument("--kernel", choices=["gaussian", "epanechnikov"])
    p_est.add_argument("--allow-nonconverged", dest="allow_nonconverged", action="store_const", const=True)

    p_mc = sub.add_parser("montecarlo", help="replicate simulation and estimation")
    common(p_mc)
    design_opts(p_mc)
    estimation_opts(p_mc)
    p_mc.add_argument("--reps", type=int)
    p_mc.add_argument("--threads", type=int, help="worker processes")
    p_mc.add_argument("--functional", help="moment:K, pmf:V or cdf:X (default moment:1)")
    p_mc.add_argument("--table", help="also write the summary table as CSV")
    return parser


_NON_CONFIG = {"command", "config", "verbose"}


def _backend(cfg):
    return None if cfg.backend == "auto" else cfg.backend


def _design(cfg):
    return binary_design(cfg.design) if cfg.design is not None else read_params(cfg.params)


def cmd_simulate(cfg) -> int:
    draw = draw_network(_design(cfg), cfg.n, cfg.seed, backend=_backend(cfg))
    if cfg.output:
        write_network(draw.net, cfg.output, fmt=cfg.network_format)
    else:
        write_network(draw.net, "/dev/stdout", fmt=cfg.network_format)
    if cfg.labels:
        write_labels(draw.z, cfg.labels)
    return EXIT_OK


def cmd_estimate(cfg) -> int:
    net = read_network(cfg.input)
    functionals = cfg.resolve_functionals()
    basis = cfg.resolve_basis()
    backend = _backend(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        est = fit(net, cfg.r, basis=basis, functionals=functionals, tol=cfg.tol, max_sweeps=cfg.max_sweeps,
                  backend=backend)
    if not est.converged and not cfg.allow_nonconverged:
        raise NumericalError(
            f"joint diagonalization did not converge in {cfg.max_sweeps} sweeps; pass --allow-nonconverged to keep it"
        )
    est = canonical_labeling(est)
    acc = PathAccumulator(net, est.moments.basis, backend=backend)
    cdf = estimate_cdf(net, est, cfg.cdf_grid, rearrange=cfg.rearrange_cdf, accumulator=acc) if cfg.cdf_grid else None
    density = None
    if cfg.density_grid:
        h = rate_bandwidth(net, c=cfg.bandwidth_c) if cfg.bandwidth == "rate" else float(cfg.bandwidth)
        density = estimate_density(net, est, cfg.density_grid, bandwidth=h, kernel=cfg.kernel, accumulator=acc)
    text = write_estimate(est, est.functionals, path=cfg.output, density=density, config=cfg, cdf=cdf)
    if not cfg.output:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_montecarlo(cfg) -> int:
    design = _design(cfg)
    config = EstimationConfig(
        basis=cfg.resolve_basis(),
        functional=cfg.resolve_harness_functional(),
        tol=cfg.tol,
        max_sweeps=cfg.max_sweeps,
        backend=_backend(cfg),
    )
    summary = run_design(design, cfg.n, cfg.reps, seed0=cfg.seed, config=config, workers=cfg.threads)
    print(summary.report())
    if cfg.output:
        doc = summary.to_dict()
        doc["config"] = cfg.echo()
        with open(cfg.output, "w") as fh:
            json.dump(to_jsonable(doc), fh, indent=2)
            fh.write("\n")
    if cfg.table:
        with open(cfg.table, "w") as fh:
            fh.write(summary.table_csv())
    return EXIT_OK


COMMAND_FUNCS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "montecarlo": cmd_montecarlo}


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.WARNING)
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.INFO)
        overrides = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            cfg = parse_config(args.config, overrides, command=args.command)
        return COMMAND_FUNCS[cfg.command](cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except DataError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except NumericalError as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
