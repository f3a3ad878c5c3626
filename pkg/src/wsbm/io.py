"""File formats: networks, block-model parameters, run configs, estimates.

Networks are read from either an edge list with header ``i,j,weight``
(0-based ids, every unordered pair exactly once) or a dense square
comma-separated matrix.  Floats are written with ``repr``, which
round-trips exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .core import BasisSpec, BlockModelParams, FunctionalSpec, Network
from .errors import ConfigError, FormatError

__all__ = [
    "read_network",
    "write_network",
    "read_params",
    "write_params",
    "RunConfig",
    "parse_config",
    "CONFIG_FORMAT_VERSION",
    "estimate_document",
    "write_estimate",
    "to_jsonable",
]

EDGE_HEADER = ["i", "j", "weight"]
CONFIG_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------


def _parse_float(text, line):
    try:
        v = float(text)
    except ValueError:
        raise FormatError(f"non-numeric weight {text!r}", line) from None
    if not math.isfinite(v):
        raise FormatError(f"non-finite weight {text!r}", line)
    return v


def _parse_id(text, line):
    try:
        v = int(text)
    except ValueError:
        raise FormatError(f"node id {text!r} is not an integer", line) from None
    if v < 0:
        raise FormatError(f"node id {v} is negative", line)
    return v


def _read_edge_list(rows):
    entries = {}
    for line, row in rows:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise FormatError(f"expected 3 fields, got {len(row)}", line)
        i, j = _parse_id(row[0], line), _parse_id(row[1], line)
        w = _parse_float(row[2], line)
        if i == j:
            raise FormatError(f"self-loop entry for node {i}", line)
        key = (min(i, j), max(i, j))
        if key in entries:
            raise FormatError(f"duplicate pair {key} (first on line {entries[key][1]})", line)
        entries[key] = (w, line)
    if not entries:
        raise FormatError("edge list has no rows")
    n = 1 + max(max(k) for k in entries)
    W = np.zeros((n, n))
    for (i, j), (w, _) in entries.items():
        W[i, j] = W[j, i] = w
    expected = n * (n - 1) // 2
    if len(entries) != expected:
        missing = next((i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in entries)
        raise FormatError(
            f"edge list has {len(entries)} pairs but n={n} nodes need {expected}; "
            f"first missing pair {missing} (write weight 0 explicitly)"
        )
    return W


def _read_dense(rows):
    mat = []
    for line, row in rows:
        if not row or all(not c.strip() for c in row):
            continue
        mat.append([_parse_float(c, line) for c in row])
    n = len(mat)
    if n == 0 or any(len(r) != n for r in mat):
        raise FormatError("dense matrix file must be square")
    return np.array(mat)


def read_network(path) -> Network:
    """Load a :class:`Network` from an edge-list or dense-matrix file."""
    with open(path, newline="") as fh:
        rows = list(enumerate(csv.reader(fh), start=1))
    if not rows:
        raise FormatError(f"{path} is empty")
    header = [c.strip().lower() for c in rows[0][1]]
    W = _read_edge_list(rows[1:]) if header == EDGE_HEADER else _read_dense(rows)
    return Network(W)


def write_network(net: Network, path, fmt: str = "edgelist") -> None:
    """Write ``net`` as an edge list (default) or a dense matrix."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fmt == "edgelist":
            w.writerow(EDGE_HEADER)
            for i in range(net.n):
                for j in range(i + 1, net.n):
                    w.writerow([i, j, repr(float(net.weights[i, j]))])
        elif fmt == "dense":
            M = np.array(net.weights)
            np.fill_diagonal(M, 0.0)
            for row in M:
                w.writerow([repr(float(v)) for v in row])
        else:
            raise ValueError(f"unknown network format {fmt!r}")


def write_labels(z, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "community"])
        for i, c in enumerate(z):
            w.writerow([i, int(c)])


# ---------------------------------------------------------------------------
# Block-model parameters
# ---------------------------------------------------------------------------


def read_params(path) -> BlockModelParams:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc.msg}", exc.lineno) from None
    return BlockModelParams.from_dict(d)


def write_params(params: BlockModelParams, path) -> None:
    with open(path, "w") as fh:
        json.dump(params.to_dict(), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    command: str = ""
    format_version: int = CONFIG_FORMAT_VERSION
    input: str | None = None
    output: str | None = None
    table: str | None = None
    labels: str | None = None
    network_format: str = "edgelist"
    r: int | None = None
    basis: str = "auto"
    thresholds: list | None = None
    degree: int | None = None
    n_levels: int | None = None
    cdf_grid: list | None = None
    rearrange_cdf: bool = False
    moments: list | None = None
    pmf_values: list | None = None
    density_grid: list | None = None
    bandwidth: object = "rate"
    bandwidth_c: float = 1.0
    kernel: str = "epanechnikov"
    functional: str = "moment:1"
    tol: float = 1e-12
    max_sweeps: int = 100
    allow_nonconverged: bool = False
    seed: int = 0
    reps: int = 100
    threads: int = 1
    n: int = 100
    design: int | None = None
    params: str | None = None
    backend: str = "auto"

    def resolve_basis(self) -> BasisSpec | None:
        if self.basis == "auto":
            return None
        if self.basis == "indicator":
            if not self.thresholds:
                raise ConfigError("basis 'indicator' needs 'thresholds'")
            return BasisSpec.indicator(tuple(float(t) for t in self.thresholds))
        if self.basis == "polynomial":
            if self.degree is None:
                raise ConfigError("basis 'polynomial' needs 'degree'")
            return BasisSpec.polynomial(int(self.degree))
        raise ConfigError(f"unknown basis {self.basis!r}; expected auto, indicator or polynomial")

    def resolve_functionals(self) -> list[FunctionalSpec]:
        out = [FunctionalSpec.moment(int(k)) for k in self.moments or ()]
        out += [FunctionalSpec.pmf(float(v)) for v in self.pmf_values or ()]
        return out

    def resolve_harness_functional(self) -> FunctionalSpec:
        kind, _, arg = str(self.functional).partition(":")
        try:
            if kind == "moment":
                return FunctionalSpec.moment(int(arg or 1))
            if kind == "pmf":
                return FunctionalSpec.pmf(float(arg))
            if kind == "cdf":
                return FunctionalSpec.cdf(float(arg))
        except ValueError:
            pass
        raise ConfigError(f"bad functional {self.functional!r}; use moment:K, pmf:V or cdf:X")

    def echo(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INT_KEYS = {"format_version", "r", "degree", "n_levels", "max_sweeps", "seed", "reps", "threads", "n", "design"}
_FLOAT_KEYS = {"tol", "bandwidth_c"}
_BOOL_KEYS = {"rearrange_cdf", "allow_nonconverged"}
_LIST_KEYS = {"thresholds", "cdf_grid", "moments", "pmf_values", "density_grid"}
COMMANDS = ("simulate", "estimate", "montecarlo")


def _coerce(key, value, line=None):
    if value is None:
        return None
    try:
        if key in _INT_KEYS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("true", "1", "yes"):
                return True
            if str(value).lower() in ("false", "0", "no"):
                return False
            raise ValueError
        if key in _LIST_KEYS:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            if not isinstance(value, (list, tuple)):
                value = [value]
            return [float(v) for v in value]
        if key == "bandwidth":
            return value if value == "rate" else float(value)
    except (TypeError, ValueError):
        where = f"line {line}: " if line else ""
        raise ConfigError(f"{where}invalid value {value!r} for {key!r}") from None
    return str(value) if not isinstance(value, str) else value


def _load_yaml(text, source):
    try:
        node = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else "?"
        raise ConfigError(f"{source}: line {line}: {exc.problem}") from None
    if node is None:
        return {}
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{source}: top level must be a key-value mapping")
    out = {}
    for knode, vnode in node.value:
        key = knode.value
        line = knode.start_mark.line + 1
        if key not in _FIELDS:
            raise ConfigError(f"{source}: line {line}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}: line {line}: duplicate key {key!r}")
        value = yaml.safe_load(yaml.serialize(vnode))
        out[key] = (_coerce(key, value, line), line)
    return out


def parse_config(path=None, overrides: dict | None = None, command: str | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from a YAML file plus flag overrides.

    Flags win over the file; ``None``-valued overrides are ignored.  Unknown
    keys and malformed values raise :class:`ConfigError` naming the line.
    """
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        values = {k: v for k, (v, _) in _load_yaml(text, path).items()}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown option {key!r}")
        values[key] = _coerce(key, value)
    if command is not None:
        if values.get("command") not in (None, command):
            raise ConfigError(f"config file is for {values['command']!r}, not {command!r}")
        values["command"] = command
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.format_version != CONFIG_FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {cfg.format_version}; expected {CONFIG_FORMAT_VERSION}")
    if cfg.command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {cfg.command!r}")
    if cfg.r is not None and cfg.r < 1:
        raise ConfigError(f"r must be >= 1, got {cfg.r}")
    if cfg.backend not in ("auto", "numba", "numpy"):
        raise ConfigError(f"backend must be auto, numba or numpy, got {cfg.backend!r}")
    if cfg.tol <= 0 or cfg.max_sweeps < 1:
        raise ConfigError("tol must be positive and max_sweeps at least 1")
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1")
    if cfg.kernel not in ("gaussian", "epanechnikov"):
        raise ConfigError(f"unknown kernel {cfg.kernel!r}")
    if cfg.network_format not in ("edgelist", "dense"):
        raise ConfigError(f"network_format must be edgelist or dense, got {cfg.network_format!r}")
    basis = cfg.resolve_basis()
    if basis is not None and cfg.r is not None and basis.l < cfg.r:
        raise ConfigError(f"basis has l={basis.l} < r={cfg.r}")
    if cfg.command == "estimate":
        if not cfg.input:
            raise ConfigError("estimate needs 'input'")
        if cfg.r is None:
            raise ConfigError("estimate needs 'r'")
        if cfg.density_grid and basis is not None and basis.kind == "indicator-grid" and basis.thresholds == (0.0, 1.0):
            warnings.warn("density requested together with the binary basis preset {0, 1}", stacklevel=3)
        if cfg.bandwidth != "rate" and not cfg.bandwidth > 0:
            raise ConfigError("bandwidth must be 'rate' or a positive number")
    if cfg.command in ("simulate", "montecarlo"):
        if (cfg.design is None) == (cfg.params is None):
            raise ConfigError(f"{cfg.command} needs exactly one of 'design' or 'params'")
        if cfg.n < 4:
            raise ConfigError(f"n must be >= 4, got {cfg.n}")
        if cfg.seed < 0:
            raise ConfigError("seed must be non-negative")
    if cfg.command == "montecarlo":
        if cfg.reps < 2:
            raise ConfigError(f"montecarlo needs reps >= 2, got {cfg.reps}")
        cfg.resolve_harness_functional()


# ---------------------------------------------------------------------------
# Estimate documents
# ---------------------------------------------------------------------------


def to_jsonable(obj):
    """Nested structure with arrays as lists and non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def estimate_document(est, functionals=(), density=None, config=None, cdf=None, n=None) -> dict:
    doc = {
        "format_version": CONFIG_FORMAT_VERSION,
        "library_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "n": n if n is not None else (est.moments.n if est.moments is not None else None),
        "r": est.r,
        "basis": est.moments.basis.describe() if est.moments is not None else None,
        "label_order": list(est.label_order),
        "p_hat": {"raw": est.p_hat, "normalized": est.p_normalized},
        "G_hat": est.G_hat,
        "H1_hat": est.H1_hat,
        "functionals": [{"functional": fe.phi.describe(), "phi_hat": fe.phi_hat} for fe in functionals],
        "diagnostics": {
            "eigvals": est.eigvals,
            "eiggap": est.eiggap,
            "offdiag_final": est.offdiag_final,
            "converged": est.converged,
            "n_sweeps": est.n_sweeps,
            "cond_G": est.cond_G,
        },
    }
    if cdf:
        doc["cdf"] = {"grid": [fe.phi.at for fe in cdf], "F_hat": [fe.phi_hat for fe in cdf]}
    if density is not None:
        doc["density"] = {
            "grid": density.grid,
            "bandwidth": density.bandwidth,
            "kernel": density.kernel,
            "f_hat": density.f_hat,
        }
    if config is not None:
        doc["config"] = config.echo() if hasattr(config, "echo") else config
    return to_jsonable(doc)


def write_estimate(est, functionals=(), path=None, density=None, config=None, cdf=None) -> str:
    """Serialize an estimate to JSON; writes to ``path`` when given.

    Returns the JSON text.
    """
    text = json.dumps(estimate_document(est, functionals, density, config, cdf), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
