"""Command-line front end: ``fdqpt <command> [options]``.

Settings are resolved as defaults < ``--config`` JSON < ``FDQPT_*`` environment
variables < command-line flags.  Each command writes one or more CSV files and
a JSON sidecar into ``--out``.  Exit codes: 0 success, 1 usage, 2 numerical
validation failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import ast
import json
import logging
import math
import operator
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, validation
from .bloch import trajectory
from .criticality import DEFAULT_ROOT_GRID, echo_minimum, find_fdqpts, realized_modes, realized_times
from .dynamics import DEFAULT_NT, cusp_times, echo_map, rate_function, time_grid
from .floquet import floquet_modes
from .model import DEFAULT_DENSE_NK, ChainParams, InvalidParameterError, dense_grid, momentum_grid
from .topology import dtop

log = logging.getLogger("fdqpt")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3
SCHEMA_VERSION = 1
COMMANDS = ("echo", "critical", "rate-dtop", "bloch", "sweep", "validate")
ENV_PREFIX = "FDQPT_"


class UsageError(Exception):
    pass


class OutputError(Exception):
    pass


# -- configuration -----------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def parse_number(text) -> float:
    """Evaluate a numeric literal or simple arithmetic in ``pi``, e.g. ``0.8*pi``."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return float(ev(ast.parse(str(text).strip(), mode="eval")))
    except (SyntaxError, ZeroDivisionError, TypeError) as exc:
        raise ValueError(f"cannot parse number {text!r}: {exc}") from None


def _int(text) -> int:
    value = parse_number(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [parse_number(x) for x in text]
    return [parse_number(x) for x in str(text).split(",") if x.strip()]


def _range3(text) -> tuple[float, float, int]:
    vals = _floats(text)
    if len(vals) != 3 or vals[2] != int(vals[2]) or vals[2] < 1:
        raise ValueError(f"expected 'start,stop,count', got {text!r}")
    return vals[0], vals[1], int(vals[2])


# key -> (parser, attribute)
_PARAM_KEYS = {"J": "J", "gamma": "gamma", "lambda": "lam", "lam": "lam", "phi1": "phi1",
               "phi2": "phi2", "T1": "T1", "T2": "T2", "N": "L", "L": "L"}
_CONTROL_KEYS = {"nk": _int, "nt": _int, "threads": _int, "seed": _int, "draws": _int,
                 "root_grid": _int, "k": _floats, "sweep_lambda": _range3, "sweep_dphi": _range3,
                 "out": str}


@dataclass
class RunConfig:
    params: ChainParams = field(default_factory=ChainParams)
    nk: int = DEFAULT_DENSE_NK
    nt: int = DEFAULT_NT
    threads: int = 1
    seed: int = validation.DEFAULT_SEED
    draws: int = validation.DEFAULT_DRAWS
    root_grid: int = DEFAULT_ROOT_GRID
    k: list = field(default_factory=list)
    sweep_lambda: tuple = (0.0, 3.0, 31)
    sweep_dphi: tuple = (0.0, math.pi, 17)
    out: str = "fdqpt-out"

    def validate(self):
        minima = {"nk": 256, "nt": 16, "threads": 1, "draws": 1, "root_grid": 16}
        for name, lo in minima.items():
            if getattr(self, name) < lo:
                raise UsageError(f"{name} must be >= {lo}, got {getattr(self, name)}")
        for k in self.k:
            if not 0 < k < math.pi:
                raise UsageError(f"momentum {k} outside (0, pi)")

    def grids(self) -> dict:
        return {"nk": self.nk, "nt": self.nt, "root_grid": self.root_grid, "N": self.params.L}


def _apply(cfg: RunConfig, values: dict, source: str) -> RunConfig:
    params = {}
    controls = {}
    for key, raw in values.items():
        if raw is None:
            continue
        try:
            if key in _PARAM_KEYS:
                attr = _PARAM_KEYS[key]
                params[attr] = _int(raw) if attr == "L" else parse_number(raw)
            elif key in _CONTROL_KEYS:
                controls[key] = _CONTROL_KEYS[key](raw)
            else:
                raise UsageError(f"unknown setting {key!r} in {source}")
        except ValueError as exc:
            raise UsageError(f"{source}: {key}: {exc}") from None
    try:
        new_params = replace(cfg.params, **params) if params else cfg.params
    except InvalidParameterError as exc:
        raise UsageError(f"{source}: {exc}") from None
    return replace(cfg, params=new_params, **controls)


def _env_values(environ) -> dict:
    # FDQPT_LAMBDA, FDQPT_NK, FDQPT_SWEEP_DPHI, ...
    keys = {ENV_PREFIX + k.upper(): k for k in (*_PARAM_KEYS, *_CONTROL_KEYS)}
    return {keys[name]: value for name, value in environ.items() if name in keys}


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    cfg = RunConfig()
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise OutputError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError(f"config {args.config} must hold a JSON object")
        cfg = _apply(cfg, data, args.config)
    cfg = _apply(cfg, _env_values(environ), "environment")
    flags = {key: getattr(args, dest) for key, dest in _FLAG_DEST.items()}
    cfg = _apply(cfg, flags, "command line")
    cfg.validate()
    return cfg


# -- output ------------------------------------------------------------------

def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {path}: {exc.strerror}") from None
    return path


def write_csv(path: Path, name: str, columns: list[str], data) -> Path:
    data = np.asarray(data, dtype=float)
    header = f"# fdqpt {name} schema v{SCHEMA_VERSION}\n" + ",".join(columns) + "\n"
    lines = [header]
    fmt = ",".join(["%.12g"] * len(columns)) + "\n"
    for row in data:
        lines.append(fmt % tuple(row))
    try:
        with open(path, "w", newline="\n") as fh:
            fh.writelines(lines)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    return path


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_sidecar(path: Path, command: str, cfg: RunConfig, payload: dict) -> Path:
    doc = {
        "command": command,
        "tool": "fdqpt",
        "version": __version__,
        "schema": SCHEMA_VERSION,
        "seed": cfg.seed,
        "params": cfg.params.as_dict(),
        "grids": cfg.grids(),
        **payload,
    }
    try:
        path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    return path


# -- commands ----------------------------------------------------------------

def _periodic_grid(cfg: RunConfig, modes):
    return time_grid(cfg.params, cfg.nt, extra=realized_times(modes))


def cmd_echo(cfg: RunConfig) -> int:
    p = cfg.params
    modes = find_fdqpts(p, cfg.root_grid)
    tg = _periodic_grid(cfg, modes)
    emap = echo_map(p, momentum_grid(p), tg)
    out = _out_dir(cfg)
    kk, tt = np.meshgrid(emap.ks, emap.times, indexing="ij")
    write_csv(out / "echo.csv", "echo", ["k", "t", "echo"],
              np.column_stack([kk.ravel(), tt.ravel(), emap.echo.ravel()]))
    write_csv(out / "echo_total.csv", "echo_total", ["t", "log_echo", "rate"],
              np.column_stack([emap.times, emap.log_total, -emap.log_total / p.L]))
    momenta = sorted({round(z.k / np.pi, 4) for z in emap.zeros})
    write_sidecar(out / "echo.json", "echo", cfg, {
        "zeros": [z.__dict__ for z in emap.zeros],
        "critical_momenta_over_pi": momenta,
    })
    print(f"echo: {len(emap.zeros)} zeros, critical k/pi = {momenta}")
    return EXIT_OK


def cmd_critical(cfg: RunConfig) -> int:
    p = cfg.params
    ks = dense_grid(cfg.nk).ks
    m = floquet_modes(p, ks)
    out = _out_dir(cfg)
    write_csv(out / "critical.csv", "critical", ["k", "F1", "F2", "Lstar1", "Lstar2"],
              np.column_stack([ks, m.ov.F1, m.ov.F2, echo_minimum(m.ov, 1), echo_minimum(m.ov, 2)]))
    roots = find_fdqpts(p, cfg.root_grid)
    real = realized_modes(roots)
    write_sidecar(out / "critical.json", "critical", cfg, {
        "roots": [r.as_dict() for r in roots],
        "n_roots": len(roots),
        "n_realized": len(real),
        "realized_by_segment": {s: sum(r.segment == s for r in real) for s in (1, 2)},
    })
    for r in roots:
        verdict = "realized" if r.realized else "rejected"
        print(f"k/pi = {r.k_c / np.pi:.4f}  segment {r.segment}  {verdict}")
    return EXIT_OK


def cmd_rate_dtop(cfg: RunConfig) -> int:
    p = cfg.params
    roots = find_fdqpts(p, cfg.root_grid)
    tg = _periodic_grid(cfg, roots)
    rate = rate_function(p, tg, nk=cfg.nk)
    chain = rate_function(p, tg, grid=momentum_grid(p))
    series = dtop(p, tg, nk=cfg.nk, check=False)
    out = _out_dir(cfg)
    write_csv(out / "rate_dtop.csv", "rate_dtop",
              ["t", "g", "g_chain", "nu", "nu_rounded", "segment"],
              np.column_stack([tg.samples, rate.values, chain.values, series.nu,
                               series.nu_rounded, tg.segment()]))
    cusps = cusp_times(rate)
    jumps = series.jumps()
    expected = realized_times(roots)
    step = float(np.max(np.diff(tg.samples)))
    off_plateau = series.quantization_error >= 0.05
    write_sidecar(out / "rate_dtop.json", "rate-dtop", cfg, {
        "cusp_times": cusps,
        "dtop_jumps": [{"t": t, "step": s} for t, s in jumps],
        "realized_critical_times": expected,
        "time_step": step,
        "max_quantization_error": float(series.quantization_error.max()),
        "n_unquantized_samples": int(off_plateau.sum()),
    })
    print(f"rate-dtop: {len(cusps)} cusps, {len(jumps)} DTOP jumps, "
          f"max |nu - round(nu)| = {series.quantization_error.max():.2e}")
    return EXIT_OK


def cmd_bloch(cfg: RunConfig) -> int:
    p = cfg.params
    roots = find_fdqpts(p, cfg.root_grid)
    ks = list(cfg.k) or sorted({r.k_c for r in roots})
    tg = time_grid(p, cfg.nt)
    rows, events = [], []
    for k in ks:
        tr = trajectory(p, k, tg)
        seg = tr.segment()
        rows.append(np.column_stack([np.full(tg.samples.size, k), tg.samples, tr.vectors, seg]))
        events.append({"k": k, "k_over_pi": k / np.pi, "events": tr.events,
                       "segments": [1 if t < p.T1 else 2 for t in tr.events]})
    out = _out_dir(cfg)
    data = np.vstack(rows) if rows else np.empty((0, 6))
    write_csv(out / "bloch.csv", "bloch", ["k", "t", "x", "y", "z", "segment"], data)
    write_sidecar(out / "bloch.json", "bloch", cfg, {"trajectories": events})
    print(f"bloch: {len(ks)} trajectories, {sum(len(e['events']) for e in events)} antiparallel events")
    return EXIT_OK


def _sweep_cell(args):
    params, root_grid = args
    real = realized_modes(find_fdqpts(params, root_grid))
    return sum(m.segment == 1 for m in real), sum(m.segment == 2 for m in real)


def cmd_sweep(cfg: RunConfig) -> int:
    """Realized-mode counts on a lambda x delta_phi grid with phi2 fixed."""
    lams = np.linspace(*cfg.sweep_lambda)
    dphis = np.linspace(*cfg.sweep_dphi)
    base = cfg.params
    cells = [(replace(base, lam=float(l), phi1=base.phi2 + float(d)), cfg.root_grid)
             for l in lams for d in dphis]
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            counts = list(pool.map(_sweep_cell, cells, chunksize=8))
    else:
        counts = [_sweep_cell(c) for c in cells]
    grid = [(l, d) for l in lams for d in dphis]
    data = [(l, d, c1, c2) for (l, d), (c1, c2) in zip(grid, counts)]
    out = _out_dir(cfg)
    write_csv(out / "sweep.csv", "sweep", ["lambda", "delta_phi", "n_segment1", "n_segment2"], data)
    write_sidecar(out / "sweep.json", "sweep", cfg, {
        "axes": {"lambda": {"start": cfg.sweep_lambda[0], "stop": cfg.sweep_lambda[1],
                            "count": cfg.sweep_lambda[2]},
                 "delta_phi": {"start": cfg.sweep_dphi[0], "stop": cfg.sweep_dphi[1],
                               "count": cfg.sweep_dphi[2]}},
        "shape": [len(lams), len(dphis)],
    })
    print(f"sweep: {len(cells)} cells, {sum(a + b for a, b in counts)} realized modes in total")
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    report = validation.run(seed=cfg.seed, draws=cfg.draws)
    out = _out_dir(cfg)
    write_sidecar(out / "validate.json", "validate", cfg, report.as_dict())
    for key, err in sorted(report.max_error.items()):
        print(f"{key:28s} max error {err:.3e}")
    if not report.ok:
        for f in report.failures[:20]:
            print(f"FAIL {f.module}.{f.check} seed={f.seed} draw={f.draw} "
                  f"error={f.error:.3e} tol={f.tol:.0e}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"validate: {report.draws} draws, all within tolerance")
    return EXIT_OK


_HANDLERS = {"echo": cmd_echo, "critical": cmd_critical, "rate-dtop": cmd_rate_dtop,
             "bloch": cmd_bloch, "sweep": cmd_sweep, "validate": cmd_validate}


# -- argument parsing --------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# setting key -> argparse dest
_FLAG_DEST = {"J": "J", "gamma": "gamma", "lambda": "lam", "phi1": "phi1", "phi2": "phi2",
              "T1": "T1", "T2": "T2", "N": "N", "nk": "nk", "nt": "nt", "threads": "threads",
              "seed": "seed", "draws": "draws", "root_grid": "root_grid", "k": "k",
              "sweep_lambda": "sweep_lambda", "sweep_dphi": "sweep_dphi", "out": "out"}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("chain parameters (numbers or expressions in pi)")
    g.add_argument("--J", help="nearest-neighbour coupling (default 1)")
    g.add_argument("--gamma", help="anisotropy (default 1)")
    g.add_argument("--lambda", dest="lam", help="transverse field (default 0.6)")
    g.add_argument("--phi1", help="flux of the first segment (default 0)")
    g.add_argument("--phi2", help="flux of the second segment (default pi/4)")
    g.add_argument("--T1", help="duration of the first segment (default pi)")
    g.add_argument("--T2", help="duration of the second segment (default pi)")
    g.add_argument("--N", help="chain length, even (default 1000)")
    n = common.add_argument_group("run controls")
    n.add_argument("--config", help="JSON file with settings")
    n.add_argument("--out", help="output directory (default ./fdqpt-out)")
    n.add_argument("--nk", help=f"dense momentum grid size (default {DEFAULT_DENSE_NK})")
    n.add_argument("--nt", help=f"time samples per period (default {DEFAULT_NT})")
    n.add_argument("--threads", help="worker processes for sweeps (default 1)")
    n.add_argument("--seed", help="seed for randomised validation")
    n.add_argument("--draws", help="number of validation draws (default 1000)")
    n.add_argument("--root-grid", dest="root_grid", help="bracketing grid for fidelity roots")
    n.add_argument("--k", help="comma-separated momenta for bloch (default: fidelity roots)")
    n.add_argument("--sweep-lambda", dest="sweep_lambda", help="start,stop,count (default 0,3,31)")
    n.add_argument("--sweep-dphi", dest="sweep_dphi", help="start,stop,count (default 0,pi,17)")
    n.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="fdqpt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fdqpt {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    helps = {
        "echo": "per-mode Loschmidt echo on the chain momenta",
        "critical": "fidelity profile, echo minima and fidelity roots",
        "rate-dtop": "rate function and DTOP over one period",
        "bloch": "Bloch-vector micromotion for selected momenta",
        "sweep": "realized FDQPT counts over lambda and flux difference",
        "validate": "randomised oracle comparison of all closed forms",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None, environ=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args, environ)
        return _HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"fdqpt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OutputError as exc:
        print(f"fdqpt: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
