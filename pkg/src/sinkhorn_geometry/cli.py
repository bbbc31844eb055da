"""Command-line interface.

Exit codes: 0 success, 2 validation failure, 3 file system error, 4 unreadable
or invalid input, 5 solver failure.

The ``SINKHORN_GEOMETRY_THREADS`` environment variable caps the number of
BLAS threads. It is applied before numpy is imported, so this module keeps
its scientific imports inside the command functions.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field

from .errors import InputError, SolverError

THREADS_ENV = "SINKHORN_GEOMETRY_THREADS"
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_SOLVER = 5

log = logging.getLogger("sinkhorn_geometry")


@dataclass
class RunConfig:
    """Parsed command line.

    ``command`` is the subcommand, ``target`` the quantity or figure or
    suite it acts on, ``options`` every remaining flag.
    """

    command: str
    target: str | None = None
    options: dict = field(default_factory=dict)


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        return json.dumps({"level": record.levelname, "logger": record.name, "message": record.getMessage()})


def _configure_logging(quiet: bool, as_json: bool):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter() if as_json else logging.Formatter("%(levelname)s: %(message)s"))
    root = logging.getLogger("sinkhorn_geometry")
    root.handlers[:] = [handler]
    root.propagate = False
    root.setLevel(logging.ERROR if quiet else logging.INFO)
    logging.captureWarnings(True)
    warn_log = logging.getLogger("py.warnings")
    warn_log.handlers[:] = [handler]
    warn_log.propagate = False
    warn_log.setLevel(logging.ERROR if quiet else logging.WARNING)


def _configure_threads():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return
    if not value.isdigit() or int(value) < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    for var in _THREAD_VARS:
        os.environ[var] = value


# ---------------------------------------------------------------------------
# argument parsing


def _grid(text):
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("grid must look like lo:hi:count") from exc


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _join_negative_values(argv):
    # "--grid -3:3:256" would otherwise be read as an unknown option
    out = list(argv)
    for i in range(len(out) - 1):
        if out[i] == "--grid" and out[i + 1].startswith("-"):
            out[i:i + 2] = [f"--grid={out[i + 1]}", ""]
    return [a for a in out if a != ""]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sinkhorn-geometry",
        description="Sinkhorn divergence geometry on discrete measures.",
    )
    parser.add_argument("--quiet", action="store_true", help="only log errors")
    parser.add_argument("--json", action="store_true", help="log records as JSON lines on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    comp = sub.add_parser("compute", help="transport cost, divergence, metric tensor or distance bounds")
    comp.add_argument("target", choices=["ot", "sdiv", "tensor", "bounds"])
    comp.add_argument("--space", help="space JSON; without it each measure carries its own points")
    comp.add_argument("--mu", required=True, help="measure JSON")
    comp.add_argument("--nu", help="second measure JSON (ot, sdiv, bounds)")
    comp.add_argument("--tangent", help="tangent JSON (tensor)")
    comp.add_argument("--epsilon", type=float, help="override or supply epsilon")
    comp.add_argument("--tol", type=float, default=1e-10, help="Sinkhorn tolerance")
    comp.add_argument("--max-iter", type=int, default=100_000)
    comp.add_argument("--out", help="write JSON here instead of stdout")

    geo = sub.add_parser("geodesic", help="minimize the chain of divergences between two measures")
    geo.add_argument("--space", help="space JSON")
    geo.add_argument("--mu0", required=True)
    geo.add_argument("--mu1", required=True)
    geo.add_argument("--epsilon", type=float)
    geo.add_argument("--steps", type=int, default=16)
    geo.add_argument("--mode", choices=["auto", "vertical", "particle"], default="auto")
    geo.add_argument("--init", choices=["auto", "linear", "displacement", "arc"], default="auto")
    geo.add_argument("--method", choices=["lbfgs", "mirror"], default="lbfgs")
    geo.add_argument("--rel-tol", type=float, default=1e-9)
    geo.add_argument("--max-iter", type=int, default=5000)
    geo.add_argument("--strict", action="store_true", help="fail when the iteration budget runs out")
    geo.add_argument("--out", help="write JSON here instead of stdout")

    br = sub.add_parser("bridge", help="entropic bridge density on a 1-D grid")
    br.add_argument("--space", help="space JSON")
    br.add_argument("--mu0", help="measure JSON (default: Dirac at 0)")
    br.add_argument("--mu1", help="measure JSON (default: Dirac at 0)")
    br.add_argument("--epsilon", type=float, help="epsilon (default 1 when no space is given)")
    br.add_argument("--t", type=float, default=0.5)
    br.add_argument("--grid", type=_grid, default=(-3.0, 3.0, 256), help="lo:hi:count")
    br.add_argument("--out", help="write CSV here instead of stdout")

    fig = sub.add_parser("figures", help="CSV tables behind the standard plots")
    fig.add_argument("target", choices=["gaussians", "triangle", "nonconvexity", "twopoint"])
    fig.add_argument("--eps", type=float, nargs="+", help="regularization (several for nonconvexity)")
    fig.add_argument("--out", required=True, help="output directory")

    val = sub.add_parser("validate", help="run a validation suite")
    val.add_argument("--suite", default="all",
                     choices=["core", "sinkhorn", "tensor", "geodesics", "closed_forms", "acceptance", "all"])
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--format", choices=["text", "json"], default="text")
    val.add_argument("--report", help="also write the JSON report here")
    return parser


def config_from_args(args) -> RunConfig:
    opts = {k: v for k, v in vars(args).items() if k not in ("command", "target", "quiet", "json")}
    return RunConfig(args.command, getattr(args, "target", None), opts)


# ---------------------------------------------------------------------------
# commands


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_pair(opts, first, second, default_eps=None):
    from .io import load_measure, load_space

    eps = opts.get("epsilon") if opts.get("epsilon") is not None else default_eps
    if opts.get("space"):
        space = load_space(opts["space"], eps)
        a = load_measure(opts[first], space)
        b = load_measure(opts[second], space) if opts.get(second) else None
    else:
        if eps is None:
            raise InputError("--epsilon is required without --space")
        a = load_measure(opts[first], epsilon=eps)
        b = load_measure(opts[second], epsilon=eps) if opts.get(second) else None
    return a, b


def _cmd_compute(cfg: RunConfig) -> int:
    from .geodesics import beta_distance, ds_bounds
    from .io import dumps, load_tangent
    from .sinkhorn import same_measure, solve_potentials
    from .tensor import beta_dot_from_mu_dot, metric_tensor, self_transport, spectral_report, tilde_metric_tensor

    o = cfg.options
    mu, nu = _load_pair(o, "mu", "nu")
    if cfg.target in ("ot", "sdiv", "bounds") and nu is None:
        raise InputError(f"compute {cfg.target} needs --nu")
    if cfg.target == "ot":
        p = solve_potentials(mu, nu, o["tol"], o["max_iter"])
        out = {"value": p.value, "iterations": p.iterations, "residual": p.residual}
    elif cfg.target == "sdiv":
        if same_measure(mu, nu):
            out = {"value": 0.0, "iterations": 0, "residual": 0.0}
        else:
            sols = [solve_potentials(mu, nu, o["tol"], o["max_iter"]),
                    solve_potentials(mu, mu, o["tol"], o["max_iter"]),
                    solve_potentials(nu, nu, o["tol"], o["max_iter"])]
            value = sols[0].value - 0.5 * sols[1].value - 0.5 * sols[2].value
            out = {"value": value, "iterations": max(s.iterations for s in sols),
                   "residual": max(s.residual for s in sols)}
    elif cfg.target == "tensor":
        if not o.get("tangent"):
            raise InputError("compute tensor needs --tangent")
        st = self_transport(mu)
        b = load_tangent(o["tangent"], mu.space)
        report = spectral_report(st)
        out = {
            "g": metric_tensor(st, b),
            "g_tilde": tilde_metric_tensor(st, beta_dot_from_mu_dot(st, b)),
            "lambda2": float(report.eigenvalues[1]) if report.eigenvalues.size > 1 else 0.0,
            "q_bound": report.q_bound,
            "residual": st.residual,
        }
    else:
        lower, upper = ds_bounds(mu, nu)
        out = {"lower": lower, "upper": upper, "beta_distance": beta_distance(mu, nu)}
    _emit(dumps(out) + "\n", o.get("out"))
    return EXIT_OK


def _cmd_geodesic(cfg: RunConfig) -> int:
    from .geodesics import solve_geodesic
    from .io import dumps

    o = cfg.options
    mu0, mu1 = _load_pair(o, "mu0", "mu1")
    res = solve_geodesic(mu0, mu1, n_steps=o["steps"], mode=o["mode"], rel_tol=o["rel_tol"],
                         max_iter=o["max_iter"], init=o["init"], method=o["method"], strict=o["strict"])
    path = res.path
    out = {
        "mode": path.mode,
        "epsilon": path.space.epsilon,
        "times": list(path.times),
        "weights": [list(m.weights) for m in path.steps],
        "chain_value": res.chain_value,
        "ds_estimate": res.ds_estimate,
        "energy": res.energy,
        "energy_scheme": res.energy_scheme,
        "discrepancy": res.discrepancy,
        "flagged": res.flagged,
        "lower_bound": res.lower_bound,
        "upper_bound": res.upper_bound,
        "iterations": res.iterations,
        "converged": res.converged,
    }
    if path.mode == "vertical" and path.space.points is not None:
        out["points"] = [list(p) for p in path.space.points]
    elif path.mode == "particle":
        out["points"] = [[list(p) for p in m.space.points] for m in path.steps]
    _emit(dumps(out) + "\n", o.get("out"))
    return EXIT_OK


def _cmd_bridge(cfg: RunConfig) -> int:
    import numpy as np

    from .core import point_measure
    from .geodesics import bridge_marginal
    from .io import write_csv

    o = cfg.options
    eps = o.get("epsilon")
    if o.get("mu0") and o.get("mu1"):
        mu0, mu1 = _load_pair(o, "mu0", "mu1", default_eps=None if o.get("space") else 1.0)
    else:
        if o.get("mu0") or o.get("mu1"):
            raise InputError("give both --mu0 and --mu1, or neither")
        eps = 1.0 if eps is None else eps
        mu0 = point_measure([[0.0]], [1.0], epsilon=eps)
        mu1 = mu0
    lo, hi, n = o["grid"]
    xs = np.linspace(lo, hi, n)
    dens = bridge_marginal(mu0, mu1, o["t"], xs)
    buf = io.StringIO()
    write_csv(buf, ["x", "density"], zip(xs, dens), {"t": o["t"], "eps": mu0.space.epsilon})
    _emit(buf.getvalue(), o.get("out"))
    return EXIT_OK


def _cmd_figures(cfg: RunConfig) -> int:
    from .figures import BUILDERS
    from .io import write_csv

    o = cfg.options
    os.makedirs(o["out"], exist_ok=True)
    eps = o.get("eps")
    builder = BUILDERS[cfg.target]
    if eps is None:
        tables = builder()
    elif cfg.target == "nonconvexity":
        tables = builder(eps_values=tuple(eps))
    else:
        if len(eps) != 1:
            raise InputError(f"figures {cfg.target} takes a single --eps")
        tables = builder(eps=eps[0])
    for stem, table in tables.items():
        path = os.path.join(o["out"], f"{stem}.csv")
        write_csv(path, table.columns, table.rows, table.params)
        print(path)
    return EXIT_OK


def _cmd_validate(cfg: RunConfig) -> int:
    from .io import dumps
    from .validation import ACCEPTANCE, run_suite

    o = cfg.options
    if o["suite"] == "acceptance":
        checks = [c for _, fn in ACCEPTANCE.values() for c in fn()]
    else:
        checks = run_suite(o["suite"], o["seed"])
    failures = [c for c in checks if not c.passed]
    report = {
        "suite": o["suite"],
        "seed": o["seed"],
        "passed": len(checks) - len(failures),
        "failed": len(failures),
        "checks": [c.as_dict() for c in checks],
        "failures": [c.as_dict() for c in failures],
    }
    text = dumps(report) + "\n"
    if o["format"] == "json":
        sys.stdout.write(text)
    else:
        for c in checks:
            print(c.line())
        print(f"{report['passed']} passed, {report['failed']} failed")
        if failures:
            sys.stderr.write(dumps({"failures": report["failures"]}) + "\n")
    if o.get("report"):
        _emit(text, o["report"])
    return EXIT_VALIDATION if failures else EXIT_OK


COMMANDS = {
    "compute": _cmd_compute,
    "geodesic": _cmd_geodesic,
    "bridge": _cmd_bridge,
    "figures": _cmd_figures,
    "validate": _cmd_validate,
}


def run(cfg: RunConfig) -> int:
    """Execute a parsed command and map failures to exit codes."""
    from .io import ParseError

    try:
        return COMMANDS[cfg.command](cfg)
    except ParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except InputError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_PARSE
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except OSError as exc:
        log.error("i/o error: %s", exc)
        return EXIT_IO


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(_join_negative_values(argv))
    _configure_logging(args.quiet, args.json)
    try:
        _configure_threads()
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
