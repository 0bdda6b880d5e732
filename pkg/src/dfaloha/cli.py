"""Command-line front end: tables as CSV/JSON and the verification report.

Exit codes: 0 success, 1 usage error, 2 failed check or optimality
violation, 3 divergent policy or simulation cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass

import gmpy2
from gmpy2 import mpfr

from . import __version__
from .checks import REGISTRY, UnknownCheck, run_checks
from .framedist import DomainError, success_pmf
from .numeric import Mode, decimal_str, json_value, zeta_const
from .policy import (
    DivergenceError,
    FramePolicy,
    asymptote_rows,
    error_series,
    ip_length,
    optimal_search,
    zeta_4dp,
)
from .sim import DEFAULT_MAX_SLOTS, CapExceeded, SimConfig, simulate_ip

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK = 2
EXIT_DIVERGENCE = 3

DEFAULT_N_MAX = {"exact": 300, "float": 2000}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    r: int | None = None
    n_max: int | None = None
    scan: int = 3
    policy: str = "backlog-equal"
    mode: str = "exact"
    trials: int = 1000
    seed: int = 0
    max_slots: int = DEFAULT_MAX_SLOTS
    workers: int = 1
    out: str | None = None
    format: str = "csv"
    checks: str = "all"
    per_trial: str | None = None

    def validate(self) -> None:
        needs_n = {"dist", "simulate"}
        if self.command in needs_n and self.n is None:
            raise UsageError(f"{self.command} requires --n")
        if self.n is not None and self.n < 0:
            raise UsageError("--n must be >= 0")
        if self.r is not None and self.r < 1:
            raise UsageError("--r must be >= 1")
        if self.n_max is not None and self.n_max < 1:
            raise UsageError("--n-max must be >= 1")
        if self.command == "optimize" and self.n_max is not None and self.n_max < 2:
            raise UsageError("optimize needs --n-max >= 2")
        if self.command == "asymptote" and self.n_max is not None and self.n_max < 100:
            raise UsageError("asymptote needs --n-max >= 100")
        if self.command != "simulate" and self.per_trial:
            raise UsageError("--per-trial only applies to simulate")
        if self.trials < 1:
            raise UsageError("--trials must be >= 1")


@dataclass
class Table:
    columns: list[str]
    rows: list[list]
    meta: dict
    document: dict | None = None

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_csv_cell(v) for v in row])
        return buf.getvalue()

    def json_text(self) -> str:
        if self.document is not None:
            return json.dumps(self.document, indent=2) + "\n"
        doc = dict(self.meta)
        doc["columns"] = self.columns
        doc["rows"] = [{c: json_value(v) for c, v in zip(self.columns, row)} for row in self.rows]
        return json.dumps(doc, indent=2) + "\n"


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return decimal_str(value)


def _mode(cfg: RunConfig) -> Mode:
    try:
        return Mode.parse(cfg.mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _policy(cfg: RunConfig) -> FramePolicy:
    try:
        return FramePolicy.parse(cfg.policy)
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad --policy: {exc}") from exc


def _n_max(cfg: RunConfig, mode: Mode) -> int:
    if cfg.n_max is not None:
        return cfg.n_max
    return DEFAULT_N_MAX["exact" if mode.exact else "float"]


def _meta(cfg: RunConfig) -> dict:
    return {"version": __version__, "command": cfg.command, "config": _config_dict(cfg)}


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d.pop("out")
    return d


# -- commands ---------------------------------------------------------------


def cmd_dist(cfg: RunConfig) -> tuple[Table, int]:
    mode = _mode(cfg)
    n = cfg.n
    r = cfg.r if cfg.r is not None else max(n, 1)
    pmf = success_pmf(n, r, mode)
    back = pmf.reversed(n)
    rows = []
    with mode.context():
        cum = mode.convert(0)
        for i in pmf.support:
            cum += pmf[i]
            rows.append([i, pmf[i], back[n - i], cum])
    return Table(["i", "p", "pi_n_minus_i", "cumulative"], rows, _meta(cfg)), EXIT_OK


def _length_rows(table, mode: Mode) -> list[list]:
    rows = []
    with gmpy2.context(gmpy2.get_context(), precision=mode.precision):
        e = gmpy2.exp(1)
        prev = mpfr(0)
        for n in range(1, table.n_max + 1):
            L = table.L[n]
            eps = n * e - mpfr(L)
            rows.append([n, table.frame_lengths[n], L, n / L, eps, eps - prev])
            prev = eps
    return rows


def cmd_length(cfg: RunConfig) -> tuple[Table, int]:
    mode = _mode(cfg)
    pol = _policy(cfg)
    n_max = _n_max(cfg, mode)
    columns = ["n", "r", "L", "efficiency", "epsilon", "delta_epsilon"]
    meta = _meta(cfg)
    try:
        table = ip_length(n_max, pol, mode)
    except DivergenceError as exc:
        rows = _length_rows(ip_length(exc.n - 1, pol, mode), mode) if exc.n > 1 else []
        rows.append([exc.n, exc.r, "diverged", None, None, None])
        meta["error"] = str(exc)
        return Table(columns, rows, meta), EXIT_DIVERGENCE
    except (KeyError, DomainError) as exc:
        raise UsageError(f"policy cannot be evaluated: {exc}") from exc
    return Table(columns, _length_rows(table, mode), meta), EXIT_OK


def cmd_optimize(cfg: RunConfig) -> tuple[Table, int]:
    mode = _mode(cfg)
    n_max = cfg.n_max if cfg.n_max is not None else 50
    table = optimal_search(n_max, scan_factor=cfg.scan, mode=mode, strict=False)
    rows = [
        [n, table.argmin_r[n], table.L[n], table.runner_up_r[n], table.gap[n]]
        for n in range(2, n_max + 1)
    ]
    meta = _meta(cfg)
    meta["tail_closed"] = table.info["tail_closed"]
    meta["violations"] = [str(v) for v in table.info["violations"]]
    failed = table.info["violations"] or not table.info["tail_closed"]
    return Table(["n", "argmin_r", "L", "runner_up_r", "gap"], rows, meta), EXIT_CHECK if failed else EXIT_OK


def cmd_verify(cfg: RunConfig) -> tuple[Table, int]:
    mode = _mode(cfg)
    n_max = cfg.n_max if cfg.n_max is not None else _n_max(cfg, mode)
    try:
        report = run_checks(cfg.checks, n_max, mode)
    except UnknownCheck as exc:
        raise UsageError(f"{exc.args[0]}; known: {', '.join(sorted(REGISTRY))}") from exc
    for line in report.lines():
        print(line, file=sys.stderr)
    doc = report.to_dict()
    rows = []
    for c in doc["checks"]:
        lo, hi = c["range"] if c["range"] else (None, None)
        rows.append([c["name"], _scalar(lo), _scalar(hi), c["pass"], c["rows"], c["rows_failed"], c["margin_min"]])
    table = Table(["name", "range_lo", "range_hi", "pass", "rows", "rows_failed", "margin_min"], rows, doc, doc)
    return table, EXIT_OK if report.overall_pass else EXIT_CHECK


def _scalar(v):
    return v if v is None or isinstance(v, (int, str)) else str(v)


def cmd_simulate(cfg: RunConfig) -> tuple[Table, int]:
    pol = _policy(cfg)
    sim_cfg = SimConfig(cfg.n, pol, cfg.trials, cfg.seed, max(cfg.max_slots, cfg.n), cfg.workers)
    columns = ["n", "policy", "trials", "seed", "mean", "variance", "se", "ci99_half_width", "exact_L", "z"]
    meta = _meta(cfg)
    try:
        out = simulate_ip(sim_cfg)
    except CapExceeded as exc:
        meta["error"] = str(exc)
        print(f"error: {exc}", file=sys.stderr)
        return Table(columns, [], meta), EXIT_DIVERGENCE
    exact = None
    z = None
    if cfg.n >= 1:
        try:
            exact = ip_length(cfg.n, pol, Mode.parse("exact" if cfg.n <= 300 else "float")).L[cfg.n]
        except (DivergenceError, KeyError):
            exact = None
    if exact is not None and out.se > 0:
        z = (out.mean - float(exact)) / out.se
    row = [cfg.n, str(pol), cfg.trials, cfg.seed, out.mean, out.variance, out.se, out.half_width, exact, z]
    if cfg.per_trial:
        with open(cfg.per_trial, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "slots"])
            for i, s in enumerate(out.slot_counts):
                w.writerow([i, int(s)])
    return Table(columns, [row], meta), EXIT_OK


def cmd_asymptote(cfg: RunConfig) -> tuple[Table, int]:
    mode = Mode.parse(cfg.mode) if cfg.mode != "exact" else Mode.parse("float")
    n_max = cfg.n_max if cfg.n_max is not None else 2000
    series = error_series(ip_length(n_max, mode=mode))
    rows = [
        [r["n"], r["epsilon"], r["zeta_ln_n"], r["ratio"], r["lower_envelope"], r["upper_envelope"]]
        for r in asymptote_rows(series)
    ]
    meta = _meta(cfg)
    with gmpy2.context(gmpy2.get_context(), precision=mode.precision):
        meta["constants"] = {"zeta": json_value(zeta_const()), "zeta_4dp": zeta_4dp()}
    print(f"zeta = {zeta_4dp()}", file=sys.stderr)
    return Table(["n", "epsilon", "zeta_ln_n", "ratio", "lower_envelope", "upper_envelope"], rows, meta), EXIT_OK


COMMANDS = {
    "dist": cmd_dist,
    "length": cmd_length,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "asymptote": cmd_asymptote,
}


# -- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dfaloha", description="Dynamic-Frame Aloha tables and checks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mode_default="exact"):
        p.add_argument("--mode", default=mode_default, help="exact | float | float:BITS")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("dist", help="success distribution of one frame")
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    common(p)

    p = sub.add_parser("length", help="mean identification-period lengths")
    p.add_argument("--n-max", type=int)
    p.add_argument("--policy", default="backlog-equal")
    common(p)

    p = sub.add_parser("optimize", help="exhaustive per-level frame search")
    p.add_argument("--n-max", type=int)
    p.add_argument("--scan", type=int, default=3, help="scan r in 1..SCAN*n")
    common(p)

    p = sub.add_parser("verify", help="run inequality checks")
    p.add_argument("--n-max", type=int)
    p.add_argument("--checks", default="all", help="comma-separated names or 'all'")
    common(p)

    p = sub.add_parser("simulate", help="Monte Carlo identification periods")
    p.add_argument("--n", type=int)
    p.add_argument("--policy", default="backlog-equal")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-slots", type=int, default=DEFAULT_MAX_SLOTS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--per-trial", help="also write per-trial slot counts (csv)")
    common(p)

    p = sub.add_parser("asymptote", help="error against the log asymptote")
    p.add_argument("--n-max", type=int)
    common(p, mode_default="float")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help/--version and on bad arguments
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__ and v is not None}
    cfg = RunConfig(**fields)
    try:
        cfg.validate()
        table, code = COMMANDS[cfg.command](cfg)
    except (UsageError, DomainError) as exc:
        parser.print_usage(sys.stderr)
        print(f"dfaloha: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"dfaloha: error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    text = table.csv_text() if cfg.format == "csv" else table.json_text()
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code
