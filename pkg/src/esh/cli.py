"""Command line front end: ``python -m esh <command> ...``.

Every bound-producing command writes rows with the columns of
:data:`COLUMNS`; ``--format json`` emits the same rows as a JSON list.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import graphs
from .graphs import Graph, GraphFormatError
from .hierarchy import (CESH, ESH, FORMULATIONS, HierarchyError, SearchConfig, compare_formulations,
                        compute_bound, compute_level, cutting_plane_search)
from .model import ModelError, all_subsets
from .polytopes import facets_stab2_empty
from .solver import SolverError, SolverSettings
from .stable_sets import ResourceLimitError, alpha_bruteforce

COLUMNS = ("name", "n", "m", "formulation", "k_or_J", "bound", "alpha", "solve_s", "iters", "status")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2

log = logging.getLogger("esh")


class UsageError(Exception):
    pass


# --- graph specs -------------------------------------------------------------------

def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def parse_spec(spec: str) -> Graph:
    """Build a graph from a generator spec or a DIMACS/JSON file path."""
    head, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    try:
        if head == "paley":
            return graphs.paley(int(args[0]))
        if head == "er":
            n, p, seed = int(args[0]), float(args[1]), int(args[2])
            return graphs.erdos_renyi(n, p, seed)
        if head in ("hamming64", "hamming6_4"):
            return graphs.hamming_complement_6_4()
        if head == "hamming6-4":
            return graphs.hamming6_4_dimacs()
        if head == "circulant":
            return graphs.circulant(int(args[0]), _ints(args[1]))
        if head in ("cycle", "path", "complete", "empty"):
            make = {"cycle": graphs.cycle_graph, "path": graphs.path_graph,
                    "complete": graphs.complete_graph, "empty": graphs.empty_graph}[head]
            return make(int(args[0]))
        if head == "complement":
            return graphs.complement(read_graph(rest))
    except (IndexError, ValueError) as exc:
        raise UsageError(f"bad generator spec {spec!r}: {exc}") from None
    path = Path(spec)
    if path.exists():
        return read_graph(spec)
    raise UsageError(f"unknown generator or missing file {spec!r}")


def read_graph(path: str) -> Graph:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file: {path}")
    try:
        if p.suffix == ".json":
            return graphs.from_json(p.read_text())
        return graphs.read_dimacs(p)
    except GraphFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def parse_subsets(text: str) -> list[tuple[int, ...]]:
    """``"1,2,3;4,5"`` -> ``[(1, 2, 3), (4, 5)]``."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            try:
                out.append(tuple(_ints(chunk)))
            except ValueError:
                raise UsageError(f"bad subset {chunk!r}") from None
    return out


# --- output ------------------------------------------------------------------------

@dataclass
class Output:
    fmt: str
    no_time: bool
    rows: list[dict] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)
    failed: bool = False

    def add(self, g: Graph, formulation: str, k_or_j: str, bound: float | None,
            alpha: int | None, seconds: float, iters: int | str, status: str) -> None:
        self.rows.append({
            "name": g.name, "n": g.n, "m": g.m, "formulation": formulation, "k_or_J": k_or_j,
            "bound": "" if bound is None else f"{bound:.8f}",
            "alpha": "" if alpha is None else alpha,
            "solve_s": f"{0.0 if self.no_time else seconds:.3f}",
            "iters": iters, "status": status,
        })
        if status not in ("optimal", "ok"):
            self.failed = True

    def render(self) -> str:
        if self.fmt == "json":
            return json.dumps({"rows": self.rows, "notes": self.lines}, indent=2) + "\n"
        if self.fmt == "pretty":
            cols = COLUMNS
            table = [cols] + [tuple(str(r[c]) for c in cols) for r in self.rows]
            widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
            text = "\n".join("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip()
                             for row in table)
            return text + "\n" + "".join(f"# {ln}\n" for ln in self.lines)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue() + "".join(f"# {ln}\n" for ln in self.lines)


# --- commands ----------------------------------------------------------------------

def _alpha(g: Graph, args) -> int | None:
    if not args.alpha:
        return None
    try:
        return alpha_bruteforce(g, time_limit=args.alpha_time)
    except ResourceLimitError as exc:
        log.warning("%s", exc)
        return None


def _settings(args) -> SolverSettings:
    return SolverSettings(tol_gap=args.tol_gap, tol_feas=args.tol_feas, max_iter=args.max_iter)


def cmd_theta(g: Graph, args, out: Output) -> None:
    a = _alpha(g, args)
    reps = [compute_bound(g, f, settings=_settings(args)) for f in (ESH, CESH)]
    for r, label in zip(reps, ("Tn+1", "Tn")):
        out.add(g, label, "theta", r.bound, a, r.seconds, r.iterations, r.status)
    diff = abs(reps[0].bound - reps[1].bound)
    out.lines.append(f"{g.name}: theta formulations differ by {diff:.2e}")
    if diff > 1e-5:
        out.lines.append(f"{g.name}: WARNING formulations disagree beyond 1e-5")
        out.failed = True


def _selection(g: Graph, args) -> tuple[list[tuple[int, ...]], str]:
    if args.subsets:
        subs = parse_subsets(args.subsets)
        return subs, f"J={len(subs)}"
    if args.k is None:
        raise UsageError("give --k with --all-subsets, --random-subsets N, or --subsets")
    if args.random_subsets:
        rng = np.random.default_rng(args.seed)
        subs = [tuple(sorted(int(v) + 1 for v in rng.choice(g.n, size=args.k, replace=False)))
                for _ in range(args.random_subsets)]
        return subs, f"k={args.k};random={args.random_subsets}"
    if args.all_subsets:
        if math.comb(g.n, args.k) > args.cap:
            raise UsageError(f"C({g.n},{args.k}) exceeds --cap {args.cap}; use the search command")
        return all_subsets(g.n, args.k), f"k={args.k};all"
    raise UsageError("choose --all-subsets, --random-subsets N or --subsets")


def cmd_bound(g: Graph, args, out: Output) -> None:
    subs, label = _selection(g, args)
    a = _alpha(g, args)
    for f in args.formulation:
        r = compute_bound(g, f, subs, mode=args.mode, settings=_settings(args))
        out.add(g, f, label, r.bound, a, r.seconds, r.iterations, r.status)


def cmd_level(g: Graph, args, out: Output) -> None:
    a = _alpha(g, args)
    levels = range(args.k, args.k + 1) if args.k is not None else range(0, (args.max_k or g.n) + 1)
    for f in args.formulation:
        for k in levels:
            r = compute_level(g, f, k, mode=args.mode, cap=args.cap, settings=_settings(args))
            out.add(g, f, f"k={k}", r.bound, a, r.seconds, r.iterations, r.status)


def cmd_search(g: Graph, args, out: Output) -> None:
    if args.k is None:
        raise UsageError("search needs --k")
    a = _alpha(g, args)
    cfg = SearchConfig(k=args.k, rounds=args.rounds, max_per_round=args.max_per_round,
                       candidate_budget=args.budget, tol_viol=args.tol_viol, seed=args.seed,
                       mode=args.mode)
    for f in args.formulation:
        _, rep = cutting_plane_search(g, f, cfg, settings=_settings(args))
        for t in rep.trajectory:
            status = rep.status if t is rep.trajectory[-1] else "optimal"
            out.add(g, f, f"k={args.k};round={t.round};escs={t.escs_total}", t.bound, a,
                    t.solve_seconds, rep.iterations if t is rep.trajectory[-1] else "", status)
        out.lines.append(f"{g.name} {f}: {rep.note}")
        if args.trajectory:
            text = rep.trajectory_csv()
            if args.no_time:
                text = _zero_last_column(text)
            Path(args.trajectory).write_text(text)


def _zero_last_column(text: str) -> str:
    lines = text.splitlines()
    out = [lines[0]] + [ln.rsplit(",", 1)[0] + ",0.000" for ln in lines[1:]]
    return "\n".join(out) + "\n"


def cmd_compare(g: Graph, args, out: Output) -> None:
    subs, label = _selection(g, args)
    a = _alpha(g, args)
    t0 = time.perf_counter()
    c = compare_formulations(g, subs, settings=_settings(args))
    seconds = time.perf_counter() - t0
    for f, val, st in zip(FORMULATIONS, (c.esh, c.cesh, c.sesh), c.statuses):
        out.add(g, f, label, val, a, seconds / 3, "", st)
    if c.ok:
        out.lines.append(f"{g.name}: ESH <= CESH = SESH holds")
    else:
        out.lines.extend(f"{g.name}: {v}" for v in c.violations)
        out.failed = True


def cmd_alpha(g: Graph, args, out: Output) -> None:
    t0 = time.perf_counter()
    try:
        a = alpha_bruteforce(g, time_limit=args.alpha_time)
        status = "ok"
    except ResourceLimitError as exc:
        a, status = None, "time_limit"
        out.lines.append(str(exc))
    out.add(g, "exact", "alpha", None if a is None else float(a), a,
            time.perf_counter() - t0, "", status)


def cmd_facets(args) -> int:
    ks = [args.k] if args.k is not None else [2, 3, 4, 5]
    rows = []
    for k in ks:
        t0 = time.perf_counter()
        try:
            fs = facets_stab2_empty(k, allow_long=args.allow_long)
        except ResourceLimitError as exc:
            raise UsageError(str(exc)) from None
        seconds = 0.0 if args.no_time else time.perf_counter() - t0
        rows.append({"k": k, "facets": len(fs), "seconds": f"{seconds:.3f}"})
        if args.ieq:
            path = Path(args.ieq.replace("{k}", str(k)))
            fs.write_ieq(path)
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    elif args.format == "pretty":
        text = "".join(f"k={r['k']}: {r['facets']} facets\n" for r in rows)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=("k", "facets", "seconds"), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


COMMANDS = {"theta": cmd_theta, "bound": cmd_bound, "level": cmd_level, "search": cmd_search,
            "compare": cmd_compare, "alpha": cmd_alpha}


# --- argument parsing --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _formulations(text: str) -> list[str]:
    out = [f.strip().upper() for f in text.split(",") if f.strip()]
    for f in out:
        if f not in FORMULATIONS:
            raise argparse.ArgumentTypeError(f"unknown formulation {f}")
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json", "pretty"), default="csv")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--no-time", action="store_true", help="report zero timings")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    inputs = argparse.ArgumentParser(add_help=False)
    src = inputs.add_mutually_exclusive_group(required=True)
    src.add_argument("--gen", help="generator spec, e.g. paley:61, er:60:0.25:1, hamming64")
    src.add_argument("--file", help="DIMACS or JSON graph file")
    src.add_argument("--batch", help="file with one spec or path per line")
    inputs.add_argument("--alpha", action="store_true", help="also compute alpha exactly")
    inputs.add_argument("--alpha-time", type=float, default=600.0)
    inputs.add_argument("--tol-gap", type=float, default=1e-7)
    inputs.add_argument("--tol-feas", type=float, default=1e-7)
    inputs.add_argument("--max-iter", type=int, default=200)

    sel = argparse.ArgumentParser(add_help=False)
    sel.add_argument("--formulation", type=_formulations, default=[ESH],
                     help="comma separated subset of ESH,CESH,SESH")
    sel.add_argument("--k", type=int)
    sel.add_argument("--mode", choices=("lambda", "facets"), default="lambda")
    sel.add_argument("--cap", type=int, default=200_000)

    subsets = argparse.ArgumentParser(add_help=False)
    subsets.add_argument("--all-subsets", action="store_true")
    subsets.add_argument("--random-subsets", type=int, default=0, metavar="N")
    subsets.add_argument("--subsets", help='explicit subsets, e.g. "1,2,3;4,5"')

    parser = _Parser(prog="esh", description="Stability number bounds from subgraph hierarchies.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("theta", parents=[common, inputs], help="theta in both formulations")
    sub.add_parser("bound", parents=[common, inputs, sel, subsets], help="bound for a subgraph selection")
    lv = sub.add_parser("level", parents=[common, inputs, sel], help="hierarchy levels")
    lv.add_argument("--max-k", type=int, help="levels 0..max-k when --k is absent")
    sp = sub.add_parser("search", parents=[common, inputs, sel], help="violated-subgraph search")
    sp.add_argument("--rounds", type=int, default=10)
    sp.add_argument("--max-per-round", type=int, default=200)
    sp.add_argument("--budget", type=int, help="random candidates per round (default 50 n)")
    sp.add_argument("--tol-viol", type=float, default=1e-4)
    sp.add_argument("--trajectory", help="write the per-round trajectory CSV here")
    cp = sub.add_parser("compare", parents=[common, inputs, subsets], help="ESH vs CESH vs SESH")
    cp.add_argument("--k", type=int)
    cp.add_argument("--cap", type=int, default=200_000)
    sub.add_parser("alpha", parents=[common, inputs], help="exact stability number")
    fp = sub.add_parser("facets", parents=[common], help="facets of the squared stable set polytope")
    fp.add_argument("--k", type=int, choices=range(2, 7), metavar="{2..6}")
    fp.add_argument("--allow-long", action="store_true", help="permit k=6")
    fp.add_argument("--ieq", help="write each system as .ieq; '{k}' in the path is replaced")
    return parser


def _graphs(args) -> list[Graph]:
    if args.gen:
        return [parse_spec(args.gen)]
    if args.file:
        return [read_graph(args.file)]
    lines = Path(args.batch).read_text().splitlines() if Path(args.batch).exists() else None
    if lines is None:
        raise UsageError(f"no such batch file: {args.batch}")
    return [parse_spec(ln.strip()) for ln in lines if ln.strip() and not ln.startswith("#")]


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "facets":
            return cmd_facets(args)
        out = Output(args.format, args.no_time)
        for g in _graphs(args):
            COMMANDS[args.command](g, args, out)
        _emit(out.render(), args.out)
        return EXIT_SOLVER if out.failed else EXIT_OK
    except (UsageError, ModelError, HierarchyError, ValueError) as exc:
        print(f"esh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"esh: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
