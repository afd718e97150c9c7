"""Command-line interface.

Exit codes: 0 success, 1 validation error (bad input, missing file, bad
flags), 2 numerical failure. Every JSON document carries ``"schema": 1`` and
prints floats with 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import curvature, graph, heat, inequalities
from .errors import NumericalError, ValidationError

SCHEMA = 1


# ---------------------------------------------------------------- formatting


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj: Any, indent: int = 1, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return fmt_float(v).strip('"')
    return v


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(rows[0].keys())
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row.values()])
    return buf.getvalue()


# ---------------------------------------------------------------- argument helpers


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def parse_dim(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        n = float(text)
    except ValueError:
        raise ValidationError(f"bad dimension {text!r}") from None
    if not n > 0:
        raise ValidationError("dimension must be positive")
    return n


def parse_times(args) -> list[float]:
    if getattr(args, "t_range", None):
        try:
            start, stop, count = args.t_range.split(":")
            ts = np.geomspace(float(start), float(stop), int(count)).tolist()
        except ValueError:
            raise ValidationError("--t-range expects start:stop:count") from None
    elif args.t:
        try:
            ts = [float(v) for v in args.t.split(",") if v.strip()]
        except ValueError:
            raise ValidationError(f"bad time list {args.t!r}") from None
    else:
        raise ValidationError("give --t or --t-range")
    if not ts or min(ts) <= 0:
        raise ValidationError("times must be positive")
    return ts


def parse_threads(value: str | None) -> int:
    raw = value if value is not None else os.environ.get("CDFORGE_THREADS", "1")
    if raw.upper() == "AUTO":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"bad thread count {raw!r}") from None
    if n < 1:
        raise ValidationError("thread count must be >= 1")
    return n


def read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"file not found: {path}")
    return p.read_text()


def load_graph(path: str) -> graph.WeightedGraph:
    return graph.parse_graph(read_text(path))


def load_function(path: str | None, g: graph.WeightedGraph, seed: int) -> np.ndarray:
    """Field from a JSON file, or a seeded random positive field when no file is given."""
    if path is None:
        return np.random.default_rng(seed).uniform(0.5, 2.0, len(g))
    return graph.as_array(g, graph.parse_field(read_text(path)))


def vertex_list(g: graph.WeightedGraph, args) -> list[str] | None:
    if getattr(args, "all", False) or not getattr(args, "vertex", None):
        return None
    names = [v for v in args.vertex.split(",") if v]
    for v in names:
        g.index(v)
    return names


# ---------------------------------------------------------------- subcommands


def cmd_info(args) -> dict:
    g = load_graph(args.graph)
    return {"schema": SCHEMA, "command": "info", **graph.graph_stats(g)}


def cmd_generate(args) -> str:
    g = graph.generate(args.family, n=args.n, dim=args.dim, radius=args.radius,
                       omega=args.omega, mu=args.mu)
    return graph.dump_graph(g) + "\n"


def cmd_curvature(args) -> tuple[dict, list[dict]]:
    g = load_graph(args.graph)
    n = parse_dim(args.dim)
    threads = parse_threads(args.threads)
    verts = vertex_list(g, args)
    if args.kind == "cd":
        results = curvature.curvature_all(g, curvature.cd_max_k, verts, threads, n=n)
    else:
        results = curvature.curvature_all(g, curvature.cde_search_k, verts, threads, n=n,
                                          starts=args.starts, seed=args.seed, max_iter=args.max_iter)
        if not all(r.converged for r in results):
            bad = [r.vertex for r in results if not r.converged]
            raise NumericalError(f"optimizer hit max_iter at vertices {bad}")
    rows = [r.to_record() for r in results]
    doc = {"schema": SCHEMA, "command": f"curvature {args.kind}", "n": n, "results": rows,
           "min_k": min(r.k_max for r in results)}
    return doc, rows


def cmd_heat_kernel(args) -> tuple[dict, list[dict]]:
    g = load_graph(args.graph)
    ts = parse_times(args)
    xs = args.x.split(",")
    ys = args.y.split(",")
    rows, diags = [], []
    for t in ts:
        for x in xs:
            for y in ys:
                if args.exhaust:
                    try:
                        r0, r1 = (int(v) for v in args.exhaust.split(":"))
                    except ValueError:
                        raise ValidationError("--exhaust expects r0:r1") from None
                    plan = graph.ExhaustionPlan(args.center, tuple(range(r0, r1 + 1)))
                    kv, d = heat.exhaustion_kernel(g, plan, t, x, y, tol=args.tol)
                    diags.append({"t": t, "x": x, "y": y, **d})
                elif args.radius is not None:
                    kv = heat.heat_kernel(g, graph.ball(g, args.center, args.radius), t, x, y,
                                          radius=args.radius)
                else:
                    kv = heat.heat_kernel(g, None, t, x, y)
                rows.append({"t": kv.t, "x": kv.x, "y": kv.y, "value": kv.value,
                             "radius": kv.subset_radius})
    doc = {"schema": SCHEMA, "command": "heat kernel", "kernel": rows}
    if diags:
        doc["diagnostics"] = diags
    return doc, rows


def cmd_heat_apply(args) -> tuple[dict, list[dict]]:
    g = load_graph(args.graph)
    f = load_function(args.function, g, args.seed)
    U = graph.ball(g, args.center, args.radius) if args.radius is not None else None
    out, rows = [], []
    for t in parse_times(args):
        field = heat.apply_semigroup(g, U, t, f)
        out.append({"t": t, "values": field.values})
        rows += [{"t": t, "vertex": v, "value": val} for v, val in field.values.items()]
    return {"schema": SCHEMA, "command": "heat apply", "results": out}, rows


def _auto_kappa(args, g, n, threads) -> float:
    if args.kappa != "auto":
        try:
            return float(args.kappa)
        except ValueError:
            raise ValidationError(f"bad --kappa {args.kappa!r}") from None
    if args.which == "thm31":
        res = curvature.curvature_all(g, curvature.cd_max_k, None, threads, n=n)
    else:
        res = curvature.curvature_all(g, curvature.cde_search_k, None, threads, n=math.inf,
                                      seed=args.seed)
    return min(r.k_max for r in res)


def cmd_verify(args) -> tuple[dict, list[dict]]:
    g = load_graph(args.graph)
    threads = parse_threads(args.threads)
    if args.which == "semigroup":
        f = load_function(args.function, g, args.seed)
        diag = heat.semigroup_diagnostics(g, t=args.t_single, s=args.s_single, f=f)
        return {"schema": SCHEMA, "command": "verify semigroup", "t": args.t_single,
                "s": args.s_single, "residuals": diag}, [diag]
    f = load_function(args.function, g, args.seed)
    if args.which == "lemma32":
        try:
            s_grid = [float(v) for v in args.s.split(",")]
        except ValueError:
            raise ValidationError(f"bad --s list {args.s!r}") from None
        err = inequalities.lemma32_derivative_check(g, f, args.t_single, s_grid)
        row = {"t": args.t_single, "max_rel_error": err}
        return {"schema": SCHEMA, "command": "verify lemma32", "s": s_grid, **row}, [row]
    ts = parse_times(args)
    verts = vertex_list(g, args)
    if args.which == "thm31":
        n = parse_dim(args.dim)
        kappa = _auto_kappa(args, g, n, threads)
        reports = inequalities.verify_thm31(g, f, n, kappa, ts, verts)
    else:
        n = math.inf
        kappa = _auto_kappa(args, g, n, threads)
        reports = inequalities.verify_thm32(g, f, kappa, ts, verts)
    rows = [r.to_record() for r in reports]
    doc = {"schema": SCHEMA, "command": f"verify {args.which}", "n": n, "kappa": kappa,
           "reports": rows, "summary": inequalities.summarize(reports)}
    return doc, rows


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cdforge", description="Curvature-dimension tools for weighted graphs.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common_out(sp, formats=("json",)):
        sp.add_argument("--out", help="write to this path instead of stdout")
        sp.add_argument("--format", choices=formats, default=formats[0])

    def times(sp):
        grp = sp.add_mutually_exclusive_group()
        grp.add_argument("--t", help="comma-separated times")
        grp.add_argument("--t-range", help="start:stop:count, geometric spacing")

    def vertices(sp):
        grp = sp.add_mutually_exclusive_group()
        grp.add_argument("--vertex", help="vertex id (comma-separated for several)")
        grp.add_argument("--all", action="store_true", help="every vertex (default)")

    sp = sub.add_parser("info", help="graph statistics")
    sp.add_argument("graph")
    common_out(sp)

    sp = sub.add_parser("generate", help="write a standard graph")
    sp.add_argument("family", choices=graph.FAMILIES)
    sp.add_argument("--n", type=int)
    sp.add_argument("--dim", type=int)
    sp.add_argument("--radius", type=int)
    sp.add_argument("--omega", type=float, default=1.0)
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--out")

    cp = sub.add_parser("curvature", help="optimal curvature constants")
    csub = cp.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for kind in ("cd", "cde"):
        sp = csub.add_parser(kind)
        sp.add_argument("--graph", required=True)
        sp.add_argument("--dim", default="inf")
        sp.add_argument("--threads")
        vertices(sp)
        common_out(sp, ("json", "csv"))
        if kind == "cde":
            sp.add_argument("--starts", type=int, default=16)
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--max-iter", type=int, default=2000)

    hp = sub.add_parser("heat", help="heat kernels and the heat semigroup")
    hsub = hp.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    sp = hsub.add_parser("kernel")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--center")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--radius", type=int, help="Dirichlet ball about --center")
    grp.add_argument("--exhaust", help="r0:r1, exhaust by balls about --center")
    sp.add_argument("--tol", type=float, default=1e-8)
    times(sp)
    common_out(sp, ("csv", "json"))
    sp = hsub.add_parser("apply")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--function")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--center")
    sp.add_argument("--radius", type=int)
    times(sp)
    common_out(sp, ("json", "csv"))

    vp = sub.add_parser("verify", help="numerical checks of the semigroup inequalities")
    vsub = vp.add_subparsers(dest="which", required=True, parser_class=_Parser)
    for which in ("thm31", "thm32", "semigroup", "lemma32"):
        sp = vsub.add_parser(which)
        sp.add_argument("--graph", required=True)
        sp.add_argument("--function")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads")
        if which in ("thm31", "thm32"):
            sp.add_argument("--kappa", default="auto",
                            help="curvature lower bound, or 'auto' for the computed one")
            times(sp)
            vertices(sp)
            common_out(sp, ("json", "csv"))
            if which == "thm31":
                sp.add_argument("--dim", default="inf")
        else:
            sp.add_argument("--t", dest="t_single", type=float, default=1.0)
            if which == "semigroup":
                sp.add_argument("--s", dest="s_single", type=float, default=0.4)
            else:
                sp.add_argument("--s", default="0,0.25,0.5")
            common_out(sp)
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.cmd == "generate":
            _emit(cmd_generate(args), args.out)
            return 0
        if args.cmd == "info":
            doc, rows = cmd_info(args), None
        elif args.cmd == "curvature":
            doc, rows = cmd_curvature(args)
        elif args.cmd == "heat":
            if args.kind == "kernel" and (args.radius is not None or args.exhaust) and not args.center:
                raise ValidationError("--radius/--exhaust need --center")
            doc, rows = (cmd_heat_kernel if args.kind == "kernel" else cmd_heat_apply)(args)
        else:
            doc, rows = cmd_verify(args)
        text = to_csv(rows) if getattr(args, "format", "json") == "csv" else dumps(doc) + "\n"
        _emit(text, getattr(args, "out", None))
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
