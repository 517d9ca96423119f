"""Command-line front end.

    helsonlab bounds  --q 1,1.5,3 [--tol T]
    helsonlab blowup  --q 1 --alpha 1 --beta 1 --n-max 20 --mode product|direct
    helsonlab project --input A.txt --weight uniform|alpha_beta:A,B|spec.json --q 1,2
    helsonlab verify  [--seed S] [--tol T]

A JSON config file (``--config``) may supply any option; flags given on the
command line win.  Exit codes: 0 success, 2 partial (error or skipped rows),
1 failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from helsonlab import bounds, projections, schatten, verify
from helsonlab.schatten import ADDITIVE, MULTIPLICATIVE, MatrixSizeError

EXIT_OK, EXIT_FAIL, EXIT_PARTIAL = 0, 1, 2

DEFAULTS = {
    "q": None,
    "tol": None,
    "alpha": 1.0,
    "beta": 1.0,
    "n_max": 20,
    "mode": "product",
    "input": None,
    "weight": "uniform",
    "output": None,
    "symbol_output": None,
    "seed": 0,
    "report": None,
}


def fmt(x) -> str:
    """Locale-independent number formatting with 12 significant digits."""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return str(x)
    return format(x, "#.12g")


def parse_q_list(values) -> list[float]:
    out = []
    for v in values if isinstance(values, (list, tuple)) else [values]:
        for part in str(v).split(","):
            part = part.strip()
            if part:
                out.append(math.inf if part.lower() in ("inf", "infinity") else float(part))
    return out


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# -- commands ------------------------------------------------------------------

def cmd_bounds(cfg) -> int:
    q_list = parse_q_list(cfg["q"] or [1])
    tol = cfg["tol"] if cfg["tol"] is not None else 1e-12
    rows, status = [], EXIT_OK
    for q in q_list:
        try:
            r = bounds.solve_uniform_bound(q, tol)
        except (ValueError, ArithmeticError):
            rows.append([fmt(q), "error", "", ""])
            status = EXIT_PARTIAL
            continue
        rows.append([fmt(q), r.branch, fmt(r.x_q), fmt(r.uniform_bound)])
    _emit(_csv_text(["q", "branch", "x_q", "bound"], rows), cfg["output"])
    return status


BLOWUP_HEADER = ["q", "alpha", "beta", "N", "prime", "tag", "t", "ratio_p", "total_ratio", "floor"]


def cmd_blowup(cfg) -> int:
    q_list = parse_q_list(cfg["q"] or [1])
    alpha, beta = float(cfg["alpha"]), float(cfg["beta"])
    n_max, mode = int(cfg["n_max"]), cfg["mode"]
    Phi = projections.weight_Phi_family(alpha, beta)
    rows, status = [], EXIT_OK
    for q in q_list:
        try:
            res = bounds.blowup_experiment(q, Phi, n_max, "product")
            floor = bounds.solve_uniform_bound(q).uniform_bound
        except ValueError:
            rows.append([fmt(q), fmt(alpha), fmt(beta), "", "", "error", "", "", "", ""])
            status = EXIT_PARTIAL
            continue
        total = 1.0
        for N, step in enumerate(res.steps, start=1):
            total *= step.ratio
            shown = fmt(total)
            if mode == "direct":
                try:
                    a, pa = bounds.direct_ratio(q, Phi, res.steps[:N])
                    shown = fmt(pa / a)
                except MatrixSizeError:
                    shown = "skipped"
                    status = EXIT_PARTIAL
            rows.append([
                fmt(q), fmt(alpha), fmt(beta), N, step.prime, step.tag,
                fmt(step.t), fmt(step.ratio), shown, fmt(floor**N),
            ])
    _emit(_csv_text(BLOWUP_HEADER, rows), cfg["output"])
    return status


def load_weight(spec: str, kind: str) -> projections.WeightFunction:
    """``uniform``, ``alpha_beta:A,B`` or a path to a JSON weight spec."""
    if spec == "uniform":
        return projections.weight_from_config({"kind": kind, "family": "uniform"})
    if spec.startswith("alpha_beta:"):
        a, b = (float(x) for x in spec.split(":", 1)[1].split(","))
        return projections.weight_from_config({"kind": kind, "family": "alpha_beta", "alpha": a, "beta": b})
    data = json.loads(Path(spec).read_text())
    if data.get("kind", kind) != kind:
        raise ValueError(f"weight kind {data['kind']!r} does not match a {kind} matrix")
    data["kind"] = kind
    return projections.weight_from_config(data)


def cmd_project(cfg) -> int:
    if not cfg["input"]:
        raise ValueError("project needs --input")
    A = schatten.read_matrix(cfg["input"])
    kind = ADDITIVE if A.origin == 0 else MULTIPLICATIVE
    weight = load_weight(cfg["weight"], kind)
    symbol = projections.project(A, weight)
    out = projections.projection_output_matrix(symbol)
    stem = Path(cfg["input"])
    matrix_path = cfg["output"] or stem.with_suffix(".projected.txt")
    symbol_path = cfg["symbol_output"] or stem.with_suffix(".symbol.txt")
    schatten.write_matrix(out, matrix_path)
    Path(symbol_path).write_text(schatten.format_symbol(symbol))
    rows = []
    for q in parse_q_list(cfg["q"] or [1, 2]):
        a, pa = schatten.schatten_norm(A, q), schatten.schatten_norm(out, q)
        rows.append([fmt(q), fmt(a), fmt(pa), fmt(pa / a) if a else "nan"])
    sys.stdout.write(_csv_text(["q", "input_norm", "output_norm", "ratio"], rows))
    return EXIT_OK


def cmd_verify(cfg) -> int:
    results = verify.run_checks(seed=int(cfg["seed"]), tol=cfg["tol"])
    text = json.dumps(verify.report(results), indent=2, sort_keys=True) + "\n"
    _emit(text, cfg["report"])
    for r in results:
        mark = "PASS" if r.passed else f"FAIL ({r.failure})"
        print(f"{mark:<18} {r.module}.{r.name}: deviation {r.deviation:.3e} <= {r.tolerance:.1e}", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {"bounds": cmd_bounds, "blowup": cmd_blowup, "project": cmd_project, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="helsonlab", description=__doc__.split("\n")[0])
    parser.add_argument("--config", help="JSON file with option values")
    sub = parser.add_subparsers(dest="command", required=True)

    def q_opt(p):
        p.add_argument("--q", nargs="+", default=argparse.SUPPRESS, help="exponents, e.g. 1,1.5,3")

    p = sub.add_parser("bounds", help="tabulate the uniform lower bound 1 + delta_q")
    q_opt(p)
    p.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    p.add_argument("--output", default=argparse.SUPPRESS)

    p = sub.add_parser("blowup", help="tensor blow-up of the Helson projection norm")
    q_opt(p)
    p.add_argument("--alpha", type=float, default=argparse.SUPPRESS)
    p.add_argument("--beta", type=float, default=argparse.SUPPRESS)
    p.add_argument("--n-max", dest="n_max", type=int, default=argparse.SUPPRESS)
    p.add_argument("--mode", choices=["product", "direct"], default=argparse.SUPPRESS)
    p.add_argument("--output", default=argparse.SUPPRESS)

    p = sub.add_parser("project", help="apply a projection to a matrix file")
    p.add_argument("--input", default=argparse.SUPPRESS)
    p.add_argument("--weight", default=argparse.SUPPRESS)
    q_opt(p)
    p.add_argument("--output", default=argparse.SUPPRESS)
    p.add_argument("--symbol-output", dest="symbol_output", default=argparse.SUPPRESS)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    p.add_argument("--report", default=argparse.SUPPRESS)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        data = json.loads(Path(args.config).read_text())
        cfg.update({k.replace("-", "_"): v for k, v in data.items() if k != "command"})
    cfg.update({k: v for k, v in vars(args).items() if k not in ("config", "command")})
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    try:
        return COMMANDS[args.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"helsonlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
