"""Command-line entry point: ``esopt {price,pde,quad,mc,scenario,hessian}``.

Exit codes: 0 success, 2 input error, 3 unpriceable state.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import plotting
from .analytic import MarketParams, PriceQuote, quote
from .errors import EsoptError, UnpriceableStateError
from .montecarlo import McConfig, default_seed, mc_simulate
from .pb_model import load_pb_document, parse_dimension, parse_matrix
from .pde import (
    Grid,
    QuadConfig,
    convergence_table,
    fd_price,
    fd_solve,
    greens_function_price,
    write_slice_csv,
    write_surface_csv,
)
from .scenario import load_scenario, run_scenario, to_csv, to_json
from .stock_mapping import MappingParams, classify_extremum

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNPRICEABLE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _round(v):
    if isinstance(v, float):
        return float(f"{v:.12g}")
    if isinstance(v, list):
        return [_round(x) for x in v]
    if isinstance(v, dict):
        return {k: _round(x) for k, x in v.items()}
    return v


def _emit_rows(out, rows: list[dict], form: str) -> None:
    if form == "json":
        out.write(json.dumps(_round(rows if len(rows) != 1 else rows[0]), indent=2) + "\n")
        return
    keys = list(rows[0])
    out.write(",".join(keys) + "\n")
    for r in rows:
        out.write(",".join(fmt(r[k]) for k in keys) + "\n")


def _quote_row(q: PriceQuote) -> dict:
    return {
        "method": q.method.value,
        "spot": float(q.spot),
        "call": q.call,
        "put": q.put,
        "error_estimate": q.error_estimate,
        "put_error_estimate": q.put_error,
    }


# --------------------------------------------------------------------------
# argument wiring
# --------------------------------------------------------------------------

def _market_args(p):
    g = p.add_argument_group("market")
    g.add_argument("--spot", type=float, required=True, help="spot price S > 0")
    g.add_argument("--strike", type=float, required=True)
    g.add_argument("--rate", type=float, default=0.0, help="continuously compounded r")
    g.add_argument("--sigma", type=float, required=True)
    g.add_argument("--tau", type=float, help="time to expiry T - t (years)")
    g.add_argument("--expiry", type=float, help="expiry T (years); use with --time")
    g.add_argument("--time", type=float, help="valuation time t (years, default 0)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _market(ns) -> MarketParams:
    if ns.tau is not None and (ns.expiry is not None or ns.time is not None):
        raise UsageError("--tau conflicts with --expiry/--time; give one or the other")
    if ns.tau is None and ns.expiry is None:
        raise UsageError("one of --tau or --expiry is required")
    if ns.tau is not None:
        return MarketParams.from_tau(ns.sigma, ns.rate, ns.strike, ns.tau)
    return MarketParams(ns.sigma, ns.rate, ns.strike, ns.expiry, ns.time or 0.0)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="esopt", description="PB-linked option pricing toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("price", help="closed-form call/put quote")
    _market_args(sp)

    sp = sub.add_parser("pde", help="Crank-Nicolson quote and convergence table")
    _market_args(sp)
    sp.add_argument("--nx", type=int, default=801)
    sp.add_argument("--ntau", type=int, default=800)
    sp.add_argument("--x-min", type=float, default=-6.0)
    sp.add_argument("--x-max", type=float, default=6.0)
    sp.add_argument("--scheme", choices=("crank-nicolson", "explicit", "implicit"),
                    default="crank-nicolson")
    sp.add_argument("--levels", type=int, default=3, help="rows in the convergence table")
    sp.add_argument("--surface-csv", type=Path, help="dump the (x, tau, u) surface")
    sp.add_argument("--slice-csv", type=Path, help="dump the (S, C, P) slice")
    sp.add_argument("--figures", type=Path, help="directory for report figures")

    sp = sub.add_parser("quad", help="Green's-function quadrature quote")
    _market_args(sp)
    sp.add_argument("--width", type=float, default=10.0, help="truncation width (std devs)")
    sp.add_argument("--order", type=int, default=20, help="Gauss-Legendre nodes per panel")

    sp = sub.add_parser("mc", help="Monte Carlo quote with standard errors")
    _market_args(sp)
    sp.add_argument("--paths", type=int, default=1_000_000)
    sp.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                    help="RNG seed (default: $ESOPT_SEED or built-in)")
    sp.add_argument("--antithetic", action="store_true")
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("scenario", help="trajectory of spot and option values")
    sp.add_argument("--file", required=True, help="scenario JSON, or - for stdin")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--delta-mode", choices=("reference", "step"), default="reference")
    for flag, dest in (("--s0", "s0"), ("--alpha", "alpha"), ("--sigma", "sigma"),
                       ("--rate", "r"), ("--strike", "strike"), ("--expiry", "expiry")):
        sp.add_argument(flag, dest=dest, type=float, help=f"override {dest}")
    sp.add_argument("--figures", type=Path, help="directory for report figures")

    sp = sub.add_parser("hessian", help="extremum classification report (JSON)")
    sp.add_argument("--file", required=True, help="PB or scenario JSON, or - for stdin")
    sp.add_argument("--coords", required=True, help="1-based PB indices, e.g. 1,2")
    sp.add_argument("--alpha", type=float, help="override mapping alpha (default 1)")
    sp.add_argument("--s0", type=float, help="override mapping s0 (default 100)")
    return p


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _read_json(path: str, stdin):
    try:
        text = stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise EsoptError(f"file: cannot read {path!r}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise EsoptError(f"file: malformed JSON at line {exc.lineno} column {exc.colno}") from None


def cmd_price(ns, out, stdin):
    _emit_rows(out, [_quote_row(quote(ns.spot, _market(ns)))], ns.format)


def cmd_quad(ns, out, stdin):
    cfg = QuadConfig(width=ns.width, order=ns.order)
    _emit_rows(out, [_quote_row(greens_function_price(ns.spot, _market(ns), cfg))], ns.format)


def cmd_mc(ns, out, stdin):
    seed = default_seed() if ns.seed is None else ns.seed
    cfg = McConfig(paths=ns.paths, seed=seed, antithetic=ns.antithetic, workers=ns.workers)
    res = mc_simulate(ns.spot, _market(ns), cfg)
    row = _quote_row(res.to_quote(ns.spot))
    row.update(paths=ns.paths, samples=res.samples, seed=seed)
    _emit_rows(out, [row], ns.format)


def cmd_pde(ns, out, stdin):
    m = _market(ns)
    if ns.levels < 1:
        raise UsageError("--levels must be >= 1")
    grid = Grid(ns.x_min, ns.x_max, ns.nx, ns.ntau)
    q = fd_price(ns.spot, m, grid, ns.scheme)
    base = grid
    for _ in range(ns.levels - 1):
        base = base.coarsened()
    exact = quote(ns.spot, m).call
    rows = convergence_table(ns.spot, m, exact, ns.levels, base, ns.scheme)
    if ns.format == "json":
        out.write(json.dumps(_round({"quote": _quote_row(q), "convergence": rows}), indent=2) + "\n")
    else:
        _emit_rows(out, [_quote_row(q)], "csv")
        out.write("\n")
        _emit_rows(out, rows, "csv")
    need_surface = ns.surface_csv is not None
    if need_surface or ns.slice_csv or ns.figures:
        sol = fd_solve(m, grid, ns.scheme, store_surface=need_surface)
        if need_surface:
            write_surface_csv(sol, ns.surface_csv)
        if ns.slice_csv:
            write_slice_csv(sol, ns.slice_csv)
        if ns.figures:
            plotting.plot_fd_slice(sol, ns.figures / "pde_slice.png")
            plotting.plot_convergence(rows, ns.figures / "pde_convergence.png")


def cmd_scenario(ns, out, stdin):
    doc = _read_json(ns.file, stdin)
    overrides = {k: getattr(ns, k) for k in ("s0", "alpha", "sigma", "r", "strike", "expiry")
                 if getattr(ns, k) is not None}
    points = run_scenario(load_scenario(doc, overrides), ns.delta_mode)
    out.write(to_json(points) if ns.format == "json" else to_csv(points))
    if ns.figures:
        stem = "scenario" if ns.file == "-" else Path(ns.file).stem
        plotting.plot_trajectory(points, ns.figures / f"{stem}_trajectory.png", title=stem)


def _parse_coords(text: str) -> list[int]:
    try:
        idx = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--coords: expected comma-separated integers, got {text!r}") from None
    if not idx:
        raise UsageError("--coords: coordinate set must not be empty")
    if any(i < 1 for i in idx):
        raise UsageError("--coords: indices are 1-based")
    return [i - 1 for i in idx]


def cmd_hessian(ns, out, stdin):
    doc = _read_json(ns.file, stdin)
    coords = _parse_coords(ns.coords)
    if not isinstance(doc, dict):
        raise EsoptError("file: expected a JSON object")
    if "pb" in doc:
        pb = doc["pb"]
        if not isinstance(pb, dict) or "dimension" not in pb:
            raise EsoptError("pb.dimension: missing required field")
        g = parse_matrix(pb.get("g"), parse_dimension(pb["dimension"]))
    elif "h" in doc:
        _, g = load_pb_document(doc)
    else:
        if "dimension" not in doc:
            raise EsoptError("dimension: missing required field")
        g = parse_matrix(doc.get("g"), parse_dimension(doc["dimension"]))
    mp = doc.get("mapping") or {}
    params = MappingParams(
        ns.s0 if ns.s0 is not None else float(mp.get("s0", 100.0)),
        ns.alpha if ns.alpha is not None else float(mp.get("alpha", 1.0)),
    )
    report = classify_extremum(params, g, coords)
    out.write(json.dumps(_round(report.to_dict()), indent=2) + "\n")


COMMANDS = {
    "price": cmd_price,
    "pde": cmd_pde,
    "quad": cmd_quad,
    "mc": cmd_mc,
    "scenario": cmd_scenario,
    "hessian": cmd_hessian,
}


def run(argv=None, stdout=None, stderr=None, stdin=None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    inp = stdin or sys.stdin
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        COMMANDS[ns.command](ns, out, inp)
    except UsageError as exc:
        err.write(f"esopt: error: {exc}\n")
        return EXIT_INPUT
    except UnpriceableStateError as exc:
        err.write(f"esopt: unpriceable: {exc}\n")
        return EXIT_UNPRICEABLE
    except EsoptError as exc:
        err.write(f"esopt: error: {exc}\n")
        return EXIT_INPUT
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
