"""Command-line front end.

Settings resolve as: command-line flag, then the ``[run]`` section of the
``--config`` file, then built-in defaults.  Output files go to ``--out-dir``,
else ``$MLEXPAND_OUTPUT_DIR``, else the current directory.

Exit status: 0 success, 1 usage error, 2 numeric or pipeline failure,
3 golden symbolic mismatch.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .checks import identity_checks
from .edgeworth import (
    CumulantStructureError,
    ExpansionModel,
    cdf_eval,
    r_polynomials,
    symbolic_expansion,
)
from .families import FamilyError, QuadratureError, compute_etas, get_family, load_family_config, standardize
from .mle_expansion import DerivationError, assemble_Sn, solve_order_by_order
from .moments import XiMonomial, xi_expectation, xi_expectation_raw
from .montecarlo import MonteCarloError, monte_carlo_cdf, parse_grid
from .reference import golden_suite
from .report import ReportError, ValidationSummary, atomic_write, write_report

OUTPUT_ENV = "MLEXPAND_OUTPUT_DIR"
DEFAULTS = {
    "order": 3,
    "format": "text",
    "seed": 0,
    "workers": 1,
    "grid": "-3:3:0.1",
}
_INT_KEYS = {"n", "order", "reps", "seed", "workers", "cap"}

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_GOLDEN = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    family: str | None = None
    config: str | None = None
    n: int | None = None
    order: int = 3
    grid: str | None = None
    reps: int | None = None
    seed: int = 0
    out_dir: str | None = None
    format: str = "text"
    workers: int = 1

    def validate(self) -> None:
        if self.order not in (0, 1, 2, 3):
            raise UsageError(f"order: must be 0, 1, 2 or 3 (got {self.order})")
        if self.n is not None and self.n < 1:
            raise UsageError(f"n: must be >= 1 (got {self.n})")
        if self.reps is not None and self.reps < 1:
            raise UsageError(f"reps: must be >= 1 (got {self.reps})")
        if self.workers < 1:
            raise UsageError(f"workers: must be >= 1 (got {self.workers})")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed: must be in [0, 2^64)")
        if self.format not in ("text", "json", "csv"):
            raise UsageError(f"format: unknown format {self.format!r}")

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise UsageError(f"{name}: required for '{self.command}' (flag or config file)")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mlexpand", description="Higher-order expansion of the location MLE.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def fmt(sp, choices=("text", "json")):
        sp.add_argument("--format", choices=choices, default=None)

    def fam(sp):
        sp.add_argument("--family", help="builtin family id")
        sp.add_argument("--config", help="family config file")

    d = sub.add_parser("derive", help="print symbolic results")
    d.add_argument("--target", choices=("mle", "moments", "cumulants", "polys", "cf"), required=True)
    fmt(d)

    e = sub.add_parser("expect", help="graded series of E(xi monomial)")
    e.add_argument("--monomial", required=True, help='e.g. "xi1^8" or "xi1^2*xi2"')
    e.add_argument("--cap", type=int, default=3, help="highest eps power kept")
    e.add_argument("--raw", action="store_true", help="keep E(w...) symbols, no eta reduction")
    fmt(e)

    t = sub.add_parser("etas", help="a2 and eta2..eta6 of a family")
    fam(t)
    fmt(t)

    for name, var, helptext in (("eval", "x", "expansion CDF G_n(x)"), ("quantile", "u", "expansion quantile")):
        s = sub.add_parser(name, help=helptext)
        fam(s)
        s.add_argument("--n", type=int)
        s.add_argument(f"--{var}", type=float, action="append", help="repeatable")
        if name == "eval":
            s.add_argument("--grid", help="lo:hi:step")
        s.add_argument("--order", type=int, choices=(0, 1, 2, 3))
        fmt(s, ("text", "json", "csv"))

    m = sub.add_parser("simulate", help="Monte Carlo CDF of sqrt(n)*theta_hat")
    fam(m)
    for flag in ("--n", "--reps", "--seed", "--workers"):
        m.add_argument(flag, type=int)
    m.add_argument("--grid", help="lo:hi:step")
    m.add_argument("--out-dir")
    fmt(m, ("text", "json", "csv"))

    v = sub.add_parser("validate", help="golden, identity and Monte Carlo checks")
    fam(v)
    for flag in ("--n", "--reps", "--seed", "--workers"):
        v.add_argument(flag, type=int)
    v.add_argument("--grid", help="lo:hi:step")
    v.add_argument("--out-dir")
    fmt(v)
    return p


def _resolve(args: argparse.Namespace):
    """Merge flags over the config file over defaults."""
    fam_obj, run = None, {}
    if getattr(args, "config", None):
        fam_obj, run = load_family_config(args.config)
    cfg = RunConfig(command=args.command, config=getattr(args, "config", None))
    for key in ("family", "n", "order", "grid", "reps", "seed", "out_dir", "format", "workers"):
        val = getattr(args, key, None)
        if val is None and key in run:
            raw = run[key].strip()
            if key in _INT_KEYS:
                try:
                    val = int(raw)
                except ValueError:
                    raise UsageError(f"{key}: config value {raw!r} is not an integer") from None
            else:
                val = raw
        if val is None:
            val = DEFAULTS.get(key)
        if val is not None:
            setattr(cfg, key, val)
    if cfg.out_dir is None:
        cfg.out_dir = os.environ.get(OUTPUT_ENV) or "."
    cfg.validate()
    if cfg.family is not None:
        fam_obj = get_family(cfg.family)
    return cfg, fam_obj


def _family(cfg: RunConfig, fam_obj):
    if fam_obj is None:
        raise UsageError("family: give --family or --config")
    std = standardize(fam_obj)
    return std, compute_etas(std)


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# commands


def _derive_objects(target: str) -> list[tuple[str, object]]:
    if target == "mle":
        sol = solve_order_by_order()
        return list(sol.as_dict().items()) + [("S_n", assemble_Sn(sol))]
    sym = symbolic_expansion()
    if target == "moments":
        return [(f"E(S_n^{k})", sym.moments[k]) for k in range(1, 6)]
    if target == "cumulants":
        return [(f"kappa{k}", sym.cumulants.kappa(k)) for k in range(1, 6)]
    if target == "polys":
        rs = [(f"r{k}", r) for k, r in enumerate(r_polynomials(), 1)]
        return rs + [(f"p{k}", p) for k, p in enumerate(sym.polys.p, 1)]
    return list(zip("ABC", sym.cf))


def cmd_derive(cfg, args) -> int:
    objs = _derive_objects(args.target)
    if cfg.format == "json":
        out = {"target": args.target, "eps": "n^(-1/2)", "objects": [
            {"name": name, "text": str(obj), "terms": obj.to_terms()} for name, obj in objs
        ]}
        _emit(json.dumps(out, indent=2))
        return EXIT_OK
    lines = []
    for name, obj in objs:
        body = str(obj)
        lines.append(f"{name} = {body}" if "\n" not in body else f"{name} =\n  " + body.replace("\n", "\n  "))
    _emit("\n".join(lines))
    return EXIT_OK


def cmd_expect(cfg, args) -> int:
    try:
        mono = XiMonomial.of(args.monomial)
    except ValueError as exc:
        raise UsageError(f"monomial: {exc}") from None
    if args.cap < 0:
        raise UsageError("cap: must be >= 0")
    series = (xi_expectation_raw if args.raw else xi_expectation)(mono, args.cap)
    if cfg.format == "json":
        _emit(json.dumps({"monomial": args.monomial, "text": str(series), "terms": series.to_terms()}, indent=2))
    else:
        _emit(f"E({args.monomial}) =\n  " + str(series).replace("\n", "\n  "))
    return EXIT_OK


def cmd_etas(cfg, fam_obj) -> int:
    raw = compute_etas(fam_obj) if fam_obj is not None else None
    std, eta = _family(cfg, fam_obj)
    data = dict(eta.to_json(), raw_a2=raw.a2)
    if cfg.format == "json":
        _emit(json.dumps(data, indent=2, sort_keys=True))
    else:
        lines = [f"family {eta.family}", f"a2 (unscaled) = {raw.a2!r}", f"scale c = {std.scale!r}"]
        lines += [f"{k} = {v!r}" for k, v in eta.as_dict().items()]
        _emit("\n".join(lines))
    return EXIT_OK


def cmd_eval(cfg, fam_obj, args) -> int:
    cfg.require("n")
    xs = list(args.x or [])
    if args.grid:
        xs += [float(v) for v in parse_grid(args.grid)]
    if not xs:
        raise UsageError("x: give --x or --grid")
    std, eta = _family(cfg, fam_obj)
    model = ExpansionModel.from_etas(eta, cfg.n)
    vals = [cdf_eval(model, x, cfg.order) for x in xs]
    if cfg.format == "csv":
        rows = ["x,cdf,clamped"] + [f"{x!r},{v.value!r},{int(v.clamped)}" for x, v in zip(xs, vals)]
        _emit("\n".join(rows))
    elif cfg.format == "json":
        _emit(json.dumps({"family": std.name, "n": cfg.n, "order": cfg.order, "scale": std.scale, "values": [
            {"x": x, "cdf": v.value, "clamped": v.clamped} for x, v in zip(xs, vals)]}, indent=2))
    else:
        lines = []
        for x, v in zip(xs, vals):
            flag = "  (clamped to [0, 1])" if v.clamped else ""
            lines.append(f"G_n({x:g}) = {v.value!r}{flag}")
        _emit("\n".join(lines))
    return EXIT_OK


def cmd_quantile(cfg, fam_obj, args) -> int:
    cfg.require("n")
    us = list(args.u or [])
    if not us:
        raise UsageError("u: give --u")
    bad = [u for u in us if not 0 < u < 1]
    if bad:
        raise UsageError(f"u: must lie in (0, 1) (got {bad[0]})")
    std, eta = _family(cfg, fam_obj)
    model = ExpansionModel.from_etas(eta, cfg.n)
    qs = [float(model.quantile(u, cfg.order)) for u in us]
    c = std.scale
    if cfg.format == "csv":
        _emit("\n".join(["u,quantile,quantile_user_scale"] + [f"{u!r},{q!r},{q / c!r}" for u, q in zip(us, qs)]))
    elif cfg.format == "json":
        _emit(json.dumps({"family": std.name, "n": cfg.n, "order": cfg.order, "scale": c, "values": [
            {"u": u, "quantile": q, "quantile_user_scale": q / c} for u, q in zip(us, qs)]}, indent=2))
    else:
        lines = [f"q_n({u:g}) = {q!r}   user scale: {q / c!r}" for u, q in zip(us, qs)]
        _emit("\n".join(lines + [f"(scale c = {c!r}; user-scale quantile = q / c)"]))
    return EXIT_OK


def _run_mc(cfg, fam_obj):
    cfg.require("n", "reps")
    grid = parse_grid(cfg.grid)
    std, eta = _family(cfg, fam_obj)
    return monte_carlo_cdf(std, cfg.n, cfg.reps, cfg.seed, grid, workers=cfg.workers, eta=eta)


def cmd_simulate(cfg, fam_obj) -> int:
    rep = _run_mc(cfg, fam_obj)
    stem = f"mc_{rep.family}_n{rep.n}_r{rep.reps}_s{rep.seed}"
    out = Path(cfg.out_dir)
    csv_path = atomic_write(out / f"{stem}.csv", rep.to_csv())
    json_path = atomic_write(out / f"{stem}.json", rep.to_json())
    if cfg.format == "json":
        _emit(rep.to_json())
    elif cfg.format == "csv":
        _emit(rep.to_csv())
    else:
        lines = [f"{rep.family}: n = {rep.n}, reps = {rep.reps}, seed = {rep.seed}, failures = {rep.failures}"]
        lines += [f"order {k}: sup distance {d:.6e}" for k, d in enumerate(rep.sup_distances)]
        lines += [f"MC standard error <= {rep.standard_error:.3e}", f"wrote {csv_path}", f"wrote {json_path}"]
        _emit("\n".join(lines))
    return EXIT_OK


def cmd_validate(cfg, fam_obj) -> int:
    golden = golden_suite()
    identities, mc, name, scale = [], None, None, 1.0
    if fam_obj is not None:
        std, eta = _family(cfg, fam_obj)
        identities = identity_checks(std, eta)
        name, scale = std.name, std.scale
        if cfg.reps is not None:
            mc = _run_mc(cfg, fam_obj)
    summary = ValidationSummary(name, golden, identities, mc, scale)
    paths = write_report(summary, cfg.out_dir)
    if cfg.format == "json":
        _emit(json.dumps(summary.to_json(), indent=2, sort_keys=True))
    else:
        _emit(summary.to_text() + "\n" + "\n".join(f"wrote {p}" for p in paths))
    return summary.exit_code()


# ---------------------------------------------------------------------------

_TAGS = [
    (FamilyError, "numeric-eval", EXIT_USAGE),
    (QuadratureError, "numeric-eval", EXIT_NUMERIC),
    (MonteCarloError, "numeric-eval", EXIT_NUMERIC),
    (DerivationError, "mle-expansion", EXIT_NUMERIC),
    (CumulantStructureError, "edgeworth-cf", EXIT_NUMERIC),
    (ReportError, "cli-report", EXIT_NUMERIC),
]


def _join_values(argv: list[str]) -> list[str]:
    # argparse treats "-3:3:0.1" as an option; bind such values to their flag
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _NEGATIVE_OK:
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and len(nxt) > 1 and (nxt[1].isdigit() or nxt[1] == "."):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


_NEGATIVE_OK = ("--grid", "--x")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    argv = _join_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
        cfg, fam_obj = _resolve(args)
        if args.command == "derive":
            return cmd_derive(cfg, args)
        if args.command == "expect":
            return cmd_expect(cfg, args)
        if args.command == "etas":
            return cmd_etas(cfg, fam_obj)
        if args.command == "eval":
            return cmd_eval(cfg, fam_obj, args)
        if args.command == "quantile":
            return cmd_quantile(cfg, fam_obj, args)
        if args.command == "simulate":
            return cmd_simulate(cfg, fam_obj)
        return cmd_validate(cfg, fam_obj)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mlexpand: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except tuple(t for t, _, _ in _TAGS) as exc:
        for typ, tag, code in _TAGS:
            if isinstance(exc, typ):
                print(f"mlexpand: error [{tag}]: {exc}", file=sys.stderr)
                return code
        raise  # pragma: no cover
    except ValueError as exc:
        # invalid numeric input caught by the library (e.g. a grid or n)
        print(f"mlexpand: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
