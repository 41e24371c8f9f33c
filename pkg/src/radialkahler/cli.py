"""Command-line front end.

    radialkahler classify  --psi "y - y^2 + y^3" --dim 2
    radialkahler scan-hsc  --psi "y - y^2 + y^3" --dim 2 --y-range 0.05:1
    radialkahler potential --psi y --dim 2 --y0 1 --t0 0 --t-range -2:2 --format csv
    radialkahler verify    --random 100 --seed 0

Exit status: 0 on success, 1 for a negative result under ``--strict``,
2 for usage and computation errors.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .classify import DEFAULT_TOL, classify, classify_kcsck, verify_theorem
from .errors import ExprSyntaxError, RadialKahlerError
from .expr import parse
from .geometry import RadialMetric, curvature_sample, hsc_sign_scan, rho_all
from .ode import integrate_y, reconstruct_potential
from .oracle import run_oracles
from .properties import run_theorem_suites
from .render import Table, render_report

GRAMMAR = """\
profile grammar (whitespace is ignored, a leading "-" is allowed):
  expr    := term (("+"|"-") term)*
  term    := factor ("*" factor)*
  factor  := NUMBER | "y" ("^" SNUMBER)? | "exp" "(" SNUMBER "*" "y" ")"
  SNUMBER := ("-")? NUMBER
examples: "y - y^2 + y^3", "y - 0.5*y^2", "2*exp(-1*y)*y^-2 + y"
"""

COMMANDS = ("classify", "rho", "curvature", "potential", "scan-hsc", "verify", "oracle")

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    psi_text: str | None
    dim: int | None
    k: int | None = None
    y_range: tuple[float, float] | None = None
    samples: int | None = None
    tol: float = DEFAULT_TOL
    output_format: str = "json"
    out_path: str | None = None
    seed: int = 0
    strict: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.dim is not None and self.dim < 1:
            raise UsageError("--dim must be >= 1")
        if self.samples is not None and self.samples < 8:
            raise UsageError("--samples must be >= 8")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.k is not None and self.dim is not None and not 1 <= self.k <= self.dim:
            raise UsageError(f"--k must lie in 1..{self.dim}")


def _interval(text):
    try:
        lo, hi = text.split(":")
        out = (float(lo), float(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if not out[0] < out[1]:
        raise argparse.ArgumentTypeError(f"empty interval {text!r}")
    return out


def _complex_list(text):
    try:
        return np.array([complex(tok.strip().replace(" ", "")) for tok in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated complex numbers, got {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--psi", metavar="TEXT", help="momentum profile psi(y)")
    g.add_argument("--dim", type=int, metavar="N", help="complex dimension n (required)")
    g.add_argument("--k", type=int, metavar="K", help="generalized curvature degree")
    g.add_argument("--y-range", type=_interval, metavar="LO:HI", help="validity interval in y")
    g.add_argument("--samples", type=int, metavar="N", help="grid size (default 256; potential rows 2049)")
    g.add_argument("--tol", type=float, default=DEFAULT_TOL, metavar="X", help="tolerance (default %(default)g)")
    g.add_argument("--format", choices=("json", "csv", "text"), default="json", dest="output_format")
    g.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    g.add_argument("--seed", type=int, default=0, metavar="N", help="random seed (default %(default)d)")
    g.add_argument("--strict", action="store_true", help="exit 1 on negative results")

    parser = argparse.ArgumentParser(
        prog="radialkahler",
        description="Classify and inspect radial Kahler metrics given by a momentum profile.",
        epilog=GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, epilog=GRAMMAR,
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    add("classify", "membership in the extremal, KE, soliton and constant-rho_k families")
    add("rho", "tabulate rho_1..rho_n (or rho_k) over the grid")
    p = add("curvature", "metric, Ricci and axis Riemann data at a point")
    p.add_argument("--z", type=_complex_list, required=True, metavar="Z1,..,ZN")
    p.add_argument("--y-at", type=float, required=True, metavar="Y", help="momentum y at r = |z|^2")
    p.add_argument("--xi", type=_complex_list, metavar="X1,..,XN", help="direction for the HSC value")
    p = add("potential", "integrate dy/dt = psi and reconstruct f(r)")
    p.add_argument("--y0", type=float, required=True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t-range", type=_interval, default=(-2.0, 2.0), metavar="LO:HI")
    add("scan-hsc", "sign changes of psi'' (and hence of the axis HSC)")
    p = add("verify", "theorem consistency on one profile, or random property suites")
    p.add_argument("--random", type=int, metavar="N", help="run the four suites with N draws each")
    p = add("oracle", "brute-force cross-checks of the curvature formulas")
    p.add_argument("--y-at", type=float, metavar="Y", help="site for the Riemann check (default grid midpoint)")
    p.add_argument("--r", type=float, default=1.0, help="r = |z1|^2 for the Riemann check")
    return parser


def _metric(cfg):
    if cfg.psi_text is None:
        raise UsageError("--psi is required")
    if cfg.dim is None:
        raise UsageError("--dim is required")
    return RadialMetric(cfg.dim, parse(cfg.psi_text), cfg.y_range)


def _samples(cfg, default=256):
    return cfg.samples if cfg.samples is not None else default


def cmd_classify(cfg, args):
    m = _metric(cfg)
    rep = classify(m, cfg.tol, _samples(cfg))
    if cfg.k is not None:
        ok = rep.kcsck[cfg.k] is not None
    else:
        ok = any(x is not None for x in (rep.extremal, rep.ke, rep.krs, *rep.kcsck.values()))
    return rep, ok


def cmd_rho(cfg, args):
    m = _metric(cfg)
    y = m.grid(_samples(cfg))
    vals = rho_all(m, y)
    ks = [cfg.k] if cfg.k is not None else list(range(1, m.dim + 1))
    header = ["y"] + [f"rho_{k}" for k in ks]
    rows = [[float(y[i])] + [float(vals[k - 1][i]) for k in ks] for i in range(len(y))]
    ok = True
    if cfg.k is not None:
        ok = classify_kcsck(m, cfg.k, cfg.tol, _samples(cfg)) is not None
    return Table(header, rows), ok


def cmd_curvature(cfg, args):
    m = _metric(cfg)
    return curvature_sample(m, args.z, args.y_at, args.xi), True


def cmd_potential(cfg, args):
    m = _metric(cfg)
    lo, hi = args.t_range
    table = integrate_y(m, args.t0, args.y0, (lo, hi), tol=min(cfg.tol, 1e-10),
                        samples=_samples(cfg, 2049))
    table = reconstruct_potential(table)
    ok = table.stop_backward == "end" and table.stop_forward == "end"
    return table, ok


def cmd_scan_hsc(cfg, args):
    m = _metric(cfg)
    lo, hi = cfg.y_range if cfg.y_range is not None else m.y_range
    if math.isinf(hi) or lo == 0.0:
        g = m.grid()
        lo, hi = float(g[0]), float(g[-1])
    found = hsc_sign_scan(m, lo, hi, _samples(cfg))
    rep = {"y_lo": lo, "y_hi": hi, "sign_changes": [s.to_dict() for s in found]}
    return rep, bool(found)


def cmd_verify(cfg, args):
    if args.random is not None:
        if args.random < 1:
            raise UsageError("--random must be >= 1")
        suites = run_theorem_suites(args.random, cfg.seed, cfg.tol)
        rep = {
            "seed": cfg.seed,
            "draws": args.random,
            "suites": {k: v.to_dict() for k, v in suites.items()},
            "violations": sum(len(v.violations) for v in suites.values()),
        }
        return rep, rep["violations"] == 0
    m = _metric(cfg)
    rep = verify_theorem(m, cfg.tol, _samples(cfg))
    return rep, not rep["violations"]


def cmd_oracle(cfg, args):
    m = _metric(cfg)
    rng = np.random.default_rng(cfg.seed)
    reports = run_oracles(m, rng, y_mid=args.y_at, r=args.r, samples=_samples(cfg))
    return {"reports": reports}, all(r.passed for r in reports)


HANDLERS = {
    "classify": cmd_classify,
    "rho": cmd_rho,
    "curvature": cmd_curvature,
    "potential": cmd_potential,
    "scan-hsc": cmd_scan_hsc,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
}


def dispatch(cfg: RunConfig, args=None) -> tuple[int, bytes]:
    """Run one command; returns ``(exit_code, rendered_report)``."""
    cfg.validate()
    report, ok = HANDLERS[cfg.command](cfg, args)
    payload = render_report(report, cfg.output_format)
    return (EXIT_NEGATIVE if cfg.strict and not ok else EXIT_OK), payload


_VALUE_FLAGS = ("--y-range", "--t-range", "--z", "--xi")


def _join_values(argv):
    # "-2:2" or "-1+0.5j" would otherwise be taken for an option
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_values(sys.argv[1:] if argv is None else list(argv)))
    cfg = RunConfig(
        command=args.command,
        psi_text=args.psi,
        dim=args.dim,
        k=args.k,
        y_range=args.y_range,
        samples=args.samples,
        tol=args.tol,
        output_format=args.output_format,
        out_path=args.out,
        seed=args.seed,
        strict=args.strict,
    )
    try:
        code, payload = dispatch(cfg, args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"radialkahler: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ExprSyntaxError as exc:
        print(f"radialkahler: syntax error: {exc}\n{GRAMMAR}", file=sys.stderr)
        return EXIT_ERROR
    except (RadialKahlerError, ValueError, ArithmeticError) as exc:
        print(f"radialkahler: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if cfg.out_path:
        with open(cfg.out_path, "wb") as fh:
            fh.write(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
