"""Command-line front end.

Subcommands: construct, verify, dpe, pol, simulate-ml, simulate-iter, slope,
report.  Worker count comes from DIVLAT_PROCESSES.  Exit code 0 on success;
failures print one line `error: <category>: <message>` on stderr and exit
nonzero (2 usage, 3 data, 4 hypothesis, 5 numeric).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .algebra import AlgebraicScalar, rational
from .channel import pol_monte_carlo, pol_oracle
from .construction import (ConstructionError, GeneratingSequence, build_fd_bp,
                           build_fd_bp_L4, build_fd_ml_latin,
                           build_fd_ml_random, build_latin_square_ldlc,
                           read_icm, write_icm)
from .diversity import (IRREGULAR_L2, IRREGULAR_L4, DegreeDistribution,
                        dpe_run, ec_condition, verify_fd_ml)
from .sim import (SweepConfig, config_from_file, fit_slope, read_records,
                  records_to_csv, run_sweep, runtime_report)

CATEGORIES = {"usage": 2, "data": 3, "hypothesis": 4, "numeric": 5}


class CliError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _parse_scalar_arg(text: str) -> AlgebraicScalar:
    """Scalar syntax for flags: '1', '1/2', 'sqrt2', '1/sqrt2', '2/sqrt5'."""
    text = text.strip()
    if "sqrt" in text:
        head, _, tail = text.partition("sqrt")
        m = int(tail)
        if head in ("", "+"):
            return AlgebraicScalar.sqrt(m)
        if head.endswith("/"):
            num = head[:-1] or "1"
            return rational(int(num)) * AlgebraicScalar.inv_sqrt(m)
        return rational(int(head)) * AlgebraicScalar.sqrt(m)
    if "/" in text:
        a, b = text.split("/")
        return rational(int(a), int(b))
    return rational(int(text))


def _parse_dist(text: str) -> DegreeDistribution:
    if text.startswith("regular:"):
        return DegreeDistribution.regular(int(text.split(":")[1]))
    if text == "irregular-l2":
        return IRREGULAR_L2
    if text == "irregular-l4":
        return IRREGULAR_L4
    # lambda and rho as deg:mass pairs, e.g. "2:0.42,3:0.16,6:0.42/3:1.0"
    lam_s, _, rho_s = text.partition("/")
    if not rho_s:
        raise CliError("usage", "distribution must be regular:d or lam/rho lists")

    def parse_side(side):
        out = []
        for item in side.split(","):
            deg, mass = item.split(":")
            out.append((int(deg), float(mass)))
        return out

    return DegreeDistribution.of(parse_side(lam_s), parse_side(rho_s))


def _cmd_construct(args) -> int:
    seq = None
    if args.seq:
        seq = GeneratingSequence.of(*[_parse_scalar_arg(s) for s in args.seq.split(",")])
    thetas = [_parse_scalar_arg(s) for s in args.theta.split(",")] if args.theta else []
    kind = args.type
    if kind == "latin":
        if seq is None:
            raise CliError("usage", "latin construction needs --seq")
        icm = build_latin_square_ldlc(args.n, seq, args.seed)
    elif kind == "fd-ml":
        if len(thetas) != 2:
            raise CliError("usage", "fd-ml needs --theta t1,t2")
        icm = build_fd_ml_random(args.n, args.d, thetas[0], thetas[1],
                                 variant=args.variant, seed=args.seed, seq=seq)
    elif kind == "fd-ml-latin":
        icm = build_fd_ml_latin(args.n, args.d, seed=args.seed)
    elif kind == "fd-bp":
        if len(thetas) != 2:
            raise CliError("usage", "fd-bp needs --theta t1,t2")
        icm = build_fd_bp(args.n, args.d, thetas[0], thetas[1], seed=args.seed)
    elif kind == "fd-bp-l4":
        if len(thetas) != 4:
            raise CliError("usage", "fd-bp-l4 needs --theta t1,t2,t3,t4")
        if seq is None:
            raise CliError("usage", "fd-bp-l4 needs --seq v1,v2,v3")
        icm = build_fd_bp_L4(args.n, thetas, seq, seed=args.seed)
    else:  # pragma: no cover
        raise CliError("usage", f"unknown construction {kind}")
    write_icm(icm, args.out)
    print(f"wrote {icm.name} n={icm.n} d={icm.d} L={icm.L} to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    icm = read_icm(args.matrix)
    L = args.L or icm.L
    report = verify_fd_ml(icm, L, reduced=args.reduced)
    print(f"verdict: {report.verdict}")
    for info in report.per_k:
        print(f"  psi_{info['k']} subset={info['subset']} "
              f"kappa={info['kappa']}: {info['status']}")
    if report.witness is not None:
        print(f"witness (psi_{report.witness_k}): "
              + " ".join(str(v) for v in report.witness))
    if args.ec:
        print(f"erasure-channel condition: {ec_condition(icm, L)}")
    return 0


def _cmd_dpe(args) -> int:
    dist = _parse_dist(args.dist)
    trace = dpe_run(args.L, dist, tol=args.tol, max_iter=args.max_iter)
    lines = ["iteration,epsilon"]
    lines += [f"{i},{e!r}" for i, e in enumerate(trace.epsilons)]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    print(f"verdict: {trace.verdict} after {trace.iterations} iterations")
    return 0


def _cmd_pol(args) -> int:
    rows = ["snr_db,p_out,stderr,trials,method"]
    db = args.db_from
    while db <= args.db_to + 1e-9:
        gamma = 10 ** (db / 10)
        if args.method == "oracle":
            est = pol_oracle(gamma, args.L, margin=args.margin)
        else:
            est = pol_monte_carlo(gamma, args.L, args.trials, args.seed,
                                  margin=args.margin)
        rows.append(f"{db!r},{est.p_out!r},{est.stderr!r},{est.trials},{est.method}")
        db += args.db_step
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _sim_config(args, decoder: str) -> SweepConfig:
    if args.config:
        overrides = {"matrix_path": args.matrix} if args.matrix else {}
        return config_from_file(args.config, decoder=decoder, **overrides)
    if not args.matrix:
        raise CliError("usage", "need --matrix or --config")
    snr = tuple(float(x) for x in
                np.arange(args.db_from, args.db_to + 1e-9, args.db_step))
    kwargs = dict(snr_db_list=snr, decoder=decoder, seed=args.seed,
                  target_errors=args.target_errors, max_trials=args.max_trials,
                  matrix_path=args.matrix, output_path=args.out,
                  tx=args.tx)
    if decoder == "ml":
        kwargs.update(gate_margin=args.margin, node_cap=args.node_cap)
    else:
        kwargs.update(pdf_length=args.pdf_length, fft_size=args.fft_size,
                      max_iterations=args.max_iterations, mode=args.mode)
    return SweepConfig(**kwargs)


def _cmd_simulate(args, decoder: str) -> int:
    cfg = _sim_config(args, decoder)
    records = run_sweep(cfg, verbose=True)
    text = records_to_csv(records)
    if not cfg.output_path:
        sys.stdout.write(text)
    else:
        print(f"wrote {len(records)} records to {cfg.output_path}")
    return 0


def _cmd_slope(args) -> int:
    records = read_records(args.csv)
    window = tuple(args.window_db) if args.window_db else None
    per_range = tuple(args.per_range) if args.per_range else None
    fit = fit_slope(records, window_db=window, per_range=per_range,
                    min_errors=args.min_errors)
    print(f"window_db: {fit.snr_window_db[0]} .. {fit.snr_window_db[1]} "
          f"({fit.points} points)")
    print(f"slope: {fit.slope:.4f}")
    print(f"diversity: {fit.diversity:.4f}")
    print(f"residual: {fit.residual:.4f}")
    return 0


def _cmd_report(args) -> int:
    gated = read_records(args.gated)
    ungated = read_records(args.ungated)
    rep = runtime_report(gated, ungated)
    print("snr_db,gated_ms,ungated_ms,ratio,gated_per,ungated_per")
    for row in rep["rows"]:
        print(f"{row['snr_db']!r},{row['gated_ms']:.1f},{row['ungated_ms']:.1f},"
              f"{row['ratio']:.4f},{row['gated_per']!r},{row['ungated_per']!r}")
    total_ratio = rep["total_gated_ms"] / rep["total_ungated_ms"] \
        if rep["total_ungated_ms"] else float("nan")
    print(f"total,{rep['total_gated_ms']:.1f},{rep['total_ungated_ms']:.1f},"
          f"{total_ratio:.4f},,")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="divlat",
                                description="full-diversity low-density lattices "
                                            "on block-fading channels")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build an integer-check matrix file")
    c.add_argument("--type", required=True,
                   choices=["latin", "fd-ml", "fd-ml-latin", "fd-bp", "fd-bp-l4"])
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--d", type=int, default=4)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--theta", help="comma list, e.g. 1,sqrt2 or 1,1/sqrt2")
    c.add_argument("--seq", help="generating sequence, e.g. 1,1/sqrt5,1/sqrt5")
    c.add_argument("--variant", default="checkerboard",
                   choices=["checkerboard", "row-scaled"])
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_construct)

    v = sub.add_parser("verify", help="exact full-diversity verification")
    v.add_argument("--matrix", required=True)
    v.add_argument("--L", type=int)
    v.add_argument("--reduced", action="store_true",
                   help="check only the L largest shortened matrices")
    v.add_argument("--ec", action="store_true",
                   help="also run the peeling erasure check")
    v.set_defaults(func=_cmd_verify)

    d = sub.add_parser("dpe", help="erasure-fraction recursion")
    d.add_argument("--L", type=int, required=True)
    d.add_argument("--dist", required=True,
                   help="regular:d | irregular-l2 | irregular-l4 | lam/rho lists")
    d.add_argument("--tol", type=float, default=1e-12)
    d.add_argument("--max-iter", type=int, default=100000)
    d.add_argument("--out")
    d.set_defaults(func=_cmd_dpe)

    o = sub.add_parser("pol", help="outage limit curve")
    o.add_argument("--L", type=int, required=True)
    o.add_argument("--db-from", type=float, required=True)
    o.add_argument("--db-to", type=float, required=True)
    o.add_argument("--db-step", type=float, default=1.0)
    o.add_argument("--trials", type=int, default=1_000_000)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--margin", type=float, default=1.0)
    o.add_argument("--method", choices=["mc", "oracle"], default="mc")
    o.add_argument("--out")
    o.set_defaults(func=_cmd_pol)

    for name, dec in (("simulate-ml", "ml"), ("simulate-iter", "iter")):
        s = sub.add_parser(name, help=f"{dec} point-error-rate sweep")
        s.add_argument("--matrix")
        s.add_argument("--config", help="flat key=value sweep config file")
        s.add_argument("--db-from", type=float, default=10.0)
        s.add_argument("--db-to", type=float, default=30.0)
        s.add_argument("--db-step", type=float, default=2.0)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--target-errors", type=int, default=400)
        s.add_argument("--max-trials", type=int, default=10 ** 7)
        s.add_argument("--tx", choices=["zero", "random"], default="zero")
        s.add_argument("--out")
        if dec == "ml":
            s.add_argument("--margin", type=float, default=1.0,
                           help="outage gate margin; 0 disables the gate")
            s.add_argument("--node-cap", type=int, default=10 ** 9)
            s.set_defaults(func=lambda a: _cmd_simulate(a, "ml"))
        else:
            s.add_argument("--pdf-length", type=int, default=1 << 16)
            s.add_argument("--fft-size", type=int, default=1024)
            s.add_argument("--max-iterations", type=int, default=200)
            s.add_argument("--mode", choices=["full", "single-peak"],
                           default="full")
            s.set_defaults(func=lambda a: _cmd_simulate(a, "iter"))

    f = sub.add_parser("slope", help="diversity slope fit from a sweep CSV")
    f.add_argument("--csv", required=True)
    f.add_argument("--window-db", type=float, nargs=2)
    f.add_argument("--per-range", type=float, nargs=2)
    f.add_argument("--min-errors", type=int)
    f.set_defaults(func=_cmd_slope)

    r = sub.add_parser("report", help="gated vs ungated runtime comparison")
    r.add_argument("--gated", required=True)
    r.add_argument("--ungated", required=True)
    r.set_defaults(func=_cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e.category}: {e}", file=sys.stderr)
        return CATEGORIES.get(e.category, 1)
    except ConstructionError as e:
        print(f"error: hypothesis: {e}", file=sys.stderr)
        return CATEGORIES["hypothesis"]
    except FileNotFoundError as e:
        print(f"error: data: {e}", file=sys.stderr)
        return CATEGORIES["data"]
    except (ValueError, ZeroDivisionError) as e:
        print(f"error: numeric: {e}", file=sys.stderr)
        return CATEGORIES["numeric"]


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
