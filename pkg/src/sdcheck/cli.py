"""Experiment runner: generate instances, follow the path, diagnose, reduce.

Subcommands:
  gen    write an instance (with certificate) to JSON
  run    full protocol: follow the path, write trace.csv / curves.csv / report.json
  fr     facial reduction, certified or numerical; writes the chain as JSON
  table  aggregate report.json files from run directories into one table

Exit codes: 0 ok, 2 bad specification/arguments, 3 solver truncation,
4 I/O failure, 5 facial reduction divergence. SDCHECK_OUT overrides --out-dir.
"""
import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import serialize
from .diagnostics import diagnose
from .exceptions import (
    FRDiverged,
    InvalidSpec,
    OracleUnavailable,
    SdcheckError,
)
from .facial import facial_reduction
from .generators import InstanceSpec, from_spec
from .pathfollow import clamp_k_max, follow
from .spectrahedron import forward_error

GEN_KINDS = {"worst-case": "worst_case", "slater": "slater",
             "rank-r-sd1": "rank_r_sd1", "direct-sum": "direct_sum"}


def _out_dir(args):
    out = os.environ.get("SDCHECK_OUT") or args.out_dir
    os.makedirs(out, exist_ok=True)
    return out


def _build_instance(args):
    if getattr(args, "instance", None):
        return serialize.read_instance(args.instance), os.path.basename(args.instance)
    kind = GEN_KINDS.get(args.kind)
    if kind is None:
        raise InvalidSpec(f"unknown instance kind {args.kind!r}")
    if kind == "direct_sum":
        children = [serialize.read_instance(p) for p in args.children or []]
        from .generators import gen_direct_sum

        return gen_direct_sum(children), "direct-sum"
    spec = InstanceSpec(kind=kind, n=args.n, m=args.m, r=args.r, seed=args.seed)
    name = f"{args.kind}-n{args.n}"
    return from_spec(spec), name


def _summary(F):
    cert = F.certificate
    bits = [f"n={F.map.n}", f"m={F.map.m}"]
    if cert is not None:
        if cert.sd_true is not None:
            bits.append(f"sd_true={cert.sd_true}")
        if cert.max_rank_true is not None:
            bits.append(f"r_true={cert.max_rank_true}")
    return "  ".join(bits)


def cmd_gen(args):
    try:
        F, name = _build_instance(args)
    except (InvalidSpec, SdcheckError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = args.out or f"{name}.json"
    try:
        serialize.write_instance(F, out)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return 4
    print(f"wrote {out}  [{_summary(F)}]")
    return 0


def _load_B(path, n):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    B = np.asarray(payload, dtype=float)
    if B.size != n * n:
        raise InvalidSpec(f"perturbation direction must have {n * n} entries")
    return B.reshape(n, n)


def cmd_run(args):
    try:
        F, name = _build_instance(args)
    except (InvalidSpec, SdcheckError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    if args.k_max < args.tail_window + 2:
        print(f"error: k_max must be at least tail_window + 2 = {args.tail_window + 2}",
              file=sys.stderr)
        return 2
    try:
        B = None if args.B == "identity" else _load_B(args.B, F.map.n)
    except (OSError, ValueError, InvalidSpec) as exc:
        print(f"error: cannot load B: {exc}", file=sys.stderr)
        return 4

    k_eff = clamp_k_max(args.sigma, args.k_max)
    if k_eff != args.k_max:
        print(f"warning: k_max clamped {args.k_max} -> {k_eff} "
              f"(sigma^k conditioning floor)", file=sys.stderr)
    out = _out_dir(args)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            trace = follow(F, B=B, sigma=args.sigma, k_max=args.k_max)
    except SdcheckError as exc:
        serialize.dump_json({"error": str(exc), "config": {"instance": name}},
                            os.path.join(out, "report.json"))
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return 3
    try:
        serialize.write_trace_csv(trace, os.path.join(out, "trace.csv"))
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 4
    try:
        curves, report = diagnose(trace, tau=args.tau, tail_window=args.tail_window)
    except SdcheckError as exc:
        serialize.dump_json(
            {"error": f"diagnostics unavailable: {exc}", "truncated": trace.truncated,
             "config": {"instance": name}},
            os.path.join(out, "report.json"),
        )
        print(f"error: diagnostics failed on the truncated trace: {exc}", file=sys.stderr)
        return 3

    cert = F.certificate
    ef = None
    if cert is not None and (cert.singleton_solution is not None
                             or cert.solution_face is not None):
        try:
            ef = forward_error(F, trace.points[-1].X)
        except OracleUnavailable:
            ef = None
    table_row = {
        "instance": name,
        "eps_b": float(trace.berr[-1]),
        "r": None if cert is None else cert.max_rank_true,
        "r_bar": report.r_bar,
        "eps_f": ef,
        "eps_lower": report.eps_lower,
        "sd": None if cert is None else cert.sd_true,
        "d_lower": report.d_lower,
        "N_lambda": report.N_lambda,
    }
    doc = {
        "table_row": table_row,
        "diagnostics": serialize.report_to_dict(report),
        "config": {
            "instance": name,
            "sigma": args.sigma,
            "k_max": args.k_max,
            "k_effective": trace.k_start + len(trace.points) - 1,
            "tau": args.tau,
            "tail_window": args.tail_window,
            "B": args.B,
            "seed": args.seed,
        },
        "truncated": trace.truncated,
    }
    try:
        serialize.write_curves_csv(curves, os.path.join(out, "curves.csv"),
                                   k_start=trace.k_start)
        serialize.dump_json(doc, os.path.join(out, "report.json"))
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 4
    row = "  ".join(f"{k}={v if v is not None else '-'}" for k, v in table_row.items())
    print(row)
    if trace.truncated:
        print("warning: trace truncated by solver failure; artifacts are partial",
              file=sys.stderr)
        return 3
    return 0


def cmd_fr(args):
    try:
        F, name = _build_instance(args)
    except (InvalidSpec, SdcheckError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    out = _out_dir(args)
    path = os.path.join(out, "fr.json")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result = facial_reduction(F, mode=args.mode)
    except InvalidSpec as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FRDiverged as exc:
        partial = {
            "d": None,
            "r": None,
            "mode": args.mode,
            "steps": [
                {"q": s.q, "y": [float(v) for v in s.y],
                 "Z": [[float(v) for v in row] for row in s.Z]}
                for s in (exc.partial or [])
            ],
            "error": str(exc),
        }
        serialize.dump_json(partial, path)
        print(f"error: {exc}", file=sys.stderr)
        return 5
    serialize.dump_json(serialize.fr_result_to_dict(result), path)
    print(f"{name}: d={result.d} r={result.r} mode={result.mode}")
    for s in result.steps:
        lam_min = float(np.linalg.eigvalsh(s.Z).min())
        print(f"  step {s.k}: q={s.q}  |y|={np.linalg.norm(s.y):.3e}  "
              f"lambda_min(Z)={lam_min:.3e}")
    print(f"wrote {path}")
    return 0


def cmd_table(args):
    if not args.run_dirs:
        print("error: no run directories given", file=sys.stderr)
        return 2
    rows = []
    for d in args.run_dirs:
        rp = os.path.join(d, "report.json")
        if not os.path.exists(rp):
            print(f"warning: {rp} missing, skipped", file=sys.stderr)
            continue
        with open(rp, encoding="utf-8") as fh:
            doc = json.load(fh)
        row = dict(doc.get("table_row", {}))
        row.setdefault("instance", os.path.basename(os.path.normpath(d)))
        rows.append(row)
    if not rows:
        print("error: no readable report.json in any run directory", file=sys.stderr)
        return 2
    out = _out_dir(args)
    try:
        text = serialize.write_table(rows, os.path.join(out, "table.csv"),
                                     os.path.join(out, "table.txt"))
    except OSError as exc:
        print(f"error: cannot write table: {exc}", file=sys.stderr)
        return 4
    print(text, end="")
    return 0


def _add_instance_args(p, require=False):
    g = p.add_argument_group("instance")
    g.add_argument("--instance", help="path to an instance JSON file")
    g.add_argument("--kind", choices=sorted(GEN_KINDS),
                   help="generate the instance instead of loading it")
    g.add_argument("--n", type=int, default=5)
    g.add_argument("--m", type=int, default=None)
    g.add_argument("--r", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--children", nargs="*", help="child instance files (direct-sum)")


def main(argv=None):
    ap = argparse.ArgumentParser(prog="sdcheck", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate an instance JSON file")
    p_gen.add_argument("kind", choices=sorted(GEN_KINDS))
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--m", type=int, default=None)
    p_gen.add_argument("--r", type=int, default=None)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--children", nargs="*")
    p_gen.add_argument("-o", "--out", default=None)
    p_gen.set_defaults(func=cmd_gen, instance=None)

    p_run = sub.add_parser("run", help="follow the path and run diagnostics")
    _add_instance_args(p_run)
    p_run.add_argument("--sigma", type=float, default=0.6)
    p_run.add_argument("--k-max", dest="k_max", type=int, default=60)
    p_run.add_argument("--tau", type=float, default=0.9)
    p_run.add_argument("--tail-window", dest="tail_window", type=int, default=10)
    p_run.add_argument("--B", default="identity",
                       help="'identity' or a JSON file with n*n entries")
    p_run.add_argument("--out-dir", dest="out_dir", default="run-out")
    p_run.set_defaults(func=cmd_run)

    p_fr = sub.add_parser("fr", help="facial reduction")
    _add_instance_args(p_fr)
    p_fr.add_argument("--mode", choices=["numerical", "certified"], default="numerical")
    p_fr.add_argument("--out-dir", dest="out_dir", default="run-out")
    p_fr.set_defaults(func=cmd_fr)

    p_tab = sub.add_parser("table", help="aggregate run reports")
    p_tab.add_argument("run_dirs", nargs="*")
    p_tab.add_argument("--out-dir", dest="out_dir", default=".")
    p_tab.set_defaults(func=cmd_table)

    args = ap.parse_args(argv)
    if args.command in ("run", "fr") and not args.instance and not args.kind:
        ap.error("give --instance PATH or --kind KIND")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
