"""Batch command surface: reproducible runs, canonical JSON on stdout.

Subcommands: generate (ball families), criteria (divergence partial sums),
construct (nested selection + certificate), verify (re-check a stored
tree), dimension (box counting and pre-measure covers), jb-check (slope
sweep against 2/(1+tau)).  Identical flags and seed give byte-identical
output; exit status is 0 only when every exact check the run requested
holds.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from .criteria import (
    sum_joint_hausdorff,
    sum_joint_lebesgue,
    sum_pairwise_hausdorff,
    sum_pairwise_lebesgue,
)
from .diophantine import (
    ApproximatingFunction,
    CoprimeMode,
    DiophantineError,
    DyadicBallFamily,
    FareyBallFamily,
)
from .dimension import (
    DimensionError,
    box_dim_estimate,
    mdp_lower_bound,
    premeasure_upper,
)
from .exactpow import PrecisionError
from .geometry import DimensionFunction, GeometryError
from .serialize import (
    SCHEMA_VERSION,
    SerializeError,
    _sanitize,
    decode_certificate,
    enc_frac,
    encode_certificate,
    encode_tree,
    read_json,
    to_json,
    verify_tree_document,
    write_csv,
)
from .transference import (
    ConstructionParams,
    TransferenceError,
    build_cantor,
    make_certificate,
    verify_ball_bound,
)

_ERRORS = (
    TransferenceError,
    DiophantineError,
    GeometryError,
    DimensionError,
    SerializeError,
    PrecisionError,
)


def _frac(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a rational: {s!r}") from e


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not an integer list: {s!r}") from e


def _emit(doc: dict, out: str | None) -> None:
    text = to_json(doc)
    sys.stdout.write(text)
    if out:
        Path(out).write_text(text, encoding="utf-8")


def _make_family(args) -> FareyBallFamily | DyadicBallFamily:
    if getattr(args, "family", "farey") == "dyadic":
        return DyadicBallFamily(
            k=args.k,
            g_min=1,
            g_cap=args.g_cap,
            radius_power=args.radius_power,
        )
    psi = ApproximatingFunction.power(args.tau)
    return FareyBallFamily(psi, k=args.k, mode=CoprimeMode.PAIRWISE, q_cap=args.q_cap)


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    family = _make_family(args)
    doc = {"version": SCHEMA_VERSION, "kind": "family", "manifest": _sanitize(family.manifest())}
    if args.csv:
        rows = []
        for b in family.block_keys():
            r = family.block_radius(b)
            for idx, ball in family.iter_block(b):
                if len(rows) >= args.limit:
                    break
                rows.append(
                    (idx, b)
                    + tuple(enc_frac(c) for c in ball.center)
                    + (enc_frac(r),)
                )
            if len(rows) >= args.limit:
                break
        header = ["index", "block"] + [f"c{i}" for i in range(family.k)] + ["radius"]
        write_csv(args.csv, header, rows)
        doc["csv"] = args.csv
        doc["csv_rows"] = len(rows)
    _emit(doc, args.out)
    return 0


def cmd_criteria(args) -> int:
    psi = ApproximatingFunction.power(args.tau)
    f = DimensionFunction(args.f_exponent) if args.f_exponent is not None else None
    rows = []
    for n in args.N:
        row: dict = {"N": n}
        pl = sum_pairwise_lebesgue(psi, args.k, n)
        jl = sum_joint_lebesgue(psi, args.k, n)
        row["pairwise_lebesgue"] = enc_frac(pl.value)
        row["joint_lebesgue"] = enc_frac(jl.value)
        if f is not None:
            ph = sum_pairwise_hausdorff(psi, f, args.k, n)
            jh = sum_joint_hausdorff(psi, f, args.k, n)
            row["pairwise_hausdorff"] = enc_frac(ph.value)
            row["pairwise_hausdorff_exact"] = ph.exact
            row["joint_hausdorff"] = enc_frac(jh.value)
            row["joint_hausdorff_exact"] = jh.exact
        rows.append(row)
    doc = {
        "version": SCHEMA_VERSION,
        "kind": "criteria",
        "k": args.k,
        "tau": enc_frac(args.tau),
        "f_exponent": enc_frac(args.f_exponent) if args.f_exponent is not None else None,
        "rows": rows,
    }
    _emit(doc, args.out)
    return 0


def _build_params(args) -> ConstructionParams:
    return ConstructionParams(
        k=args.k,
        eta=args.eta,
        depth=args.depth,
        mode=args.mode,
        kappa_override=args.kappa,
        c3_override=args.c3,
        epsilon_override=args.epsilon,
        sublevel_cap=args.sublevel_cap,
        index_budget=args.index_budget,
    )


def cmd_construct(args) -> int:
    family = _make_family(args)
    f = DimensionFunction(args.f_exponent)
    params = _build_params(args)
    tree = build_cantor(family, f, params)
    sampled = None
    if args.trials > 0 and params.k == 1 and params.depth >= 2:
        sampled = verify_ball_bound(tree, trials=args.trials, seed=args.seed)
    cert = make_certificate(tree, sampled)
    doc = {
        "version": SCHEMA_VERSION,
        "kind": "construction",
        "certificate": encode_certificate(cert),
        "tree": encode_tree(tree),
    }
    _emit(doc, args.out)
    if cert.claim == "failed":
        return 1
    if params.mode == "faithful" and cert.claim != "measure-certified":
        return 1
    return 0


def cmd_verify(args) -> int:
    doc = read_json(args.input)
    stored_cert = None
    if doc.get("kind") == "construction":
        stored_cert = doc.get("certificate")
        tdoc = doc["tree"]
    else:
        tdoc = doc
    tree, report = verify_tree_document(tdoc)

    out: dict = {
        "version": SCHEMA_VERSION,
        "kind": "verify-report",
        "flags": report.flags,
        "stored_flags": report.stored_flags,
        "flags_match": report.flags_match,
        "masses_match": report.masses_match,
        "stored_conservation": report.stored_conservation,
        "core_ok": report.core_ok,
        "ok": report.ok,
        "failures": dict(tree.flag_failures),
    }
    ok = report.ok
    if args.resample > 0:
        sampled = verify_ball_bound(tree, trials=args.resample, seed=args.seed)
        out["resample"] = {
            "trials": sampled.trials,
            "seed": sampled.seed,
            "max_ratio": enc_frac(sampled.max_ratio_hi),
            "within_constant": sampled.within_constant,
        }
        if stored_cert is not None and stored_cert.get("sampled"):
            same = (
                stored_cert["sampled"]["trials"] == sampled.trials
                and stored_cert["sampled"]["seed"] == sampled.seed
            )
            if same:
                match = stored_cert["sampled"]["max_ratio_hi"] == enc_frac(sampled.max_ratio_hi)
                out["resample"]["matches_stored"] = match
                ok = ok and match
    _emit(out, args.out)
    return 0 if ok else 1


def cmd_dimension(args) -> int:
    doc: dict = {"version": SCHEMA_VERSION, "kind": "dimension-report"}
    if args.box:
        report = box_dim_estimate(int(args.tau), args.scales, k=args.k)
        doc["box"] = {
            "tau": report.tau,
            "slope": report.slope,
            "residual": report.residual,
            "target": enc_frac(report.target),
            "rows": [
                {"q_lo": r.q_lo, "q_hi": r.q_hi, "resolution_bits": r.resolution_bits, "count": r.count}
                for r in report.rows
            ],
        }
        if args.csv:
            write_csv(args.csv, ["Q", "delta", "N"], report.csv_rows())
            doc["box"]["csv"] = args.csv
    if args.tail_g is not None:
        family = _make_family(args)
        f = DimensionFunction(args.f_exponent)
        b0 = family.block_of_index(args.tail_g)
        rho = family.envelope(b0)
        ps = premeasure_upper(family, f, rho, args.tail_g)
        doc["premeasure"] = {
            "tail_start": args.tail_g,
            "rho": enc_frac(rho),
            "value": enc_frac(ps.value),
            "exact": ps.exact,
        }
    if args.cert:
        cdoc = read_json(args.cert)
        if cdoc.get("kind") == "construction":
            cdoc = cdoc["certificate"]
        bound = mdp_lower_bound(decode_certificate(cdoc))
        doc["mdp"] = {
            "value": enc_frac(bound.value),
            "eta": enc_frac(bound.eta),
            "c_emp_upper": enc_frac(bound.c_emp_upper),
            "claim": bound.claim,
            "caveat": bound.caveat,
        }
    if not any(x in doc for x in ("box", "premeasure", "mdp")):
        raise DimensionError("nothing to do: pass --box, --tail-g and/or --cert")
    _emit(doc, args.out)
    return 0


def cmd_jb_check(args) -> int:
    rows = []
    all_within = True
    for tau in args.taus:
        report = box_dim_estimate(tau, args.scales, k=1)
        target = report.target
        within = abs(report.slope - float(target)) <= args.tol
        all_within = all_within and within
        rows.append(
            {
                "tau": tau,
                "slope": report.slope,
                "target": enc_frac(target),
                "within_tolerance": within,
            }
        )
    doc = {
        "version": SCHEMA_VERSION,
        "kind": "jb-check",
        "tolerance": args.tol,
        "rows": rows,
        "ok": all_within,
    }
    _emit(doc, args.out)
    return 0 if all_within else 1


# ---------------------------------------------------------------------------
# parser


def _add_family_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=("farey", "dyadic"), default="farey")
    p.add_argument("--tau", type=_frac, default=Fraction(2), help="psi(q) = q**-tau")
    p.add_argument("--q-cap", type=int, default=6000, help="largest denominator")
    p.add_argument("--g-cap", type=int, default=12, help="dyadic generations")
    p.add_argument("--radius-power", type=int, default=1, help="dyadic radius exponent")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="masscert",
        description="Exact ball-family constructions, certificates and dimension reports.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit a ball-family manifest (and optional CSV listing)")
    g.add_argument("--k", type=int, default=1)
    _add_family_opts(g)
    g.add_argument("--csv", help="write the first --limit balls to this CSV")
    g.add_argument("--limit", type=int, default=1000)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("criteria", help="divergence-criterion partial sums")
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--tau", type=_frac, default=Fraction(1))
    c.add_argument("--f-exponent", type=_frac, default=None)
    c.add_argument("--N", type=_int_list, default=[4], help="comma-separated caps")
    c.add_argument("--out")
    c.set_defaults(func=cmd_criteria)

    b = sub.add_parser("construct", help="build the nested selection and its certificate")
    b.add_argument("--k", type=int, default=1)
    _add_family_opts(b)
    b.add_argument("--f-exponent", type=_frac, default=Fraction(2, 3))
    b.add_argument("--eta", type=_frac, default=Fraction(2))
    b.add_argument("--depth", type=int, default=3)
    b.add_argument("--mode", choices=("faithful", "demo"), default="demo")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--trials", type=int, default=2000, help="sampled ball-bound trials (0 skips)")
    b.add_argument("--index-budget", type=int, default=50_000_000)
    b.add_argument("--kappa", type=_frac, default=None, help="demo capture fraction")
    b.add_argument("--c3", type=_frac, default=None, help="demo volume quota")
    b.add_argument("--epsilon", type=_frac, default=None, help="demo shrinkage")
    b.add_argument("--sublevel-cap", type=int, default=None)
    b.add_argument("--out")
    b.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", help="re-derive every flag of a stored construction")
    v.add_argument("input", help="JSON file from construct")
    v.add_argument("--resample", type=int, default=0, help="re-run the sampled bound with this many trials")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("dimension", help="box-dimension slopes and pre-measure covers")
    d.add_argument("--k", type=int, default=1)
    d.add_argument("--box", action="store_true", help="run the box-counting report")
    d.add_argument("--scales", type=_int_list, default=[2**j for j in range(4, 13)])
    d.add_argument("--tail-g", type=int, default=None, help="pre-measure tail start index")
    d.add_argument("--f-exponent", type=_frac, default=Fraction(2, 3))
    _add_family_opts(d)
    d.add_argument("--cert", help="certificate JSON: report the mass-distribution lower bound")
    d.add_argument("--csv", help="write (Q, delta, N) rows here")
    d.add_argument("--out")
    d.set_defaults(func=cmd_dimension)

    j = sub.add_parser("jb-check", help="box slopes against the 2/(1+tau) target")
    j.add_argument("--taus", type=_int_list, default=[2, 3])
    j.add_argument("--scales", type=_int_list, default=[2**j for j in range(4, 13)])
    j.add_argument("--tol", type=float, default=0.1)
    j.add_argument("--out")
    j.set_defaults(func=cmd_jb_check)

    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except _ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
