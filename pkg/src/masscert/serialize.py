"""Canonical JSON round-trips for trees, certificates and manifests.

Every number that carries a proof obligation is serialized exactly:
rationals as lowest-terms "p/q" strings, radical monomials as coefficient
plus prime-exponent pairs (with a non-normative decimal hint).  Documents
are dumped with sorted keys and fixed separators so identical runs produce
byte-identical files.  `verify_tree_document` re-derives every flag and
mass from the decoded geometry, so editing any load-bearing value in the
file flips a flag or a mass mismatch.
"""

from __future__ import annotations

import copy
import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .exactpow import XR, Pow, xr_make
from .geometry import Ball, DimensionFunction
from .transference import (
    _CORE_FLAGS,
    CantorTree,
    Certificate,
    ConstructionParams,
    LocalRecord,
    Node,
    SampledBound,
    assign_measure,
    verify_node_bounds,
    verify_properties,
)

SCHEMA_VERSION = "masscert/1"


class SerializeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scalars


def enc_frac(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def dec_frac(s: str) -> Fraction:
    return Fraction(s)


def _opt_frac(x: Fraction | None) -> str | None:
    return None if x is None else enc_frac(x)


def _opt_dec(s: str | None) -> Fraction | None:
    return None if s is None else dec_frac(s)


def enc_xr(x: XR) -> Any:
    if isinstance(x, Pow):
        return {
            "coef": enc_frac(x.coef),
            "root": [[p, enc_frac(e)] for p, e in x.root],
            "dec": float(x),
        }
    return enc_frac(Fraction(x))


def dec_xr(v: Any) -> XR:
    if isinstance(v, str):
        return dec_frac(v)
    if isinstance(v, dict):
        root = tuple((int(p), dec_frac(e)) for p, e in v["root"])
        return xr_make(dec_frac(v["coef"]), root)
    raise SerializeError(f"not an exact value: {v!r}")


def enc_ball(b: Ball) -> dict:
    return {"center": [enc_frac(c) for c in b.center], "radius": enc_xr(b.radius)}


def dec_ball(d: dict) -> Ball:
    return Ball(tuple(dec_frac(c) for c in d["center"]), dec_xr(d["radius"]))


def _sanitize(obj: Any) -> Any:
    """Best-effort JSON form for opaque metadata (family manifests)."""
    if isinstance(obj, Fraction):
        return enc_frac(obj)
    if isinstance(obj, Pow):
        return enc_xr(obj)
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# construction pieces


def enc_params(p: ConstructionParams) -> dict:
    return {
        "k": p.k,
        "eta": enc_frac(p.eta),
        "depth": p.depth,
        "mode": p.mode,
        "c1": enc_frac(p.c1),
        "c2": enc_frac(p.c2),
        "kappa_override": _opt_frac(p.kappa_override),
        "c3_override": _opt_frac(p.c3_override),
        "epsilon_override": _opt_frac(p.epsilon_override),
        "sublevel_cap": p.sublevel_cap,
        "index_budget": p.index_budget,
        "mu_bits": p.mu_bits,
    }


def dec_params(d: dict) -> ConstructionParams:
    return ConstructionParams(
        k=int(d["k"]),
        eta=dec_frac(d["eta"]),
        depth=int(d["depth"]),
        mode=d["mode"],
        c1=dec_frac(d["c1"]),
        c2=dec_frac(d["c2"]),
        kappa_override=_opt_dec(d["kappa_override"]),
        c3_override=_opt_dec(d["c3_override"]),
        epsilon_override=_opt_dec(d["epsilon_override"]),
        sublevel_cap=d["sublevel_cap"],
        index_budget=int(d["index_budget"]),
        mu_bits=int(d["mu_bits"]),
    )


def enc_f(f: DimensionFunction) -> dict:
    return {"s": enc_frac(f.s), "a": enc_frac(f.a), "bits": f.bits}


def dec_f(d: dict) -> DimensionFunction:
    return DimensionFunction(dec_frac(d["s"]), dec_frac(d["a"]), int(d["bits"]))


def enc_node(n: Node) -> dict:
    return {
        "nid": n.nid,
        "level": n.level,
        "parent": n.parent,
        "sublevel": n.sublevel,
        "index": n.index,
        "ball": enc_ball(n.ball),
        "region": enc_ball(n.region),
        "vf": enc_xr(n.vf),
        "children": list(n.children),
        "mu_lo": _opt_frac(n.mu_lo),
        "mu_hi": _opt_frac(n.mu_hi),
    }


def dec_node(d: dict) -> Node:
    return Node(
        nid=int(d["nid"]),
        level=int(d["level"]),
        parent=d["parent"],
        sublevel=int(d["sublevel"]),
        index=d["index"],
        ball=dec_ball(d["ball"]),
        region=dec_ball(d["region"]),
        vf=dec_xr(d["vf"]),
        children=[int(c) for c in d["children"]],
        mu_lo=_opt_dec(d["mu_lo"]),
        mu_hi=_opt_dec(d["mu_hi"]),
    )


def enc_record(r: LocalRecord) -> dict:
    return {
        "node": r.node,
        "sublevels": r.sublevels,
        "sublevels_prescribed": r.sublevels_prescribed,
        "scale_stopped": bool(r.scale_stopped),
        "start": r.start,
        "shrunken_starts": list(r.shrunken_starts),
        "truncations": list(r.truncations),
        "d_mins": [enc_frac(d) for d in r.d_mins],
        "bundles_used": list(r.bundles_used),
        "bundles_skipped": list(r.bundles_skipped),
        "packing_kept": list(r.packing_kept),
        "sublevel_sizes": list(r.sublevel_sizes),
    }


def dec_record(d: dict) -> LocalRecord:
    return LocalRecord(
        node=int(d["node"]),
        sublevels=int(d["sublevels"]),
        sublevels_prescribed=int(d["sublevels_prescribed"]),
        scale_stopped=bool(d["scale_stopped"]),
        start=int(d["start"]),
        shrunken_starts=[int(x) for x in d["shrunken_starts"]],
        truncations=[int(x) for x in d["truncations"]],
        d_mins=[dec_frac(x) for x in d["d_mins"]],
        bundles_used=[int(x) for x in d["bundles_used"]],
        bundles_skipped=[int(x) for x in d["bundles_skipped"]],
        packing_kept=[int(x) for x in d["packing_kept"]],
        sublevel_sizes=[int(x) for x in d["sublevel_sizes"]],
    )


def encode_tree(tree: CantorTree) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "kind": "cantor-tree",
        "f": enc_f(tree.f),
        "params": enc_params(tree.params),
        "family": _sanitize(tree.family_manifest),
        "nodes": [enc_node(n) for n in tree.nodes],
        "records": [enc_record(r) for r in tree.records],
        "flags": dict(tree.flags),
        "flag_failures": dict(tree.flag_failures),
        "mu_exact": tree.mu_exact,
        "mu_width": enc_frac(tree.mu_width),
    }


def decode_tree(doc: dict) -> CantorTree:
    if doc.get("kind") != "cantor-tree":
        raise SerializeError("document is not a cantor-tree")
    if doc.get("version") != SCHEMA_VERSION:
        raise SerializeError(f"unsupported version {doc.get('version')!r}")
    return CantorTree(
        f=dec_f(doc["f"]),
        params=dec_params(doc["params"]),
        family_manifest=dict(doc["family"]),
        nodes=[dec_node(n) for n in doc["nodes"]],
        records=[dec_record(r) for r in doc["records"]],
        flags=dict(doc["flags"]),
        flag_failures={k: int(v) for k, v in doc["flag_failures"].items()},
        mu_exact=bool(doc["mu_exact"]),
        mu_width=dec_frac(doc["mu_width"]),
    )


# ---------------------------------------------------------------------------
# certificates


def enc_sampled(s: SampledBound) -> dict:
    return {
        "trials": s.trials,
        "seed": s.seed,
        "r_o": enc_frac(s.r_o),
        "zero_mass": s.zero_mass,
        "max_ratio_float": s.max_ratio_float,
        "max_ratio_lo": enc_frac(s.max_ratio_lo),
        "max_ratio_hi": enc_frac(s.max_ratio_hi),
        "mu_plus_at_max": enc_frac(s.mu_plus_at_max),
        "radius_at_max": enc_frac(s.radius_at_max),
        "center_at_max": enc_frac(s.center_at_max),
        "branch_level_histogram": {str(k): v for k, v in sorted(s.branch_level_histogram.items())},
        "case_within_sublevel": s.case_within_sublevel,
        "case_across_sublevels": s.case_across_sublevels,
        "case_mixed_parents": s.case_mixed_parents,
        "single_chain": s.single_chain,
        "mass_constant": enc_frac(s.mass_constant),
        "within_constant": s.within_constant,
    }


def dec_sampled(d: dict) -> SampledBound:
    return SampledBound(
        trials=int(d["trials"]),
        seed=int(d["seed"]),
        r_o=dec_frac(d["r_o"]),
        zero_mass=int(d["zero_mass"]),
        max_ratio_float=float(d["max_ratio_float"]),
        max_ratio_lo=dec_frac(d["max_ratio_lo"]),
        max_ratio_hi=dec_frac(d["max_ratio_hi"]),
        mu_plus_at_max=dec_frac(d["mu_plus_at_max"]),
        radius_at_max=dec_frac(d["radius_at_max"]),
        center_at_max=dec_frac(d["center_at_max"]),
        branch_level_histogram={int(k): int(v) for k, v in d["branch_level_histogram"].items()},
        case_within_sublevel=int(d["case_within_sublevel"]),
        case_across_sublevels=int(d["case_across_sublevels"]),
        case_mixed_parents=int(d["case_mixed_parents"]),
        single_chain=int(d["single_chain"]),
        mass_constant=dec_frac(d["mass_constant"]),
        within_constant=bool(d["within_constant"]),
    )


def encode_certificate(cert: Certificate) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "kind": "certificate",
        "mode": cert.mode,
        "k": cert.k,
        "depth": cert.depth,
        "eta": enc_frac(cert.eta),
        "f_exponent": enc_frac(cert.f_exponent),
        "kappa": enc_frac(cert.kappa),
        "c3": enc_frac(cert.c3),
        "epsilon_base": enc_frac(cert.epsilon_base),
        "mass_constant": enc_frac(cert.mass_constant),
        "family": _sanitize(cert.family),
        "node_count": cert.node_count,
        "leaf_count": cert.leaf_count,
        "r_o": _opt_frac(cert.r_o),
        "flags": dict(cert.flags),
        "flag_failures": dict(cert.flag_failures),
        "mu_exact": cert.mu_exact,
        "mu_width": enc_frac(cert.mu_width),
        "claim": cert.claim,
        "sampled": enc_sampled(cert.sampled) if cert.sampled is not None else None,
    }


def decode_certificate(doc: dict) -> Certificate:
    if doc.get("kind") != "certificate":
        raise SerializeError("document is not a certificate")
    if doc.get("version") != SCHEMA_VERSION:
        raise SerializeError(f"unsupported version {doc.get('version')!r}")
    return Certificate(
        mode=doc["mode"],
        k=int(doc["k"]),
        depth=int(doc["depth"]),
        eta=dec_frac(doc["eta"]),
        f_exponent=dec_frac(doc["f_exponent"]),
        kappa=dec_frac(doc["kappa"]),
        c3=dec_frac(doc["c3"]),
        epsilon_base=dec_frac(doc["epsilon_base"]),
        mass_constant=dec_frac(doc["mass_constant"]),
        family=dict(doc["family"]),
        node_count=int(doc["node_count"]),
        leaf_count=int(doc["leaf_count"]),
        r_o=_opt_dec(doc["r_o"]),
        flags=dict(doc["flags"]),
        flag_failures={k: int(v) for k, v in doc["flag_failures"].items()},
        mu_exact=bool(doc["mu_exact"]),
        mu_width=dec_frac(doc["mu_width"]),
        claim=doc["claim"],
        sampled=dec_sampled(doc["sampled"]) if doc.get("sampled") is not None else None,
    )


# ---------------------------------------------------------------------------
# files


def to_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(to_json(doc), encoding="utf-8")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# re-verification of decoded trees


@dataclass
class VerifyReport:
    """Outcome of re-deriving a stored tree's flags and masses."""

    flags: dict[str, bool]  # freshly recomputed
    stored_flags: dict[str, bool]
    flags_match: bool
    masses_match: bool
    stored_conservation: bool  # the stored masses themselves sum correctly
    core_ok: bool

    @property
    def ok(self) -> bool:
        return (
            self.flags_match
            and self.masses_match
            and self.stored_conservation
            and self.core_ok
        )


def _stored_conservation(tree: CantorTree) -> bool:
    """Parent-child mass sums on the masses as stored in the file.

    Checked before any re-derivation: a single perturbed weight breaks the
    sum at its parent (and the leaf total) even if the rest of the file is
    internally consistent.
    """
    root = tree.nodes[0]
    if root.mu_lo is None or root.mu_hi is None or not (root.mu_lo <= 1 <= root.mu_hi):
        return False
    for node in tree.nodes:
        if not node.children:
            continue
        kids = [tree.nodes[c] for c in node.children]
        if any(k.mu_lo is None or k.mu_hi is None for k in kids):
            return False
        if sum(k.mu_hi for k in kids) < node.mu_lo or sum(k.mu_lo for k in kids) > node.mu_hi:
            return False
    leaves = tree.leaves()
    lo = sum(l.mu_lo for l in leaves)
    hi = sum(l.mu_hi for l in leaves)
    return lo <= 1 <= hi


def verify_tree_document(doc: dict) -> tuple[CantorTree, VerifyReport]:
    """Decode, re-derive every flag and mass from the geometry, and compare
    with what the file claims.  Any tampered ball, volume or mass shows up
    as a conservation failure, a recomputation mismatch or a failed flag.
    """
    tree = decode_tree(doc)
    stored_flags = dict(tree.flags)
    stored_mu = [(n.mu_lo, n.mu_hi) for n in tree.nodes]
    stored_conservation = _stored_conservation(tree)

    work = copy.deepcopy(tree)
    assign_measure(work)
    verify_properties(work)
    verify_node_bounds(work)

    masses_match = all(
        (n.mu_lo, n.mu_hi) == old for n, old in zip(work.nodes, stored_mu)
    )
    flags_match = work.flags == stored_flags
    core_ok = all(work.flags.get(x, False) for x in _CORE_FLAGS)
    report = VerifyReport(
        flags=dict(work.flags),
        stored_flags=stored_flags,
        flags_match=flags_match,
        masses_match=masses_match,
        stored_conservation=stored_conservation,
        core_ok=core_ok,
    )
    return work, report
