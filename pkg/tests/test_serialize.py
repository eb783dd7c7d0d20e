"""JSON codecs, document round-trips, and stored-tree re-verification."""

import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from masscert.exactpow import xr_cmp, xr_pow
from masscert.geometry import Ball
from masscert.serialize import (
    SCHEMA_VERSION,
    SerializeError,
    dec_ball,
    dec_frac,
    dec_xr,
    decode_certificate,
    decode_tree,
    enc_ball,
    enc_frac,
    enc_xr,
    encode_certificate,
    encode_tree,
    read_json,
    to_json,
    verify_tree_document,
    write_csv,
    write_json,
)

F = Fraction


def roundtrip(doc):
    return json.loads(to_json(doc))


# --- scalar codecs ---------------------------------------------------------------


@given(st.integers(-(10**12), 10**12), st.integers(1, 10**12))
def test_frac_codec_roundtrip(n, d):
    x = F(n, d)
    s = enc_frac(x)
    assert dec_frac(s) == x
    assert s == f"{x.numerator}/{x.denominator}"  # canonical lowest terms


def test_xr_codec():
    assert dec_xr(enc_xr(F(3, 4))) == F(3, 4)
    v = xr_pow(F(1, 2), F(1, 2))  # sqrt(1/2), not rational
    d = enc_xr(v)
    assert set(d) == {"coef", "root", "dec"}
    assert d["dec"] == pytest.approx(0.7071067811865476)
    assert xr_cmp(dec_xr(d), v) == 0
    d["dec"] = 123.0  # the float is a display hint, never read back
    assert xr_cmp(dec_xr(d), v) == 0
    with pytest.raises(SerializeError):
        dec_xr(3)


def test_ball_codec():
    b = Ball((F(1, 3), F(2, 5)), F(1, 7))
    assert dec_ball(roundtrip(enc_ball(b))) == b
    irr = Ball((F(1, 2),), xr_pow(F(1, 3), F(2, 3)))
    back = dec_ball(roundtrip(enc_ball(irr)))
    assert back.center == irr.center and xr_cmp(back.radius, irr.radius) == 0


# --- tree documents ---------------------------------------------------------------


def test_tree_document_roundtrip(demo_tree):
    doc = roundtrip(encode_tree(demo_tree))
    back = decode_tree(doc)
    assert back.flags == demo_tree.flags
    assert back.mu_exact == demo_tree.mu_exact and back.mu_width == demo_tree.mu_width
    assert back.params == demo_tree.params
    assert back.f == demo_tree.f
    assert len(back.nodes) == len(demo_tree.nodes)
    for a, b in zip(back.nodes, demo_tree.nodes):
        assert (a.nid, a.level, a.parent, a.sublevel, a.index) == (
            b.nid,
            b.level,
            b.parent,
            b.sublevel,
            b.index,
        )
        assert a.ball == b.ball
        assert xr_cmp(a.region.radius, b.region.radius) == 0
        assert (a.mu_lo, a.mu_hi) == (b.mu_lo, b.mu_hi)
        assert a.children == b.children
    assert back.records == demo_tree.records
    # encode of decode reproduces the identical document
    assert roundtrip(encode_tree(back)) == doc


def test_tree_document_roundtrip_with_enclosure_masses(faithful_tree):
    doc = roundtrip(encode_tree(faithful_tree))
    back = decode_tree(doc)
    assert not back.mu_exact
    for a, b in zip(back.nodes, faithful_tree.nodes):
        assert (a.mu_lo, a.mu_hi) == (b.mu_lo, b.mu_hi)
        assert xr_cmp(a.vf, b.vf) == 0
    assert roundtrip(encode_tree(back)) == doc


def test_document_kind_and_version_guards(demo_tree, demo_cert):
    doc = encode_tree(demo_tree)
    with pytest.raises(SerializeError, match="not a cantor-tree"):
        decode_tree({**doc, "kind": "certificate"})
    with pytest.raises(SerializeError, match="version"):
        decode_tree({**doc, "version": "masscert/0"})
    cdoc = encode_certificate(demo_cert)
    with pytest.raises(SerializeError, match="not a certificate"):
        decode_certificate({**cdoc, "kind": "cantor-tree"})
    with pytest.raises(SerializeError, match="version"):
        decode_certificate({**cdoc, "version": "masscert/0"})


def test_to_json_is_deterministic(demo_tree):
    a = to_json(encode_tree(demo_tree))
    b = to_json(encode_tree(demo_tree))
    assert a == b
    assert a.endswith("\n") and '": ' not in a  # compact separators
    assert json.loads(a)["version"] == SCHEMA_VERSION


# --- certificate documents ----------------------------------------------------------


def test_certificate_roundtrip(demo_cert):
    doc = roundtrip(encode_certificate(demo_cert))
    back = decode_certificate(doc)
    assert back == demo_cert
    assert back.sampled == demo_cert.sampled


def test_certificate_roundtrip_without_sampling(demo_tree):
    from masscert.transference import make_certificate

    cert = make_certificate(demo_tree)
    back = decode_certificate(roundtrip(encode_certificate(cert)))
    assert back == cert and back.sampled is None


# --- re-verification of stored trees ---------------------------------------------------


def test_verify_fresh_documents(demo_tree, faithful_tree):
    for tree in (demo_tree, faithful_tree):
        _, report = verify_tree_document(roundtrip(encode_tree(tree)))
        assert report.ok
        assert report.flags_match and report.masses_match
        assert report.stored_conservation and report.core_ok
        assert report.flags == report.stored_flags


def test_verify_catches_tampered_mass(demo_tree):
    doc = roundtrip(encode_tree(demo_tree))
    leaf = next(n for n in doc["nodes"] if not n["children"])
    bumped = enc_frac(dec_frac(leaf["mu_lo"]) + F(1, 1000))
    leaf["mu_lo"] = leaf["mu_hi"] = bumped
    _, report = verify_tree_document(doc)
    assert not report.stored_conservation
    assert not report.ok


def test_verify_catches_tampered_ball(demo_tree):
    doc = roundtrip(encode_tree(demo_tree))
    node = doc["nodes"][5]
    node["ball"]["center"][0] = enc_frac(dec_frac(node["ball"]["center"][0]) + F(1, 7))
    _, report = verify_tree_document(doc)
    assert not report.ok
    assert not (report.flags_match and report.core_ok and report.masses_match)


def test_verify_catches_tampered_flag(demo_tree):
    doc = roundtrip(encode_tree(demo_tree))
    doc["flags"]["capture"] = False
    _, report = verify_tree_document(doc)
    assert not report.flags_match
    assert not report.ok
    assert report.stored_conservation  # masses were untouched


# --- files ------------------------------------------------------------------------------


def test_file_helpers(tmp_path, demo_cert):
    p = tmp_path / "cert.json"
    write_json(p, encode_certificate(demo_cert))
    assert decode_certificate(read_json(p)) == demo_cert
    c = tmp_path / "rows.csv"
    write_csv(c, ["q", "n"], [(1, 2), (3, 4)])
    assert c.read_text().splitlines() == ["q,n", "1,2", "3,4"]
