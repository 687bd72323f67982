"""Canonical encoding checked against an independently written serializer."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cic import encoding
from cic.core import AttributeSet, AttributeValue, canonical_encode
from cic.errors import MalformedDocument, UnencodableValue


# Reference serializer, written from the format rules alone: manual string
# assembly, its own escaping table, keys ordered by their UTF-8 bytes.
def _ref_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\b":
            out.append("\\b")
        elif ch == "\f":
            out.append("\\f")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _ref(value) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return _ref_string(value)
    if isinstance(value, list):
        return "[" + ",".join(_ref(v) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted(value.items(), key=lambda kv: kv[0].encode("utf-8"))
        return "{" + ",".join(_ref_string(k) + ":" + _ref(v) for k, v in items) + "}"
    raise TypeError(value)


_scalars = st.one_of(
    st.booleans(),
    st.integers(min_value=encoding.INT64_MIN, max_value=encoding.INT64_MAX),
    st.text(max_size=40),
)
_trees = st.recursive(
    _scalars,
    lambda inner: st.one_of(
        st.lists(inner, max_size=5),
        st.dictionaries(st.text(max_size=12), inner, max_size=5),
    ),
    max_leaves=25,
)


@given(_trees)
def test_matches_reference_serializer(tree):
    assert encoding.canonical_bytes(tree) == _ref(tree).encode("utf-8")


@given(_trees)
def test_encoding_is_pure(tree):
    assert encoding.canonical_bytes(tree) == encoding.canonical_bytes(tree)


@given(_trees)
def test_decode_inverts_encode(tree):
    assert encoding.decode_tree(encoding.canonical_bytes(tree)) == tree


def test_sorted_keys_no_whitespace():
    assert encoding.canonical_bytes({"b": 1, "a": "x"}) == b'{"a":"x","b":1}'


def test_empty_attribute_set():
    assert encoding.canonical_bytes({}) == b"{}"


def test_attribute_set_example_matches_reference():
    attrs = AttributeSet.from_mapping(
        {"credit_score": AttributeValue.integer(589), "name": AttributeValue.text("John Davis")}
    )
    encoded = canonical_encode(attrs)
    assert encoded == _ref(attrs.to_canonical()).encode("utf-8")
    assert encoded == b'{"credit_score":589,"name":"John Davis"}'


def test_non_ascii_keys_sorted_by_byte_order():
    # UTF-8 preserves code point order, so byte order == code point order.
    tree = {"é": 1, "z": 2, "a": 3}
    assert encoding.canonical_bytes(tree) == '{"a":3,"z":2,"é":1}'.encode("utf-8")


@pytest.mark.parametrize("bad", [1.5, float("nan"), None, {"k": None}, {"k": 1.0}, {1: "x"}])
def test_unencodable_values_rejected(bad):
    with pytest.raises(UnencodableValue):
        encoding.canonical_bytes(bad)


def test_int64_bounds():
    encoding.canonical_bytes({"v": encoding.INT64_MAX})
    encoding.canonical_bytes({"v": encoding.INT64_MIN})
    with pytest.raises(UnencodableValue):
        encoding.canonical_bytes({"v": encoding.INT64_MAX + 1})


def test_duplicate_keys_rejected_on_decode():
    with pytest.raises(MalformedDocument):
        encoding.decode_tree(b'{"a":1,"a":2}')


@pytest.mark.parametrize("raw", [b"", b"{", b"\xff\xfe", b"[1,]"])
def test_garbage_rejected_on_decode(raw):
    with pytest.raises(MalformedDocument):
        encoding.decode_tree(raw)


@given(st.binary(max_size=64))
def test_b64url_round_trip(raw):
    text = encoding.b64url_encode(raw)
    assert "=" not in text
    assert encoding.b64url_decode(text) == raw


@pytest.mark.parametrize("bad", ["a=", "a b", "a+b", "a/b", "!!!", "abcde"])
def test_b64url_rejects_non_canonical(bad):
    with pytest.raises(MalformedDocument):
        encoding.b64url_decode(bad)


def test_b64url_rejects_nonzero_slack_bits():
    # 16 raw bytes encode to 22 characters whose last character carries only
    # 2 meaningful bits; a flipped slack bit must not decode to the same
    # value (every value has exactly one accepted encoding).
    text = encoding.b64url_encode(b"\x00" * 16)
    assert text == "AAAAAAAAAAAAAAAAAAAAAA"
    with pytest.raises(MalformedDocument):
        encoding.b64url_decode(text[:-1] + "B")  # same 128 bits, different slack
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_"
    accepted = 0
    for ch in alphabet:
        try:
            encoding.b64url_decode(text[:-1] + ch)
            accepted += 1
        except MalformedDocument:
            pass
    assert accepted == 4  # exactly the codes whose slack bits are zero


def test_timestamp_round_trip():
    from datetime import datetime, timezone

    moment = datetime(2020, 5, 17, 13, 0, 9, tzinfo=timezone.utc)
    text = encoding.encode_timestamp(moment)
    assert text == "2020-05-17T13:00:09Z"
    assert encoding.decode_timestamp(text) == moment


@pytest.mark.parametrize("bad", ["2020-05-17 13:00:09", "2020-05-17T13:00:09+00:00", "not a time"])
def test_timestamp_rejects_non_canonical(bad):
    with pytest.raises(MalformedDocument):
        encoding.decode_timestamp(bad)


def test_date_round_trip():
    from datetime import date

    assert encoding.decode_date(encoding.encode_date(date(1980, 5, 17))) == date(1980, 5, 17)
    with pytest.raises(MalformedDocument):
        encoding.decode_date("1980/05/17")
