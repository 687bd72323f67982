"""Kernel: nonces, keys, envelopes, signatures, certificates, issue/verify."""

from __future__ import annotations

from dataclasses import replace
from datetime import date, datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cic import core
from cic.clock import ManualClock
from cic.core import (
    AttributeName,
    AttributeSet,
    AttributeValue,
    CertifiedClaim,
    ClaimPayload,
    ClaimRequest,
    Envelope,
    canonical_encode,
    generate_keypair,
    generate_nonce,
    issue_certificate,
    issue_cic,
    open_bytes,
    open_envelope,
    seal,
    seal_bytes,
    sign,
    verify_cic,
    verify_sig,
)
from cic.errors import (
    BadSignature,
    MalformedDocument,
    MalformedPayload,
    MalformedRequest,
    NonceMismatch,
    OpenFailure,
    RngFailure,
    SigningFailure,
)
from cic.rng import FailingRandomSource, FixedRandomSource, SeededRandomSource

CLOCK = ManualClock(datetime(2020, 1, 1, tzinfo=timezone.utc))

JOHN = AttributeSet.from_mapping(
    {"name": AttributeValue.text("John Davis"), "credit_score": AttributeValue.integer(589)}
)


def _keys(seed: int):
    rng = SeededRandomSource(seed)
    return generate_keypair("signature", rng), generate_keypair("encryption", rng)


# --- nonces -----------------------------------------------------------------


def test_nonce_is_16_octets():
    rng = SeededRandomSource(1)
    assert len(generate_nonce(rng).value) == 16


def test_two_draws_differ():
    rng = SeededRandomSource(2)
    assert generate_nonce(rng).value != generate_nonce(rng).value


def test_fixed_seed_repeats_nonce():
    assert generate_nonce(SeededRandomSource(3)).value == generate_nonce(SeededRandomSource(3)).value


def test_broken_source_repeats_forever():
    rng = FixedRandomSource(b"\x07" * 16)
    assert generate_nonce(rng).value == generate_nonce(rng).value == b"\x07" * 16


def test_ten_thousand_draws_all_distinct():
    rng = SeededRandomSource(4)
    seen = {generate_nonce(rng).value for _ in range(10_000)}
    assert len(seen) == 10_000


def test_failing_source_raises():
    with pytest.raises(RngFailure):
        generate_nonce(FailingRandomSource())


# --- signatures ---------------------------------------------------------------


def test_sign_verify_round_trip():
    sig_keys, _ = _keys(10)
    message = b"attribute bytes"
    signature = sign(message, sig_keys.private)
    assert verify_sig(message, signature, sig_keys.public)


def test_modified_message_fails():
    sig_keys, _ = _keys(11)
    signature = sign(b"m", sig_keys.private)
    assert not verify_sig(b"m2", signature, sig_keys.public)


def test_wrong_key_fails():
    a, _ = _keys(12)
    b, _ = _keys(13)
    signature = sign(b"m", a.private)
    assert not verify_sig(b"m", signature, b.public)


def test_malformed_signature_is_false_not_error():
    sig_keys, _ = _keys(14)
    assert not verify_sig(b"m", b"short", sig_keys.public)
    assert not verify_sig(b"m", b"\x00" * 64, sig_keys.public)


def test_sign_requires_signature_usage():
    _, enc_keys = _keys(15)
    with pytest.raises(SigningFailure):
        sign(b"m", enc_keys.private)


def test_verify_with_encryption_key_is_false():
    sig_keys, enc_keys = _keys(16)
    signature = sign(b"m", sig_keys.private)
    assert not verify_sig(b"m", signature, enc_keys.public)


# --- envelopes -----------------------------------------------------------------


def _payload(nonce_seed: int = 20) -> ClaimPayload:
    return ClaimPayload(
        attributes=JOHN, nonce=generate_nonce(SeededRandomSource(nonce_seed)), issued_at=CLOCK.now()
    )


def test_seal_open_round_trip():
    _, enc = _keys(21)
    payload = _payload()
    opened = open_envelope(seal(payload, enc.public, SeededRandomSource(1)), enc.private)
    assert canonical_encode(opened) == canonical_encode(payload)


def test_sealing_twice_differs():
    _, enc = _keys(22)
    payload = _payload()
    rng = SeededRandomSource(5)
    seen = set()
    for _ in range(100):
        env = seal(payload, enc.public, rng)
        seen.add((env.encapsulated_key, env.body, env.auth_tag))
    assert len(seen) == 100


def test_open_with_wrong_key_fails():
    _, enc_a = _keys(23)
    _, enc_b = _keys(24)
    env = seal(_payload(), enc_a.public, SeededRandomSource(6))
    with pytest.raises(OpenFailure):
        open_envelope(env, enc_b.private)


def test_open_fails_for_every_other_key():
    _, sealed_to = _keys(25)
    env = seal(_payload(), sealed_to.public, SeededRandomSource(7))
    for seed in range(26, 36):
        _, other = _keys(seed)
        with pytest.raises(OpenFailure):
            open_envelope(env, other.private)
    assert open_envelope(env, sealed_to.private)


def test_bit_flips_always_rejected():
    # Any single flipped bit in body or tag must fail the open.
    _, enc = _keys(36)
    env = seal(_payload(), enc.public, SeededRandomSource(8))
    flip_rng = SeededRandomSource(9)
    sealed = env.body + env.auth_tag
    rejections = 0
    trials = 1200
    for _ in range(trials):
        position = int.from_bytes(flip_rng.read(4), "big") % (len(sealed) * 8)
        mangled = bytearray(sealed)
        mangled[position // 8] ^= 1 << (position % 8)
        flipped = Envelope(
            scheme_id=env.scheme_id,
            encapsulated_key=env.encapsulated_key,
            body=bytes(mangled[:-16]),
            auth_tag=bytes(mangled[-16:]),
        )
        try:
            open_envelope(flipped, enc.private)
        except OpenFailure:
            rejections += 1
    assert rejections == trials


def test_truncated_envelope_fails():
    _, enc = _keys(37)
    env = seal(_payload(), enc.public, SeededRandomSource(10))
    truncated = Envelope(
        scheme_id=env.scheme_id,
        encapsulated_key=env.encapsulated_key[:16],
        body=env.body,
        auth_tag=env.auth_tag,
    )
    with pytest.raises(OpenFailure):
        open_envelope(truncated, enc.private)
    with pytest.raises(OpenFailure):
        open_envelope(replace(env, body=b""), enc.private)


def test_unknown_scheme_fails():
    _, enc = _keys(38)
    env = seal(_payload(), enc.public, SeededRandomSource(11))
    with pytest.raises(OpenFailure):
        open_envelope(replace(env, scheme_id="rot13"), enc.private)


def test_decrypts_but_bad_payload_is_malformed():
    _, enc = _keys(39)
    env = seal_bytes(b"not a payload document", enc.public, SeededRandomSource(12))
    assert open_bytes(env, enc.private) == b"not a payload document"
    with pytest.raises(MalformedPayload):
        open_envelope(env, enc.private)


# --- issue / verify -------------------------------------------------------------


def _authority(seed: int):
    sig, enc = _keys(seed)
    cert = issue_certificate(
        "firstnational.example", sig.public, enc.public, "firstnational.example",
        sig.private,
        datetime(2019, 1, 1, tzinfo=timezone.utc),
        datetime(2030, 1, 1, tzinfo=timezone.utc),
    )
    return sig, cert


def test_issue_verify_returns_exact_attributes():
    aa_sig, aa_cert = _authority(40)
    _, rp_enc = _keys(41)
    nonce = generate_nonce(SeededRandomSource(42))
    claim = issue_cic(JOHN, nonce, rp_enc.public, aa_sig.private, aa_cert,
                      clock=CLOCK, rng=SeededRandomSource(43))
    attributes = verify_cic(claim, nonce, rp_enc.private)
    assert attributes.to_canonical() == {"credit_score": 589, "name": "John Davis"}


def test_empty_attribute_set_refused_before_sealing():
    aa_sig, aa_cert = _authority(44)
    _, rp_enc = _keys(45)
    with pytest.raises(MalformedPayload):
        issue_cic(AttributeSet(()), generate_nonce(SeededRandomSource(46)),
                  rp_enc.public, aa_sig.private, aa_cert, clock=CLOCK)


def test_issue_for_x_not_readable_by_y():
    aa_sig, aa_cert = _authority(47)
    _, rp_x = _keys(48)
    _, rp_y = _keys(49)
    nonce = generate_nonce(SeededRandomSource(50))
    claim = issue_cic(JOHN, nonce, rp_x.public, aa_sig.private, aa_cert,
                      clock=CLOCK, rng=SeededRandomSource(51))
    with pytest.raises(OpenFailure):
        verify_cic(claim, nonce, rp_y.private)
    assert verify_cic(claim, nonce, rp_x.private)


def test_wrong_expected_nonce_is_mismatch():
    aa_sig, aa_cert = _authority(52)
    _, rp_enc = _keys(53)
    nonce = generate_nonce(SeededRandomSource(54))
    other = generate_nonce(SeededRandomSource(55))
    claim = issue_cic(JOHN, nonce, rp_enc.public, aa_sig.private, aa_cert,
                      clock=CLOCK, rng=SeededRandomSource(56))
    with pytest.raises(NonceMismatch):
        verify_cic(claim, other, rp_enc.private)


def test_resealed_envelope_keeps_signature_fails():
    # The signature binds the ciphertext: swap the envelope, keep the
    # signature, and verification must die at the signature step.
    aa_sig, aa_cert = _authority(57)
    _, rp_a = _keys(58)
    _, rp_b = _keys(59)
    nonce = generate_nonce(SeededRandomSource(60))
    claim = issue_cic(JOHN, nonce, rp_a.public, aa_sig.private, aa_cert,
                      clock=CLOCK, rng=SeededRandomSource(61))
    plaintext = open_bytes(claim.envelope, rp_a.private)
    resealed = CertifiedClaim(
        envelope=seal_bytes(plaintext, rp_b.public, SeededRandomSource(62)),
        aa_signature=claim.aa_signature,
        aa_certificate=claim.aa_certificate,
    )
    with pytest.raises(BadSignature):
        verify_cic(resealed, nonce, rp_b.private)


def test_issue_requires_matching_certificate():
    aa_sig, _ = _authority(63)
    other_sig, other_cert = _authority(64)
    _, rp_enc = _keys(65)
    with pytest.raises(SigningFailure):
        issue_cic(JOHN, generate_nonce(SeededRandomSource(66)), rp_enc.public,
                  aa_sig.private, other_cert, clock=CLOCK)


# --- certificates ----------------------------------------------------------------


def test_certificate_signature_and_window():
    sig, cert = _authority(67)
    assert cert.signature_valid_under(cert.sig_public_key)
    assert cert.self_signed
    assert cert.valid_at(datetime(2020, 6, 1, tzinfo=timezone.utc))
    assert not cert.valid_at(datetime(2031, 1, 1, tzinfo=timezone.utc))


def test_tampered_certificate_field_breaks_signature():
    _, cert = _authority(68)
    altered = replace(cert, subject_common_name="evil.example")
    assert not altered.signature_valid_under(cert.sig_public_key)


def test_certificate_window_must_be_ordered():
    sig, enc = _keys(69)
    with pytest.raises(MalformedDocument):
        issue_certificate(
            "a.example", sig.public, enc.public, "a.example", sig.private,
            datetime(2021, 1, 1, tzinfo=timezone.utc),
            datetime(2020, 1, 1, tzinfo=timezone.utc),
        )


# --- domain type validation --------------------------------------------------------


@pytest.mark.parametrize("bad", ["", "Name", "9lives", "has space", "x" * 65, "emoji🙂"])
def test_invalid_attribute_names_rejected(bad):
    with pytest.raises(MalformedDocument):
        AttributeName(bad)


def test_request_rejects_duplicates_and_empties(fx):
    nonce = generate_nonce(SeededRandomSource(70))
    with pytest.raises(MalformedRequest):
        ClaimRequest(description=(), nonce=nonce, rp_certificate=fx.rp_cert)
    name = AttributeName("name")
    with pytest.raises(MalformedRequest):
        ClaimRequest(description=(name, name), nonce=nonce, rp_certificate=fx.rp_cert)


def test_request_purpose_bounded(fx):
    nonce = generate_nonce(SeededRandomSource(71))
    with pytest.raises(MalformedRequest):
        ClaimRequest(
            description=(AttributeName("name"),),
            nonce=nonce,
            rp_certificate=fx.rp_cert,
            purpose="p" * 513,
        )


def test_text_value_bounded():
    from cic.errors import UnencodableValue

    AttributeValue.text("x" * 4096)
    with pytest.raises(UnencodableValue):
        AttributeValue.text("x" * 4097)


def test_attribute_set_sorted_and_capped():
    attrs = AttributeSet.from_mapping(
        {"zeta": AttributeValue.integer(1), "alpha": AttributeValue.integer(2)}
    )
    assert attrs.names() == ("alpha", "zeta")
    too_many = {f"a{i:02d}": AttributeValue.integer(i) for i in range(65)}
    with pytest.raises(MalformedDocument):
        AttributeSet.from_mapping(too_many)


# --- wire round trips ----------------------------------------------------------------


def test_claim_wire_round_trip():
    aa_sig, aa_cert = _authority(72)
    _, rp_enc = _keys(73)
    nonce = generate_nonce(SeededRandomSource(74))
    claim = issue_cic(JOHN, nonce, rp_enc.public, aa_sig.private, aa_cert,
                      clock=CLOCK, rng=SeededRandomSource(75))
    wire = canonical_encode(claim)
    decoded = core.decode_certified_claim(wire)
    assert canonical_encode(decoded) == wire
    assert verify_cic(decoded, nonce, rp_enc.private)


def test_request_wire_round_trip(fx):
    request = ClaimRequest(
        description=(AttributeName("name"), AttributeName("credit_score")),
        nonce=generate_nonce(SeededRandomSource(76)),
        rp_certificate=fx.rp_cert,
        purpose="loan application",
    )
    wire = canonical_encode(request)
    decoded = core.decode_claim_request(wire)
    assert canonical_encode(decoded) == wire


def test_duplicate_names_on_wire_rejected(fx):
    request = ClaimRequest(
        description=(AttributeName("name"),),
        nonce=generate_nonce(SeededRandomSource(77)),
        rp_certificate=fx.rp_cert,
    )
    wire = canonical_encode(request).replace(b'["name"]', b'["name","name"]')
    with pytest.raises(MalformedRequest):
        core.decode_claim_request(wire)


# --- properties ------------------------------------------------------------------------


_names = st.from_regex(r"[a-z][a-z0-9_]{0,20}", fullmatch=True).map(AttributeName)
_values = st.one_of(
    st.text(max_size=120).map(AttributeValue.text),
    st.integers(min_value=-(2**63), max_value=2**63 - 1).map(AttributeValue.integer),
    st.dates(min_value=date(1900, 1, 1), max_value=date(2100, 1, 1)).map(AttributeValue.of_date),
    st.booleans().map(AttributeValue.boolean),
)
_attr_sets = st.dictionaries(_names, _values, min_size=1, max_size=6).map(AttributeSet.from_mapping)


@settings(max_examples=60, deadline=None)
@given(attrs=_attr_sets, seed=st.integers(min_value=0, max_value=2**31), data=st.data())
def test_round_trip_property(attrs, seed, data):
    rng = SeededRandomSource(seed)
    aa_sig = generate_keypair("signature", rng)
    rp_enc = generate_keypair("encryption", rng)
    cert = issue_certificate(
        "authority.example", aa_sig.public,
        generate_keypair("encryption", rng).public,
        "authority.example", aa_sig.private,
        datetime(2019, 1, 1, tzinfo=timezone.utc),
        datetime(2030, 1, 1, tzinfo=timezone.utc),
    )
    nonce = generate_nonce(rng)
    claim = issue_cic(attrs, nonce, rp_enc.public, aa_sig.private, cert, clock=CLOCK, rng=rng)
    returned = verify_cic(claim, nonce, rp_enc.private)
    assert canonical_encode(returned) == canonical_encode(attrs)


@settings(max_examples=40, deadline=None)
@given(attrs=_attr_sets)
def test_attribute_set_canonical_decode_round_trip(attrs):
    tree = attrs.to_canonical()
    decoded = AttributeSet.from_canonical(tree)
    assert canonical_encode(decoded) == canonical_encode(attrs)
