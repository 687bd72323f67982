"""Protocol kernel: domain types, hybrid envelope, signatures, issue/verify.

A certified claim is built in a fixed order: the authority seals the
attributes (together with the relying party's nonce) to the relying party's
encryption key, then signs the resulting ciphertext. Verification runs the
same steps in reverse: signature over the ciphertext first, then open, then
nonce comparison. The signature binding the ciphertext is what stops a
malicious relying party from re-targeting a claim at someone else's request.

Everything here is pure or uses caller-supplied randomness; every type is
immutable after construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Any, Iterable, Literal, Mapping

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from . import encoding
from .clock import Clock, SYSTEM_CLOCK
from .errors import (
    BadSignature,
    EncryptionFailure,
    MalformedDocument,
    MalformedPayload,
    MalformedRequest,
    NonceMismatch,
    OpenFailure,
    SigningFailure,
    UnencodableValue,
)
from .rng import RandomSource, SYSTEM_RNG, read_exact

ENVELOPE_SCHEME = "x25519-hkdf-sha256+aes-256-gcm"
SIGNATURE_SCHEME = "ed25519"

NONCE_LEN = 16
KEY_LEN = 32
SIG_LEN = 64
TAG_LEN = 16
MAX_ATTRIBUTES = 64
MAX_TEXT_BYTES = 4096
MAX_PURPOSE_BYTES = 512
MAX_NAME_BYTES = 64

_NAME_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
_COMMON_NAME_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]{0,127}\Z")

KeyUsage = Literal["signature", "encryption"]
ValueKind = Literal["text", "integer", "date", "boolean"]


def valid_common_name(name: str) -> bool:
    return isinstance(name, str) and bool(_COMMON_NAME_RE.fullmatch(name))


class AttributeName(str):
    """Lowercase token naming an attribute, e.g. ``credit_score``."""

    def __new__(cls, value: str) -> "AttributeName":
        if not isinstance(value, str) or not _NAME_RE.fullmatch(value):
            raise MalformedDocument(f"invalid attribute name {value!r}")
        if len(value.encode("utf-8")) > MAX_NAME_BYTES:
            raise MalformedDocument(f"attribute name too long: {value!r}")
        return super().__new__(cls, value)


@dataclass(frozen=True)
class AttributeValue:
    """Tagged scalar; the tag decides the canonical JSON shape."""

    kind: ValueKind
    value: str | int | date | bool

    def __post_init__(self) -> None:
        if self.kind == "text":
            if not isinstance(self.value, str):
                raise UnencodableValue("text value must be a string")
            if len(self.value.encode("utf-8")) > MAX_TEXT_BYTES:
                raise UnencodableValue("text value exceeds 4096 bytes")
        elif self.kind == "integer":
            if isinstance(self.value, bool) or not isinstance(self.value, int):
                raise UnencodableValue("integer value must be an int")
            if not encoding.INT64_MIN <= self.value <= encoding.INT64_MAX:
                raise UnencodableValue("integer value outside signed 64-bit range")
        elif self.kind == "date":
            if not isinstance(self.value, date) or isinstance(self.value, datetime):
                raise UnencodableValue("date value must be a calendar date")
        elif self.kind == "boolean":
            if not isinstance(self.value, bool):
                raise UnencodableValue("boolean value must be a bool")
        else:
            raise UnencodableValue(f"unknown value kind {self.kind!r}")

    @classmethod
    def text(cls, value: str) -> "AttributeValue":
        return cls("text", value)

    @classmethod
    def integer(cls, value: int) -> "AttributeValue":
        return cls("integer", value)

    @classmethod
    def of_date(cls, value: date) -> "AttributeValue":
        return cls("date", value)

    @classmethod
    def boolean(cls, value: bool) -> "AttributeValue":
        return cls("boolean", value)

    def to_scalar(self) -> str | int | bool:
        if self.kind == "date":
            return encoding.encode_date(self.value)  # type: ignore[arg-type]
        return self.value  # type: ignore[return-value]

    @classmethod
    def from_scalar(cls, scalar: Any, kind: ValueKind | None = None) -> "AttributeValue":
        """Decode a bare JSON scalar; ``kind`` comes from the schema when known.

        Without a declared kind, strings decode as text. A date therefore
        round-trips as text unless schema context re-tags it, which is fine:
        both forms canonically encode to the same bytes.
        """
        if kind == "date":
            if not isinstance(scalar, str):
                raise MalformedDocument("date attribute must be a string scalar")
            return cls.of_date(encoding.decode_date(scalar))
        if isinstance(scalar, bool):
            value = cls.boolean(scalar)
        elif isinstance(scalar, int):
            value = cls.integer(scalar)
        elif isinstance(scalar, str):
            value = cls.text(scalar)
        else:
            raise MalformedDocument(f"unsupported attribute scalar {scalar!r}")
        if kind is not None and value.kind != kind:
            raise MalformedDocument(
                f"attribute scalar {scalar!r} does not match declared type {kind}"
            )
        return value


@dataclass(frozen=True)
class AttributeSet:
    """Immutable name-to-value mapping, kept sorted by name."""

    entries: tuple[tuple[AttributeName, AttributeValue], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.entries]
        if len(set(names)) != len(names):
            raise MalformedDocument("duplicate attribute names")
        if len(names) > MAX_ATTRIBUTES:
            raise MalformedDocument("attribute set exceeds 64 entries")
        if names != sorted(names):
            object.__setattr__(self, "entries", tuple(sorted(self.entries)))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, AttributeValue]) -> "AttributeSet":
        return cls(tuple((AttributeName(k), v) for k, v in mapping.items()))

    def names(self) -> tuple[AttributeName, ...]:
        return tuple(name for name, _ in self.entries)

    def get(self, name: str) -> AttributeValue | None:
        for key, value in self.entries:
            if key == name:
                return value
        return None

    def subset(self, names: Iterable[str]) -> "AttributeSet":
        wanted = set(names)
        return AttributeSet(tuple((n, v) for n, v in self.entries if n in wanted))

    def to_canonical(self) -> dict[str, Any]:
        return {name: value.to_scalar() for name, value in self.entries}

    @classmethod
    def from_canonical(cls, tree: Any, kinds: Mapping[str, ValueKind] | None = None) -> "AttributeSet":
        if not isinstance(tree, dict):
            raise MalformedDocument("attribute set must be an object")
        entries = []
        for raw_name, scalar in tree.items():
            name = AttributeName(raw_name)
            kind = kinds.get(name) if kinds else None
            entries.append((name, AttributeValue.from_scalar(scalar, kind)))
        return cls(tuple(entries))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Nonce:
    """16 fresh octets binding a claim to exactly one request."""

    value: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.value, bytes) or len(self.value) != NONCE_LEN:
            raise MalformedDocument("nonce must be exactly 16 octets")

    def to_canonical(self) -> str:
        return encoding.b64url_encode(self.value)

    @classmethod
    def from_canonical(cls, text: Any) -> "Nonce":
        if not isinstance(text, str):
            raise MalformedDocument("nonce must be a base64url string")
        return cls(encoding.b64url_decode(text))


def generate_nonce(rng: RandomSource = SYSTEM_RNG) -> Nonce:
    return Nonce(read_exact(rng, NONCE_LEN))


@dataclass(frozen=True)
class PublicKey:
    usage: KeyUsage
    raw: bytes

    def __post_init__(self) -> None:
        if self.usage not in ("signature", "encryption"):
            raise MalformedDocument(f"bad key usage {self.usage!r}")
        if not isinstance(self.raw, bytes) or len(self.raw) != KEY_LEN:
            raise MalformedDocument("public key must be 32 raw bytes")


@dataclass(frozen=True)
class PrivateKey:
    usage: KeyUsage
    raw: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if self.usage not in ("signature", "encryption"):
            raise MalformedDocument(f"bad key usage {self.usage!r}")
        if not isinstance(self.raw, bytes) or len(self.raw) != KEY_LEN:
            raise MalformedDocument("private key must be 32 raw bytes")


@dataclass(frozen=True)
class KeyPair:
    """Mathematically paired keys with a usage fixed at generation."""

    public: PublicKey
    private: PrivateKey
    usage: KeyUsage

    def __post_init__(self) -> None:
        if not (self.public.usage == self.private.usage == self.usage):
            raise MalformedDocument("key pair usage fields disagree")


def _raw_public(key: Ed25519PublicKey | X25519PublicKey) -> bytes:
    return key.public_bytes(
        encoding=serialization.Encoding.Raw,
        format=serialization.PublicFormat.Raw,
    )


def generate_keypair(usage: KeyUsage, rng: RandomSource = SYSTEM_RNG) -> KeyPair:
    seed = read_exact(rng, KEY_LEN)
    if usage == "signature":
        pub = _raw_public(Ed25519PrivateKey.from_private_bytes(seed).public_key())
    elif usage == "encryption":
        pub = _raw_public(X25519PrivateKey.from_private_bytes(seed).public_key())
    else:
        raise MalformedDocument(f"bad key usage {usage!r}")
    return KeyPair(PublicKey(usage, pub), PrivateKey(usage, seed), usage)


def derive_public(private: PrivateKey) -> PublicKey:
    if private.usage == "signature":
        raw = _raw_public(Ed25519PrivateKey.from_private_bytes(private.raw).public_key())
    else:
        raw = _raw_public(X25519PrivateKey.from_private_bytes(private.raw).public_key())
    return PublicKey(private.usage, raw)


# --- certificates -----------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """Binds a common name to a signature key and an encryption key.

    ``issuer_signature`` covers the canonical encoding of every other field.
    Self-signed certificates (subject == issuer) act as trust roots.
    """

    subject_common_name: str
    sig_public_key: PublicKey
    enc_public_key: PublicKey
    issuer_common_name: str
    not_before: datetime
    not_after: datetime
    issuer_signature: bytes

    def __post_init__(self) -> None:
        if not valid_common_name(self.subject_common_name):
            raise MalformedDocument(f"bad subject common name {self.subject_common_name!r}")
        if not valid_common_name(self.issuer_common_name):
            raise MalformedDocument(f"bad issuer common name {self.issuer_common_name!r}")
        if self.sig_public_key.usage != "signature":
            raise MalformedDocument("sig_public_key must have signature usage")
        if self.enc_public_key.usage != "encryption":
            raise MalformedDocument("enc_public_key must have encryption usage")
        if self.not_before >= self.not_after:
            raise MalformedDocument("certificate validity window is empty")
        if not isinstance(self.issuer_signature, bytes) or len(self.issuer_signature) != SIG_LEN:
            raise MalformedDocument("issuer signature must be 64 bytes")

    @property
    def self_signed(self) -> bool:
        return self.subject_common_name == self.issuer_common_name

    def tbs_canonical(self) -> dict[str, Any]:
        """Fields covered by the issuer signature."""
        return {
            "subject_common_name": self.subject_common_name,
            "sig_public_key": encoding.b64url_encode(self.sig_public_key.raw),
            "enc_public_key": encoding.b64url_encode(self.enc_public_key.raw),
            "issuer_common_name": self.issuer_common_name,
            "not_before": encoding.encode_timestamp(self.not_before),
            "not_after": encoding.encode_timestamp(self.not_after),
        }

    def to_canonical(self) -> dict[str, Any]:
        tree = self.tbs_canonical()
        tree["issuer_signature"] = encoding.b64url_encode(self.issuer_signature)
        return tree

    @classmethod
    def from_canonical(cls, tree: Any) -> "Certificate":
        return cls(
            subject_common_name=encoding.expect_str(tree, "subject_common_name"),
            sig_public_key=PublicKey(
                "signature", encoding.b64url_decode(encoding.expect_str(tree, "sig_public_key"))
            ),
            enc_public_key=PublicKey(
                "encryption", encoding.b64url_decode(encoding.expect_str(tree, "enc_public_key"))
            ),
            issuer_common_name=encoding.expect_str(tree, "issuer_common_name"),
            not_before=encoding.decode_timestamp(encoding.expect_str(tree, "not_before")),
            not_after=encoding.decode_timestamp(encoding.expect_str(tree, "not_after")),
            issuer_signature=encoding.b64url_decode(encoding.expect_str(tree, "issuer_signature")),
        )

    def signature_valid_under(self, issuer_pub: PublicKey) -> bool:
        return verify_sig(
            encoding.canonical_bytes(self.tbs_canonical()), self.issuer_signature, issuer_pub
        )

    def valid_at(self, now: datetime) -> bool:
        return self.not_before <= now <= self.not_after


def issue_certificate(
    subject_common_name: str,
    sig_public_key: PublicKey,
    enc_public_key: PublicKey,
    issuer_common_name: str,
    issuer_sign_private: PrivateKey,
    not_before: datetime,
    not_after: datetime,
) -> Certificate:
    """Create a certificate; self-signed when subject and issuer coincide."""
    tbs = {
        "subject_common_name": subject_common_name,
        "sig_public_key": encoding.b64url_encode(sig_public_key.raw),
        "enc_public_key": encoding.b64url_encode(enc_public_key.raw),
        "issuer_common_name": issuer_common_name,
        "not_before": encoding.encode_timestamp(not_before),
        "not_after": encoding.encode_timestamp(not_after),
    }
    signature = sign(encoding.canonical_bytes(tbs), issuer_sign_private)
    return Certificate(
        subject_common_name=subject_common_name,
        sig_public_key=sig_public_key,
        enc_public_key=enc_public_key,
        issuer_common_name=issuer_common_name,
        not_before=not_before,
        not_after=not_after,
        issuer_signature=signature,
    )


# --- requests, payloads, envelopes, claims ----------------------------------


@dataclass(frozen=True)
class ClaimRequest:
    """What a relying party asks for: description, nonce, its certificate."""

    description: tuple[AttributeName, ...]
    nonce: Nonce
    rp_certificate: Certificate
    purpose: str | None = None

    def __post_init__(self) -> None:
        if not self.description:
            raise MalformedRequest("request description must be non-empty")
        if len(set(self.description)) != len(self.description):
            raise MalformedRequest("request description has duplicate names")
        for name in self.description:
            if not isinstance(name, AttributeName):
                raise MalformedRequest(f"description entry {name!r} is not an attribute name")
        if self.purpose is not None:
            if not isinstance(self.purpose, str):
                raise MalformedRequest("purpose must be a string")
            if len(self.purpose.encode("utf-8")) > MAX_PURPOSE_BYTES:
                raise MalformedRequest("purpose exceeds 512 bytes")

    def to_canonical(self) -> dict[str, Any]:
        tree: dict[str, Any] = {
            "description": list(self.description),
            "nonce": self.nonce.to_canonical(),
            "rp_certificate": self.rp_certificate.to_canonical(),
        }
        if self.purpose is not None:
            tree["purpose"] = self.purpose
        return tree

    @classmethod
    def from_canonical(cls, tree: Any) -> "ClaimRequest":
        description = encoding.expect_list(tree, "description")
        purpose = tree.get("purpose") if isinstance(tree, dict) else None
        try:
            names = tuple(AttributeName(item) for item in description)
        except MalformedDocument as exc:
            raise MalformedRequest(str(exc)) from exc
        return cls(
            description=names,
            nonce=Nonce.from_canonical(encoding.expect_str(tree, "nonce")),
            rp_certificate=Certificate.from_canonical(encoding.expect_obj(tree, "rp_certificate")),
            purpose=purpose,
        )


@dataclass(frozen=True)
class ClaimPayload:
    """Attributes plus the request nonce; this is what gets sealed."""

    attributes: AttributeSet
    nonce: Nonce
    issued_at: datetime

    def __post_init__(self) -> None:
        if len(self.attributes) == 0:
            raise MalformedPayload("payload must carry at least one attribute")

    def to_canonical(self) -> dict[str, Any]:
        return {
            "attributes": self.attributes.to_canonical(),
            "nonce": self.nonce.to_canonical(),
            "issued_at": encoding.encode_timestamp(self.issued_at),
        }

    @classmethod
    def from_canonical(cls, tree: Any) -> "ClaimPayload":
        return cls(
            attributes=AttributeSet.from_canonical(encoding.expect_obj(tree, "attributes")),
            nonce=Nonce.from_canonical(encoding.expect_str(tree, "nonce")),
            issued_at=encoding.decode_timestamp(encoding.expect_str(tree, "issued_at")),
        )


@dataclass(frozen=True)
class Envelope:
    """Hybrid ciphertext: encapsulated key, sealed body, integrity tag."""

    scheme_id: str
    encapsulated_key: bytes
    body: bytes
    auth_tag: bytes

    def to_canonical(self) -> dict[str, Any]:
        return {
            "scheme_id": self.scheme_id,
            "encapsulated_key": encoding.b64url_encode(self.encapsulated_key),
            "body": encoding.b64url_encode(self.body),
            "auth_tag": encoding.b64url_encode(self.auth_tag),
        }

    @classmethod
    def from_canonical(cls, tree: Any) -> "Envelope":
        return cls(
            scheme_id=encoding.expect_str(tree, "scheme_id"),
            encapsulated_key=encoding.b64url_decode(encoding.expect_str(tree, "encapsulated_key")),
            body=encoding.b64url_decode(encoding.expect_str(tree, "body")),
            auth_tag=encoding.b64url_decode(encoding.expect_str(tree, "auth_tag")),
        )


@dataclass(frozen=True)
class CertifiedClaim:
    """Portable artifact: sealed payload, authority signature, authority cert.

    Self-contained by design; verifying needs nothing beyond the pending
    nonce and the relying party's own decryption key.
    """

    envelope: Envelope
    aa_signature: bytes
    aa_certificate: Certificate

    def to_canonical(self) -> dict[str, Any]:
        return {
            "envelope": self.envelope.to_canonical(),
            "aa_signature": encoding.b64url_encode(self.aa_signature),
            "aa_certificate": self.aa_certificate.to_canonical(),
        }

    @classmethod
    def from_canonical(cls, tree: Any) -> "CertifiedClaim":
        return cls(
            envelope=Envelope.from_canonical(encoding.expect_obj(tree, "envelope")),
            aa_signature=encoding.b64url_decode(encoding.expect_str(tree, "aa_signature")),
            aa_certificate=Certificate.from_canonical(encoding.expect_obj(tree, "aa_certificate")),
        )


def canonical_encode(value: Any) -> bytes:
    """Deterministic bytes for any domain type or plain JSON tree."""
    return encoding.canonical_bytes(_to_tree(value))


def _to_tree(value: Any) -> Any:
    if hasattr(value, "to_canonical"):
        return value.to_canonical()
    if isinstance(value, dict):
        return {key: _to_tree(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_tree(item) for item in value]
    if isinstance(value, datetime):
        return encoding.encode_timestamp(value)
    if isinstance(value, date):
        return encoding.encode_date(value)
    if isinstance(value, bytes):
        return encoding.b64url_encode(value)
    return value


def decode_claim_request(data: bytes) -> ClaimRequest:
    try:
        return ClaimRequest.from_canonical(encoding.decode_tree(data))
    except MalformedRequest:
        raise
    except MalformedDocument as exc:
        raise MalformedRequest(str(exc)) from exc


def decode_certified_claim(data: bytes) -> CertifiedClaim:
    return CertifiedClaim.from_canonical(encoding.decode_tree(data))


def decode_certificate(data: bytes) -> Certificate:
    return Certificate.from_canonical(encoding.decode_tree(data))


# --- signatures ---------------------------------------------------------------


def sign(message: bytes, signer_priv: PrivateKey) -> bytes:
    if signer_priv.usage != "signature":
        raise SigningFailure("private key usage is not signature")
    try:
        return Ed25519PrivateKey.from_private_bytes(signer_priv.raw).sign(message)
    except Exception as exc:
        raise SigningFailure(f"signing failed: {exc}") from exc


def verify_sig(message: bytes, signature: bytes, signer_pub: PublicKey) -> bool:
    if signer_pub.usage != "signature":
        return False
    if not isinstance(signature, bytes):
        return False
    try:
        Ed25519PublicKey.from_public_bytes(signer_pub.raw).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


# --- hybrid envelope ----------------------------------------------------------


def _envelope_keys(shared: bytes, encapsulated: bytes, recipient_raw: bytes) -> tuple[bytes, bytes]:
    okm = HKDF(
        algorithm=hashes.SHA256(),
        length=44,
        salt=encapsulated + recipient_raw,
        info=b"cic-envelope-v1",
    ).derive(shared)
    return okm[:32], okm[32:]


def seal_bytes(
    plaintext: bytes, recipient_enc_pub: PublicKey, rng: RandomSource = SYSTEM_RNG
) -> Envelope:
    """Seal arbitrary bytes: fresh X25519 encapsulation, then AES-256-GCM."""
    if recipient_enc_pub.usage != "encryption":
        raise EncryptionFailure("recipient key usage is not encryption")
    eph_seed = read_exact(rng, KEY_LEN)
    try:
        eph = X25519PrivateKey.from_private_bytes(eph_seed)
        encapsulated = _raw_public(eph.public_key())
        shared = eph.exchange(X25519PublicKey.from_public_bytes(recipient_enc_pub.raw))
        key, gcm_nonce = _envelope_keys(shared, encapsulated, recipient_enc_pub.raw)
        sealed = AESGCM(key).encrypt(gcm_nonce, plaintext, ENVELOPE_SCHEME.encode())
    except Exception as exc:
        raise EncryptionFailure(f"sealing failed: {exc}") from exc
    return Envelope(
        scheme_id=ENVELOPE_SCHEME,
        encapsulated_key=encapsulated,
        body=sealed[:-TAG_LEN],
        auth_tag=sealed[-TAG_LEN:],
    )


def open_bytes(envelope: Envelope, recipient_enc_priv: PrivateKey) -> bytes:
    """Inverse of :func:`seal_bytes`; any modified octet fails the tag check."""
    if recipient_enc_priv.usage != "encryption":
        raise OpenFailure("recipient key usage is not encryption")
    if envelope.scheme_id != ENVELOPE_SCHEME:
        raise OpenFailure(f"unknown envelope scheme {envelope.scheme_id!r}")
    if len(envelope.encapsulated_key) != KEY_LEN or len(envelope.auth_tag) != TAG_LEN:
        raise OpenFailure("envelope structure is malformed")
    try:
        priv = X25519PrivateKey.from_private_bytes(recipient_enc_priv.raw)
        recipient_raw = _raw_public(priv.public_key())
        shared = priv.exchange(X25519PublicKey.from_public_bytes(envelope.encapsulated_key))
        key, gcm_nonce = _envelope_keys(shared, envelope.encapsulated_key, recipient_raw)
        return AESGCM(key).decrypt(
            gcm_nonce, envelope.body + envelope.auth_tag, ENVELOPE_SCHEME.encode()
        )
    except InvalidTag as exc:
        raise OpenFailure("authentication tag check failed") from exc
    except OpenFailure:
        raise
    except Exception as exc:
        raise OpenFailure(f"envelope cannot be opened: {exc}") from exc


def seal(
    payload: ClaimPayload, recipient_enc_pub: PublicKey, rng: RandomSource = SYSTEM_RNG
) -> Envelope:
    return seal_bytes(canonical_encode(payload), recipient_enc_pub, rng)


def open_envelope(envelope: Envelope, recipient_enc_priv: PrivateKey) -> ClaimPayload:
    plaintext = open_bytes(envelope, recipient_enc_priv)
    try:
        return ClaimPayload.from_canonical(encoding.decode_tree(plaintext))
    except MalformedDocument as exc:
        raise MalformedPayload(f"sealed payload does not decode: {exc}") from exc


# --- issue / verify ------------------------------------------------------------


def issue_cic(
    attributes: AttributeSet,
    nonce: Nonce,
    rp_enc_pub: PublicKey,
    aa_sign_priv: PrivateKey,
    aa_cert: Certificate,
    *,
    clock: Clock = SYSTEM_CLOCK,
    rng: RandomSource = SYSTEM_RNG,
) -> CertifiedClaim:
    """Seal the payload to the relying party, then sign the ciphertext.

    The signature is computed over the canonical encoding of the envelope,
    never over the plaintext.
    """
    if len(attributes) == 0:
        raise MalformedPayload("refusing to certify an empty attribute set")
    if derive_public(aa_sign_priv).raw != aa_cert.sig_public_key.raw:
        raise SigningFailure("signing key does not pair with the presented certificate")
    payload = ClaimPayload(attributes=attributes, nonce=nonce, issued_at=clock.now())
    envelope = seal(payload, rp_enc_pub, rng)
    signature = sign(canonical_encode(envelope), aa_sign_priv)
    return CertifiedClaim(envelope=envelope, aa_signature=signature, aa_certificate=aa_cert)


def verify_cic(
    claim: CertifiedClaim, expected_nonce: Nonce, rp_enc_priv: PrivateKey
) -> AttributeSet:
    """Fixed verification order: signature, then open, then nonce.

    The caller is responsible for having already decided whether the
    authority named in ``claim.aa_certificate`` is trusted.
    """
    if not verify_sig(
        canonical_encode(claim.envelope), claim.aa_signature, claim.aa_certificate.sig_public_key
    ):
        raise BadSignature("authority signature does not cover this envelope")
    payload = open_envelope(claim.envelope, rp_enc_priv)
    if payload.nonce.value != expected_nonce.value:
        raise NonceMismatch("sealed nonce does not match the expected nonce")
    return payload.attributes
