"""Relying party: mint nonce-bearing requests, accept claims exactly once.

The acceptance pipeline runs in a fixed order so its failure taxonomy is
deterministic and an untrusted authority's claim is never even decrypted:

  1. look up the submission's nonce (unknown / replayed / expired end here)
  2. trust: chain validation plus per-attribute authority for the
     description recorded when the nonce was minted
  3. cryptographic verification (signature over ciphertext, open, sealed
     nonce comparison)
  4. atomically consume the nonce; the claim is accepted only if this
     thread is the one that moved it from pending to consumed

A submission therefore carries the request nonce in clear next to the
claim: it is the correlation handle that selects the pending entry before
anything is decrypted. The sealed nonce stays authoritative; if the two
disagree the claim is rejected.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Any, Iterable, Literal

from . import encoding
from .clock import Clock, SYSTEM_CLOCK
from .core import (
    AttributeName,
    AttributeSet,
    Certificate,
    CertifiedClaim,
    ClaimRequest,
    KeyPair,
    Nonce,
    generate_nonce,
    verify_cic,
)
from .errors import (
    BadSignature,
    MalformedDocument,
    MalformedPayload,
    MalformedRequest,
    NonceMismatch,
    OpenFailure,
    RngFailure,
)
from .rng import RandomSource, SYSTEM_RNG
from .trust import SchemaRegistry, TrustStore, is_authoritative, validate_chain

DEFAULT_TTL_SECONDS = 300

Failure = Literal[
    "untrusted_authority",
    "bad_signature",
    "undecryptable",
    "nonce_mismatch",
    "nonce_unknown",
    "nonce_replayed",
    "expired",
]
FAILURES: frozenset[str] = frozenset(
    (
        "untrusted_authority",
        "bad_signature",
        "undecryptable",
        "nonce_mismatch",
        "nonce_unknown",
        "nonce_replayed",
        "expired",
    )
)


@dataclass(frozen=True)
class VerificationResult:
    accepted: bool
    attributes: AttributeSet | None = None
    failure: Failure | None = None
    reason: str = ""

    def __post_init__(self) -> None:
        if self.accepted and (self.attributes is None or self.failure is not None):
            raise ValueError("accepted result must carry attributes and no failure")
        if not self.accepted and self.failure is None:
            raise ValueError("rejected result must carry a failure")

    def to_canonical(self) -> dict[str, Any]:
        tree: dict[str, Any] = {"accepted": self.accepted}
        if self.attributes is not None:
            tree["attributes"] = self.attributes.to_canonical()
        if self.failure is not None:
            tree["failure"] = self.failure
        if self.reason:
            tree["reason"] = self.reason
        return tree

    @classmethod
    def from_canonical(cls, tree: Any) -> "VerificationResult":
        if not isinstance(tree, dict) or not isinstance(tree.get("accepted"), bool):
            raise MalformedDocument("verification result must carry a boolean 'accepted'")
        attributes = None
        if "attributes" in tree:
            attributes = AttributeSet.from_canonical(tree["attributes"])
        failure = tree.get("failure")
        if failure is not None and failure not in FAILURES:
            raise MalformedDocument(f"unknown verification failure {failure!r}")
        reason = tree.get("reason", "")
        if not isinstance(reason, str):
            raise MalformedDocument("verification reason must be a string")
        try:
            return cls(
                accepted=tree["accepted"],
                attributes=attributes,
                failure=failure,
                reason=reason,
            )
        except ValueError as exc:
            raise MalformedDocument(str(exc)) from exc


@dataclass(frozen=True)
class PendingEntry:
    description: tuple[AttributeName, ...]
    created_at: datetime
    ttl_seconds: int

    def expired_at(self, now: datetime) -> bool:
        return self.created_at + timedelta(seconds=self.ttl_seconds) < now


class NonceRegistry:
    """Single-use nonce bookkeeping with atomic check-and-act mutations.

    A nonce lives in at most one of pending/consumed. Consumed entries are
    retained for the same TTL, after which a replay fails as unknown rather
    than replayed; equally rejected, cheaper to store.
    """

    def __init__(self) -> None:
        self._pending: dict[bytes, PendingEntry] = {}
        self._consumed: dict[bytes, PendingEntry] = {}
        self._lock = threading.Lock()

    def insert(self, nonce: Nonce, entry: PendingEntry) -> None:
        with self._lock:
            self._evict_locked(entry.created_at)
            if nonce.value in self._pending or nonce.value in self._consumed:
                raise RngFailure("random source produced a nonce that is already live")
            self._pending[nonce.value] = entry

    def peek(self, nonce: Nonce, now: datetime) -> tuple[str, PendingEntry | None]:
        """Classify a nonce: pending, consumed, expired, or unknown."""
        with self._lock:
            entry = self._pending.get(nonce.value)
            if entry is not None:
                return ("expired", entry) if entry.expired_at(now) else ("pending", entry)
            entry = self._consumed.get(nonce.value)
            if entry is not None:
                return ("unknown", None) if entry.expired_at(now) else ("consumed", entry)
            return ("unknown", None)

    def consume_if_pending(self, nonce: Nonce, now: datetime) -> PendingEntry | None:
        """Move pending -> consumed exactly once; None when someone else won."""
        with self._lock:
            entry = self._pending.get(nonce.value)
            if entry is None or entry.expired_at(now):
                return None
            del self._pending[nonce.value]
            self._consumed[nonce.value] = entry
            return entry

    def evict_expired(self, now: datetime) -> int:
        with self._lock:
            return self._evict_locked(now)

    def _evict_locked(self, now: datetime) -> int:
        removed = 0
        for table in (self._pending, self._consumed):
            stale = [key for key, entry in table.items() if entry.expired_at(now)]
            for key in stale:
                del table[key]
            removed += len(stale)
        return removed

    def pending_count(self) -> int:
        with self._lock:
            return len(self._pending)


class RelyingParty:
    """One relying party: its certificate, keys, trust view, and nonce book."""

    def __init__(
        self,
        certificate: Certificate,
        enc_keys: KeyPair,
        trust_store: TrustStore,
        schema_registry: SchemaRegistry,
        *,
        intermediates: Iterable[Certificate] = (),
        clock: Clock = SYSTEM_CLOCK,
        rng: RandomSource = SYSTEM_RNG,
        ttl_seconds: int = DEFAULT_TTL_SECONDS,
    ) -> None:
        if enc_keys.usage != "encryption":
            raise ValueError("relying party decryption key pair must have encryption usage")
        self.certificate = certificate
        self._enc_keys = enc_keys
        self._trust_store = trust_store
        self.schema_registry = schema_registry
        self.intermediates = tuple(intermediates)
        self._clock = clock
        self._rng = rng
        self.ttl_seconds = ttl_seconds
        self.registry = NonceRegistry()

    @property
    def common_name(self) -> str:
        return self.certificate.subject_common_name

    @property
    def trust_store(self) -> TrustStore:
        return self._trust_store

    def set_trust_store(self, store: TrustStore) -> None:
        """Swap the trust snapshot (how revocations reach a running party)."""
        self._trust_store = store

    def create_request(
        self, attrs: Iterable[str], purpose: str | None = None
    ) -> ClaimRequest:
        names = tuple(AttributeName(a) for a in attrs)
        if not names:
            raise MalformedRequest("request description must be non-empty")
        if len(set(names)) != len(names):
            raise MalformedRequest("request description has duplicate names")
        self.schema_registry.require(names)
        nonce = generate_nonce(self._rng)
        self.registry.insert(
            nonce,
            PendingEntry(
                description=names,
                created_at=self._clock.now(),
                ttl_seconds=self.ttl_seconds,
            ),
        )
        return ClaimRequest(
            description=names,
            nonce=nonce,
            rp_certificate=self.certificate,
            purpose=purpose,
        )

    def accept_claim(self, claim: CertifiedClaim, nonce: Nonce) -> VerificationResult:
        now = self._clock.now()
        status, entry = self.registry.peek(nonce, now)
        if status == "unknown":
            return VerificationResult(False, failure="nonce_unknown", reason="nonce was never issued or has been evicted")
        if status == "consumed":
            return VerificationResult(False, failure="nonce_replayed", reason="nonce was already accepted once")
        if status == "expired":
            return VerificationResult(False, failure="expired", reason="request outlived its ttl")
        assert entry is not None

        chain = validate_chain(claim.aa_certificate, self.intermediates, self._trust_store, now)
        decision = is_authoritative(
            claim.aa_certificate, entry.description, self._trust_store, chain, self.schema_registry
        )
        if not decision.authoritative:
            return VerificationResult(False, failure="untrusted_authority", reason=decision.reason)

        try:
            attributes = verify_cic(claim, nonce, self._enc_keys.private)
        except BadSignature as exc:
            return VerificationResult(False, failure="bad_signature", reason=str(exc))
        except (OpenFailure, MalformedPayload) as exc:
            return VerificationResult(False, failure="undecryptable", reason=str(exc))
        except NonceMismatch as exc:
            return VerificationResult(False, failure="nonce_mismatch", reason=str(exc))

        if self.registry.consume_if_pending(nonce, now) is None:
            return VerificationResult(False, failure="nonce_replayed", reason="another submission consumed this nonce first")
        return VerificationResult(True, attributes=attributes)

    def evict_expired(self) -> int:
        return self.registry.evict_expired(self._clock.now())


def encode_submission(claim_bytes: bytes, nonce: Nonce) -> bytes:
    """Build the submit body around claim bytes kept verbatim.

    Key order ("claim" < "nonce") and the canonical claim encoding make the
    result canonical without re-serializing the claim.
    """
    return b'{"claim":' + claim_bytes + b',"nonce":"' + nonce.to_canonical().encode() + b'"}'


def decode_submission(body: bytes) -> tuple[CertifiedClaim, Nonce]:
    tree = encoding.decode_tree(body)
    claim = CertifiedClaim.from_canonical(encoding.expect_obj(tree, "claim"))
    nonce = Nonce.from_canonical(encoding.expect_str(tree, "nonce"))
    return claim, nonce
