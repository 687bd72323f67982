"""Attribute authority: authenticate the subject, certify exactly what was asked.

The handler is deliberately narrow. It authenticates before touching the
request, parses the request as untrusted wire bytes, refuses to issue
anything when even one requested attribute is missing, and never discloses
an attribute the request did not name. It keeps no state about relying
parties; the embedded certificate is used for sealing and then forgotten.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from typing import Any, Iterable, Protocol

from . import encoding
from .clock import Clock, SYSTEM_CLOCK
from .core import (
    AttributeSet,
    CertifiedClaim,
    Certificate,
    ClaimRequest,
    KeyPair,
    canonical_encode,
    issue_cic,
)
from .errors import (
    AttributeUnavailable,
    AuthenticationFailed,
    MalformedDocument,
    MalformedRequest,
)
from .rng import RandomSource, SYSTEM_RNG
from .trust import SchemaRegistry, _atomic_write


def hash_token(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SubjectRecord:
    subject_id: str
    attributes: AttributeSet
    auth_tokens: frozenset[str]  # sha-256 hex digests of bearer tokens

    def to_canonical(self) -> dict[str, Any]:
        return {
            "subject_id": self.subject_id,
            "attributes": self.attributes.to_canonical(),
            "auth_tokens": sorted(self.auth_tokens),
        }


class AttributeStore:
    """File-backed map of subject records with atomic write-replace saves."""

    def __init__(self, records: Iterable[SubjectRecord] = (), path: str | None = None) -> None:
        self._records: dict[str, SubjectRecord] = {}
        self._path = path
        self._write_lock = threading.Lock()
        for record in records:
            if record.subject_id in self._records:
                raise MalformedDocument(f"duplicate subject id {record.subject_id!r}")
            self._records[record.subject_id] = record

    def get(self, subject_id: str) -> SubjectRecord | None:
        return self._records.get(subject_id)

    def subject_for_token_hash(self, token_hash: str) -> str | None:
        for record in self._records.values():
            if token_hash in record.auth_tokens:
                return record.subject_id
        return None

    def put(self, record: SubjectRecord) -> None:
        with self._write_lock:
            records = dict(self._records)
            records[record.subject_id] = record
            self._records = records
            if self._path:
                self._save_locked()

    def _save_locked(self) -> None:
        assert self._path is not None
        _atomic_write(self._path, canonical_encode(self))

    def save(self, path: str | None = None) -> None:
        with self._write_lock:
            if path is not None:
                self._path = path
            self._save_locked()

    def to_canonical(self) -> dict[str, Any]:
        return {
            "records": {
                sid: self._records[sid].to_canonical() for sid in sorted(self._records)
            }
        }

    @classmethod
    def from_canonical(cls, tree: Any, registry: SchemaRegistry, path: str | None = None) -> "AttributeStore":
        records_tree = encoding.expect_obj(tree, "records")
        records = []
        for subject_id, entry in records_tree.items():
            attributes = AttributeSet.from_canonical(
                encoding.expect_obj(entry, "attributes"), kinds=registry.kinds()
            )
            registry.require(attributes.names())
            tokens = encoding.expect_list(entry, "auth_tokens")
            if not all(isinstance(t, str) for t in tokens):
                raise MalformedDocument(f"auth tokens for {subject_id!r} must be hash strings")
            records.append(
                SubjectRecord(
                    subject_id=subject_id,
                    attributes=attributes,
                    auth_tokens=frozenset(tokens),
                )
            )
        return cls(records, path=path)

    @classmethod
    def load(cls, path: str, registry: SchemaRegistry) -> "AttributeStore":
        with open(path, "rb") as fh:
            return cls.from_canonical(encoding.decode_tree(fh.read()), registry, path=path)


class Authenticator(Protocol):
    """How subjects prove who they are is deployment-specific; swap freely."""

    def authenticate(self, credential: str) -> str:
        """Map a credential to a subject id or raise AuthenticationFailed."""
        ...


class BearerTokenAuthenticator:
    """Reference authenticator: hashed bearer tokens stored per subject."""

    def __init__(self, store: AttributeStore) -> None:
        self._store = store

    def authenticate(self, credential: str) -> str:
        if not isinstance(credential, str) or not credential:
            raise AuthenticationFailed("missing bearer credential")
        subject_id = self._store.subject_for_token_hash(hash_token(credential))
        if subject_id is None:
            raise AuthenticationFailed("credential does not map to any subject")
        return subject_id


class AttributeAuthority:
    """Issues certified claims about the subjects it holds records for."""

    def __init__(
        self,
        certificate: Certificate,
        sign_keys: KeyPair,
        store: AttributeStore,
        schema_registry: SchemaRegistry,
        *,
        clock: Clock = SYSTEM_CLOCK,
        rng: RandomSource = SYSTEM_RNG,
        authenticator: Authenticator | None = None,
    ) -> None:
        if sign_keys.usage != "signature":
            raise MalformedDocument("authority signing key pair must have signature usage")
        self.certificate = certificate
        self._sign_keys = sign_keys
        self.store = store
        self.schema_registry = schema_registry
        self._clock = clock
        self._rng = rng
        self.authenticator = authenticator or BearerTokenAuthenticator(store)

    def authenticate_subject(self, credential: str) -> str:
        return self.authenticator.authenticate(credential)

    def parse_request(self, body: bytes) -> ClaimRequest:
        """Decode the issue body ``{"request": <claim request>}``."""
        try:
            tree = encoding.decode_tree(body)
            request_tree = encoding.expect_obj(tree, "request")
            return ClaimRequest.from_canonical(request_tree)
        except MalformedRequest:
            raise
        except MalformedDocument as exc:
            raise MalformedRequest(str(exc)) from exc

    def handle_issue(self, body: bytes, credential: str) -> CertifiedClaim:
        """Authenticate, parse, select exactly the requested attributes, issue.

        All-or-nothing: a single missing attribute aborts the issuance, so a
        partial claim can never weaken what the relying party thinks it got.
        """
        subject_id = self.authenticate_subject(credential)
        request = self.parse_request(body)
        self.schema_registry.require(request.description)
        record = self.store.get(subject_id)
        if record is None:
            raise AttributeUnavailable(f"no attribute record for subject {subject_id!r}")
        missing = [name for name in request.description if record.attributes.get(name) is None]
        if missing:
            raise AttributeUnavailable(
                f"subject record lacks requested attributes: {', '.join(sorted(missing))}"
            )
        selected = record.attributes.subset(request.description)
        return self._issue(selected, request)

    def _issue(self, attributes: AttributeSet, request: ClaimRequest) -> CertifiedClaim:
        return issue_cic(
            attributes,
            request.nonce,
            request.rp_certificate.enc_public_key,
            self._sign_keys.private,
            self.certificate,
            clock=self._clock,
            rng=self._rng,
        )
