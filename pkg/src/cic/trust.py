"""Deciding whether an authority may certify a given set of attributes.

Two independent mechanisms grant authority, checked in a fixed order:

  1. whitelist: the authority's common name is directly listed for the
     attribute (checked first);
  2. endorsement: some certificate in the authority's validated chain
     belongs to an intermediary listed as an endorser for the attribute
     (the industry-association pattern).

Revoked names lose on every path. The chain itself must lead back to a
self-signed root the verifier holds, within a small fixed depth.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Any, Iterable, Literal, Mapping

from . import encoding
from .core import (
    AttributeName,
    Certificate,
    ValueKind,
    canonical_encode,
    valid_common_name,
)
from .errors import MalformedDocument, UnknownAttribute

MAX_CHAIN_LEN = 4

ChainFailure = Literal["expired", "bad_signature", "no_root", "too_deep", "revoked"]

# Worst failure reported when no path validates; later entries dominate.
_FAILURE_PRIORITY: tuple[ChainFailure, ...] = (
    "no_root",
    "too_deep",
    "bad_signature",
    "expired",
    "revoked",
)


@dataclass(frozen=True)
class AttributeSchema:
    name: AttributeName
    value_type: ValueKind
    display_label: str

    def __post_init__(self) -> None:
        if self.value_type not in ("text", "integer", "date", "boolean"):
            raise MalformedDocument(f"bad value type {self.value_type!r}")
        if not self.display_label:
            raise MalformedDocument("display label must be non-empty")

    def to_canonical(self) -> dict[str, Any]:
        return {
            "name": str(self.name),
            "value_type": self.value_type,
            "display_label": self.display_label,
        }

    @classmethod
    def from_canonical(cls, tree: Any) -> "AttributeSchema":
        return cls(
            name=AttributeName(encoding.expect_str(tree, "name")),
            value_type=encoding.expect_str(tree, "value_type"),  # type: ignore[arg-type]
            display_label=encoding.expect_str(tree, "display_label"),
        )


class SchemaRegistry:
    """Lookup table of attribute schemas, unique by name."""

    def __init__(self, schemas: Iterable[AttributeSchema]) -> None:
        self._by_name: dict[AttributeName, AttributeSchema] = {}
        for schema in schemas:
            if schema.name in self._by_name:
                raise MalformedDocument(f"duplicate schema for {schema.name}")
            self._by_name[schema.name] = schema

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> AttributeSchema:
        try:
            return self._by_name[name]  # type: ignore[index]
        except KeyError:
            raise UnknownAttribute(f"attribute {name!r} is not in the schema registry") from None

    def require(self, names: Iterable[str]) -> None:
        for name in names:
            if name not in self._by_name:
                raise UnknownAttribute(f"attribute {name!r} is not in the schema registry")

    def kinds(self) -> Mapping[str, ValueKind]:
        return {name: schema.value_type for name, schema in self._by_name.items()}

    def names(self) -> tuple[AttributeName, ...]:
        return tuple(sorted(self._by_name))

    def to_canonical(self) -> list[dict[str, Any]]:
        return [self._by_name[name].to_canonical() for name in sorted(self._by_name)]

    @classmethod
    def from_canonical(cls, tree: Any) -> "SchemaRegistry":
        if not isinstance(tree, list):
            raise MalformedDocument("schema registry must be an array")
        return cls(AttributeSchema.from_canonical(item) for item in tree)

    @classmethod
    def load(cls, path: str) -> "SchemaRegistry":
        with open(path, "rb") as fh:
            return cls.from_canonical(encoding.decode_tree(fh.read()))

    def save(self, path: str) -> None:
        _atomic_write(path, canonical_encode(self))


def _frozen_name_map(mapping: Mapping[str, Any]) -> dict[AttributeName, frozenset[str]]:
    out: dict[AttributeName, frozenset[str]] = {}
    for key, value in mapping.items():
        if not isinstance(value, (list, tuple, set, frozenset)) or not all(
            isinstance(item, str) for item in value
        ):
            raise MalformedDocument(f"trust entry {key!r} must list common names")
        out[AttributeName(key)] = frozenset(value)
    return out


@dataclass(frozen=True)
class TrustStore:
    """Roots, per-attribute whitelists and endorsers, and revocations.

    Immutable; updates produce a new store, so concurrent readers always see
    a consistent snapshot.
    """

    roots: tuple[Certificate, ...] = ()
    whitelist: Mapping[str, frozenset[str]] = field(default_factory=dict)
    endorsers: Mapping[str, frozenset[str]] = field(default_factory=dict)
    revoked: Mapping[str, datetime] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for mapping in (self.whitelist, self.endorsers):
            for name, common_names in mapping.items():
                AttributeName(name)
                for cn in common_names:
                    if not valid_common_name(cn):
                        raise MalformedDocument(f"bad common name {cn!r} in trust store")
        for cn in self.revoked:
            if not valid_common_name(cn):
                raise MalformedDocument(f"bad revoked common name {cn!r}")

    def is_revoked(self, common_name: str) -> bool:
        return common_name in self.revoked

    def root_for(self, common_name: str) -> Certificate | None:
        for root in self.roots:
            if root.subject_common_name == common_name:
                return root
        return None

    def to_canonical(self) -> dict[str, Any]:
        return {
            "roots": sorted(
                (root.to_canonical() for root in self.roots),
                key=lambda tree: tree["subject_common_name"],
            ),
            "whitelist": {k: sorted(v) for k, v in self.whitelist.items()},
            "endorsers": {k: sorted(v) for k, v in self.endorsers.items()},
            "revoked": {k: encoding.encode_timestamp(v) for k, v in self.revoked.items()},
        }

    @classmethod
    def from_canonical(cls, tree: Any) -> "TrustStore":
        roots = tuple(
            Certificate.from_canonical(item) for item in encoding.expect_list(tree, "roots")
        )
        whitelist = encoding.expect_obj(tree, "whitelist")
        endorsers = encoding.expect_obj(tree, "endorsers")
        revoked = encoding.expect_obj(tree, "revoked")
        return cls(
            roots=roots,
            whitelist=_frozen_name_map(whitelist),
            endorsers=_frozen_name_map(endorsers),
            revoked={k: encoding.decode_timestamp(v) for k, v in revoked.items()},
        )

    @classmethod
    def load(cls, path: str) -> "TrustStore":
        with open(path, "rb") as fh:
            return cls.from_canonical(encoding.decode_tree(fh.read()))

    def save(self, path: str) -> None:
        _atomic_write(path, canonical_encode(self))


@dataclass(frozen=True)
class ChainResult:
    valid: bool
    chain: tuple[Certificate, ...]
    failure_reason: ChainFailure | None = None

    def common_names(self) -> tuple[str, ...]:
        return tuple(cert.subject_common_name for cert in self.chain)


def _check_cert(cert: Certificate, store: TrustStore, now: datetime) -> ChainFailure | None:
    if store.is_revoked(cert.subject_common_name):
        return "revoked"
    if not cert.valid_at(now):
        return "expired"
    return None


def validate_chain(
    leaf: Certificate,
    intermediates: Iterable[Certificate],
    store: TrustStore,
    now: datetime,
) -> ChainResult:
    """Find an unbroken issuer path from ``leaf`` to a trusted root.

    Depth-first over every certificate whose subject matches the current
    issuer name; a path wins only if every member is within its validity
    window, unrevoked, and every link signature verifies. When no path
    wins, the reported reason is the most damning one seen anywhere.
    """
    pool = list(intermediates) + list(store.roots)
    worst: ChainFailure | None = None

    def note(reason: ChainFailure) -> None:
        nonlocal worst
        if worst is None or _FAILURE_PRIORITY.index(reason) > _FAILURE_PRIORITY.index(worst):
            worst = reason

    def walk(cert: Certificate, path: tuple[Certificate, ...]) -> tuple[Certificate, ...] | None:
        local = _check_cert(cert, store, now)
        if local is not None:
            note(local)
            return None
        path = path + (cert,)
        if len(path) > MAX_CHAIN_LEN:
            note("too_deep")
            return None
        if cert.self_signed:
            root = store.root_for(cert.subject_common_name)
            if root is None or root.to_canonical() != cert.to_canonical():
                note("no_root")
                return None
            if not cert.signature_valid_under(cert.sig_public_key):
                note("bad_signature")
                return None
            return path
        parents = [c for c in pool if c.subject_common_name == cert.issuer_common_name]
        if not parents:
            note("no_root")
            return None
        for parent in parents:
            if any(parent.to_canonical() == seen.to_canonical() for seen in path):
                continue
            if not cert.signature_valid_under(parent.sig_public_key):
                note("bad_signature")
                continue
            found = walk(parent, path)
            if found is not None:
                return found
        return None

    chain = walk(leaf, ())
    if chain is not None:
        return ChainResult(valid=True, chain=chain)
    return ChainResult(valid=False, chain=(), failure_reason=worst or "no_root")


@dataclass(frozen=True)
class AuthorityDecision:
    authoritative: bool
    reason: str


def is_authoritative(
    aa_cert: Certificate,
    requested: Iterable[str],
    store: TrustStore,
    chain: ChainResult,
    registry: SchemaRegistry,
) -> AuthorityDecision:
    """Authority holds only if the chain is valid and EVERY requested
    attribute is covered by the whitelist or by an endorser in the chain."""
    requested = list(requested)
    registry.require(requested)
    if not chain.valid:
        return AuthorityDecision(False, f"certificate chain invalid: {chain.failure_reason}")
    if store.is_revoked(aa_cert.subject_common_name):
        return AuthorityDecision(False, "authority certificate is revoked")
    chain_names = set(chain.common_names())
    grants: list[str] = []
    for attr in requested:
        if aa_cert.subject_common_name in store.whitelist.get(attr, frozenset()):
            grants.append(f"{attr}: whitelisted")
            continue
        endorsing = store.endorsers.get(attr, frozenset()) & chain_names
        if endorsing:
            grants.append(f"{attr}: endorsed by {sorted(endorsing)[0]}")
            continue
        return AuthorityDecision(
            False, f"{aa_cert.subject_common_name} is not authoritative for {attr}"
        )
    return AuthorityDecision(True, "; ".join(grants))


def revoke(common_name: str, store: TrustStore, at: datetime) -> TrustStore:
    """Copy-on-write revocation; idempotent, earliest timestamp wins."""
    if common_name in store.revoked:
        return store
    revoked = dict(store.revoked)
    revoked[common_name] = at
    return replace(store, revoked=revoked)


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
