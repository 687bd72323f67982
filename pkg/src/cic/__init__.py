"""Certified identity claims.

An identity attribute attestation that is sealed to the party that asked
for it, signed by the authority that vouches for it, and bound to a
single-use nonce, so it can be verified, cannot be replayed, and cannot be
handed to anyone else.
"""

from .core import (
    AttributeName,
    AttributeSet,
    AttributeValue,
    Certificate,
    CertifiedClaim,
    ClaimPayload,
    ClaimRequest,
    Envelope,
    KeyPair,
    Nonce,
    PrivateKey,
    PublicKey,
    canonical_encode,
    generate_keypair,
    generate_nonce,
    issue_certificate,
    issue_cic,
    open_envelope,
    seal,
    sign,
    verify_cic,
    verify_sig,
)
from .trust import (
    AttributeSchema,
    AuthorityDecision,
    ChainResult,
    SchemaRegistry,
    TrustStore,
    is_authoritative,
    revoke,
    validate_chain,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeName",
    "AttributeSchema",
    "AttributeSet",
    "AttributeValue",
    "AuthorityDecision",
    "Certificate",
    "CertifiedClaim",
    "ChainResult",
    "ClaimPayload",
    "ClaimRequest",
    "Envelope",
    "KeyPair",
    "Nonce",
    "PrivateKey",
    "PublicKey",
    "SchemaRegistry",
    "TrustStore",
    "canonical_encode",
    "generate_keypair",
    "generate_nonce",
    "is_authoritative",
    "issue_certificate",
    "issue_cic",
    "open_envelope",
    "revoke",
    "seal",
    "sign",
    "validate_chain",
    "verify_cic",
    "verify_sig",
    "__version__",
]
