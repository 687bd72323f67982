"""Exception taxonomy shared across the protocol kernel and the services.

Every failure a caller is expected to branch on gets its own class; generic
``ValueError``/``TypeError`` are reserved for programming mistakes.
"""

from __future__ import annotations


class CicError(Exception):
    """Base class for every protocol-level error."""


# --- encoding -------------------------------------------------------------

class UnencodableValue(CicError):
    """Value cannot be represented in the canonical byte encoding."""


class MalformedDocument(CicError):
    """Byte sequence does not decode into a well-formed protocol object."""


# --- kernel crypto --------------------------------------------------------

class RngFailure(CicError):
    """Random source failed or returned unusable material."""


class EncryptionFailure(CicError):
    """Sealing a payload to a recipient key failed."""


class OpenFailure(CicError):
    """Envelope cannot be opened: wrong key, corrupted body, or bad tag."""


class MalformedPayload(MalformedDocument):
    """Envelope decrypted but the plaintext is not a valid payload."""


class SigningFailure(CicError):
    """Signature could not be produced."""


class BadSignature(CicError):
    """Signature does not verify for the presented message and key."""


class NonceMismatch(CicError):
    """Payload nonce differs from the nonce the verifier expected."""


# --- trust ----------------------------------------------------------------

class UnknownAttribute(CicError):
    """Attribute name is not present in the schema registry."""


# --- attribute authority --------------------------------------------------

class AuthenticationFailed(CicError):
    """Presented credential does not map to any subject."""


class AttributeUnavailable(CicError):
    """Subject record lacks one of the requested attributes."""


class MalformedRequest(MalformedDocument):
    """Claim request bytes fail structural validation."""


# --- subject wallet -------------------------------------------------------

class InvalidState(CicError):
    """Operation not allowed in the pending request's current state."""


class ThrottleExceeded(CicError):
    """Grant would violate the configured minimum interval for an attribute."""


class NoAuthorityConfigured(CicError):
    """Wallet directory does not map the request to a single authority."""


class CertificateMismatch(CicError):
    """Embedded certificate does not match the authenticated channel peer."""


class AaError(CicError):
    """Authority rejected or failed an issuance call."""


class TransportError(CicError):
    """Message could not be delivered to the remote endpoint."""


# --- harness ----------------------------------------------------------------

class UnknownScenario(CicError):
    """Requested scenario name is not in the catalog."""
