"""Subject wallet: render requests for a human, gate on consent, relay bytes.

The wallet is an untrusting courier. It shows the user who is asking and
for what, refuses to forward anything that was not approved, throttles how
often the same party may refresh the same attribute, and passes the request
bytes to the authority exactly as they arrived: it cannot and must not
rewrite the description, the nonce, or the embedded certificate. It also
cannot read the claims it carries; they are sealed to the relying party.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Any, Callable, Literal, Mapping

from . import encoding
from .clock import Clock, SYSTEM_CLOCK
from .core import (
    AttributeName,
    Certificate,
    ClaimRequest,
    decode_claim_request,
)
from .errors import (
    AaError,
    CertificateMismatch,
    InvalidState,
    MalformedDocument,
    MalformedRequest,
    NoAuthorityConfigured,
    ThrottleExceeded,
    TransportError,
)
from .rp import VerificationResult, encode_submission
from .trust import SchemaRegistry, TrustStore, validate_chain, _atomic_write

PendingState = Literal["pending", "approved", "denied", "completed", "failed"]

# Sends the issue body to an authority endpoint with a credential; returns
# the claim bytes. In-process harness and HTTP services plug in here.
AaTransport = Callable[[str, bytes, str], bytes]
# Delivers a submission body back to the relying party; returns result bytes.
RpTransport = Callable[[str, bytes], bytes]


@dataclass(frozen=True)
class AaEndpoint:
    locator: str
    credential: str


class AaDirectory:
    """Which authority (and which credential) covers each attribute."""

    def __init__(self, entries: Mapping[str, AaEndpoint], registry: SchemaRegistry) -> None:
        self._entries: dict[AttributeName, AaEndpoint] = {}
        for name, endpoint in entries.items():
            attr = AttributeName(name)
            registry.require([attr])
            self._entries[attr] = endpoint

    def endpoint_for(self, names: tuple[AttributeName, ...]) -> AaEndpoint:
        """Single authority covering every name, else NoAuthorityConfigured."""
        missing = [n for n in names if n not in self._entries]
        if missing:
            raise NoAuthorityConfigured(
                f"no authority configured for: {', '.join(sorted(missing))}"
            )
        endpoints = {self._entries[n].locator for n in names}
        if len(endpoints) != 1:
            raise NoAuthorityConfigured(
                "requested attributes span multiple authorities; splitting is unsupported"
            )
        return self._entries[names[0]]


@dataclass
class ConsentPolicy:
    """Automatic or interactive consent, plus per-attribute rate limits.

    ``auto_allow`` maps a relying party common name to the attribute names
    it may receive without a human in the loop. ``throttle`` sets a minimum
    interval in seconds between grants of one attribute to one party;
    ``last_granted`` tracks completions, not approvals.
    """

    mode: Literal["interactive", "auto"] = "interactive"
    auto_allow: dict[str, frozenset[str]] = field(default_factory=dict)
    throttle: dict[tuple[str, str], int] = field(default_factory=dict)
    last_granted: dict[tuple[str, str], datetime] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in ("interactive", "auto"):
            raise MalformedDocument(f"bad consent mode {self.mode!r}")
        for interval in self.throttle.values():
            if interval < 0:
                raise MalformedDocument("throttle intervals must be >= 0")

    def auto_decision(self, rp_common_name: str, names: tuple[AttributeName, ...], chain_valid: bool) -> str:
        if not chain_valid:
            return "deny"
        allowed = self.auto_allow.get(rp_common_name, frozenset())
        return "approve" if all(n in allowed for n in names) else "deny"

    def throttled(self, rp_common_name: str, names: tuple[AttributeName, ...], now: datetime) -> str | None:
        """Name of the first attribute still inside its minimum interval."""
        for name in names:
            interval = self.throttle.get((rp_common_name, name))
            if not interval:
                continue
            last = self.last_granted.get((rp_common_name, name))
            if last is not None and now - last < timedelta(seconds=interval):
                return str(name)
        return None

    def record_grant(self, rp_common_name: str, names: tuple[AttributeName, ...], at: datetime) -> None:
        for name in names:
            self.last_granted[(rp_common_name, name)] = at


@dataclass
class PendingRequest:
    """One queued claim request moving through the consent state machine.

    Allowed transitions: pending -> approved -> completed | failed, and
    pending -> denied. ``request_bytes`` are the exact bytes received from
    the relying party and the exact bytes later sent to the authority.
    """

    id: str
    request: ClaimRequest
    request_bytes: bytes
    received_at: datetime
    rp_chain_valid: bool
    human_text: str
    state: PendingState = "pending"
    reply_to: str | None = None
    error: str | None = None
    rp_accepted: bool | None = None

    def to_view(self, labels: list[str]) -> dict[str, Any]:
        """Control-API projection: no keys, no claims, no attribute values."""
        view: dict[str, Any] = {
            "id": self.id,
            "rp_common_name": self.request.rp_certificate.subject_common_name,
            "attribute_labels": labels,
            "received_at": encoding.encode_timestamp(self.received_at),
            "rp_chain_valid": self.rp_chain_valid,
            "state": self.state,
            "human_text": self.human_text,
        }
        if self.request.purpose is not None:
            view["purpose"] = self.request.purpose
        if self.error is not None:
            view["error"] = self.error
        if self.rp_accepted is not None:
            view["rp_accepted"] = self.rp_accepted
        return view


@dataclass(frozen=True)
class RelayOutcome:
    claim_bytes: bytes
    rp_result: VerificationResult | None


class SubjectWallet:
    """Holds the queue, applies policy, and speaks to authority and party."""

    def __init__(
        self,
        schema_registry: SchemaRegistry,
        trust_store: TrustStore,
        directory: AaDirectory,
        policy: ConsentPolicy,
        *,
        aa_transport: AaTransport,
        rp_transport: RpTransport | None = None,
        intermediates: tuple[Certificate, ...] = (),
        clock: Clock = SYSTEM_CLOCK,
        state_path: str | None = None,
    ) -> None:
        self.schema_registry = schema_registry
        self.trust_store = trust_store
        self.directory = directory
        self.policy = policy
        self._aa_transport = aa_transport
        self._rp_transport = rp_transport
        self._intermediates = intermediates
        self._clock = clock
        self._state_path = state_path
        self._pending: dict[str, PendingRequest] = {}
        self._order: list[str] = []
        self._counter = 0
        self._lock = threading.RLock()
        self._in_flight: set[str] = set()
        if state_path:
            self._load_state()

    # -- intake ---------------------------------------------------------

    def on_request(
        self,
        request_bytes: bytes,
        *,
        peer_common_name: str | None = None,
        reply_to: str | None = None,
    ) -> PendingRequest:
        """Validate, render human-readably, and queue an incoming request.

        A request whose certificate chain does not validate is still queued,
        flagged, so the human sees the warning instead of silence. A
        certificate naming someone other than the authenticated channel peer
        is rejected outright: that shape is a relay attack, not a typo.
        """
        request = decode_claim_request(request_bytes)
        for name in request.description:
            if name not in self.schema_registry:
                raise MalformedRequest(f"request names unknown attribute {name!r}")
        rp_cn = request.rp_certificate.subject_common_name
        if peer_common_name is not None and peer_common_name != rp_cn:
            raise CertificateMismatch(
                f"request certificate names {rp_cn!r} but the channel peer is {peer_common_name!r}"
            )
        now = self._clock.now()
        chain = validate_chain(request.rp_certificate, self._intermediates, self.trust_store, now)
        labels = self.display_labels(request)
        text = f"{rp_cn} asks you to disclose: {', '.join(labels)}."
        if request.purpose is not None:
            text += f' Stated purpose: "{request.purpose}".'
        if not chain.valid:
            text += f" WARNING: this party's certificate did not validate ({chain.failure_reason})."
        with self._lock:
            self._counter += 1
            pending = PendingRequest(
                id=f"req-{self._counter:06d}",
                request=request,
                request_bytes=bytes(request_bytes),
                received_at=now,
                rp_chain_valid=chain.valid,
                human_text=text,
                reply_to=reply_to,
            )
            self._pending[pending.id] = pending
            self._order.append(pending.id)
            self._persist()
        return pending

    def display_labels(self, request: ClaimRequest) -> list[str]:
        return [self.schema_registry.get(name).display_label for name in request.description]

    # -- consent --------------------------------------------------------

    def decide(self, pending_id: str, decision: str | None = None) -> PendingRequest:
        """Apply a decision; in auto mode the policy supplies it.

        Approval is blocked (state stays pending) when any requested
        attribute is still inside its throttle interval.
        """
        with self._lock:
            pending = self._get(pending_id)
            if pending.state != "pending":
                raise InvalidState(f"request {pending_id} is already {pending.state}")
            rp_cn = pending.request.rp_certificate.subject_common_name
            names = pending.request.description
            if self.policy.mode == "auto":
                decision = self.policy.auto_decision(rp_cn, names, pending.rp_chain_valid)
            elif decision not in ("approve", "deny"):
                raise InvalidState("interactive mode needs an explicit approve or deny")
            if decision == "approve":
                blocked = self.policy.throttled(rp_cn, names, self._clock.now())
                if blocked is not None:
                    raise ThrottleExceeded(
                        f"attribute {blocked!r} was granted to {rp_cn} too recently"
                    )
                pending.state = "approved"
            else:
                pending.state = "denied"
            self._persist()
            return pending

    # -- relay ----------------------------------------------------------

    def relay(self, pending_id: str) -> RelayOutcome:
        """Forward the approved request verbatim, hand the claim to the party.

        The issue body wraps ``request_bytes`` unmodified. The wallet never
        opens the returned claim; it lacks the key and has no business
        looking.
        """
        with self._lock:
            pending = self._get(pending_id)
            if pending.state != "approved":
                raise InvalidState(f"request {pending_id} is {pending.state}, not approved")
            if pending_id in self._in_flight:
                raise InvalidState(f"request {pending_id} is already being relayed")
            try:
                endpoint = self.directory.endpoint_for(pending.request.description)
            except NoAuthorityConfigured as exc:
                pending.state = "failed"
                pending.error = str(exc)
                self._persist()
                raise
            self._in_flight.add(pending_id)
        try:
            body = b'{"request":' + pending.request_bytes + b"}"
            try:
                claim_bytes = self._aa_transport(endpoint.locator, body, endpoint.credential)
            except (AaError, TransportError) as exc:
                with self._lock:
                    pending.state = "failed"
                    pending.error = str(exc)
                    self._persist()
                raise
            rp_result: VerificationResult | None = None
            if self._rp_transport is not None and pending.reply_to is not None:
                submission = encode_submission(claim_bytes, pending.request.nonce)
                try:
                    result_bytes = self._rp_transport(pending.reply_to, submission)
                    rp_result = VerificationResult.from_canonical(encoding.decode_tree(result_bytes))
                except (TransportError, MalformedDocument) as exc:
                    with self._lock:
                        pending.state = "failed"
                        pending.error = str(exc)
                        self._persist()
                    raise TransportError(str(exc)) from exc
            with self._lock:
                pending.state = "completed"
                if rp_result is not None:
                    pending.rp_accepted = rp_result.accepted
                rp_cn = pending.request.rp_certificate.subject_common_name
                self.policy.record_grant(rp_cn, pending.request.description, self._clock.now())
                self._persist()
            return RelayOutcome(claim_bytes=claim_bytes, rp_result=rp_result)
        finally:
            with self._lock:
                self._in_flight.discard(pending_id)

    def approve_and_relay(self, pending_id: str) -> PendingRequest:
        """Convenience for the control API: decide(approve) then relay."""
        self.decide(pending_id, "approve")
        try:
            self.relay(pending_id)
        except (AaError, TransportError, NoAuthorityConfigured):
            pass  # relay already moved the request to failed and kept the message
        return self._get(pending_id)

    def process_auto(self, pending_id: str) -> PendingRequest:
        """Auto-mode intake: the policy decides, approvals relay immediately."""
        pending = self.decide(pending_id)
        if pending.state == "approved":
            try:
                self.relay(pending_id)
            except (AaError, TransportError, NoAuthorityConfigured):
                pass  # recorded on the request
        return self._get(pending_id)

    # -- queries --------------------------------------------------------

    def get(self, pending_id: str) -> PendingRequest:
        with self._lock:
            return self._get(pending_id)

    def pending_list(self) -> list[PendingRequest]:
        """Open requests, newest first."""
        with self._lock:
            items = [self._pending[i] for i in self._order if self._pending[i].state == "pending"]
        return list(reversed(items))

    def history(self) -> list[PendingRequest]:
        """Settled requests, newest first."""
        with self._lock:
            items = [self._pending[i] for i in self._order if self._pending[i].state != "pending"]
        return list(reversed(items))

    def view(self, pending: PendingRequest) -> dict[str, Any]:
        return pending.to_view(self.display_labels(pending.request))

    def _get(self, pending_id: str) -> PendingRequest:
        pending = self._pending.get(pending_id)
        if pending is None:
            raise InvalidState(f"no pending request {pending_id!r}")
        return pending

    # -- persistence ------------------------------------------------------

    def _persist(self) -> None:
        if not self._state_path:
            return
        tree: dict[str, Any] = {
            "counter": self._counter,
            "requests": [
                {
                    "id": p.id,
                    "request_bytes": encoding.b64url_encode(p.request_bytes),
                    "received_at": encoding.encode_timestamp(p.received_at),
                    "rp_chain_valid": p.rp_chain_valid,
                    "human_text": p.human_text,
                    "state": p.state,
                    **({"reply_to": p.reply_to} if p.reply_to is not None else {}),
                    **({"error": p.error} if p.error is not None else {}),
                    **({"rp_accepted": p.rp_accepted} if p.rp_accepted is not None else {}),
                }
                for p in (self._pending[i] for i in self._order)
            ],
            "last_granted": {
                f"{cn}/{attr}": encoding.encode_timestamp(at)
                for (cn, attr), at in self.policy.last_granted.items()
            },
        }
        _atomic_write(self._state_path, encoding.canonical_bytes(tree))

    def _load_state(self) -> None:
        assert self._state_path is not None
        try:
            with open(self._state_path, "rb") as fh:
                tree = encoding.decode_tree(fh.read())
        except FileNotFoundError:
            return
        self._counter = int(tree.get("counter", 0))
        for item in tree.get("requests", []):
            request_bytes = encoding.b64url_decode(item["request_bytes"])
            pending = PendingRequest(
                id=item["id"],
                request=decode_claim_request(request_bytes),
                request_bytes=request_bytes,
                received_at=encoding.decode_timestamp(item["received_at"]),
                rp_chain_valid=bool(item["rp_chain_valid"]),
                human_text=item["human_text"],
                state=item["state"],
                reply_to=item.get("reply_to"),
                error=item.get("error"),
                rp_accepted=item.get("rp_accepted"),
            )
            self._pending[pending.id] = pending
            self._order.append(pending.id)
        for key, at in tree.get("last_granted", {}).items():
            cn, _, attr = key.partition("/")
            self.policy.last_granted[(cn, attr)] = encoding.decode_timestamp(at)
