"""Deterministic scenario runner for the protocol's attack/defense catalog.

Actors (authority, relying parties, subject wallet) are wired over an
in-memory transport whose channels can be marked insecure and given an
adversary interceptor. Every byte of randomness comes from a seeded stream
and every timestamp from a hand-driven clock, so a (scenario, seed) pair
always produces the same transcript.

Each scenario runs one or more phases and records, per phase, the outcome
it expected and the outcome it observed. A scenario's top-level ``observed``
collapses the phases: it equals the expectation only when every phase
behaved, and otherwise reports a value guaranteed to differ from the
expectation so the report cannot false-pass. The transcript carries the
per-phase truth either way.

Attack scenarios always include an honest phase that must complete, so a
blocked attack demonstrates the protocol working rather than broken
plumbing.

The deliberately weakened sign-before-seal claim format lives only in this
module (``_SignFirstAuthority``); no service configuration can reach it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import Any, Callable, Literal

from . import encoding
from .aa import AttributeAuthority, AttributeStore, SubjectRecord, hash_token
from .clock import ManualClock
from .core import (
    AttributeName,
    AttributeSet,
    AttributeValue,
    Certificate,
    CertifiedClaim,
    ClaimPayload,
    ClaimRequest,
    KeyPair,
    Nonce,
    canonical_encode,
    decode_certified_claim,
    generate_keypair,
    issue_certificate,
    issue_cic,
    open_bytes,
    seal_bytes,
    sign,
    verify_sig,
)
from .errors import (
    AaError,
    AttributeUnavailable,
    AuthenticationFailed,
    BadSignature,
    CertificateMismatch,
    MalformedDocument,
    MalformedRequest,
    NonceMismatch,
    OpenFailure,
    TransportError,
    UnknownAttribute,
    UnknownScenario,
)
from .rng import FixedRandomSource, RandomSource, SeededRandomSource
from .rp import RelyingParty, VerificationResult, decode_submission, encode_submission
from .subject import AaDirectory, AaEndpoint, ConsentPolicy, SubjectWallet
from .trust import (
    AttributeSchema,
    SchemaRegistry,
    TrustStore,
    is_authoritative,
    revoke,
    validate_chain,
)

Outcome = Literal["attack_blocked", "attack_succeeds", "flow_completes"]
OUTCOMES: tuple[Outcome, ...] = ("attack_blocked", "attack_succeeds", "flow_completes")

WALLET = "subject-wallet"
HARNESS = "harness"

AUTHORITY_CN = "firstnational.example"
ROOT_CN = "root-ca.example"
LENDER_CN = "lender.example"
MERCHANT_CN = "merchant-x.example"
MALICIOUS_RP_CN = "freebies.example"
WEBSHOP_CN = "webshop.example"
BOOKSTORE_CN = "bookstore.example"
ROGUE_AA_CN = "self-appointed.example"

SUBJECT_ID = "s-1001"
SUBJECT_TOKEN = "subject-token-s-1001"
ATTACKER_ID = "m-6666"
ATTACKER_TOKEN = "subject-token-m-6666"

SUBJECT_NAME = "John Davis"
SUBJECT_CREDIT_SCORE = 589
SUBJECT_SSN = "078-05-1120"
SUBJECT_ADDRESS = "1 Subject Way, Springfield"
ATTACKER_ADDRESS = "666 Interception Road, Darkmoor"


def demo_schemas() -> list[AttributeSchema]:
    return [
        AttributeSchema(AttributeName("name"), "text", "Name"),
        AttributeSchema(AttributeName("credit_score"), "integer", "Credit score"),
        AttributeSchema(AttributeName("date_of_birth"), "date", "Date of birth"),
        AttributeSchema(AttributeName("shipping_address"), "text", "Shipping address"),
        AttributeSchema(AttributeName("ssn"), "text", "Social Security number"),
        AttributeSchema(AttributeName("bank_balance"), "integer", "Bank balance"),
    ]


def demo_subject_records() -> list[SubjectRecord]:
    return [
        SubjectRecord(
            subject_id=SUBJECT_ID,
            attributes=AttributeSet.from_mapping(
                {
                    "name": AttributeValue.text(SUBJECT_NAME),
                    "credit_score": AttributeValue.integer(SUBJECT_CREDIT_SCORE),
                    "ssn": AttributeValue.text(SUBJECT_SSN),
                    "shipping_address": AttributeValue.text(SUBJECT_ADDRESS),
                    "date_of_birth": AttributeValue.of_date(date(1980, 5, 17)),
                }
            ),
            auth_tokens=frozenset({hash_token(SUBJECT_TOKEN)}),
        ),
        SubjectRecord(
            subject_id=ATTACKER_ID,
            attributes=AttributeSet.from_mapping(
                {
                    "name": AttributeValue.text("Eve Mallory"),
                    "credit_score": AttributeValue.integer(410),
                    "shipping_address": AttributeValue.text(ATTACKER_ADDRESS),
                }
            ),
            auth_tokens=frozenset({hash_token(ATTACKER_TOKEN)}),
        ),
    ]


# --- in-memory transport ------------------------------------------------------


Interceptor = Callable[[str, bytes], bytes]


@dataclass
class SimChannel:
    """Point-to-point link between two actors.

    A secure channel authenticates its endpoints to each other and cannot be
    intercepted; an interceptor is only constructible on an insecure channel
    or one whose adversary legitimately owns an endpoint.
    """

    endpoints: tuple[str, str]
    secure: bool = True
    interceptor: Interceptor | None = None
    adversary_endpoint: str | None = None

    def __post_init__(self) -> None:
        if self.interceptor is not None and self.secure:
            if self.adversary_endpoint not in self.endpoints:
                raise ValueError(
                    "interceptor on a secure channel requires an adversary-owned endpoint"
                )

    def key(self) -> frozenset[str]:
        return frozenset(self.endpoints)


class Network:
    """Routes messages over channels and records the full transcript."""

    def __init__(self) -> None:
        self._channels: dict[frozenset[str], SimChannel] = {}
        self.transcript: list[dict[str, Any]] = []
        self._seq = 0

    def add_channel(self, channel: SimChannel) -> None:
        self._channels[channel.key()] = channel

    def channel_between(self, a: str, b: str) -> SimChannel:
        key = frozenset((a, b))
        if key not in self._channels:
            self._channels[key] = SimChannel(endpoints=(a, b), secure=True)
        return self._channels[key]

    def send(self, sender: str, receiver: str, kind: str, body: bytes, note: str = "") -> bytes:
        channel = self.channel_between(sender, receiver)
        delivered = body
        if channel.interceptor is not None:
            delivered = channel.interceptor(kind, body)
        self._seq += 1
        self.transcript.append(
            {
                "seq": self._seq,
                "sender": sender,
                "receiver": receiver,
                "kind": kind,
                "body": encoding.b64url_encode(delivered),
                "secure": channel.secure,
                "tampered": delivered != body,
                "note": note,
            }
        )
        return delivered

    def note(self, actor: str, text: str) -> None:
        self._seq += 1
        self.transcript.append(
            {
                "seq": self._seq,
                "sender": actor,
                "receiver": actor,
                "kind": "note",
                "body": "",
                "secure": True,
                "tampered": False,
                "note": text,
            }
        )

    def log_phase(self, name: str, expected: Outcome, observed: Outcome, detail: str) -> None:
        self._seq += 1
        text = f"phase {name}: expected={expected} observed={observed}"
        if detail:
            text += f" ({detail})"
        self.transcript.append(
            {
                "seq": self._seq,
                "sender": HARNESS,
                "receiver": HARNESS,
                "kind": "phase",
                "body": "",
                "secure": True,
                "tampered": False,
                "note": text,
            }
        )


# --- world ---------------------------------------------------------------------


@dataclass
class World:
    """Everything a scenario starts from, derived entirely from the seed."""

    seed: int
    clock: ManualClock
    rng: SeededRandomSource
    network: Network
    schema_registry: SchemaRegistry
    root_sign_keys: KeyPair
    root_cert: Certificate
    aa_sign_keys: KeyPair
    aa_cert: Certificate
    authority: AttributeAuthority
    trust_store: TrustStore
    rp_by_name: dict[str, RelyingParty] = field(default_factory=dict)
    authorities: dict[str, AttributeAuthority] = field(default_factory=dict)
    rp_keys: dict[str, KeyPair] = field(default_factory=dict)

    def make_rp(
        self,
        common_name: str,
        *,
        rng: RandomSource | None = None,
        ttl_seconds: int = 300,
    ) -> RelyingParty:
        stream = self.rng.derive(f"rp:{common_name}")
        sig = generate_keypair("signature", stream)
        enc = generate_keypair("encryption", stream)
        cert = issue_certificate(
            common_name,
            sig.public,
            enc.public,
            ROOT_CN,
            self.root_sign_keys.private,
            self.root_cert.not_before,
            self.root_cert.not_after,
        )
        rp = RelyingParty(
            cert,
            enc,
            self.trust_store,
            self.schema_registry,
            clock=self.clock,
            rng=rng if rng is not None else stream.derive("nonces"),
            ttl_seconds=ttl_seconds,
        )
        self.rp_by_name[common_name] = rp
        self.rp_keys[common_name] = enc
        return rp

    def make_wallet(self, policy: ConsentPolicy | None = None) -> SubjectWallet:
        directory = AaDirectory(
            {
                name: AaEndpoint(AUTHORITY_CN, SUBJECT_TOKEN)
                for name in ("name", "credit_score", "date_of_birth", "shipping_address")
            },
            self.schema_registry,
        )
        return SubjectWallet(
            self.schema_registry,
            self.trust_store,
            directory,
            policy or ConsentPolicy(mode="interactive"),
            aa_transport=self._aa_transport,
            rp_transport=self._rp_transport,
            clock=self.clock,
        )

    def _aa_transport(self, locator: str, body: bytes, credential: str) -> bytes:
        delivered = self.network.send(WALLET, locator, "issue_request", body)
        authority = self.authorities.get(locator)
        if authority is None:
            raise TransportError(f"no authority reachable at {locator!r}")
        try:
            claim = authority.handle_issue(delivered, credential)
        except (AuthenticationFailed, MalformedRequest, UnknownAttribute, AttributeUnavailable) as exc:
            self.network.note(locator, f"issuance refused: {exc}")
            raise AaError(str(exc)) from exc
        return self.network.send(locator, WALLET, "claim_response", canonical_encode(claim))

    def _rp_transport(self, reply_to: str, submission: bytes) -> bytes:
        delivered = self.network.send(WALLET, reply_to, "claim_submit", submission)
        rp = self.rp_by_name.get(reply_to)
        if rp is None:
            raise TransportError(f"no relying party reachable at {reply_to!r}")
        try:
            claim, nonce = decode_submission(delivered)
        except MalformedDocument as exc:
            raise TransportError(f"submission mangled in transit: {exc}") from exc
        result = rp.accept_claim(claim, nonce)
        return self.network.send(reply_to, WALLET, "submit_result", canonical_encode(result))


def build_world(seed: int) -> World:
    clock = ManualClock(datetime(2020, 1, 1, tzinfo=timezone.utc))
    rng = SeededRandomSource(seed)
    registry = SchemaRegistry(demo_schemas())

    root_stream = rng.derive("root")
    root_sig = generate_keypair("signature", root_stream)
    root_enc = generate_keypair("encryption", root_stream)
    not_before = datetime(2019, 12, 1, tzinfo=timezone.utc)
    not_after = datetime(2021, 6, 1, tzinfo=timezone.utc)
    root_cert = issue_certificate(
        ROOT_CN, root_sig.public, root_enc.public, ROOT_CN, root_sig.private, not_before, not_after
    )

    aa_stream = rng.derive("aa")
    aa_sig = generate_keypair("signature", aa_stream)
    aa_enc = generate_keypair("encryption", aa_stream)
    aa_cert = issue_certificate(
        AUTHORITY_CN, aa_sig.public, aa_enc.public, ROOT_CN, root_sig.private, not_before, not_after
    )

    store = AttributeStore(demo_subject_records())
    authority = AttributeAuthority(
        aa_cert, aa_sig, store, registry, clock=clock, rng=aa_stream.derive("issue")
    )

    trust_store = TrustStore(
        roots=(root_cert,),
        whitelist={
            name: frozenset({AUTHORITY_CN})
            for name in ("name", "credit_score", "date_of_birth", "shipping_address", "bank_balance")
        },
    )

    world = World(
        seed=seed,
        clock=clock,
        rng=rng,
        network=Network(),
        schema_registry=registry,
        root_sign_keys=root_sig,
        root_cert=root_cert,
        aa_sign_keys=aa_sig,
        aa_cert=aa_cert,
        authority=authority,
        trust_store=trust_store,
    )
    world.authorities[AUTHORITY_CN] = authority
    return world


# --- scenario bookkeeping -------------------------------------------------------


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    expectation: Outcome
    rationale: str
    runner: Callable[["ScenarioRun"], None]


@dataclass(frozen=True)
class ScenarioReport:
    name: str
    expectation: Outcome
    observed: Outcome
    passed: bool
    transcript: tuple[dict[str, Any], ...]
    seed: int

    def to_canonical(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "expectation": self.expectation,
            "observed": self.observed,
            "pass": self.passed,
            "transcript": list(self.transcript),
            "seed": self.seed,
        }


@dataclass
class _Phase:
    name: str
    expected: Outcome
    observed: Outcome
    detail: str


class ScenarioRun:
    def __init__(self, spec: ScenarioSpec, seed: int) -> None:
        self.spec = spec
        self.seed = seed
        self.world = build_world(seed)
        self.phases: list[_Phase] = []

    def record(self, name: str, expected: Outcome, observed: Outcome, detail: str = "") -> None:
        self.phases.append(_Phase(name, expected, observed, detail))
        self.world.network.log_phase(name, expected, observed, detail)

    def report(self) -> ScenarioReport:
        expectation = self.spec.expectation
        mismatched = [p for p in self.phases if p.observed != p.expected]
        if not mismatched:
            observed = expectation
        else:
            observed = mismatched[0].observed
            if observed == expectation:
                observed = next(o for o in OUTCOMES if o != expectation)
        return ScenarioReport(
            name=self.spec.name,
            expectation=expectation,
            observed=observed,
            passed=observed == expectation,
            transcript=tuple(self.world.network.transcript),
            seed=self.seed,
        )


# --- shared flow drivers ---------------------------------------------------------


@dataclass
class FlowOutcome:
    request: ClaimRequest
    request_bytes: bytes
    claim_bytes: bytes | None
    result: VerificationResult | None


def _drive_flow(
    world: World,
    rp: RelyingParty,
    wallet: SubjectWallet,
    attrs: list[str],
    purpose: str | None = None,
    *,
    submit: bool = True,
    forged_request: ClaimRequest | None = None,
    request_sender: str | None = None,
) -> FlowOutcome:
    """Run request -> consent -> issue -> relay, logging every hop.

    ``forged_request``/``request_sender`` let a malicious party deliver a
    request of its own making instead of what the honest party minted.
    """
    if forged_request is None:
        request = rp.create_request(attrs, purpose)
        sender = rp.common_name
    else:
        request = forged_request
        sender = request_sender or rp.common_name
    request_bytes = canonical_encode(request)
    delivered = world.network.send(sender, WALLET, "claim_request", request_bytes)
    channel = world.network.channel_between(sender, WALLET)
    peer = sender if channel.secure else None
    pending = wallet.on_request(
        delivered, peer_common_name=peer, reply_to=sender if submit else None
    )
    wallet.decide(pending.id, "approve")
    outcome = wallet.relay(pending.id)
    return FlowOutcome(
        request=request,
        request_bytes=request_bytes,
        claim_bytes=outcome.claim_bytes,
        result=outcome.rp_result,
    )


def _submit_directly(
    world: World,
    sender: str,
    rp: RelyingParty,
    claim_bytes: bytes,
    nonce: Nonce,
    note: str = "",
) -> VerificationResult | None:
    """Deliver a submission outside the wallet; None means it did not even parse."""
    submission = encode_submission(claim_bytes, nonce)
    delivered = world.network.send(sender, rp.common_name, "claim_submit", submission, note=note)
    try:
        claim, delivered_nonce = decode_submission(delivered)
    except MalformedDocument as exc:
        world.network.note(rp.common_name, f"submission rejected before verification: {exc}")
        return None
    result = rp.accept_claim(claim, delivered_nonce)
    world.network.send(rp.common_name, sender, "submit_result", canonical_encode(result))
    return result


def _flow_observed(flow: FlowOutcome, expected_attrs: dict[str, Any]) -> tuple[Outcome, str]:
    if flow.result is None:
        return "attack_blocked", "no verification result came back"
    if flow.result.accepted and flow.result.attributes is not None:
        if flow.result.attributes.to_canonical() == expected_attrs:
            return "flow_completes", "accepted with the expected attributes"
        return "attack_succeeds", "accepted with unexpected attributes"
    return "attack_blocked", f"rejected: {flow.result.failure}"


HAPPY_ATTRS = ["name", "credit_score"]
HAPPY_EXPECTED = {"name": SUBJECT_NAME, "credit_score": SUBJECT_CREDIT_SCORE}


# --- scenarios -----------------------------------------------------------------


def _scenario_happy_path(run: ScenarioRun) -> None:
    world = run.world
    rp = world.make_rp(LENDER_CN)
    wallet = world.make_wallet()
    flow = _drive_flow(world, rp, wallet, HAPPY_ATTRS, purpose="loan application")
    observed, detail = _flow_observed(flow, HAPPY_EXPECTED)
    run.record("issuance_round", "flow_completes", observed, detail)


def _scenario_replay(run: ScenarioRun) -> None:
    world = run.world
    rp = world.make_rp(LENDER_CN)
    wallet = world.make_wallet()
    flow = _drive_flow(world, rp, wallet, HAPPY_ATTRS, purpose="loan application")
    observed, detail = _flow_observed(flow, HAPPY_EXPECTED)
    run.record("honest_flow", "flow_completes", observed, detail)

    assert flow.claim_bytes is not None
    result = _submit_directly(
        world, WALLET, rp, flow.claim_bytes, flow.request.nonce,
        note="same claim submitted a second time",
    )
    if result is not None and not result.accepted and result.failure == "nonce_replayed":
        run.record("replayed_submission", "attack_blocked", "attack_blocked", "nonce_replayed")
    elif result is not None and result.accepted:
        run.record("replayed_submission", "attack_blocked", "attack_succeeds", "replay accepted")
    else:
        failure = result.failure if result is not None else "undecodable"
        run.record("replayed_submission", "attack_blocked", "attack_blocked", f"rejected: {failure}")


def _scenario_cross_rp_relay(run: ScenarioRun) -> None:
    world = run.world
    victim = world.make_rp(MERCHANT_CN)
    malicious = world.make_rp(MALICIOUS_RP_CN)
    wallet = world.make_wallet()

    flow = _drive_flow(world, victim, wallet, HAPPY_ATTRS, purpose="order verification")
    observed, detail = _flow_observed(flow, HAPPY_EXPECTED)
    run.record("honest_flow", "flow_completes", observed, detail)

    # The malicious party fetches the victim's request, then presents the same
    # description and nonce to the wallet under its own certificate.
    victim_request = victim.create_request(HAPPY_ATTRS, purpose="order verification")
    world.network.send(
        victim.common_name, malicious.common_name, "claim_request",
        canonical_encode(victim_request),
        note="victim's request obtained by the malicious party",
    )
    forged = ClaimRequest(
        description=victim_request.description,
        nonce=victim_request.nonce,
        rp_certificate=malicious.certificate,
        purpose=victim_request.purpose,
    )
    relay_flow = _drive_flow(
        world, malicious, wallet, HAPPY_ATTRS,
        submit=False, forged_request=forged, request_sender=malicious.common_name,
    )
    assert relay_flow.claim_bytes is not None
    world.network.send(
        WALLET, malicious.common_name, "claim_submit",
        encode_submission(relay_flow.claim_bytes, victim_request.nonce),
        note="claim handed back to the requesting (malicious) party",
    )

    result = _submit_directly(
        world, malicious.common_name, victim, relay_flow.claim_bytes, victim_request.nonce,
        note="claim relayed to the victim party",
    )
    if result is not None and not result.accepted and result.failure == "undecryptable":
        run.record("relayed_claim_submission", "attack_blocked", "attack_blocked", "undecryptable")
    elif result is not None and result.accepted:
        run.record("relayed_claim_submission", "attack_blocked", "attack_succeeds", "victim accepted a relayed claim")
    else:
        failure = result.failure if result is not None else "undecodable"
        run.record("relayed_claim_submission", "attack_blocked", "attack_blocked", f"rejected: {failure}")

    claim = decode_certified_claim(relay_flow.claim_bytes)
    try:
        open_bytes(claim.envelope, world.rp_keys[MERCHANT_CN].private)
        run.record("victim_open_attempt", "attack_blocked", "attack_succeeds", "victim read the sealed attributes")
    except OpenFailure:
        run.record("victim_open_attempt", "attack_blocked", "attack_blocked", "sealed to the malicious party, not the victim")


class _SignFirstAuthority(AttributeAuthority):
    """Deliberately weakened variant for one scenario: sign, then seal.

    The bundle {payload, signature} is sealed to the relying party, so a
    malicious recipient can open it and re-seal the still-signed payload to
    someone else. Exists only inside the harness.
    """

    def _issue(self, attributes: AttributeSet, request: ClaimRequest) -> CertifiedClaim:
        payload = ClaimPayload(attributes=attributes, nonce=request.nonce, issued_at=self._clock.now())
        payload_bytes = canonical_encode(payload)
        signature = sign(payload_bytes, self._sign_keys.private)
        bundle = encoding.canonical_bytes(
            {
                "payload": encoding.b64url_encode(payload_bytes),
                "signature": encoding.b64url_encode(signature),
            }
        )
        envelope = seal_bytes(bundle, request.rp_certificate.enc_public_key, self._rng)
        # aa_signature is unused in this format; keep the object shape.
        return CertifiedClaim(
            envelope=envelope, aa_signature=signature, aa_certificate=self.certificate
        )


def _weakened_reseal(claim: CertifiedClaim, opener: KeyPair, new_recipient: Certificate,
                     rng: RandomSource) -> CertifiedClaim:
    bundle = open_bytes(claim.envelope, opener.private)
    envelope = seal_bytes(bundle, new_recipient.enc_public_key, rng)
    return CertifiedClaim(
        envelope=envelope, aa_signature=claim.aa_signature, aa_certificate=claim.aa_certificate
    )


def _weakened_accept(
    world: World, rp: RelyingParty, claim: CertifiedClaim, nonce: Nonce
) -> VerificationResult:
    """What acceptance looks like when signatures cover plaintext.

    Mirrors the standard pipeline (nonce bookkeeping, trust, consume) but
    verifies the signature over the opened payload instead of the envelope.
    """
    now = world.clock.now()
    status, entry = rp.registry.peek(nonce, now)
    if status != "pending" or entry is None:
        return VerificationResult(False, failure="nonce_unknown", reason=status)
    chain = validate_chain(claim.aa_certificate, rp.intermediates, rp.trust_store, now)
    decision = is_authoritative(
        claim.aa_certificate, entry.description, rp.trust_store, chain, rp.schema_registry
    )
    if not decision.authoritative:
        return VerificationResult(False, failure="untrusted_authority", reason=decision.reason)
    try:
        bundle = encoding.decode_tree(open_bytes(claim.envelope, world.rp_keys[rp.common_name].private))
        payload_bytes = encoding.b64url_decode(encoding.expect_str(bundle, "payload"))
        signature = encoding.b64url_decode(encoding.expect_str(bundle, "signature"))
        if not verify_sig(payload_bytes, signature, claim.aa_certificate.sig_public_key):
            raise BadSignature("payload signature does not verify")
        payload = ClaimPayload.from_canonical(encoding.decode_tree(payload_bytes))
        if payload.nonce.value != nonce.value:
            raise NonceMismatch("sealed nonce mismatch")
    except BadSignature as exc:
        return VerificationResult(False, failure="bad_signature", reason=str(exc))
    except NonceMismatch as exc:
        return VerificationResult(False, failure="nonce_mismatch", reason=str(exc))
    except (OpenFailure, MalformedDocument) as exc:
        return VerificationResult(False, failure="undecryptable", reason=str(exc))
    if rp.registry.consume_if_pending(nonce, now) is None:
        return VerificationResult(False, failure="nonce_replayed", reason="already consumed")
    return VerificationResult(True, attributes=payload.attributes)


def _scenario_sign_then_encrypt(run: ScenarioRun) -> None:
    world = run.world
    victim = world.make_rp(MERCHANT_CN)
    malicious = world.make_rp(MALICIOUS_RP_CN)
    wallet = world.make_wallet()

    flow = _drive_flow(world, victim, wallet, HAPPY_ATTRS, purpose="order verification")
    observed, detail = _flow_observed(flow, HAPPY_EXPECTED)
    run.record("honest_flow", "flow_completes", observed, detail)

    def relay_attack(label: str) -> tuple[CertifiedClaim, Nonce]:
        victim_request = victim.create_request(HAPPY_ATTRS)
        world.network.send(
            victim.common_name, malicious.common_name, "claim_request",
            canonical_encode(victim_request), note=f"{label}: victim request obtained",
        )
        forged = ClaimRequest(
            description=victim_request.description,
            nonce=victim_request.nonce,
            rp_certificate=malicious.certificate,
        )
        relay_flow = _drive_flow(
            world, malicious, wallet, HAPPY_ATTRS,
            submit=False, forged_request=forged, request_sender=malicious.common_name,
        )
        assert relay_flow.claim_bytes is not None
        world.network.send(
            WALLET, malicious.common_name, "claim_submit",
            encode_submission(relay_flow.claim_bytes, victim_request.nonce),
            note=f"{label}: claim handed back to the requesting (malicious) party",
        )
        return decode_certified_claim(relay_flow.claim_bytes), victim_request.nonce

    # Weakened world: the authority signs the plaintext and then seals it.
    weakened = _SignFirstAuthority(
        world.aa_cert, world.aa_sign_keys, world.authority.store, world.schema_registry,
        clock=world.clock, rng=world.rng.derive("weakened-issue"),
    )
    world.authorities[AUTHORITY_CN] = weakened
    world.network.note(HARNESS, "authority switched to the weakened sign-before-seal variant")
    claim, nonce = relay_attack("weakened")
    retargeted = _weakened_reseal(
        claim, world.rp_keys[MALICIOUS_RP_CN], victim.certificate, world.rng.derive("reseal-weak")
    )
    world.network.send(
        MALICIOUS_RP_CN, victim.common_name, "claim_submit",
        encode_submission(canonical_encode(retargeted), nonce),
        note="weakened claim re-sealed to the victim and submitted",
    )
    weak_result = _weakened_accept(world, victim, retargeted, nonce)
    world.network.send(
        victim.common_name, MALICIOUS_RP_CN, "submit_result", canonical_encode(weak_result)
    )
    if weak_result.accepted and weak_result.attributes is not None \
            and weak_result.attributes.to_canonical() == HAPPY_EXPECTED:
        run.record("weakened_retarget", "attack_succeeds", "attack_succeeds",
                   "victim accepted a claim re-sealed by the malicious party")
    else:
        run.record("weakened_retarget", "attack_succeeds", "attack_blocked",
                   f"weakened retarget rejected: {weak_result.failure}")

    # Standard world, same trick: the signature binds the ciphertext, so
    # re-sealing the opened payload cannot keep a valid signature.
    world.authorities[AUTHORITY_CN] = world.authority
    world.network.note(HARNESS, "authority restored to the standard seal-then-sign order")
    claim, nonce = relay_attack("standard")
    payload_bytes = open_bytes(claim.envelope, world.rp_keys[MALICIOUS_RP_CN].private)
    resealed = CertifiedClaim(
        envelope=seal_bytes(payload_bytes, victim.certificate.enc_public_key,
                            world.rng.derive("reseal-std")),
        aa_signature=claim.aa_signature,
        aa_certificate=claim.aa_certificate,
    )
    result = _submit_directly(
        world, MALICIOUS_RP_CN, victim, canonical_encode(resealed), nonce,
        note="standard claim re-sealed to the victim and submitted",
    )
    if result is not None and not result.accepted and result.failure == "bad_signature":
        run.record("standard_retarget", "attack_blocked", "attack_blocked", "bad_signature")
    elif result is not None and result.accepted:
        run.record("standard_retarget", "attack_blocked", "attack_succeeds", "retargeted claim accepted")
    else:
        failure = result.failure if result is not None else "undecodable"
        run.record("standard_retarget", "attack_blocked", "attack_blocked", f"rejected: {failure}")


def _scenario_substituted_certificate(run: ScenarioRun) -> None:
    world = run.world
    victim = world.make_rp(MERCHANT_CN)
    malicious = world.make_rp(MALICIOUS_RP_CN)
    wallet = world.make_wallet()

    flow = _drive_flow(world, malicious, wallet, HAPPY_ATTRS, purpose="membership check")
    observed, detail = _flow_observed(flow, HAPPY_EXPECTED)
    run.record("honest_flow", "flow_completes", observed, detail)

    # This time the malicious party forwards the victim's request verbatim,
    # embedded certificate included, over its own authenticated channel.
    victim_request = victim.create_request(HAPPY_ATTRS)
    request_bytes = canonical_encode(victim_request)
    world.network.send(
        victim.common_name, malicious.common_name, "claim_request", request_bytes,
        note="victim's request (with victim's certificate) obtained",
    )
    delivered = world.network.send(
        malicious.common_name, WALLET, "claim_request", request_bytes,
        note="forwarded verbatim: embedded certificate names the victim",
    )
    try:
        wallet.on_request(delivered, peer_common_name=malicious.common_name)
        run.record("substituted_cert_request", "attack_blocked", "attack_succeeds",
                   "wallet queued a request whose certificate does not match the peer")
    except CertificateMismatch as exc:
        world.network.note(WALLET, f"request refused: {exc}")
        run.record("substituted_cert_request", "attack_blocked", "attack_blocked",
                   "wallet detected the certificate substitution")


def _scenario_tamper(run: ScenarioRun) -> None:
    world = run.world
    rp = world.make_rp(LENDER_CN)
    wallet = world.make_wallet()

    flow = _drive_flow(world, rp, wallet, HAPPY_ATTRS, purpose="loan application")
    observed, detail = _flow_observed(flow, HAPPY_EXPECTED)
    run.record("honest_flow", "flow_completes", observed, detail)

    # Second request; the claim travels back over a line that flips one bit.
    fresh = _drive_flow(world, rp, wallet, HAPPY_ATTRS, submit=False)
    assert fresh.claim_bytes is not None
    flip_rng = world.rng.derive("tamper")
    accepted = 0
    attempts = 24
    for index in range(attempts):
        submission = encode_submission(fresh.claim_bytes, fresh.request.nonce)
        position = int.from_bytes(flip_rng.read(4), "big") % (len(submission) * 8)
        mangled = bytearray(submission)
        mangled[position // 8] ^= 1 << (position % 8)
        delivered = world.network.send(
            WALLET, rp.common_name, "claim_submit", bytes(mangled),
            note=f"tampered in transit: bit {position} flipped",
        )
        try:
            claim, nonce = decode_submission(delivered)
            result = rp.accept_claim(claim, nonce)
            if result.accepted:
                accepted += 1
        except MalformedDocument:
            world.network.note(rp.common_name, "submission rejected: undecodable after tampering")
    if accepted:
        run.record("bit_flip_submissions", "attack_blocked", "attack_succeeds",
                   f"{accepted}/{attempts} tampered submissions accepted")
    else:
        run.record("bit_flip_submissions", "attack_blocked", "attack_blocked",
                   f"0/{attempts} tampered submissions accepted")

    # The untampered claim still goes through: rejection above was the
    # tampering's doing, not broken plumbing.
    final = _submit_directly(world, WALLET, rp, fresh.claim_bytes, fresh.request.nonce,
                             note="untampered submission of the same claim")
    ok = final is not None and final.accepted
    run.record("untampered_submission", "flow_completes",
               "flow_completes" if ok else "attack_blocked",
               "original claim accepted" if ok else "original claim rejected")


def _scenario_fixed_nonce(run: ScenarioRun) -> None:
    world = run.world
    wallet = world.make_wallet()
    repeated = world.rng.derive("broken-nonce").read(16)
    broken_rp = world.make_rp(WEBSHOP_CN, rng=FixedRandomSource(repeated), ttl_seconds=300)

    flow = _drive_flow(world, broken_rp, wallet, HAPPY_ATTRS, purpose="checkout")
    observed, detail = _flow_observed(flow, HAPPY_EXPECTED)
    run.record("honest_flow", "flow_completes", observed, detail)
    assert flow.claim_bytes is not None

    # Past the ttl the consumed nonce is evicted; the broken generator then
    # mints the very same nonce for a brand-new request.
    world.clock.advance(301)
    broken_rp.evict_expired()
    second = broken_rp.create_request(HAPPY_ATTRS, purpose="checkout")
    world.network.send(
        WEBSHOP_CN, WALLET, "claim_request", canonical_encode(second),
        note="new request minted with a repeated nonce" if second.nonce.value == repeated
        else "new request unexpectedly got a fresh nonce",
    )
    replay = _submit_directly(
        world, WALLET, broken_rp, flow.claim_bytes, second.nonce,
        note="stale claim replayed against the repeated nonce",
    )
    if replay is not None and replay.accepted:
        run.record("replay_with_broken_rng", "attack_succeeds", "attack_succeeds",
                   "stale claim accepted as fresh")
    else:
        failure = replay.failure if replay is not None else "undecodable"
        run.record("replay_with_broken_rng", "attack_succeeds", "attack_blocked",
                   f"replay rejected: {failure}")

    # Control: the same timeline with a sound generator.
    sound_rp = world.make_rp(BOOKSTORE_CN, ttl_seconds=300)
    control = _drive_flow(world, sound_rp, wallet, HAPPY_ATTRS, purpose="checkout")
    c_observed, c_detail = _flow_observed(control, HAPPY_EXPECTED)
    run.record("control_honest_flow", "flow_completes", c_observed, c_detail)
    assert control.claim_bytes is not None
    world.clock.advance(301)
    sound_rp.evict_expired()
    fresh_request = sound_rp.create_request(HAPPY_ATTRS, purpose="checkout")
    world.network.send(
        BOOKSTORE_CN, WALLET, "claim_request", canonical_encode(fresh_request),
        note="new request minted with a fresh nonce",
    )
    stale = _submit_directly(
        world, WALLET, sound_rp, control.claim_bytes, control.request.nonce,
        note="stale claim replayed against a party with a sound generator",
    )
    if stale is not None and not stale.accepted and stale.failure in ("nonce_unknown", "expired"):
        run.record("replay_with_secure_rng", "attack_blocked", "attack_blocked",
                   f"rejected: {stale.failure}")
    elif stale is not None and stale.accepted:
        run.record("replay_with_secure_rng", "attack_blocked", "attack_succeeds",
                   "stale claim accepted despite a sound generator")
    else:
        failure = stale.failure if stale is not None else "undecodable"
        run.record("replay_with_secure_rng", "attack_blocked", "attack_blocked",
                   f"rejected: {failure}")


def _scenario_untrusted_aa(run: ScenarioRun) -> None:
    world = run.world
    rp = world.make_rp(LENDER_CN)
    wallet = world.make_wallet()

    flow = _drive_flow(world, rp, wallet, HAPPY_ATTRS, purpose="loan application")
    observed, detail = _flow_observed(flow, HAPPY_EXPECTED)
    run.record("honest_flow", "flow_completes", observed, detail)

    # A self-appointed authority certifies flattering numbers for anyone.
    rogue_stream = world.rng.derive("rogue-aa")
    rogue_sig = generate_keypair("signature", rogue_stream)
    rogue_enc = generate_keypair("encryption", rogue_stream)
    rogue_cert = issue_certificate(
        ROGUE_AA_CN, rogue_sig.public, rogue_enc.public, ROGUE_AA_CN, rogue_sig.private,
        world.root_cert.not_before, world.root_cert.not_after,
    )
    request = rp.create_request(HAPPY_ATTRS)
    world.network.send(
        rp.common_name, ROGUE_AA_CN, "claim_request", canonical_encode(request),
        note="request obtained by a colluding subject of the rogue authority",
    )
    rogue_claim = issue_cic(
        AttributeSet.from_mapping(
            {"name": AttributeValue.text(SUBJECT_NAME), "credit_score": AttributeValue.integer(850)}
        ),
        request.nonce,
        rp.certificate.enc_public_key,
        rogue_sig.private,
        rogue_cert,
        clock=world.clock,
        rng=rogue_stream.derive("issue"),
    )
    result = _submit_directly(
        world, ROGUE_AA_CN, rp, canonical_encode(rogue_claim), request.nonce,
        note="claim certified by a self-appointed authority",
    )
    if result is not None and not result.accepted and result.failure == "untrusted_authority":
        run.record("self_appointed_authority", "attack_blocked", "attack_blocked",
                   "untrusted_authority; never decrypted")
    elif result is not None and result.accepted:
        run.record("self_appointed_authority", "attack_blocked", "attack_succeeds",
                   "self-appointed authority accepted")
    else:
        failure = result.failure if result is not None else "undecodable"
        run.record("self_appointed_authority", "attack_blocked", "attack_blocked",
                   f"rejected: {failure}")


def _scenario_stolen_key(run: ScenarioRun) -> None:
    world = run.world
    rp = world.make_rp(LENDER_CN)
    wallet = world.make_wallet()

    flow = _drive_flow(world, rp, wallet, HAPPY_ATTRS, purpose="loan application")
    observed, detail = _flow_observed(flow, HAPPY_EXPECTED)
    run.record("honest_flow", "flow_completes", observed, detail)

    def forge(note: str) -> VerificationResult | None:
        request = rp.create_request(["credit_score"])
        world.network.send(
            rp.common_name, "key-thief", "claim_request", canonical_encode(request),
            note="request answered by the key thief posing as the subject",
        )
        forged = issue_cic(
            AttributeSet.from_mapping({"credit_score": AttributeValue.integer(850)}),
            request.nonce,
            rp.certificate.enc_public_key,
            world.aa_sign_keys.private,  # stolen
            world.aa_cert,
            clock=world.clock,
            rng=world.rng.derive(f"forge:{note}"),
        )
        return _submit_directly(
            world, "key-thief", rp, canonical_encode(forged), request.nonce, note=note
        )

    before = forge("forged with the stolen signing key, before revocation")
    if before is not None and before.accepted:
        run.record("forged_issuance_before_revocation", "attack_succeeds", "attack_succeeds",
                   "forged claim accepted while the authority is still trusted")
    else:
        failure = before.failure if before is not None else "undecodable"
        run.record("forged_issuance_before_revocation", "attack_succeeds", "attack_blocked",
                   f"forged claim rejected: {failure}")

    revoked_store = revoke(AUTHORITY_CN, rp.trust_store, world.clock.now())
    rp.set_trust_store(revoked_store)
    world.network.note(rp.common_name, f"authority {AUTHORITY_CN} revoked in the trust store")

    after = forge("forged with the stolen signing key, after revocation")
    if after is not None and not after.accepted and after.failure == "untrusted_authority":
        run.record("forged_issuance_after_revocation", "attack_blocked", "attack_blocked",
                   "revoked authority rejected")
    elif after is not None and after.accepted:
        run.record("forged_issuance_after_revocation", "attack_blocked", "attack_succeeds",
                   "forged claim accepted even after revocation")
    else:
        failure = after.failure if after is not None else "undecodable"
        run.record("forged_issuance_after_revocation", "attack_blocked", "attack_blocked",
                   f"rejected: {failure}")


def _scenario_insecure_channel(run: ScenarioRun) -> None:
    world = run.world
    shop = world.make_rp(WEBSHOP_CN)
    wallet = world.make_wallet()
    address_expected = {"shipping_address": SUBJECT_ADDRESS}

    flow = _drive_flow(world, shop, wallet, ["shipping_address"], purpose="delivery")
    observed, detail = _flow_observed(flow, address_expected)
    run.record("honest_flow_secure_channel", "flow_completes", observed, detail)

    # Rebuild the wallet<->shop link without endpoint authentication and with
    # an eavesdropper that can observe and substitute messages.
    class _Eavesdropper:
        def __init__(self) -> None:
            self.seen_request: bytes | None = None
            self.substitution: bytes | None = None

        def __call__(self, kind: str, body: bytes) -> bytes:
            if kind == "claim_request":
                self.seen_request = body
            if kind == "claim_submit" and self.substitution is not None:
                return self.substitution
            return body

    eavesdropper = _Eavesdropper()
    world.network.add_channel(
        SimChannel(endpoints=(WALLET, WEBSHOP_CN), secure=False, interceptor=eavesdropper)
    )

    request = shop.create_request(["shipping_address"], purpose="delivery")
    request_bytes = canonical_encode(request)
    delivered = world.network.send(
        WEBSHOP_CN, WALLET, "claim_request", request_bytes,
        note="request crosses an unauthenticated channel",
    )
    assert eavesdropper.seen_request is not None

    # Playing a legitimate account holder, the attacker gets its own
    # attributes certified against the intercepted request.
    attacker_issue_body = b'{"request":' + eavesdropper.seen_request + b"}"
    attacker_delivered = world.network.send(
        "eavesdropper", AUTHORITY_CN, "issue_request", attacker_issue_body,
        note="attacker requests certification of its own shipping address",
    )
    attacker_claim = world.authority.handle_issue(attacker_delivered, ATTACKER_TOKEN)
    attacker_claim_bytes = world.network.send(
        AUTHORITY_CN, "eavesdropper", "claim_response", canonical_encode(attacker_claim)
    )
    eavesdropper.substitution = encode_submission(attacker_claim_bytes, request.nonce)

    pending = wallet.on_request(delivered, peer_common_name=None, reply_to=WEBSHOP_CN)
    wallet.decide(pending.id, "approve")
    outcome = wallet.relay(pending.id)
    result = outcome.rp_result
    if result is not None and result.accepted and result.attributes is not None \
            and result.attributes.to_canonical() == {"shipping_address": ATTACKER_ADDRESS}:
        run.record("injection_on_insecure_channel", "attack_succeeds", "attack_succeeds",
                   "shop accepted the attacker's shipping address")
    elif result is not None and result.accepted:
        run.record("injection_on_insecure_channel", "attack_succeeds", "attack_blocked",
                   "substitution did not take effect")
    else:
        failure = result.failure if result is not None else "no result"
        run.record("injection_on_insecure_channel", "attack_succeeds", "attack_blocked",
                   f"submission rejected: {failure}")

    # Same purchase over an authenticated channel: interception is
    # structurally impossible, the subject's own address arrives.
    world.network.add_channel(SimChannel(endpoints=(WALLET, WEBSHOP_CN), secure=True))
    secure_flow = _drive_flow(world, shop, wallet, ["shipping_address"], purpose="delivery")
    s_result = secure_flow.result
    if s_result is not None and s_result.accepted and s_result.attributes is not None \
            and s_result.attributes.to_canonical() == address_expected:
        run.record("injection_on_secure_channel", "attack_blocked", "attack_blocked",
                   "subject's own address delivered intact")
    else:
        run.record("injection_on_secure_channel", "attack_blocked", "attack_succeeds",
                   "secure-channel flow did not deliver the subject's address")


# --- catalog -----------------------------------------------------------------


CATALOG: dict[str, ScenarioSpec] = {
    spec.name: spec
    for spec in [
        ScenarioSpec(
            "happy_path",
            "flow_completes",
            "full issuance round: request, consent, certification, relay, acceptance",
            _scenario_happy_path,
        ),
        ScenarioSpec(
            "replay",
            "attack_blocked",
            "a claim already accepted once must be rejected on resubmission; "
            "single-use nonces enforce this",
            _scenario_replay,
        ),
        ScenarioSpec(
            "cross_rp_relay",
            "attack_blocked",
            "a malicious relying party relaying another party's request gets a claim "
            "the victim can neither read nor accept, because it is sealed to the "
            "certificate embedded in the request",
            _scenario_cross_rp_relay,
        ),
        ScenarioSpec(
            "sign_then_encrypt_weakness",
            "attack_succeeds",
            "signing before sealing lets a malicious recipient re-seal the still-signed "
            "attributes to a different party; sealing before signing binds the signature "
            "to the ciphertext and stops the same trick",
            _scenario_sign_then_encrypt,
        ),
        ScenarioSpec(
            "substituted_certificate",
            "attack_blocked",
            "a party presenting someone else's certificate is caught because the "
            "certificate's name does not match the authenticated channel peer",
            _scenario_substituted_certificate,
        ),
        ScenarioSpec(
            "tamper",
            "attack_blocked",
            "any single modified bit on the wire must cause rejection",
            _scenario_tamper,
        ),
        ScenarioSpec(
            "fixed_nonce",
            "attack_succeeds",
            "a relying party whose random generator repeats nonces re-admits a stale "
            "claim; replay defense stands or falls with nonce freshness",
            _scenario_fixed_nonce,
        ),
        ScenarioSpec(
            "untrusted_aa",
            "attack_blocked",
            "a self-appointed authority outside the whitelist and endorser sets is "
            "rejected before its claim is ever decrypted",
            _scenario_untrusted_aa,
        ),
        ScenarioSpec(
            "stolen_aa_key_then_revocation",
            "attack_succeeds",
            "a stolen authority signing key forges accepted claims until the authority's "
            "name is revoked, after which the same forgery is rejected",
            _scenario_stolen_key,
        ),
        ScenarioSpec(
            "insecure_channel_injection",
            "attack_succeeds",
            "on an unauthenticated channel an eavesdropper substitutes a claim certifying "
            "its own shipping address; an authenticated channel makes the interception "
            "structurally impossible",
            _scenario_insecure_channel,
        ),
    ]
}


def list_scenarios() -> list[dict[str, str]]:
    return [
        {"name": spec.name, "rationale": spec.rationale, "expectation": spec.expectation}
        for spec in CATALOG.values()
    ]


def run_scenario(name: str, seed: int) -> ScenarioReport:
    spec = CATALOG.get(name)
    if spec is None:
        raise UnknownScenario(f"no scenario named {name!r}; try one of {sorted(CATALOG)}")
    run = ScenarioRun(spec, seed)
    spec.runner(run)
    return run.report()


def run_all(seed: int) -> list[ScenarioReport]:
    return [run_scenario(name, seed) for name in CATALOG]
