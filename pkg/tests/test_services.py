"""HTTP layer via in-process test clients; real sockets live in acceptance."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from cic import encoding
from cic.aa import AttributeAuthority, AttributeStore
from cic.core import canonical_encode, decode_certified_claim
from cic.harness import SUBJECT_TOKEN, demo_subject_records
from cic.rp import RelyingParty, VerificationResult
from cic.services import create_authority_app, create_rp_app, create_wallet_app
from cic.subject import AaDirectory, AaEndpoint, ConsentPolicy, SubjectWallet


@pytest.fixture()
def aa_client(authority):
    return TestClient(create_authority_app(authority))


@pytest.fixture()
def rp_client(relying_party):
    return TestClient(create_rp_app(relying_party))


def _mint_request(rp_client, attrs=("name", "credit_score"), purpose="loan application"):
    body = encoding.canonical_bytes({"attributes": list(attrs), "purpose": purpose})
    response = rp_client.post("/v1/claims/request", content=body)
    assert response.status_code == 200
    return response.content


def _issue(aa_client, request_bytes, token=SUBJECT_TOKEN):
    return aa_client.post(
        "/v1/issue",
        content=b'{"request":' + request_bytes + b"}",
        headers={"Authorization": f"Bearer {token}"},
    )


# --- authority endpoint -------------------------------------------------------


def test_issue_endpoint_happy_path(aa_client, rp_client, fx):
    request_bytes = _mint_request(rp_client)
    response = _issue(aa_client, request_bytes)
    assert response.status_code == 200
    claim = decode_certified_claim(response.content)
    assert claim.aa_certificate.subject_common_name == "firstnational.example"


def test_issue_requires_bearer(aa_client, rp_client):
    request_bytes = _mint_request(rp_client)
    bare = aa_client.post("/v1/issue", content=b'{"request":' + request_bytes + b"}")
    assert bare.status_code == 401
    wrong = _issue(aa_client, request_bytes, token="nope")
    assert wrong.status_code == 401


def test_issue_maps_errors(aa_client, rp_client):
    missing = _mint_request(rp_client, attrs=("bank_balance",))
    assert _issue(aa_client, missing).status_code == 404

    malformed = aa_client.post(
        "/v1/issue", content=b"{oops", headers={"Authorization": f"Bearer {SUBJECT_TOKEN}"}
    )
    assert malformed.status_code == 422


# --- relying party endpoints ------------------------------------------------------


def test_request_endpoint_validates(rp_client):
    bad = rp_client.post(
        "/v1/claims/request", content=encoding.canonical_bytes({"attributes": ["shoe_size"]})
    )
    assert bad.status_code == 422
    empty = rp_client.post(
        "/v1/claims/request", content=encoding.canonical_bytes({"attributes": []})
    )
    assert empty.status_code == 422


def test_submit_endpoint_round_trip(aa_client, rp_client):
    request_bytes = _mint_request(rp_client)
    claim_bytes = _issue(aa_client, request_bytes).content
    tree = encoding.decode_tree(request_bytes)
    nonce_text = tree["nonce"]

    submission = b'{"claim":' + claim_bytes + b',"nonce":"' + nonce_text.encode() + b'"}'
    first = rp_client.post("/v1/claims/submit", content=submission)
    assert first.status_code == 200
    result = VerificationResult.from_canonical(encoding.decode_tree(first.content))
    assert result.accepted
    assert result.attributes.to_canonical() == {"credit_score": 589, "name": "John Davis"}

    second = rp_client.post("/v1/claims/submit", content=submission)
    replay = VerificationResult.from_canonical(encoding.decode_tree(second.content))
    assert not replay.accepted and replay.failure == "nonce_replayed"


def test_submit_endpoint_rejects_garbage(rp_client):
    assert rp_client.post("/v1/claims/submit", content=b"nonsense").status_code == 422


# --- wallet control api --------------------------------------------------------------


class WalletHarness:
    def __init__(self, fx, clock, rng, mode="interactive", throttle=None):
        store = AttributeStore(demo_subject_records())
        self.authority = AttributeAuthority(
            fx.aa_cert, fx.aa_sig, store, fx.registry, clock=clock, rng=rng.derive("aa")
        )
        self.rp = RelyingParty(
            fx.rp_cert, fx.rp_enc, fx.trust_store, fx.registry,
            clock=clock, rng=rng.derive("rp"),
        )
        policy = ConsentPolicy(
            mode=mode,
            auto_allow={"lender.example": frozenset({"name", "credit_score"})},
            throttle=throttle or {},
        )
        directory = AaDirectory(
            {n: AaEndpoint("aa", SUBJECT_TOKEN) for n in ("name", "credit_score")}, fx.registry
        )
        self.wallet = SubjectWallet(
            fx.registry, fx.trust_store, directory, policy,
            aa_transport=self._aa_transport, rp_transport=self._rp_transport, clock=clock,
        )
        self.client = TestClient(create_wallet_app(self.wallet))

    def _aa_transport(self, locator, body, credential):
        return canonical_encode(self.authority.handle_issue(body, credential))

    def _rp_transport(self, reply_to, submission):
        from cic.rp import decode_submission

        claim, nonce = decode_submission(submission)
        return canonical_encode(self.rp.accept_claim(claim, nonce))

    def intake(self, attrs=("name", "credit_score")):
        request = self.rp.create_request(list(attrs), "loan application")
        body = b'{"reply_to":"rp","request":' + canonical_encode(request) + b"}"
        return self.client.post("/v1/requests", content=body)


@pytest.fixture()
def wh(fx, clock, rng):
    return WalletHarness(fx, clock, rng)


def test_intake_then_listing(wh):
    response = wh.intake()
    assert response.status_code == 200
    listed = wh.client.get("/v1/pending").json()
    assert len(listed) == 1
    view = listed[0]
    assert view["rp_common_name"] == "lender.example"
    assert view["attribute_labels"] == ["Name", "Credit score"]
    assert view["state"] == "pending"
    assert view["rp_chain_valid"] is True


def test_approve_completes_flow(wh):
    pending_id = wh.intake().json()["id"]
    response = wh.client.post(f"/v1/pending/{pending_id}/approve")
    assert response.status_code == 200
    view = response.json()
    assert view["state"] == "completed"
    assert view["rp_accepted"] is True
    assert wh.client.get("/v1/pending").json() == []
    history = wh.client.get("/v1/history").json()
    assert [h["id"] for h in history] == [pending_id]


def test_deny_settles_without_sending(wh):
    pending_id = wh.intake().json()["id"]
    response = wh.client.post(f"/v1/pending/{pending_id}/deny")
    assert response.status_code == 200
    assert response.json()["state"] == "denied"
    # The relying party's nonce is still pending: nothing was submitted.
    assert wh.rp.registry.pending_count() == 1


def test_double_decision_conflicts(wh):
    pending_id = wh.intake().json()["id"]
    wh.client.post(f"/v1/pending/{pending_id}/deny")
    assert wh.client.post(f"/v1/pending/{pending_id}/approve").status_code == 409


def test_unknown_id_is_404(wh):
    assert wh.client.get("/v1/pending/req-999999").status_code == 404
    assert wh.client.post("/v1/pending/req-999999/approve").status_code == 404


def test_throttle_surfaces_as_conflict(fx, clock, rng):
    wh = WalletHarness(fx, clock, rng, throttle={("lender.example", "name"): 60})
    first = wh.intake().json()["id"]
    assert wh.client.post(f"/v1/pending/{first}/approve").json()["state"] == "completed"
    clock.advance(10)
    second = wh.intake().json()["id"]
    response = wh.client.post(f"/v1/pending/{second}/approve")
    assert response.status_code == 409
    assert response.json()["error"] == "throttle_exceeded"
    # Still pending; approvable after the interval.
    assert wh.client.get(f"/v1/pending/{second}").json()["state"] == "pending"


def test_auto_mode_processes_at_intake(fx, clock, rng):
    wh = WalletHarness(fx, clock, rng, mode="auto")
    view = wh.intake().json()
    assert view["state"] == "completed"
    assert view["rp_accepted"] is True


def test_malformed_intake_rejected(wh):
    assert wh.client.post("/v1/requests", content=b"{junk").status_code == 422
    assert wh.client.post("/v1/requests", content=b'{"no_request":1}').status_code == 422


def test_control_api_never_carries_claims_or_values(wh):
    pending_id = wh.intake().json()["id"]
    wh.client.post(f"/v1/pending/{pending_id}/approve")
    for payload in (
        wh.client.get("/v1/pending").content,
        wh.client.get("/v1/history").content,
        wh.client.get(f"/v1/pending/{pending_id}").content,
    ):
        assert b"envelope" not in payload
        assert b"aa_signature" not in payload
        assert b"John Davis" not in payload
        assert b"589" not in payload
