"""HTTP faces of the three actors, plus the transports that call them.

Bodies are the canonical encoding of the protocol objects; handlers read
raw bytes and decode them with the same strict decoders the kernel uses.
Rejections that are protocol results (a claim failing verification) come
back as 200 with a result document; malformed input, failed authentication,
and missing attributes map to 422/401/404.

Deployments are expected to terminate TLS in front of these apps; endpoint
authentication is assumed, not implemented here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import httpx
from fastapi import FastAPI, Request, Response
from fastapi.staticfiles import StaticFiles

from . import encoding
from .aa import AttributeAuthority, AttributeStore
from .core import (
    AttributeName,
    Certificate,
    KeyPair,
    PrivateKey,
    PublicKey,
    canonical_encode,
    decode_certificate,
    derive_public,
)
from .errors import (
    AaError,
    AttributeUnavailable,
    AuthenticationFailed,
    CicError,
    InvalidState,
    MalformedDocument,
    MalformedRequest,
    ThrottleExceeded,
    TransportError,
    UnknownAttribute,
)
from .rp import RelyingParty, decode_submission
from .subject import AaDirectory, AaEndpoint, ConsentPolicy, SubjectWallet
from .trust import SchemaRegistry, TrustStore


def _error_response(status: int, error: str, detail: str) -> Response:
    body = encoding.canonical_bytes({"error": error, "detail": detail})
    return Response(content=body, status_code=status, media_type="application/json")


def _ok(tree_bytes: bytes, status: int = 200) -> Response:
    return Response(content=tree_bytes, status_code=status, media_type="application/json")


# --- key and certificate files -------------------------------------------------


def save_keypair(keys: KeyPair, path: str | Path) -> None:
    tree = {
        "usage": keys.usage,
        "public": encoding.b64url_encode(keys.public.raw),
        "private": encoding.b64url_encode(keys.private.raw),
    }
    Path(path).write_bytes(encoding.canonical_bytes(tree))


def load_keypair(path: str | Path) -> KeyPair:
    tree = encoding.decode_tree(Path(path).read_bytes())
    usage = encoding.expect_str(tree, "usage")
    private = PrivateKey(usage, encoding.b64url_decode(encoding.expect_str(tree, "private")))  # type: ignore[arg-type]
    public_field = tree.get("public")
    public = (
        PublicKey(usage, encoding.b64url_decode(public_field))  # type: ignore[arg-type]
        if isinstance(public_field, str)
        else derive_public(private)
    )
    return KeyPair(public=public, private=private, usage=usage)  # type: ignore[arg-type]


def save_certificate(cert: Certificate, path: str | Path) -> None:
    Path(path).write_bytes(canonical_encode(cert))


def load_certificate(path: str | Path) -> Certificate:
    return decode_certificate(Path(path).read_bytes())


# --- service configs ------------------------------------------------------------


def _load_json(path: str | Path) -> Any:
    return encoding.decode_tree(Path(path).read_bytes())


def _resolve(base: Path, value: str) -> str:
    p = Path(value)
    return str(p if p.is_absolute() else base / p)


@dataclass(frozen=True)
class AuthorityConfig:
    host: str
    port: int
    sign_key_path: str
    certificate_path: str
    schema_path: str
    attribute_store_path: str

    @classmethod
    def from_file(cls, path: str | Path) -> "AuthorityConfig":
        tree = _load_json(path)
        base = Path(path).resolve().parent
        return cls(
            host=tree.get("host", "127.0.0.1"),
            port=int(tree["port"]),
            sign_key_path=_resolve(base, tree["sign_key_path"]),
            certificate_path=_resolve(base, tree["certificate_path"]),
            schema_path=_resolve(base, tree["schema_path"]),
            attribute_store_path=_resolve(base, tree["attribute_store_path"]),
        )


@dataclass(frozen=True)
class RelyingPartyConfig:
    host: str
    port: int
    enc_key_path: str
    certificate_path: str
    schema_path: str
    trust_store_path: str
    ttl_seconds: int = 300
    intermediate_cert_paths: tuple[str, ...] = ()

    @classmethod
    def from_file(cls, path: str | Path, ttl_override: int | None = None) -> "RelyingPartyConfig":
        tree = _load_json(path)
        base = Path(path).resolve().parent
        return cls(
            host=tree.get("host", "127.0.0.1"),
            port=int(tree["port"]),
            enc_key_path=_resolve(base, tree["enc_key_path"]),
            certificate_path=_resolve(base, tree["certificate_path"]),
            schema_path=_resolve(base, tree["schema_path"]),
            trust_store_path=_resolve(base, tree["trust_store_path"]),
            ttl_seconds=int(ttl_override if ttl_override is not None else tree.get("ttl_seconds", 300)),
            intermediate_cert_paths=tuple(
                _resolve(base, p) for p in tree.get("intermediate_cert_paths", [])
            ),
        )


@dataclass(frozen=True)
class WalletConfig:
    host: str
    port: int
    schema_path: str
    trust_store_path: str
    directory: dict[str, AaEndpoint]
    mode: str = "interactive"
    auto_allow: dict[str, frozenset[str]] = field(default_factory=dict)
    throttle: dict[tuple[str, str], int] = field(default_factory=dict)
    state_path: str | None = None
    ui_dir: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "WalletConfig":
        tree = _load_json(path)
        base = Path(path).resolve().parent
        directory = {
            name: AaEndpoint(locator=entry["endpoint"], credential=entry["credential"])
            for name, entry in tree.get("directory", {}).items()
        }
        policy = tree.get("policy", {})
        throttle = {
            (cn, attr): int(seconds)
            for cn, per_attr in policy.get("throttle", {}).items()
            for attr, seconds in per_attr.items()
        }
        auto_allow = {
            cn: frozenset(names) for cn, names in policy.get("auto_allow", {}).items()
        }
        state_path = tree.get("state_path")
        ui_dir = tree.get("ui_dir")
        return cls(
            host=tree.get("host", "127.0.0.1"),
            port=int(tree["port"]),
            schema_path=_resolve(base, tree["schema_path"]),
            trust_store_path=_resolve(base, tree["trust_store_path"]),
            directory=directory,
            mode=policy.get("mode", "interactive"),
            auto_allow=auto_allow,
            throttle=throttle,
            state_path=_resolve(base, state_path) if state_path else None,
            ui_dir=_resolve(base, ui_dir) if ui_dir else None,
        )


# --- HTTP transports (wallet outbound) -------------------------------------------


def http_aa_transport(locator: str, body: bytes, credential: str) -> bytes:
    """POST the issue body to an authority base URL."""
    try:
        response = httpx.post(
            f"{locator.rstrip('/')}/v1/issue",
            content=body,
            headers={
                "Authorization": f"Bearer {credential}",
                "Content-Type": "application/json",
            },
            timeout=10.0,
        )
    except httpx.HTTPError as exc:
        raise TransportError(f"authority unreachable: {exc}") from exc
    if response.status_code != 200:
        raise AaError(_remote_error(response))
    return response.content


def http_rp_transport(reply_to: str, submission: bytes) -> bytes:
    try:
        response = httpx.post(
            f"{reply_to.rstrip('/')}/v1/claims/submit",
            content=submission,
            headers={"Content-Type": "application/json"},
            timeout=10.0,
        )
    except httpx.HTTPError as exc:
        raise TransportError(f"relying party unreachable: {exc}") from exc
    if response.status_code != 200:
        raise TransportError(_remote_error(response))
    return response.content


def _remote_error(response: httpx.Response) -> str:
    try:
        tree = json.loads(response.content)
        return f"{response.status_code}: {tree.get('error', '')} {tree.get('detail', '')}".strip()
    except ValueError:
        return f"{response.status_code}: {response.text[:200]}"


# --- application factories --------------------------------------------------------


def create_authority_app(authority: AttributeAuthority) -> FastAPI:
    app = FastAPI(title="attribute authority", docs_url=None, redoc_url=None)

    @app.get("/healthz")
    def healthz() -> dict[str, str]:
        return {"status": "ok", "role": "authority"}

    @app.post("/v1/issue")
    async def issue(request: Request) -> Response:
        auth = request.headers.get("authorization", "")
        if not auth.lower().startswith("bearer "):
            return _error_response(401, "authentication_failed", "missing bearer credential")
        credential = auth[7:].strip()
        body = await request.body()
        try:
            claim = authority.handle_issue(body, credential)
        except AuthenticationFailed as exc:
            return _error_response(401, "authentication_failed", str(exc))
        except AttributeUnavailable as exc:
            return _error_response(404, "attribute_unavailable", str(exc))
        except (MalformedRequest, UnknownAttribute) as exc:
            return _error_response(422, "malformed_request", str(exc))
        return _ok(canonical_encode(claim))

    return app


def build_authority(config: AuthorityConfig) -> AttributeAuthority:
    registry = SchemaRegistry.load(config.schema_path)
    store = AttributeStore.load(config.attribute_store_path, registry)
    return AttributeAuthority(
        certificate=load_certificate(config.certificate_path),
        sign_keys=load_keypair(config.sign_key_path),
        store=store,
        schema_registry=registry,
    )


def create_rp_app(rp: RelyingParty) -> FastAPI:
    app = FastAPI(title="relying party", docs_url=None, redoc_url=None)

    @app.get("/healthz")
    def healthz() -> dict[str, str]:
        return {"status": "ok", "role": "relying_party"}

    @app.post("/v1/claims/request")
    async def create_request(request: Request) -> Response:
        rp.evict_expired()
        body = await request.body()
        try:
            tree = encoding.decode_tree(body)
            attrs = encoding.expect_list(tree, "attributes")
            purpose = tree.get("purpose")
            names = [AttributeName(a) for a in attrs]
            claim_request = rp.create_request(names, purpose)
        except (MalformedDocument, UnknownAttribute, CicError) as exc:
            return _error_response(422, "bad_request", str(exc))
        return _ok(canonical_encode(claim_request))

    @app.post("/v1/claims/submit")
    async def submit(request: Request) -> Response:
        rp.evict_expired()
        body = await request.body()
        try:
            claim, nonce = decode_submission(body)
        except MalformedDocument as exc:
            return _error_response(422, "bad_submission", str(exc))
        result = rp.accept_claim(claim, nonce)
        return _ok(canonical_encode(result))

    return app


def build_relying_party(config: RelyingPartyConfig) -> RelyingParty:
    registry = SchemaRegistry.load(config.schema_path)
    return RelyingParty(
        certificate=load_certificate(config.certificate_path),
        enc_keys=load_keypair(config.enc_key_path),
        trust_store=TrustStore.load(config.trust_store_path),
        schema_registry=registry,
        intermediates=[load_certificate(p) for p in config.intermediate_cert_paths],
        ttl_seconds=config.ttl_seconds,
    )


def create_wallet_app(wallet: SubjectWallet, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="subject wallet", docs_url=None, redoc_url=None)

    @app.get("/healthz")
    def healthz() -> dict[str, str]:
        return {"status": "ok", "role": "subject_wallet"}

    @app.post("/v1/requests")
    async def intake(request: Request) -> Response:
        body = await request.body()
        try:
            tree = encoding.decode_tree(body)
            request_tree = encoding.expect_obj(tree, "request")
            reply_to = tree.get("reply_to")
            if reply_to is not None and not isinstance(reply_to, str):
                raise MalformedDocument("reply_to must be a string")
            request_bytes = encoding.canonical_bytes(request_tree)
            pending = wallet.on_request(request_bytes, reply_to=reply_to)
        except (MalformedRequest, MalformedDocument) as exc:
            return _error_response(422, "malformed_request", str(exc))
        if wallet.policy.mode == "auto":
            try:
                pending = wallet.process_auto(pending.id)
            except ThrottleExceeded as exc:
                return _error_response(409, "throttle_exceeded", str(exc))
        return _ok(encoding.canonical_bytes(wallet.view(pending)))

    @app.get("/v1/pending")
    def pending_list() -> Response:
        views = [wallet.view(p) for p in wallet.pending_list()]
        return _ok(encoding.canonical_bytes(views))

    @app.get("/v1/pending/{pending_id}")
    def pending_one(pending_id: str) -> Response:
        try:
            pending = wallet.get(pending_id)
        except InvalidState as exc:
            return _error_response(404, "not_found", str(exc))
        return _ok(encoding.canonical_bytes(wallet.view(pending)))

    @app.post("/v1/pending/{pending_id}/approve")
    def approve(pending_id: str) -> Response:
        try:
            pending = wallet.approve_and_relay(pending_id)
        except ThrottleExceeded as exc:
            return _error_response(409, "throttle_exceeded", str(exc))
        except InvalidState as exc:
            status = 404 if "no pending request" in str(exc) else 409
            return _error_response(status, "invalid_state", str(exc))
        return _ok(encoding.canonical_bytes(wallet.view(pending)))

    @app.post("/v1/pending/{pending_id}/deny")
    def deny(pending_id: str) -> Response:
        try:
            pending = wallet.decide(pending_id, "deny")
        except InvalidState as exc:
            status = 404 if "no pending request" in str(exc) else 409
            return _error_response(status, "invalid_state", str(exc))
        return _ok(encoding.canonical_bytes(wallet.view(pending)))

    @app.get("/v1/history")
    def history() -> Response:
        views = [wallet.view(p) for p in wallet.history()]
        return _ok(encoding.canonical_bytes(views))

    if ui_dir:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def build_wallet(config: WalletConfig) -> SubjectWallet:
    registry = SchemaRegistry.load(config.schema_path)
    policy = ConsentPolicy(
        mode=config.mode,  # type: ignore[arg-type]
        auto_allow=dict(config.auto_allow),
        throttle=dict(config.throttle),
    )
    directory = AaDirectory(config.directory, registry)
    return SubjectWallet(
        schema_registry=registry,
        trust_store=TrustStore.load(config.trust_store_path),
        directory=directory,
        policy=policy,
        aa_transport=http_aa_transport,
        rp_transport=http_rp_transport,
        state_path=config.state_path,
    )
