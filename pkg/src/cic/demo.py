"""Generate a complete on-disk environment for running the three services.

Writes key pairs, certificates, the schema registry, the trust store, the
authority's attribute store, and one config file per service, all under a
chosen directory. The fixture people and values match the in-memory
harness so HTTP runs are comparable with scenario runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

from . import encoding
from .core import generate_keypair, issue_certificate
from .harness import (
    ATTACKER_TOKEN,
    AUTHORITY_CN,
    LENDER_CN,
    ROOT_CN,
    SUBJECT_TOKEN,
    demo_schemas,
    demo_subject_records,
)
from .aa import AttributeStore
from .rng import SYSTEM_RNG, RandomSource
from .services import save_certificate, save_keypair
from .trust import SchemaRegistry, TrustStore


@dataclass(frozen=True)
class DemoEnvironment:
    root_dir: Path
    authority_config: Path
    rp_config: Path
    wallet_config: Path
    authority_url: str
    rp_url: str
    wallet_url: str
    subject_token: str
    attacker_token: str


def write_demo_environment(
    root_dir: str | Path,
    *,
    host: str = "127.0.0.1",
    authority_port: int = 8401,
    rp_port: int = 8402,
    wallet_port: int = 8403,
    wallet_mode: str = "interactive",
    throttle_seconds: int = 0,
    ttl_seconds: int = 300,
    rng: RandomSource = SYSTEM_RNG,
    ui_dir: str | None = None,
) -> DemoEnvironment:
    root = Path(root_dir)
    root.mkdir(parents=True, exist_ok=True)

    now = datetime.now(timezone.utc).replace(microsecond=0)
    not_before = now - timedelta(days=1)
    not_after = now + timedelta(days=365)

    registry = SchemaRegistry(demo_schemas())
    registry.save(str(root / "schema.json"))

    root_sig = generate_keypair("signature", rng)
    root_enc = generate_keypair("encryption", rng)
    root_cert = issue_certificate(
        ROOT_CN, root_sig.public, root_enc.public, ROOT_CN, root_sig.private, not_before, not_after
    )
    save_keypair(root_sig, root / "root-sign.key.json")
    save_certificate(root_cert, root / "root.cert.json")

    aa_sig = generate_keypair("signature", rng)
    aa_enc = generate_keypair("encryption", rng)
    aa_cert = issue_certificate(
        AUTHORITY_CN, aa_sig.public, aa_enc.public, ROOT_CN, root_sig.private, not_before, not_after
    )
    save_keypair(aa_sig, root / "authority-sign.key.json")
    save_certificate(aa_cert, root / "authority.cert.json")

    rp_sig = generate_keypair("signature", rng)
    rp_enc = generate_keypair("encryption", rng)
    rp_cert = issue_certificate(
        LENDER_CN, rp_sig.public, rp_enc.public, ROOT_CN, root_sig.private, not_before, not_after
    )
    save_keypair(rp_enc, root / "rp-enc.key.json")
    save_certificate(rp_cert, root / "rp.cert.json")

    store = AttributeStore(demo_subject_records(), path=str(root / "attribute-store.json"))
    store.save()

    trust = TrustStore(
        roots=(root_cert,),
        whitelist={
            name: frozenset({AUTHORITY_CN})
            for name in ("name", "credit_score", "date_of_birth", "shipping_address", "bank_balance")
        },
    )
    trust.save(str(root / "trust-store.json"))

    authority_url = f"http://{host}:{authority_port}"
    rp_url = f"http://{host}:{rp_port}"
    wallet_url = f"http://{host}:{wallet_port}"

    authority_config = root / "authority.config.json"
    authority_config.write_bytes(
        encoding.canonical_bytes(
            {
                "host": host,
                "port": authority_port,
                "sign_key_path": "authority-sign.key.json",
                "certificate_path": "authority.cert.json",
                "schema_path": "schema.json",
                "attribute_store_path": "attribute-store.json",
            }
        )
    )

    rp_config = root / "rp.config.json"
    rp_config.write_bytes(
        encoding.canonical_bytes(
            {
                "host": host,
                "port": rp_port,
                "enc_key_path": "rp-enc.key.json",
                "certificate_path": "rp.cert.json",
                "schema_path": "schema.json",
                "trust_store_path": "trust-store.json",
                "ttl_seconds": ttl_seconds,
            }
        )
    )

    throttle = {}
    if throttle_seconds:
        throttle = {LENDER_CN: {"name": throttle_seconds, "credit_score": throttle_seconds}}
    wallet_config = root / "wallet.config.json"
    wallet_tree = {
        "host": host,
        "port": wallet_port,
        "schema_path": "schema.json",
        "trust_store_path": "trust-store.json",
        "state_path": "wallet-state.json",
        "directory": {
            name: {"endpoint": authority_url, "credential": SUBJECT_TOKEN}
            for name in ("name", "credit_score", "date_of_birth", "shipping_address")
        },
        "policy": {
            "mode": wallet_mode,
            "auto_allow": {LENDER_CN: ["name", "credit_score", "date_of_birth", "shipping_address"]},
            "throttle": throttle,
        },
    }
    if ui_dir:
        wallet_tree["ui_dir"] = ui_dir
    wallet_config.write_bytes(encoding.canonical_bytes(wallet_tree))

    return DemoEnvironment(
        root_dir=root,
        authority_config=authority_config,
        rp_config=rp_config,
        wallet_config=wallet_config,
        authority_url=authority_url,
        rp_url=rp_url,
        wallet_url=wallet_url,
        subject_token=SUBJECT_TOKEN,
        attacker_token=ATTACKER_TOKEN,
    )
