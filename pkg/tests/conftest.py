from __future__ import annotations

from datetime import datetime, timezone

import pytest

from cic.aa import AttributeAuthority, AttributeStore
from cic.clock import ManualClock
from cic.core import generate_keypair, issue_certificate
from cic.harness import demo_schemas, demo_subject_records
from cic.rng import SeededRandomSource
from cic.rp import RelyingParty
from cic.trust import SchemaRegistry, TrustStore

ROOT_CN = "root-ca.example"
AA_CN = "firstnational.example"
RP_CN = "lender.example"
OTHER_RP_CN = "merchant-x.example"

NOT_BEFORE = datetime(2019, 12, 1, tzinfo=timezone.utc)
NOT_AFTER = datetime(2021, 6, 1, tzinfo=timezone.utc)
CLOCK_START = datetime(2020, 1, 1, tzinfo=timezone.utc)


class Fixtures:
    """Deterministic keys, certificates, and stores shared across tests."""

    def __init__(self, seed: int = 1234) -> None:
        rng = SeededRandomSource(seed)
        self.registry = SchemaRegistry(demo_schemas())

        self.root_sig = generate_keypair("signature", rng.derive("root"))
        self.root_enc = generate_keypair("encryption", rng.derive("root-enc"))
        self.root_cert = issue_certificate(
            ROOT_CN, self.root_sig.public, self.root_enc.public, ROOT_CN,
            self.root_sig.private, NOT_BEFORE, NOT_AFTER,
        )

        self.aa_sig = generate_keypair("signature", rng.derive("aa"))
        self.aa_enc = generate_keypair("encryption", rng.derive("aa-enc"))
        self.aa_cert = issue_certificate(
            AA_CN, self.aa_sig.public, self.aa_enc.public, ROOT_CN,
            self.root_sig.private, NOT_BEFORE, NOT_AFTER,
        )

        self.rp_sig = generate_keypair("signature", rng.derive("rp"))
        self.rp_enc = generate_keypair("encryption", rng.derive("rp-enc"))
        self.rp_cert = issue_certificate(
            RP_CN, self.rp_sig.public, self.rp_enc.public, ROOT_CN,
            self.root_sig.private, NOT_BEFORE, NOT_AFTER,
        )

        self.other_sig = generate_keypair("signature", rng.derive("other"))
        self.other_enc = generate_keypair("encryption", rng.derive("other-enc"))
        self.other_cert = issue_certificate(
            OTHER_RP_CN, self.other_sig.public, self.other_enc.public, ROOT_CN,
            self.root_sig.private, NOT_BEFORE, NOT_AFTER,
        )

        self.trust_store = TrustStore(
            roots=(self.root_cert,),
            whitelist={
                name: frozenset({AA_CN})
                for name in ("name", "credit_score", "date_of_birth", "shipping_address", "bank_balance")
            },
        )


@pytest.fixture(scope="session")
def fx() -> Fixtures:
    return Fixtures()


@pytest.fixture()
def clock() -> ManualClock:
    return ManualClock(CLOCK_START)


@pytest.fixture()
def rng() -> SeededRandomSource:
    return SeededRandomSource(99)


@pytest.fixture()
def authority(fx: Fixtures, clock: ManualClock, rng: SeededRandomSource) -> AttributeAuthority:
    store = AttributeStore(demo_subject_records())
    return AttributeAuthority(
        fx.aa_cert, fx.aa_sig, store, fx.registry, clock=clock, rng=rng.derive("aa")
    )


@pytest.fixture()
def relying_party(fx: Fixtures, clock: ManualClock, rng: SeededRandomSource) -> RelyingParty:
    return RelyingParty(
        fx.rp_cert, fx.rp_enc, fx.trust_store, fx.registry,
        clock=clock, rng=rng.derive("rp"), ttl_seconds=300,
    )
