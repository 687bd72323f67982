"""Command line surface: key/cert tooling, catalog, runs, demo scaffolding."""

from __future__ import annotations

import dataclasses
import json

from click.testing import CliRunner

from cic import encoding
from cic.cli import main
from cic.services import load_certificate, load_keypair
from cic.trust import TrustStore, validate_chain


def test_list_names_all_scenarios():
    result = CliRunner().invoke(main, ["list"])
    assert result.exit_code == 0
    for name in ("happy_path", "replay", "tamper", "insecure_channel_injection"):
        assert name in result.output


def test_run_json_is_canonical():
    result = CliRunner().invoke(main, ["run", "replay", "--seed", "3", "--report", "json"])
    assert result.exit_code == 0
    tree = encoding.decode_tree(result.output.strip())
    assert tree["name"] == "replay"
    assert tree["pass"] is True
    assert encoding.canonical_bytes(tree) == result.output.strip().encode()


def test_run_unknown_scenario_fails_cleanly():
    result = CliRunner().invoke(main, ["run", "nonsense"])
    assert result.exit_code != 0
    assert "no scenario named" in result.output


def test_run_all_exit_codes(monkeypatch):
    result = CliRunner().invoke(main, ["run-all", "--seed", "5"])
    assert result.exit_code == 0
    assert "10/10 scenarios passed" in result.output

    # Force one scenario to miss its expectation: nonzero exit.
    import cic.harness as harness

    broken = dataclasses.replace(
        harness.CATALOG["happy_path"],
        runner=lambda run: run.record("issuance_round", "flow_completes", "attack_blocked"),
    )
    monkeypatch.setitem(harness.CATALOG, "happy_path", broken)
    result = CliRunner().invoke(main, ["run-all", "--seed", "5"])
    assert result.exit_code == 1
    assert "9/10 scenarios passed" in result.output


def test_keygen_and_cert_chain(tmp_path):
    runner = CliRunner()
    paths = {
        "root_sig": tmp_path / "root-sig.json",
        "root_enc": tmp_path / "root-enc.json",
        "leaf_sig": tmp_path / "leaf-sig.json",
        "leaf_enc": tmp_path / "leaf-enc.json",
    }
    for name, path in paths.items():
        usage = "signature" if name.endswith("sig") else "encryption"
        result = runner.invoke(main, ["keygen", "--usage", usage, "--out", str(path)])
        assert result.exit_code == 0, result.output

    root_cert = tmp_path / "root.cert.json"
    result = runner.invoke(main, [
        "cert", "--subject", "demo-root.example",
        "--sig-key", str(paths["root_sig"]), "--enc-key", str(paths["root_enc"]),
        "--out", str(root_cert),
    ])
    assert result.exit_code == 0, result.output
    assert "self-signed root" in result.output

    leaf_cert = tmp_path / "leaf.cert.json"
    result = runner.invoke(main, [
        "cert", "--subject", "leaf.example",
        "--sig-key", str(paths["leaf_sig"]), "--enc-key", str(paths["leaf_enc"]),
        "--issuer-cert", str(root_cert), "--issuer-key", str(paths["root_sig"]),
        "--out", str(leaf_cert),
    ])
    assert result.exit_code == 0, result.output

    root = load_certificate(root_cert)
    leaf = load_certificate(leaf_cert)
    assert root.self_signed and not leaf.self_signed
    store = TrustStore(roots=(root,))
    from datetime import datetime, timezone

    chain = validate_chain(leaf, [], store, datetime.now(timezone.utc))
    assert chain.valid

    keys = load_keypair(paths["leaf_sig"])
    assert keys.usage == "signature"


def test_cert_requires_both_issuer_flags(tmp_path):
    runner = CliRunner()
    sig = tmp_path / "sig.json"
    enc = tmp_path / "enc.json"
    runner.invoke(main, ["keygen", "--usage", "signature", "--out", str(sig)])
    runner.invoke(main, ["keygen", "--usage", "encryption", "--out", str(enc)])
    result = runner.invoke(main, [
        "cert", "--subject", "x.example",
        "--sig-key", str(sig), "--enc-key", str(enc),
        "--issuer-cert", str(sig),  # missing --issuer-key
        "--out", str(tmp_path / "x.cert.json"),
    ])
    assert result.exit_code != 0


def test_demo_writes_configs(tmp_path):
    result = CliRunner().invoke(main, ["demo", "--out", str(tmp_path / "env")])
    assert result.exit_code == 0, result.output
    for name in ("authority.config.json", "rp.config.json", "wallet.config.json",
                 "schema.json", "trust-store.json", "attribute-store.json"):
        assert (tmp_path / "env" / name).exists()
    wallet_config = json.loads((tmp_path / "env" / "wallet.config.json").read_bytes())
    assert wallet_config["policy"]["mode"] == "interactive"
