"""Command line entry point: scenarios, services, key and certificate tooling."""

from __future__ import annotations

import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import click

from . import __version__, encoding
from .core import generate_keypair, issue_certificate
from .errors import UnknownScenario
from .harness import ScenarioReport, list_scenarios, run_all, run_scenario
from .rng import SYSTEM_RNG
from .services import (
    AuthorityConfig,
    RelyingPartyConfig,
    WalletConfig,
    build_authority,
    build_relying_party,
    build_wallet,
    create_authority_app,
    create_rp_app,
    create_wallet_app,
    load_certificate,
    load_keypair,
    save_certificate,
    save_keypair,
)


@click.group()
@click.version_option(version=__version__, prog_name="cic")
def main() -> None:
    """Certified identity claims: reference services and attack scenarios."""


def _print_report(report: ScenarioReport, fmt: str) -> None:
    if fmt == "json":
        sys.stdout.buffer.write(encoding.canonical_bytes(report.to_canonical()) + b"\n")
        return
    status = "PASS" if report.passed else "FAIL"
    click.echo(
        f"{status}  {report.name}  expected={report.expectation}  observed={report.observed}  seed={report.seed}"
    )
    for entry in report.transcript:
        if entry["kind"] == "phase":
            click.echo(f"      {entry['note']}")


@main.command("list")
def list_cmd() -> None:
    """Show the scenario catalog."""
    for entry in list_scenarios():
        click.echo(f"{entry['name']:32s} expects {entry['expectation']}")
        click.echo(f"    {entry['rationale']}")


@main.command("run")
@click.argument("scenario", type=str)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--report", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
def run_cmd(scenario: str, seed: int, fmt: str) -> None:
    """Run one scenario and report its outcome."""
    try:
        report = run_scenario(scenario, seed)
    except UnknownScenario as exc:
        raise click.ClickException(str(exc))
    _print_report(report, fmt)
    sys.exit(0 if report.passed else 1)


@main.command("run-all")
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--report", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
def run_all_cmd(seed: int, fmt: str) -> None:
    """Run every scenario in the catalog; exit nonzero if any fails."""
    reports = run_all(seed)
    for report in reports:
        _print_report(report, fmt)
    failed = [r.name for r in reports if not r.passed]
    if fmt == "text":
        click.echo(f"{len(reports) - len(failed)}/{len(reports)} scenarios passed")
    sys.exit(1 if failed else 0)


@main.command("serve")
@click.argument("role", type=click.Choice(["aa", "rp", "subject"]))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--ttl-seconds", type=int, default=None, help="override the relying party nonce ttl")
def serve_cmd(role: str, config_path: str, ttl_seconds: int | None) -> None:
    """Serve one of the three actors over HTTP."""
    import uvicorn

    if role == "aa":
        config = AuthorityConfig.from_file(config_path)
        app = create_authority_app(build_authority(config))
        host, port = config.host, config.port
    elif role == "rp":
        rp_config = RelyingPartyConfig.from_file(config_path, ttl_override=ttl_seconds)
        app = create_rp_app(build_relying_party(rp_config))
        host, port = rp_config.host, rp_config.port
    else:
        wallet_config = WalletConfig.from_file(config_path)
        app = create_wallet_app(build_wallet(wallet_config), ui_dir=wallet_config.ui_dir)
        host, port = wallet_config.host, wallet_config.port
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("keygen")
@click.option("--usage", type=click.Choice(["signature", "encryption"]), required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def keygen_cmd(usage: str, out_path: str) -> None:
    """Generate a key pair and write it as a canonical JSON document."""
    keys = generate_keypair(usage, SYSTEM_RNG)  # type: ignore[arg-type]
    save_keypair(keys, out_path)
    click.echo(f"wrote {usage} key pair to {out_path}")


@main.command("cert")
@click.option("--subject", "subject_cn", required=True, help="subject common name")
@click.option("--sig-key", "sig_key_path", required=True, type=click.Path(exists=True),
              help="subject's signature key pair file")
@click.option("--enc-key", "enc_key_path", required=True, type=click.Path(exists=True),
              help="subject's encryption key pair file")
@click.option("--issuer-cert", "issuer_cert_path", type=click.Path(exists=True), default=None,
              help="issuer certificate; omit for a self-signed root")
@click.option("--issuer-key", "issuer_key_path", type=click.Path(exists=True), default=None,
              help="issuer's signature key pair file; omit for a self-signed root")
@click.option("--days", type=int, default=365, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def cert_cmd(
    subject_cn: str,
    sig_key_path: str,
    enc_key_path: str,
    issuer_cert_path: str | None,
    issuer_key_path: str | None,
    days: int,
    out_path: str,
) -> None:
    """Issue a certificate: self-signed root, or chained under an issuer."""
    sig_keys = load_keypair(sig_key_path)
    enc_keys = load_keypair(enc_key_path)
    now = datetime.now(timezone.utc).replace(microsecond=0)
    if issuer_cert_path is None or issuer_key_path is None:
        if issuer_cert_path or issuer_key_path:
            raise click.ClickException("--issuer-cert and --issuer-key go together")
        issuer_cn = subject_cn
        issuer_priv = sig_keys.private
    else:
        issuer_cert = load_certificate(issuer_cert_path)
        issuer_keys = load_keypair(issuer_key_path)
        issuer_cn = issuer_cert.subject_common_name
        issuer_priv = issuer_keys.private
    cert = issue_certificate(
        subject_cn,
        sig_keys.public,
        enc_keys.public,
        issuer_cn,
        issuer_priv,
        now - timedelta(days=1),
        now + timedelta(days=days),
    )
    save_certificate(cert, out_path)
    kind = "self-signed root" if cert.self_signed else f"issued by {issuer_cn}"
    click.echo(f"wrote certificate for {subject_cn} ({kind}) to {out_path}")


@main.command("demo")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--mode", type=click.Choice(["interactive", "auto"]), default="interactive",
              show_default=True, help="wallet consent mode")
@click.option("--throttle-seconds", type=int, default=0, show_default=True,
              help="minimum interval between grants of the demo attributes")
@click.option("--ui-dir", type=click.Path(exists=True), default=None,
              help="static directory the wallet should serve at /")
def demo_cmd(out_dir: str, mode: str, throttle_seconds: int, ui_dir: str | None) -> None:
    """Write keys, certificates, stores, and configs for a runnable demo."""
    from .demo import write_demo_environment

    env = write_demo_environment(
        out_dir, wallet_mode=mode, throttle_seconds=throttle_seconds,
        ui_dir=str(Path(ui_dir).resolve()) if ui_dir else None,
    )
    click.echo(f"demo environment written to {env.root_dir}")
    click.echo(f"  cic serve aa      --config {env.authority_config}")
    click.echo(f"  cic serve rp      --config {env.rp_config}")
    click.echo(f"  cic serve subject --config {env.wallet_config}")
    click.echo(f"authority: {env.authority_url}  relying party: {env.rp_url}  wallet: {env.wallet_url}")
    click.echo(f"subject bearer token: {env.subject_token}")


if __name__ == "__main__":
    main()
