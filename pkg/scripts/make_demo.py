#!/usr/bin/env python3
"""Write a runnable three-service demo environment and print the commands.

Equivalent to `cic demo`, exposed as a script for notebook-style use.

Usage: python scripts/make_demo.py OUT_DIR [--mode interactive|auto]
                                   [--throttle-seconds N] [--ui-dir DIR]
"""

from __future__ import annotations

import argparse
from pathlib import Path

from cic.demo import write_demo_environment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--mode", choices=["interactive", "auto"], default="interactive")
    parser.add_argument("--throttle-seconds", type=int, default=0)
    parser.add_argument("--ui-dir", default=None, help="static directory the wallet serves at /")
    args = parser.parse_args()

    env = write_demo_environment(
        args.out_dir,
        wallet_mode=args.mode,
        throttle_seconds=args.throttle_seconds,
        ui_dir=str(Path(args.ui_dir).resolve()) if args.ui_dir else None,
    )
    print(f"demo environment written to {env.root_dir}\n")
    print("run each in its own terminal:")
    print(f"  cic serve aa      --config {env.authority_config}")
    print(f"  cic serve rp      --config {env.rp_config}")
    print(f"  cic serve subject --config {env.wallet_config}")
    print(f"\nauthority {env.authority_url}")
    print(f"relying party {env.rp_url}")
    print(f"wallet {env.wallet_url}")
    print(f"subject bearer token: {env.subject_token}")


if __name__ == "__main__":
    main()
