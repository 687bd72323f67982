#!/usr/bin/env python3
"""Sweep the scenario catalog across many seeds and tabulate outcomes.

Every scenario should land on its expected outcome at every seed; a
deviation prints loudly and flips the exit code.

Usage: python scripts/seed_sweep.py [--seeds 25] [--start 0]
"""

from __future__ import annotations

import argparse
import sys
import time

from cic.harness import list_scenarios, run_scenario


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=25, help="number of seeds to sweep")
    parser.add_argument("--start", type=int, default=0, help="first seed")
    args = parser.parse_args()

    names = [entry["name"] for entry in list_scenarios()]
    failures: list[tuple[str, int, str]] = []
    started = time.monotonic()
    for name in names:
        outcomes: dict[str, int] = {}
        for seed in range(args.start, args.start + args.seeds):
            report = run_scenario(name, seed)
            outcomes[report.observed] = outcomes.get(report.observed, 0) + 1
            if not report.passed:
                failures.append((name, seed, report.observed))
        summary = ", ".join(f"{count}x {outcome}" for outcome, count in sorted(outcomes.items()))
        print(f"{name:34s} {summary}")
    elapsed = time.monotonic() - started
    print(f"\n{len(names)} scenarios x {args.seeds} seeds in {elapsed:.1f}s")
    if failures:
        print("DEVIATIONS:")
        for name, seed, observed in failures:
            print(f"  {name} seed={seed} observed={observed}")
        return 1
    print("no deviations")
    return 0


if __name__ == "__main__":
    sys.exit(main())
