#!/usr/bin/env python3
"""Pretty-print the aggregated report.json produced by the `report` stage.

Usage:
    python scripts/print_report.py results/report.json
"""

import json
import sys


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    with open(sys.argv[1]) as fh:
        report = json.load(fh)

    def emit(prefix: str, value) -> None:
        if isinstance(value, dict):
            for key in sorted(value):
                emit(f"{prefix}.{key}" if prefix else key, value[key])
        elif isinstance(value, float):
            print(f"    {prefix:48s} {value:.4f}")
        else:
            print(f"    {prefix:48s} {value}")

    for path in sorted(report):
        print(f"--- {path}")
        emit("", report[path])
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
