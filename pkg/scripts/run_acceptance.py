"""Run every acceptance criterion and write a JSON report.

Usage: python scripts/run_acceptance.py [report.json]
"""
import json
import sys

from nodalsplit.verify import run_all

if __name__ == "__main__":
    results = run_all()
    path = sys.argv[1] if len(sys.argv) > 1 else "acceptance_report.json"
    with open(path, "w") as fh:
        json.dump([r.to_dict() for r in results], fh, indent=2, default=float)
    failed = [r for r in results if r.passed is False]
    print(f"{len(results) - len(failed)} / {len(results)} not failed; report in {path}")
    sys.exit(1 if failed else 0)
