"""Nodal-set figures (SVG) for the limit and computed eigenfunctions.

Thin wrapper around `nodalsplit figures` with the repository's figure config.
"""
import sys
from pathlib import Path

from nodalsplit.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else str(ROOT / "out" / "figures")
    sys.exit(main(["figures", "--config", str(ROOT / "configs" / "figures.json"), "--out", out]))
