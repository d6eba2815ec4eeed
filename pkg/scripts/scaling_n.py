"""Cost of one crude solve as the cycle length doubles, for a few hop radii.

Thin wrapper over ``distsddm bench`` that prints the trend ratios.

    python3 scripts/scaling_n.py --sizes 8,16,32 --R 1,2,4
"""
from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from distsddm.cli import main as cli_main


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--family", default="cycle")
    p.add_argument("--sizes", default="8,16,32")
    p.add_argument("--R", default="1,2,4")
    args = p.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        summary = Path(tmp) / "summary.json"
        code = cli_main([
            "bench", "--family", args.family, "--sizes", args.sizes, "--R-list", args.R,
            "--crude", "--grounding", "shift", "--sigma", "0.1", "--summary", str(summary),
        ])
        if code:
            sys.exit(code)
        print(json.dumps(json.loads(summary.read_text()), indent=2))


if __name__ == "__main__":
    main()
