#!/usr/bin/env python3
"""Deterministic hyperbolic demos: advected sine hump and d'Alembert rod."""

import sys

from randset_pde.cli import main

if __name__ == "__main__":
    base = sys.argv[1] if len(sys.argv) > 1 else "runs"
    code = main(["transport", "--config", "transport_demo", "--out-dir", f"{base}/transport"])
    if code == 0:
        code = main(["wave", "--config", "wave_dalembert", "--out-dir", f"{base}/wave"])
    print(f"outputs in {base}/transport and {base}/wave")
    raise SystemExit(code)
