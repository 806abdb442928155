"""End-to-end demo: generate a rising plume, stylize shape and color, export frames.

Runs the full two-pass pipeline over a procedural sequence with windowed
velocity alignment and writes per-frame renders, color volumes, and loss
curves through the same job runner the CLI uses.

    python3 scripts/stylize_plume.py --out out/plume
    python3 scripts/stylize_plume.py --dims 32,32,32 --frames 4 --window 3 --out out/plume3d
"""
import argparse
import json
import sys
import tempfile
from pathlib import Path

from smokestyle.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="32,32", help="comma-separated grid extents (2 or 3)")
    ap.add_argument("--frames", type=int, default=4)
    ap.add_argument("--window", type=int, default=3, help="velocity alignment window")
    ap.add_argument("--iterations", type=int, default=300)
    ap.add_argument("--style-kind", default="stripes")
    ap.add_argument("--style-seed", type=int, default=1)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--jobs", type=int, default=1, help="frames optimized in parallel")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    job = {
        "inputs": {
            "procedural": {
                "kind": "plume",
                "dims": [int(n) for n in args.dims.split(",")],
                "frames": args.frames,
                "seed": 5,
            },
            "style": {"kind": args.style_kind, "size": 64, "seed": args.style_seed},
        },
        "optimize": {
            "iterations": args.iterations,
            "window": args.window,
            "seed": args.seed,
        },
        "export": {"out_dir": args.out, "dump_fields": True},
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(job, fh)
        config_path = fh.name
    code = cli_main(["stylize", "--config", config_path, "--jobs", str(args.jobs)])
    Path(config_path).unlink()
    sys.exit(code)


if __name__ == "__main__":
    main()
