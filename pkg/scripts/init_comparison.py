"""Compare color-pass initializations: density-only vs density x white noise.

The monochrome density-only start leaves the optimizer a perfectly gray
initial image; the noise start breaks that symmetry per cell. The script runs
both on the same blob and style, prints final losses and mean cross-channel
saturation, and writes the two color renders side by side.

Note: with the seeded random filter bank the two runs land within a few
percent of each other and the saturation ordering favors the density-only
start; the washout gap the comparison is after needs pretrained
classification weights (SMOKESTYLE_VGG_WEIGHTS).

    python3 scripts/init_comparison.py --out out/init
"""
import argparse
from pathlib import Path

import numpy as np

from smokestyle.cli import _grid_to_sheet
from smokestyle.fields import ScalarField, white_noise
from smokestyle.optimize import StylizationConfig, initial_color, stylize_color
from smokestyle.procedural import gaussian_blob, make_style_image
from smokestyle.render import render_color, write_png


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--sigma", type=float, default=20.0, help="blob radius; ~size/3 fills the frame")
    ap.add_argument("--style-kind", default="patches")
    ap.add_argument("--style-seed", type=int, default=2)
    ap.add_argument("--iterations", type=int, default=300)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    d = gaussian_blob((args.size, args.size), sigma=args.sigma)
    style = make_style_image(args.style_kind, size=64, seed=args.style_seed)
    config = StylizationConfig(iterations=args.iterations, seed=args.seed)

    def run(label, noise):
        color, history = stylize_color(d, style, config, init=initial_color(d, noise))
        inside = color.values[d.values > 0].reshape(-1, 3)
        sat = float(inside.std(axis=1).mean())
        print(f"{label:13s} loss {history[0]:.4f} -> {history[-1]:.4f} "
              f"(ratio {history[-1] / history[0]:.4f}), saturation {sat:.4f}")
        return render_color(d, color, 0.0, config.render).pixels

    panels = [
        run("density-only", ScalarField(np.ones(d.dims, np.float32))),
        run("density*noise", white_noise(d.dims, config.seed)),
    ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_png(out / "init_comparison.png", _grid_to_sheet([panels]))
    print(f"wrote {out / 'init_comparison.png'} (left: density-only, right: density x noise)")


if __name__ == "__main__":
    main()
