"""Render a smoke volume across transmittance factors and build a contact sheet.

Reproduces the optical-thickness comparison: small gamma approaches a plain
line integral (washed out), gamma near 1 self-shadows. With --color the sheet
gains a second row of color renders.

    python3 scripts/gamma_sweep.py --out out/gamma
    python3 scripts/gamma_sweep.py --input plume.volf --color colors.volf --out out/gamma
"""
import argparse
from pathlib import Path

from smokestyle import volf
from smokestyle.cli import GAMMA_SWEEP, gamma_sweep_sheet
from smokestyle.procedural import gaussian_blob
from smokestyle.render import write_png


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", default=None, help="density VOLF (default: procedural 32^3 blob)")
    ap.add_argument("--color", default=None, help="optional color VOLF for a second sheet row")
    ap.add_argument("--gammas", default=",".join(str(g) for g in GAMMA_SWEEP))
    ap.add_argument("--view", type=float, default=0.0, help="view angle in radians")
    ap.add_argument("--out", required=True, help="output directory")
    args = ap.parse_args()

    d = volf.read_scalar(args.input) if args.input else gaussian_blob((32, 32, 32))
    color = volf.read_color(args.color) if args.color else None
    gammas = tuple(float(g) for g in args.gammas.split(","))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sheet, grays = gamma_sweep_sheet(d, color, gammas, view=args.view)
    for gamma, gray in zip(gammas, grays):
        write_png(out / f"gray_gamma_{gamma:g}.png", gray)
    write_png(out / "contact_sheet.png", sheet)
    print(f"wrote {out / 'contact_sheet.png'} ({len(gammas)} factors: {args.gammas})")


if __name__ == "__main__":
    main()
