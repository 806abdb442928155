"""Command-line front end.

Subcommands: `stylize` runs the full two-pass pipeline from a JSON job
config, `render` drives the renderer alone (transmittance sweeps, contact
sheets), `gen` emits procedural smoke volumes, and `gradcheck` runs the
finite-difference suites.

Exit codes: 0 success, 2 malformed config, 3 missing input files,
4 numerical failure (diverged optimization or failed gradient check).
"""
from __future__ import annotations

import argparse
import csv
import glob
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import volf
from .fields import ColorField, ScalarField, VectorField
from .gradcheck import run_all
from .losses import LossWeights
from .optimize import NumericalAbort, StylizationConfig, stylize_sequence
from .procedural import SMOKE_KINDS, STYLE_KINDS, make_procedural_smoke, make_style_image
from .render import RenderSettings, render_color, render_grayscale, write_png
from .transport import TemporalWindow

GAMMA_SWEEP = (0.001, 0.1, 0.5, 1.0)


class ConfigError(ValueError):
    """Config file is malformed or fails validation."""


class MissingInputError(FileNotFoundError):
    """Config is well-formed but points at files that do not exist."""


@dataclass
class ExportSettings:
    out_dir: Path
    png: bool = True
    volumes: bool = True
    loss_csv: bool = True
    dump_fields: bool = False


@dataclass
class JobConfig:
    density: list[str] | dict
    velocity: list[str] | None
    style: str | dict
    config: StylizationConfig
    export: ExportSettings
    checkpoint_every: int | None = None
    jobs: int = 1


def _section(raw: dict, name: str, allowed: set[str]) -> dict:
    section = raw.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in section {name!r}: {sorted(unknown)}")
    return section


def _expect(value, types, what: str):
    if not isinstance(value, types):
        raise ConfigError(f"{what} has wrong type {type(value).__name__}")
    return value


def _input_frames(value, what: str) -> list[str] | dict:
    """A glob pattern, an explicit path list, or a {"procedural": ...} object."""
    if isinstance(value, dict):
        return value
    if isinstance(value, str):
        matches = sorted(glob.glob(value))
        return matches if matches else [value]  # defer existence check to load time
    if isinstance(value, list) and all(isinstance(p, str) for p in value):
        return list(value)
    raise ConfigError(f"{what} must be a path pattern, a path list, or a procedural object")


def parse_job_config(raw: dict) -> JobConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a JSON object")
    unknown = set(raw) - {"inputs", "render", "features", "optimize", "export"}
    if unknown:
        raise ConfigError(f"unknown top-level sections: {sorted(unknown)}")

    inputs = _section(raw, "inputs", {"density", "velocity", "style", "procedural"})
    render = _section(raw, "render", {"gamma", "steps", "r_max", "resolution", "views", "view_weights"})
    features = _section(raw, "features", {"weights", "layers"})
    optimize = _section(
        raw, "optimize",
        {"iterations", "learning_rate", "alpha", "beta", "layer_weights", "window", "tiles", "seed"},
    )
    export = _section(raw, "export", {"out_dir", "png", "volumes", "loss_csv", "dump_fields"})

    if "procedural" in inputs:
        if "density" in inputs or "velocity" in inputs:
            raise ConfigError("inputs.procedural replaces inputs.density/velocity")
        density = _expect(inputs["procedural"], dict, "inputs.procedural")
        velocity = None
    else:
        if "density" not in inputs:
            raise ConfigError("inputs.density is required (or inputs.procedural)")
        density = _input_frames(inputs["density"], "inputs.density")
        velocity = None
        if inputs.get("velocity") is not None:
            velocity = _input_frames(inputs["velocity"], "inputs.velocity")
            if isinstance(velocity, dict):
                raise ConfigError("inputs.velocity must be paths, not an object")
    if "style" not in inputs:
        raise ConfigError("inputs.style is required")
    style = inputs["style"]
    if not isinstance(style, (str, dict)):
        raise ConfigError("inputs.style must be a path or a generator object")

    resolution = render.get("resolution")
    if resolution is not None:
        if isinstance(resolution, int):
            resolution = (resolution, resolution)
        elif isinstance(resolution, list) and len(resolution) == 2:
            resolution = tuple(int(x) for x in resolution)
        else:
            raise ConfigError("render.resolution must be an int or [nx, ny]")
    views = render.get("views", [0.0])
    if not isinstance(views, list) or not views:
        raise ConfigError("render.views must be a non-empty list of angles (radians)")

    try:
        settings = RenderSettings(
            gamma=float(render.get("gamma", 1.0)),
            steps=render.get("steps"),
            r_max=render.get("r_max"),
            resolution=resolution,
        )
        weights = LossWeights(
            alpha=float(optimize.get("alpha", 0.0)),
            beta=float(optimize.get("beta", 1.0)),
            layer_weights=(
                dict(optimize["layer_weights"])
                if optimize.get("layer_weights") is not None else None
            ),
        )
        lr = optimize.get("learning_rate")
        config = StylizationConfig(
            iterations=int(optimize.get("iterations", 300)),
            learning_rate=None if lr is None else float(lr),
            layers=tuple(features.get("layers", ("relu2_1", "relu3_1"))),
            views=tuple(float(v) for v in views),
            view_weights=(
                tuple(float(w) for w in render["view_weights"])
                if render.get("view_weights") is not None else None
            ),
            window=TemporalWindow(int(optimize.get("window", 1))),
            tiles=int(optimize.get("tiles", 1)),
            seed=int(optimize.get("seed", 0)),
            weights=weights,
            render=settings,
            feature_weights=features.get("weights"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    if "out_dir" not in export:
        raise ConfigError("export.out_dir is required")
    exports = ExportSettings(
        out_dir=Path(_expect(export["out_dir"], str, "export.out_dir")),
        png=bool(export.get("png", True)),
        volumes=bool(export.get("volumes", True)),
        loss_csv=bool(export.get("loss_csv", True)),
        dump_fields=bool(export.get("dump_fields", False)),
    )
    return JobConfig(density=density, velocity=velocity, style=style, config=config, export=exports)


def load_job_config(path: str | Path) -> JobConfig:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_job_config(raw)


def _load_inputs(job: JobConfig) -> tuple[list[ScalarField], list[VectorField] | None]:
    if isinstance(job.density, dict):
        gen = dict(job.density)
        try:
            kind = gen.pop("kind")
            dims = tuple(int(n) for n in gen.pop("dims"))
            frames = int(gen.pop("frames", 1))
            seed = int(gen.pop("seed", 0))
        except KeyError as exc:
            raise ConfigError(f"inputs.procedural missing key {exc}") from exc
        if gen:
            raise ConfigError(f"unknown keys in inputs.procedural: {sorted(gen)}")
        try:
            return make_procedural_smoke(kind, dims, frames, seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    densities = []
    for p in job.density:
        if not Path(p).exists():
            raise MissingInputError(f"density file not found: {p}")
        densities.append(volf.read_scalar(p))
    if job.velocity is None:
        return densities, None
    velocities = []
    for p in job.velocity:
        if not Path(p).exists():
            raise MissingInputError(f"velocity file not found: {p}")
        velocities.append(volf.read_vector(p))
    return densities, velocities


def _load_style(style) -> np.ndarray:
    if isinstance(style, dict):
        gen = dict(style)
        try:
            kind = gen.pop("kind")
        except KeyError as exc:
            raise ConfigError("inputs.style generator needs a 'kind'") from exc
        size = gen.pop("size", 64)
        seed = int(gen.pop("seed", 0))
        if gen:
            raise ConfigError(f"unknown keys in inputs.style: {sorted(gen)}")
        try:
            return make_style_image(kind, size, seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    path = Path(style)
    if not path.exists():
        raise MissingInputError(f"style image not found: {path}")
    from PIL import Image

    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return np.flipud(rgb).copy()  # PNG rows are top-down; fields are bottom-up


def _write_loss_csv(path: Path, histories: dict[str, list[float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "pass", "view", "loss"])
        for pass_name in ("shape", "color"):
            for it, loss in enumerate(histories.get(pass_name, [])):
                writer.writerow([it, pass_name, "all", f"{loss:.9e}"])


def run_job(job: JobConfig) -> int:
    densities, velocities = _load_inputs(job)
    style = _load_style(job.style)
    out = job.export.out_dir
    out.mkdir(parents=True, exist_ok=True)

    checkpoint = None
    if job.checkpoint_every:
        ckpt_dir = out / "checkpoints"
        ckpt_dir.mkdir(exist_ok=True)

        def checkpoint(frame: int, pass_name: str, it: int, image: np.ndarray, loss: float):
            write_png(ckpt_dir / f"f{frame:04d}_{pass_name}_{it:04d}.png", image)
            with open(ckpt_dir / "checkpoints.csv", "a", newline="") as fh:
                csv.writer(fh).writerow([frame, pass_name, it, f"{loss:.9e}"])

    results = stylize_sequence(
        densities, velocities, style, job.config,
        jobs=job.jobs, checkpoint=checkpoint, checkpoint_every=job.checkpoint_every,
    )

    settings = job.config.render
    view = job.config.views[0]
    for t, frame in enumerate(results):
        tag = f"{t:04d}"
        if job.export.png:
            write_png(out / f"gray_{tag}.png", render_grayscale(frame.d_star, view, settings).pixels)
            write_png(
                out / f"color_{tag}.png",
                render_color(frame.d_star, frame.color, view, settings).pixels,
            )
        if job.export.volumes:
            volf.write_field(out / f"color_{tag}.volf", frame.color)
        if job.export.dump_fields:
            volf.write_field(out / f"density_{tag}.volf", frame.d_star)
            volf.write_field(out / f"velocity_{tag}.volf", frame.v_star)
        if job.export.loss_csv:
            _write_loss_csv(out / f"loss_{tag}.csv", frame.loss_history)
        final = {k: v[-1] for k, v in frame.loss_history.items()}
        print(f"frame {t}: shape loss {final['shape']:.4e}, color loss {final['color']:.4e}")
    print(f"wrote {len(results)} frame(s) to {out}")
    return 0


def _grid_to_sheet(rows: list[list[np.ndarray]], pad: int = 2) -> np.ndarray:
    """Tile image panels into one RGB sheet with white separators."""
    as_rgb = [
        [p if p.ndim == 3 else np.repeat(p[..., None], 3, axis=-1) for p in row]
        for row in rows
    ]
    h = max(p.shape[0] for row in as_rgb for p in row)
    w = max(p.shape[1] for row in as_rgb for p in row)
    n_rows, n_cols = len(as_rgb), max(len(row) for row in as_rgb)
    sheet = np.ones((n_rows * h + (n_rows - 1) * pad, n_cols * w + (n_cols - 1) * pad, 3), np.float32)
    for r, row in enumerate(as_rgb):
        for c, panel in enumerate(row):
            y, x = r * (h + pad), c * (w + pad)
            sheet[y : y + panel.shape[0], x : x + panel.shape[1]] = np.clip(panel, 0.0, 1.0)
    return sheet


def gamma_sweep_sheet(
    d: ScalarField,
    color: ColorField | None,
    gammas=GAMMA_SWEEP,
    view: float = 0.0,
    settings: RenderSettings | None = None,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Render the density once per transmittance factor; returns the contact
    sheet and the raw grayscale panels (ordered like `gammas`)."""
    base = settings or RenderSettings()
    grays = []
    colors = []
    for gamma in gammas:
        per = RenderSettings(
            gamma=float(gamma), steps=base.steps, r_max=base.r_max, resolution=base.resolution
        )
        grays.append(render_grayscale(d, view, per).pixels)
        if color is not None:
            colors.append(render_color(d, color, view, per).pixels)
    rows = [grays] + ([colors] if colors else [])
    return _grid_to_sheet(rows), grays


def _cmd_stylize(args) -> int:
    job = load_job_config(args.config)
    if args.seed is not None:
        job.config.seed = args.seed
    job.jobs = max(1, args.jobs)
    job.checkpoint_every = args.checkpoint_every
    return run_job(job)


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad dims {text!r}: expected comma-separated ints") from exc
    if len(dims) not in (2, 3):
        raise ConfigError("dims must have 2 or 3 comma-separated extents")
    return dims


def _cmd_render(args) -> int:
    if args.input is not None:
        if not Path(args.input).exists():
            raise MissingInputError(f"density file not found: {args.input}")
        d = volf.read_scalar(args.input)
    else:
        d = make_procedural_smoke("blob", _parse_dims(args.gen), 1, args.seed or 0)[0][0]
    color = None
    if args.color is not None:
        if not Path(args.color).exists():
            raise MissingInputError(f"color file not found: {args.color}")
        color = volf.read_color(args.color)
    gammas = tuple(float(g) for g in args.gammas.split(","))
    if not gammas or any(g <= 0 for g in gammas):
        raise ConfigError("gammas must be positive floats")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sheet, grays = gamma_sweep_sheet(d, color, gammas, view=args.view)
    for gamma, gray in zip(gammas, grays):
        write_png(out / f"gray_gamma_{gamma:g}.png", gray)
    sheet_path = out / "contact_sheet.png"
    write_png(sheet_path, sheet)
    print(f"wrote contact sheet {sheet_path} ({len(gammas)} transmittance factors)")
    return 0


def _cmd_gen(args) -> int:
    dims = _parse_dims(args.dims)
    try:
        densities, velocities = make_procedural_smoke(args.kind, dims, args.frames, args.seed or 0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for t, (d, v) in enumerate(zip(densities, velocities)):
        volf.write_field(out / f"d_{t:04d}.volf", d)
        volf.write_field(out / f"v_{t:04d}.volf", v)
    print(f"wrote {len(densities)} frame(s) of {args.kind} smoke to {out}")
    return 0


def _cmd_gradcheck(args) -> int:
    reports = run_all()
    for report in reports:
        print(report)
    if all(r.passed for r in reports):
        print("all gradient checks passed")
        return 0
    print("gradient checks FAILED", file=sys.stderr)
    return 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smokestyle", description="Transport-based smoke stylization."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sty = sub.add_parser("stylize", help="run the two-pass pipeline from a JSON job config")
    p_sty.add_argument("--config", required=True, help="path to the JSON job config")
    p_sty.add_argument("--seed", type=int, default=None, help="override optimize.seed")
    p_sty.add_argument("--jobs", type=int, default=1, help="frames optimized in parallel")
    p_sty.add_argument(
        "--checkpoint-every", type=int, default=None,
        help="dump the current render and loss every N iterations",
    )
    p_sty.set_defaults(func=_cmd_stylize)

    p_ren = sub.add_parser("render", help="render a density across transmittance factors")
    p_ren.add_argument("--input", default=None, help="density volume (VOLF)")
    p_ren.add_argument("--color", default=None, help="optional color volume for a second row")
    p_ren.add_argument("--gen", default="32,32,32", help="procedural blob dims when no --input")
    p_ren.add_argument("--gammas", default="0.001,0.1,0.5,1", help="comma-separated factors")
    p_ren.add_argument("--view", type=float, default=0.0, help="view angle in radians")
    p_ren.add_argument("--seed", type=int, default=None)
    p_ren.add_argument("--out", required=True, help="output directory")
    p_ren.set_defaults(func=_cmd_render)

    p_gen = sub.add_parser("gen", help="generate procedural smoke volumes")
    p_gen.add_argument("--kind", choices=SMOKE_KINDS, required=True)
    p_gen.add_argument("--dims", required=True, help="comma-separated grid extents")
    p_gen.add_argument("--frames", type=int, default=1)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=_cmd_gen)

    p_grad = sub.add_parser("gradcheck", help="run the finite-difference gradient suites")
    p_grad.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MissingInputError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 3
    except NumericalAbort as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
