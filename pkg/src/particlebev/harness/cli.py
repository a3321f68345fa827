"""Command-line entry points.

Subcommands mirror the pipeline stages: `gen` builds a synthetic corpus,
`prep` runs the training-side reference preparation, `infer` runs particle
refinement with the oracle denoiser, `eval` scores predictions, `sweep`
grids over inference knobs, `heatmap` rasterizes predicted centers, and
`toy` runs the label-ambiguity experiment. Every command takes --seed and
writes a JSON manifest (arguments + library versions, no timestamps)
beside each output so runs are auditable and byte-reproducible.

Relative output paths resolve against $PARTICLEBEV_OUT when set.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from ..diffusion import DEFAULT_SNR, make_cosine_schedule
from ..evaluation import EvalConfig, evaluate_corpus, kde_heatmap
from ..querygrid import QueryGrid
from ..suppression import SuppressionConfig
from ..toylab.experiment import ToyConfig, run_ambiguity_experiment, write_loss_curves
from .inference import run_training_prep
from .oracle import OracleDenoiserConfig
from .render import write_pgm, write_svg_heatmap, write_svg_lines
from .scenes import WorldParams, generate_scenes, read_scenes, write_scenes
from .sweep import SweepSpec, predict_corpus, run_sweep, write_sweep_csv

OUT_DIR_ENV = "PARTICLEBEV_OUT"


def _resolve_out(path: str) -> Path:
    p = Path(path)
    if not p.is_absolute():
        base = os.environ.get(OUT_DIR_ENV)
        if base:
            p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write_manifest(out_path: Path, command: str, args: argparse.Namespace) -> None:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    manifest = {
        "command": command,
        "parameters": params,
        "versions": {
            "particlebev": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    path = out_path.with_name(out_path.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
                    encoding="utf-8")


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _add_suppression_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nms-iou", type=float, default=0.1,
                   help="rotated NMS IoU threshold")
    p.add_argument("--min-confidence", type=float, default=0.02,
                   help="confidence floor before NMS")
    p.add_argument("--radial-radius", type=float, default=0.5,
                   help="radial suppression radius in meters")


def _add_oracle_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--basin-radius", type=float, default=2.0,
                   help="oracle basin of attraction radius in meters")
    p.add_argument("--sigma", type=float, default=0.15,
                   help="oracle center jitter std in meters")
    p.add_argument("--miss-prob", type=float, default=0.05,
                   help="probability the oracle misses an in-basin object")
    p.add_argument("--attr-flip-prob", type=float, default=0.1,
                   help="probability the oracle mislabels an attribute")


def _suppression_from(args: argparse.Namespace) -> SuppressionConfig:
    return SuppressionConfig(nms_iou_threshold=args.nms_iou,
                             min_confidence=args.min_confidence,
                             radial_radius=args.radial_radius)


def _oracle_from(args: argparse.Namespace) -> OracleDenoiserConfig:
    return OracleDenoiserConfig(basin_radius=args.basin_radius, sigma=args.sigma,
                                miss_prob=args.miss_prob,
                                attr_flip_prob=args.attr_flip_prob)


def cmd_gen(args: argparse.Namespace) -> int:
    params = WorldParams(n_scenes=args.scenes, objects_min=args.objects[0],
                         objects_max=args.objects[1],
                         classes=tuple(args.classes),
                         min_separation=args.min_separation)
    scenes = generate_scenes(params, args.seed)
    out = _resolve_out(args.out)
    write_scenes(scenes, out)
    _write_manifest(out, "gen", args)
    n_boxes = sum(len(s.gt_boxes) for s in scenes)
    print(f"wrote {len(scenes)} scenes ({n_boxes} boxes) to {out}")
    return 0


def cmd_prep(args: argparse.Namespace) -> int:
    scenes = read_scenes(args.corpus)
    schedule = make_cosine_schedule(args.t_total)
    grid = None
    if args.grid_size is not None:
        gh, gw, gc = args.grid_size
        grid = QueryGrid.random_init(gh, gw, gc, np.random.default_rng(args.seed))
    out = _resolve_out(args.out)
    with out.open("w", encoding="utf-8") as fh:
        for idx, scene in enumerate(scenes):
            rng = np.random.default_rng([args.seed, idx])
            prep = run_training_prep(scene, args.n_total, schedule, DEFAULT_SNR,
                                     rng, grid=grid, t=args.timestep)
            record = {
                "scene_id": scene.scene_id,
                "t": prep.t,
                "refs_scaled": prep.refs_scaled.tolist(),
                "noisy_refs": prep.noisy_refs.tolist(),
                "noisy_unit": prep.noisy_unit.tolist(),
            }
            if prep.queries is not None:
                record["queries"] = prep.queries.tolist()
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
    _write_manifest(out, "prep", args)
    print(f"wrote training prep for {len(scenes)} scenes to {out}")
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    scenes = read_scenes(args.corpus)
    schedule = make_cosine_schedule(args.t_total)
    preds = predict_corpus(scenes, args.particles, args.steps,
                           _suppression_from(args), _oracle_from(args),
                           args.seed, schedule=schedule, renewal=args.renewal)
    out = _resolve_out(args.out)
    write_scenes(preds, out)
    _write_manifest(out, "infer", args)
    n_pred = sum(len(s.pred_boxes or []) for s in preds)
    print(f"wrote {n_pred} predictions over {len(preds)} scenes to {out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    scenes = read_scenes(args.corpus)
    missing = [s.scene_id for s in scenes if s.pred_boxes is None]
    if missing:
        print(f"error: {len(missing)} scenes have no predictions "
              f"(first: {missing[0]})", file=sys.stderr)
        return 2
    report = evaluate_corpus(scenes, EvalConfig(tp_match_threshold=args.tp_threshold))
    out = _resolve_out(args.out)
    out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    _write_manifest(out, "eval", args)
    errs = report.tp_errors
    fmt = lambda v: "n/a" if v is None else f"{v:.4f}"
    print(f"mAP={report.mean_ap:.4f} NDS={report.nds:.4f} "
          f"mATE={fmt(errs.trans_err)} mASE={fmt(errs.scale_err)} "
          f"mAOE={fmt(errs.orient_err)} mAVE={fmt(errs.vel_err)} "
          f"mAAE={fmt(errs.attr_err)}")
    print(f"wrote report to {out}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    scenes = read_scenes(args.corpus)
    spec = SweepSpec(ddim_steps=tuple(args.steps),
                     n_particles=tuple(args.particles),
                     suppression=(_suppression_from(args),),
                     renewal_modes=tuple(args.renewal),
                     seeds=tuple(args.seeds))
    rows = run_sweep(scenes, spec, _oracle_from(args),
                     schedule=make_cosine_schedule(args.t_total))
    out = _resolve_out(args.out)
    write_sweep_csv(rows, out)
    _write_manifest(out, "sweep", args)
    n_cells = (len(spec.ddim_steps) * len(spec.n_particles)
               * len(spec.suppression) * len(spec.renewal_modes))
    print(f"wrote {len(rows)} rows ({n_cells} cells x {len(spec.seeds)} seeds "
          f"+ aggregates) to {out}")
    return 0


def cmd_heatmap(args: argparse.Namespace) -> int:
    scenes = read_scenes(args.corpus)
    boxes = []
    for scene in scenes:
        source = scene.gt_boxes if args.source == "gt" else (scene.pred_boxes or [])
        boxes.extend(source)
    extent = scenes[0].extent if scenes else None
    if extent is None:
        print("error: empty corpus", file=sys.stderr)
        return 2
    centers = np.array([[b.cx, b.cy] for b in boxes]).reshape(-1, 2)
    weights = None
    if args.source == "pred":
        weights = np.array([b.confidence for b in boxes])
    grid = kde_heatmap(centers, weights, args.bandwidth, extent,
                       grid_h=args.grid[0], grid_w=args.grid[1])
    out = _resolve_out(args.out)
    pgm_path = out.with_suffix(".pgm")
    svg_path = out.with_suffix(".svg")
    write_pgm(grid, pgm_path)
    write_svg_heatmap(grid, svg_path,
                      title=f"{args.source} center density (bw={args.bandwidth:g}m)")
    _write_manifest(out, "heatmap", args)
    print(f"wrote {pgm_path} and {svg_path} from {centers.shape[0]} centers")
    return 0


def cmd_toy(args: argparse.Namespace) -> int:
    results = []
    for seed in args.seeds:
        cfg = ToyConfig(n_targets=args.n_targets, n_references=args.n_refs,
                        reference_mode=args.ref_mode, matching_mode=args.matching,
                        iterations=args.iters, seed=seed)
        res = run_ambiguity_experiment(cfg)
        results.append(res)
        print(f"seed={seed} n_refs={args.n_refs} mode={args.ref_mode}/"
              f"{args.matching} final_loss={res.final_smoothed_loss:.3e} "
              f"converged={res.converged}")
    out = _resolve_out(args.out)
    write_loss_curves(results, out)
    series = [(f"seed {r.config.seed}", np.arange(r.loss_curve.size), r.loss_curve)
              for r in results]
    svg_path = out.with_suffix(".svg")
    write_svg_lines(series, svg_path,
                    title=f"{args.ref_mode} refs, N={args.n_refs}, M={args.n_targets}",
                    x_label="iteration", y_label="log10 L1 loss", log_y=True)
    _write_manifest(out, "toy", args)
    n_conv = sum(r.converged for r in results)
    print(f"{n_conv}/{len(results)} seeds converged; curves in {out}, plot in {svg_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="particlebev",
        description="diffusion-based BEV particle detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic scene corpus")
    p.add_argument("--out", "-o", required=True, help="output JSONL path")
    p.add_argument("--scenes", type=int, default=50)
    p.add_argument("--objects", type=int, nargs=2, default=(2, 8),
                   metavar=("MIN", "MAX"))
    p.add_argument("--min-separation", type=float, default=4.0)
    p.add_argument("--classes", type=_str_list,
                   default=["car", "truck", "pedestrian", "barrier", "traffic_cone"],
                   help="comma-separated class names")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("prep", help="training-side reference preparation")
    p.add_argument("--corpus", required=True, help="input scene JSONL")
    p.add_argument("--out", "-o", required=True, help="output JSONL path")
    p.add_argument("--n-total", type=int, default=900,
                   help="references after padding")
    p.add_argument("--timestep", type=int, default=None,
                   help="fixed diffusion time (default: random per scene)")
    p.add_argument("--t-total", type=int, default=1000,
                   help="diffusion schedule length")
    p.add_argument("--grid-size", type=int, nargs=3, default=None,
                   metavar=("HQ", "WQ", "C"),
                   help="also interpolate a random query grid of this size")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("infer", help="particle-refinement inference with the oracle")
    p.add_argument("--corpus", required=True, help="input scene JSONL")
    p.add_argument("--out", "-o", required=True, help="output JSONL with predictions")
    p.add_argument("--particles", type=int, default=900)
    p.add_argument("--steps", type=int, default=3, help="DDIM steps")
    p.add_argument("--t-total", type=int, default=1000)
    p.add_argument("--renewal", choices=("normal", "none"), default="normal")
    _add_oracle_args(p)
    _add_suppression_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="score a corpus that carries predictions")
    p.add_argument("--corpus", required=True, help="scene JSONL with pred_boxes")
    p.add_argument("--out", "-o", required=True, help="output report JSON")
    p.add_argument("--tp-threshold", type=float, default=2.0,
                   help="distance threshold for TP error pairs")
    p.add_argument("--seed", type=int, default=0,
                   help="unused; accepted for interface uniformity")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid over inference knobs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", "-o", required=True, help="output CSV path")
    p.add_argument("--steps", type=_int_list, default=[1, 3, 5],
                   help="comma-separated DDIM step counts")
    p.add_argument("--particles", type=_int_list, default=[100, 300, 900],
                   help="comma-separated particle counts")
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2, 3, 4])
    p.add_argument("--renewal", type=_str_list, default=["normal"],
                   help="comma-separated renewal modes (normal,none)")
    p.add_argument("--t-total", type=int, default=1000)
    _add_oracle_args(p)
    _add_suppression_args(p)
    p.add_argument("--seed", type=int, default=0,
                   help="unused; cells use their own --seeds")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("heatmap", help="KDE raster of box centers")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", "-o", required=True,
                   help="output base path (.pgm and .svg are written)")
    p.add_argument("--source", choices=("pred", "gt"), default="pred")
    p.add_argument("--bandwidth", type=float, default=1.0, help="kernel std in meters")
    p.add_argument("--grid", type=int, nargs=2, default=(120, 120),
                   metavar=("H", "W"))
    p.add_argument("--seed", type=int, default=0,
                   help="unused; accepted for interface uniformity")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("toy", help="label-ambiguity toy experiment")
    p.add_argument("--out", "-o", required=True, help="output loss-curve CSV")
    p.add_argument("--n-targets", type=int, default=10)
    p.add_argument("--n-refs", type=int, default=10)
    p.add_argument("--ref-mode", choices=("fixed", "random"), default="random")
    p.add_argument("--matching", choices=("by_distance", "by_index"),
                   default="by_distance")
    p.add_argument("--iters", type=int, default=30000)
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--seed", type=int, default=0,
                   help="unused; runs use their own --seeds")
    p.set_defaults(func=cmd_toy)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
