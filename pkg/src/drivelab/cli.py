"""Command line entry point: one verb per pipeline stage.

    ingest            map file -> world file
    generate-dataset  world file -> labeled frames + records
    train             dataset -> model checkpoint
    eval              checkpoint + dataset split -> report
    drive             closed-loop episode -> trace file
    sweep             scenario parameter sweep -> report (JSON/CSV)
    serve             HTTP facade for the explorer UI
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np


def _bbox(text: str):
    from .geo import GeoBBox

    try:
        return GeoBBox.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _range_spec(text: str):
    # truck_speed=5:25:1 -> (name, lo, hi, step)
    try:
        name, rng = text.split("=", 1)
        lo, hi, step = (float(p) for p in rng.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected name=lo:hi:step") from None
    return name, lo, hi, step


def _assignment(text: str):
    try:
        name, value = text.split("=", 1)
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected name=value") from None


def cmd_ingest(args) -> int:
    from .geo import ingest_map, save_world

    with open(args.map, "rb") as f:
        data = f.read()
    world, summary = ingest_map(data, args.bbox, args.seed)
    save_world(world, args.out)
    print(
        f"kept {summary.roads_kept} roads, {summary.buildings_kept} buildings; "
        f"rejected {len(summary.rejected)} features -> {args.out}"
    )
    if args.verbose:
        for diag in summary.rejected:
            print(f"  feature {diag.index}: {diag.reason}")
    return 0


def cmd_generate_dataset(args) -> int:
    from .dataset import generate_dataset
    from .geo import load_world
    from .sim import EpisodeConfig

    cfg = EpisodeConfig(
        duration_s=args.duration,
        traffic_density=args.traffic_density,
    )
    manifest = generate_dataset(
        load_world(args.world), args.out, episodes=args.episodes, seed=args.seed, base_config=cfg
    )
    counts = manifest.counts["records"]
    print(
        f"wrote {args.out}: train={counts['train']} val={counts['val']} test={counts['test']} "
        f"(rejected {manifest.counts['rejected']})"
    )
    return 0


def cmd_train(args) -> int:
    from .dataset import load_manifest, load_split_arrays
    from .learner import NetConfig, TrainConfig, epoch_table, save_checkpoint, train, TinyConvNet

    manifest = load_manifest(os.path.join(args.dataset, "manifest.json"))
    x_train, y_train, _ = load_split_arrays(args.dataset, "train", manifest)
    x_val, y_val, _ = load_split_arrays(args.dataset, "val", manifest)

    net = TinyConvNet(NetConfig(input_hw=x_train.shape[1:3], in_channels=x_train.shape[3]), seed=args.seed)
    cfg = TrainConfig(
        lr=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        checkpoint_dir=args.checkpoint_dir,
    )
    val = (x_val, y_val) if len(x_val) else None
    history = train(net, x_train, y_train, cfg, val=val)
    save_checkpoint(net, args.out, meta={"history": history, "dataset_seed": manifest.seed})
    if val is not None:
        print(epoch_table(history))
    else:
        for row in history:
            print(f"epoch {row['epoch']:3d}  train_loss {row['train_loss']:.6f}")
    print(f"saved {args.out} ({net.n_params} parameters)")
    return 0


def cmd_eval(args) -> int:
    from .dataset import load_manifest, load_split_arrays
    from .learner import evaluate, load_checkpoint

    net, _ = load_checkpoint(args.model)
    manifest = load_manifest(os.path.join(args.dataset, "manifest.json"))
    x, y, _ = load_split_arrays(args.dataset, args.split, manifest)
    if not len(x):
        print(f"split {args.split!r} is empty", file=sys.stderr)
        return 1
    report = evaluate(net.predict(x), y, manifest.ranges)
    print(report.text_table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(report.to_json() + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_drive(args) -> int:
    from .control import ControllerGains
    from .geo import load_world
    from .sim import EpisodeConfig, run_episode

    gains = ControllerGains()
    if args.gains:
        with open(args.gains, "r", encoding="utf-8") as f:
            gains = ControllerGains.from_json(f.read())
    cfg = EpisodeConfig(
        seed=args.seed,
        duration_s=args.duration,
        traffic_density=args.traffic_density,
        ego_gains=gains,
        allow_lane_changes=args.lane_changes,
    )
    trace = run_episode(load_world(args.world), cfg)
    trace.save_jsonl(args.out)
    status = "collided" if trace.collided else "clean"
    print(f"{len(trace.snapshots)} snapshots over {args.duration:g}s ({status}) -> {args.out}")
    return int(trace.collided) if args.fail_on_collision else 0


def _load_scenario(ref: str):
    from .scenarios import builtin_scenario_ids, load_builtin, load_scenario_file

    if ref in builtin_scenario_ids():
        return load_builtin(ref)
    if os.path.exists(ref):
        return load_scenario_file(ref)
    raise SystemExit(f"no scenario file or built-in named {ref!r}")


def cmd_sweep(args) -> int:
    from .scenarios import run_sweep

    scenario = _load_scenario(args.scenario)
    param = None
    values = None
    if args.param:
        name, lo, hi, step = args.param
        param = name
        n = int(np.floor((hi - lo) / step + 1e-9))
        values = [lo + i * step for i in range(n + 1)]
    report = run_sweep(scenario, param=param, values=values, overrides=dict(args.set or []), seed=args.seed)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(report.to_json() + "\n")
        print(f"wrote {args.out}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as f:
            f.write(report.to_csv())
        print(f"wrote {args.csv}")
    if not args.out and not args.csv:
        print(report.to_csv(), end="")
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    serve(port=args.port, host=args.host, scenario_files=args.scenario or (), ui_dir=args.ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drivelab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="project a map file into a local world file")
    p.add_argument("--map", required=True)
    p.add_argument("--bbox", required=True, type=_bbox, help="lat_min,lon_min,lat_max,lon_max")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--verbose", action="store_true", help="list rejected features")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("generate-dataset", help="simulate episodes and write labeled frames")
    p.add_argument("--world", required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, default=10.0, help="seconds per episode")
    p.add_argument("--traffic-density", type=float, default=2.0, help="vehicles per km")
    p.set_defaults(func=cmd_generate_dataset)

    p = sub.add_parser("train", help="fit the affordance regressor on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint-dir", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a dataset split")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--out", default=None, help="also write the report as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("drive", help="run one closed-loop episode and write its trace")
    p.add_argument("--world", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gains", default=None, help="controller gains JSON file")
    p.add_argument("--traffic-density", type=float, default=2.0)
    p.add_argument("--lane-changes", action="store_true")
    p.add_argument("--fail-on-collision", action="store_true")
    p.set_defaults(func=cmd_drive)

    p = sub.add_parser("sweep", help="grid a scenario parameter and report verdicts")
    p.add_argument("--scenario", required=True, help="built-in id or scenario JSON path")
    p.add_argument("--param", type=_range_spec, default=None, help="name=lo:hi:step")
    p.add_argument("--set", type=_assignment, action="append", help="fix another parameter, name=value")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write report JSON here")
    p.add_argument("--csv", default=None, help="write report CSV here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="serve the HTTP API and the explorer UI")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scenario", action="append", help="extra scenario JSON file (repeatable)")
    p.add_argument("--ui", default=None, help="static UI directory (defaults to frontend/dist)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
