"""Command-line front end: simulate, fuse, eval, sweep.

Exit codes: 0 success, 1 runtime/numeric failure, 2 usage or config error
(argparse uses 2 as well). All outputs are CSVs written through the canonical
formatter, so identical inputs give identical bytes.
"""

from __future__ import annotations

import argparse
import itertools
import sys

import numpy as np

from .errors import (
    ConfigError,
    HabdfError,
    InsufficientDetectorsError,
    RecordFormatError,
)
from .fusion import make_pipeline
from .metrics import FrameEval, gt_distance, jaccard, success, summarize
from .records import (
    load_config,
    parse_grid,
    read_box_csv,
    read_track_csv,
    scenario_from_config,
    tracking_setup_from_config,
    write_csv,
)
from .sim import run_sim_experiment

__all__ = ["main", "cmd_simulate", "cmd_fuse", "cmd_eval", "cmd_sweep"]

SWEEP_CELL_LIMIT = 10_000


def _summary_path(out: str) -> str:
    stem, dot, ext = out.rpartition(".")
    if not dot:
        return out + "_summary"
    return f"{stem}_summary.{ext}"


def _resolve_out(args, cfg) -> str:
    out = args.out or cfg.get("run.out")
    if not out:
        raise ConfigError("no output path: pass --out or set run.out in the config")
    return out


def _sim_frame_rows(result):
    n, T = result.sensors.shape
    header = (
        ["frame", "truth"]
        + [f"sensor_{i + 1}" for i in range(n)]
        + [f"expert_{i + 1}" for i in range(n)]
        + [f"wM_{i + 1}" for i in range(n)]
        + [f"wd_{i + 1}" for i in range(n)]
        + [f"rvv_{i + 1}" for i in range(n)]
        + ["fused", "fused_var"]
    )
    rows = []
    for t in range(T):
        rows.append(
            [int(result.frame[t]), result.truth[t]]
            + list(result.sensors[:, t])
            + list(result.experts[:, t])
            + list(result.w_m[:, t])
            + list(result.w_d[:, t])
            + list(result.rvv[:, t])
            + [result.fused[t], result.fused_var[t]]
        )
    return header, rows


SIM_SUMMARY_HEADER = ["series", "rmse", "mean_wd", "mean_wM", "mean_rvv"]


def _sim_summary_rows(result):
    rows = []
    sensor_rmse = result.sensor_rmse()
    for i in range(result.n_sensors):
        rows.append([
            f"sensor_{i + 1}",
            sensor_rmse[i],
            float(np.mean(result.w_d[i])),
            float(np.mean(result.w_m[i])),
            float(np.mean(result.rvv[i])),
        ])
    rows.append(["fused", result.fused_rmse(), float("nan"), float("nan"), float("nan")])
    return rows


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    scenario = scenario_from_config(cfg, seed=args.seed)
    result = run_sim_experiment(scenario)
    out = _resolve_out(args, cfg)
    header, rows = _sim_frame_rows(result)
    write_csv(out, header, rows)
    summary_out = _summary_path(out)
    write_csv(summary_out, SIM_SUMMARY_HEADER, _sim_summary_rows(result))
    best = float(result.sensor_rmse().min())
    print(
        f"wrote {out} ({result.truth.shape[0]} frames) and {summary_out}; "
        f"fused rmse {result.fused_rmse():.6g}, best sensor rmse {best:.6g}"
    )
    return 0


def cmd_fuse(args) -> int:
    records = read_track_csv(args.tracks)
    if not records:
        raise RecordFormatError(f"{args.tracks}: no records")
    ids = sorted({r.detector_id for r in records})
    if len(ids) < 3:
        raise InsufficientDetectorsError(
            f"{args.tracks} carries {len(ids)} detectors; "
            "majority voting needs at least 3"
        )
    cfg = load_config(args.config)
    model, config, init_var = tracking_setup_from_config(cfg, len(ids))
    pipe = make_pipeline(len(ids), model, config, init_var)

    lookup = {(r.frame, r.detector_id): r for r in records}
    frames = sorted({r.frame for r in records})
    header = ["frame", "u", "v", "h", "w"]
    for name in ("wd", "wM", "rvv"):
        header += [f"{name}_{d}" for d in ids]
    rows = []
    for frame in frames:
        meas = []
        for d in ids:
            rec = lookup.get((frame, d))
            meas.append(rec.box().as_array() if rec is not None and rec.valid else None)
        est = pipe.step(meas)
        if est is None:
            continue  # nothing seen yet on any detector
        box = model.C @ est.state.mean
        row = [frame] + list(box)
        row += [p.w_d for p in est.per_detector]
        row += [p.w_M for p in est.per_detector]
        row += [p.rvv_scale for p in est.per_detector]
        rows.append(row)
    write_csv(args.out, header, rows)
    print(f"wrote {args.out} ({len(rows)} frames, {len(ids)} detectors)")
    return 0


def cmd_eval(args) -> int:
    fused = read_box_csv(args.fused)
    gt = read_box_csv(args.gt)
    common = sorted(set(fused) & set(gt))
    skipped = (len(fused) - len(common)) + (len(gt) - len(common))
    if not common:
        raise RecordFormatError(
            f"no overlapping frames between {args.fused} and {args.gt}"
        )
    evals = []
    for frame in common:
        j = jaccard(fused[frame], gt[frame])
        d = gt_distance(fused[frame], gt[frame])
        evals.append(FrameEval(frame, j, d, success(j, d)))
    write_csv(
        args.out,
        ["frame", "jaccard", "distance", "success"],
        ([e.frame, e.jaccard, e.distance, e.success] for e in evals),
    )
    summary = summarize({"fused": evals})[0]
    summary_out = _summary_path(args.out)
    write_csv(
        summary_out,
        ["approach", "frames", "mean_jaccard", "mean_distance", "success_rate"],
        [[summary.approach, summary.frames, summary.mean_jaccard,
          summary.mean_distance, summary.success_rate]],
    )
    if skipped:
        print(f"excluded {skipped} unmatched frames")
    print(
        f"wrote {args.out} and {summary_out}; {summary.frames} frames, "
        f"mean jaccard {summary.mean_jaccard:.6g}, mean distance "
        f"{summary.mean_distance:.6g}, success rate {summary.success_rate:.6g}"
    )
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    grid = parse_grid(args.grid)
    keys = list(grid)
    cells = 1
    for vals in grid.values():
        cells *= len(vals)
    if cells > SWEEP_CELL_LIMIT and not args.force:
        raise ConfigError(
            f"grid has {cells} cells (> {SWEEP_CELL_LIMIT}); pass --force to run anyway"
        )
    header = keys + ["fused_rmse", "best_sensor_rmse", "mean_wd", "mean_wM", "mean_rvv"]
    rows = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        cell_cfg = dict(cfg)
        cell_cfg.update(zip(keys, combo))
        scenario = scenario_from_config(cell_cfg, seed=args.seed)
        result = run_sim_experiment(scenario)
        rows.append(list(combo) + [
            result.fused_rmse(),
            float(result.sensor_rmse().min()),
            float(np.mean(result.w_d)),
            float(np.mean(result.w_m)),
            float(np.mean(result.rvv)),
        ])
    write_csv(args.out, header, rows)
    print(f"wrote {args.out} ({len(rows)} cells)")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="habdf",
        description="Adaptive multi-sensor fusion: simulate, fuse, eval, sweep.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the fault-injection bench")
    p.add_argument("--config", required=True, help="scenario file (path or bundled name)")
    p.add_argument("--out", help="per-frame CSV path (summary lands next to it)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fuse", help="replay a detector track log through the fusion stack")
    p.add_argument("tracks", help="track CSV: frame,detector_id,u,v,h,w,valid")
    p.add_argument("--config", required=True, help="fusion config file")
    p.add_argument("--out", required=True, help="fused track CSV path")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="score a fused track against ground truth")
    p.add_argument("fused", help="fused track CSV (frame,u,v,h,w,...)")
    p.add_argument("gt", help="ground-truth CSV (frame,u,v,h,w)")
    p.add_argument("--out", required=True, help="per-frame eval CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid-sweep scenario parameters")
    p.add_argument("--config", required=True, help="base scenario file")
    p.add_argument("--grid", action="append", required=True, metavar="KEY=V1,V2",
                   help="axis values; repeat for more axes")
    p.add_argument("--out", required=True, help="summary CSV path, one row per cell")
    p.add_argument("--seed", type=int, help="override the scenario seed for every cell")
    p.add_argument("--force", action="store_true",
                   help=f"allow grids past {SWEEP_CELL_LIMIT} cells")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        name = getattr(exc, "filename", None) or (exc.args[0] if exc.args else exc)
        print(f"error: file not found: {name}", file=sys.stderr)
        return 2
    except (ConfigError, RecordFormatError, InsufficientDetectorsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HabdfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except np.linalg.LinAlgError as exc:
        print(f"error: linear algebra failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
