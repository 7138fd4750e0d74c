"""Command-line interface: flow estimation, evaluation, synthetic scene
generation and the dense benchmark."""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio
from .benchmark import ScenePair, evaluate_dense_method, reports_to_csv
from .config import RunConfig, format_config, parse_config_file
from .errors import BlpcError, DimensionError
from .estimator import dense_flow
from .framework import estimate_flow
from .metrics import angular_error, endpoint_error, motion_compensate, mse, nrms, psnr
from .synth import render_pair, standard_suite

USAGE_EXIT = 2


class UsageError(Exception):
    pass


def _load_run_config(args) -> RunConfig:
    cfg = parse_config_file(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "method", None):
        cfg.method = args.method
    threads = getattr(args, "threads", None)
    if threads is None:
        env = os.environ.get("BLPC_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        cfg.threads = threads
    return cfg


def _cmd_flow(args) -> int:
    if args.print_config:
        sys.stdout.write(format_config(_load_run_config(args)))
        return 0
    if not args.frame1 or not args.frame2 or not args.output:
        raise UsageError("flow requires <frame1> <frame2> and -o OUT.flo")
    cfg = _load_run_config(args)
    f1 = fileio.read_image(args.frame1)
    f2 = fileio.read_image(args.frame2)
    t0 = time.perf_counter()
    field = estimate_flow(f1, f2, cfg.framework_config())
    elapsed = time.perf_counter() - t0
    fileio.write_flo(field, args.output)
    if args.viz:
        fileio.write_rgb(fileio.flow_to_color(field), args.viz)
    if args.ratio_map:
        _, rmap = dense_flow(
            f1, f2, method=cfg.method if cfg.method != "auto" else "pc",
            m_w=cfg.m_w, params=cfg.bilateral_params(), with_ratio_map=True,
        )
        fileio.write_image(fileio.ratio_map_to_gray(rmap), args.ratio_map)
    if args.timing:
        sys.stdout.write(f"flow estimated in {elapsed:.3f} s\n")
    return 0


def _cmd_eval(args) -> int:
    if not args.gt and not args.frames:
        raise UsageError("eval needs --gt and/or --frames to have anything to measure")
    flow = fileio.read_flo(args.flow)
    cols: list[str] = []
    vals: list[str] = []
    try:
        return _eval_body(args, flow, cols, vals)
    except DimensionError as exc:
        raise UsageError(f"dimension mismatch: {exc}") from exc


def _eval_body(args, flow, cols, vals) -> int:
    if args.frames:
        f1 = fileio.read_image(args.frames[0])
        f2 = fileio.read_image(args.frames[1])
        comp = motion_compensate(f2, flow)
        m = mse(comp, f1)
        p = psnr(comp, f1)
        cols += ["MSE", "PSNR", "NRMS"]
        vals += [f"{m:.6f}", "exact" if p == float("inf") else f"{p:.4f}",
                 f"{nrms(comp, f1):.6f}"]
    if args.gt:
        gt = fileio.read_flo(args.gt)
        _, ae_mean, n = angular_error(flow, gt)
        _, aef_mean, _ = endpoint_error(flow, gt)
        cols += ["AE", "AEF", "N"]
        vals += [f"{ae_mean:.4f}", f"{aef_mean:.4f}", str(n)]
    report = ",".join(cols) + "\n" + ",".join(vals) + "\n"
    fileio.atomic_write_bytes(args.report, report.encode())
    return 0


def _cmd_synth(args) -> int:
    if args.suite != "standard":
        raise UsageError(f"unknown suite {args.suite!r}")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for i, spec in enumerate(standard_suite(args.seed), start=1):
        d = out / f"scene{i:02d}_{spec.name}"
        d.mkdir(exist_ok=True)
        f1, f2, gt = render_pair(spec)
        fileio.write_image(f1, d / "frame1.pgm")
        fileio.write_image(f2, d / "frame2.pgm")
        fileio.write_flo(gt, d / "gt.flo")
    return 0


def _load_suite_dir(suite_dir: str) -> list[ScenePair]:
    root = Path(suite_dir)
    scenes = []
    for d in sorted(p for p in root.iterdir() if p.is_dir()):
        frames = {f.stem: f for f in d.iterdir() if f.suffix in (".pgm", ".png")}
        if "frame1" not in frames or "frame2" not in frames or not (d / "gt.flo").exists():
            continue
        scenes.append(
            ScenePair(
                name=d.name,
                frame1=fileio.read_image(frames["frame1"]),
                frame2=fileio.read_image(frames["frame2"]),
                gt=fileio.read_flo(d / "gt.flo"),
            )
        )
    if not scenes:
        raise UsageError(f"no scene directories found under {suite_dir}")
    return scenes


def _cmd_bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in ("pc", "blpc", "auto"):
            raise UsageError(f"unknown method {m!r}")
    scenes = _load_suite_dir(args.suite)
    reports = [evaluate_dense_method(scenes, m, m_w=args.m_w) for m in methods]
    fileio.atomic_write_bytes(args.report, reports_to_csv(reports).encode())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blpc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flow", help="estimate optical flow between two frames")
    p.add_argument("frame1", nargs="?")
    p.add_argument("frame2", nargs="?")
    p.add_argument("-o", "--output", help="output .flo path")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--method", choices=["pc", "blpc", "auto"])
    p.add_argument("--viz", help="write a color-wheel PNG of the flow")
    p.add_argument("--ratio-map", dest="ratio_map", help="write a log-scaled peak-ratio PNG")
    p.add_argument("--timing", action="store_true")
    p.add_argument("--threads", type=int)
    p.add_argument("--print-config", action="store_true", help="print defaults and exit")
    p.set_defaults(func=_cmd_flow)

    p = sub.add_parser("eval", help="evaluate an estimated flow field")
    p.add_argument("--flow", required=True)
    p.add_argument("--gt")
    p.add_argument("--frames", nargs=2, metavar=("FRAME1", "FRAME2"))
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="generate the synthetic multi-motion suite")
    p.add_argument("--suite", default="standard")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("bench", help="dense per-pixel benchmark over a suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--methods", default="pc,blpc")
    p.add_argument("--m-w", dest="m_w", type=int, default=32)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return USAGE_EXIT
    except BlpcError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
