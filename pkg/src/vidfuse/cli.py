"""Command-line pipeline: key-frame selection, flow features, fusion, eval.

Subcommands::

    vidfuse keyframes <frames_dir> --n-kf K --out sel.json
    vidfuse flowfeat  <frames_dir> --keyframes sel.json --out-dir DIR
    vidfuse fuse      --preds preds.jsonl --out fused.jsonl [--plan plan.cfg]
    vidfuse eval      --fused fused.jsonl --labels labels.csv --report report.json

Exit codes: 0 on success, 1 on usage or configuration errors, 2 on
input-data errors.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, PipelineConfig, load_fusion_plan
from .conflation import ProbDist
from .frames_io import (FrameIngestError, copy_keyframes, ingest_frame_sequence,
                        write_gray_image)
from .fusion_engine import FusionPlan, multi_tier_fuse, predict_class, evaluate_accuracy
from .keyframe_select import build_frame_graph, select_keyframes
from .motion_features import (export_disparity_csv, export_histograms_csv,
                              motion_histogram, redundancy_threshold,
                              reduce_redundancy, temporal_disparity)
from .optical_flow import compute_dense_flow, magnitude_image
from .records import RecordParseError, group_into_bundles, parse_prediction_records
from .report import write_report_outputs

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    """argparse parser that reports usage errors with exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    """Config file values, overridden by any explicitly supplied flags."""
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {}
    for name in ("n_kf", "alpha", "iterations", "epsilon",
                 "mag_bins", "ang_bins", "mag_cap"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        try:
            config = replace(config, **overrides)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return config


def _consecutive_histograms(frames, config: PipelineConfig):
    """Motion histograms for frames 1..N-1 (frame N has no successor)."""
    params = config.flow_params()
    hist_config = config.histogram_config()
    histograms = []
    for prev, nxt in zip(frames, frames[1:]):
        flow = compute_dense_flow(prev, nxt, params)
        histograms.append(motion_histogram(flow, hist_config))
    return histograms


def cmd_keyframes(args: argparse.Namespace) -> int:
    config = _load_config(args)
    video_id = args.video_id or Path(args.frames_dir).name
    frames = ingest_frame_sequence(args.frames_dir)
    if len(frames) < 4:
        raise FrameIngestError(
            f"need at least 4 frames to select key frames, got {len(frames)}")

    histograms = _consecutive_histograms(frames, config)
    disparities = [temporal_disparity(a, b) for a, b in zip(histograms, histograms[1:])]
    series = redundancy_threshold(disparities)
    kept = reduce_redundancy(histograms, series.threshold)
    by_index = {h.owner_index: h for h in histograms}
    if len(kept) < 2:
        raise FrameIngestError(
            f"redundancy screening left {len(kept)} frame(s); "
            "need at least 2 to build a selection graph")
    graph = build_frame_graph([by_index[k] for k in kept])
    result = select_keyframes(graph, config.n_kf, len(frames))

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    result.save_json(out_path, video_id=video_id, n_kf=config.n_kf)

    frames_out = Path(args.frames_out) if args.frames_out else \
        out_path.parent / f"{video_id}_keyframes"
    copy_keyframes(args.frames_dir, list(result.chosen_frames), video_id, frames_out)

    if args.debug_dir:
        debug_dir = Path(args.debug_dir)
        debug_dir.mkdir(parents=True, exist_ok=True)
        export_histograms_csv(histograms, debug_dir / f"{video_id}_histograms.csv")
        export_disparity_csv(series, [h.owner_index for h in histograms[:-1]],
                             debug_dir / f"{video_id}_disparities.csv")
        _render_disparity_figure(series, [h.owner_index for h in histograms[:-1]],
                                 debug_dir / f"{video_id}_disparities.png")

    _info(f"{video_id}: kept {len(kept)}/{len(histograms)} frames after screening, "
          f"selected {len(result.chosen_frames)} key frames "
          f"(d_low={result.d_low}, padded={result.padded}) -> {out_path}")
    return EXIT_OK


def _render_disparity_figure(series, frame_indices, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 3.0))
    ax.plot(frame_indices, series.values, linewidth=0.9, color="#4878a8")
    ax.axhline(series.threshold, color="#b0413e", linestyle="--", linewidth=1.0,
               label=f"threshold {series.threshold:.4f}")
    ax.set_xlabel("frame")
    ax.set_ylabel("disparity")
    ax.legend(loc="upper right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_flowfeat(args: argparse.Namespace) -> int:
    config = _load_config(args)
    try:
        with open(args.keyframes) as fh:
            selection = json.load(fh)
    except OSError as exc:
        raise FrameIngestError(f"cannot read selection file {args.keyframes}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FrameIngestError(
            f"selection file {args.keyframes} is not valid JSON: {exc}") from exc
    try:
        video_id = selection["video_id"]
        chosen = [entry["frame_index"] for entry in selection["chosen"]]
    except (KeyError, TypeError) as exc:
        raise FrameIngestError(
            f"selection file {args.keyframes} missing field: {exc}") from exc

    frames = ingest_frame_sequence(args.frames_dir)
    params = config.flow_params()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = args.format
    for k in chosen:
        if not (1 <= k < len(frames)):
            raise FrameIngestError(
                f"key frame {k} has no successor in a {len(frames)}-frame video")
        flow = compute_dense_flow(frames[k - 1], frames[k], params)
        image = magnitude_image(flow)
        write_gray_image(image, out_dir / f"{video_id}_k{k}_flow.{ext}")
    _info(f"{video_id}: wrote {len(chosen)} flow feature images -> {out_dir}")
    return EXIT_OK


def _fuse_one(bundle, plan: FusionPlan) -> dict:
    final = multi_tier_fuse(bundle, plan)
    return {
        "video_id": bundle.video_id,
        "predicted_class": predict_class(final),
        "dist": final.probs.tolist(),
        "modalities": list(plan.modalities or bundle.modalities),
        "stages": list(plan.stages),
    }


def cmd_fuse(args: argparse.Namespace) -> int:
    plan = load_fusion_plan(args.plan) if args.plan else FusionPlan()
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    records = parse_prediction_records(args.preds)
    if not records:
        raise RecordParseError(1, f"no prediction records in {args.preds}")
    bundles = group_into_bundles(records)

    if args.jobs == 1:
        fused = [_fuse_one(b, plan) for b in bundles]
    else:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            fused = list(pool.map(lambda b: _fuse_one(b, plan), bundles))

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as fh:
        for row in fused:
            fh.write(json.dumps(row) + "\n")
    _info(f"fused {len(fused)} videos -> {out_path}")
    return EXIT_OK


def _read_fused(path: str | Path) -> list[dict]:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise RecordParseError(lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict) or "video_id" not in obj \
                    or "predicted_class" not in obj:
                raise RecordParseError(
                    lineno, "fused record needs 'video_id' and 'predicted_class'")
            if isinstance(obj["predicted_class"], bool) \
                    or not isinstance(obj["predicted_class"], int):
                raise RecordParseError(
                    lineno, f"predicted_class must be an integer, "
                            f"got {obj['predicted_class']!r}")
            rows.append(obj)
    return rows


def _read_labels(path: str | Path) -> dict[str, int]:
    labels: dict[str, int] = {}
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise FrameIngestError(f"cannot read labels file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["video_id", "label"]:
            raise RecordParseError(1, f"labels file must start with header "
                                      f"'video_id,label', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise RecordParseError(lineno, f"expected 'video_id,label', got {row!r}")
            video_id = row[0].strip()
            try:
                label = int(row[1])
            except ValueError:
                raise RecordParseError(
                    lineno, f"label must be an integer, got {row[1]!r}") from None
            if video_id in labels:
                raise RecordParseError(lineno, f"duplicate label for video {video_id!r}")
            labels[video_id] = label
    return labels


def cmd_eval(args: argparse.Namespace) -> int:
    fused = _read_fused(args.fused)
    labels = _read_labels(args.labels)
    pairs = []
    for row in fused:
        video_id = row["video_id"]
        if video_id not in labels:
            raise RecordParseError(
                1, f"no ground-truth label for video {video_id!r} in {args.labels}")
        pairs.append((row["predicted_class"], labels[video_id]))
    report = evaluate_accuracy(pairs)
    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    written = write_report_outputs(report, report_path)
    _info(f"evaluated {len(pairs)} videos: overall {report.overall_acc:.2f}%, "
          f"macro {report.macro_acc:.2f}% -> {', '.join(str(p) for p in written)}")
    return EXIT_OK


def _add_config_flags(parser: argparse.ArgumentParser, histograms: bool) -> None:
    group = parser.add_argument_group("parameters")
    group.add_argument("--config", metavar="FILE",
                       help="key = value config file; flags override its values")
    group.add_argument("--alpha", type=float, help="flow smoothness weight")
    group.add_argument("--iterations", type=int, help="max flow solver sweeps")
    group.add_argument("--epsilon", type=float,
                       help="flow early-stop threshold on mean squared update")
    if histograms:
        group.add_argument("--mag-bins", dest="mag_bins", type=int,
                           help="number of magnitude histogram bins")
        group.add_argument("--ang-bins", dest="ang_bins", type=int,
                           help="number of direction histogram bins")
        group.add_argument("--mag-cap", dest="mag_cap", type=float,
                           help="magnitude clamp before binning")


def build_parser() -> _Parser:
    parser = _Parser(prog="vidfuse",
                     description="Key-frame selection, optical-flow motion features, "
                                 "and multi-tier probability fusion for videos.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_kf = sub.add_parser("keyframes",
                          help="select key frames from a frame directory")
    p_kf.add_argument("frames_dir", help="directory of PNG/PGM/PPM frames")
    p_kf.add_argument("--n-kf", dest="n_kf", type=int, help="number of key frames")
    p_kf.add_argument("--out", required=True, metavar="SEL_JSON",
                      help="selection result JSON path")
    p_kf.add_argument("--video-id", help="video id (default: frames_dir name)")
    p_kf.add_argument("--frames-out", metavar="DIR",
                      help="directory for copies of the chosen frames "
                           "(default: <video_id>_keyframes next to --out)")
    p_kf.add_argument("--debug-dir", metavar="DIR",
                      help="also write histogram/disparity CSVs and a disparity plot")
    _add_config_flags(p_kf, histograms=True)
    p_kf.set_defaults(func=cmd_keyframes)

    p_ff = sub.add_parser("flowfeat",
                          help="render flow magnitude images for chosen key frames")
    p_ff.add_argument("frames_dir", help="directory of PNG/PGM/PPM frames")
    p_ff.add_argument("--keyframes", required=True, metavar="SEL_JSON",
                      help="selection result JSON from 'keyframes'")
    p_ff.add_argument("--out-dir", required=True, metavar="DIR",
                      help="output directory for magnitude images")
    p_ff.add_argument("--format", choices=("pgm", "png"), default="pgm",
                      help="output image format (default: pgm)")
    _add_config_flags(p_ff, histograms=False)
    p_ff.set_defaults(func=cmd_flowfeat)

    p_fu = sub.add_parser("fuse",
                          help="fuse prediction records into per-video decisions")
    p_fu.add_argument("--preds", required=True, metavar="JSONL",
                      help="prediction records, one JSON object per line")
    p_fu.add_argument("--plan", metavar="FILE",
                      help="fusion plan file (modalities/stages keys)")
    p_fu.add_argument("--out", required=True, metavar="JSONL",
                      help="fused output path")
    p_fu.add_argument("--jobs", type=int, default=1,
                      help="videos fused in parallel (default: 1); "
                           "output is identical at any setting")
    p_fu.set_defaults(func=cmd_fuse)

    p_ev = sub.add_parser("eval",
                          help="score fused decisions against ground truth")
    p_ev.add_argument("--fused", required=True, metavar="JSONL",
                      help="fused output from 'fuse'")
    p_ev.add_argument("--labels", required=True, metavar="CSV",
                      help="ground truth with header video_id,label")
    p_ev.add_argument("--report", required=True, metavar="JSON",
                      help="report JSON path (CSV and figure written alongside)")
    p_ev.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"vidfuse: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FrameIngestError, RecordParseError) as exc:
        print(f"vidfuse: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"vidfuse: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
