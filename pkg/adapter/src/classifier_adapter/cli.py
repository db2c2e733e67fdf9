"""Command-line front end for batch key-frame inference.

Exit codes match the pipeline CLI: 0 success, 1 usage/configuration
errors, 2 input-data problems.
"""

from __future__ import annotations

import argparse
import sys

from .config import AdapterConfig, AdapterError
from .inference import emit_predictions

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="vidfuse-adapter",
        description="Run an image classifier over key-frame and flow-magnitude "
                    "images and export softmax prediction records as JSONL.")
    parser.add_argument("--spatial-dir", metavar="DIR",
                        help="key-frame images named <video_id>_k<idx>.<ext>")
    parser.add_argument("--temporal-dir", metavar="DIR",
                        help="flow images named <video_id>_k<idx>_flow.<ext>")
    parser.add_argument("--out", metavar="JSONL", help="output records path")
    parser.add_argument("--classes", type=int, metavar="L",
                        help="number of labels the head maps to (default: 2)")
    parser.add_argument("--model", metavar="NAME",
                        help="torchvision classification backbone "
                             "(default: resnet18)")
    parser.add_argument("--head-weights", metavar="FILE",
                        help="saved state dict for the linear head")
    parser.add_argument("--seed", type=int,
                        help="initialization seed for the stand-in weights "
                             "(default: 0)")
    parser.add_argument("--batch-size", type=int, metavar="N",
                        help="images per inference batch (default: 16)")
    parser.add_argument("--config", metavar="FILE",
                        help="key = value config file; flags override its values")
    return parser


def _build_config(args: argparse.Namespace) -> AdapterConfig:
    overrides = {
        "spatial_dir": args.spatial_dir,
        "temporal_dir": args.temporal_dir,
        "output": args.out,
        "num_classes": args.classes,
        "model": args.model,
        "head_weights": args.head_weights,
        "seed": args.seed,
        "batch_size": args.batch_size,
    }
    if args.config:
        return AdapterConfig.from_file(args.config, **overrides)
    return AdapterConfig(**{k: v for k, v in overrides.items() if v is not None})


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _build_config(args)
    except AdapterError as exc:
        print(f"vidfuse-adapter: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        count = emit_predictions(config)
    except AdapterError as exc:
        print(f"vidfuse-adapter: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"vidfuse-adapter: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {count} prediction records -> {config.output}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
