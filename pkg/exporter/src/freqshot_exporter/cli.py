"""freqshot-export command line: `export` writes backbone features to an
FSFD dump (flags mirror the primary `extract`); `parity` checks a primary
FQC1 cube dump against the independent reference pipeline."""

import argparse
import sys

from .dctref import RefConfig, verify_parity
from .errors import ExporterError
from .export import ExportJob, export_features


def cmd_export(args) -> int:
    job = ExportJob(
        manifest=args.manifest,
        root=args.root,
        backbone=args.backbone,
        layer=args.layer,
        image_size=args.image_size,
        out=args.out,
        batch_size=args.batch_size,
        weights=args.weights,
        seed=args.seed,
    )
    out = export_features(job)
    print(f"export: {args.backbone}/{args.layer} -> {out}")
    return 0


def cmd_parity(args) -> int:
    cfg = RefConfig.from_channels(args.image_size, args.filter_size, args.channels)
    report = verify_parity(args.image, cfg, args.cube)
    print(
        f"parity: {report.channels} channels, grid {report.grid}, "
        f"max abs diff {report.max_abs_diff:.3e}"
    )
    if args.tolerance is not None and report.max_abs_diff >= args.tolerance:
        print(f"parity: FAILED tolerance {args.tolerance:g}", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freqshot-export")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="write backbone features to an FSFD dump")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--backbone", required=True, choices=["resnet18", "resnet34", "resnet50"])
    p.add_argument("--layer", default="penultimate")
    p.add_argument("--image-size", type=int, default=224)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--weights", default="pretrained", choices=["pretrained", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("parity", help="compare a primary cube dump with the reference pipeline")
    p.add_argument("--image", required=True)
    p.add_argument("--cube", required=True, help="FQC1 dump written by `freqshot cube`")
    p.add_argument("--image-size", type=int, required=True)
    p.add_argument("--filter-size", type=int, default=8)
    p.add_argument("--channels", default="top24")
    p.add_argument("--tolerance", type=float, default=None)
    p.set_defaults(func=cmd_parity)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExporterError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
