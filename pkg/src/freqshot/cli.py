"""Command-line entry point.

Subcommands: extract (branch features over a manifest), fuse (merge
spatial and frequency dumps), episodes (episodic evaluation with a JSON
report), synth (seeded synthetic datasets), inspect (dump summary), cube
(FQC1 frequency-cube dump for one image, used for cross-implementation
parity checks), and replay (re-run a recorded command and verify its
outputs byte-for-byte).

Artifact-producing commands write a <out>.run.json run record holding the
argv, config snapshot, seed, output hashes, and wall time. Exit codes:
0 ok, 2 usage, 3 data error, 4 numeric error.
"""

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FreqshotError, UsageError
from .featureio import (
    DumpRow,
    FeatureDump,
    merge_dumps,
    read_dump,
    write_dump,
)
from .features import pool_statistics
from .fewshot import CLASSIFIERS, EpisodeSpec, evaluate_episodes
from .freqcube import ChannelSelection, DctConfig, TOP24, dct_pipeline, write_cube
from .ingest import load_image, load_manifest, resize_image
from .synth import PRESETS, SynthSpec, generate_dataset


def parse_channels(text: str) -> ChannelSelection:
    """`top24` (alias of `square:4,2`), `all`, or `square:a,b`."""
    if text == "top24":
        return TOP24
    if text == "all":
        return ChannelSelection.all_channels()
    if text.startswith("square:"):
        parts = text[len("square:") :].split(",")
        if len(parts) != 2:
            raise UsageError(f"expected square:a,b, got {text!r}")
        try:
            return ChannelSelection.top_left_square(int(parts[0]), int(parts[1]))
        except ValueError:
            raise UsageError(f"non-integer selection sides in {text!r}") from None
    raise UsageError(f"unknown channel selection {text!r}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_run_record(args, config: dict, outputs: list[Path], started: float) -> None:
    record = {
        "argv": list(getattr(args, "_argv")),
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in outputs],
        "wall_time_s": round(time.monotonic() - started, 6),
    }
    record_path = Path(str(outputs[0]) + ".run.json")
    record_path.write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")


def _branch_dim(mode: str, filter_size: int, selection: ChannelSelection) -> int:
    if mode == "spatial":
        return 6
    if selection.keep_all:
        return 2 * 3 * filter_size * filter_size
    return 2 * (selection.y_side**2 + 2 * selection.chroma_side**2)


def cmd_extract(args) -> int:
    started = time.monotonic()
    selection = parse_channels(args.channels)
    manifest = load_manifest(args.manifest)
    root = Path(args.root)
    if args.mode == "frequency":
        cfg = DctConfig(
            s_image=args.image_size,
            s_dct=args.filter_size,
            selection=selection,
            chroma_upsample=args.chroma_upsample,
        )
    rows = []
    for entry in manifest.entries:
        img = load_image(root / entry.image_path)
        if args.mode == "spatial":
            fv = pool_statistics(resize_image(img, args.image_size))
        else:
            fv = pool_statistics(dct_pipeline(img, cfg))
        rows.append(DumpRow(item_id=entry.image_path, class_name=entry.class_name, values=fv.values))
    dump = FeatureDump(
        dim=_branch_dim(args.mode, args.filter_size, selection),
        branch=args.mode,
        rows=tuple(rows),
    )
    write_dump(dump, args.out)
    config = {
        "manifest": str(args.manifest),
        "root": str(args.root),
        "mode": args.mode,
        "image_size": args.image_size,
        "filter_size": args.filter_size,
        "channels": args.channels,
        "chroma_upsample": args.chroma_upsample,
    }
    _write_run_record(args, config, [Path(args.out)], started)
    print(f"extract: {len(rows)} rows, dim {dump.dim}, branch {dump.branch} -> {args.out}")
    return 0


def cmd_fuse(args) -> int:
    started = time.monotonic()
    fused = merge_dumps(read_dump(args.spatial), read_dump(args.frequency))
    write_dump(fused, args.out)
    config = {"spatial": str(args.spatial), "frequency": str(args.frequency)}
    _write_run_record(args, config, [Path(args.out)], started)
    print(f"fuse: {len(fused.rows)} rows, dim {fused.dim} -> {args.out}")
    return 0


def _restrict_to_split(dump: FeatureDump, manifest_path: str, split: str) -> FeatureDump:
    manifest = load_manifest(manifest_path)
    wanted = {e.image_path for e in manifest.entries if e.split == split}
    rows = tuple(r for r in dump.rows if r.item_id in wanted)
    return FeatureDump(dim=dump.dim, branch=dump.branch, rows=rows)


def cmd_episodes(args) -> int:
    started = time.monotonic()
    dump = read_dump(args.features)
    if args.manifest is not None:
        dump = _restrict_to_split(dump, args.manifest, args.split)
    spec = EpisodeSpec(k_way=args.way, n_shot=args.shot, n_query=args.query, seed=args.seed)
    report = evaluate_episodes(
        dump,
        spec,
        args.classifier,
        args.episodes,
        head_epochs=args.head_epochs,
        head_learning_rate=args.head_lr,
    )
    payload = {
        "way": args.way,
        "shot": args.shot,
        "query": args.query,
        "episodes": args.episodes,
        "classifier": args.classifier,
        "mean": report.mean_accuracy,
        "half_width": report.half_width,
        "seed": args.seed,
        "feature_dim": dump.dim,
        "branch": dump.branch,
    }
    Path(args.report).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    config = {k: payload[k] for k in ("way", "shot", "query", "episodes", "classifier")}
    config["features"] = str(args.features)
    _write_run_record(args, config, [Path(args.report)], started)
    print(
        f"{args.way}-way {args.shot}-shot {args.classifier} over {args.episodes} episodes: "
        f"{report.mean_accuracy:.2f} +/- {report.half_width:.2f}"
    )
    return 0


def cmd_synth(args) -> int:
    started = time.monotonic()
    spec = SynthSpec(
        preset=args.preset,
        classes=args.classes,
        per_class=args.per_class,
        size=args.size,
        seed=args.seed,
    )
    manifest_path = generate_dataset(spec, args.out)
    config = {
        "preset": args.preset,
        "classes": args.classes,
        "per_class": args.per_class,
        "size": args.size,
    }
    _write_run_record(args, config, [manifest_path], started)
    print(f"synth: {args.classes} classes x {args.per_class} images -> {manifest_path}")
    return 0


def cmd_inspect(args) -> int:
    dump = read_dump(args.dump)
    print(f"file:    {args.dump}")
    print(f"branch:  {dump.branch}")
    print(f"dim:     {dump.dim}")
    print(f"rows:    {len(dump.rows)}")
    counts: dict[str, int] = {}
    for row in dump.rows:
        counts[row.class_name] = counts.get(row.class_name, 0) + 1
    print(f"classes: {len(counts)}")
    for name in sorted(counts):
        print(f"  {name}: {counts[name]}")
    if dump.rows:
        values = np.stack([r.values for r in dump.rows])
        print(
            f"values:  min {values.min():.6g}  mean {values.mean():.6g}  "
            f"max {values.max():.6g}"
        )
    return 0


def cmd_cube(args) -> int:
    started = time.monotonic()
    cfg = DctConfig(
        s_image=args.image_size,
        s_dct=args.filter_size,
        selection=parse_channels(args.channels),
        chroma_upsample=args.chroma_upsample,
    )
    cube = dct_pipeline(load_image(args.image), cfg)
    write_cube(cube, args.out)
    config = {
        "image": str(args.image),
        "image_size": args.image_size,
        "filter_size": args.filter_size,
        "channels": args.channels,
        "chroma_upsample": args.chroma_upsample,
    }
    _write_run_record(args, config, [Path(args.out)], started)
    print(f"cube: {cube.channels}x{cube.height}x{cube.width} -> {args.out}")
    return 0


def cmd_replay(args) -> int:
    record = json.loads(Path(args.record).read_text(encoding="utf-8"))
    status = main(record["argv"])
    if status != 0:
        return status
    for out in record["outputs"]:
        actual = _sha256(Path(out["path"]))
        if actual != out["sha256"]:
            print(
                f"replay: output {out['path']} differs from record "
                f"({actual} != {out['sha256']})",
                file=sys.stderr,
            )
            return 3
    print(f"replay: {len(record['outputs'])} output(s) reproduced bit-exactly")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqshot",
        description="Frequency-domain features and few-shot episodic evaluation",
    )
    parser.add_argument("--version", action="version", version=f"freqshot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="pooled branch features for every manifest image")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", required=True, help="directory image paths are relative to")
    p.add_argument("--mode", required=True, choices=["spatial", "frequency"])
    p.add_argument("--image-size", type=int, required=True)
    p.add_argument("--filter-size", type=int, default=8)
    p.add_argument("--channels", default="top24", help="top24 | all | square:a,b")
    p.add_argument("--chroma-upsample", default="bilinear", choices=["bilinear", "nearest"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fuse", help="merge spatial and frequency dumps into a fused dump")
    p.add_argument("--spatial", required=True)
    p.add_argument("--frequency", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("episodes", help="episodic evaluation with a JSON report")
    p.add_argument("--features", required=True)
    p.add_argument("--way", type=int, required=True)
    p.add_argument("--shot", type=int, required=True)
    p.add_argument("--query", type=int, default=15)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--classifier", required=True, choices=list(CLASSIFIERS))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--head-epochs", type=int, default=100)
    p.add_argument("--head-lr", type=float, default=0.1)
    p.add_argument("--report", required=True)
    p.add_argument("--manifest", default=None, help="restrict items to one manifest split")
    p.add_argument("--split", default="novel", choices=["base", "val", "novel"])
    p.set_defaults(func=cmd_episodes)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--preset", required=True, choices=list(PRESETS))
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("inspect", help="print dump header and row statistics")
    p.add_argument("--dump", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("cube", help="write the FQC1 frequency cube for one image")
    p.add_argument("--image", required=True)
    p.add_argument("--image-size", type=int, required=True)
    p.add_argument("--filter-size", type=int, default=8)
    p.add_argument("--channels", default="top24")
    p.add_argument("--chroma-upsample", default="bilinear", choices=["bilinear", "nearest"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cube)

    p = sub.add_parser("replay", help="re-run a recorded command and verify outputs")
    p.add_argument("--record", required=True)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args._argv = argv
    try:
        return args.func(args)
    except FreqshotError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
