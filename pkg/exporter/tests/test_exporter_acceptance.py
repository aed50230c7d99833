"""Secondary acceptance: cross-implementation DCT parity and FSFD interop.

The primary artifact is exercised only through its external interfaces:
the `freqshot` CLI (invoked with argv), FQC1 cube dumps, and FSFD files.
"""

import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from freqshot.cli import main as primary_cli
from freqshot_exporter.dctref import RefConfig, verify_parity
from freqshot_exporter.export import ExportJob, export_features

PARITY_CONFIGS = [(8, "top24"), (4, "all")]


def test_parity_50_random_images(tmp_path):
    rng = np.random.default_rng(20260810)
    worst = 0.0
    for i in range(50):
        side = int(rng.choice([48, 64, 80, 96]))
        img_path = tmp_path / f"img{i:02d}.png"
        px = rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8)
        Image.fromarray(px).save(img_path)
        for filter_size, channels in PARITY_CONFIGS:
            cube_path = tmp_path / f"img{i:02d}_{filter_size}.fqc"
            status = primary_cli(
                [
                    "cube",
                    "--image", str(img_path),
                    "--image-size", "64",
                    "--filter-size", str(filter_size),
                    "--channels", channels,
                    "--out", str(cube_path),
                ]
            )
            assert status == 0
            cfg = RefConfig.from_channels(64, filter_size, channels)
            report = verify_parity(img_path, cfg, cube_path)
            worst = max(worst, report.max_abs_diff)
            assert report.max_abs_diff < 1e-4, (i, filter_size, channels, report)
    print(f"\n[PASS] cross-implementation parity: worst max-abs diff {worst:.3e} < 1e-4")


def _synth_dataset(tmp_path, n_classes=4, per_class=8, size=40):
    rng = np.random.default_rng(7)
    rows = ["path,class,split"]
    for c in range(n_classes):
        (tmp_path / f"cls{c}").mkdir()
        base = rng.integers(30, 220, size=3)
        for i in range(per_class):
            rel = f"cls{c}/{i}.png"
            px = np.clip(
                base[None, None, :] + rng.normal(0, 25, size=(size, size, 3)), 0, 255
            ).astype(np.uint8)
            Image.fromarray(px).save(tmp_path / rel)
            rows.append(f"{rel},class{c},novel")
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return manifest


def test_interop_export_fuse_episodes(tmp_path):
    manifest = _synth_dataset(tmp_path)

    # exporter-produced dump must satisfy the primary reader unmodified
    backbone_dump = tmp_path / "backbone.fsfd"
    export_features(
        ExportJob(
            manifest=str(manifest),
            root=str(tmp_path),
            backbone="resnet18",
            image_size=64,
            out=str(backbone_dump),
            batch_size=8,
            weights="random",
            seed=5,
        )
    )
    from freqshot.featureio import read_dump

    dump = read_dump(backbone_dump)
    assert dump.branch == "spatial" and dump.dim == 512 and len(dump.rows) == 32

    # primary frequency branch over the same manifest
    freq_dump = tmp_path / "freq.fsfd"
    assert primary_cli(
        [
            "extract",
            "--manifest", str(manifest),
            "--root", str(tmp_path),
            "--mode", "frequency",
            "--image-size", "64",
            "--filter-size", "8",
            "--channels", "top24",
            "--out", str(freq_dump),
        ]
    ) == 0

    # fuse + episodes end-to-end through the primary CLI
    fused = tmp_path / "fused.fsfd"
    assert primary_cli(
        ["fuse", "--spatial", str(backbone_dump), "--frequency", str(freq_dump), "--out", str(fused)]
    ) == 0
    report_path = tmp_path / "report.json"
    assert primary_cli(
        [
            "episodes",
            "--features", str(fused),
            "--way", "3",
            "--shot", "1",
            "--query", "4",
            "--episodes", "10",
            "--classifier", "proto-euclid",
            "--seed", "2",
            "--report", str(report_path),
        ]
    ) == 0
    report = json.loads(report_path.read_text())
    assert report["feature_dim"] == 512 + 48
    assert report["branch"] == "fused"
    assert 0.0 <= report["mean"] <= 100.0
    print("\n[PASS] interop: exporter FSFD loads in primary; fuse + episodes ran end-to-end")


def test_interop_as_separate_processes(tmp_path):
    # same stack exercised through the real process boundary
    manifest = _synth_dataset(tmp_path, n_classes=2, per_class=3, size=32)
    img = next((tmp_path / "cls0").glob("*.png"))

    cube = tmp_path / "c.fqc"
    run = subprocess.run(
        [sys.executable, "-m", "freqshot", "cube", "--image", str(img),
         "--image-size", "64", "--filter-size", "8", "--channels", "top24",
         "--out", str(cube)],
        capture_output=True, text=True,
    )
    assert run.returncode == 0, run.stderr
    run = subprocess.run(
        [sys.executable, "-m", "freqshot_exporter.cli", "parity", "--image", str(img),
         "--cube", str(cube), "--image-size", "64", "--filter-size", "8",
         "--channels", "top24", "--tolerance", "1e-4"],
        capture_output=True, text=True,
    )
    assert run.returncode == 0, run.stderr
    assert "max abs diff" in run.stdout
