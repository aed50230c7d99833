"""Export penultimate-layer CNN activations to FSFD dumps.

One row per manifest image, item_id = the manifest path. Inference runs
in eval mode under no_grad with fixed preprocessing (bilinear resize,
[0, 1] scaling, ImageNet normalization); a backbone that fails a
repeat-inference determinism probe is rejected. Pretrained weights are
fetched through torchvision; when they cannot be materialized (offline
environments) `weights="random"` gives a seeded, deterministic backbone
that still exercises every interface contract.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torchvision.models as tvm

from .dctref import load_rgb, resize_rgb
from .errors import BackboneUnavailable, DecodeFailure, UsageError
from .fsfd import write_fsfd

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
IMAGENET_STD = np.array([0.229, 0.224, 0.225])

BACKBONES = {
    "resnet18": (tvm.resnet18, 512),
    "resnet34": (tvm.resnet34, 512),
    "resnet50": (tvm.resnet50, 2048),
}


@dataclass(frozen=True)
class ExportJob:
    manifest: str
    root: str
    backbone: str
    layer: str = "penultimate"
    image_size: int = 224
    out: str = "features.fsfd"
    batch_size: int = 16
    weights: str = "pretrained"  # or "random"
    seed: int = 0

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise UsageError(f"backbone must be one of {sorted(BACKBONES)}, got {self.backbone!r}")
        if self.layer != "penultimate":
            raise UsageError(f"only the penultimate layer is supported, got {self.layer!r}")
        if self.weights not in ("pretrained", "random"):
            raise UsageError(f"weights must be pretrained|random, got {self.weights!r}")
        if self.batch_size < 1 or self.image_size < 8:
            raise UsageError("batch_size must be >= 1 and image_size >= 8")


def read_manifest(path) -> list[tuple[str, str]]:
    """(path, class) pairs from a freqshot manifest CSV."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["path", "class", "split"]:
            raise UsageError(f"{path}: expected header path,class,split")
        return [(row[0].strip(), row[1].strip()) for row in reader if row]


def build_backbone(job: ExportJob) -> tuple[torch.nn.Module, int]:
    ctor, dim = BACKBONES[job.backbone]
    if job.weights == "pretrained":
        try:
            model = ctor(weights="IMAGENET1K_V1")
        except Exception as exc:
            raise BackboneUnavailable(
                f"pretrained weights for {job.backbone} unavailable: {exc}"
            ) from None
    else:
        torch.manual_seed(job.seed)
        model = ctor(weights=None)
    model.fc = torch.nn.Identity()
    model.eval()
    return model, dim


def _preprocess(pixels: np.ndarray, image_size: int) -> np.ndarray:
    pixels = resize_rgb(pixels, image_size)
    scaled = pixels.astype(np.float64) / 255.0
    normalized = (scaled - IMAGENET_MEAN) / IMAGENET_STD
    return normalized.transpose(2, 0, 1).astype(np.float32)


def _forward(model: torch.nn.Module, batch: list[np.ndarray]) -> np.ndarray:
    with torch.no_grad():
        out = model(torch.from_numpy(np.stack(batch)))
    return out.numpy().astype(np.float64)


def export_features(job: ExportJob) -> Path:
    """Run the job and write the FSFD dump; returns the output path."""
    entries = read_manifest(job.manifest)
    model, dim = build_backbone(job)
    root = Path(job.root)
    rows: list[tuple[str, str, np.ndarray]] = []
    batch: list[np.ndarray] = []
    batch_meta: list[tuple[str, str]] = []
    checked_determinism = False

    def flush():
        nonlocal checked_determinism
        if not batch:
            return
        feats = _forward(model, batch)
        if not checked_determinism:
            again = _forward(model, batch)
            if not np.array_equal(feats, again):
                raise BackboneUnavailable(f"{job.backbone} inference is not deterministic")
            checked_determinism = True
        for (item_id, class_name), vec in zip(batch_meta, feats):
            rows.append((item_id, class_name, vec))
        batch.clear()
        batch_meta.clear()

    for rel_path, class_name in entries:
        full = root / rel_path
        if not full.exists():
            raise DecodeFailure(f"missing image file: {full}")
        batch.append(_preprocess(load_rgb(full), job.image_size))
        batch_meta.append((rel_path, class_name))
        if len(batch) >= job.batch_size:
            flush()
    flush()
    write_fsfd(job.out, "spatial", dim, rows)
    return Path(job.out)
