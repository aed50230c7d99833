"""Seeded synthetic datasets for desk-scale experiments.

Three presets:
  gratings  gray sinusoidal gratings; classes differ only by spatial
            frequency, so pooled RGB statistics are class-blind while the
            DCT sub-channel energies are not.
  colors    near-constant colored noise; classes differ only by mean
            color.
  mixed     half grating classes, half color classes.

Class i of `gratings` uses frequency size*(i+1)/32 cycles per image,
which lands its energy near luma sub-channel v = (i+1)*s_dct/16 for any
image size (v = 0.5, 1, 1.5, ... for the default 8x8 filter).
"""

import colorsys
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import UsageError

PRESETS = ("gratings", "colors", "mixed")

GRATING_AMPLITUDE = 55.0
GRATING_NOISE_SIGMA = 3.0
COLOR_NOISE_SIGMA = 6.0
COLOR_JITTER = 12.0


@dataclass(frozen=True)
class SynthSpec:
    preset: str
    classes: int
    per_class: int
    size: int
    seed: int

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise UsageError(f"preset must be one of {PRESETS}, got {self.preset!r}")
        if self.classes < 2 or self.per_class < 1:
            raise UsageError("need >= 2 classes and >= 1 image per class")
        if self.size < 2 or self.size % 2 != 0:
            raise UsageError(f"size must be even and >= 2, got {self.size}")


def _grating_image(rng: np.random.Generator, size: int, class_index: int) -> np.ndarray:
    freq = size * (class_index + 1) / 32.0
    phase = rng.uniform(0.0, 2.0 * np.pi)
    x = np.arange(size, dtype=np.float64)
    wave = 128.0 + GRATING_AMPLITUDE * np.sin(2.0 * np.pi * freq * x / size + phase)
    plane = np.tile(wave, (size, 1))
    plane = plane + rng.normal(0.0, GRATING_NOISE_SIGMA, size=(size, size))
    gray = np.clip(np.rint(plane), 0, 255).astype(np.uint8)
    return np.repeat(gray[:, :, None], 3, axis=2)


def _color_palette(count: int) -> np.ndarray:
    colors = []
    for i in range(count):
        r, g, b = colorsys.hsv_to_rgb(i / count, 0.55, 0.70)
        colors.append((255.0 * r, 255.0 * g, 255.0 * b))
    return np.array(colors)


def _color_image(rng: np.random.Generator, size: int, base_rgb: np.ndarray) -> np.ndarray:
    shade = base_rgb + rng.uniform(-COLOR_JITTER, COLOR_JITTER, size=3)
    img = shade[None, None, :] + rng.normal(0.0, COLOR_NOISE_SIGMA, size=(size, size, 3))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def _class_plan(spec: SynthSpec) -> list[tuple[str, str, int]]:
    """(class_name, kind, kind_index) triples for the preset."""
    if spec.preset == "gratings":
        return [(f"grating{i:02d}", "grating", i) for i in range(spec.classes)]
    if spec.preset == "colors":
        return [(f"color{i:02d}", "color", i) for i in range(spec.classes)]
    n_grating = (spec.classes + 1) // 2
    plan = [(f"grating{i:02d}", "grating", i) for i in range(n_grating)]
    plan += [(f"color{i:02d}", "color", i) for i in range(spec.classes - n_grating)]
    return plan


def generate_dataset(spec: SynthSpec, out_dir) -> Path:
    """Write PNGs plus manifest.csv (all classes in the novel split);
    returns the manifest path. Files created before a failure are removed."""
    out_dir = Path(out_dir)
    plan = _class_plan(spec)
    palette = _color_palette(sum(1 for _, kind, _ in plan if kind == "color") or 1)
    rng = np.random.default_rng(spec.seed)
    entries = []
    created: list[Path] = []
    try:
        for class_name, kind, kind_index in plan:
            class_dir = out_dir / "images" / class_name
            class_dir.mkdir(parents=True, exist_ok=True)
            for j in range(spec.per_class):
                if kind == "grating":
                    pixels = _grating_image(rng, spec.size, kind_index)
                else:
                    pixels = _color_image(rng, spec.size, palette[kind_index])
                rel = f"images/{class_name}/{j:04d}.png"
                Image.fromarray(pixels, mode="RGB").save(out_dir / rel)
                created.append(out_dir / rel)
                entries.append((rel, class_name))
        manifest_path = out_dir / "manifest.csv"
        created.append(manifest_path)
        with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "class", "split"])
            for rel, class_name in entries:
                writer.writerow([rel, class_name, "novel"])
    except BaseException:
        for path in created:
            path.unlink(missing_ok=True)
        raise
    return manifest_path
