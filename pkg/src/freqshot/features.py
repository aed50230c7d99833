"""Fixed-dimension feature vectors, branch fusion, and a linear probe.

Pooled statistics (per-channel spatial mean and population standard
deviation) summarize a frequency cube or a spatial RGB image into a
vector. Fusion concatenates the per-branch L2-normalized vectors, so each
nonzero branch contributes a unit-norm block. The probe is a multinomial
logistic regression trained by full-batch gradient descent; it stands in
for a CNN backbone at desk scale.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BranchMismatch, DimMismatch, EmptyCube, NumericError, SingleClass, UsageError
from .freqcube import FrequencyCube
from .ingest import RgbImage

BRANCHES = ("spatial", "frequency", "fused")

ZERO_NORM_EPS = 1e-12


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # (dim,) float64
    branch: str

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise BranchMismatch(f"branch must be one of {BRANCHES}, got {self.branch!r}")
        if self.values.ndim != 1:
            raise DimMismatch(f"feature values must be 1-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NumericError("feature values must be finite")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def _pool_channels(channels: np.ndarray, branch: str) -> FeatureVector:
    means = channels.mean(axis=(1, 2))
    stds = channels.std(axis=(1, 2))  # population (ddof=0)
    values = np.empty(2 * channels.shape[0], dtype=np.float64)
    values[0::2] = means
    values[1::2] = stds
    return FeatureVector(values=values, branch=branch)


def pool_statistics(source: FrequencyCube | RgbImage) -> FeatureVector:
    """Per-channel (mean, std) pairs: 2C dims for a cube, 6 for an RGB image."""
    if isinstance(source, FrequencyCube):
        if source.channels == 0 or source.height == 0 or source.width == 0:
            raise EmptyCube("cannot pool an empty cube")
        return _pool_channels(source.data, "frequency")
    channels = source.pixels.astype(np.float64).transpose(2, 0, 1)
    return _pool_channels(channels, "spatial")


def l2_normalize(v: FeatureVector) -> FeatureVector:
    """Scale to unit L2 norm; vectors with norm <= 1e-12 pass through."""
    norm = float(np.linalg.norm(v.values))
    if norm <= ZERO_NORM_EPS:
        return v
    return FeatureVector(values=v.values / norm, branch=v.branch)


def fuse(spatial: FeatureVector, frequency: FeatureVector) -> FeatureVector:
    """Concatenate the L2-normalized spatial and frequency vectors."""
    if spatial.branch != "spatial" or frequency.branch != "frequency":
        raise BranchMismatch(
            f"fuse expects (spatial, frequency), got ({spatial.branch}, {frequency.branch})"
        )
    values = np.concatenate([l2_normalize(spatial).values, l2_normalize(frequency).values])
    return FeatureVector(values=values, branch="fused")


@dataclass(frozen=True)
class LinearProbe:
    weights: np.ndarray  # (k_classes, dim)
    bias: np.ndarray  # (k_classes,)
    class_names: tuple[str, ...]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def cross_entropy_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    x: np.ndarray,
    y_idx: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean softmax cross-entropy over rows of x, with gradients in
    (weights, bias). Shared by training and the finite-difference check."""
    logits = x @ weights.T + bias
    logits -= logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    probs = exp / exp.sum(axis=1, keepdims=True)
    n = x.shape[0]
    loss = float(-np.mean(np.log(probs[np.arange(n), y_idx] + 1e-300)))
    delta = probs.copy()
    delta[np.arange(n), y_idx] -= 1.0
    delta /= n
    return loss, delta.T @ x, delta.sum(axis=0)


def _stack_features(features: list[FeatureVector]) -> np.ndarray:
    dims = {f.dim for f in features}
    if len(dims) != 1:
        raise DimMismatch(f"mixed feature dims {sorted(dims)}")
    return np.stack([f.values for f in features])


def train_linear_probe(
    features: list[FeatureVector],
    labels: list[str],
    epochs: int = 200,
    learning_rate: float = 0.5,
    seed: int = 0,
) -> LinearProbe:
    """Fit a softmax linear classifier with full-batch gradient descent.

    Deterministic given the seed: weights start from seeded uniform
    [-0.01, 0.01], bias from zero, and there is no minibatch shuffling.
    """
    if len(features) != len(labels):
        raise DimMismatch(f"{len(features)} features for {len(labels)} labels")
    if epochs < 1:
        raise UsageError(f"epochs must be >= 1, got {epochs}")
    class_names = tuple(sorted(set(labels)))
    if len(class_names) < 2:
        raise SingleClass(f"need >= 2 classes, got {class_names}")
    x = _stack_features(features)
    index = {c: i for i, c in enumerate(class_names)}
    y_idx = np.array([index[c] for c in labels])
    k, dim = len(class_names), x.shape[1]
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-0.01, 0.01, size=(k, dim))
    bias = np.zeros(k)
    for _ in range(epochs):
        _, grad_w, grad_b = cross_entropy_loss_and_grad(weights, bias, x, y_idx)
        weights -= learning_rate * grad_w
        bias -= learning_rate * grad_b
    return LinearProbe(weights=weights, bias=bias, class_names=class_names)


def embed(probe: LinearProbe, v: FeatureVector) -> FeatureVector:
    """Pre-softmax logits of v under the probe, kept on the input branch."""
    if v.dim != probe.dim:
        raise DimMismatch(f"feature dim {v.dim} does not match probe dim {probe.dim}")
    return FeatureVector(values=probe.weights @ v.values + probe.bias, branch=v.branch)


def probe_predict(probe: LinearProbe, v: FeatureVector) -> str:
    logits = probe.weights @ v.values + probe.bias
    return probe.class_names[int(np.argmax(logits))]
