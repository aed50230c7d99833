"""k-way n-shot episode sampling, classification, and CI aggregation.

Episodes are drawn from a labeled feature set: k classes uniformly
without replacement, then n_shot + n_query distinct items per class. The
RNG stream for episode e is derived from (seed, e) by a splitmix64-style
64-bit mix, so any episode can be regenerated independently and parallel
evaluation reproduces serial results. Accuracy is reported as
mean +/- 1.96 * s / sqrt(E) with the sample (E-1) standard deviation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NotEnoughClasses,
    NotEnoughItems,
    SingleClass,
    TooFewEpisodes,
    UsageError,
    ZeroPrototype,
)
from .featureio import DumpRow, FeatureDump
from .features import ZERO_NORM_EPS

CLASSIFIERS = ("proto-euclid", "proto-cosine", "cosine-head")

COSINE_HEAD_TEMPERATURE = 10.0

_MASK64 = (1 << 64) - 1
_CI_Z = 1.96


@dataclass(frozen=True)
class EpisodeSpec:
    k_way: int
    n_shot: int
    n_query: int = 15
    seed: int = 0

    def __post_init__(self):
        if self.k_way < 2:
            raise NotEnoughClasses(f"k_way must be >= 2, got {self.k_way}")
        if self.n_shot < 1 or self.n_query < 1:
            raise NotEnoughItems(
                f"n_shot and n_query must be >= 1, got {self.n_shot}, {self.n_query}"
            )


@dataclass(frozen=True)
class Episode:
    classes: tuple[str, ...]
    support: tuple[DumpRow, ...]
    query: tuple[DumpRow, ...]


@dataclass(frozen=True)
class AccuracyReport:
    episode_count: int
    mean_accuracy: float  # percent
    half_width: float  # percent


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def episode_stream_seed(seed: int, episode_index: int) -> int:
    """64-bit mix of (seed, episode_index); one PCG64 stream per episode."""
    return _splitmix64(_splitmix64(seed & _MASK64) ^ (episode_index & _MASK64))


def _by_class(features: FeatureDump) -> dict[str, list[DumpRow]]:
    groups: dict[str, list[DumpRow]] = {}
    for row in features.rows:
        groups.setdefault(row.class_name, []).append(row)
    # canonical order so sampling is independent of row order in the dump
    return {c: sorted(rows, key=lambda r: r.item_id) for c, rows in sorted(groups.items())}


def _sample_from_groups(
    groups: dict[str, list[DumpRow]], spec: EpisodeSpec, episode_index: int
) -> Episode:
    if len(groups) < spec.k_way:
        raise NotEnoughClasses(f"need {spec.k_way} classes, have {len(groups)}")
    per_class = spec.n_shot + spec.n_query
    rng = np.random.Generator(np.random.PCG64(episode_stream_seed(spec.seed, episode_index)))
    names = list(groups)
    picked = sorted(names[i] for i in rng.choice(len(names), size=spec.k_way, replace=False))
    support: list[DumpRow] = []
    query: list[DumpRow] = []
    for name in picked:
        rows = groups[name]
        if len(rows) < per_class:
            raise NotEnoughItems(
                f"class {name!r} has {len(rows)} items, need {per_class}"
            )
        idx = rng.choice(len(rows), size=per_class, replace=False)
        support.extend(rows[i] for i in idx[: spec.n_shot])
        query.extend(rows[i] for i in idx[spec.n_shot :])
    return Episode(classes=tuple(picked), support=tuple(support), query=tuple(query))


def sample_episode(features: FeatureDump, spec: EpisodeSpec, episode_index: int) -> Episode:
    """Draw one reproducible episode from the labeled feature set."""
    return _sample_from_groups(_by_class(features), spec, episode_index)


def _prototypes(episode: Episode) -> np.ndarray:
    protos = []
    for name in episode.classes:
        members = [r.values for r in episode.support if r.class_name == name]
        protos.append(np.mean(members, axis=0))
    return np.stack(protos)


def _cosine_scores(vectors: np.ndarray, references: np.ndarray) -> np.ndarray:
    v_norm = np.linalg.norm(vectors, axis=1)
    r_norm = np.linalg.norm(references, axis=1)
    if np.any(v_norm <= ZERO_NORM_EPS) or np.any(r_norm <= ZERO_NORM_EPS):
        raise ZeroPrototype("cosine similarity undefined for zero-norm vectors")
    return (vectors / v_norm[:, None]) @ (references / r_norm[:, None]).T


def prototype_classify(episode: Episode, metric: str = "euclidean") -> list[str]:
    """Nearest-prototype labels for every query; ties go to the lowest
    class index."""
    if metric not in ("euclidean", "cosine"):
        raise UsageError(f"unknown metric {metric!r}")
    protos = _prototypes(episode)
    queries = np.stack([r.values for r in episode.query])
    if metric == "euclidean":
        d2 = ((queries[:, None, :] - protos[None, :, :]) ** 2).sum(axis=2)
        winners = np.argmin(d2, axis=1)  # argmin takes the first (lowest) index
    else:
        winners = np.argmax(_cosine_scores(queries, protos), axis=1)
    return [episode.classes[i] for i in winners]


@dataclass(frozen=True)
class CosineHead:
    classes: tuple[str, ...]
    weights: np.ndarray  # (k, dim)
    temperature: float = COSINE_HEAD_TEMPERATURE

    def predict(self, vectors: np.ndarray) -> list[str]:
        scores = _cosine_scores(np.atleast_2d(vectors), self.weights)
        return [self.classes[i] for i in np.argmax(scores, axis=1)]


def finetune_cosine_head(
    support: tuple[DumpRow, ...],
    epochs: int = 100,
    learning_rate: float = 0.1,
    seed: int = 0,
) -> CosineHead:
    """Train per-class weight vectors on temperature-scaled cosine scores.

    Weights start at the class prototypes, so epochs=0 reproduces the
    cosine prototype classifier. Training is full-batch softmax
    cross-entropy on the support set; there is no stochastic step, so the
    seed only tags the run.
    """
    del seed  # deterministic initialization; kept for API uniformity
    classes = tuple(sorted({r.class_name for r in support}))
    if len(classes) < 2:
        raise SingleClass(f"need >= 2 support classes, got {classes}")
    episode_like = Episode(classes=classes, support=tuple(support), query=())
    weights = _prototypes(episode_like)
    x = np.stack([r.values for r in support])
    y_idx = np.array([classes.index(r.class_name) for r in support])
    tau = COSINE_HEAD_TEMPERATURE
    n = x.shape[0]
    for _ in range(epochs):
        x_norm = np.linalg.norm(x, axis=1)
        w_norm = np.linalg.norm(weights, axis=1)
        if np.any(x_norm <= ZERO_NORM_EPS) or np.any(w_norm <= ZERO_NORM_EPS):
            raise ZeroPrototype("zero-norm vector during cosine-head training")
        x_hat = x / x_norm[:, None]
        w_hat = weights / w_norm[:, None]
        cos = x_hat @ w_hat.T  # (n, k)
        logits = tau * cos
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        delta = probs
        delta[np.arange(n), y_idx] -= 1.0
        a = tau * delta / n  # dL/dcos
        grad = (a.T @ x_hat - (a * cos).sum(axis=0)[:, None] * w_hat) / w_norm[:, None]
        weights = weights - learning_rate * grad
    return CosineHead(classes=classes, weights=weights)


def aggregate_accuracies(accuracies: list[float]) -> AccuracyReport:
    """Mean and 95% half-width (percent) of per-episode accuracies in [0, 1].

    Uses compensated summation so the report is insensitive to episode
    order, and the sample (E-1) standard deviation.
    """
    e = len(accuracies)
    if e < 2:
        raise TooFewEpisodes(f"confidence interval needs >= 2 episodes, got {e}")
    percents = [100.0 * a for a in accuracies]
    mean = math.fsum(percents) / e
    var = math.fsum((p - mean) ** 2 for p in percents) / (e - 1)
    half_width = _CI_Z * math.sqrt(var) / math.sqrt(e)
    return AccuracyReport(episode_count=e, mean_accuracy=mean, half_width=half_width)


def run_episode(
    features: FeatureDump,
    spec: EpisodeSpec,
    classifier: str,
    episode_index: int,
    head_epochs: int = 100,
    head_learning_rate: float = 0.1,
    _groups: dict[str, list[DumpRow]] | None = None,
) -> float:
    """Accuracy of one episode in [0, 1]."""
    groups = _by_class(features) if _groups is None else _groups
    episode = _sample_from_groups(groups, spec, episode_index)
    if classifier == "proto-euclid":
        preds = prototype_classify(episode, "euclidean")
    elif classifier == "proto-cosine":
        preds = prototype_classify(episode, "cosine")
    elif classifier == "cosine-head":
        head = finetune_cosine_head(
            episode.support, epochs=head_epochs, learning_rate=head_learning_rate, seed=spec.seed
        )
        preds = head.predict(np.stack([r.values for r in episode.query]))
    else:
        raise UsageError(f"unknown classifier {classifier!r}")
    truth = [r.class_name for r in episode.query]
    return sum(p == t for p, t in zip(preds, truth)) / len(truth)


def evaluate_episodes(
    features: FeatureDump,
    spec: EpisodeSpec,
    classifier: str,
    episodes: int,
    head_epochs: int = 100,
    head_learning_rate: float = 0.1,
) -> AccuracyReport:
    """Run `episodes` independent episodes and aggregate accuracy."""
    if classifier not in CLASSIFIERS:
        raise UsageError(f"classifier must be one of {CLASSIFIERS}, got {classifier!r}")
    if episodes < 2:
        raise TooFewEpisodes(f"need >= 2 episodes for a confidence interval, got {episodes}")
    groups = _by_class(features)
    accs = [
        run_episode(features, spec, classifier, e, head_epochs, head_learning_rate, _groups=groups)
        for e in range(episodes)
    ]
    return aggregate_accuracies(accs)
