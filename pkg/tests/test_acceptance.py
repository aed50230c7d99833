"""Acceptance suite. One test per criterion; each prints a PASS/FAIL line
(via the `criterion` marker hook in conftest)."""

import math
import time

import numpy as np
import pytest

from freqshot import dct
from freqshot.errors import (
    BadMagic,
    DuplicateId,
    ItemMismatch,
    LabelConflict,
    TruncatedFile,
)
from freqshot.featureio import DumpRow, FeatureDump, merge_dumps, read_dump, write_dump
from freqshot.features import cross_entropy_loss_and_grad, pool_statistics
from freqshot.fewshot import (
    EpisodeSpec,
    aggregate_accuracies,
    evaluate_episodes,
    sample_episode,
)
from freqshot.freqcube import (
    ChannelSelection,
    DctConfig,
    TOP24,
    dct_pipeline,
    regroup_to_cube,
    select_channels,
    zigzag_index,
)
from freqshot.ingest import RgbImage, load_image, load_manifest, resize_image
from freqshot.synth import SynthSpec, generate_dataset


@pytest.mark.criterion("DCT correctness: orthonormality, round trip, Parseval, < 10 s")
def test_dct_correctness_suite():
    started = time.monotonic()
    for n in (2, 4, 6, 8, 16, 32):
        t = dct.dct_matrix(n)
        assert np.abs(t @ t.T - np.eye(n)).sum(axis=1).max() < 1e-10  # induced inf-norm
        rng = np.random.default_rng(1000 + n)
        blocks = rng.uniform(0.0, 255.0, size=(1000, n, n))
        coeffs = t @ (blocks - 128.0) @ t.T
        back = t.T @ coeffs @ t + 128.0
        assert np.abs(back - blocks).max() < 1e-9
        spatial = ((blocks - 128.0) ** 2).sum(axis=(1, 2))
        spectral = (coeffs**2).sum(axis=(1, 2))
        rel = np.abs(spatial - spectral) / np.maximum(spatial, 1.0)
        assert rel.max() < 1e-9
    assert time.monotonic() - started < 10.0


@pytest.mark.criterion("pipeline shape claims: 56x56 grid, 64-ch planes, 24-ch top24, 12/48/108 all")
def test_pipeline_shape_claims():
    rng = np.random.default_rng(0)
    px = rng.integers(0, 256, size=(448, 448, 3), dtype=np.uint8)
    img = RgbImage(width=448, height=448, pixels=px)

    from freqshot.colorspace import rgb_to_ycbcr, subsample_420

    planes = subsample_420(rgb_to_ycbcr(img))
    t8 = dct.dct_matrix(8)
    y_cube = regroup_to_cube(dct.blockwise_dct(planes.y, t8), "Y")
    cb_cube = regroup_to_cube(dct.blockwise_dct(planes.cb, t8), "Cb")
    cr_cube = regroup_to_cube(dct.blockwise_dct(planes.cr, t8), "Cr")
    assert y_cube.data.shape == (64, 56, 56)
    assert cb_cube.data.shape == (64, 28, 28)
    assert cr_cube.data.shape == (64, 28, 28)

    assert select_channels(y_cube, TOP24).channels == 16
    assert select_channels(cb_cube, TOP24).channels == 4
    assert select_channels(cr_cube, TOP24).channels == 4

    merged = dct_pipeline(img, DctConfig(s_image=448, s_dct=8, selection=TOP24))
    assert merged.data.shape == (24, 56, 56)

    for s_dct, expected in ((2, 12), (4, 48), (6, 108)):
        small = RgbImage(width=48, height=48, pixels=px[:48, :48].copy())
        cfg = DctConfig(s_image=48, s_dct=s_dct, selection=ChannelSelection.all_channels())
        assert dct_pipeline(small, cfg).channels == expected


@pytest.mark.criterion("zigzag matches an independent enumeration for all 64 positions")
def test_zigzag_oracle():
    # independent oracle: antidiagonal sort with alternating direction
    cells = [(u, v) for u in range(8) for v in range(8)]
    walk = sorted(
        cells, key=lambda uv: (uv[0] + uv[1], -uv[0] if (uv[0] + uv[1]) % 2 == 0 else uv[0])
    )
    for k, (u, v) in enumerate(walk):
        assert zigzag_index(u, v, 8) == k
    assert zigzag_index(0, 0, 8) == 0
    assert zigzag_index(7, 7, 8) == 63


def _grating_only(dump):
    rows = tuple(r for r in dump.rows if r.class_name.startswith("grating"))
    return FeatureDump(dim=dump.dim, branch=dump.branch, rows=rows)


@pytest.mark.criterion(
    "complementarity at desk scale: frequency >= spatial + 10 on gratings, "
    "fused >= max - 1 overall, < 2 min"
)
def test_complementarity_desk_scale(tmp_path):
    started = time.monotonic()
    spec = SynthSpec(preset="mixed", classes=10, per_class=100, size=112, seed=20260810)
    manifest_path = generate_dataset(spec, tmp_path)
    manifest = load_manifest(manifest_path)
    cfg = DctConfig(s_image=112, s_dct=8, selection=TOP24)
    s_rows, f_rows = [], []
    for entry in manifest.entries:
        img = load_image(tmp_path / entry.image_path)
        s_feat = pool_statistics(resize_image(img, 112))
        f_feat = pool_statistics(dct_pipeline(img, cfg))
        s_rows.append(DumpRow(entry.image_path, entry.class_name, s_feat.values))
        f_rows.append(DumpRow(entry.image_path, entry.class_name, f_feat.values))
    spatial = FeatureDump(dim=6, branch="spatial", rows=tuple(s_rows))
    frequency = FeatureDump(dim=48, branch="frequency", rows=tuple(f_rows))
    fused = merge_dumps(spatial, frequency)

    espec = EpisodeSpec(k_way=5, n_shot=1, n_query=15, seed=1)
    overall = {
        name: evaluate_episodes(dump, espec, "proto-euclid", 500).mean_accuracy
        for name, dump in (("spatial", spatial), ("frequency", frequency), ("fused", fused))
    }
    grating = {
        name: evaluate_episodes(_grating_only(dump), espec, "proto-euclid", 500).mean_accuracy
        for name, dump in (("spatial", spatial), ("frequency", frequency))
    }
    elapsed = time.monotonic() - started

    assert grating["frequency"] >= grating["spatial"] + 10.0, grating
    assert overall["fused"] >= max(overall["spatial"], overall["frequency"]) - 1.0, overall
    assert elapsed < 120.0


@pytest.mark.criterion("CI estimator: {0.6, 0.8} -> 70.00 +/- 19.60; half-width slope -0.5 +/- 0.05")
def test_ci_estimator():
    report = aggregate_accuracies([0.6, 0.8])
    assert abs(report.mean_accuracy - 70.00) <= 0.01
    assert abs(report.half_width - 19.60) <= 0.01

    rng = np.random.default_rng(424242)
    sizes = [100, 400, 1600, 6400]
    xs, ys = [], []
    for e in sizes:
        accs = rng.binomial(1, 0.7, size=e).astype(float)
        rep = aggregate_accuracies(list(accs))
        xs.append(math.log(e))
        ys.append(math.log(rep.half_width))
    slope = np.polyfit(np.array(xs), np.array(ys), 1)[0]
    assert abs(slope - (-0.5)) <= 0.05, slope


def _episode_fingerprint(ep):
    return (
        ep.classes,
        tuple(r.item_id for r in ep.support),
        tuple(r.item_id for r in ep.query),
    )


@pytest.mark.criterion("sampler: 10^4 episodes with exact counts, disjointness, bit-identical resampling")
def test_sampler_determinism_and_validity():
    rng = np.random.default_rng(5)
    rows = tuple(
        DumpRow(f"c{c:02d}/i{i:03d}", f"class{c:02d}", rng.normal(size=3))
        for c in range(12)
        for i in range(9)
    )
    dump = FeatureDump(dim=3, branch="spatial", rows=rows)
    spec = EpisodeSpec(k_way=5, n_shot=2, n_query=3, seed=77)
    violations = 0
    fingerprints = {}
    for e in range(10_000):
        ep = sample_episode(dump, spec, e)
        support_ids = [r.item_id for r in ep.support]
        query_ids = [r.item_id for r in ep.query]
        if len(ep.classes) != 5 or len(set(ep.classes)) != 5:
            violations += 1
        if set(support_ids) & set(query_ids):
            violations += 1
        for c in ep.classes:
            if sum(r.class_name == c for r in ep.support) != 2:
                violations += 1
            if sum(r.class_name == c for r in ep.query) != 3:
                violations += 1
        if e % 500 == 0:
            fingerprints[e] = _episode_fingerprint(ep)
    for e, fp in fingerprints.items():
        if _episode_fingerprint(sample_episode(dump, spec, e)) != fp:
            violations += 1
    assert violations == 0


@pytest.mark.criterion("probe gradients match central finite differences (rel err < 1e-4)")
def test_probe_gradient_check():
    rng = np.random.default_rng(31337)
    step = 1e-5
    for _ in range(20):
        n = int(rng.integers(3, 9))
        dim = int(rng.integers(2, 11))  # <= 10
        k = int(rng.integers(2, 5))  # <= 4
        x = rng.normal(size=(n, dim))
        y = rng.integers(0, k, size=n)
        weights = rng.normal(scale=0.5, size=(k, dim))
        bias = rng.normal(scale=0.5, size=k)
        _, grad_w, grad_b = cross_entropy_loss_and_grad(weights, bias, x, y)
        num_w = np.zeros_like(weights)
        for i in range(k):
            for j in range(dim):
                wp, wm = weights.copy(), weights.copy()
                wp[i, j] += step
                wm[i, j] -= step
                lp, _, _ = cross_entropy_loss_and_grad(wp, bias, x, y)
                lm, _, _ = cross_entropy_loss_and_grad(wm, bias, x, y)
                num_w[i, j] = (lp - lm) / (2 * step)
        num_b = np.zeros_like(bias)
        for i in range(k):
            bp, bm = bias.copy(), bias.copy()
            bp[i] += step
            bm[i] -= step
            lp, _, _ = cross_entropy_loss_and_grad(weights, bp, x, y)
            lm, _, _ = cross_entropy_loss_and_grad(weights, bm, x, y)
            num_b[i] = (lp - lm) / (2 * step)
        rel_w = np.linalg.norm(grad_w - num_w) / max(np.linalg.norm(num_w), 1e-8)
        rel_b = np.linalg.norm(grad_b - num_b) / max(np.linalg.norm(num_b), 1e-8)
        assert rel_w < 1e-4 and rel_b < 1e-4


@pytest.mark.criterion("FSFD: 100 random dumps round-trip bit-exactly; all corrupt cases raise")
def test_fsfd_round_trip_and_corruption(tmp_path):
    rng = np.random.default_rng(271828)
    branches = ("spatial", "frequency", "fused")
    for i in range(100):
        dim = int(rng.integers(1, 64))
        n_rows = int(rng.integers(0, 20))
        rows = tuple(
            DumpRow(
                item_id=f"d{i}/r{j}",
                class_name=f"cls{int(rng.integers(0, 5))}",
                values=rng.normal(scale=100.0, size=dim).astype(np.float32).astype(np.float64),
            )
            for j in range(n_rows)
        )
        dump = FeatureDump(dim=dim, branch=branches[i % 3], rows=rows)
        path = tmp_path / f"dump{i}.fsfd"
        write_dump(dump, path)
        back = read_dump(path)
        assert back.dim == dump.dim and back.branch == dump.branch
        for ra, rb in zip(back.rows, dump.rows):
            assert ra.item_id == rb.item_id and ra.class_name == rb.class_name
            assert np.array_equal(
                np.asarray(ra.values, np.float32), np.asarray(rb.values, np.float32)
            )

    base = FeatureDump(
        dim=2,
        branch="spatial",
        rows=(
            DumpRow("item000", "a", np.array([1.0, 2.0])),
            DumpRow("item001", "b", np.array([3.0, 4.0])),
        ),
    )
    good = tmp_path / "good.fsfd"
    write_dump(base, good)
    raw = good.read_bytes()

    bad_magic = tmp_path / "bad_magic.fsfd"
    bad_magic.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(BadMagic):
        read_dump(bad_magic)

    truncated = tmp_path / "truncated.fsfd"
    truncated.write_bytes(raw[:-5])
    with pytest.raises(TruncatedFile):
        read_dump(truncated)

    duplicated = tmp_path / "dup.fsfd"
    data = bytearray(raw)
    idx = data.rindex(b"item001")
    data[idx : idx + 7] = b"item000"
    duplicated.write_bytes(bytes(data))
    with pytest.raises(DuplicateId):
        read_dump(duplicated)

    spatial = FeatureDump(
        dim=2, branch="spatial", rows=(DumpRow("a", "x", np.array([1.0, 0.0])),)
    )
    freq_other_item = FeatureDump(
        dim=2, branch="frequency", rows=(DumpRow("b", "x", np.array([1.0, 0.0])),)
    )
    with pytest.raises(ItemMismatch):
        merge_dumps(spatial, freq_other_item)

    freq_other_label = FeatureDump(
        dim=2, branch="frequency", rows=(DumpRow("a", "y", np.array([1.0, 0.0])),)
    )
    with pytest.raises(LabelConflict):
        merge_dumps(spatial, freq_other_label)
