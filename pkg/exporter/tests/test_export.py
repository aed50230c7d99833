import numpy as np
import pytest
from PIL import Image

from freqshot_exporter.errors import BackboneUnavailable, DecodeFailure, UsageError
from freqshot_exporter.export import ExportJob, build_backbone, export_features, read_manifest


def make_dataset(tmp_path, n_classes=2, per_class=5, size=40):
    rng = np.random.default_rng(3)
    rows = ["path,class,split"]
    for c in range(n_classes):
        (tmp_path / f"c{c}").mkdir(exist_ok=True)
        for i in range(per_class):
            rel = f"c{c}/{i}.png"
            px = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
            Image.fromarray(px).save(tmp_path / rel)
            rows.append(f"{rel},class{c},novel")
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return manifest


def job_for(tmp_path, manifest, **kw):
    defaults = dict(
        manifest=str(manifest),
        root=str(tmp_path),
        backbone="resnet18",
        image_size=64,
        out=str(tmp_path / "feat.fsfd"),
        batch_size=4,
        weights="random",
        seed=11,
    )
    defaults.update(kw)
    return ExportJob(**defaults)


def test_read_manifest(tmp_path):
    manifest = make_dataset(tmp_path)
    entries = read_manifest(manifest)
    assert len(entries) == 10
    assert entries[0] == ("c0/0.png", "class0")


def test_export_rows_and_dim(tmp_path):
    manifest = make_dataset(tmp_path)
    out = export_features(job_for(tmp_path, manifest))
    from freqshot.featureio import read_dump

    dump = read_dump(out)
    assert dump.dim == 512
    assert dump.branch == "spatial"
    assert len(dump.rows) == 10
    assert dump.rows[0].item_id == "c0/0.png"


def test_export_deterministic(tmp_path):
    manifest = make_dataset(tmp_path)
    a = export_features(job_for(tmp_path, manifest, out=str(tmp_path / "a.fsfd")))
    b = export_features(job_for(tmp_path, manifest, out=str(tmp_path / "b.fsfd")))
    assert a.read_bytes() == b.read_bytes()


def test_export_missing_image_names_path(tmp_path):
    manifest = make_dataset(tmp_path)
    text = manifest.read_text() + "missing/gone.png,class0,novel\n"
    manifest.write_text(text, encoding="utf-8")
    with pytest.raises(DecodeFailure, match="gone.png"):
        export_features(job_for(tmp_path, manifest))


def test_unknown_backbone_rejected(tmp_path):
    manifest = make_dataset(tmp_path, per_class=1)
    with pytest.raises(UsageError):
        job_for(tmp_path, manifest, backbone="vgg11")


def test_unknown_layer_rejected(tmp_path):
    manifest = make_dataset(tmp_path, per_class=1)
    with pytest.raises(UsageError):
        job_for(tmp_path, manifest, layer="stem")


def test_pretrained_backbone_or_unavailable(tmp_path):
    # offline sandboxes cannot fetch weights; either outcome is contractual
    manifest = make_dataset(tmp_path, per_class=1)
    job = job_for(tmp_path, manifest, weights="pretrained")
    try:
        model, dim = build_backbone(job)
    except BackboneUnavailable:
        return
    assert dim == 512
    assert not model.training
