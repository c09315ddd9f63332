import json

import numpy as np
import pytest

from gfxlab.nn import Adam, build_network, cross_entropy
from gfxlab.training import (
    EarlyStopper, TrainConfig, load_dataset, load_train_checkpoint,
    standardization_stats, standardized_batch, train, validation_metric,
)


def test_load_dataset_shapes_and_targets(tiny_loaded):
    data = tiny_loaded
    assert data.features.shape[1:] == (87, 128)
    assert data.features.dtype == np.float32
    assert set(np.unique(data.splits)) <= {"train", "valid", "test"}
    # OD1 records carry the absent-tone sentinel
    od1 = data.class_ids == 3  # OD1 is the 4th table row
    assert (data.settings[od1, 1] == -1.0).all()
    sd1 = data.class_ids == 4
    assert (data.settings[sd1, 1] >= 0).all()


def test_feature_cache_consistency(tiny_discrete_manifest, tmp_path):
    cold = load_dataset(tiny_discrete_manifest, cache_dir=tmp_path / "c")
    warm = load_dataset(tiny_discrete_manifest, cache_dir=tmp_path / "c")
    np.testing.assert_array_equal(cold.features, warm.features)


def test_standardization_normalizes_train_split(tiny_loaded):
    mean, std = standardization_stats(tiny_loaded)
    idx = tiny_loaded.indices("train")
    x = standardized_batch(tiny_loaded, idx, mean, std)
    assert x.shape == (idx.size, 1, 87, 128)
    assert abs(float(x.mean())) < 1e-3
    band_std = x[:, 0].std(axis=(0, 1))
    assert np.all(band_std < 1.5) and np.median(band_std) > 0.5


def test_early_stopper_semantics():
    st = EarlyStopper(patience=2)
    assert st.update(0, 10.0) == (True, False)
    assert st.update(1, 10.0) == (False, False)   # equal is not improvement
    assert st.update(2, 11.0) == (True, False)
    assert st.update(3, 11.0) == (False, False)
    assert st.update(4, 10.0) == (False, True)    # patience exhausted
    assert st.best_epoch == 2 and st.best_metric == 11.0


def test_train_smoke_and_checkpoint(tiny_loaded, tmp_path):
    cfg = TrainConfig(variant="fxnet", epochs=3, patience=3, batch_size=32,
                      seed=1)
    result = train(cfg, tiny_loaded, out_dir=tmp_path)
    assert len(result.log) <= 3
    assert result.best_metric == max(e["val_metric"] for e in result.log)
    assert result.best_epoch == min(
        e["epoch"] for e in result.log if e["val_metric"] == result.best_metric)
    assert result.checkpoint_path.exists()

    net, meta, mean, std = load_train_checkpoint(result.checkpoint_path)
    assert meta["variant"] == "fxnet"
    assert meta["config"]["lr"] == 0.001
    assert meta["train_subset"] == "mono-discrete"
    # reloaded model reproduces the trained model bit for bit
    idx = tiny_loaded.indices("test")[:8]
    x = standardized_batch(tiny_loaded, idx, mean, std)
    np.testing.assert_array_equal(
        net.forward(x, train=False), result.net.forward(x, train=False))


def test_train_determinism(tiny_loaded, tmp_path):
    cfg = TrainConfig(variant="setnet", epochs=2, patience=2, batch_size=32, seed=7)
    a = train(cfg, tiny_loaded, out_dir=tmp_path / "a")
    b = train(cfg, tiny_loaded, out_dir=tmp_path / "b")
    assert a.log == b.log
    assert (tmp_path / "a" / "setnet_train_log.jsonl").read_text() == \
           (tmp_path / "b" / "setnet_train_log.jsonl").read_text()
    for pa, pb in zip(a.net.params(), b.net.params()):
        np.testing.assert_array_equal(pa.data, pb.data)


def test_train_all_variants_one_epoch(tiny_loaded):
    for variant in ("setnet", "multinet", "setnetcond"):
        cfg = TrainConfig(variant=variant, epochs=1, patience=1, batch_size=32,
                          seed=2)
        result = train(cfg, tiny_loaded)
        assert len(result.log) == 1
        assert 0.0 <= result.best_metric <= 100.0


def test_validation_metric_requires_valid_split(tiny_loaded):
    net = build_network("fxnet", seed=0)
    mean, std = standardization_stats(tiny_loaded)
    with pytest.raises(ValueError):
        validation_metric(net, tiny_loaded, np.array([], dtype=int), mean, std)


def test_overfit_single_batch(tiny_loaded):
    """Gradient-flow oracle: FxNet memorizes one batch of 100 samples."""
    rng = np.random.default_rng(0)
    idx = rng.choice(len(tiny_loaded), size=100, replace=False)
    mean, std = standardization_stats(tiny_loaded)
    x = standardized_batch(tiny_loaded, idx, mean, std)
    labels = tiny_loaded.class_ids[idx]

    net = build_network("fxnet", seed=3)
    opt = Adam(net.params(), lr=0.001)
    reached = None
    for epoch in range(200):
        opt.zero_grad()
        logits = net.forward(x, train=True)
        loss, grad = cross_entropy(logits, labels)
        net.backward(grad)
        opt.step()
        if epoch % 5 == 4:
            acc = (net.forward(x, train=False).argmax(axis=1) == labels).mean()
            if acc == 1.0:
                reached = epoch
                break
    assert reached is not None, "failed to overfit one batch in 200 epochs"
