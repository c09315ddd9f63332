"""Training: manifest loading, feature standardization, the epoch loop.

Batches of 100 are drawn by shuffling the whole train split each epoch with
no class balancing. After every epoch a validation metric is computed
(classification accuracy for FxNet, settings accuracy for SetNet and
SetNetCond, their mean for MultiNet); training stops once the metric fails
to improve for `patience` consecutive epochs and the best-epoch parameters
are what the checkpoint keeps.

Everything is driven by the config seed: two runs with the same config and
data produce identical logs and checkpoints.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import features as feat
from .dataset import read_manifest, read_wav
from .errors import NumericalError
from .metrics import classification_accuracy, settings_accuracy
from .nn import Adam, build_network, cross_entropy, mse
from .nn.checkpoint import save_checkpoint

ABSENT_TONE = -1.0


@dataclass
class TrainConfig:
    variant: str
    epochs: int = 100
    patience: int = 15
    batch_size: int = 100
    lr: float = 0.001
    seed: int = 0
    settings_loss_weight: float = 1.0  # MultiNet total = cross-entropy + w * mse
    emb_dim: int = 16

    def as_dict(self):
        return asdict(self)


@dataclass
class LoadedData:
    features: np.ndarray      # [n, 87, 128] float32, unstandardized
    class_ids: np.ndarray     # [n] int64
    settings: np.ndarray      # [n, 2] float32: gain, tone (-1.0 when absent)
    splits: np.ndarray        # [n] str
    header: dict
    records: list = field(default_factory=list)

    def indices(self, split):
        return np.flatnonzero(self.splits == split)

    def __len__(self):
        return len(self.class_ids)


def load_dataset(manifest_path, cache_dir=None, progress=None):
    """Featurize every record of a manifest (with an optional on-disk cache)."""
    manifest_path = Path(manifest_path)
    header, records = read_manifest(manifest_path)
    root = manifest_path.parent
    cache = feat.FeatureCache(cache_dir) if cache_dir else None
    n = len(records)
    X = np.empty((n, feat.N_FRAMES, feat.N_MELS), dtype=np.float32)
    y_cls = np.empty(n, dtype=np.int64)
    y_set = np.empty((n, 2), dtype=np.float32)
    splits = np.empty(n, dtype=object)
    for i, rec in enumerate(records):
        wav_path = root / rec.audio_path
        x = None
        key = None
        if cache is not None:
            key = feat.FeatureCache.key_for(wav_path)
            x = cache.load(key)
        if x is None:
            audio, rate = read_wav(wav_path)
            x = feat.featurize(audio, rate)
            if cache is not None:
                cache.store(key, x)
        X[i] = x
        y_cls[i] = rec.class_index()
        y_set[i] = (rec.gain, ABSENT_TONE if rec.tone is None else rec.tone)
        splits[i] = rec.split
        if progress and (i + 1) % 500 == 0:
            progress(i + 1, n)
    return LoadedData(features=X, class_ids=y_cls, settings=y_set,
                      splits=splits, header=header, records=records)


def standardization_stats(data):
    """Per-mel-band mean/std over the train split."""
    idx = data.indices("train")
    if idx.size == 0:
        raise ValueError("manifest has no train split")
    train = data.features[idx]
    mean = train.mean(axis=(0, 1))
    std = np.maximum(train.std(axis=(0, 1)), 1e-6)
    return mean.astype(np.float32), std.astype(np.float32)


def standardized_batch(data, idx, mean, std):
    """Standardize and shape a batch of features to [n, 1, 87, 128]."""
    x = (data.features[idx] - mean) / std
    return x[:, None, :, :]


def predict_classes(net, data, idx, mean, std, batch=200):
    outs = []
    for i in range(0, len(idx), batch):
        x = standardized_batch(data, idx[i:i + batch], mean, std)
        logits = net.forward(x, train=False)
        if isinstance(logits, tuple):
            logits = logits[0]
        outs.append(logits.argmax(axis=1))
    return np.concatenate(outs).astype(np.int64) if outs else np.empty(0, np.int64)


def predict_settings(net, data, idx, mean, std, cond_classes=None, batch=200):
    """Settings predictions for the rows in idx.

    cond_classes, when given, must align with idx (one conditioning class per
    row); SetNetCond defaults to ground-truth conditioning.
    """
    if cond_classes is None:
        cond_classes = data.class_ids[idx]
    else:
        cond_classes = np.asarray(cond_classes)
    outs = []
    for i in range(0, len(idx), batch):
        x = standardized_batch(data, idx[i:i + batch], mean, std)
        if net.kind == "setnetcond":
            out = net.forward(x, class_ids=cond_classes[i:i + batch], train=False)
        else:
            out = net.forward(x, train=False)
            if isinstance(out, tuple):
                out = out[1]
        outs.append(out)
    return np.concatenate(outs) if outs else np.empty((0, 2), np.float32)


def validation_metric(net, data, idx, mean, std):
    if idx.size == 0:
        raise ValueError("manifest has no valid split")
    if net.kind == "fxnet":
        return classification_accuracy(
            predict_classes(net, data, idx, mean, std), data.class_ids[idx])
    if net.kind in ("setnet", "setnetcond"):
        return settings_accuracy(
            predict_settings(net, data, idx, mean, std), data.settings[idx])
    cls = classification_accuracy(
        predict_classes(net, data, idx, mean, std), data.class_ids[idx])
    est = settings_accuracy(
        predict_settings(net, data, idx, mean, std), data.settings[idx])
    return 0.5 * (cls + est)


class EarlyStopper:
    """Stop after `patience` consecutive epochs without strict improvement."""

    def __init__(self, patience):
        self.patience = patience
        self.best_metric = -np.inf
        self.best_epoch = -1
        self.stall = 0

    def update(self, epoch, metric):
        """Returns (improved, should_stop)."""
        if metric > self.best_metric:
            self.best_metric = metric
            self.best_epoch = epoch
            self.stall = 0
            return True, False
        self.stall += 1
        return False, self.stall >= self.patience


@dataclass
class TrainResult:
    net: object
    log: list
    best_epoch: int
    best_metric: float
    feat_mean: np.ndarray
    feat_std: np.ndarray
    checkpoint_path: Path | None = None


def _batch_loss_and_grads(net, x, data, idx, cfg):
    """Forward + backward for one batch; returns the scalar loss."""
    if net.kind == "fxnet":
        logits = net.forward(x, train=True)
        loss, grad = cross_entropy(logits, data.class_ids[idx])
        net.backward(grad)
    elif net.kind == "setnet":
        out = net.forward(x, train=True)
        loss, grad = mse(out, data.settings[idx])
        net.backward(grad)
    elif net.kind == "setnetcond":
        out = net.forward(x, class_ids=data.class_ids[idx], train=True)
        loss, grad = mse(out, data.settings[idx])
        net.backward(grad)
    elif net.kind == "multinet":
        logits, out = net.forward(x, train=True)
        loss_c, grad_c = cross_entropy(logits, data.class_ids[idx])
        loss_s, grad_s = mse(out, data.settings[idx])
        w = cfg.settings_loss_weight
        loss = loss_c + w * loss_s
        net.backward(grad_c, (w * grad_s).astype(grad_s.dtype))
    else:
        raise ValueError(f"unknown variant {net.kind}")
    return loss


def train(cfg, data, out_dir=None, log_print=None):
    """Train one network per the config; returns the best-epoch model."""
    train_idx = data.indices("train")
    valid_idx = data.indices("valid")
    if train_idx.size == 0:
        raise ValueError("manifest has no train split")
    mean, std = standardization_stats(data)
    net = build_network(cfg.variant, seed=cfg.seed, emb_dim=cfg.emb_dim)
    opt = Adam(net.params(), lr=cfg.lr)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x7214]))

    log = []
    stopper = EarlyStopper(cfg.patience)
    best_state = None
    for epoch in range(cfg.epochs):
        perm = train_idx[rng.permutation(train_idx.size)]
        losses = []
        for i in range(0, perm.size, cfg.batch_size):
            idx = perm[i:i + cfg.batch_size]
            if idx.size < 2:
                continue  # train-mode batchnorm needs at least 2 samples
            x = standardized_batch(data, idx, mean, std)
            opt.zero_grad()
            loss = _batch_loss_and_grads(net, x, data, idx, cfg)
            if not np.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss {loss} at epoch {epoch} batch {i // cfg.batch_size}")
            opt.step()
            losses.append(loss)
        metric = validation_metric(net, data, valid_idx, mean, std)
        improved, stop = stopper.update(epoch, metric)
        if improved:
            best_state = net.snapshot()
        entry = {"epoch": epoch, "train_loss": float(np.mean(losses)),
                 "val_metric": metric, "improved": improved}
        log.append(entry)
        if log_print:
            log_print(f"epoch {epoch:3d}  loss {entry['train_loss']:.4f}  "
                      f"val {metric:6.2f}%{'  *' if improved else ''}")
        if stop:
            break
    net.load_state_dict(best_state)

    result = TrainResult(net=net, log=log, best_epoch=stopper.best_epoch,
                         best_metric=stopper.best_metric, feat_mean=mean, feat_std=std)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result.checkpoint_path = out_dir / f"{cfg.variant}.gfx"
        save_train_checkpoint(result, cfg, data.header, result.checkpoint_path)
        with open(out_dir / f"{cfg.variant}_train_log.jsonl", "w") as fh:
            for entry in log:
                fh.write(json.dumps(entry) + "\n")
    return result


def save_train_checkpoint(result, cfg, data_header, path):
    meta = {
        "variant": cfg.variant,
        "config": cfg.as_dict(),
        "arch": {k: (list(v) if isinstance(v, tuple) else v)
                 for k, v in result.net.arch.items()},
        "filterbank_checksum": feat.filterbank_checksum(),
        "bank_config_hash": data_header.get("bank_config_hash"),
        "train_subset": data_header.get("subset"),
        "best_epoch": result.best_epoch,
        "best_val_metric": result.best_metric,
    }
    tensors = dict(result.net.state_dict())
    tensors["feat/mean"] = result.feat_mean
    tensors["feat/std"] = result.feat_std
    save_checkpoint(path, meta, tensors)


def load_train_checkpoint(path):
    """Rebuild a trained network from a checkpoint file."""
    from .nn.checkpoint import load_checkpoint

    meta, tensors = load_checkpoint(path)
    arch = {k: (tuple(v) if isinstance(v, list) else v) for k, v in meta["arch"].items()}
    net = build_network(meta["variant"], seed=meta["config"]["seed"], **arch)
    mean = tensors.pop("feat/mean")
    std = tensors.pop("feat/std")
    net.load_state_dict(tensors)
    return net, meta, mean, std
