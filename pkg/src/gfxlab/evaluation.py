"""The evaluation battery: per-pair reports, cross matrices, baselines.

Outputs are plain TSV files (one per table/figure analog) so external
plotting can consume them: a train-by-test accuracy matrix, confusion
counts, an MAE/RMSE table and binned mean-error/skew series.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import features as feat
from .effects import EFFECT_ORDER, continuous_ranges, discrete_grid
from .errors import ChecksumMismatch
from .metrics import (
    binned_bias_skew, classification_accuracy, confusion_matrix, error_stats,
    settings_accuracy, uniform_edges,
)
from .training import (
    TrainConfig, load_dataset, load_train_checkpoint, predict_classes,
    predict_settings, train,
)

TWIN_PAIR = (0, 1)  # class indices of 808 and TS9

MONO_SUBSETS = ("mono-discrete", "mono-continuous")
POLY_SUBSETS = ("poly-discrete", "poly-continuous")


def verify_feature_pipeline(meta):
    current = feat.filterbank_checksum()
    trained = meta.get("filterbank_checksum")
    if trained != current:
        raise ChecksumMismatch(
            f"checkpoint was trained with feature pipeline {trained}, "
            f"current is {current}; refusing to evaluate")


@dataclass
class EvalReport:
    subset: str
    variant: str
    n: int
    classification_accuracy: float | None
    settings_accuracy: float | None
    confusion: np.ndarray | None
    errors: dict | None
    binned: dict | None

    def summary(self):
        parts = [f"{self.variant} on {self.subset} (n={self.n})"]
        if self.classification_accuracy is not None:
            parts.append(f"class acc {self.classification_accuracy:.2f}%")
        if self.settings_accuracy is not None:
            parts.append(f"settings acc {self.settings_accuracy:.2f}%")
        return "  ".join(parts)


def _bins_for(subset, control):
    """Grid bins for discrete-trained rows, 10 uniform bins for continuous."""
    if subset.endswith("discrete"):
        if control == "gain":
            values = sorted({s.gain for e in EFFECT_ORDER for s in discrete_grid(e)})
        else:
            values = [0.0, 0.2, 0.5, 0.8, 1.0]
        return {"grid_values": values}
    lo = min(continuous_ranges(e)["gain"][0] for e in EFFECT_ORDER) if control == "gain" else 0.0
    return {"edges": uniform_edges(lo, 1.0, 10)}


def evaluate_checkpoint(net, meta, mean, std, data, split="test"):
    """Full metric set for one (model, dataset) pair on one split."""
    verify_feature_pipeline(meta)
    idx = data.indices(split)
    if idx.size == 0:
        raise ValueError(f"no records in split {split!r}")
    variant = net.kind
    true_cls = data.class_ids[idx]
    cls_acc = conf = set_acc = errors = binned = None
    if variant in ("fxnet", "multinet"):
        pred_cls = predict_classes(net, data, idx, mean, std)
        cls_acc = classification_accuracy(pred_cls, true_cls)
        conf = confusion_matrix(pred_cls, true_cls)
    if variant in ("setnet", "setnetcond", "multinet"):
        preds = predict_settings(net, data, idx, mean, std)
        targets = data.settings[idx]
        set_acc = settings_accuracy(preds, targets)
        errors = error_stats(preds, targets)
        tone_rows = targets[:, 1] >= 0
        subset = data.header.get("subset", "")
        binned = {
            "gain": binned_bias_skew(preds[:, 0], targets[:, 0],
                                     **_bins_for(subset, "gain")),
            "tone": binned_bias_skew(preds[tone_rows, 1], targets[tone_rows, 1],
                                     **_bins_for(subset, "tone")),
        }
    return EvalReport(subset=data.header.get("subset", "?"), variant=variant,
                      n=int(idx.size), classification_accuracy=cls_acc,
                      settings_accuracy=set_acc, confusion=conf,
                      errors=errors, binned=binned)


def twin_merged_accuracy(pred_cls, true_cls, twin=TWIN_PAIR):
    """Accuracy where predicting either twin for a twin-true sample counts."""
    pred_cls, true_cls = np.asarray(pred_cls), np.asarray(true_cls)
    twin = set(twin)
    correct = pred_cls == true_cls
    both_twin = np.isin(true_cls, list(twin)) & np.isin(pred_cls, list(twin))
    return 100.0 * float((correct | both_twin).mean())


def twin_confusion_analysis(pred_cls, true_cls, twin=TWIN_PAIR):
    """How twin-true errors distribute, plus the twin-vs-twin coin test.

    Returns dict with sibling_error_fraction (errors on twin-true samples that
    land on the sibling), the restricted twin-vs-twin counts, and the
    two-sided binomial p-value against a fair coin.
    """
    pred_cls, true_cls = np.asarray(pred_cls), np.asarray(true_cls)
    a, b = twin
    twin_rows = np.isin(true_cls, [a, b])
    errors = twin_rows & (pred_cls != true_cls)
    sibling = ((true_cls == a) & (pred_cls == b)) | ((true_cls == b) & (pred_cls == a))
    n_err = int(errors.sum())
    sibling_fraction = float(sibling.sum() / n_err) if n_err else 1.0

    restricted = twin_rows & np.isin(pred_cls, [a, b])
    n_restricted = int(restricted.sum())
    k_first = int((pred_cls[restricted] == a).sum())
    p_value = binomtest(k_first, n_restricted, 0.5).pvalue if n_restricted else 1.0
    return {
        "n_twin_true": int(twin_rows.sum()),
        "n_twin_errors": n_err,
        "sibling_error_fraction": sibling_fraction,
        "n_restricted": n_restricted,
        "k_predicted_first_twin": k_first,
        "coin_p_value": float(p_value),
    }


def cross_eval(checkpoint_paths, manifest_paths, out_dir=None, split="test",
               cache_dir=None):
    """Tables 4/5 analog: evaluate each checkpoint on the same-phony subsets.

    checkpoint_paths/manifest_paths: dicts keyed by subset name. Mono-trained
    models are tested on mono subsets only, poly on poly only; the returned
    matrix has None in the unpopulated cells.
    """
    matrix = {}
    reports = {}
    loaded = {name: load_dataset(path, cache_dir=cache_dir)
              for name, path in manifest_paths.items()}
    for train_subset, ckpt_path in checkpoint_paths.items():
        net, meta, mean, std = load_train_checkpoint(ckpt_path)
        family = MONO_SUBSETS if train_subset in MONO_SUBSETS else POLY_SUBSETS
        for test_subset in family:
            if test_subset not in loaded:
                continue
            report = evaluate_checkpoint(net, meta, mean, std,
                                         loaded[test_subset], split=split)
            metric = (report.classification_accuracy
                      if report.classification_accuracy is not None
                      else report.settings_accuracy)
            matrix[(train_subset, test_subset)] = metric
            reports[(train_subset, test_subset)] = report
    if out_dir is not None:
        write_matrix_tsv(Path(out_dir) / "accuracy_matrix.tsv", matrix)
        for (tr, te), report in reports.items():
            write_report_files(report, Path(out_dir), f"{tr}__{te}")
    return matrix, reports


def baseline_comparison(data, seed=0, epochs=50, out_dir=None, log_print=None):
    """The three-paradigm comparison on one dataset at a fixed epoch budget.

    Rows: SetNet alone, MultiNet, FxNet + SetNetCond. Joint accuracy counts a
    sample when the class is right and every setting is within the accuracy
    threshold. The FxNet+SetNetCond joint run conditions on FxNet's predicted
    class; the standalone estimation column conditions on the ground truth.
    """
    test_idx = data.indices("test")
    results = {}
    for variant in ("setnet", "multinet", "fxnet", "setnetcond"):
        cfg = TrainConfig(variant=variant, epochs=epochs, patience=epochs,
                          seed=seed)
        results[variant] = train(cfg, data, log_print=log_print)

    rows = []
    targets = data.settings[test_idx]
    true_cls = data.class_ids[test_idx]

    r = results["setnet"]
    est = settings_accuracy(
        predict_settings(r.net, data, test_idx, r.feat_mean, r.feat_std), targets)
    rows.append({"paradigm": "SetNet", "joint": est, "classification": None,
                 "estimation": est})

    r = results["multinet"]
    pred_cls = predict_classes(r.net, data, test_idx, r.feat_mean, r.feat_std)
    preds = predict_settings(r.net, data, test_idx, r.feat_mean, r.feat_std)
    ok = (pred_cls == true_cls) & \
         (np.abs(preds - targets) < 0.1).all(axis=1)
    rows.append({"paradigm": "MultiNet",
                 "joint": 100.0 * float(ok.mean()),
                 "classification": classification_accuracy(pred_cls, true_cls),
                 "estimation": settings_accuracy(preds, targets)})

    rf, rc = results["fxnet"], results["setnetcond"]
    pred_cls = predict_classes(rf.net, data, test_idx, rf.feat_mean, rf.feat_std)
    preds_predcond = predict_settings(rc.net, data, test_idx, rc.feat_mean,
                                      rc.feat_std, cond_classes=pred_cls)
    preds_gtcond = predict_settings(rc.net, data, test_idx, rc.feat_mean, rc.feat_std)
    ok = (pred_cls == true_cls) & \
         (np.abs(preds_predcond - targets) < 0.1).all(axis=1)
    rows.append({"paradigm": "FxNet+SetNetCond",
                 "joint": 100.0 * float(ok.mean()),
                 "classification": classification_accuracy(pred_cls, true_cls),
                 "estimation": settings_accuracy(preds_gtcond, targets)})
    if out_dir is not None:
        write_baseline_tsv(Path(out_dir) / "baseline_comparison.tsv", rows)
    return rows, results


def write_matrix_tsv(path, matrix):
    subsets = ["mono-discrete", "mono-continuous", "poly-discrete", "poly-continuous"]
    trains = [s for s in subsets if any(k[0] == s for k in matrix)]
    tests = [s for s in subsets if any(k[1] == s for k in matrix)]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("train\\test\t" + "\t".join(tests) + "\n")
        for tr in trains:
            cells = [f"{matrix[(tr, te)]:.2f}" if (tr, te) in matrix else "---"
                     for te in tests]
            fh.write(tr + "\t" + "\t".join(cells) + "\n")


def write_confusion_tsv(path, confusion):
    names = [str(e) for e in EFFECT_ORDER]
    with open(path, "w") as fh:
        fh.write("true\\pred\t" + "\t".join(names) + "\n")
        for i, row in enumerate(confusion):
            fh.write(names[i] + "\t" + "\t".join(str(int(v)) for v in row) + "\n")


def write_errors_tsv(path, errors):
    with open(path, "w") as fh:
        fh.write("control\tmae\trmse\n")
        for control in ("gain", "tone", "overall"):
            stats = errors.get(control)
            if stats is None:
                fh.write(f"{control}\t---\t---\n")
            else:
                fh.write(f"{control}\t{stats[0]:.6f}\t{stats[1]:.6f}\n")


def write_binned_tsv(path, binned):
    with open(path, "w") as fh:
        fh.write("control\tbin_center\tcount\tmean_error\tskew\n")
        for control, rows in binned.items():
            for b in rows:
                fh.write(f"{control}\t{b['center']:.4f}\t{b['count']}\t"
                         f"{b['mean_error']:.6f}\t{b['skew']:.6f}\n")


def write_baseline_tsv(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("paradigm\tjoint\tclassification\testimation\n")
        for r in rows:
            cells = [r["paradigm"]] + [
                "---" if r[k] is None else f"{r[k]:.2f}"
                for k in ("joint", "classification", "estimation")]
            fh.write("\t".join(cells) + "\n")


def write_report_files(report, out_dir, prefix):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "subset": report.subset, "variant": report.variant, "n": report.n,
        "classification_accuracy": report.classification_accuracy,
        "settings_accuracy": report.settings_accuracy,
    }
    (out_dir / f"{prefix}_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if report.confusion is not None:
        write_confusion_tsv(out_dir / f"{prefix}_confusion.tsv", report.confusion)
    if report.errors is not None:
        write_errors_tsv(out_dir / f"{prefix}_mae_rmse.tsv", report.errors)
    if report.binned is not None:
        write_binned_tsv(out_dir / f"{prefix}_bias_skew.tsv", report.binned)
