"""Evaluation metrics: settings accuracy, MAE/RMSE, confusion, binned stats.

Settings targets are (gain, tone) vectors in [0, 1] with -1.0 marking an
absent tone control. The accuracy threshold treats the sentinel like any
other target value; MAE/RMSE statistics exclude sentinel rows from the tone
column instead.
"""

import numpy as np

from .effects import N_EFFECTS

ACCURACY_THRESHOLD = 0.1
ABSENT_TONE = -1.0


def settings_accuracy(preds, targets):
    """Percent of rows where every control's absolute error is < 0.1."""
    preds, targets = _aligned(preds, targets)
    if len(preds) == 0:
        raise ValueError("empty input")
    ok = (np.abs(preds - targets) < ACCURACY_THRESHOLD).all(axis=1)
    return 100.0 * float(ok.mean())


def classification_accuracy(pred_classes, true_classes):
    pred_classes, true_classes = np.asarray(pred_classes), np.asarray(true_classes)
    if pred_classes.shape != true_classes.shape:
        raise ValueError("shape mismatch")
    if len(pred_classes) == 0:
        raise ValueError("empty input")
    return 100.0 * float((pred_classes == true_classes).mean())


def error_stats(preds, targets):
    """MAE and RMSE per control and pooled.

    Returns {"gain": (mae, rmse), "tone": (mae, rmse) | None, "overall": ...};
    tone statistics cover only rows whose target tone is a real value.
    """
    preds, targets = _aligned(preds, targets)
    if len(preds) == 0:
        raise ValueError("empty input")
    gain_err = preds[:, 0] - targets[:, 0]
    tone_rows = targets[:, 1] != ABSENT_TONE
    tone_err = preds[tone_rows, 1] - targets[tone_rows, 1]
    pooled = np.concatenate([gain_err, tone_err])
    return {
        "gain": _mae_rmse(gain_err),
        "tone": _mae_rmse(tone_err) if tone_err.size else None,
        "overall": _mae_rmse(pooled),
    }


def _mae_rmse(err):
    return float(np.mean(np.abs(err))), float(np.sqrt(np.mean(err ** 2)))


def confusion_matrix(pred_classes, true_classes, n_classes=N_EFFECTS):
    pred_classes = np.asarray(pred_classes)
    true_classes = np.asarray(true_classes)
    if pred_classes.shape != true_classes.shape:
        raise ValueError("shape mismatch")
    labels = np.concatenate([pred_classes, true_classes])
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise IndexError("class label out of range")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (true_classes, pred_classes), 1)
    return cm


def skewness(err):
    """Fisher-Pearson moment coefficient g1 = m3 / m2^1.5; 0 at zero variance."""
    err = np.asarray(err, dtype=np.float64)
    centered = err - err.mean()
    m2 = np.mean(centered ** 2)
    if m2 <= 1e-24:
        return 0.0
    m3 = np.mean(centered ** 3)
    return float(m3 / m2 ** 1.5)


def binned_bias_skew(preds, targets, grid_values=None, edges=None, min_count=3):
    """Mean signed error and skew per true-value bin.

    Pass grid_values (discrete-trained models: rows match a grid value
    exactly) or edges (continuous: uniform bin edges), not both. Bins with
    fewer than min_count rows are omitted. Returns a list of dicts with keys
    center, count, mean_error, skew.
    """
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape or preds.ndim != 1:
        raise ValueError("preds/targets must be aligned 1-d arrays")
    if (grid_values is None) == (edges is None):
        raise ValueError("pass exactly one of grid_values or edges")
    err = preds - targets
    out = []
    if edges is not None:
        edges = np.asarray(edges, dtype=np.float64)
        idx = np.clip(np.digitize(targets, edges) - 1, 0, len(edges) - 2)
        for b in range(len(edges) - 1):
            sel = idx == b
            center = 0.5 * (edges[b] + edges[b + 1])
            _append_bin(out, center, err[sel], min_count)
    else:
        for center in grid_values:
            sel = np.isclose(targets, center, atol=1e-9)
            _append_bin(out, float(center), err[sel], min_count)
    return out


def _append_bin(out, center, errs, min_count):
    if errs.size >= min_count:
        out.append({"center": float(center), "count": int(errs.size),
                    "mean_error": float(errs.mean()), "skew": skewness(errs)})


def uniform_edges(lo, hi, n_bins=10):
    return np.linspace(lo, hi, n_bins + 1)


def _aligned(preds, targets):
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape:
        raise ValueError(f"shape mismatch: {preds.shape} vs {targets.shape}")
    if preds.ndim != 2:
        raise ValueError("expected [n, controls] arrays")
    return preds, targets
