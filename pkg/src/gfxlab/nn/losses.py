"""Loss functions. Each returns (scalar loss, gradient w.r.t. the input)."""

import numpy as np


def cross_entropy(logits, labels):
    """Mean negative log softmax probability of the true class.

    Softmax is folded into the loss; the network head stays linear.
    """
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} != ({n},)")
    if labels.min() < 0 or labels.max() >= k:
        raise IndexError("class index out of range")
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(lse - shifted[np.arange(n), labels]))
    grad = np.exp(shifted - lse[:, None])
    grad[np.arange(n), labels] -= 1.0
    return loss, (grad / n).astype(logits.dtype)


def mse(pred, target):
    """Mean squared difference over every component."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 * diff / diff.size).astype(pred.dtype)
