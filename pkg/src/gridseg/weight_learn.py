"""Learned edge weights: logistic regression on 4-neighbor pair features.

Targets come from a reference mask: -1 where the pair straddles a label
boundary, +1 inside a region.  Training remaps them to {0, 1} so the
standard log loss applies; the learned pair probability f is mapped back
onto a signed edge weight 2 f - 1, which keeps weights strictly inside
(-1, 1) and plugs directly into the min-cut encoding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.special import expit

from .errors import (
    DimensionError,
    DivergenceError,
    FormatError,
    InvalidParameterError,
)
from .graph import GridGraph, as_single_band

FEATURE_NAMES = ("signed_diff", "abs_diff", "grad_mag_mean", "local_var_mean")
MODEL_FORMAT = 1

# Open-interval guard: the largest float64 strictly below 1.
_WEIGHT_LIMIT = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class WeightModel:
    """Linear-logistic edge-weight model over named pair features."""

    theta: np.ndarray
    bias: float
    feature_spec: tuple[str, ...] = FEATURE_NAMES
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=np.float64).ravel()
        if th.size != len(self.feature_spec):
            raise DimensionError(
                f"theta has {th.size} entries for {len(self.feature_spec)} features"
            )
        unknown = [f for f in self.feature_spec if f not in FEATURE_NAMES]
        if unknown:
            raise InvalidParameterError(f"unknown feature names {unknown}")
        th = th.copy()
        th.flags.writeable = False
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "feature_spec", tuple(self.feature_spec))


def extract_pairs(img, mask) -> tuple[np.ndarray, np.ndarray]:
    """Features and targets for every 4-neighbor pair, in canonical edge order.

    Returns (X, y): X has one row per pair with columns FEATURE_NAMES, y is
    +1 for a same-label pair and -1 across a boundary.  The signed
    difference is first-pixel minus second-pixel in canonical orientation.
    """
    plane = as_single_band(img)
    labels = np.asarray(mask.labels if hasattr(mask, "labels") else mask)
    if labels.shape != plane.shape:
        raise DimensionError(f"mask shape {labels.shape} != image shape {plane.shape}")
    if not np.all((labels == 0) | (labels == 1)):
        raise InvalidParameterError("training masks must be strictly binary")

    # np.gradient needs >= 2 samples along an axis; a 1-pixel extent has
    # zero gradient along that axis by convention.
    gy = np.gradient(plane, axis=0) if plane.shape[0] > 1 else np.zeros_like(plane)
    gx = np.gradient(plane, axis=1) if plane.shape[1] > 1 else np.zeros_like(plane)
    grad_mag = np.hypot(gx, gy)
    local_var = uniform_filter(plane * plane, size=3, mode="nearest") - (
        uniform_filter(plane, size=3, mode="nearest") ** 2
    )
    np.clip(local_var, 0.0, None, out=local_var)

    def pair_rows(a_first, a_second, lab_first, lab_second, gm_first, gm_second,
                  lv_first, lv_second):
        signed = (a_first - a_second).ravel()
        cols = np.stack(
            [
                signed,
                np.abs(signed),
                0.5 * (gm_first + gm_second).ravel(),
                0.5 * (lv_first + lv_second).ravel(),
            ],
            axis=1,
        )
        targets = np.where((lab_first == lab_second).ravel(), 1.0, -1.0)
        return cols, targets

    xh, yh = pair_rows(
        plane[:, :-1], plane[:, 1:], labels[:, :-1], labels[:, 1:],
        grad_mag[:, :-1], grad_mag[:, 1:], local_var[:, :-1], local_var[:, 1:],
    )
    xv, yv = pair_rows(
        plane[:-1, :], plane[1:, :], labels[:-1, :], labels[1:, :],
        grad_mag[:-1, :], grad_mag[1:, :], local_var[:-1, :], local_var[1:, :],
    )
    return np.concatenate([xh, xv]), np.concatenate([yh, yv])


def _feature_columns(feature_spec) -> list[int]:
    return [FEATURE_NAMES.index(f) for f in feature_spec]


def _features_only(img, feature_spec) -> np.ndarray:
    plane = as_single_band(img)
    x, _ = extract_pairs(plane, np.zeros(plane.shape, dtype=np.int64))
    return x[:, _feature_columns(feature_spec)]


def _loss_and_grad(groups, theta, bias):
    """Mean over images of the per-image mean log loss, plus its gradient.

    groups is a list of (X, y01) arrays; the two-level mean makes the loss
    independent of duplicating a dataset and keeps large images from
    drowning out small ones.
    """
    d = theta.shape[0]
    loss = 0.0
    g_theta = np.zeros(d)
    g_bias = 0.0
    # Overflow here just means divergence; train() raises on non-finite loss.
    with np.errstate(over="ignore", invalid="ignore"):
        for x, y01 in groups:
            z = x @ theta + bias
            # log loss via softplus: y*softplus(-z) + (1-y)*softplus(z)
            loss += float(np.mean(y01 * np.logaddexp(0.0, -z) + (1.0 - y01) * np.logaddexp(0.0, z)))
            resid = expit(z) - y01
            g_theta += (x.T @ resid) / x.shape[0]
            g_bias += float(np.mean(resid))
    k = len(groups)
    return loss / k, g_theta / k, g_bias / k


def _prepare_groups(dataset, feature_spec):
    groups = []
    cols = _feature_columns(feature_spec)
    for img, mask in dataset:
        x, y = extract_pairs(img, mask)
        if x.shape[0] == 0:
            continue
        groups.append((x[:, cols], (y + 1.0) / 2.0))
    if not groups:
        raise InvalidParameterError("dataset contains no neighbor pairs")
    return groups


def train(dataset, learning_rate: float = 0.5, epochs: int = 500, seed: int = 0,
          feature_spec=FEATURE_NAMES) -> WeightModel:
    """Full-batch gradient descent from theta = 0, bias = 0.

    The objective is convex, so the zero initialization makes the run
    deterministic; seed is recorded in the metadata for provenance only.
    Raises DivergenceError naming the epoch if the loss stops being finite.
    """
    if learning_rate <= 0 or not math.isfinite(learning_rate):
        raise InvalidParameterError(f"learning_rate must be positive, got {learning_rate}")
    if epochs < 0:
        raise InvalidParameterError(f"epochs must be >= 0, got {epochs}")
    groups = _prepare_groups(list(dataset), feature_spec)
    theta = np.zeros(len(feature_spec))
    bias = 0.0
    curve = []
    for epoch in range(epochs):
        loss, g_theta, g_bias = _loss_and_grad(groups, theta, bias)
        if not math.isfinite(loss):
            raise DivergenceError(f"training diverged at epoch {epoch}: loss is not finite")
        curve.append(loss)
        theta = theta - learning_rate * g_theta
        bias = bias - learning_rate * g_bias
    final_loss, _, _ = _loss_and_grad(groups, theta, bias)
    if not math.isfinite(final_loss):
        raise DivergenceError(f"training diverged at epoch {epochs}: loss is not finite")
    curve.append(final_loss)

    correct = 0
    total = 0
    for x, y01 in groups:
        z = x @ theta + bias
        correct += int(np.count_nonzero((z >= 0) == (y01 == 1.0)))
        total += x.shape[0]
    metadata = {
        "loss_curve": curve,
        "learning_rate": learning_rate,
        "epochs": epochs,
        "seed": seed,
        "pair_accuracy": correct / total,
    }
    return WeightModel(theta=theta, bias=bias, feature_spec=tuple(feature_spec),
                       metadata=metadata)


def apply_model(model: WeightModel, img) -> GridGraph:
    """Signed edge weights 2 f - 1 for every 4-neighbor pair of an image.

    2 sigmoid(z) - 1 equals tanh(z / 2); the result is clamped to the open
    interval (-1, 1) so saturated logits cannot reach the endpoints.
    """
    plane = as_single_band(img)
    x = _features_only(plane, model.feature_spec)
    z = x @ model.theta + model.bias
    w = np.clip(np.tanh(0.5 * z), -_WEIGHT_LIMIT, _WEIGHT_LIMIT)
    return GridGraph.from_edge_weight_array(plane.shape[1], plane.shape[0], w)


def grad_check(dataset, epsilon: float = 1e-6, seed: int = 0, max_pairs: int = 100,
               feature_spec=FEATURE_NAMES) -> float:
    """Central-difference check of the analytic gradient at a random point.

    At most max_pairs pairs are subsampled per image (seeded, so the check
    is reproducible).  Returns the maximum deviation over all parameters,
    relative with a unit floor: |a - b| / max(1, |a|, |b|).
    """
    if not 0 < epsilon <= 1e-3:
        raise InvalidParameterError(f"epsilon must lie in (0, 1e-3], got {epsilon}")
    rng = np.random.default_rng(seed)
    groups = []
    for x, y01 in _prepare_groups(list(dataset), feature_spec):
        if x.shape[0] > max_pairs:
            pick = rng.choice(x.shape[0], size=max_pairs, replace=False)
            pick.sort()
            x, y01 = x[pick], y01[pick]
        groups.append((x, y01))
    d = len(feature_spec)
    theta = rng.normal(0.0, 0.5, d)
    bias = float(rng.normal(0.0, 0.5))

    _, g_theta, g_bias = _loss_and_grad(groups, theta, bias)
    analytic = np.append(g_theta, g_bias)
    numeric = np.zeros(d + 1)
    for k in range(d + 1):
        def loss_at(delta, k=k):
            th = theta.copy()
            b = bias
            if k < d:
                th[k] += delta
            else:
                b += delta
            val, _, _ = _loss_and_grad(groups, th, b)
            return val

        numeric[k] = (loss_at(epsilon) - loss_at(-epsilon)) / (2.0 * epsilon)
    scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / scale))


def save_model(model: WeightModel, path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "feature_spec": list(model.feature_spec),
        "theta": [float(t) for t in model.theta],
        "bias": float(model.bias),
        "metadata": model.metadata,
    }
    with open(path, "w", encoding="ascii", newline="") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> WeightModel:
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise FormatError(f"{path}: unsupported model format {doc.get('format')!r}")
    try:
        return WeightModel(
            theta=np.asarray(doc["theta"], dtype=np.float64),
            bias=float(doc["bias"]),
            feature_spec=tuple(doc["feature_spec"]),
            metadata=dict(doc.get("metadata", {})),
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing model field {exc}") from exc
