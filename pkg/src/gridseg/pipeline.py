"""End-to-end segmentation: preprocess, build graph, solve, decode, stitch.

Decoding is direct: pixel (r, c) takes the value of QUBO variable
r * width + c in the best sample.  Because the objective is complement
symmetric the solver may hand back either side of the cut, so every mask
passes through a polarity rule: class 1 is the side whose mean reference
intensity is higher.  Patched runs reuse the rule per patch and fall back
to the whole-image mean when a patch comes out single-class, which keeps
flat patches consistent with their surroundings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from matplotlib.colors import rgb_to_hsv
from scipy.ndimage import median_filter

from .errors import BandCountError, DimensionError, InvalidParameterError
from .graph import (
    GridGraph,
    RasterImage,
    WeightConfig,
    as_single_band,
    image_to_grid,
)
from .qubo import mincut_to_qubo
from .solvers import SolverConfig, solve

HSV_CHANNELS = {"hue": 0, "saturation": 1, "value": 2}
DEFAULT_PATCH_SIZE = 32


@dataclass(frozen=True)
class SegmentationMask:
    """Per-pixel integer labels; -1 marks uncertain ground truth."""

    width: int
    height: int
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.shape != (self.height, self.width):
            raise DimensionError(
                f"labels shape {lab.shape} != (height={self.height}, width={self.width})"
            )
        if not np.issubdtype(lab.dtype, np.integer):
            if not np.all(lab == np.rint(lab)):
                raise InvalidParameterError("labels must be integers")
        lab = lab.astype(np.int64)
        if lab.size and lab.min() < -1:
            raise InvalidParameterError("labels must be >= -1")
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)

    @classmethod
    def from_array(cls, labels) -> "SegmentationMask":
        lab = np.asarray(labels)
        if lab.ndim != 2:
            raise DimensionError(f"labels must be 2-D, got ndim={lab.ndim}")
        return cls(width=lab.shape[1], height=lab.shape[0], labels=lab)


@dataclass(frozen=True)
class PatchPlan:
    """Non-overlapping tiling that covers every pixel exactly once.

    Patches are patch_size square except at the right/bottom rim, where
    they shrink to fit.  origins lists top-left corners row-major.
    """

    width: int
    height: int
    patch_size: int
    origins: tuple[tuple[int, int], ...]

    @classmethod
    def cover(cls, width: int, height: int, patch_size: int = DEFAULT_PATCH_SIZE) -> "PatchPlan":
        if width < 1 or height < 1:
            raise InvalidParameterError(f"width and height must be >= 1, got {width}x{height}")
        if patch_size < 1:
            raise InvalidParameterError(f"patch_size must be >= 1, got {patch_size}")
        origins = tuple(
            (r, c)
            for r in range(0, height, patch_size)
            for c in range(0, width, patch_size)
        )
        return cls(width=width, height=height, patch_size=patch_size, origins=origins)

    def extents(self):
        """Yield (r0, r1, c0, c1) for every patch."""
        for r, c in self.origins:
            yield r, min(r + self.patch_size, self.height), c, min(c + self.patch_size, self.width)


def preprocess_forest(img, channel: str = "hue") -> RasterImage:
    """Median-blur an RGB image and return one HSV channel in [0, 1].

    Samples with a maximum above 1 are taken as 0..255 and rescaled first.
    The 3x3 median runs per band with edge replication.  Hue follows the
    usual convention scaled to [0, 1] (pure red 0, pure green 1/3).
    """
    if channel not in HSV_CHANNELS:
        raise InvalidParameterError(f"channel must be one of {tuple(HSV_CHANNELS)}, got {channel!r}")
    if not isinstance(img, RasterImage):
        img = RasterImage.from_array(img)
    if img.bands != 3:
        raise BandCountError(f"expected an RGB image with 3 bands, got {img.bands}")
    data = img.data
    if data.max(initial=0.0) > 1.0:
        data = data / 255.0
    blurred = np.stack([median_filter(data[b], size=3, mode="nearest") for b in range(3)])
    hsv = rgb_to_hsv(np.clip(np.moveaxis(blurred, 0, 2), 0.0, 1.0))
    return RasterImage.from_array(hsv[:, :, HSV_CHANNELS[channel]])


def preprocess_flood(img, green_band: int, nir_band: int) -> RasterImage:
    """Normalized difference water index (green - nir) / (green + nir).

    Pixels where the denominator is zero (both bands zero for
    non-negative inputs) map to 0.  Output lies in [-1, 1] for
    non-negative band intensities.
    """
    if not isinstance(img, RasterImage):
        img = RasterImage.from_array(img)
    for name, idx in (("green_band", green_band), ("nir_band", nir_band)):
        if not 0 <= idx < img.bands:
            raise InvalidParameterError(
                f"{name} index {idx} out of range for {img.bands} band(s)"
            )
    if green_band == nir_band:
        raise InvalidParameterError("green_band and nir_band must differ")
    g = img.band(green_band)
    n = img.band(nir_band)
    denom = g + n
    with np.errstate(divide="ignore", invalid="ignore"):
        ndwi = np.where(denom != 0, (g - n) / np.where(denom != 0, denom, 1.0), 0.0)
    return RasterImage.from_array(ndwi)


def _pool_matrix(src: int, dst: int) -> np.ndarray:
    """Row-stochastic box-filter matrix averaging src cells into dst cells."""
    edges = np.arange(dst + 1) * (src / dst)
    p = np.zeros((dst, src))
    for t in range(dst):
        lo, hi = edges[t], edges[t + 1]
        for s in range(int(np.floor(lo)), min(int(np.ceil(hi)), src)):
            overlap = min(hi, s + 1.0) - max(lo, float(s))
            if overlap > 0:
                p[t, s] = overlap
    return p / (src / dst)


def downscale(img, target) -> RasterImage:
    """Box-filter mean pooling down to ``target`` (int for square, or (w, h)).

    Upscaling is refused.  When the target does not divide the source the
    box boundaries fall fractionally and cells are area-weighted.
    """
    if not isinstance(img, RasterImage):
        img = RasterImage.from_array(img)
    if isinstance(target, int):
        tw = th = target
    else:
        tw, th = target
    if not (1 <= tw <= img.width and 1 <= th <= img.height):
        raise InvalidParameterError(
            f"target {tw}x{th} invalid for source {img.width}x{img.height}; "
            "only downscaling is supported"
        )
    rows = _pool_matrix(img.height, th)
    cols = _pool_matrix(img.width, tw)
    out = np.stack([rows @ img.data[b] @ cols.T for b in range(img.bands)])
    return RasterImage(width=tw, height=th, bands=img.bands, data=out)


def resolve_polarity(mask, reference, single_class_threshold: float | None = None) -> SegmentationMask:
    """Relabel a binary mask so class 1 is the higher-mean side of the reference.

    Ties hand label 0 to the class of pixel (0, 0).  A mask with only one
    class present becomes all zeros, unless single_class_threshold is
    given, in which case the class goes to 1 iff its mean reference value
    exceeds the threshold (used by patched runs, where flat patches are
    judged against the whole-image mean).
    """
    labels = np.asarray(mask.labels if hasattr(mask, "labels") else mask)
    ref = as_single_band(reference)
    if labels.shape != ref.shape:
        raise DimensionError(f"mask shape {labels.shape} != reference shape {ref.shape}")
    if not np.all((labels == 0) | (labels == 1)):
        raise InvalidParameterError("polarity resolution expects a strictly binary mask")
    ones = labels == 1
    n1 = int(np.count_nonzero(ones))
    if n1 == 0 or n1 == labels.size:
        if single_class_threshold is not None and float(ref.mean()) > single_class_threshold:
            return SegmentationMask.from_array(np.ones_like(labels))
        return SegmentationMask.from_array(np.zeros_like(labels))
    mean1 = float(ref[ones].mean())
    mean0 = float(ref[~ones].mean())
    if mean1 > mean0:
        out = labels
    elif mean0 > mean1:
        out = 1 - labels
    else:
        # Exact tie: pixel (0, 0) is assigned label 0.
        out = 1 - labels if labels[0, 0] == 1 else labels
    return SegmentationMask.from_array(out)


def _decode(bits: np.ndarray, width: int, height: int) -> np.ndarray:
    return bits.astype(np.int64).reshape(height, width)


def _segment_single(plane: np.ndarray, weight_cfg: WeightConfig, solver_cfg: SolverConfig,
                    single_class_threshold: float | None = None):
    """One whole-plane run; returns (mask, info dict for sidecars)."""
    graph = image_to_grid(plane, weight_cfg)
    problem = mincut_to_qubo(graph)
    result = solve(problem, solver_cfg)
    raw = _decode(result.best.bits, graph.width, graph.height)
    mask = resolve_polarity(raw, plane, single_class_threshold)
    flipped = not np.array_equal(mask.labels, raw)
    info = {
        "solver_label": result.solver_label,
        "best_energy": result.best.energy,
        "wall_time": result.wall_time,
        "num_vars": problem.num_vars,
        "num_edges": graph.num_edges,
        "polarity_flipped": flipped,
    }
    return mask, info


def segment(img, weight_cfg: WeightConfig = WeightConfig(),
            solver_cfg: SolverConfig = SolverConfig()) -> SegmentationMask:
    """Segment a single-band image into two classes by signed min-cut."""
    mask, _ = _segment_single(as_single_band(img), weight_cfg, solver_cfg)
    return mask


def _segment_patched(plane: np.ndarray, plan: PatchPlan, weight_cfg: WeightConfig,
                     solver_cfg: SolverConfig):
    if (plan.width, plan.height) != (plane.shape[1], plane.shape[0]):
        raise DimensionError(
            f"plan covers {plan.width}x{plan.height}, image is "
            f"{plane.shape[1]}x{plane.shape[0]}"
        )
    global_mean = float(plane.mean())
    out = np.zeros(plane.shape, dtype=np.int64)
    patch_infos = []
    for r0, r1, c0, c1 in plan.extents():
        sub = plane[r0:r1, c0:c1]
        mask, info = _segment_single(sub, weight_cfg, solver_cfg,
                                     single_class_threshold=global_mean)
        out[r0:r1, c0:c1] = mask.labels
        info["patch"] = [r0, r1, c0, c1]
        patch_infos.append(info)
    info = {
        "patch_size": plan.patch_size,
        "num_patches": len(patch_infos),
        "patches": patch_infos,
        "wall_time": sum(p["wall_time"] for p in patch_infos),
    }
    return SegmentationMask.from_array(out), info


def segment_patched(img, plan: PatchPlan | None = None,
                    weight_cfg: WeightConfig = WeightConfig(),
                    solver_cfg: SolverConfig = SolverConfig()) -> SegmentationMask:
    """Segment patch by patch and stitch; segmentation of each patch is
    independent, so the cut never crosses patch seams by construction."""
    plane = as_single_band(img)
    if plan is None:
        plan = PatchPlan.cover(plane.shape[1], plane.shape[0])
    mask, _ = _segment_patched(plane, plan, weight_cfg, solver_cfg)
    return mask


def _pixel_margins(graph: GridGraph, labels: np.ndarray) -> np.ndarray:
    """Mean weight of the uncut edges at each pixel; -inf when all are cut."""
    same_h = labels[:, :-1] == labels[:, 1:]
    same_v = labels[:-1, :] == labels[1:, :]
    wsum = np.zeros(labels.shape)
    cnt = np.zeros(labels.shape)
    hw = graph.horizontal_weights * same_h
    wsum[:, :-1] += hw
    wsum[:, 1:] += hw
    cnt[:, :-1] += same_h
    cnt[:, 1:] += same_h
    vw = graph.vertical_weights * same_v
    wsum[:-1, :] += vw
    wsum[1:, :] += vw
    cnt[:-1, :] += same_v
    cnt[1:, :] += same_v
    with np.errstate(invalid="ignore"):
        return np.where(cnt > 0, wsum / np.maximum(cnt, 1), -np.inf)


def segment_multiclass(img, class_weight_cfgs, solver_cfg: SolverConfig = SolverConfig()) -> SegmentationMask:
    """One-vs-rest multi-class segmentation over p >= 2 weight configurations.

    Entry k may be a WeightConfig or a callable mapping the image to a
    GridGraph (e.g. a trained weight model).  Task k claims the pixels on
    the class-1 side of its resolved binary mask; a pixel claimed by
    several classes goes to the one with the largest margin (mean weight
    of its uncut incident edges), ties to the lowest class index, and a
    pixel claimed by nobody falls back to class 0.
    """
    plane = as_single_band(img)
    cfgs = list(class_weight_cfgs)
    if len(cfgs) < 2:
        raise InvalidParameterError(f"need at least 2 class configurations, got {len(cfgs)}")
    h, w = plane.shape
    scores = np.full((len(cfgs), h, w), -np.inf)
    claimed = np.zeros((len(cfgs), h, w), dtype=bool)
    for k, cfg in enumerate(cfgs):
        graph = cfg(plane) if callable(cfg) else image_to_grid(plane, cfg)
        if (graph.width, graph.height) != (w, h):
            raise DimensionError(f"class {k} graph is {graph.width}x{graph.height}, image is {w}x{h}")
        problem = mincut_to_qubo(graph)
        result = solve(problem, solver_cfg)
        raw = _decode(result.best.bits, w, h)
        resolved = resolve_polarity(raw, plane)
        claim = resolved.labels == 1
        margins = _pixel_margins(graph, resolved.labels)
        # A claimed pixel must outrank any unclaimed one, even with every
        # incident edge cut, so floor its margin at a finite sentinel.
        scores[k] = np.where(claim, np.maximum(margins, -1e300), -np.inf)
        claimed[k] = claim
    best = np.argmax(scores, axis=0)
    labels = np.where(claimed.any(axis=0), best, 0)
    return SegmentationMask.from_array(labels)
