"""Weighted 4-connected lattice graphs over single-band rasters.

A pixel at row r, column c maps to node index ``r * width + c``.  Edges
iterate in one canonical order everywhere: all horizontal edges row-major,
then all vertical edges row-major.  That order is part of the on-disk
contracts (edge lists, QUBO exports), so it must never change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BandCountError,
    DimensionError,
    FormatError,
    InvalidParameterError,
)

DEFAULT_SIGMA = 0.5
DEFAULT_RANGE = (-1.0, 1.0)


@dataclass(frozen=True)
class RasterImage:
    """Immutable multi-band raster with float64 samples.

    ``data`` is stored as (bands, height, width); ``band(k)`` returns a
    read-only 2-D view.  Intensities are kept exactly as given: any
    rescaling (0..255 to 0..1 and the like) is the caller's business.
    """

    width: int
    height: int
    bands: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.shape != (self.bands, self.height, self.width):
            raise DimensionError(
                f"data shape {arr.shape} does not match "
                f"(bands={self.bands}, height={self.height}, width={self.width})"
            )
        if self.width < 1 or self.height < 1 or self.bands < 1:
            raise InvalidParameterError("width, height and bands must be >= 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_array(cls, arr) -> "RasterImage":
        """Build from a (height, width) or channel-last (height, width, bands) array."""
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim == 2:
            h, w = a.shape
            return cls(width=w, height=h, bands=1, data=a[np.newaxis, :, :])
        if a.ndim == 3:
            h, w, b = a.shape
            return cls(width=w, height=h, bands=b, data=np.moveaxis(a, 2, 0))
        raise DimensionError(f"expected a 2-D or 3-D array, got ndim={a.ndim}")

    def band(self, k: int) -> np.ndarray:
        if not 0 <= k < self.bands:
            raise BandCountError(f"band index {k} out of range for {self.bands} band(s)")
        return self.data[k]


def as_single_band(img) -> np.ndarray:
    """Coerce a RasterImage or 2-D array to one float64 (height, width) plane."""
    if isinstance(img, RasterImage):
        if img.bands != 1:
            raise BandCountError(f"expected a single-band image, got {img.bands} bands")
        return img.band(0)
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2:
        raise BandCountError(f"expected a single-band image, got ndim={a.ndim}")
    return a


@dataclass(frozen=True)
class WeightConfig:
    """Edge-weight construction parameters.

    sigma scales the Gaussian contrast term; the similarity range is then
    mapped linearly onto ``-target_range`` so that the most similar pair
    gets +1 and the most dissimilar -1 (for the default range).
    """

    sigma: float = DEFAULT_SIGMA
    normalize: bool = True
    target_range: tuple[float, float] = DEFAULT_RANGE

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidParameterError(f"sigma must be positive and finite, got {self.sigma}")
        a, b = self.target_range
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise InvalidParameterError(f"target_range must satisfy a < b, got {self.target_range}")


@dataclass(frozen=True)
class GridGraph:
    """4-connected lattice over a width x height pixel grid.

    horizontal_weights has shape (height, width - 1): entry (r, c) is the
    weight of edge (r, c)-(r, c + 1).  vertical_weights has shape
    (height - 1, width): entry (r, c) is the weight of edge (r, c)-(r + 1, c).
    Both arrays are copied and frozen at construction.
    """

    width: int
    height: int
    horizontal_weights: np.ndarray = field(repr=False)
    vertical_weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidParameterError("width and height must be >= 1")
        hw = np.asarray(self.horizontal_weights, dtype=np.float64)
        vw = np.asarray(self.vertical_weights, dtype=np.float64)
        if hw.shape != (self.height, self.width - 1):
            raise DimensionError(
                f"horizontal_weights shape {hw.shape} != {(self.height, self.width - 1)}"
            )
        if vw.shape != (self.height - 1, self.width):
            raise DimensionError(
                f"vertical_weights shape {vw.shape} != {(self.height - 1, self.width)}"
            )
        if not (np.all(np.isfinite(hw)) and np.all(np.isfinite(vw))):
            raise InvalidParameterError("edge weights must be finite")
        hw = hw.copy()
        vw = vw.copy()
        hw.flags.writeable = False
        vw.flags.writeable = False
        object.__setattr__(self, "horizontal_weights", hw)
        object.__setattr__(self, "vertical_weights", vw)

    @property
    def num_nodes(self) -> int:
        return self.width * self.height

    @property
    def num_edges(self) -> int:
        # 2wh - w - h for a 4-connected lattice
        return self.horizontal_weights.size + self.vertical_weights.size

    def node_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.height and 0 <= col < self.width):
            raise DimensionError(f"pixel ({row}, {col}) outside {self.height}x{self.width} grid")
        return row * self.width + col

    def edges(self):
        """Yield (u, v, weight) with u < v in canonical order."""
        w = self.width
        for r in range(self.height):
            for c in range(w - 1):
                yield r * w + c, r * w + c + 1, float(self.horizontal_weights[r, c])
        for r in range(self.height - 1):
            for c in range(w):
                yield r * w + c, (r + 1) * w + c, float(self.vertical_weights[r, c])

    def edge_weight_array(self) -> np.ndarray:
        """All edge weights as one 1-D array in canonical order."""
        return np.concatenate([self.horizontal_weights.ravel(), self.vertical_weights.ravel()])

    def edge_index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint index arrays (u, v) aligned with edge_weight_array()."""
        w, h = self.width, self.height
        nodes = np.arange(w * h).reshape(h, w)
        hu = nodes[:, :-1].ravel()
        hv = nodes[:, 1:].ravel()
        vu = nodes[:-1, :].ravel()
        vv = nodes[1:, :].ravel()
        return np.concatenate([hu, vu]), np.concatenate([hv, vv])

    @classmethod
    def from_edge_weight_array(cls, width: int, height: int, weights) -> "GridGraph":
        """Inverse of edge_weight_array(): split a canonical 1-D weight vector."""
        w = np.asarray(weights, dtype=np.float64).ravel()
        n_h = height * (width - 1)
        n_v = (height - 1) * width
        if w.size != n_h + n_v:
            raise DimensionError(f"expected {n_h + n_v} weights for {width}x{height}, got {w.size}")
        return cls(
            width=width,
            height=height,
            horizontal_weights=w[:n_h].reshape(height, width - 1),
            vertical_weights=w[n_h:].reshape(height - 1, width),
        )


def gaussian_similarity(a: float, b: float, sigma: float = DEFAULT_SIGMA) -> float:
    """Contrast term 1 - exp(-(a - b)^2 / (2 sigma^2)).

    Returns a value in [0, 1): 0 for identical intensities, approaching 1
    as the contrast grows.  sigma controls how fast the ramp saturates.
    Past roughly 8.5 sigma of contrast the correctly rounded float64
    result reaches 1.0 exactly.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise InvalidParameterError("intensities must be finite")
    if not (math.isfinite(sigma) and sigma > 0):
        raise InvalidParameterError(f"sigma must be positive and finite, got {sigma}")
    d = a - b
    return 1.0 - math.exp(-(d * d) / (2.0 * sigma * sigma))


def _gaussian_similarity_array(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    d = a - b
    return 1.0 - np.exp(-(d * d) / (2.0 * sigma * sigma))


def normalize_weights(raw, target_range: tuple[float, float] = DEFAULT_RANGE) -> np.ndarray:
    """Map raw similarities onto the negated target range.

    Applies w = -((b - a) * (raw - min) / (max - min) + a), so with the
    default range [-1, 1] the least dissimilar pair lands at +1 and the
    most dissimilar at -1.  A degenerate input (max == min, e.g. a single
    edge or a constant image) carries no contrast signal and maps every
    entry to the value reserved for "most similar": -a, i.e. +1 by default.
    """
    a, b = target_range
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise InvalidParameterError(f"target_range must satisfy a < b, got {target_range}")
    r = np.asarray(raw, dtype=np.float64)
    if r.size == 0:
        raise InvalidParameterError("cannot normalize an empty weight list")
    if not np.all(np.isfinite(r)):
        raise InvalidParameterError("raw weights must be finite")
    lo = float(r.min())
    hi = float(r.max())
    if hi == lo:
        return np.full(r.shape, -a, dtype=np.float64)
    return -((b - a) * (r - lo) / (hi - lo) + a)


def image_to_grid(img, cfg: WeightConfig = WeightConfig()) -> GridGraph:
    """Build the signed lattice graph for a single-band image.

    Each 4-neighbor pair gets the Gaussian contrast of its intensities;
    when cfg.normalize is set the whole edge set is then normalized jointly
    (not per row or per direction).  Intensities are used as-is, with no
    implicit 0..255 rescaling here.
    """
    plane = as_single_band(img)
    h, w = plane.shape
    hraw = _gaussian_similarity_array(plane[:, :-1], plane[:, 1:], cfg.sigma)
    vraw = _gaussian_similarity_array(plane[:-1, :], plane[1:, :], cfg.sigma)
    if not (np.all(np.isfinite(hraw)) and np.all(np.isfinite(vraw))):
        raise InvalidParameterError("image intensities must be finite")
    if cfg.normalize and (hraw.size + vraw.size) > 0:
        flat = normalize_weights(
            np.concatenate([hraw.ravel(), vraw.ravel()]), cfg.target_range
        )
        return GridGraph.from_edge_weight_array(w, h, flat)
    return GridGraph(width=w, height=h, horizontal_weights=hraw, vertical_weights=vraw)


def synthetic_grid(size: int, seed: int) -> GridGraph:
    """Random size x size grid with i.i.d. edge weights uniform on [-1, 1).

    The generator is numpy's PCG64 seeded with ``seed``; one block of
    2 * size * (size - 1) draws is taken in canonical edge order, so the
    graph is reproducible bit for bit across runs and platforms.
    """
    if size < 1:
        raise InvalidParameterError(f"size must be >= 1, got {size}")
    if seed < 0:
        raise InvalidParameterError(f"seed must be non-negative, got {seed}")
    rng = np.random.default_rng(seed)
    n_h = size * (size - 1)
    n_v = (size - 1) * size
    draws = rng.uniform(-1.0, 1.0, n_h + n_v)
    return GridGraph.from_edge_weight_array(size, size, draws)


def save_edge_list(graph: GridGraph, path, seed: int) -> None:
    """Write the text edge list: ``grid <w> <h> <seed>`` then ``u v weight`` lines.

    Lines follow canonical edge order and weights carry 17 significant
    digits, enough to round-trip float64 exactly.
    """
    lines = [f"grid {graph.width} {graph.height} {seed}\n"]
    for u, v, w in graph.edges():
        lines.append(f"{u} {v} {format(w, '.17g')}\n")
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.writelines(lines)


def load_edge_list(path) -> tuple[GridGraph, int]:
    """Read a file written by save_edge_list; returns (graph, seed).

    The edge lines must match the canonical order exactly; anything else
    is treated as a corrupt file.
    """
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "grid":
            raise FormatError(f"{path}: expected header 'grid <w> <h> <seed>'")
        try:
            width, height, seed = int(header[1]), int(header[2]), int(header[3])
        except ValueError as exc:
            raise FormatError(f"{path}: malformed header fields") from exc
        if width < 1 or height < 1:
            raise FormatError(f"{path}: non-positive grid dimensions")
        n_edges = 2 * width * height - width - height
        weights = np.zeros(n_edges, dtype=np.float64)
        nodes = np.arange(width * height).reshape(height, width)
        exp_u = np.concatenate([nodes[:, :-1].ravel(), nodes[:-1, :].ravel()])
        exp_v = np.concatenate([nodes[:, 1:].ravel(), nodes[1:, :].ravel()])
        for k in range(n_edges):
            eu, ev = int(exp_u[k]), int(exp_v[k])
            parts = fh.readline().split()
            if len(parts) != 3:
                raise FormatError(f"{path}: edge line {k + 1} malformed or missing")
            try:
                u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise FormatError(f"{path}: edge line {k + 1} malformed") from exc
            if (u, v) != (eu, ev):
                raise FormatError(
                    f"{path}: edge line {k + 1} is ({u}, {v}), expected ({eu}, {ev})"
                )
            if not math.isfinite(w):
                raise FormatError(f"{path}: non-finite weight on line {k + 1}")
            weights[k] = w
        if fh.readline().strip():
            raise FormatError(f"{path}: trailing content after {n_edges} edges")
    return GridGraph.from_edge_weight_array(width, height, weights), seed
