"""Patchwise wrapper: fit a base denoiser on image patches, denoise by
averaging overlapping per-patch predictions.

Inputs are flattened square images (dimension s*s). A sigma-dependent patch
size can be supplied as a step function so the wrapper uses larger patches
in the high-noise regime; one base denoiser is fitted per distinct size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..datasets import Dataset
from ..errors import ValidationError
from .base import Denoiser


def image_side(dim: int) -> int:
    side = math.isqrt(dim)
    if side * side != dim:
        raise ValidationError(f"dimension {dim} is not a square image size")
    return side


@dataclass(frozen=True)
class PatchGrid:
    """Aligned patch positions for one image side / patch size / stride."""

    side: int
    patch: int
    stride: int

    def __post_init__(self):
        if not 1 <= self.patch <= self.side:
            raise ValidationError(f"patch size must be in [1, {self.side}]")
        if self.stride < 1:
            raise ValidationError("stride must be >= 1")

    @property
    def positions(self) -> list[int]:
        pos = list(range(0, self.side - self.patch + 1, self.stride))
        if pos[-1] != self.side - self.patch:
            pos.append(self.side - self.patch)
        return pos

    def extract(self, images: np.ndarray) -> np.ndarray:
        """(n, side*side) -> (n * n_patches, patch*patch), row-major patch order."""
        n = images.shape[0]
        imgs = images.reshape(n, self.side, self.side)
        blocks = []
        for top in self.positions:
            for left in self.positions:
                blocks.append(
                    imgs[:, top:top + self.patch, left:left + self.patch].reshape(n, -1)
                )
        return np.concatenate(blocks, axis=0)

    def assemble(self, n: int, patch_outputs: np.ndarray) -> np.ndarray:
        """Average per-patch predictions back into (n, side*side) images."""
        acc = np.zeros((n, self.side, self.side))
        counts = np.zeros((self.side, self.side))
        k = 0
        for top in self.positions:
            for left in self.positions:
                block = patch_outputs[k * n:(k + 1) * n].reshape(n, self.patch, self.patch)
                acc[:, top:top + self.patch, left:left + self.patch] += block
                counts[top:top + self.patch, left:left + self.patch] += 1.0
                k += 1
        return (acc / counts).reshape(n, -1)


@dataclass(frozen=True)
class PatchSizeMap:
    """Step function sigma -> patch size; larger patches at higher sigma.

    breakpoints is a list of (sigma_min, size) sorted by sigma_min descending;
    the first entry whose sigma_min the query reaches wins, otherwise
    ``default_size``.
    """

    default_size: int
    breakpoints: tuple = ()

    def __post_init__(self):
        bps = tuple((float(s), int(p)) for s, p in self.breakpoints)
        if any(bps[i][0] <= bps[i + 1][0] for i in range(len(bps) - 1)):
            raise ValidationError("breakpoints must have strictly decreasing sigma_min")
        object.__setattr__(self, "breakpoints", bps)

    def sizes(self) -> list[int]:
        return sorted({self.default_size, *(p for _, p in self.breakpoints)})

    def size_for(self, sigma: float) -> int:
        for sigma_min, size in self.breakpoints:
            if sigma >= sigma_min:
                return size
        return self.default_size


def default_patch_size_map(patch_size: int, side: int, data_scale: float) -> PatchSizeMap:
    """Two breakpoints, at 0.5 and 0.15 of the data scale, doubling then
    halving toward the base size as noise decreases."""
    big = min(side, patch_size * 2)
    mid = min(side, max(patch_size, (patch_size * 3) // 2))
    return PatchSizeMap(
        default_size=patch_size,
        breakpoints=((0.5 * data_scale, big), (0.15 * data_scale, mid)),
    )


@dataclass(frozen=True)
class PatchwiseDenoiser(Denoiser):
    """Applies per-size base denoisers to all patches and averages overlaps."""

    side: int
    stride: int
    size_map: PatchSizeMap
    bases: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.side * self.side

    @property
    def descriptor(self) -> dict:
        return {
            "family": "patchwise",
            "dim": self.dim,
            "side": self.side,
            "stride": self.stride,
            "sizes": {str(k): v.descriptor for k, v in sorted(self.bases.items())},
            "size_breakpoints": list(self.size_map.breakpoints),
            "default_size": self.size_map.default_size,
        }

    def patch_size_for(self, sigma: float) -> int:
        return self.size_map.size_for(sigma)

    def denoise(self, y: np.ndarray, sigma: float) -> np.ndarray:
        batch, single = self._check_input(y, sigma)
        size = self.patch_size_for(sigma)
        base = self.bases[size]
        grid = PatchGrid(self.side, size, min(self.stride, size))
        patches = grid.extract(batch)
        cleaned = base.denoise(patches, sigma)
        out = grid.assemble(batch.shape[0], cleaned)
        return out[0] if single else out


def fit_patchwise(
    data: Dataset,
    base_factory: Callable[[Dataset], Denoiser],
    patch_size: int,
    stride: int | None = None,
    size_map: PatchSizeMap | None = None,
) -> PatchwiseDenoiser:
    """Fit base denoisers on all extracted patches of the training images.

    ``base_factory`` maps a patch dataset to a fitted denoiser (for example
    ``fit_linear``). With a ``size_map``, one base is fitted per distinct
    patch size; otherwise a single fixed size is used.
    """
    side = image_side(data.dim)
    if patch_size > side:
        raise ValidationError(f"patch_size {patch_size} exceeds image side {side}")
    stride = patch_size if stride is None else stride
    the_map = size_map if size_map is not None else PatchSizeMap(default_size=patch_size)
    bases = {}
    for size in the_map.sizes():
        grid = PatchGrid(side, size, min(stride, size))
        patches = grid.extract(data.points)
        bases[size] = base_factory(Dataset(patches, name=f"{data.name}-patches{size}"))
    return PatchwiseDenoiser(side=side, stride=stride, size_map=the_map, bases=bases)
