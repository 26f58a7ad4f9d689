"""Shared domain types, image metrics and sparsity analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NumericalError(ArithmeticError):
    """A numerical stage failed (singular system, divergence, bad factorization)."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class Image:
    """Real grayscale image f(t, y); rows index t, columns index y.

    ``pixels`` has shape ``(height, width)``.  ``bit_depth`` only fixes the
    PSNR peak value.
    """

    pixels: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 2:
            raise ValueError(f"image must be 2-D, got shape {px.shape}")
        if px.shape[0] < 2 or px.shape[1] < 2:
            raise ValueError(f"image must be at least 2x2, got {px.shape}")
        if not np.all(np.isfinite(px)):
            raise ValueError("image contains non-finite values")
        if self.bit_depth not in (8, 16):
            raise ValueError(f"bit_depth must be 8 or 16, got {self.bit_depth}")
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def peak(self) -> float:
        return float(2 ** self.bit_depth - 1)


@dataclass(frozen=True, eq=False)
class ComplexGrid:
    """Complex values on an image-shaped grid (spectra, column transforms)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        if v.ndim != 2:
            raise ValueError(f"grid must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid contains non-finite values")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class CoefficientPyramid:
    """Wavelet coefficients of an ``n_t x n_y`` image.

    ``values[:, xi]`` is the coefficient column for Fourier index ``xi``
    (PHSD) packed as ``[coarse | details coarsest..finest]``.  For the
    separable Daubechies baseline the array holds the Mallat square packing.
    """

    values: np.ndarray
    levels: int
    basis_tag: str

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        if v.ndim != 2:
            raise ValueError(f"pyramid values must be 2-D, got shape {v.shape}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n_t(self) -> int:
        return self.values.shape[0]

    @property
    def n_y(self) -> int:
        return self.values.shape[1]

    @property
    def size(self) -> int:
        return self.values.size

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    def with_values(self, values: np.ndarray) -> CoefficientPyramid:
        return CoefficientPyramid(values, self.levels, self.basis_tag)


@dataclass(frozen=True)
class SparsityReport:
    total_count: int
    significant_count: int
    threshold: float
    energy_fraction: float


def _check_same_shape(a: Image, b: Image) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def mse(a: Image, b: Image) -> float:
    _check_same_shape(a, b)
    return float(np.mean((a.pixels - b.pixels) ** 2))


def psnr(reference: Image, test: Image) -> float:
    """PSNR in dB with peak ``2**bit_depth - 1`` of the reference.

    Returns ``math.inf`` when the images are identical.
    """
    err = mse(reference, test)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(reference.peak ** 2 / err)


def sparsity_report(pyr: CoefficientPyramid, threshold: float) -> SparsityReport:
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    mod = np.abs(pyr.values).ravel()
    k = int(np.count_nonzero(mod > threshold))
    total = float(np.sum(mod ** 2))
    if total == 0.0:
        fraction = 1.0
    else:
        top = np.sort(mod)[::-1][:k]
        fraction = min(float(np.sum(top ** 2)) / total, 1.0)
    return SparsityReport(mod.size, k, float(threshold), fraction)


def _top_k_indices(mod: np.ndarray, k: int) -> np.ndarray:
    # stable sort on -modulus keeps lower linear index first among ties
    return np.argsort(-mod, kind="stable")[:k]


def keep_top_k(pyr: CoefficientPyramid, k: int) -> CoefficientPyramid:
    """Zero all but the ``k`` largest-modulus coefficients."""
    n = pyr.size
    if k < 0 or k > n:
        raise ValueError(f"k must lie in [0, {n}], got {k}")
    flat = pyr.values.ravel()
    out = np.zeros_like(flat)
    idx = _top_k_indices(np.abs(flat), k)
    out[idx] = flat[idx]
    return pyr.with_values(out.reshape(pyr.values.shape))
