"""Measurement operators: radial-line Fourier masks, pixel masks and A = Theta Phi."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import transform as tr
from .core import CoefficientPyramid, ComplexGrid, Image, is_power_of_two

FOURIER = "fourier"
PIXEL = "pixel"


@dataclass(frozen=True, eq=False)
class SamplingMask:
    """Ordered, distinct grid positions ``(u, v)`` = (row, column).

    For Fourier masks the positions are DFT indices in standard
    (unshifted) order.
    """

    dims: tuple[int, int]
    domain: str
    indices: np.ndarray
    hermitian_completed: bool = False

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64).reshape(-1, 2)
        if self.domain not in (FOURIER, PIXEL):
            raise ValueError(f"unknown mask domain {self.domain!r}")
        n_t, n_y = self.dims
        if idx.size and (idx.min() < 0 or np.any(idx[:, 0] >= n_t) or np.any(idx[:, 1] >= n_y)):
            raise ValueError("mask index outside grid")
        flat = idx[:, 0] * n_y + idx[:, 1]
        if np.unique(flat).size != flat.size:
            raise ValueError("mask indices must be distinct")
        idx.setflags(write=False)
        flat.setflags(write=False)
        object.__setattr__(self, "dims", (int(n_t), int(n_y)))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "_flat", flat)

    @property
    def m(self) -> int:
        return self.indices.shape[0]

    @property
    def flat_indices(self) -> np.ndarray:
        return self._flat

    def to_text(self) -> str:
        n_t, n_y = self.dims
        rows = [f"mask {n_t} {n_y} {self.domain} {self.m}"]
        rows.extend(f"{u} {v}" for u, v in self.indices)
        return "\n".join(rows) + "\n"

    @property
    def mask_id(self) -> str:
        return hashlib.sha256(self.to_text().encode("ascii")).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class MeasurementVector:
    values: np.ndarray
    mask_id: str

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128).ravel()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def radial_mask(n: int, lines: int, points_per_line: int, hermitian: bool = True,
                seed: int = 0) -> SamplingMask:
    """Points on ``lines`` diameters through DC at angles ``pi * l / lines``.

    Along each diameter the offsets are ``(i - P//2) * n / P`` for
    ``i < P``, rounded half-up to the grid and wrapped to DFT order.
    ``seed`` is accepted for interface stability; the mask is deterministic.
    """
    del seed
    if not is_power_of_two(n) or n < 2:
        raise ValueError(f"grid size must be a power of two >= 2, got {n}")
    if lines < 1:
        raise ValueError(f"lines must be >= 1, got {lines}")
    if not 1 <= points_per_line <= n:
        raise ValueError(f"points_per_line must be in [1, {n}], got {points_per_line}")

    radii = (np.arange(points_per_line) - points_per_line // 2) * (n / points_per_line)
    pts = []
    for ell in range(lines):
        theta = np.pi * ell / lines
        u = np.floor(radii * np.sin(theta) + 0.5).astype(np.int64) % n
        v = np.floor(radii * np.cos(theta) + 0.5).astype(np.int64) % n
        pts.append(np.stack([u, v], axis=1))
    pts = np.concatenate(pts)
    flat = pts[:, 0] * n + pts[:, 1]
    _, first = np.unique(flat, return_index=True)
    pts = pts[np.sort(first)]

    if hermitian:
        seen = set((pts[:, 0] * n + pts[:, 1]).tolist())
        extra = []
        for u, v in pts:
            cu, cv = (-u) % n, (-v) % n
            key = int(cu * n + cv)
            if key not in seen:
                seen.add(key)
                extra.append((cu, cv))
        if extra:
            pts = np.concatenate([pts, np.array(extra, dtype=np.int64)])
    return SamplingMask((n, n), FOURIER, pts, hermitian)


def pixel_mask(dims: tuple[int, int], m: int, seed: int = 0) -> SamplingMask:
    """``m`` distinct pixel positions drawn uniformly with a seeded generator."""
    n_t, n_y = dims
    if not 1 <= m <= n_t * n_y:
        raise ValueError(f"m must be in [1, {n_t * n_y}], got {m}")
    rng = np.random.default_rng(seed)
    flat = rng.choice(n_t * n_y, size=m, replace=False)
    return SamplingMask((n_t, n_y), PIXEL, np.stack([flat // n_y, flat % n_y], axis=1))


def full_mask(dims: tuple[int, int], domain: str = FOURIER) -> SamplingMask:
    n_t, n_y = dims
    uu, vv = np.meshgrid(np.arange(n_t), np.arange(n_y), indexing="ij")
    return SamplingMask((n_t, n_y), domain, np.stack([uu.ravel(), vv.ravel()], axis=1))


# -- Theta and Theta^H on arrays ------------------------------------------------

def sample(mask: SamplingMask, x: np.ndarray) -> np.ndarray:
    if x.shape != mask.dims:
        raise ValueError(f"dimension mismatch: {x.shape} vs {mask.dims}")
    if mask.domain == FOURIER:
        x = np.fft.fft2(x, norm="ortho")
    return x.ravel()[mask.flat_indices]


def sample_adjoint(mask: SamplingMask, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (mask.m,):
        raise ValueError(f"expected {mask.m} measurements, got shape {y.shape}")
    grid = np.zeros(mask.dims[0] * mask.dims[1], dtype=np.complex128)
    grid[mask.flat_indices] = y
    grid = grid.reshape(mask.dims)
    if mask.domain == FOURIER:
        grid = np.fft.ifft2(grid, norm="ortho")
    return grid


def measure(img: Image, mask: SamplingMask) -> MeasurementVector:
    """Y_m = <img, theta_m>: masked unitary 2-D DFT, or pixel restriction."""
    return MeasurementVector(sample(mask, img.pixels), mask.mask_id)


def measure_adjoint(meas: MeasurementVector, mask: SamplingMask) -> ComplexGrid:
    values = meas.values if isinstance(meas, MeasurementVector) else np.asarray(meas)
    return ComplexGrid(sample_adjoint(mask, values))


@dataclass(frozen=True, eq=False)
class ComposedOperator:
    """A = Theta Phi, applied matrix-free.

    ``matvec``/``rmatvec`` act on raw arrays (coefficients shaped like the
    image, measurements as a flat vector); the module-level ``apply`` and
    ``apply_adjoint`` wrap them in domain types.
    """

    mask: SamplingMask
    transform: tr.TransformHandle

    def __post_init__(self):
        if self.mask.dims != self.transform.dims:
            raise ValueError(
                f"mask dims {self.mask.dims} do not match transform dims {self.transform.dims}"
            )

    @property
    def n(self) -> int:
        return self.transform.size

    @property
    def m(self) -> int:
        return self.mask.m

    @property
    def input_shape(self) -> tuple[int, int]:
        return self.transform.dims

    def matvec(self, beta: np.ndarray) -> np.ndarray:
        return sample(self.mask, tr.synthesize(self.transform, beta))

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return tr.analyze(self.transform, sample_adjoint(self.mask, y))

    def wrap(self, beta: np.ndarray) -> CoefficientPyramid:
        return CoefficientPyramid(beta, self.transform.levels, self.transform.basis_tag)


def apply(op: ComposedOperator, beta: CoefficientPyramid) -> MeasurementVector:
    if beta.basis_tag != op.transform.basis_tag:
        raise ValueError(f"pyramid basis {beta.basis_tag} != operator basis {op.transform.basis_tag}")
    return MeasurementVector(op.matvec(beta.values), op.mask.mask_id)


def apply_adjoint(op: ComposedOperator, meas: MeasurementVector) -> CoefficientPyramid:
    return op.wrap(op.rmatvec(meas.values))
