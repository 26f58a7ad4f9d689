"""Sparsifying transforms: the hybrid PHSD transform and a separable Daubechies baseline.

PHSD analysis takes the unitary DFT of every row (the ``y`` axis), then
runs a decimated, periodic wavelet cascade down every frequency column
``xi`` with filters that depend on ``|xi|`` and on the level.  Both
stages are unitary, so the adjoint of synthesis is analysis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import CoefficientPyramid, ComplexGrid, Image, is_power_of_two
from .filters import FilterBank, FilterPair, build_filter_bank, daubechies_pair

PHSD = "phsd"
DAUB2D = "daub2d"
RESIDUE_WARN = 1e-6


@dataclass(frozen=True, eq=False)
class TransformHandle:
    """An orthonormal transform Phi bound to fixed image dimensions."""

    kind: str
    levels: int
    dims: tuple[int, int]
    order: int
    bank: FilterBank | None = None
    pair: FilterPair | None = None
    _low: tuple = field(default=(), repr=False)
    _high: tuple = field(default=(), repr=False)

    @property
    def basis_tag(self) -> str:
        return f"{self.kind}-p{self.order}"

    @property
    def size(self) -> int:
        return self.dims[0] * self.dims[1]


def phsd_handle(n_t: int, n_y: int, order: int = 2, levels: int = 4,
                y_scale: float = 1.0) -> TransformHandle:
    _check_dims(n_t, n_y)
    if levels < 0 or 2 ** levels > n_t:
        raise ValueError(f"levels={levels} exceeds log2(n_t={n_t})")
    bank = build_filter_bank(n_y, n_t, order, levels, y_scale)
    low, high = [], []
    for step in range(1, levels + 1):
        pairs = [bank.pair(xi, step) for xi in range(n_y)]
        low.append(np.stack([p.lowpass for p in pairs], axis=1))
        high.append(np.stack([p.highpass for p in pairs], axis=1))
    return TransformHandle(PHSD, levels, (n_t, n_y), order, bank=bank,
                           _low=tuple(low), _high=tuple(high))


def daub2d_handle(n_t: int, n_y: int, order: int = 2, levels: int = 4) -> TransformHandle:
    _check_dims(n_t, n_y)
    if levels < 0 or 2 ** levels > min(n_t, n_y):
        raise ValueError(f"levels={levels} exceeds log2(min({n_t}, {n_y}))")
    pair = daubechies_pair(order)
    low = pair.lowpass[:, None]
    high = pair.highpass[:, None]
    return TransformHandle(DAUB2D, levels, (n_t, n_y), order, pair=pair,
                           _low=(low,) * levels, _high=(high,) * levels)


def make_handle(kind: str, n_t: int, n_y: int, order: int = 2, levels: int = 4,
                y_scale: float = 1.0) -> TransformHandle:
    if kind == PHSD:
        return phsd_handle(n_t, n_y, order, levels, y_scale)
    if kind == DAUB2D:
        return daub2d_handle(n_t, n_y, order, levels)
    raise ValueError(f"unknown transform kind {kind!r}")


def _check_dims(n_t: int, n_y: int) -> None:
    if not (is_power_of_two(n_t) and is_power_of_two(n_y)) or min(n_t, n_y) < 2:
        raise ValueError(f"image dimensions must be powers of two >= 2, got {n_t}x{n_y}")


# -- one-level periodic two-channel filter bank along axis 0 ------------------

def _analysis_step(x: np.ndarray, low: np.ndarray, high: np.ndarray):
    n = x.shape[0]
    k2 = 2 * np.arange(n // 2)
    shape = (n // 2,) + x.shape[1:]
    dtype = np.result_type(x, low)
    coarse = np.zeros(shape, dtype=dtype)
    detail = np.zeros(shape, dtype=dtype)
    for m in range(low.shape[0]):
        xm = x[(k2 + m) % n]
        coarse += low[m] * xm
        detail += high[m] * xm
    return coarse, detail


def _synthesis_step(coarse: np.ndarray, detail: np.ndarray, low: np.ndarray,
                    high: np.ndarray) -> np.ndarray:
    half = coarse.shape[0]
    n = 2 * half
    k2 = 2 * np.arange(half)
    x = np.zeros((n,) + coarse.shape[1:], dtype=np.result_type(coarse, detail, low))
    for m in range(low.shape[0]):
        # for fixed m the targets (2k + m) mod n are distinct
        x[(k2 + m) % n] += low[m] * coarse + high[m] * detail
    return x


def _cascade_forward(x: np.ndarray, lows, highs, levels: int) -> np.ndarray:
    out = np.array(x, dtype=np.result_type(x, np.float64), copy=True)
    cur = out
    n = x.shape[0]
    for step in range(levels):
        coarse, detail = _analysis_step(cur, lows[step], highs[step])
        out[n // 2:n] = detail
        cur = coarse
        n //= 2
    out[:n] = cur
    return out


def _cascade_inverse(c: np.ndarray, lows, highs, levels: int) -> np.ndarray:
    n = c.shape[0] >> levels
    cur = np.array(c[:n], copy=True)
    for step in reversed(range(levels)):
        cur = _synthesis_step(cur, c[n:2 * n], lows[step], highs[step])
        n *= 2
    return cur


def _pair_arrays(pairs, levels):
    if len(pairs) < levels:
        raise ValueError(f"need {levels} filter pairs, got {len(pairs)}")
    lows = [p.lowpass[:, None] for p in pairs]
    highs = [p.highpass[:, None] for p in pairs]
    return lows, highs


def _check_cascade(signal: np.ndarray, levels: int) -> None:
    n = signal.shape[0]
    if not is_power_of_two(n) or levels < 0 or 2 ** levels > n:
        raise ValueError(f"length {n} does not support {levels} levels")


def cascade_forward_1d(signal, pairs, levels: int) -> np.ndarray:
    """Decimated periodic analysis; output ``[coarse | details coarsest..finest]``.

    ``pairs[s]`` is used at step ``s + 1`` (step 1 acts on the full length).
    """
    x = np.asarray(signal)
    _check_cascade(x, levels)
    lows, highs = _pair_arrays(pairs, levels)
    return _cascade_forward(x[:, None], lows, highs, levels)[:, 0]


def cascade_inverse_1d(coeffs, pairs, levels: int) -> np.ndarray:
    c = np.asarray(coeffs)
    _check_cascade(c, levels)
    lows, highs = _pair_arrays(pairs, levels)
    return _cascade_inverse(c[:, None], lows, highs, levels)[:, 0]


# -- Fourier stage -------------------------------------------------------------

def fft_columns(img: Image) -> ComplexGrid:
    """Unitary DFT across ``y`` of every row; column ``xi`` holds f_xi(t)."""
    if not is_power_of_two(img.width):
        raise ValueError(f"n_y must be a power of two, got {img.width}")
    return ComplexGrid(np.fft.fft(img.pixels, axis=1, norm="ortho"))


def ifft_columns(grid: ComplexGrid) -> np.ndarray:
    return np.fft.ifft(grid.values, axis=1, norm="ortho")


# -- array-level operators (complex in, complex out) ---------------------------

def _daub2d_analysis(x: np.ndarray, handle: TransformHandle) -> np.ndarray:
    out = np.array(x, dtype=np.result_type(x, np.float64), copy=True)
    h, w = handle.dims
    low, high = handle._low[0], handle._high[0]
    for _ in range(handle.levels):
        block = out[:h, :w]
        c, d = _analysis_step(block, low, high)
        block = np.concatenate([c, d], axis=0)
        c, d = _analysis_step(block.T, low, high)
        out[:h, :w] = np.concatenate([c, d], axis=0).T
        h //= 2
        w //= 2
    return out


def _daub2d_synthesis(c: np.ndarray, handle: TransformHandle) -> np.ndarray:
    out = np.array(c, dtype=np.result_type(c, np.float64), copy=True)
    h, w = handle.dims[0] >> handle.levels, handle.dims[1] >> handle.levels
    low, high = handle._low[0], handle._high[0]
    for _ in range(handle.levels):
        h, w = 2 * h, 2 * w
        block = out[:h, :w].T
        block = _synthesis_step(block[: w // 2], block[w // 2:], low, high).T
        out[:h, :w] = _synthesis_step(block[: h // 2], block[h // 2:], low, high)
    return out


def analyze(handle: TransformHandle, x: np.ndarray) -> np.ndarray:
    """Phi^H applied to a (possibly complex) image array."""
    x = np.asarray(x)
    if x.shape != handle.dims:
        raise ValueError(f"dimension mismatch: {x.shape} vs {handle.dims}")
    if handle.kind == PHSD:
        spec = np.fft.fft(x, axis=1, norm="ortho")
        return _cascade_forward(spec, handle._low, handle._high, handle.levels)
    return _daub2d_analysis(x, handle)


def synthesize(handle: TransformHandle, c: np.ndarray) -> np.ndarray:
    """Phi applied to a coefficient array; result is complex in general."""
    c = np.asarray(c)
    if c.shape != handle.dims:
        raise ValueError(f"dimension mismatch: {c.shape} vs {handle.dims}")
    if handle.kind == PHSD:
        cols = _cascade_inverse(c, handle._low, handle._high, handle.levels)
        return np.fft.ifft(cols, axis=1, norm="ortho")
    return _daub2d_synthesis(c, handle)


# -- Image / pyramid level -----------------------------------------------------

def _require(handle: TransformHandle, kind: str) -> None:
    if handle.kind != kind:
        raise ValueError(f"expected a {kind} handle, got {handle.kind}")


def _check_pyramid(pyr: CoefficientPyramid, handle: TransformHandle) -> None:
    if pyr.basis_tag != handle.basis_tag or pyr.levels != handle.levels:
        raise ValueError(
            f"pyramid ({pyr.basis_tag}, L={pyr.levels}) does not match "
            f"transform ({handle.basis_tag}, L={handle.levels})"
        )


def imaginary_residue(x: np.ndarray) -> float:
    """max|Im x| relative to max|x| (0 for an all-zero array)."""
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(np.imag(x)))) / scale


def _to_image(x: np.ndarray, bit_depth: int, return_residue: bool):
    residue = imaginary_residue(x)
    if residue > RESIDUE_WARN:
        warnings.warn(
            f"reconstruction has imaginary residue {residue:.3e}; "
            "coefficients are not conjugate-symmetric",
            RuntimeWarning,
            stacklevel=3,
        )
    img = Image(np.real(x), bit_depth)
    return (img, residue) if return_residue else img


def phsd_forward(img: Image, handle: TransformHandle) -> CoefficientPyramid:
    _require(handle, PHSD)
    return CoefficientPyramid(analyze(handle, img.pixels), handle.levels, handle.basis_tag)


phsd_adjoint = phsd_forward


def phsd_inverse(pyr: CoefficientPyramid, handle: TransformHandle, bit_depth: int = 8,
                 return_residue: bool = False):
    """Synthesize an image; the imaginary residue is measured then dropped."""
    _require(handle, PHSD)
    _check_pyramid(pyr, handle)
    return _to_image(synthesize(handle, pyr.values), bit_depth, return_residue)


def daub2d_forward(img: Image, handle: TransformHandle) -> CoefficientPyramid:
    _require(handle, DAUB2D)
    return CoefficientPyramid(analyze(handle, img.pixels), handle.levels, handle.basis_tag)


daub2d_adjoint = daub2d_forward


def daub2d_inverse(pyr: CoefficientPyramid, handle: TransformHandle, bit_depth: int = 8,
                   return_residue: bool = False):
    _require(handle, DAUB2D)
    _check_pyramid(pyr, handle)
    return _to_image(synthesize(handle, pyr.values), bit_depth, return_residue)


def forward(img: Image, handle: TransformHandle) -> CoefficientPyramid:
    if handle.kind == PHSD:
        return phsd_forward(img, handle)
    return daub2d_forward(img, handle)


def inverse(pyr: CoefficientPyramid, handle: TransformHandle, bit_depth: int = 8,
            return_residue: bool = False):
    if handle.kind == PHSD:
        return phsd_inverse(pyr, handle, bit_depth, return_residue)
    return daub2d_inverse(pyr, handle, bit_depth, return_residue)


def conjugate_asymmetry(pyr: CoefficientPyramid) -> float:
    """Relative max deviation from ``col[xi] == conj(col[-xi mod n_y])``."""
    v = pyr.values
    mirror = np.conj(v[:, (-np.arange(v.shape[1])) % v.shape[1]])
    scale = float(np.max(np.abs(v)))
    return 0.0 if scale == 0.0 else float(np.max(np.abs(v - mirror))) / scale
