"""Non-stationary exponential subdivision symbols and their orthonormal factors.

The interpolatory symbol of order ``p`` reproduces the space spanned by
``t**j * exp(+-lam * t)``, ``j < p``: one subdivision step maps samples
on the integer grid to samples on the half-integer grid.  A
Daubechies-type spectral factorization ``a(z) = h(z) h(1/z)`` of that
symbol yields an orthonormal low-pass filter; ``lam = 0`` recovers the
classical Daubechies filters (Haar for ``p = 1``).

Filter taps are indexed so that ``h(z) = sum_k h[k] z**(-k)``; with this
convention the minimum-phase choice gives the familiar extremal-phase
Daubechies coefficients ``db2 = [0.4830, 0.8365, 0.2241, -0.1294]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .core import NumericalError, is_power_of_two

LAMBDA_MAX = 2.0
COND_LIMIT = 1e12
NONNEG_TOL = 1e-12
NONNEG_GRID = 4096
INSIDE_TOL = 1e-9
CLUSTER_TOL = 1e-7
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class FilterSpec:
    order: int
    lambda_eff: float = 0.0

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if not (self.lambda_eff >= 0):
            raise ValueError(f"lambda_eff must be >= 0, got {self.lambda_eff}")
        if self.lambda_eff > LAMBDA_MAX:
            raise ValueError(
                f"lambda_eff={self.lambda_eff} exceeds lambda_max={LAMBDA_MAX}"
            )


@dataclass(frozen=True, eq=False)
class InterpolatorySymbol:
    """Symmetric Laurent symbol ``a(z) = sum_k taps[k + 2p - 1] z**k``.

    ``known_roots`` lists zeros of ``z**(2p-1) a(z)`` known in closed form
    (the exponential-reproduction zeros); factorization deflates them
    before computing the remaining roots numerically.
    """

    taps: np.ndarray
    spec: FilterSpec | None = None
    known_roots: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size % 2 == 0:
            raise ValueError("symbol needs an odd number of taps centred on k=0")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        roots = np.array(self.known_roots, dtype=np.complex128)
        roots.setflags(write=False)
        object.__setattr__(self, "known_roots", roots)

    @property
    def half_width(self) -> int:
        return self.taps.size // 2

    @property
    def offsets(self) -> np.ndarray:
        m = self.half_width
        return np.arange(-m, m + 1)

    def tap(self, k: int) -> float:
        m = self.half_width
        return float(self.taps[k + m]) if -m <= k <= m else 0.0

    def odd_weights(self) -> np.ndarray:
        return self.taps[self.offsets % 2 != 0]

    def evaluate(self, omega) -> np.ndarray:
        """Real values of the symmetric symbol on the unit circle."""
        omega = np.asarray(omega, dtype=np.float64)
        return np.cos(np.multiply.outer(omega, self.offsets)) @ self.taps


@dataclass(frozen=True, eq=False)
class FilterPair:
    lowpass: np.ndarray
    highpass: np.ndarray
    level_spec: FilterSpec | None = None
    residual: float = 0.0

    def __post_init__(self):
        for name in ("lowpass", "highpass"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.lowpass.shape != self.highpass.shape:
            raise ValueError("lowpass and highpass must have equal length")

    @property
    def length(self) -> int:
        return self.lowpass.size


def _exponent_nodes(order: int, lam: float) -> np.ndarray:
    return np.array([lam if i % 2 == 0 else -lam for i in range(2 * order)])


def _dd_basis(order: int, lam: float, x: np.ndarray) -> np.ndarray:
    """Divided differences of ``exp(mu t)`` over mu = lam, -lam, lam, ...

    Row ``m`` spans the same space as ``t**j exp(+-lam t)`` and tends to
    ``t**m / m!`` as ``lam -> 0`` (Opitz: divided differences are the
    first row of ``exp(t J)`` with J bidiagonal).
    """
    n = 2 * order
    jordan = np.diag(_exponent_nodes(order, lam)) + np.eye(n, k=1)
    return np.array([expm(xi * jordan)[0] for xi in x]).T


def _polynomial_midpoint_weights(order: int) -> np.ndarray:
    nodes = np.arange(-(2 * order - 1), 2 * order, 2).astype(float)
    w = np.empty_like(nodes)
    for i, xi in enumerate(nodes):
        others = np.delete(nodes, i)
        w[i] = np.prod(others) / np.prod(others - xi)
    return w


def exp_dd_symbol(spec: FilterSpec) -> InterpolatorySymbol:
    """Exponential Deslauriers-Dubuc symbol for ``spec``.

    ``lambda_eff`` is measured per coarse-grid unit.  The odd taps are the
    weights of the rule ``sum_i w_i u(x_i) = u(0)`` on fine-grid nodes
    ``x_i = +-1, +-3, ...``, exact on ``span{x**j exp(+-lam x / 2)}``.
    """
    p = spec.order
    lam = 0.5 * float(spec.lambda_eff)  # exponent per fine-grid step
    nodes = np.arange(-(2 * p - 1), 2 * p, 2)
    if lam == 0.0:
        w = _polynomial_midpoint_weights(p)
    else:
        vander = _dd_basis(p, lam, nodes.astype(float))
        cond = np.linalg.cond(vander)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise NumericalError(
                f"interpolation system ill-conditioned (cond={cond:.3e}) "
                f"for order={p}, lambda={lam}"
            )
        rhs = np.zeros(2 * p)
        rhs[0] = 1.0
        w = np.linalg.solve(vander, rhs)
        w = 0.5 * (w + w[::-1])
    taps = np.zeros(4 * p - 1)
    taps[2 * p - 1] = 1.0
    taps[nodes + 2 * p - 1] = w
    # zeros of z**(2p-1) a(z): -exp(-g) for every exponent g, multiplicity p
    roots = np.concatenate([np.full(p, -math.exp(-lam)), np.full(p, -math.exp(lam))])
    return InterpolatorySymbol(taps, spec, roots)


def _deflate(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """Least-squares quotient of ``coeffs`` (descending powers) by ``prod(z - r)``."""
    if roots.size == 0:
        return coeffs.astype(np.complex128)
    divisor = np.poly(roots)
    nq = coeffs.size - divisor.size + 1
    conv = np.zeros((coeffs.size, nq), dtype=np.complex128)
    for j in range(nq):
        conv[j:j + divisor.size, j] = divisor
    quotient, *_ = np.linalg.lstsq(conv, coeffs.astype(np.complex128), rcond=None)
    return quotient


def _sort_roots(roots: np.ndarray) -> np.ndarray:
    order = np.lexsort((np.angle(roots), np.abs(roots)))
    return roots[order]


def _split_unit_circle(roots: np.ndarray) -> list[complex]:
    """Take half of every (even-multiplicity) unit-circle root cluster.

    A multiple root comes back from the companion matrix as a small ring of
    simple roots; the cluster mean is the well-conditioned estimate.
    """
    chosen: list[complex] = []
    remaining = list(_sort_roots(roots))
    while remaining:
        r0 = remaining.pop(0)
        cluster = [r0] + [r for r in remaining if abs(r - r0) <= CLUSTER_TOL * max(1.0, abs(r0))]
        remaining = [r for r in remaining if abs(r - r0) > CLUSTER_TOL * max(1.0, abs(r0))]
        if len(cluster) % 2:
            raise NumericalError(
                f"unit-circle root cluster near {r0:.6g} has odd multiplicity {len(cluster)}"
            )
        chosen.extend([complex(np.mean(cluster))] * (len(cluster) // 2))
    return chosen


def spectral_factorize(sym: InterpolatorySymbol) -> np.ndarray:
    """Minimum-phase real ``h`` with ``h(z) h(1/z) = a(z)``.

    Known exponential zeros are assigned first (the ``|r| <= 1`` member of
    each reciprocal pair); the remaining zeros come from the companion
    matrix of the deflated polynomial.
    """
    values = sym.evaluate(np.linspace(0.0, 2 * np.pi, NONNEG_GRID, endpoint=False))
    if values.min() < -NONNEG_TOL:
        raise NumericalError(f"symbol is negative on the unit circle (min {values.min():.3e})")

    coeffs = sym.taps[::-1]  # descending powers of z**m a(z)
    known = _sort_roots(sym.known_roots)
    rest = np.roots(_deflate(coeffs, known)) if coeffs.size > known.size + 1 else np.empty(0)
    all_roots = np.concatenate([known, rest]).astype(np.complex128)

    mod = np.abs(all_roots)
    inside = _sort_roots(all_roots[mod < 1 - INSIDE_TOL])
    circle = all_roots[np.abs(mod - 1) <= INSIDE_TOL]
    chosen = np.concatenate([inside, np.array(_split_unit_circle(circle), dtype=np.complex128)])

    m = sym.half_width
    if chosen.size != m:
        raise NumericalError(
            f"root assignment produced {chosen.size} roots, expected {m}; "
            "symbol is not a valid autocorrelation"
        )
    poly = np.poly(chosen)
    if np.max(np.abs(poly.imag)) > 1e-9:
        raise NumericalError("complex roots did not pair into a real filter")
    h = poly.real
    a_one = float(np.sum(sym.taps))
    if a_one <= 0:
        raise NumericalError("symbol must be positive at z = 1")
    h = h * (math.sqrt(a_one) / np.sum(h))

    resid = factorization_residual(h, sym)
    if resid > RESIDUAL_TOL:
        raise NumericalError(f"factorization residual {resid:.3e} exceeds {RESIDUAL_TOL}")
    return h


def factorization_residual(h: np.ndarray, sym: InterpolatorySymbol) -> float:
    auto = np.correlate(h, h, mode="full")
    return float(np.max(np.abs(auto - sym.taps)))


def highpass_from_lowpass(h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1 or h.size % 2:
        raise ValueError("low-pass filter must have even length")
    signs = np.where(np.arange(h.size) % 2 == 0, 1.0, -1.0)
    return signs * h[::-1]


def make_pair(spec: FilterSpec) -> FilterPair:
    sym = exp_dd_symbol(spec)
    h = spectral_factorize(sym)
    return FilterPair(h, highpass_from_lowpass(h), spec, factorization_residual(h, sym))


def daubechies_pair(order: int) -> FilterPair:
    """Classical orthonormal Daubechies pair with ``2 * order`` taps."""
    return make_pair(FilterSpec(order, 0.0))


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Per-frequency, per-level filter pairs of the PHSD transform.

    ``pairs[xi][step - 1]`` serves Fourier indices ``xi`` and ``n_y - xi``.
    """

    n_y: int
    levels: int
    order: int
    y_scale: float
    pairs: tuple
    clamped: frozenset = frozenset()

    def pair(self, xi: int, step: int) -> FilterPair:
        xi %= self.n_y
        return self.pairs[min(xi, self.n_y - xi)][step - 1]

    def level_pairs(self, xi: int) -> list[FilterPair]:
        return [self.pair(xi, s) for s in range(1, self.levels + 1)]


def frequency_exponent(xi: int, n_y: int, y_scale: float = 1.0) -> float:
    xi %= n_y
    return y_scale * 2.0 * math.pi * min(xi, n_y - xi) / n_y


def build_filter_bank(n_y: int, n_t: int, order: int = 2, levels: int = 4,
                      y_scale: float = 1.0) -> FilterBank:
    """Build the non-stationary bank for an ``n_t x n_y`` image.

    Step ``s`` (mapping length ``n_t / 2**(s-1)`` to ``n_t / 2**s``) at
    index ``xi`` uses exponent ``min(lam(xi) * 2**(s-1), LAMBDA_MAX)``.
    """
    if not is_power_of_two(n_t):
        raise ValueError(f"n_t must be a power of two, got {n_t}")
    if n_y < 1:
        raise ValueError(f"n_y must be positive, got {n_y}")
    if levels < 0 or 2 ** levels > n_t:
        raise ValueError(f"levels={levels} exceeds log2(n_t={n_t})")
    if not y_scale > 0:
        raise ValueError("y_scale must be positive")

    cache: dict[FilterSpec, FilterPair] = {}
    clamped = set()
    pairs = []
    for xi in range(n_y // 2 + 1):
        lam = frequency_exponent(xi, n_y, y_scale)
        row = []
        for step in range(1, levels + 1):
            lam_eff = lam * 2.0 ** (step - 1)
            if lam_eff > LAMBDA_MAX:
                clamped.add((xi, step))
                lam_eff = LAMBDA_MAX
            spec = FilterSpec(order, lam_eff)
            if spec not in cache:
                cache[spec] = make_pair(spec)
            row.append(cache[spec])
        pairs.append(tuple(row))
    return FilterBank(n_y, levels, order, float(y_scale), tuple(pairs), frozenset(clamped))


def dump_filter_bank(bank: FilterBank) -> str:
    """Text dump: one ``xi level tap value`` line per low-pass tap."""
    lines = []
    for xi, row in enumerate(bank.pairs):
        for step, pair in enumerate(row, start=1):
            for k, v in enumerate(pair.lowpass):
                lines.append(f"{xi} {step} {k} {v:.17g}")
    return "\n".join(lines) + "\n"
