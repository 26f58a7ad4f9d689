"""l1 recovery: Lasso by FISTA and equality-constrained basis pursuit by Douglas-Rachford.

Solvers only need an operator exposing ``matvec``, ``rmatvec``,
``input_shape`` and ``wrap``; :class:`~phsdcs.sensing.ComposedOperator`
and :class:`MatrixOperator` both qualify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import NumericalError
from .sensing import MeasurementVector

LASSO = "lasso"
BP = "bp"
PROJECTION_TOL = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    method: str = LASSO
    mu: float = 1.0
    gamma: float = 100.0
    iterations: int = 10
    step_override: float | None = None
    tol: float = 0.0
    power_iterations: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.method not in (LASSO, BP):
            raise ValueError(f"unknown solver method {self.method!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (self.mu > 0 and self.gamma > 0):
            raise ValueError("mu and gamma must be positive")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")


@dataclass
class SolveResult:
    beta: object
    iterations_run: int
    objective_trace: list[float] = field(default_factory=list)
    residual_trace: list[float] = field(default_factory=list)
    residual: float = 0.0
    kkt_residual: float | None = None
    operator_norm: float | None = None


class MatrixOperator:
    """Dense matrix as a solver operator (synthetic problems, tests)."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix)
        if self.matrix.ndim != 2:
            raise ValueError("matrix must be 2-D")

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def input_shape(self) -> tuple[int]:
        return (self.n,)

    def matvec(self, x):
        return self.matrix @ x

    def rmatvec(self, y):
        return self.matrix.conj().T @ y

    def wrap(self, x):
        return x


def soft_threshold(z, tau: float):
    """Complex soft threshold ``z * max(|z| - tau, 0) / |z|``; zero where ``|z| <= tau``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    z = np.asarray(z)
    mod = np.abs(z)
    scale = np.maximum(mod - tau, 0.0) / np.where(mod > tau, mod, 1.0)
    out = z * scale
    return out[()] if out.ndim == 0 else out


def _values(y) -> np.ndarray:
    return y.values if isinstance(y, MeasurementVector) else np.asarray(y)


def _raw(beta) -> np.ndarray:
    return beta.values if hasattr(beta, "values") else np.asarray(beta)


def operator_norm(op, iters: int = 30, seed: int = 0, return_trace: bool = False):
    """Power-iteration estimate of ``||A||_2`` using ``A^H A``."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.input_shape)
    x /= np.linalg.norm(x)
    trace = []
    est = 0.0
    for _ in range(iters):
        ax = op.matvec(x)
        est = float(np.linalg.norm(ax))
        trace.append(est)
        x = op.rmatvec(ax)
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            break
        x = x / nrm
    return (est, trace) if return_trace else est


def _l1(x: np.ndarray) -> float:
    return float(np.sum(np.abs(x)))


def kkt_residual(op, y, beta, mu: float) -> float:
    """Violation of the Lasso optimality conditions at ``beta``."""
    b = _raw(beta)
    r = op.rmatvec(op.matvec(b) - _values(y))
    mod = np.abs(b)
    nz = mod > 0
    gap = 0.0
    if np.any(~nz):
        gap = max(gap, float(np.max(np.maximum(np.abs(r[~nz]) - mu, 0.0))))
    if np.any(nz):
        gap = max(gap, float(np.max(np.abs(r[nz] + mu * b[nz] / mod[nz]))))
    return gap


def lasso_fista(op, y, cfg: SolverConfig) -> SolveResult:
    """Minimize ``0.5 ||A b - y||^2 + mu ||b||_1`` by accelerated proximal gradient."""
    if cfg.method != LASSO:
        raise ValueError("lasso_fista needs cfg.method == 'lasso'")
    yv = _values(y)
    norm = None
    if cfg.step_override is not None:
        step = cfg.step_override
    else:
        norm = operator_norm(op, cfg.power_iterations, cfg.seed)
        if norm == 0.0:
            raise NumericalError("operator norm is zero")
        step = 1.0 / norm ** 2

    beta = np.zeros(op.input_shape, dtype=np.complex128)
    w = beta.copy()
    t = 1.0
    objective, residuals = [], []
    for it in range(1, cfg.iterations + 1):
        grad = op.rmatvec(op.matvec(w) - yv)
        new = soft_threshold(w - step * grad, step * cfg.mu)
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        w = new + ((t - 1.0) / t_next) * (new - beta)
        change = np.linalg.norm(new - beta)
        ref = np.linalg.norm(new)
        beta, t = new, t_next

        res = float(np.linalg.norm(op.matvec(beta) - yv))
        obj = 0.5 * res ** 2 + cfg.mu * _l1(beta)
        if not math.isfinite(obj):
            raise NumericalError(f"Lasso objective diverged at iteration {it}; step too large?")
        objective.append(obj)
        residuals.append(res)
        if cfg.tol > 0 and change <= cfg.tol * max(ref, 1e-300):
            break

    return SolveResult(
        beta=op.wrap(beta),
        iterations_run=len(objective),
        objective_trace=objective,
        residual_trace=residuals,
        residual=residuals[-1],
        kkt_residual=kkt_residual(op, yv, beta, cfg.mu),
        operator_norm=norm,
    )


def check_row_orthonormal(op, seed: int = 0, tol: float = PROJECTION_TOL) -> float:
    """Probe ``A A^H = I`` on one random measurement vector; return the relative error."""
    rng = np.random.default_rng(seed)
    m = op.m
    v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    err = float(np.linalg.norm(op.matvec(op.rmatvec(v)) - v) / np.linalg.norm(v))
    if err > tol:
        raise NumericalError(
            f"A A^H != I (relative error {err:.3e}); basis pursuit projection would be inexact"
        )
    return err


def bp_douglas_rachford(op, y, cfg: SolverConfig) -> SolveResult:
    """Minimize ``||b||_1`` subject to ``A b = y`` (requires ``A A^H = I``).

    Douglas-Rachford on the l1 prox (threshold ``gamma``) and the affine
    projection ``P(b) = b + A^H (y - A b)``.  The returned iterate is
    projected, so it is feasible to rounding error.
    """
    if cfg.method != BP:
        raise ValueError("bp_douglas_rachford needs cfg.method == 'bp'")
    yv = _values(y)
    check_row_orthonormal(op, cfg.seed)

    def project(b):
        return b + op.rmatvec(yv - op.matvec(b))

    z = np.asarray(op.rmatvec(yv), dtype=np.complex128)
    objective, residuals = [], []
    for it in range(1, cfg.iterations + 1):
        x = soft_threshold(z, cfg.gamma)
        z_new = z + project(2.0 * x - z) - x
        change = np.linalg.norm(z_new - z)
        ref = np.linalg.norm(z_new)
        z = z_new
        beta = project(soft_threshold(z, cfg.gamma))
        obj = _l1(beta)
        if not math.isfinite(obj):
            raise NumericalError(f"basis pursuit iterate diverged at iteration {it}")
        objective.append(obj)
        residuals.append(float(np.linalg.norm(op.matvec(beta) - yv)))
        if cfg.tol > 0 and change <= cfg.tol * max(ref, 1e-300):
            break

    return SolveResult(
        beta=op.wrap(beta),
        iterations_run=len(objective),
        objective_trace=objective,
        residual_trace=residuals,
        residual=residuals[-1],
        operator_norm=1.0,
    )


def solve(op, y, cfg: SolverConfig) -> SolveResult:
    if cfg.method == LASSO:
        return lasso_fista(op, y, cfg)
    return bp_douglas_rachford(op, y, cfg)
