"""Experiment orchestration: measure, reconstruct, score, report."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from . import transform as tr
from .core import Image, NumericalError, psnr, sparsity_report
from .io import ExperimentReport
from .sensing import ComposedOperator, SamplingMask, measure, radial_mask
from .solvers import BP, LASSO, SolveResult, SolverConfig, solve

log = logging.getLogger(__name__)

BASES = (tr.PHSD, tr.DAUB2D)
METHODS = (BP, LASSO)
SIGNIFICANCE = 1e-3


@dataclass(frozen=True)
class RunConfig:
    input: str = ""
    output_dir: str = "."
    basis: str = "both"
    order: int = 2
    levels: int = 4
    y_scale: float = 1.0
    lines: int = 50
    points_per_line: int = 100
    hermitian: bool = True
    mask: str | None = None
    solver: str = "both"
    mu: float = 1.0
    gamma: float = 100.0
    iterations: int = 10
    transpose: bool = False
    seed: int = 0
    crop: int | None = None
    timing: bool = False

    def bases(self) -> tuple[str, ...]:
        return BASES if self.basis == "both" else (self.basis,)

    def methods(self) -> tuple[str, ...]:
        return METHODS if self.solver == "both" else (self.solver,)

    def solver_config(self, method: str) -> SolverConfig:
        return SolverConfig(method=method, mu=self.mu, gamma=self.gamma,
                            iterations=self.iterations, seed=self.seed)


@dataclass
class Reconstruction:
    image: Image | None
    report: ExperimentReport
    result: SolveResult | None = None
    imaginary_residue: float = 0.0


def default_mask(img: Image, cfg: RunConfig) -> SamplingMask:
    n_t, n_y = img.shape
    if n_t != n_y:
        raise ValueError(f"radial masks need a square image, got {n_t}x{n_y}")
    return radial_mask(n_t, cfg.lines, cfg.points_per_line, cfg.hermitian, cfg.seed)


def reconstruct(img: Image, mask: SamplingMask, basis: str, method: str, cfg: RunConfig,
                image_id: str = "image", crop: str = "") -> Reconstruction:
    """Run one (basis, solver) cell; failures are recorded in the report."""
    from_file = cfg.mask is not None
    report = ExperimentReport(
        image_id=image_id,
        basis_tag=f"{basis}-p{cfg.order}",
        method=method,
        lines=None if from_file else cfg.lines,
        points_per_line=None if from_file else cfg.points_per_line,
        hermitian=mask.hermitian_completed,
        realized_m=mask.m,
        mask_id=mask.mask_id,
        n=img.height * img.width,
        iterations=cfg.iterations,
        mu=cfg.mu,
        gamma=cfg.gamma,
        crop=crop,
    )
    start = time.perf_counter()
    try:
        handle = tr.make_handle(basis, img.height, img.width, cfg.order, cfg.levels, cfg.y_scale)
        if handle.bank is not None:
            report.lambda_clamped = len(handle.bank.clamped)
        op = ComposedOperator(mask, handle)
        y = measure(img, mask)
        result = solve(op, y, cfg.solver_config(method))
        recon, residue = tr.inverse(result.beta, handle, img.bit_depth, return_residue=True)
    except (NumericalError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        report.error = f"{type(exc).__name__}: {exc}"
        log.error("%s/%s failed: %s", basis, method, report.error)
        return Reconstruction(None, report)
    elapsed = time.perf_counter() - start

    beta = result.beta.values
    peak = float(np.max(np.abs(beta))) if beta.size else 0.0
    report.psnr_db = psnr(img, recon)
    report.final_residual = result.residual
    report.kkt_residual = result.kkt_residual
    report.significant_k = sparsity_report(result.beta, SIGNIFICANCE * peak).significant_count
    report.operator_norm = result.operator_norm
    if cfg.timing:
        report.wall_time_seconds = elapsed
    log.info("%s/%s: PSNR %.3f dB, M=%d, %.2fs", basis, method, report.psnr_db, mask.m, elapsed)
    return Reconstruction(recon, report, result, residue)


def run_grid(img: Image, mask: SamplingMask, cfg: RunConfig, image_id: str = "image",
             crop: str = "") -> list[Reconstruction]:
    """All requested (basis, solver) cells against one shared mask, in fixed order."""
    return [reconstruct(img, mask, b, m, cfg, image_id, crop)
            for b in cfg.bases() for m in cfg.methods()]


def psnr_deltas(runs: list[Reconstruction]) -> list[float | None]:
    """PSNR of each row minus the daub2d row with the same solver."""
    base = {r.report.method: r.report.psnr_db for r in runs
            if r.report.basis_tag.startswith(tr.DAUB2D)}
    out = []
    for r in runs:
        ref = base.get(r.report.method)
        if r.report.psnr_db is None or ref is None:
            out.append(None)
        else:
            out.append(r.report.psnr_db - ref)
    return out
