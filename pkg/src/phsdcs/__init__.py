"""Compressive sensing with polyharmonic subdivision (PHSD) wavelets."""

from .core import (
    CoefficientPyramid,
    ComplexGrid,
    Image,
    NumericalError,
    SparsityReport,
    keep_top_k,
    mse,
    psnr,
    sparsity_report,
)
from .filters import (
    FilterBank,
    FilterPair,
    FilterSpec,
    InterpolatorySymbol,
    build_filter_bank,
    exp_dd_symbol,
    highpass_from_lowpass,
    spectral_factorize,
)
from .sensing import (
    ComposedOperator,
    MeasurementVector,
    SamplingMask,
    apply,
    apply_adjoint,
    measure,
    measure_adjoint,
    radial_mask,
)
from .solvers import SolveResult, SolverConfig, bp_douglas_rachford, lasso_fista, soft_threshold
from .transform import TransformHandle, daub2d_handle, phsd_handle

__version__ = "0.1.0"
