"""Bilateral phase correlation optical flow.

Frequency-domain translation estimation hardened against multiple
motions by an asymmetric bilateral prefilter, wrapped in a
coarse-to-fine sparse-to-dense framework with an evaluation suite and
a synthetic multi-motion benchmark generator.
"""

from .bilateral import BilateralParams, asymmetric_bilateral_pair, gaussian_kernel, reference_bilateral
from .core import FlowField, FlowVector, Window, bilinear_sample, extract_window
from .estimator import (
    Method,
    PointEstimate,
    blpc_estimate,
    default_ratio_threshold,
    dense_flow,
    estimate_at,
    pc_estimate,
)
from .framework import (
    FrameworkConfig,
    KeyPointSet,
    Pyramid,
    build_pyramid,
    densify,
    estimate_flow,
    lucas_kanade_at,
    run_pipeline,
    select_keypoints,
    warp_and_residual,
)
from .metrics import (
    EvalReport,
    angular_error,
    endpoint_error,
    motion_compensate,
    mse,
    nrms,
    psnr,
)
from .spectral import (
    CorrelationSurface,
    forward_dft,
    inverse_dft,
    peak_ratio,
    phase_correlation_surface,
    subpixel_refine,
)
from .synth import SceneObject, SceneSpec, Texture, render_pair, standard_suite

__version__ = "0.1.0"

__all__ = [
    "BilateralParams",
    "CorrelationSurface",
    "EvalReport",
    "FlowField",
    "FlowVector",
    "FrameworkConfig",
    "KeyPointSet",
    "Method",
    "PointEstimate",
    "Pyramid",
    "SceneObject",
    "SceneSpec",
    "Texture",
    "Window",
    "angular_error",
    "asymmetric_bilateral_pair",
    "bilinear_sample",
    "blpc_estimate",
    "build_pyramid",
    "default_ratio_threshold",
    "dense_flow",
    "densify",
    "endpoint_error",
    "estimate_at",
    "estimate_flow",
    "extract_window",
    "forward_dft",
    "gaussian_kernel",
    "inverse_dft",
    "lucas_kanade_at",
    "motion_compensate",
    "mse",
    "nrms",
    "pc_estimate",
    "peak_ratio",
    "phase_correlation_surface",
    "psnr",
    "reference_bilateral",
    "render_pair",
    "run_pipeline",
    "select_keypoints",
    "standard_suite",
    "subpixel_refine",
    "warp_and_residual",
]
