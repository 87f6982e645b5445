"""Probabilistic frames, frame potentials, Wasserstein transport and tightness flows."""

from ._core import (
    DiscreteMeasure,
    FlowTrajectory,
    FrameDiagnostics,
    FramescopeError,
    check_nearest_tight_bound,
    cp_constant,
    diagnostics,
    explicit_step,
    fp,
    frame_operator,
    generate,
    moment,
    pfp,
    pframe_barycenter,
    pframe_potential,
    run_flow,
    run_suite,
    tightness_operator,
    tightness_potential,
    tp,
    tp_gradient,
    wasserstein,
)

__all__ = [
    "DiscreteMeasure",
    "FlowTrajectory",
    "FrameDiagnostics",
    "FramescopeError",
    "check_nearest_tight_bound",
    "cp_constant",
    "diagnostics",
    "explicit_step",
    "fp",
    "frame_operator",
    "generate",
    "moment",
    "pfp",
    "pframe_barycenter",
    "pframe_potential",
    "run_flow",
    "run_suite",
    "tightness_operator",
    "tightness_potential",
    "tp",
    "tp_gradient",
    "wasserstein",
]
