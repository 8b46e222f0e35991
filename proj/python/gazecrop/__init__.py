"""Gaze-driven foveated input toolkit."""

from ._core import (
    GazecropError,
    aggregate_dual_order,
    build_heatmap,
    builtin_profile_names,
    calibrate,
    count_visual_tokens,
    default_sigma_px,
    enforce_min_size,
    estimate_flops,
    format_change,
    gaussian_smooth,
    kernel_radius,
    load_manifest,
    prepare,
    reduction_pct,
    report,
    score_mock,
    support_mass_box,
    support_set,
    sweep,
    weighted_total,
    win_rate,
)

__all__ = [
    "GazecropError",
    "aggregate_dual_order",
    "build_heatmap",
    "builtin_profile_names",
    "calibrate",
    "count_visual_tokens",
    "default_sigma_px",
    "enforce_min_size",
    "estimate_flops",
    "format_change",
    "gaussian_smooth",
    "kernel_radius",
    "load_manifest",
    "prepare",
    "reduction_pct",
    "report",
    "score_mock",
    "support_mass_box",
    "support_set",
    "sweep",
    "weighted_total",
    "win_rate",
]
