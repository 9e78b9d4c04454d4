"""Python access to the metricdepth C++ core."""

from ._metricdepth import (
    MetricDepthError,
    ablate,
    compute_metrics,
    differential_map,
    gen_scene,
    gen_shift_seed,
    gradcheck,
    identify_multirange,
    identify_uniform,
    oracle,
    reg_loss,
    shift2d,
    si_loss,
)

__all__ = [
    "MetricDepthError",
    "ablate",
    "compute_metrics",
    "differential_map",
    "gen_scene",
    "gen_shift_seed",
    "gradcheck",
    "identify_multirange",
    "identify_uniform",
    "oracle",
    "reg_loss",
    "shift2d",
    "si_loss",
]
