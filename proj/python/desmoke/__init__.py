"""Smoke-removal diffusion policy: Python surface over the C++ core."""

from ._core import (
    HistogramFeaturizer,
    NoiseSchedule,
    apply_smoke,
    build_prior_reference,
    ceiq_proxy,
    channel_stats,
    clipped_surrogate,
    cosine,
    group_advantages,
    make_schedule,
    match_loss,
    percentile,
    psnr,
    read_ppm,
    restore,
    reward_concept,
    reward_physics,
    synth_transmission,
    tissue_texture,
    total_reward,
    write_ppm,
)

__all__ = [
    "HistogramFeaturizer",
    "NoiseSchedule",
    "apply_smoke",
    "build_prior_reference",
    "ceiq_proxy",
    "channel_stats",
    "clipped_surrogate",
    "cosine",
    "group_advantages",
    "make_schedule",
    "match_loss",
    "percentile",
    "psnr",
    "read_ppm",
    "restore",
    "reward_concept",
    "reward_physics",
    "synth_transmission",
    "tissue_texture",
    "total_reward",
    "write_ppm",
]
