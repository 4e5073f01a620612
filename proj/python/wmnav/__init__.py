"""Python access to the navigation core: scenes, geodesics, SR/SPL and benchmark runs."""

from ._wmnav import (
    EpisodeResult,
    Pose,
    compute_spl,
    compute_sr,
    curiosity_to_gray,
    geodesic_distance,
    load_results,
    load_scene,
    optimal_path_length,
    load_episode,
    run_benchmark,
    write_suite,
)

__all__ = [
    "EpisodeResult",
    "Pose",
    "compute_spl",
    "compute_sr",
    "curiosity_to_gray",
    "geodesic_distance",
    "load_episode",
    "load_results",
    "load_scene",
    "optimal_path_length",
    "run_benchmark",
    "write_suite",
]
