"""motionkit: trajectory conditioning and evaluation for motion-controlled video.

The package covers the machinery around a motion-conditioned video
generator: the trajectory data model, Gaussian motion volumes, controlled
trajectory degradation, overlay rendering, the reasoning-then-generation
loop, benchmark management, pairwise preference evaluation, and the HTTP
service plus CLI that tie them together.
"""

from .degrade import (
    AffineDraws,
    DegradeConfig,
    affine_perturb,
    degrade,
    intensity_for_score,
    keypoint_count,
    linearize,
    sample_affine_draws,
    savgol_smooth,
    savgol_window,
)
from .errors import (
    ManifestError,
    MotionKitError,
    ProtocolError,
    TrackTextError,
    TransportError,
    UndefinedRateError,
    VolumeFormatError,
)
from .estimators import TrajectoryDegrader, VolumeRasterizer
from .evalkit import (
    JudgeKind,
    Metric,
    PreferenceResult,
    Strength,
    Verdict,
    Winner,
    aggregate,
    build_judge_request,
    epe,
    preference_rate,
    strength_weight,
    track_bright_points,
)
from .overlay import OverlayStyle, compose_vlm_image, draw_overlay
from .reason import (
    MockVlmClient,
    ReasonedPlan,
    SessionState,
    StubGeneratorClient,
    VlmRequest,
    build_request,
    merge_plan,
    parse_response,
    run_loop,
    step,
)
from .tracks import (
    Point2,
    Track,
    TrackKind,
    TrajectorySet,
    denormalize_points,
    normalize_points,
    parse_manifest,
    parse_track_text,
    resample,
    sample_tracks,
    serialize_manifest,
)
from .volume import (
    MotionVolume,
    SigmaConfig,
    export_frames_png,
    kernel_value,
    rasterize,
    read_volume,
    render_preview_video,
    write_volume,
)

__version__ = "0.1.0"

__all__ = [
    "AffineDraws",
    "DegradeConfig",
    "JudgeKind",
    "ManifestError",
    "Metric",
    "MockVlmClient",
    "MotionKitError",
    "MotionVolume",
    "OverlayStyle",
    "Point2",
    "PreferenceResult",
    "ProtocolError",
    "ReasonedPlan",
    "SessionState",
    "SigmaConfig",
    "Strength",
    "StubGeneratorClient",
    "Track",
    "TrackKind",
    "TrackTextError",
    "TrajectoryDegrader",
    "TrajectorySet",
    "TransportError",
    "UndefinedRateError",
    "Verdict",
    "VlmRequest",
    "VolumeFormatError",
    "VolumeRasterizer",
    "Winner",
    "affine_perturb",
    "aggregate",
    "build_judge_request",
    "build_request",
    "compose_vlm_image",
    "degrade",
    "denormalize_points",
    "draw_overlay",
    "epe",
    "export_frames_png",
    "intensity_for_score",
    "kernel_value",
    "keypoint_count",
    "linearize",
    "merge_plan",
    "normalize_points",
    "parse_manifest",
    "parse_response",
    "parse_track_text",
    "preference_rate",
    "rasterize",
    "read_volume",
    "render_preview_video",
    "resample",
    "run_loop",
    "sample_affine_draws",
    "sample_tracks",
    "savgol_smooth",
    "savgol_window",
    "serialize_manifest",
    "step",
    "strength_weight",
    "track_bright_points",
]
