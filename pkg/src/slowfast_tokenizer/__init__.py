"""Vision-side token pipeline: slow/fast frame classification, token-budget
solving, native-resolution patch geometry, rotary position index tables,
sequence layout with timestamps and grounding markup, context-window packing
with load balancing, and a standalone numeric kernel for the clipped
sequence-level policy objective."""

from .budget import (
    BudgetPlan,
    GeometryConfig,
    PatchGrid,
    fit_grid,
    largest_feasible_tokens,
    solve_video_budget,
    total_quantized_tokens,
)
from .config import (
    PackingConfig,
    PipelineConfig,
    RopeSettings,
    SimilarityConfig,
    SpecialTokens,
)
from .errors import (
    BudgetTooSmallError,
    GroundingParseError,
    InfeasibleMixtureError,
    InvalidConfigError,
    InvalidInputError,
    OversizeItemError,
    PipelineError,
)
from .frames import (
    FrameClass,
    FrameKind,
    FrameRecord,
    SimilarityReport,
    classify_frames,
    classify_frames_detailed,
    patch_similarity,
)
from .grounding import (
    GroundingItem,
    GroundingVariant,
    ParseIssue,
    emit_grounding,
    normalize_coord,
    parse_grounding,
    parse_grounding_with_issues,
    scan_grounding,
    signed_area_2x,
)
from .gspo import (
    GroupRollouts,
    GspoResult,
    group_advantages,
    gspo_objective,
    sequence_ratio,
)
from .layout import (
    DEFAULT_FAST_FRAME_TOKEN,
    DEFAULT_SLOW_FRAME_TOKEN,
    SpecialToken,
    TimestampText,
    TokenLayout,
    VisionBlock,
    assemble_layout,
    render_timestamp,
)
from .manifest import FrameManifest, ManifestFrame, load_frame_dims, load_frames
from .packing import (
    Modality,
    PackedWindow,
    SequenceItem,
    WorkerAssignment,
    balance_workers,
    estimate_cost,
    pack_windows,
    plan_mixture,
)
from .rope import (
    DEFAULT_INV_FREQ_BASE,
    LONG_CONTEXT_INV_FREQ_BASE,
    PosEmbedGrid,
    RopeConfig,
    RopeIndexTable,
    apply_rotary,
    axis_frequencies,
    build_rope_index_table,
    interpolate_pos_embed,
    rope_angles_2d,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetPlan",
    "GeometryConfig",
    "PatchGrid",
    "fit_grid",
    "largest_feasible_tokens",
    "solve_video_budget",
    "total_quantized_tokens",
    "PackingConfig",
    "PipelineConfig",
    "RopeSettings",
    "SimilarityConfig",
    "SpecialTokens",
    "BudgetTooSmallError",
    "GroundingParseError",
    "InfeasibleMixtureError",
    "InvalidConfigError",
    "InvalidInputError",
    "OversizeItemError",
    "PipelineError",
    "FrameClass",
    "FrameKind",
    "FrameRecord",
    "SimilarityReport",
    "classify_frames",
    "classify_frames_detailed",
    "patch_similarity",
    "GroundingItem",
    "GroundingVariant",
    "ParseIssue",
    "emit_grounding",
    "normalize_coord",
    "parse_grounding",
    "parse_grounding_with_issues",
    "scan_grounding",
    "signed_area_2x",
    "GroupRollouts",
    "GspoResult",
    "group_advantages",
    "gspo_objective",
    "sequence_ratio",
    "DEFAULT_FAST_FRAME_TOKEN",
    "DEFAULT_SLOW_FRAME_TOKEN",
    "SpecialToken",
    "TimestampText",
    "TokenLayout",
    "VisionBlock",
    "assemble_layout",
    "render_timestamp",
    "FrameManifest",
    "ManifestFrame",
    "load_frame_dims",
    "load_frames",
    "Modality",
    "PackedWindow",
    "SequenceItem",
    "WorkerAssignment",
    "balance_workers",
    "estimate_cost",
    "pack_windows",
    "plan_mixture",
    "DEFAULT_INV_FREQ_BASE",
    "LONG_CONTEXT_INV_FREQ_BASE",
    "PosEmbedGrid",
    "RopeConfig",
    "RopeIndexTable",
    "apply_rotary",
    "axis_frequencies",
    "build_rope_index_table",
    "interpolate_pos_embed",
    "rope_angles_2d",
    "__version__",
]
