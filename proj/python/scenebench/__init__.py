"""Python bindings for the scenebench C++ core."""

from ._scenebench import (
    ScenebenchError,
    aabb_iou,
    cfm_loss,
    cfm_loss_gradient,
    chamfer_distance,
    cli,
    dual_normalization_align,
    duplicated_softmax,
    evaluate_view,
    f_score,
    hungarian,
    load_manifest,
    precision_recall,
    read_points,
    robust_icp,
    run_eval,
    scene_context_attention,
    self_attention,
    softmax,
    synthesize_manifest,
    to_canonical,
    to_view_centric,
    trimmed_chamfer,
    verify_sca,
    voxel_downsample,
)

__all__ = [name for name in dir() if not name.startswith("_")]
