"""Diffusion-based particle detection in bird-eye-view: the full non-neural
algorithmic stack (schedules and DDIM particle refinement, query-grid
interpolation, set matching, rotated-box geometry and suppression,
NuScenes-style evaluation) plus a synthetic harness and a label-ambiguity
toy experiment. Subpackages `particlebev.harness` and `particlebev.toylab`
hold the CLI/scene plumbing and the toy study.
"""

__version__ = "0.1.0"

from .assignment import (AssignmentResult, CostWeights, build_cost_matrix,
                         center_affinity, focal_loss, hungarian, l1_box_loss,
                         simota, simple_many_to_one)
from .diffusion import (DEFAULT_SNR, DegenerateTimeError, DiffusionSchedule,
                        ParticleSet, SnrScale, ddim_step, make_cosine_schedule,
                        pad_references, q_sample, renew_references, scale_refs,
                        time_pairs, unscale_refs)
from .evaluation import (EvalConfig, EvalReport, TPErrors, average_precision,
                         evaluate_corpus, greedy_match, kde_heatmap, nds,
                         tp_errors)
from .geometry import (DEFAULT_EXTENT, BevBox, BevExtent, BoxDelta,
                       DegenerateBoxError, DeltaOverflowError,
                       NegativeSpanWarning, apply_box_delta, center_distance_2d,
                       clip_polygon, denormalize_center, footprint_polygon,
                       normalize_center, polygon_area, rotated_iou)
from .querygrid import (QueryGrid, bilinear_weights, interpolate,
                        interpolation_jacobian)
from .suppression import (SuppressionConfig, confidence_filter, filter_pipeline,
                          radial_suppression, rotated_nms)

__all__ = [
    "__version__",
    # geometry
    "BevBox", "BoxDelta", "BevExtent", "DEFAULT_EXTENT", "DegenerateBoxError",
    "DeltaOverflowError", "NegativeSpanWarning", "apply_box_delta",
    "center_distance_2d", "clip_polygon", "denormalize_center",
    "footprint_polygon", "normalize_center", "polygon_area", "rotated_iou",
    # diffusion
    "DEFAULT_SNR", "DegenerateTimeError", "DiffusionSchedule", "ParticleSet",
    "SnrScale", "ddim_step", "make_cosine_schedule", "pad_references",
    "q_sample", "renew_references", "scale_refs", "time_pairs", "unscale_refs",
    # query grid
    "QueryGrid", "bilinear_weights", "interpolate", "interpolation_jacobian",
    # assignment
    "AssignmentResult", "CostWeights", "build_cost_matrix", "center_affinity",
    "focal_loss", "hungarian", "l1_box_loss", "simota", "simple_many_to_one",
    # suppression
    "SuppressionConfig", "confidence_filter", "filter_pipeline",
    "radial_suppression", "rotated_nms",
    # evaluation
    "EvalConfig", "EvalReport", "TPErrors", "average_precision",
    "evaluate_corpus", "greedy_match", "kde_heatmap", "nds", "tp_errors",
]
