"""Desk-scale numeric kernels of the cascade voxel decoder."""

from occtk.kernels.attention import DeformableAttention3DParams, batched_attention, deformable_attention_3d
from occtk.kernels.cascade import CascadeSchedule, cascade_lift, run_cascade
from occtk.kernels.gradcheck import grad_check
from occtk.kernels.losses import focal_loss, l1_flow_loss
from occtk.kernels.projection import project_points, reference_points
from occtk.kernels.sampling import FeatureVolume, trilinear_sample, trilinear_sample_many

__all__ = [
    "CascadeSchedule", "DeformableAttention3DParams", "FeatureVolume", "batched_attention",
    "cascade_lift", "deformable_attention_3d", "focal_loss", "grad_check", "l1_flow_loss",
    "project_points", "reference_points", "run_cascade", "trilinear_sample", "trilinear_sample_many",
]
