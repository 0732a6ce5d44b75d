"""Cubical persistent homology and differentiable topological losses for 3D volumes.

Public surface: volume handling and masking (Volume3D, PatchMask, CropBox,
KeyPointSet and their operations), filtration and persistence
(build_filtration, compute_persistence, naive_persistence, betti_at,
euler_characteristic_at), exact diagram matching (w2_distance,
brute_force_w2), the differentiable topological loss (topo_loss, masked_mse),
and the composite pre-training objective (overall_loss and friends).
"""

__version__ = "0.1.0"

from .diagram import DIAGONAL, Matching, brute_force_w2, w2_distance
from .errors import (
    ConfigError,
    CubetopError,
    DimensionMismatchError,
    FormatError,
    InvalidRangeError,
    ShapeError,
    SizeLimitError,
)
from .filtration import (
    Cell,
    FiltrationOrder,
    PersistenceDiagram,
    PersistencePair,
    betti_at,
    build_filtration,
    compute_persistence,
    diagrams_to_json,
    euler_characteristic_at,
    naive_persistence,
    read_diagrams,
    write_diagrams,
)
from .loss import TopoLossResult, full_mse, masked_mse, topo_loss
from .pretrain import (
    LossBreakdown,
    LossWeights,
    overall_loss,
    rec_consistency,
    spatial_consistency,
    spatial_loss,
)
from .volume import (
    CropBox,
    KeyPointSet,
    PatchMask,
    Volume3D,
    apply_mask,
    clip_normalize,
    crop_keypoints,
    keypoints_to_json,
    make_mask,
    mask_to_json,
    read_ctvol,
    read_keypoints,
    read_mask,
    write_ctvol,
    write_keypoints,
    write_mask,
)

__all__ = [
    "__version__",
    "DIAGONAL",
    "Matching",
    "brute_force_w2",
    "w2_distance",
    "ConfigError",
    "CubetopError",
    "DimensionMismatchError",
    "FormatError",
    "InvalidRangeError",
    "ShapeError",
    "SizeLimitError",
    "Cell",
    "FiltrationOrder",
    "PersistenceDiagram",
    "PersistencePair",
    "betti_at",
    "build_filtration",
    "compute_persistence",
    "diagrams_to_json",
    "euler_characteristic_at",
    "naive_persistence",
    "read_diagrams",
    "write_diagrams",
    "TopoLossResult",
    "full_mse",
    "masked_mse",
    "topo_loss",
    "LossBreakdown",
    "LossWeights",
    "overall_loss",
    "rec_consistency",
    "spatial_consistency",
    "spatial_loss",
    "CropBox",
    "KeyPointSet",
    "PatchMask",
    "Volume3D",
    "apply_mask",
    "clip_normalize",
    "crop_keypoints",
    "keypoints_to_json",
    "make_mask",
    "mask_to_json",
    "read_ctvol",
    "read_keypoints",
    "read_mask",
    "write_ctvol",
    "write_keypoints",
    "write_mask",
]
