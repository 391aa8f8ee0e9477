"""Discrete skeletons and skeleton sparsification scale-spaces for binary shapes."""
from .distfield import SquaredDistanceField, compute_edt, disk_covers, disk_offsets, render_distance
from .errors import DomainError, ParseError, SkelscaleError
from .medialaxis import (
    Arc,
    PointClass,
    Skeleton,
    classify_point,
    decompose_arcs,
    detect_maximal_disk,
    dump_skeleton,
    is_removal_homotopic,
    maximal_disk_mask,
    parse_skeleton,
    skeletonize,
)
from .metrics import ScaleMetrics, complexity, diameter, minimality, reconstruction_error, topology
from .pixelgrid import BinaryImage, GridTransform, Point, apply_transform, load_pbm, save_pbm
from .reconstruct import (
    CoverageMap,
    add_point,
    build_coverage,
    reconstruct,
    remove_point,
    render_overlap,
    set_impact,
    unique_impact,
)
from .scalespace import (
    ScaleSpacePath,
    ScaleState,
    branch_pruning_path,
    compression_path,
    densify_compression_order,
    dump_path,
    evolve,
    parse_path,
    random_path,
    stiffness_path,
    validate_path,
)

__version__ = "0.1.0"
