"""Principal stress line extraction from hexahedral stress fields."""

from .exchange import EXCHANGE_VERSION, build_document, parse_document, to_bytes
from .geometry import (
    compute_frames,
    frames_for,
    silhouette_position,
    silhouette_tangent_points,
    tessellate_tube,
)
from .mesh import (
    CellLocator,
    HexMesh,
    MeshError,
    MeshParseError,
    MeshSchemaError,
    build_locator,
    interpolate_tensor,
    load_mesh,
    load_mesh_path,
)
from .seeding import (
    PSLSet,
    STRATEGIES,
    SeedingConfig,
    candidate_points,
    run_seeding,
    spacing_violations,
)
from .service import ExtractionService, MAX_FRAME, pack_frame
from .tensor import (
    DEG_THRESHOLD,
    PrincipalDecomposition,
    SCALAR_SELECTORS,
    StressTensor,
    decompose,
    degeneracy,
    is_near_degenerate,
    scalar_field,
    von_mises,
)
from .tracer import PSL, PSL_TYPES, TraceConfig, trace_psl

__version__ = "0.1.0"

__all__ = [
    "CellLocator",
    "DEG_THRESHOLD",
    "EXCHANGE_VERSION",
    "ExtractionService",
    "HexMesh",
    "MAX_FRAME",
    "MeshError",
    "MeshParseError",
    "MeshSchemaError",
    "PSL",
    "PSL_TYPES",
    "PSLSet",
    "PrincipalDecomposition",
    "SCALAR_SELECTORS",
    "STRATEGIES",
    "SeedingConfig",
    "StressTensor",
    "TraceConfig",
    "build_document",
    "build_locator",
    "candidate_points",
    "compute_frames",
    "decompose",
    "degeneracy",
    "frames_for",
    "interpolate_tensor",
    "is_near_degenerate",
    "load_mesh",
    "load_mesh_path",
    "pack_frame",
    "parse_document",
    "run_seeding",
    "scalar_field",
    "silhouette_position",
    "silhouette_tangent_points",
    "spacing_violations",
    "tessellate_tube",
    "to_bytes",
    "trace_psl",
    "von_mises",
]
