"""Hexahedral meshes carrying per-vertex stress tensors.

Covers the two text formats (regular cartesian grids and explicit
hexahedral meshes), face adjacency, the bucket-grid cell locator with its
relaxed in-out test, and tensor interpolation inside a cell.

Cell corner convention: corners 0..3 are the bottom face, counterclockwise
when viewed from the top, and corners 4..7 are the matching top face. The
loader checks this through the sign of the trilinear Jacobian and through
outward-pointing face normals rather than trusting the input.
"""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .tensor import StressTensor

logger = logging.getLogger("stresslines")

# Quads of cell-local corner ids, wound so the diagonal cross product
# points out of the cell.
FACE_CORNERS = np.array([
    (0, 3, 2, 1),   # bottom
    (4, 5, 6, 7),   # top
    (0, 1, 5, 4),   # front  (-y for the reference cube)
    (1, 2, 6, 5),   # right  (+x)
    (2, 3, 7, 6),   # back   (+y)
    (3, 0, 4, 7),   # left   (-x)
])
OPPOSITE_FACE = (1, 0, 4, 5, 2, 3)

_CELL_EDGES = np.array([
    (0, 1), (1, 2), (2, 3), (3, 0),
    (4, 5), (5, 6), (6, 7), (7, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
])

# Relaxed in-out bound: a point counts as inside a cell when, for every
# face, the vector from the face center to the point makes an angle of at
# least 89 degrees with the outward normal. The single degree of slack
# absorbs mildly non-planar faces.
_COS_RELAXED = math.cos(89.0 * math.pi / 180.0)

_IDW_SNAP_REL = 1e-12
_IDW_POWER = 2

# Corner offsets in (i, j, k) grid steps, matching the corner convention.
_CORNER_OFFSETS = np.array([
    (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
    (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
])


class MeshError(Exception):
    pass


class MeshParseError(MeshError):
    """Unreadable geometry or header; carries the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MeshSchemaError(MeshError):
    """Structurally well-formed input that violates the format contract."""


@dataclass(frozen=True)
class CartesianInfo:
    dims: tuple[int, int, int]          # vertex counts per axis
    origin: tuple[float, float, float]
    spacing: tuple[float, float, float]


@dataclass(eq=False)
class HexMesh:
    vertices: np.ndarray                 # (nv, 3)
    cells: np.ndarray                    # (nc, 8) vertex ids
    tensors: np.ndarray                  # (nv, 6)
    cartesian: Optional[CartesianInfo]
    face_adjacency: np.ndarray = field(init=False)   # (nc, 6), -1 = boundary
    boundary_faces: np.ndarray = field(init=False)   # (nb, 2) of (cell, face)
    bbox_min: np.ndarray = field(init=False)
    bbox_max: np.ndarray = field(init=False)
    d0: float = field(init=False)
    min_edge: float = field(init=False)
    loaded_vertices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    fixed_vertices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.cells = np.ascontiguousarray(self.cells, dtype=np.int64)
        self.tensors = np.ascontiguousarray(self.tensors, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshSchemaError("vertices must be (nv, 3)")
        if self.cells.ndim != 2 or self.cells.shape[1] != 8:
            raise MeshSchemaError("cells must be (nc, 8)")
        if self.tensors.shape != (len(self.vertices), 6):
            raise MeshSchemaError(
                f"need one 6-component tensor per vertex, got {self.tensors.shape}")
        if len(self.cells) == 0:
            raise MeshSchemaError("mesh has no cells")
        self._validate_cells()
        self._build_adjacency()
        self.bbox_min = self.vertices.min(axis=0)
        self.bbox_max = self.vertices.max(axis=0)
        self.d0 = float(np.min(self.bbox_max - self.bbox_min))
        if self.d0 <= 0:
            raise MeshSchemaError("mesh bounding box is degenerate")
        edges = self.vertices[self.cells[:, _CELL_EDGES]]  # (nc, 12, 2, 3)
        lengths = np.linalg.norm(edges[:, :, 1] - edges[:, :, 0], axis=2)
        self.min_edge = float(lengths.min())
        if self.min_edge <= 0:
            raise MeshSchemaError("mesh contains a zero-length cell edge")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def _validate_cells(self):
        nv = len(self.vertices)
        if self.cells.min() < 0 or self.cells.max() >= nv:
            bad = int(np.argmax(np.any((self.cells < 0) | (self.cells >= nv), axis=1)))
            raise MeshSchemaError(f"cell {bad} references a vertex out of range")
        sorted_corners = np.sort(self.cells, axis=1)
        dup = np.any(sorted_corners[:, 1:] == sorted_corners[:, :-1], axis=1)
        if dup.any():
            raise MeshSchemaError(f"cell {int(np.argmax(dup))} repeats a vertex")

        corners = self.vertices[self.cells]  # (nc, 8, 3)
        # Trilinear Jacobian at the cell center: columns are averaged edge
        # vectors along each local axis. Positive determinant means the
        # corner order is right-handed.
        cu = (corners[:, 1] - corners[:, 0] + corners[:, 2] - corners[:, 3]
              + corners[:, 5] - corners[:, 4] + corners[:, 6] - corners[:, 7]) / 4.0
        cv = (corners[:, 3] - corners[:, 0] + corners[:, 2] - corners[:, 1]
              + corners[:, 7] - corners[:, 4] + corners[:, 6] - corners[:, 5]) / 4.0
        cw = (corners[:, 4] - corners[:, 0] + corners[:, 5] - corners[:, 1]
              + corners[:, 6] - corners[:, 2] + corners[:, 7] - corners[:, 3]) / 4.0
        det = np.einsum("ij,ij->i", np.cross(cu, cv), cw)
        if np.any(det <= 0):
            raise MeshSchemaError(
                f"cell {int(np.argmax(det <= 0))} has a non-positive Jacobian; "
                "corner order must be bottom face counterclockwise, then top")

        centers, normals = _face_geometry(self.vertices, self.cells)
        centroid = corners.mean(axis=1)
        outward = np.einsum("ifj,ifj->if", normals, centers - centroid[:, None, :])
        if np.any(outward <= 0):
            bad = int(np.argmax(np.any(outward <= 0, axis=1)))
            raise MeshSchemaError(f"cell {bad} has an inward-pointing face normal")

    def _build_adjacency(self):
        nc = len(self.cells)
        faces = np.sort(self.cells[:, FACE_CORNERS].reshape(nc * 6, 4), axis=1)
        order = np.lexsort(faces.T[::-1])
        fs = faces[order]
        same = np.all(fs[1:] == fs[:-1], axis=1)
        if np.any(same[1:] & same[:-1]):
            raise MeshSchemaError("a face is shared by more than two cells")
        adj = np.full((nc, 6), -1, dtype=np.int64)
        a, b = order[:-1][same], order[1:][same]
        adj[a // 6, a % 6] = b // 6
        adj[b // 6, b % 6] = a // 6
        self.face_adjacency = adj
        cell_ids, face_ids = np.nonzero(adj == -1)
        self.boundary_faces = np.column_stack([cell_ids, face_ids])

    def boundary_vertex_ids(self) -> np.ndarray:
        cells, faces = self.boundary_faces[:, 0], self.boundary_faces[:, 1]
        verts = self.cells[cells[:, None], FACE_CORNERS[faces]]
        return np.unique(verts)

    @classmethod
    def from_cartesian(cls, dims, origin, spacing, tensors) -> "HexMesh":
        nx, ny, nz = (int(d) for d in dims)
        if min(nx, ny, nz) < 2:
            raise MeshSchemaError("cartesian grid needs at least 2 vertices per axis")
        if min(spacing) <= 0:
            raise MeshSchemaError("cartesian spacing must be positive")
        xs = origin[0] + spacing[0] * np.arange(nx)
        ys = origin[1] + spacing[1] * np.arange(ny)
        zs = origin[2] + spacing[2] * np.arange(nz)
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        # x fastest, then y, then z
        verts = np.column_stack([
            gx.transpose(2, 1, 0).ravel(),
            gy.transpose(2, 1, 0).ravel(),
            gz.transpose(2, 1, 0).ravel(),
        ])
        ci, cj, ck = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1),
                                 np.arange(nz - 1), indexing="ij")
        ci = ci.transpose(2, 1, 0).ravel()
        cj = cj.transpose(2, 1, 0).ravel()
        ck = ck.transpose(2, 1, 0).ravel()
        base = ci + nx * (cj + ny * ck)
        offs = _CORNER_OFFSETS
        cells = base[:, None] + (offs[:, 0] + nx * (offs[:, 1] + ny * offs[:, 2]))[None, :]
        info = CartesianInfo((nx, ny, nz), tuple(float(o) for o in origin),
                             tuple(float(s) for s in spacing))
        return cls(verts, cells, np.asarray(tensors, dtype=float), info)

    @classmethod
    def from_unstructured(cls, vertices, cells, tensors, loaded=(), fixed=()) -> "HexMesh":
        m = cls(np.asarray(vertices, float), np.asarray(cells), np.asarray(tensors, float), None)
        m.loaded_vertices = np.asarray(sorted(set(int(i) for i in loaded)), dtype=np.int64)
        m.fixed_vertices = np.asarray(sorted(set(int(i) for i in fixed)), dtype=np.int64)
        return m


def _face_geometry(vertices, cells):
    """Face centers and unit outward normals, normals from the two diagonals."""
    quads = vertices[cells[:, FACE_CORNERS]]      # (nc, 6, 4, 3)
    centers = quads.mean(axis=2)
    d1 = quads[:, :, 2] - quads[:, :, 0]
    d2 = quads[:, :, 3] - quads[:, :, 1]
    normals = np.cross(d1, d2)
    norms = np.linalg.norm(normals, axis=2, keepdims=True)
    if np.any(norms == 0):
        raise MeshSchemaError("a cell face collapses to a line")
    return centers, normals / norms


# ---------------------------------------------------------------------------
# text formats

def _reader_lines(source):
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    else:
        raise TypeError("mesh source must be bytes, str, or a readable stream")
    return text.splitlines()


def _tokenize(lines):
    """Yield (line_number, tokens) with comments and blanks removed.

    Lines of the form ``#!LOADED i j ...`` and ``#!FIXED i j ...`` are
    collected separately; every other ``#`` starts a plain comment.
    """
    loaded, fixed = [], []
    out = []
    for n, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if stripped.startswith("#!"):
            parts = stripped[2:].split()
            if parts and parts[0].upper() in ("LOADED", "FIXED"):
                try:
                    ids = [int(p) for p in parts[1:]]
                except ValueError:
                    raise MeshParseError("vertex ids in a marker line must be integers", n)
                (loaded if parts[0].upper() == "LOADED" else fixed).extend(ids)
                continue
        body = raw.split("#", 1)[0].strip()
        if body:
            out.append((n, body.split()))
    return out, loaded, fixed


def _floats(tokens, count, line, what):
    if len(tokens) != count:
        raise MeshParseError(f"expected {count} values for {what}, got {len(tokens)}", line)
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise MeshParseError(f"unreadable number in {what}", line)


def load_mesh(source, fmt: Optional[str] = None) -> HexMesh:
    """Parse a mesh from bytes, text, or a stream.

    ``fmt`` may be "cartesian" or "unstructured"; when given it must match
    the header keyword. UTF-8 text with '#' comments.
    """
    rows, loaded, fixed = _tokenize(_reader_lines(source))
    if not rows:
        raise MeshParseError("empty mesh file")
    line, head = rows[0]
    keyword = head[0].upper()
    if keyword == "CARTESIAN":
        kind = "cartesian"
    elif keyword == "HEX":
        kind = "unstructured"
    else:
        raise MeshParseError(f"unknown header keyword {head[0]!r}", line)
    if fmt is not None and fmt != kind:
        raise MeshParseError(f"format tag {fmt!r} does not match header {head[0]!r}", line)
    if kind == "cartesian":
        if loaded or fixed:
            raise MeshSchemaError("loaded/fixed markers are only valid for HEX meshes")
        return _load_cartesian(rows)
    return _load_unstructured(rows, loaded, fixed)


def _load_cartesian(rows) -> HexMesh:
    line, head = rows[0]
    if len(head) != 10:
        raise MeshParseError("header must be CARTESIAN nx ny nz ox oy oz sx sy sz", line)
    try:
        nx, ny, nz = (int(t) for t in head[1:4])
    except ValueError:
        raise MeshParseError("grid dimensions must be integers", line)
    origin = _floats(head[4:7], 3, line, "origin")
    spacing = _floats(head[7:10], 3, line, "spacing")
    if min(spacing) <= 0:
        raise MeshSchemaError("cartesian spacing must be positive")
    if min(nx, ny, nz) < 2:
        raise MeshSchemaError("cartesian grid needs at least 2 vertices per axis")
    nv = nx * ny * nz
    body = rows[1:]
    if len(body) < nv:
        raise MeshSchemaError(f"expected {nv} tensor lines, found {len(body)}")
    if len(body) > nv:
        raise MeshParseError("trailing data after tensor block", body[nv][0])
    tensors = np.empty((nv, 6))
    for i, (ln, toks) in enumerate(body):
        tensors[i] = _floats(toks, 6, ln, f"tensor {i}")
    return HexMesh.from_cartesian((nx, ny, nz), origin, spacing, tensors)


def _load_unstructured(rows, loaded, fixed) -> HexMesh:
    line, head = rows[0]
    if len(head) != 3:
        raise MeshParseError("header must be HEX nv nc", line)
    try:
        nv, nc = int(head[1]), int(head[2])
    except ValueError:
        raise MeshParseError("vertex and cell counts must be integers", line)
    if nv < 8 or nc < 1:
        raise MeshSchemaError("HEX mesh needs at least 8 vertices and 1 cell")
    body = rows[1:]
    if len(body) < 2 * nv + nc:
        raise MeshSchemaError(
            f"expected {nv} vertex, {nc} cell and {nv} tensor lines, found {len(body)}")
    if len(body) > 2 * nv + nc:
        raise MeshParseError("trailing data after tensor block", body[2 * nv + nc][0])

    verts = np.empty((nv, 3))
    for i, (ln, toks) in enumerate(body[:nv]):
        verts[i] = _floats(toks, 3, ln, f"vertex {i}")
    cells = np.empty((nc, 8), dtype=np.int64)
    for i, (ln, toks) in enumerate(body[nv:nv + nc]):
        if len(toks) != 8:
            raise MeshParseError(f"cell {i} must list 8 vertex indices, got {len(toks)}", ln)
        try:
            cells[i] = [int(t) for t in toks]
        except ValueError:
            raise MeshParseError(f"cell {i} has a non-integer vertex index", ln)
    tensors = np.empty((nv, 6))
    for i, (ln, toks) in enumerate(body[nv + nc:]):
        tensors[i] = _floats(toks, 6, ln, f"tensor {i}")
    for name, ids in (("LOADED", loaded), ("FIXED", fixed)):
        for i in ids:
            if not 0 <= i < nv:
                raise MeshSchemaError(f"{name} marker references vertex {i} out of range")
    return HexMesh.from_unstructured(verts, cells, tensors, loaded, fixed)


def load_mesh_path(path, fmt: Optional[str] = None) -> HexMesh:
    with open(path, "rb") as f:
        return load_mesh(f, fmt)


# ---------------------------------------------------------------------------
# point location

class CellLocator:
    """Two-step point location: a uniform bucket grid over cell bounding
    boxes narrows the search, then the relaxed face-angle test decides.

    Ties (points in the acceptance slab of several cells) resolve to the
    smallest cell id.
    """

    def __init__(self, mesh: HexMesh):
        self.mesh = mesh
        self.face_centers, self.face_normals = _face_geometry(mesh.vertices, mesh.cells)
        corners = mesh.vertices[mesh.cells]
        lo = corners.min(axis=1)
        hi = corners.max(axis=1)
        # The relaxed in-out test accepts points a little beyond a face
        # (up to about tan(1 deg) times the face diagonal), so each cell is
        # registered with a correspondingly inflated box.
        slack = 0.08 * (hi - lo).max(axis=1, keepdims=True)
        lo = lo - slack
        hi = hi + slack
        mean_ext = (hi - lo).mean(axis=0)
        # Bucket edge at ~0.8 mean cell extent keeps candidate lists short
        # (about six cells per query on uniform meshes).
        pad = mean_ext.copy()
        self.grid_min = mesh.bbox_min - pad
        grid_max = mesh.bbox_max + pad
        ext = grid_max - self.grid_min
        self.counts = np.maximum(1, np.ceil(ext / (0.8 * mean_ext)).astype(int))
        self.bucket_size = ext / self.counts
        nxy = int(self.counts[0] * self.counts[1])
        keys_lo = np.clip(self._bucket_of(lo), 0, self.counts - 1)
        keys_hi = np.clip(self._bucket_of(hi), 0, self.counts - 1)
        buckets: dict[int, list[int]] = {}
        for cid in range(len(mesh.cells)):
            (i0, j0, k0), (i1, j1, k1) = keys_lo[cid], keys_hi[cid]
            for k in range(k0, k1 + 1):
                for j in range(j0, j1 + 1):
                    base = int(self.counts[0]) * (j + int(self.counts[1]) * k)
                    for i in range(i0, i1 + 1):
                        buckets.setdefault(i + base, []).append(cid)
        self._nxy = nxy
        self.buckets = {key: np.asarray(ids, dtype=np.int64)
                        for key, ids in buckets.items()}
        logger.debug("locator: %d buckets over %s for %d cells",
                     len(self.buckets), tuple(self.counts), len(mesh.cells))

    def _bucket_of(self, pts):
        idx = np.floor((np.atleast_2d(pts) - self.grid_min) / self.bucket_size).astype(int)
        return idx if pts.ndim > 1 else idx[0]

    def candidates(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        rel = (p - self.grid_min) / self.bucket_size
        if np.any(rel < 0) or np.any(rel >= self.counts):
            return np.empty(0, dtype=np.int64)
        i, j, k = np.floor(rel).astype(int)
        key = i + int(self.counts[0]) * (j + int(self.counts[1]) * k)
        return self.buckets.get(key, np.empty(0, dtype=np.int64))

    def inside(self, point, cell_ids) -> np.ndarray:
        """Relaxed in-out test for one point against several cells."""
        p = np.asarray(point, dtype=float)
        diff = p - self.face_centers[cell_ids]          # (k, 6, 3)
        dots = np.einsum("kfj,kfj->kf", diff, self.face_normals[cell_ids])
        slack = np.linalg.norm(diff, axis=2) * _COS_RELAXED
        return np.all(dots <= slack, axis=1)

    def locate(self, point) -> Optional[int]:
        cand = self.candidates(point)
        if len(cand) == 0:
            return None
        cand = np.sort(cand)
        ok = self.inside(point, cand)
        hits = np.nonzero(ok)[0]
        if len(hits) == 0:
            return None
        return int(cand[hits[0]])


def build_locator(mesh: HexMesh) -> CellLocator:
    return CellLocator(mesh)


def locate_cell(locator: CellLocator, point) -> Optional[int]:
    return locator.locate(point)


# ---------------------------------------------------------------------------
# interpolation

def _interp6(mesh: HexMesh, cell: int, point) -> np.ndarray:
    if not 0 <= cell < len(mesh.cells):
        raise ValueError(f"cell id {cell} out of range")
    p = np.asarray(point, dtype=float)
    corner_ids = mesh.cells[cell]
    if mesh.cartesian is not None:
        nx, ny, _ = mesh.cartesian.dims
        ncx, ncy = nx - 1, ny - 1
        ck, rem = divmod(cell, ncx * ncy)
        cj, ci = divmod(rem, ncx)
        org = np.asarray(mesh.cartesian.origin)
        sp = np.asarray(mesh.cartesian.spacing)
        u = (p - org) / sp - (ci, cj, ck)
        wx = np.where(_CORNER_OFFSETS[:, 0] == 1, u[0], 1.0 - u[0])
        wy = np.where(_CORNER_OFFSETS[:, 1] == 1, u[1], 1.0 - u[1])
        wz = np.where(_CORNER_OFFSETS[:, 2] == 1, u[2], 1.0 - u[2])
        w = wx * wy * wz
    else:
        w = _idw_weights(mesh.vertices[corner_ids], p, mesh.d0)
    return w @ mesh.tensors[corner_ids]


def _idw_weights(corners: np.ndarray, point: np.ndarray, d0: float) -> np.ndarray:
    """Inverse-distance weights over the 8 corners, snapping to an exact
    corner hit so the field stays interpolating there."""
    d = np.linalg.norm(corners - point, axis=1)
    snap = d < _IDW_SNAP_REL * d0
    if snap.any():
        w = np.zeros(len(corners))
        w[int(np.argmax(snap))] = 1.0
        return w
    w = d ** (-float(_IDW_POWER))
    return w / w.sum()


def interpolate_tensor(mesh: HexMesh, cell: int, point) -> StressTensor:
    """Tensor at a point inside ``cell``: component-wise trilinear on
    cartesian meshes, inverse-distance weighting over the corners otherwise.
    """
    return StressTensor(*_interp6(mesh, cell, point))
