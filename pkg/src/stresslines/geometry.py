"""Tube geometry and silhouette math for rendering PSLs.

Each polyline point gets a right-handed frame (n, b, t): t is the unit
tangent from central differences, n follows the projection of a chosen
principal direction into the section plane (falling back to parallel
transport where the two are nearly parallel), and b = t x n.  Lines of
the major and minor type orient their sections with the medium
direction; medium lines use the major direction, so ribbons twist with
the stress field instead of an arbitrary reference.

The swept section is the ellipse p(phi) = x + r (w cos(phi) n +
sin(phi) b), a circle for w = 1 and a ribbon as w shrinks.  For shading
we need how close a surface point is to the view silhouette of its
section.  In section coordinates (offsets along n and b over r) the
ellipse is the conic x^2/w^2 + y^2 = 1 and both silhouette points for a
camera c are found exactly: the polar line of c meets the conic where
the rank-1 split of the degenerate conic says it does, no iteration
involved.  ``silhouette_position`` then maps any section point to
[0, 1], hitting 1 exactly on the silhouette.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .tracer import PSL

_ALIGNMENT_ROW = {"major": 1, "medium": 0, "minor": 1}
_PARALLEL_TOL = 1e-8

TUBE_SIDES = 16
RIBBON_SIDES = 24
MIN_RIBBON_WIDTH = 0.15


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _tangents(points: np.ndarray) -> np.ndarray:
    n = len(points)
    t = np.empty_like(points)
    t[0] = points[1] - points[0]
    t[-1] = points[-1] - points[-2]
    if n > 2:
        t[1:-1] = points[2:] - points[:-2]
    norms = np.linalg.norm(t, axis=1)
    if np.any(norms == 0):
        raise ValueError("polyline contains coincident neighbouring points")
    return t / norms[:, None]


def frames_for(points: np.ndarray, align: np.ndarray) -> np.ndarray:
    """Orthonormal frames along a polyline, shape (n, 3, 3).

    Row layout per point is (n, b, t).  ``align`` supplies the vector
    whose in-plane projection defines n; consecutive normals are kept on
    the same side of the curve by sign alignment.
    """
    points = np.asarray(points, dtype=float)
    align = np.asarray(align, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3 or len(points) < 2:
        raise ValueError("need at least two 3d points")
    if align.shape != points.shape:
        raise ValueError("alignment field must match the points")
    tangents = _tangents(points)
    out = np.empty((len(points), 3, 3))
    prev_n = None
    for i, (t, a) in enumerate(zip(tangents, align)):
        proj = a - (a @ t) * t
        if np.linalg.norm(proj) < _PARALLEL_TOL:
            if prev_n is not None:
                proj = prev_n - (prev_n @ t) * t
            if prev_n is None or np.linalg.norm(proj) < _PARALLEL_TOL:
                # align is along the tangent and there is no history to
                # transport: start from the least aligned axis
                axis = np.zeros(3)
                axis[int(np.argmin(np.abs(t)))] = 1.0
                proj = axis - (axis @ t) * t
        n = _unit(proj)
        if prev_n is not None and n @ prev_n < 0:
            n = -n
        b = np.cross(t, n)
        out[i, 0] = n
        out[i, 1] = b
        out[i, 2] = t
        prev_n = n
    return out


def compute_frames(psl: PSL) -> np.ndarray | None:
    """Frames for a traced line, or None when it has a single point."""
    if len(psl) < 2:
        return None
    row = _ALIGNMENT_ROW[psl.psl_type]
    return frames_for(psl.points, psl.eigvecs[:, row, :])


class TubeMesh(NamedTuple):
    vertices: np.ndarray   # (v, 3) float
    normals: np.ndarray    # (v, 3) float, unit
    triangles: np.ndarray  # (f, 3) int32


def tessellate_tube(
    points: np.ndarray,
    frames: np.ndarray,
    radius: float,
    width: float = 1.0,
    sides: int = TUBE_SIDES,
) -> TubeMesh:
    """Closed triangle mesh sweeping an ellipse along the polyline.

    Section points sit at x + r (w cos(phi) n + sin(phi) b); their
    normals follow the ellipse gradient (cos(phi)/w, sin(phi)) in frame
    coordinates, so circular tubes get radial normals and ribbons
    flatten correctly.  Both ends are closed with flat fans whose ring
    vertices are duplicated to keep the cap normal crisp.
    """
    points = np.asarray(points, dtype=float)
    frames = np.asarray(frames, dtype=float)
    npts = len(points)
    if npts < 2:
        raise ValueError("a tube needs at least two points")
    if frames.shape != (npts, 3, 3):
        raise ValueError("frames must be (n, 3, 3) matching the points")
    if not radius > 0:
        raise ValueError("radius must be positive")
    if not width > 0:
        raise ValueError("width must be positive")
    if sides < 3:
        raise ValueError("sides must be at least 3")

    phi = 2.0 * math.pi * np.arange(sides) / sides
    cosp, sinp = np.cos(phi), np.sin(phi)
    nvec, bvec, tvec = frames[:, 0], frames[:, 1], frames[:, 2]

    ring_off = (width * np.einsum("j,ik->ijk", cosp, nvec)
                + np.einsum("j,ik->ijk", sinp, bvec))          # (npts, sides, 3)
    verts = points[:, None, :] + radius * ring_off
    grad = (np.einsum("j,ik->ijk", cosp / width, nvec)
            + np.einsum("j,ik->ijk", sinp, bvec))
    normals = grad / np.linalg.norm(grad, axis=2, keepdims=True)

    side_v = verts.reshape(-1, 3)
    side_n = normals.reshape(-1, 3)

    tris = []
    for i in range(npts - 1):
        base, nxt = i * sides, (i + 1) * sides
        for j in range(sides):
            j1 = (j + 1) % sides
            a, b, c, d = base + j, base + j1, nxt + j1, nxt + j
            tris.append((a, b, c))
            tris.append((a, c, d))

    cap_v = [side_v]
    cap_n = [side_n]
    offset = npts * sides
    for end, sign in ((0, -1.0), (npts - 1, 1.0)):
        centre = points[end]
        axis = sign * tvec[end]
        ring = verts[end]
        cid = offset
        cap_v.append(np.concatenate([[centre], ring]))
        cap_n.append(np.tile(axis, (sides + 1, 1)))
        for j in range(sides):
            j1 = (j + 1) % sides
            if sign < 0:
                tris.append((cid, cid + 1 + j1, cid + 1 + j))
            else:
                tris.append((cid, cid + 1 + j, cid + 1 + j1))
        offset += sides + 1

    return TubeMesh(
        vertices=np.concatenate(cap_v),
        normals=np.concatenate(cap_n),
        triangles=np.asarray(tris, dtype=np.int32),
    )


def project_camera(
    camera: np.ndarray, x: np.ndarray, frame: np.ndarray, radius: float
) -> np.ndarray:
    """Camera position in section coordinates of the frame at x.

    Offsets along n and b are divided by the tube radius, putting the
    swept ellipse at x^2/w^2 + y^2 = 1 regardless of scale.
    """
    d = np.asarray(camera, dtype=float) - np.asarray(x, dtype=float)
    return np.array([d @ frame[0], d @ frame[1]]) / radius


def _cross_matrix(l: np.ndarray) -> np.ndarray:
    return np.array([
        [0.0, l[2], -l[1]],
        [-l[2], 0.0, l[0]],
        [l[1], -l[0], 0.0],
    ])


def _polar_line(c: np.ndarray, width: float) -> np.ndarray:
    return np.array([c[0] / width**2, c[1], -1.0])


def _require_outside(c: np.ndarray, width: float) -> None:
    if not (c[0] / width) ** 2 + c[1] ** 2 > 1.0:
        raise ValueError("camera must lie strictly outside the section ellipse")


def silhouette_tangent_points(c, width: float = 1.0) -> np.ndarray:
    """Both silhouette points of the section ellipse, shape (2, 2).

    ``c`` is the camera in section coordinates.  The points are where
    the polar line of c meets the conic diag(1/w^2, 1, -1); the line
    and conic are intersected exactly by splitting the degenerate conic
    M_l^T A M_l + alpha M_l into its rank-1 form.  Rows are sorted
    lexicographically so the result is deterministic.
    """
    c = np.asarray(c, dtype=float)
    _require_outside(c, width)
    A = np.diag([1.0 / width**2, 1.0, -1.0])
    l = _polar_line(c, width)
    M = _cross_matrix(l)
    B = M.T @ A @ M
    tau = int(np.argmax(np.abs(l)))
    keep = [k for k in range(3) if k != tau]
    minor = B[np.ix_(keep, keep)]
    disc = -(minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    alpha = math.sqrt(max(disc, 0.0)) / l[tau]
    C = B + alpha * M
    i, j = np.unravel_index(np.argmax(np.abs(C)), C.shape)
    p = C[i, :]
    q = C[:, j]
    pts = sorted((tuple(p[:2] / p[2]), tuple(q[:2] / q[2])))
    return np.asarray(pts)


def silhouette_position(p, c, width: float = 1.0) -> float:
    """How close a section point sits to the silhouette, in [0, 1].

    The point is projected from the camera onto the chord between the
    two silhouette points; the result is 1 at either silhouette point
    and 0 where the view ray crosses the middle of the chord.  Rays
    parallel to the chord never cross it and clamp to 1.
    """
    p = np.asarray(p, dtype=float)
    c = np.asarray(c, dtype=float)
    scale = max(1.0, float(np.linalg.norm(c)))
    if np.linalg.norm(p - c) < 1e-12 * scale:
        raise ValueError("section point coincides with the camera")
    t1, t2 = silhouette_tangent_points(c, width)
    l = _polar_line(c, width)
    join = np.cross(np.array([c[0], c[1], 1.0]), np.array([p[0], p[1], 1.0]))
    meet = np.cross(l, join)
    if abs(meet[2]) <= 1e-14 * max(np.abs(meet[:2]).max(), 1.0):
        return 1.0
    hit = meet[:2] / meet[2]
    s = np.linalg.norm(hit - t1) / np.linalg.norm(t2 - t1)
    return min(abs(2.0 * s - 1.0), 1.0)
