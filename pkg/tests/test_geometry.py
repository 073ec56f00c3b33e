import math
import time

import numpy as np
import pytest

from stresslines.geometry import (
    TubeMesh,
    compute_frames,
    frames_for,
    project_camera,
    silhouette_position,
    silhouette_tangent_points,
    tessellate_tube,
)
from stresslines.mesh import build_locator
from stresslines.tracer import TraceConfig, trace_psl

from fields import cart_mesh, constant_field

DIAG = constant_field((3.0, 2.0, 1.0, 0.0, 0.0, 0.0))


# ---------------------------------------------------------------- oracle

def oracle_silhouette(c, width, samples=4096, iters=80):
    """Silhouette points by sign-change search plus bisection.

    A point p(phi) on the ellipse is on the silhouette iff the view ray
    from the camera is parallel to the curve tangent there, i.e. the 2d
    cross product of (p - c) and dp/dphi vanishes.
    """
    def f(phi):
        px, py = width * np.cos(phi), np.sin(phi)
        dx, dy = -width * np.sin(phi), np.cos(phi)
        return (px - c[0]) * dy - (py - c[1]) * dx

    phis = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    vals = f(phis)
    roots = []
    for i in range(samples):
        a, b = phis[i], phis[i] + 2.0 * math.pi / samples
        fa, fb = vals[i], vals[(i + 1) % samples]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb >= 0.0:
            continue
        for _ in range(iters):
            m = 0.5 * (a + b)
            fm = f(m)
            if fa * fm <= 0.0:
                b = m
            else:
                a, fa = m, fm
        roots.append(0.5 * (a + b))
    pts = sorted((width * math.cos(r), math.sin(r)) for r in roots)
    return np.asarray(pts)


def test_silhouette_matches_circle_analytically():
    pts = silhouette_tangent_points((2.0, 0.0), width=1.0)
    expect = np.array([[0.5, -math.sqrt(3) / 2], [0.5, math.sqrt(3) / 2]])
    assert np.allclose(pts, expect, atol=1e-12)
    # tangency points of a unit circle satisfy <p, c> = 1
    for p in silhouette_tangent_points((1.3, -2.1), width=1.0):
        assert abs(p @ np.array([1.3, -2.1]) - 1.0) < 1e-12
        assert abs(np.linalg.norm(p) - 1.0) < 1e-12


def test_silhouette_matches_bisection_oracle():
    rng = np.random.default_rng(617)
    cases = []
    for _ in range(500):
        width = rng.uniform(0.15, 1.0)
        while True:
            c = rng.uniform(-6.0, 6.0, size=2) * np.array([1.0, rng.uniform(0.2, 1.0)])
            if (c[0] / width) ** 2 + c[1] ** 2 > 1.2:
                break
        cases.append((c, width))
    spent = 0.0
    for c, width in cases:
        start = time.perf_counter()
        got = silhouette_tangent_points(c, width)
        spent += time.perf_counter() - start
        want = oracle_silhouette(c, width)
        assert want.shape == (2, 2)
        assert np.max(np.abs(got - want)) < 1e-5
    assert spent < 1.0


def test_silhouette_rejects_inside_camera():
    with pytest.raises(ValueError):
        silhouette_tangent_points((0.3, 0.2), width=1.0)
    with pytest.raises(ValueError):
        silhouette_tangent_points((1.0, 0.0), width=1.0)   # on the rim
    with pytest.raises(ValueError):
        silhouette_tangent_points((0.1, 0.5), width=0.3)


def test_silhouette_position_circle_geometry():
    c = (2.0, 0.0)
    for p in silhouette_tangent_points(c, 1.0):
        assert silhouette_position(p, c, 1.0) == pytest.approx(1.0, abs=1e-9)
    # the view ray through either axis point crosses the chord centre
    assert silhouette_position((1.0, 0.0), c, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert silhouette_position((-1.0, 0.0), c, 1.0) == pytest.approx(0.0, abs=1e-12)
    # walking the front arc towards the tangency the measure rises to 1
    phis = np.linspace(0.0, math.pi / 3, 50)
    vals = [silhouette_position((math.cos(f), math.sin(f)), c, 1.0) for f in phis]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(1.0, abs=1e-9)


def test_silhouette_position_edge_cases():
    c = (2.0, 0.0)
    # ray parallel to the silhouette chord clamps to 1
    assert silhouette_position((2.0, 1.0), c, 1.0) == 1.0
    with pytest.raises(ValueError):
        silhouette_position((2.0, 0.0), c, 1.0)
    # positions stay bounded for a thin ribbon seen almost edge on
    for phi in np.linspace(0, 2 * math.pi, 37):
        v = silhouette_position((0.2 * math.cos(phi), math.sin(phi)), (5.0, 0.01), 0.2)
        assert 0.0 <= v <= 1.0


# ---------------------------------------------------------------- frames

def test_frames_straight_line():
    pts = np.column_stack([np.linspace(0, 1, 11), np.zeros(11), np.zeros(11)])
    align = np.tile([0.0, 1.0, 0.0], (11, 1))
    fr = frames_for(pts, align)
    assert np.allclose(fr[:, 0], [0, 1, 0])
    assert np.allclose(fr[:, 1], [0, 0, 1])
    assert np.allclose(fr[:, 2], [1, 0, 0])


def test_frames_follow_twisting_alignment():
    n = 60
    pts = np.column_stack([np.linspace(0, 1, n), np.zeros(n), np.zeros(n)])
    theta = np.linspace(0.0, 2.0, n)
    align = np.column_stack([np.zeros(n), np.cos(theta), np.sin(theta)])
    fr = frames_for(pts, align)
    assert np.allclose(fr[:, 0], align, atol=1e-12)
    assert np.allclose(fr[:, 1], np.column_stack(
        [np.zeros(n), -np.sin(theta), np.cos(theta)]), atol=1e-12)


def test_frames_orthonormal_right_handed_on_curve():
    s = np.linspace(0, 2 * math.pi, 80)
    pts = np.column_stack([np.cos(s), np.sin(s), 0.1 * s])
    align = np.tile([0.0, 0.0, 1.0], (80, 1))
    fr = frames_for(pts, align)
    for f in fr:
        assert np.allclose(f @ f.T, np.eye(3), atol=1e-12)
        assert np.allclose(np.cross(f[0], f[1]), f[2], atol=1e-12)
    # normals never flip side between neighbours
    dots = np.einsum("ij,ij->i", fr[:-1, 0], fr[1:, 0])
    assert np.all(dots > 0.5)


def test_frames_parallel_transport_fallback():
    n = 12
    pts = np.column_stack([np.linspace(0, 1, n), np.zeros(n), np.zeros(n)])
    align = np.tile([1.0, 0.0, 0.0], (n, 1))   # parallel to the tangent
    fr = frames_for(pts, align)
    assert not np.any(np.isnan(fr))
    assert np.allclose(fr[:, 0], fr[0, 0])
    assert np.allclose(np.linalg.norm(fr[:, 0], axis=1), 1.0)


def test_frames_sign_alignment():
    n = 9
    pts = np.column_stack([np.linspace(0, 1, n), np.zeros(n), np.zeros(n)])
    align = np.tile([0.0, 1.0, 0.0], (n, 1))
    align[1::2, 1] = -1.0   # flips every other point
    fr = frames_for(pts, align)
    assert np.allclose(fr[:, 0], [0, 1, 0])


def test_frames_input_validation():
    with pytest.raises(ValueError):
        frames_for(np.zeros((1, 3)), np.zeros((1, 3)))
    with pytest.raises(ValueError):
        frames_for(np.zeros((4, 3)), np.zeros((3, 3)))
    pts = np.zeros((3, 3))
    pts[2] = (1, 0, 0)      # first two points coincide
    with pytest.raises(ValueError):
        frames_for(pts, np.tile([0.0, 1.0, 0.0], (3, 1)))


@pytest.fixture(scope="module")
def traced_major():
    mesh = cart_mesh(DIAG, dims=(5, 5, 5))
    loc = build_locator(mesh)
    cfg = TraceConfig.for_mesh(mesh)
    return (trace_psl(mesh, loc, (0.5, 0.5, 0.5), "major", cfg),
            trace_psl(mesh, loc, (0.5, 0.5, 0.5), "medium", cfg),
            trace_psl(mesh, loc, (0.5, 0.5, 0.5), "major", TraceConfig(delta=0.8)))


def test_compute_frames_uses_cross_type_alignment(traced_major):
    major, medium, stub = traced_major
    fr = compute_frames(major)
    # major lines align their sections with the medium direction (y here)
    assert np.allclose(fr[:, 0], [0, 1, 0], atol=1e-9)
    fr = compute_frames(medium)
    # medium lines align with the major direction (x)
    assert np.allclose(fr[:, 0], [1, 0, 0], atol=1e-9)
    assert len(stub) == 1
    assert compute_frames(stub) is None


# ---------------------------------------------------------------- tubes

def straight_tube(n=5, radius=0.1, width=0.5, sides=8):
    pts = np.column_stack([np.linspace(0, 1, n), np.zeros(n), np.zeros(n)])
    align = np.tile([0.0, 1.0, 0.0], (n, 1))
    return pts, tessellate_tube(pts, frames_for(pts, align), radius, width, sides)


def test_tube_ring_positions_exact():
    n, r, w, s = 5, 0.1, 0.5, 8
    pts, tube = straight_tube(n, r, w, s)
    phi = 2 * math.pi * np.arange(s) / s
    for i in range(n):
        ring = tube.vertices[i * s:(i + 1) * s]
        expect = np.column_stack([
            np.full(s, pts[i, 0]),
            r * w * np.cos(phi),
            r * np.sin(phi),
        ])
        assert np.allclose(ring, expect, atol=1e-12)
    # section extents follow the half-axes
    assert tube.vertices[:, 1].max() == pytest.approx(r * w)
    assert tube.vertices[:, 2].max() == pytest.approx(r)


def test_tube_normals_are_ellipse_gradients():
    _, tube = straight_tube(sides=16)
    s = 16
    assert np.allclose(np.linalg.norm(tube.normals, axis=1), 1.0)
    phi = 2 * math.pi * np.arange(s) / s
    grad = np.column_stack([np.zeros(s), np.cos(phi) / 0.5, np.sin(phi)])
    grad /= np.linalg.norm(grad, axis=1, keepdims=True)
    for i in range(5):
        assert np.allclose(tube.normals[i * s:(i + 1) * s], grad, atol=1e-12)
    # side normals are perpendicular to the axis, caps point along it
    side = tube.normals[:5 * s]
    assert np.max(np.abs(side[:, 0])) < 1e-12
    start_cap = tube.normals[5 * s: 6 * s + 1]
    end_cap = tube.normals[6 * s + 1:]
    assert np.allclose(start_cap, [-1, 0, 0])
    assert np.allclose(end_cap, [1, 0, 0])


def test_tube_circular_normals_radial():
    n = 4
    pts = np.column_stack([np.linspace(0, 1, n), np.zeros(n), np.zeros(n)])
    align = np.tile([0.0, 1.0, 0.0], (n, 1))
    tube = tessellate_tube(pts, frames_for(pts, align), 0.2, width=1.0, sides=12)
    for i in range(n):
        ring = tube.vertices[i * 12:(i + 1) * 12]
        radial = ring - pts[i]
        radial /= np.linalg.norm(radial, axis=1, keepdims=True)
        assert np.allclose(tube.normals[i * 12:(i + 1) * 12], radial, atol=1e-12)


def euler_characteristic(tube: TubeMesh):
    _, inv = np.unique(np.round(tube.vertices, 9), axis=0, return_inverse=True)
    tris = inv[tube.triangles]
    assert np.all(tris[:, 0] != tris[:, 1])
    assert np.all(tris[:, 1] != tris[:, 2])
    assert np.all(tris[:, 0] != tris[:, 2])
    edges = {}
    for a, b, c in tris:
        for u, v in ((a, b), (b, c), (c, a)):
            edges[(min(u, v), max(u, v))] = edges.get((min(u, v), max(u, v)), 0) + 1
    assert set(edges.values()) == {2}, "every edge must be shared by two faces"
    nv = int(inv.max()) + 1
    return nv - len(edges) + len(tris)


def test_tube_is_closed_manifold():
    for n, sides in ((2, 3), (5, 8), (9, 16)):
        _, tube = straight_tube(n=n, sides=sides)
        assert euler_characteristic(tube) == 2
        assert len(tube.triangles) == 2 * sides * (n - 1) + 2 * sides


def test_tube_triangles_face_outward():
    _, tube = straight_tube(n=6, sides=12)
    v, nrm, tris = tube
    a, b, c = v[tris[:, 0]], v[tris[:, 1]], v[tris[:, 2]]
    face_n = np.cross(b - a, c - a)
    avg_n = nrm[tris[:, 0]] + nrm[tris[:, 1]] + nrm[tris[:, 2]]
    dots = np.einsum("ij,ij->i", face_n, avg_n)
    assert np.all(dots > 0)


def test_tube_input_validation():
    pts, tube = straight_tube()
    fr = frames_for(pts, np.tile([0.0, 1.0, 0.0], (len(pts), 1)))
    with pytest.raises(ValueError):
        tessellate_tube(pts[:1], fr[:1], 0.1)
    with pytest.raises(ValueError):
        tessellate_tube(pts, fr[:-1], 0.1)
    with pytest.raises(ValueError):
        tessellate_tube(pts, fr, 0.0)
    with pytest.raises(ValueError):
        tessellate_tube(pts, fr, 0.1, width=0.0)
    with pytest.raises(ValueError):
        tessellate_tube(pts, fr, 0.1, sides=2)


def test_project_camera_round_trip():
    frame = np.eye(3)[[1, 2, 0]]   # n=y, b=z, t=x
    x = np.array([0.3, 0.0, 0.0])
    cam = x + 0.25 * (2.0 * frame[0] - 1.5 * frame[1])
    c = project_camera(cam, x, frame, 0.25)
    assert np.allclose(c, [2.0, -1.5])
    # silhouette points map back onto the tube surface scale
    pts = silhouette_tangent_points(c, width=0.5)
    assert pts.shape == (2, 2)
