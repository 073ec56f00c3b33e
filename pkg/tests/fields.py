"""Synthetic stress fields and mesh builders shared by the test modules.

Field functions take an (n, 3) array of positions and return (n, 6)
component arrays in (sxx, syy, szz, txy, tyz, txz) order.
"""
import numpy as np

from stresslines.mesh import HexMesh


def constant_field(components):
    t = np.asarray(components, dtype=float)

    def fn(pts):
        return np.tile(t, (len(pts), 1))
    return fn


def bending_field(pts):
    """End-loaded beam along x on the unit cube, neutral plane y = 0.5."""
    x, y = pts[:, 0], pts[:, 1]
    yc = y - 0.5
    out = np.zeros((len(pts), 6))
    out[:, 0] = 6.0 * (1.0 - x) * yc
    out[:, 3] = -3.0 * (0.25 - yc ** 2)
    return out


def rotor_field(pts):
    """Every component linear in position; principal directions curve."""
    x, y = pts[:, 0], pts[:, 1]
    out = np.empty((len(pts), 6))
    out[:, 0] = 2.0 + 0.4 * y
    out[:, 1] = 1.0 + 0.3 * x
    out[:, 2] = -0.5 + 0.1 * x + 0.1 * y
    out[:, 3] = 0.5 * x - 0.25 * y
    out[:, 4] = 0.2 * x
    out[:, 5] = 0.15 * y
    return out


def ring_field(pts):
    """Smallest principal direction circles the axis x = y = 0.5."""
    dx = pts[:, 0] - 0.5
    dy = pts[:, 1] - 0.5
    r = np.maximum(np.hypot(dx, dy), 1e-9)
    ux, uy = dx / r, dy / r
    out = np.zeros((len(pts), 6))
    out[:, 0] = ux * ux - 2.0 * uy * uy
    out[:, 1] = uy * uy - 2.0 * ux * ux
    out[:, 2] = 0.5
    out[:, 3] = 3.0 * ux * uy
    return out


def hydro_split_field(pts):
    """Almost hydrostatic; the tiny deviator swaps axes at x = 0.5, so the
    major direction flips by 90 degrees across the plane while every
    principal pair stays far below the degeneracy threshold."""
    eta = 1e-8
    right = pts[:, 0] >= 0.5
    out = np.zeros((len(pts), 6))
    out[:, 0] = 1.0 + np.where(right, 0.0, eta)
    out[:, 1] = 1.0 + np.where(right, eta, 0.0)
    out[:, 2] = 1.0 - eta
    return out


def grid_points(dims, origin=(0.0, 0.0, 0.0), spacing=None):
    """Vertex positions in file order: x fastest, then y, then z."""
    nx, ny, nz = dims
    if spacing is None:
        spacing = tuple(1.0 / (d - 1) for d in dims)
    idx = np.arange(nx * ny * nz)
    i = idx % nx
    j = (idx // nx) % ny
    k = idx // (nx * ny)
    return np.column_stack([
        origin[0] + spacing[0] * i,
        origin[1] + spacing[1] * j,
        origin[2] + spacing[2] * k,
    ]), spacing


def cart_mesh(field, dims=(8, 8, 8), origin=(0.0, 0.0, 0.0), spacing=None):
    pts, spacing = grid_points(dims, origin, spacing)
    return HexMesh.from_cartesian(dims, origin, spacing, field(pts))


def cartesian_text(field, dims=(4, 4, 4), origin=(0.0, 0.0, 0.0), spacing=None):
    pts, spacing = grid_points(dims, origin, spacing)
    nums = " ".join(repr(float(v)) for v in tuple(origin) + tuple(spacing))
    lines = ["CARTESIAN %d %d %d %s" % (dims + (nums,))]
    for row in field(pts):
        lines.append(" ".join(repr(float(c)) for c in row))
    return "\n".join(lines) + "\n"


def hex_cells(dims):
    """Cell connectivity for a structured grid, corner order bottom-CCW."""
    nx, ny, nz = dims
    offsets = np.array([
        (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
        (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
    ])
    cells = []
    for ck in range(nz - 1):
        for cj in range(ny - 1):
            for ci in range(nx - 1):
                cells.append([ci + o[0] + nx * (cj + o[1] + ny * (ck + o[2]))
                              for o in offsets])
    return np.asarray(cells)


def perturbed_hex_mesh(field, dims=(9, 9, 9), amp=0.2, seed=0):
    """Structured hex mesh with interior vertices jittered by amp * edge."""
    pts, spacing = grid_points(dims)
    rng = np.random.default_rng(seed)
    nx, ny, nz = dims
    idx = np.arange(len(pts))
    i = idx % nx
    j = (idx // nx) % ny
    k = idx // (nx * ny)
    interior = ((i > 0) & (i < nx - 1) & (j > 0) & (j < ny - 1)
                & (k > 0) & (k < nz - 1))
    jitter = rng.uniform(-amp, amp, (len(pts), 3)) * np.asarray(spacing)
    pts = pts + jitter * interior[:, None]
    return HexMesh.from_unstructured(pts, hex_cells(dims), field(pts))


def hex_text(field, dims=(3, 3, 3), perturb=0.0, seed=0, loaded=(), fixed=()):
    pts, spacing = grid_points(dims)
    if perturb:
        mesh = perturbed_hex_mesh(field, dims, perturb, seed)
        pts = mesh.vertices
    cells = hex_cells(dims)
    lines = ["HEX %d %d" % (len(pts), len(cells))]
    lines += [" ".join(repr(float(c)) for c in p) for p in pts]
    lines += [" ".join(str(v) for v in c) for c in cells]
    lines += [" ".join(repr(float(c)) for c in row) for row in field(pts)]
    if loaded:
        lines.append("#!LOADED " + " ".join(str(v) for v in loaded))
    if fixed:
        lines.append("#!FIXED " + " ".join(str(v) for v in fixed))
    return "\n".join(lines) + "\n"
