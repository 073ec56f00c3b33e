"""Integration of principal stress lines through a sampled tensor field.

A line is traced from its seed in both directions of the chosen principal
axis with a fixed step size. Eigenvector sign ambiguity is resolved by
aligning every evaluated direction with the direction coming into the
step; integration stops at the domain boundary, in near-degenerate regions
when the direction becomes unstable, when the line runs into itself, or at
the step budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .mesh import CellLocator, HexMesh, _interp6
from .tensor import DEG_THRESHOLD, decompose, von_mises

PSL_TYPES = ("major", "medium", "minor")
TYPE_INDEX = {"major": 0, "medium": 1, "minor": 2}

STOP_BOUNDARY = "boundary"
STOP_DEGENERATE = "degenerate"
STOP_LOOP = "loop"
STOP_MAX_STEPS = "max_steps"
STOP_ZERO_LENGTH = "zero_length"

_SCHEMES = ("euler", "rk2", "rk4")


class TraceStop(NamedTuple):
    """Signal returned instead of a direction when integration must stop."""
    reason: str


@dataclass
class TraceConfig:
    delta: float
    scheme: str = "rk2"
    max_steps: int = 10000
    loop_tol: Optional[float] = None      # default 0.45 * delta
    loop_min_age: int = 10
    angle_limit: float = math.pi / 3.0
    deg_threshold: float = DEG_THRESHOLD

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}")
        if self.delta <= 0:
            raise ValueError("step size must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.loop_tol is None:
            self.loop_tol = 0.45 * self.delta
        if not 0 < self.loop_tol < self.delta:
            raise ValueError("loop tolerance must sit strictly below the step size")

    @classmethod
    def for_mesh(cls, mesh: HexMesh, step_rel: float = 0.5, **kw) -> "TraceConfig":
        return cls(delta=step_rel * mesh.min_edge, **kw)


class _Sample(NamedTuple):
    tensor: np.ndarray        # (6,)
    sigma: tuple
    e: np.ndarray             # (3, 3) eigenvector rows
    deg12: float
    deg23: float
    vm: float


def _pair_deg(s: _Sample, type_idx: int) -> float:
    if type_idx == 0:
        return s.deg12
    if type_idx == 2:
        return s.deg23
    return min(s.deg12, s.deg23)


class _Field:
    def __init__(self, mesh: HexMesh, locator: CellLocator):
        self.mesh = mesh
        self.locator = locator

    def sample(self, point) -> Optional[_Sample]:
        cell = self.locator.locate(point)
        if cell is None:
            return None
        t6 = _interp6(self.mesh, cell, point)
        dec = decompose(t6)
        return _Sample(t6, dec.sigma, dec.e, dec.deg12, dec.deg23, von_mises(t6))


def eigdir_at(mesh, locator, point, psl_type, prev_dir=None,
              angle_limit=math.pi / 3.0, deg_threshold=DEG_THRESHOLD):
    """Unit direction of the requested principal axis at a point.

    With ``prev_dir`` given, the sign is chosen to continue that direction,
    and a TraceStop is returned instead when the field is near-degenerate
    there and the aligned direction still deviates by more than the angle
    limit. Outside the domain the result is a boundary TraceStop.
    """
    field_ = _Field(mesh, locator)
    s = field_.sample(point)
    if s is None:
        return TraceStop(STOP_BOUNDARY)
    d, _, stop = _oriented(s, TYPE_INDEX[psl_type], prev_dir,
                           math.cos(angle_limit), deg_threshold)
    if stop:
        return TraceStop(stop)
    return d


def _oriented(s: _Sample, type_idx: int, prev_dir, cos_limit, deg_threshold):
    """Sign-aligned principal direction plus a possible degenerate stop."""
    e = s.e[type_idx]
    if prev_dir is None:
        return e, 1.0, None
    d = float(e @ prev_dir)
    if d < 0.0:
        e, d = -e, -d
    if _pair_deg(s, type_idx) < deg_threshold and d < cos_limit:
        return e, d, STOP_DEGENERATE
    return e, d, None


@dataclass(eq=False)
class PSL:
    """One traced principal stress line with per-point field data.

    Point order runs from the far end of the backward half through the
    seed (at ``seed_offset``) to the end of the forward half. ``eigvecs``
    stores the full principal frame at every point, one eigenvector per
    row, in canonical sign (not aligned along the line).
    """

    psl_type: str
    points: np.ndarray          # (n, 3)
    tensors: np.ndarray         # (n, 6)
    sigma: np.ndarray           # (n, 3)
    deg: np.ndarray             # (n,)
    von_mises: np.ndarray       # (n,)
    eigvecs: np.ndarray         # (n, 3, 3)
    seed_offset: int
    stop_reasons: tuple[str, str]
    id: int = -1
    seed_index: int = -1
    level: int = 1

    def __len__(self):
        return len(self.points)

    @property
    def seed_point(self) -> np.ndarray:
        return self.points[self.seed_offset]

    @property
    def length(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


def _trace_half(field_, x0, s0, d0, type_idx, cfg, cos_limit, other_pts):
    """March one direction; returns (new points, new samples, reason)."""
    pts = [np.asarray(x0, dtype=float)]
    samples = [s0]
    d_in = d0
    delta = cfg.delta
    reason = None
    while True:
        if len(pts) - 1 >= cfg.max_steps:
            reason = STOP_MAX_STEPS
            break
        x = pts[-1]
        s = samples[-1]
        k1, _, stop = _oriented(s, type_idx, d_in, cos_limit, cfg.deg_threshold)
        if stop:
            reason = stop
            break
        disp = k1
        if cfg.scheme != "euler":
            s2 = field_.sample(x + 0.5 * delta * k1)
            if s2 is None:
                reason = STOP_BOUNDARY
                break
            k2, _, stop = _oriented(s2, type_idx, k1, cos_limit, cfg.deg_threshold)
            if stop:
                reason = stop
                break
            disp = k2
            if cfg.scheme == "rk4":
                s3 = field_.sample(x + 0.5 * delta * k2)
                if s3 is None:
                    reason = STOP_BOUNDARY
                    break
                k3, _, stop = _oriented(s3, type_idx, k2, cos_limit, cfg.deg_threshold)
                if stop:
                    reason = stop
                    break
                s4 = field_.sample(x + delta * k3)
                if s4 is None:
                    reason = STOP_BOUNDARY
                    break
                k4, _, stop = _oriented(s4, type_idx, k3, cos_limit, cfg.deg_threshold)
                if stop:
                    reason = stop
                    break
                disp = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0

        x_new = x + delta * disp
        s_new = field_.sample(x_new)
        if s_new is None:
            # discard the exiting half step; the line ends on the last
            # point that still evaluates inside the domain
            reason = STOP_BOUNDARY
            break

        # closing in on an older stretch of the same trajectory?
        aged = len(pts) - cfg.loop_min_age + 1
        near = 0
        if aged > 0:
            d2 = np.min(np.linalg.norm(np.asarray(pts[:aged]) - x_new, axis=1))
            near = d2 < cfg.loop_tol
        if not near and len(other_pts):
            d2 = np.min(np.linalg.norm(other_pts - x_new, axis=1))
            near = d2 < cfg.loop_tol
        if near:
            reason = STOP_LOOP
            break

        d_next = disp / np.linalg.norm(disp)
        d_new, _, stop = _oriented(s_new, type_idx, d_next, cos_limit, cfg.deg_threshold)
        pts.append(x_new)
        samples.append(s_new)
        if stop:
            # the point itself carries valid field data; only the
            # continuation direction is ambiguous
            reason = stop
            break
        d_in = d_new
    if len(pts) == 1:
        reason = STOP_ZERO_LENGTH
    return pts[1:], samples[1:], reason


def trace_psl(mesh: HexMesh, locator: CellLocator, seed, psl_type: str,
              cfg: TraceConfig) -> PSL:
    """Trace one principal stress line through ``seed`` in both directions."""
    if psl_type not in TYPE_INDEX:
        raise ValueError(f"psl_type must be one of {PSL_TYPES}")
    type_idx = TYPE_INDEX[psl_type]
    field_ = _Field(mesh, locator)
    seed = np.asarray(seed, dtype=float)
    s0 = field_.sample(seed)
    if s0 is None:
        raise ValueError("seed point lies outside the mesh")
    cos_limit = math.cos(cfg.angle_limit)
    e0 = s0.e[type_idx]

    back_pts, back_samples, back_reason = _trace_half(
        field_, seed, s0, -e0, type_idx, cfg, cos_limit, np.empty((0, 3)))
    other = np.asarray([seed] + back_pts) if back_pts else np.asarray([seed])
    fwd_pts, fwd_samples, fwd_reason = _trace_half(
        field_, seed, s0, e0, type_idx, cfg, cos_limit, other)

    pts = back_pts[::-1] + [seed] + fwd_pts
    samples = back_samples[::-1] + [s0] + fwd_samples
    n = len(pts)
    points = np.asarray(pts)
    tensors = np.asarray([s.tensor for s in samples])
    sigma = np.asarray([s.sigma for s in samples])
    deg = np.asarray([_pair_deg(s, type_idx) for s in samples])
    vm = np.asarray([s.vm for s in samples])
    eigvecs = np.asarray([s.e for s in samples])
    assert points.shape == (n, 3)
    return PSL(psl_type, points, tensors, sigma, deg, vm, eigvecs,
               seed_offset=len(back_pts), stop_reasons=(back_reason, fwd_reason))
