"""Seed-and-fill extraction of principal stress lines.

A candidate set (a regular grid over the domain, the boundary vertices,
or the marked loaded/fixed vertices) drives extraction.  Every candidate
carries one coverage bit per enabled PSL type.  Tracing starts from the
candidate nearest the domain centre, after which types are drained in
round-robin order, always seeding the uncovered candidate closest to
that first seed.  A candidate is covered for a type as soon as it lies
within the spacing threshold of any line of that type; the first hit
also snaps the candidate onto the line, and the remaining types are
immediately re-checked from the snapped position.  Extraction ends when
every candidate is covered for every enabled type, which bounds the gap
between any candidate and the nearest line of each type.

Multi-resolution output repeats the fill with halving thresholds: level
k of M uses 2**(M - k) times the base spacing.  Finer levels reset the
candidates, re-classify them against everything extracted so far and
only then continue seeding, so lines are never re-traced and every
coarser level is a strict subset of the finer ones.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .mesh import CellLocator, HexMesh, build_locator
from .tracer import PSL, PSL_TYPES, TraceConfig, trace_psl

logger = logging.getLogger("stresslines")

STRATEGIES = ("volume", "boundary", "loaded")


def _canonical_types(types: Sequence[str]) -> tuple[str, ...]:
    wanted = set(types)
    unknown = wanted.difference(PSL_TYPES)
    if unknown:
        raise ValueError(f"unknown PSL type(s): {sorted(unknown)}")
    picked = tuple(t for t in PSL_TYPES if t in wanted)
    if not picked:
        raise ValueError("at least one PSL type must be enabled")
    return picked


@dataclass
class SeedingConfig:
    """Extraction parameters.

    ``eps`` is the absolute spacing threshold, either one value for all
    types or a mapping per type.  ``levels`` selects multi-resolution
    output; level k uses ``eps * 2**(levels - k)``.  ``seed_spacing``
    sets the candidate grid pitch for the volume strategy and defaults
    to half the smallest threshold.  ``initial_pos`` overrides the
    domain centre as the anchor that picks the first candidate.
    """

    eps: float | Mapping[str, float]
    levels: int = 1
    types: Sequence[str] = PSL_TYPES
    strategy: str = "volume"
    seed_spacing: float | None = None
    initial_pos: Sequence[float] | None = None
    trace: TraceConfig | None = None

    def __post_init__(self) -> None:
        self.types = _canonical_types(self.types)
        if self.strategy == "loaded_fixed":
            self.strategy = "loaded"
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not isinstance(self.levels, int) or self.levels < 1:
            raise ValueError("levels must be a positive integer")
        if self.seed_spacing is not None and not self.seed_spacing > 0:
            raise ValueError("seed_spacing must be positive")
        if self.initial_pos is not None:
            pos = tuple(float(v) for v in self.initial_pos)
            if len(pos) != 3:
                raise ValueError("initial_pos must have three components")
            self.initial_pos = pos

    def per_type_eps(self) -> dict[str, float]:
        if isinstance(self.eps, Mapping):
            missing = [t for t in self.types if t not in self.eps]
            if missing:
                raise ValueError(f"eps missing for type(s): {missing}")
            out = {t: float(self.eps[t]) for t in self.types}
        else:
            out = {t: float(self.eps) for t in self.types}
        for t, v in out.items():
            if not v > 0 or not math.isfinite(v):
                raise ValueError(f"eps for {t!r} must be positive and finite")
        return out


def candidate_points(
    mesh: HexMesh,
    locator: CellLocator,
    strategy: str,
    spacing: float | None = None,
) -> np.ndarray:
    """Seed candidate positions for ``strategy``, shape (n, 3).

    The volume strategy lays a grid of pitch ``spacing`` over the
    bounding box (including its faces) and keeps the points that fall
    inside the mesh, so voids and notches get no candidates.
    """
    if strategy == "volume":
        if spacing is None or not spacing > 0:
            raise ValueError("volume seeding needs a positive spacing")
        axes = []
        for lo, hi in zip(mesh.bbox_min, mesh.bbox_max):
            n = int(math.floor((hi - lo) / spacing + 1e-9)) + 1
            axes.append(lo + spacing * np.arange(n) if n > 1
                        else np.array([(lo + hi) / 2.0]))
        ax, ay, az = axes
        raw = np.array([(x, y, z) for z in az for y in ay for x in ax])
        keep = [i for i, p in enumerate(raw) if locator.locate(p) is not None]
        pts = raw[keep]
    elif strategy == "boundary":
        pts = mesh.vertices[mesh.boundary_vertex_ids()]
    elif strategy == "loaded":
        ids = np.union1d(mesh.loaded_vertices, mesh.fixed_vertices).astype(int)
        if ids.size == 0:
            raise ValueError("mesh carries no loaded or fixed vertex markers")
        pts = mesh.vertices[ids]
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if len(pts) == 0:
        raise ValueError("no seed candidates found inside the mesh")
    return np.ascontiguousarray(pts, dtype=float)


@dataclass
class PSLSet:
    """Everything one extraction produced, in extraction order.

    ``psls[i].id == i`` for every line; ``extraction_order`` repeats the
    ids explicitly so replay checks do not have to assume it.  The final
    candidate state is kept for coverage diagnostics.
    """

    psls: list[PSL]
    types: tuple[str, ...]
    levels: int
    thresholds: dict[str, tuple[float, ...]]
    initial_ids: tuple[int, ...]
    initial_point: np.ndarray
    extraction_order: list[int]
    strategy: str
    candidates_home: np.ndarray
    candidates_pos: np.ndarray
    candidates_covered: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.psls)

    def threshold(self, psl_type: str, level: int) -> float:
        return self.thresholds[psl_type][level - 1]

    def lod_slice(self, level: int) -> list[PSL]:
        """Lines visible at ``level`` (all lines with level <= it)."""
        if not 1 <= level <= self.levels:
            raise ValueError(f"level must be in 1..{self.levels}")
        return [self.psls[i] for i in self.extraction_order
                if self.psls[i].level <= level]


class _Seeder:
    def __init__(self, mesh: HexMesh, locator: CellLocator, config: SeedingConfig):
        self.mesh = mesh
        self.locator = locator
        self.config = config
        self.types = config.types
        self.trace_cfg = config.trace or TraceConfig.for_mesh(mesh)
        base = config.per_type_eps()
        self.thresholds = {
            t: tuple(base[t] * 2.0 ** (config.levels - k)
                     for k in range(1, config.levels + 1))
            for t in self.types
        }
        spacing = config.seed_spacing
        if spacing is None:
            spacing = min(base.values()) / 2.0
        self.home = candidate_points(mesh, locator, config.strategy, spacing)
        n = len(self.home)
        self.pos = self.home.copy()
        self.snapped = np.zeros(n, dtype=bool)
        self.covered = {t: np.zeros(n, dtype=bool) for t in self.types}
        self.trees: dict[str, list[tuple[cKDTree, np.ndarray]]] = {
            t: [] for t in self.types
        }
        self.psls: list[PSL] = []
        self.order: list[int] = []
        self.cur: dict[str, float] = {}

    def run(self) -> PSLSet:
        cfg = self.config
        anchor = (np.asarray(cfg.initial_pos, dtype=float)
                  if cfg.initial_pos is not None
                  else (self.mesh.bbox_min + self.mesh.bbox_max) / 2.0)
        c0 = int(np.argmin(np.linalg.norm(self.home - anchor, axis=1)))
        self.initial_point = self.home[c0].copy()
        initial_ids = []
        for level in range(1, cfg.levels + 1):
            self.cur = {t: self.thresholds[t][level - 1] for t in self.types}
            if level == 1:
                for t in self.types:
                    initial_ids.append(self._extract(c0, t, level).id)
            else:
                self._reclassify()
            self._round_robin(level)
            logger.debug("level %d done: %d lines so far", level, len(self.psls))
        return PSLSet(
            psls=self.psls,
            types=self.types,
            levels=cfg.levels,
            thresholds=self.thresholds,
            initial_ids=tuple(initial_ids),
            initial_point=self.initial_point,
            extraction_order=self.order,
            strategy=cfg.strategy,
            candidates_home=self.home,
            candidates_pos=self.pos,
            candidates_covered=self.covered,
        )

    def _extract(self, cand: int, psl_type: str, level: int) -> PSL:
        psl = trace_psl(self.mesh, self.locator,
                        self.pos[cand], psl_type, self.trace_cfg)
        psl.id = len(self.psls)
        psl.seed_index = int(cand)
        psl.level = level
        self.psls.append(psl)
        self.order.append(psl.id)
        tree = cKDTree(psl.points)
        self.trees[psl_type].append((tree, psl.points))
        self._classify_new(psl, psl_type, tree)
        logger.debug("psl %d: %s from candidate %d, %d points, stops %s",
                     psl.id, psl_type, cand, len(psl), psl.stop_reasons)
        return psl

    def _classify_new(self, psl: PSL, psl_type: str, tree: cKDTree) -> None:
        act = np.flatnonzero(~self.covered[psl_type])
        if act.size == 0:
            return
        dist, nearest = tree.query(self.pos[act])
        hit = dist < self.cur[psl_type]
        if not hit.any():
            return
        ids = act[hit]
        self.covered[psl_type][ids] = True
        fresh_mask = ~self.snapped[ids]
        fresh = ids[fresh_mask]
        if fresh.size:
            self.pos[fresh] = psl.points[nearest[hit][fresh_mask]]
            self.snapped[fresh] = True
            self._crosscheck(fresh, exclude=psl_type)

    def _crosscheck(self, cand_ids: np.ndarray, exclude: str) -> None:
        # freshly snapped candidates may now sit close enough to lines of
        # the other types; their still-open bits are re-tested from the
        # snapped position
        for t in self.types:
            if t == exclude or not self.trees[t]:
                continue
            sub = cand_ids[~self.covered[t][cand_ids]]
            if sub.size == 0:
                continue
            best = np.full(sub.size, np.inf)
            for tree, _pts in self.trees[t]:
                dist, _ = tree.query(self.pos[sub])
                np.minimum(best, dist, out=best)
            self.covered[t][sub[best < self.cur[t]]] = True

    def _reclassify(self) -> None:
        # finer level: candidates return home and are measured against
        # everything extracted so far under the tighter thresholds; the
        # snap goes to the nearest qualifying hit across all types
        n = len(self.home)
        self.pos[:] = self.home
        self.snapped[:] = False
        best_d = {}
        best_p = {}
        for t in self.types:
            self.covered[t][:] = False
            bd = np.full(n, np.inf)
            bp = np.zeros((n, 3))
            for tree, pts in self.trees[t]:
                dist, nearest = tree.query(self.home)
                closer = dist < bd
                bd[closer] = dist[closer]
                bp[closer] = pts[nearest[closer]]
            best_d[t] = bd
            best_p[t] = bp
        qual = np.stack([
            np.where(best_d[t] < self.cur[t], best_d[t], np.inf)
            for t in self.types
        ])
        winner = np.argmin(qual, axis=0)
        has_hit = np.isfinite(qual[winner, np.arange(n)])
        for ti, t in enumerate(self.types):
            ids = np.flatnonzero(has_hit & (winner == ti))
            if ids.size == 0:
                continue
            self.pos[ids] = best_p[t][ids]
            self.snapped[ids] = True
            self.covered[t][ids] = True
            self._crosscheck(ids, exclude=t)

    def _round_robin(self, level: int) -> None:
        ntypes = len(self.types)
        pointer = 0
        while True:
            pick = None
            for j in range(ntypes):
                t = self.types[(pointer + j) % ntypes]
                if not self.covered[t].all():
                    pick = t
                    pointer = (pointer + j + 1) % ntypes
                    break
            if pick is None:
                return
            act = np.flatnonzero(~self.covered[pick])
            dist = np.linalg.norm(self.pos[act] - self.initial_point, axis=1)
            self._extract(int(act[np.argmin(dist)]), pick, level)


def run_seeding(
    mesh: HexMesh,
    config: SeedingConfig,
    locator: CellLocator | None = None,
) -> PSLSet:
    """Extract a space-filling PSL set from ``mesh`` per ``config``."""
    if locator is None:
        locator = build_locator(mesh)
    return _Seeder(mesh, locator, config).run()


def spacing_violations(result: PSLSet) -> list[tuple[int, float]]:
    """Replay the extraction order and flag seeds that sat too close.

    Every line except the ones traced from the first candidate must have
    started at least its level's threshold away from every earlier line
    of the same type.  Returns ``(id, distance)`` per offender; an empty
    list means the spacing guarantee held.
    """
    out = []
    prior: dict[str, list[cKDTree]] = {t: [] for t in result.types}
    initial = set(result.initial_ids)
    for pid in result.extraction_order:
        psl = result.psls[pid]
        t = psl.psl_type
        if pid not in initial and prior[t]:
            thr = result.threshold(t, psl.level)
            dmin = min(float(tree.query(psl.seed_point)[0])
                       for tree in prior[t])
            if dmin < thr:
                out.append((pid, dmin))
        prior[t].append(cKDTree(psl.points))
    return out
