import numpy as np
import pytest
from scipy.spatial import cKDTree

from stresslines.mesh import HexMesh, build_locator
from stresslines.seeding import (
    PSLSet,
    SeedingConfig,
    candidate_points,
    run_seeding,
    spacing_violations,
)
from stresslines.tracer import PSL_TYPES

from fields import bending_field, cart_mesh, constant_field, grid_points, hex_cells

DIAG = constant_field((3.0, 2.0, 1.0, 0.0, 0.0, 0.0))


@pytest.fixture(scope="module")
def diag_mesh():
    mesh = cart_mesh(DIAG, dims=(5, 5, 5))
    return mesh, build_locator(mesh)


@pytest.fixture(scope="module")
def bend_slab():
    mesh = cart_mesh(bending_field, dims=(9, 9, 3),
                     spacing=(1 / 8, 1 / 8, 0.05))
    return mesh, build_locator(mesh)


def test_config_validation():
    with pytest.raises(ValueError):
        SeedingConfig(eps=0.1, types=("widest",))
    with pytest.raises(ValueError):
        SeedingConfig(eps=0.1, types=())
    with pytest.raises(ValueError):
        SeedingConfig(eps=0.1, strategy="surface")
    with pytest.raises(ValueError):
        SeedingConfig(eps=0.1, levels=0)
    with pytest.raises(ValueError):
        SeedingConfig(eps=0.1, seed_spacing=-1.0)
    with pytest.raises(ValueError):
        SeedingConfig(eps=0.1, initial_pos=(1.0, 2.0))
    with pytest.raises(ValueError):
        SeedingConfig(eps={"major": 0.1}, types=("major", "minor")).per_type_eps()
    with pytest.raises(ValueError):
        SeedingConfig(eps=-0.5).per_type_eps()
    cfg = SeedingConfig(eps=0.1, types=("minor", "major"), strategy="loaded_fixed")
    assert cfg.types == ("major", "minor")   # canonical order
    assert cfg.strategy == "loaded"
    assert cfg.per_type_eps() == {"major": 0.1, "minor": 0.1}


def test_volume_candidates_cover_grid(diag_mesh):
    mesh, loc = diag_mesh
    pts = candidate_points(mesh, loc, "volume", 0.5)
    assert len(pts) == 27   # 3 planes per axis, box faces included
    assert {tuple(p) for p in pts} == {
        (x, y, z) for x in (0, 0.5, 1) for y in (0, 0.5, 1) for z in (0, 0.5, 1)
    }
    # a pitch larger than the box still yields its midpoint
    pts = candidate_points(mesh, loc, "volume", 5.0)
    assert len(pts) == 1
    assert np.allclose(pts[0], [0.5, 0.5, 0.5])
    with pytest.raises(ValueError):
        candidate_points(mesh, loc, "volume", None)


def test_volume_candidates_skip_voids():
    verts, _ = grid_points((3, 3, 3), spacing=(0.5, 0.5, 0.5))
    cells = hex_cells((3, 3, 3))
    mesh = HexMesh.from_unstructured(verts, np.delete(cells, 7, axis=0),
                                     DIAG(verts))
    pts = candidate_points(mesh, build_locator(mesh), "volume", 0.25)
    # full box grid is 5^3; the removed corner cell hides the 2^3 points
    # strictly beyond its three inner faces
    assert len(pts) == 117
    assert not np.any(np.all(pts > 0.5 + 1e-12, axis=1))


def test_boundary_and_loaded_candidates(diag_mesh):
    mesh, loc = diag_mesh
    pts = candidate_points(mesh, loc, "boundary")
    assert len(pts) == 5 ** 3 - 3 ** 3
    with pytest.raises(ValueError):
        candidate_points(mesh, loc, "loaded")
    verts, _ = grid_points((3, 3, 3), spacing=(0.5, 0.5, 0.5))
    marked = HexMesh.from_unstructured(verts, hex_cells((3, 3, 3)), DIAG(verts),
                                       loaded=[0, 4], fixed=[4, 26])
    pts = candidate_points(marked, build_locator(marked), "loaded")
    assert np.allclose(pts, verts[[0, 4, 26]])


def test_constant_field_fill(diag_mesh):
    mesh, loc = diag_mesh
    res = run_seeding(mesh, SeedingConfig(eps=0.3), loc)
    assert isinstance(res, PSLSet)
    assert res.types == PSL_TYPES
    assert res.levels == 1
    assert res.thresholds == {t: (0.3,) for t in PSL_TYPES}
    # first three lines share the candidate nearest the box centre
    assert res.initial_ids == (0, 1, 2)
    assert [res.psls[i].psl_type for i in (0, 1, 2)] == list(PSL_TYPES)
    for i in (0, 1, 2):
        assert np.allclose(res.psls[i].seed_point, res.initial_point)
    # every line is axis-parallel for a constant diagonal tensor
    axis_of = {"major": 0, "medium": 1, "minor": 2}
    for psl in res.psls:
        span = psl.points.max(axis=0) - psl.points.min(axis=0)
        off = np.delete(span, axis_of[psl.psl_type])
        assert np.all(off < 1e-8)
    # termination means full coverage for every type
    for t in PSL_TYPES:
        assert res.candidates_covered[t].all()
    assert res.extraction_order == list(range(len(res)))
    assert spacing_violations(res) == []


def test_huge_eps_yields_only_initial_lines(diag_mesh):
    mesh, loc = diag_mesh
    res = run_seeding(mesh, SeedingConfig(eps=2.0, seed_spacing=0.25), loc)
    assert len(res) == 3
    assert res.initial_ids == (0, 1, 2)


def test_single_type_run(diag_mesh):
    mesh, loc = diag_mesh
    res = run_seeding(mesh, SeedingConfig(eps=0.4, types=("minor",)), loc)
    assert res.types == ("minor",)
    assert res.initial_ids == (0,)
    assert all(p.psl_type == "minor" for p in res.psls)
    assert spacing_violations(res) == []


def test_initial_pos_override(diag_mesh):
    mesh, loc = diag_mesh
    res = run_seeding(mesh, SeedingConfig(eps=0.4, initial_pos=(0.02, 0.03, 0.0)),
                      loc)
    # the anchor snaps to the nearest candidate, not to the raw position
    assert np.allclose(res.initial_point, [0.0, 0.0, 0.0])
    assert np.allclose(res.psls[0].seed_point, [0.0, 0.0, 0.0])


def test_bending_replay_clean(bend_slab):
    mesh, loc = bend_slab
    res = run_seeding(mesh, SeedingConfig(eps=0.15), loc)
    assert len(res) > 6
    assert spacing_violations(res) == []
    # seeds of later same-type lines really are spaced out
    majors = [p for p in res.psls if p.psl_type == "major"]
    for a, b in zip(majors, majors[1:]):
        tree = cKDTree(a.points)
        assert tree.query(b.seed_point)[0] >= 0.15 or b.id in res.initial_ids


def test_spacing_violation_detected(bend_slab):
    mesh, loc = bend_slab
    res = run_seeding(mesh, SeedingConfig(eps=0.15), loc)
    # corrupt one non-initial seed by moving it onto an earlier line
    culprit = next(p for p in res.psls
                   if p.id not in res.initial_ids and p.psl_type == "major")
    earlier = res.psls[res.initial_ids[0]]
    culprit.points[culprit.seed_offset] = earlier.points[len(earlier) // 2]
    bad = spacing_violations(res)
    assert [pid for pid, _ in bad] == [culprit.id]
    assert bad[0][1] < 1e-12


def test_multilevel_thresholds_and_nesting(bend_slab):
    mesh, loc = bend_slab
    res = run_seeding(mesh, SeedingConfig(eps=0.12, levels=3), loc)
    assert res.thresholds["major"] == (0.48, 0.24, 0.12)
    counts = [len(res.lod_slice(k)) for k in (1, 2, 3)]
    assert counts[0] < counts[1] < counts[2]
    assert counts[2] == len(res)
    # coarser slices are prefixes of finer ones in extraction order
    ids1 = [p.id for p in res.lod_slice(1)]
    ids2 = [p.id for p in res.lod_slice(2)]
    assert ids2[:len(ids1)] == ids1
    assert all(p.level == 1 for p in res.lod_slice(1))
    assert spacing_violations(res) == []
    with pytest.raises(ValueError):
        res.lod_slice(0)
    with pytest.raises(ValueError):
        res.lod_slice(4)


def test_single_level_runs_match(diag_mesh):
    mesh, loc = diag_mesh
    a = run_seeding(mesh, SeedingConfig(eps=0.3), loc)
    b = run_seeding(mesh, SeedingConfig(eps=0.3, levels=1), loc)
    assert len(a) == len(b)
    for pa, pb in zip(a.psls, b.psls):
        assert pa.psl_type == pb.psl_type
        assert pa.level == pb.level == 1
        assert np.array_equal(pa.points, pb.points)


def test_runs_are_deterministic(bend_slab):
    mesh, loc = bend_slab
    a = run_seeding(mesh, SeedingConfig(eps=0.2), loc)
    b = run_seeding(mesh, SeedingConfig(eps=0.2), loc)
    assert [p.psl_type for p in a.psls] == [p.psl_type for p in b.psls]
    assert [p.seed_index for p in a.psls] == [p.seed_index for p in b.psls]
    for pa, pb in zip(a.psls, b.psls):
        assert np.array_equal(pa.points, pb.points)


def test_candidates_end_within_two_thresholds(bend_slab):
    mesh, loc = bend_slab
    eps = 0.15
    res = run_seeding(mesh, SeedingConfig(eps=eps), loc)
    # a candidate may have been classified from a snapped position, which
    # itself lies on some line within eps of home, so home sits within
    # 2 eps of a line of every type
    for t in res.types:
        pts = np.concatenate([p.points for p in res.psls if p.psl_type == t])
        dist, _ = cKDTree(pts).query(res.candidates_home)
        assert dist.max() < 2 * eps + 1e-12
