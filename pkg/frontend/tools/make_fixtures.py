#!/usr/bin/env python3
"""Generate the viewer test fixtures from the extraction engine.

The TypeScript side re-implements the silhouette math, the frame
recovery and the tube tessellation; these fixtures pin the ports to the
engine's own output so any drift fails a vitest run.  Run from anywhere:

    python3 tools/make_fixtures.py
"""
import json
import math
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
REPO = HERE.parents[1]
sys.path.insert(0, str(REPO / "tests"))

from stresslines.exchange import build_document
from stresslines.geometry import (
    frames_for,
    silhouette_position,
    silhouette_tangent_points,
    tessellate_tube,
)
from stresslines.seeding import SeedingConfig, run_seeding
from stresslines.tracer import TraceConfig

from fields import bending_field, cart_mesh

OUT = HERE.parent / "test" / "fixtures"


def silhouette_cases():
    rng = np.random.default_rng(42)
    cases = [{
        # the textbook circle check: camera at (2, 0) on the unit circle
        "camera": [2.0, 0.0],
        "width": 1.0,
        "tangents": silhouette_tangent_points([2.0, 0.0], 1.0).tolist(),
        "samples": [],
    }]
    while len(cases) < 40:
        width = float(rng.uniform(0.15, 1.0))
        c = rng.uniform(-5.0, 5.0, size=2)
        if (c[0] / width) ** 2 + c[1] ** 2 <= 1.44:
            continue
        tangents = silhouette_tangent_points(c, width)
        samples = []
        for phi in np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False):
            p = [width * math.cos(phi), math.sin(phi)]
            samples.append({"p": p, "pos": silhouette_position(p, c, width)})
        # a few interior points too: the shader shades those mid-surface
        for _ in range(4):
            phi = float(rng.uniform(0.0, 2.0 * math.pi))
            r = float(rng.uniform(0.1, 0.9))
            p = [r * width * math.cos(phi), r * math.sin(phi)]
            samples.append({"p": p, "pos": silhouette_position(p, c, width)})
        cases.append({
            "camera": c.tolist(),
            "width": width,
            "tangents": tangents.tolist(),
            "samples": samples,
        })
    for phi in np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False):
        p = [math.cos(phi), math.sin(phi)]
        cases[0]["samples"].append({"p": p, "pos": silhouette_position(p, [2.0, 0.0], 1.0)})
    return cases


def frame_cases():
    t = np.linspace(0.0, 1.5 * math.pi, 14)
    helix = np.column_stack([np.cos(t), np.sin(t), 0.35 * t])
    align = np.column_stack([-np.cos(t), -np.sin(t), np.zeros_like(t)])
    cases = [{
        "label": "helix",
        "points": helix.tolist(),
        "align": align.tolist(),
        "frames": frames_for(helix, align).tolist(),
    }]
    # align parallel to the tangent at every point: exercises the
    # fallback axis then parallel transport
    line = np.column_stack([np.linspace(0.0, 2.0, 9), np.zeros(9), np.zeros(9)])
    along = np.tile([1.0, 0.0, 0.0], (9, 1))
    cases.append({
        "label": "degenerate-align",
        "points": line.tolist(),
        "align": along.tolist(),
        "frames": frames_for(line, along).tolist(),
    })
    return cases


def tube_cases():
    points = np.array([
        [0.0, 0.0, 0.0],
        [0.6, 0.1, 0.05],
        [1.1, 0.35, 0.0],
        [1.5, 0.8, -0.1],
    ])
    align = np.tile([0.0, 0.0, 1.0], (len(points), 1))
    frames = frames_for(points, align)
    cases = []
    for width, sides in ((0.3, 8), (1.0, 16)):
        mesh = tessellate_tube(points, frames, 0.2, width=width, sides=sides)
        cases.append({
            "points": points.tolist(),
            "frames": [np.concatenate([f[0], f[1]]).tolist() for f in frames],
            "radius": 0.2,
            "width": width,
            "sides": sides,
            "vertices": mesh.vertices.tolist(),
            "normals": mesh.normals.tolist(),
            "triangles": mesh.triangles.tolist(),
        })
    return cases


def document_case():
    mesh = cart_mesh(bending_field, dims=(10, 10, 10))
    config = SeedingConfig(
        eps=0.22 * mesh.d0,
        levels=3,
        trace=TraceConfig.for_mesh(mesh),
    )
    result = run_seeding(mesh, config)
    doc = build_document(mesh, result)
    levels = {
        str(k): [p["id"] for p in build_document(mesh, result, level=k)["psls"]]
        for k in range(1, config.levels + 1)
    }
    return {"doc": doc, "levels": levels}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    fixtures = {
        "silhouette.json": silhouette_cases(),
        "frames.json": frame_cases(),
        "tubes.json": tube_cases(),
        "document.json": document_case(),
    }
    for name, data in fixtures.items():
        path = OUT / name
        path.write_text(json.dumps(data))
        print(f"wrote {path} ({path.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
