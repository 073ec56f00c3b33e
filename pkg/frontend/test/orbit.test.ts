import { describe, expect, it } from "vitest";

import { perspective, viewMatrix, eyePosition } from "../src/camera.js";
import type { OrbitCamera } from "../src/camera.js";
import { buildTubeBatches } from "../src/scene.js";
import type { TubeBatch } from "../src/scene.js";
import { OUTLINE_THRESHOLD } from "../src/silhouette.js";
import { coverage, rasterizeTubes } from "../src/softrender.js";
import { TUBE_SIDES, framesFor } from "../src/tubes.js";
import type { Psl } from "../src/types.js";
import type { Vec3 } from "../src/vec.js";

function straightPsl(halfLength: number): Psl {
  const points: Vec3[] = [
    [0, 0, -halfLength],
    [0, 0, 0],
    [0, 0, halfLength],
  ];
  const align: Vec3[] = points.map(() => [1, 0, 0]);
  const frames = framesFor(points, align);
  return {
    id: 0,
    type: "major",
    level: 1,
    seed_index: 0,
    points: points.map((p) => [...p]),
    attrs: {
      sigma1: [1, 1, 1],
      sigma2: [0, 0, 0],
      sigma3: [-1, -1, -1],
      deg: [1, 1, 1],
      scalar: [0, 0.5, 1],
    },
    frames: frames.map((f) => [...f.n, ...f.b]),
  };
}

function batchFor(width: number, radius: number): TubeBatch {
  const batches = buildTubeBatches(
    straightPsl(1.2),
    radius,
    width,
    TUBE_SIDES,
    { transfer: "type", min: 0, max: 1 },
  );
  expect(batches.length).toBe(1);
  return batches[0];
}

describe("orbiting a thin ribbon", () => {
  it("never lets the ribbon vanish at any angle, width 0.15", () => {
    const batch = batchFor(0.15, 0.4);
    const proj = perspective(Math.PI / 4, 1, 0.01, 100);
    let worst = Infinity;
    for (const pitch of [0, 0.35]) {
      for (let step = 0; step < 72; step++) {
        const cam: OrbitCamera = {
          target: [0, 0, 0],
          distance: 4,
          yaw: (step * 2 * Math.PI) / 72,
          pitch,
        };
        const r = rasterizeTubes([batch], viewMatrix(cam), proj, eyePosition(cam), 128, 128);
        const pixels = coverage(r);
        worst = Math.min(worst, pixels);
        expect(pixels).toBeGreaterThan(100);
      }
    }
    // edge-on views stay an order of magnitude above bare visibility
    expect(worst).toBeGreaterThan(300);
  });

  it("keeps every fragment's silhouette position inside [0, 1]", () => {
    const batch = batchFor(0.15, 0.4);
    const proj = perspective(Math.PI / 4, 1, 0.01, 100);
    const cam: OrbitCamera = { target: [0, 0, 0], distance: 3.2, yaw: 0.7, pitch: 0.2 };
    const r = rasterizeTubes([batch], viewMatrix(cam), proj, eyePosition(cam), 128, 128);
    for (let at = 0; at < r.covered.length; at++) {
      if (!r.covered[at]) continue;
      expect(r.pos[at]).toBeGreaterThanOrEqual(0);
      expect(r.pos[at]).toBeLessThanOrEqual(1);
    }
  });
});

describe("outline halos on a circular tube", () => {
  it("stay within twice the nominal outline width", () => {
    const radius = 0.5;
    const batch = batchFor(1.0, radius);
    const size = 256;
    const proj = perspective(Math.PI / 4, 1, 0.01, 100);
    const cam: OrbitCamera = { target: [0, 0, 0], distance: 4, yaw: 0, pitch: 0 };
    const r = rasterizeTubes([batch], viewMatrix(cam), proj, eyePosition(cam), size, size);

    // central scanline: the tube is vertical on screen, caps far away
    const y = Math.floor(size / 2);
    const row: number[] = [];
    for (let x = 0; x < size; x++) if (r.covered[y * size + x]) row.push(x);
    expect(row.length).toBeGreaterThan(20);
    const first = row[0];
    const last = row[row.length - 1];
    expect(last - first + 1).toBe(row.length); // contiguous

    const rPx = (last - first + 1) / 2;
    // nominal outline width: the band (1 - threshold) * r covers in a
    // parallel projection, where position falls off linearly
    const nominal = (1 - OUTLINE_THRESHOLD) * rPx;

    let leftBand = 0;
    for (let x = first; x <= last && r.pos[y * size + x] > OUTLINE_THRESHOLD; x++) leftBand++;
    let rightBand = 0;
    for (let x = last; x >= first && r.pos[y * size + x] > OUTLINE_THRESHOLD; x--) rightBand++;

    expect(leftBand).toBeGreaterThanOrEqual(1);
    expect(rightBand).toBeGreaterThanOrEqual(1);
    expect(leftBand).toBeLessThanOrEqual(2 * nominal);
    expect(rightBand).toBeLessThanOrEqual(2 * nominal);

    // and the middle of the tube is never painted as outline
    const mid = Math.round((first + last) / 2);
    expect(r.pos[y * size + mid]).toBeLessThan(0.5);
  });
});
