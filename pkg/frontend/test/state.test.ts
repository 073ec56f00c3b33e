import { describe, expect, it } from "vitest";

import { clampState, defaultState, stateFromQuery, stateToQuery, MIN_WIDTH } from "../src/state.js";

describe("clamping", () => {
  it("keeps the section width inside [0.05, 1]", () => {
    const s = defaultState();
    s.width = 0.001;
    clampState(s, 3);
    expect(s.width).toBe(MIN_WIDTH);
    s.width = 7;
    clampState(s, 3);
    expect(s.width).toBe(1);
  });

  it("never lets a LoD slider point past the document's levels", () => {
    const s = defaultState();
    s.lod.major = 9;
    s.lod.minor = 0;
    clampState(s, 4);
    expect(s.lod.major).toBe(4);
    expect(s.lod.minor).toBe(1);
  });

  it("keeps the camera usable", () => {
    const s = defaultState();
    s.camera.pitch = 3;
    s.camera.distance = -1;
    clampState(s, 3);
    expect(s.camera.pitch).toBeLessThan(Math.PI / 2);
    expect(s.camera.distance).toBeGreaterThan(0);
  });
});

describe("URL round trip", () => {
  it("reproduces a customized state", () => {
    const s = defaultState();
    s.camera = { target: [0.2, -1.5, 3], distance: 7.25, yaw: 1.1, pitch: -0.4 };
    s.lod = { major: 2, medium: 1, minor: 3 };
    s.focus = "minor";
    s.context = "medium";
    s.ribbon = { major: false, medium: true, minor: false };
    s.enabled = { major: true, medium: false, minor: true };
    s.scalar = "sigma1";
    s.transfer = "coolwarm";
    s.width = 0.35;
    s.depthCue = 0.8;
    s.showHull = false;
    s.extraction = {
      mesh: "beam",
      eps: 0.22,
      levels: 3,
      types: ["major", "minor"],
      strategy: "boundary",
      scheme: "rk2",
    };

    const back = stateFromQuery(stateToQuery(s));

    for (let k = 0; k < 3; k++) {
      expect(back.camera.target[k]).toBeCloseTo(s.camera.target[k], 3);
    }
    expect(back.camera.distance).toBeCloseTo(7.25, 3);
    expect(back.camera.yaw).toBeCloseTo(1.1, 3);
    expect(back.camera.pitch).toBeCloseTo(-0.4, 3);
    expect(back.lod).toEqual(s.lod);
    expect(back.focus).toBe("minor");
    expect(back.context).toBe("medium");
    expect(back.ribbon).toEqual(s.ribbon);
    expect(back.enabled).toEqual(s.enabled);
    expect(back.scalar).toBe("sigma1");
    expect(back.transfer).toBe("coolwarm");
    expect(back.width).toBeCloseTo(0.35, 6);
    expect(back.depthCue).toBeCloseTo(0.8, 6);
    expect(back.showHull).toBe(false);
    expect(back.extraction).toEqual(s.extraction);
  });

  it("survives an empty ribbon list", () => {
    const s = defaultState();
    s.ribbon = { major: false, medium: false, minor: false };
    const back = stateFromQuery(stateToQuery(s));
    expect(back.ribbon).toEqual(s.ribbon);
  });

  it("falls back to defaults on garbage parameters", () => {
    const q = new URLSearchParams(
      "cam=a,b,c&lod=9&w=nan&tf=neon&focus=up&types=&eps=x&levels=-2",
    );
    const s = stateFromQuery(q);
    const d = defaultState();
    expect(s.camera).toEqual(d.camera);
    expect(s.lod).toEqual(d.lod);
    expect(s.width).toBe(d.width);
    expect(s.transfer).toBe(d.transfer);
    expect(s.focus).toBe(d.focus);
    expect(s.extraction.types).toEqual(d.extraction.types);
    expect(s.extraction.eps).toBe(d.extraction.eps);
    expect(s.extraction.levels).toBe(1); // clamped from -2
  });

  it("parses a handwritten query", () => {
    const s = stateFromQuery(new URLSearchParams("mesh=rotor&eps=0.4&show=major&w=0.2"));
    expect(s.extraction.mesh).toBe("rotor");
    expect(s.extraction.eps).toBe(0.4);
    expect(s.enabled).toEqual({ major: true, medium: false, minor: false });
    expect(s.width).toBe(0.2);
  });
});
