/** Line colors and scalar transfer functions. */

import type { PslType } from "./types.js";
import type { Vec3 } from "./vec.js";

// Set2 qualitative triple: ocher / green / blue
export const TYPE_COLORS: Record<PslType, Vec3> = {
  major: [0xfc / 255, 0x8d / 255, 0x62 / 255],
  medium: [0x66 / 255, 0xc2 / 255, 0xa5 / 255],
  minor: [0x8d / 255, 0xa0 / 255, 0xcb / 255],
};

export type TransferName = "type" | "grayscale" | "coolwarm";

export const TRANSFER_NAMES: readonly TransferName[] = ["type", "grayscale", "coolwarm"];

function lerp3(a: Vec3, b: Vec3, t: number): Vec3 {
  return [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t];
}

const COOL: Vec3 = [0.231, 0.298, 0.753];
const WHITE: Vec3 = [0.865, 0.865, 0.865];
const WARM: Vec3 = [0.706, 0.016, 0.15];

/** Color for a normalized scalar t in [0, 1]. */
export function scalarColor(name: TransferName, type: PslType, t: number): Vec3 {
  const u = Math.min(1, Math.max(0, t));
  switch (name) {
    case "type":
      return TYPE_COLORS[type];
    case "grayscale": {
      const g = 0.15 + 0.75 * u;
      return [g, g, g];
    }
    case "coolwarm":
      return u < 0.5 ? lerp3(COOL, WHITE, u * 2) : lerp3(WHITE, WARM, u * 2 - 1);
  }
}
