/** Shared wire and document types. */

export type PslType = "major" | "medium" | "minor";

export const PSL_TYPES: readonly PslType[] = ["major", "medium", "minor"];

export interface PslAttrs {
  sigma1: number[];
  sigma2: number[];
  sigma3: number[];
  deg: number[];
  scalar: number[];
}

export interface Psl {
  id: number;
  type: PslType;
  level: number;
  seed_index: number;
  points: number[][];
  attrs: PslAttrs;
  /** One row per point: [nx, ny, nz, bx, by, bz]. */
  frames?: number[][];
}

export interface ExchangeDocument {
  version: 1;
  d0: number;
  bbox: [number[], number[]];
  psls: Psl[];
}

export interface ExtractStats {
  psls: number;
  points: number;
  by_type: Record<string, number>;
  by_level: Record<string, number>;
  seeds: number;
  wall_time: number;
  job: number;
  job_seq_start: number;
  job_seq_end: number;
  cached: boolean;
}

export interface OkReply {
  status: "ok";
  op: string;
  job?: number;
  stats?: ExtractStats;
  payload?: unknown;
  meshes?: string[];
}

export interface ErrorReply {
  status: "error";
  code: "bad_frame" | "not_found" | "bad_params";
  message: string;
  field?: string;
}

export type Reply = OkReply | ErrorReply;

export interface ExtractionParams {
  op: "extract";
  mesh: string;
  eps: number | Partial<Record<PslType, number>>;
  levels?: number;
  types?: PslType[];
  strategy?: string;
  scheme?: string;
  step_rel?: number;
  seed?: [number, number, number];
  level?: number;
  scalar?: string;
}
