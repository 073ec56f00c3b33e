"""The PSL exchange document: a JSON snapshot of one extraction.

Version 1 layout:

    {"version": 1, "d0": float, "bbox": [[x,y,z], [x,y,z]],
     "psls": [{"id": int, "type": "major"|"medium"|"minor",
               "level": int, "seed_index": int,
               "points": [[x,y,z], ...],
               "attrs": {"sigma1": [...], "sigma2": [...], "sigma3": [...],
                         "deg": [...], "scalar": [...]},
               "frames": [[nx,ny,nz,bx,by,bz], ...]}, ...]}

Lines appear in extraction order.  ``frames`` carries the section
normal and binormal per point (the tangent is their cross product) and
is omitted for single-point lines, which have no tangent.  Serialized
bytes are deterministic: compact separators, insertion-ordered keys and
shortest round-trip float formatting, so equal extractions produce
byte-identical files.  ``to_bytes``/``parse_document`` optionally gzip
and transparently un-gzip the same bytes.
"""

from __future__ import annotations

import gzip as _gzip
import json
from dataclasses import dataclass

import numpy as np

from .geometry import compute_frames
from .mesh import HexMesh
from .seeding import PSLSet
from .tracer import PSL_TYPES
from .tensor import COMPONENT_ORDER, canonical_scalar

EXCHANGE_VERSION = 1

_ATTR_KEYS = ("sigma1", "sigma2", "sigma3", "deg", "scalar")


def _scalar_column(psl, which: str) -> np.ndarray:
    if which == "von_mises":
        return psl.von_mises
    if which in ("sigma1", "sigma2", "sigma3"):
        return psl.sigma[:, int(which[-1]) - 1]
    return psl.tensors[:, COMPONENT_ORDER.index(which)]


def build_document(mesh: HexMesh, result: PSLSet, level: int | None = None,
                   scalar: str = "von_mises") -> dict:
    """Assemble the exchange document for one extraction.

    ``level`` exports only lines visible at that resolution (default:
    everything).  ``scalar`` picks the per-point color channel.
    """
    scalar = canonical_scalar(scalar)
    if level is None:
        level = result.levels
    if result.psls and not 1 <= level <= result.levels:
        raise ValueError(f"level must be in 1..{result.levels}")
    entries = []
    for pid in result.extraction_order:
        psl = result.psls[pid]
        if psl.level > level:
            continue
        entry = {
            "id": psl.id,
            "type": psl.psl_type,
            "level": psl.level,
            "seed_index": psl.seed_index,
            "points": psl.points.tolist(),
            "attrs": {
                "sigma1": psl.sigma[:, 0].tolist(),
                "sigma2": psl.sigma[:, 1].tolist(),
                "sigma3": psl.sigma[:, 2].tolist(),
                "deg": psl.deg.tolist(),
                "scalar": _scalar_column(psl, scalar).tolist(),
            },
        }
        frames = compute_frames(psl)
        if frames is not None:
            entry["frames"] = np.hstack([frames[:, 0], frames[:, 1]]).tolist()
        entries.append(entry)
    return {
        "version": EXCHANGE_VERSION,
        "d0": float(mesh.d0),
        "bbox": [mesh.bbox_min.tolist(), mesh.bbox_max.tolist()],
        "psls": entries,
    }


def to_bytes(doc: dict, gzip: bool = False) -> bytes:
    raw = json.dumps(doc, separators=(",", ":")).encode("utf-8")
    if gzip:
        # fixed mtime keeps compressed output deterministic too
        return _gzip.compress(raw, mtime=0)
    return raw


@dataclass(eq=False)
class ParsedPSL:
    id: int
    psl_type: str
    level: int
    seed_index: int
    points: np.ndarray            # (n, 3)
    attrs: dict[str, np.ndarray]  # each (n,)
    frames: np.ndarray | None     # (n, 6) or None


@dataclass(eq=False)
class ParsedDocument:
    version: int
    d0: float
    bbox: np.ndarray              # (2, 3)
    psls: list[ParsedPSL]


def _fail(msg: str) -> ValueError:
    return ValueError(f"invalid exchange document: {msg}")


def _float_array(value, shape, what: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise _fail(f"{what} is not numeric") from None
    if arr.shape != shape:
        raise _fail(f"{what} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise _fail(f"{what} contains non-finite values")
    return arr


def parse_document(data: bytes | str | dict) -> ParsedDocument:
    """Validate and load an exchange document from bytes, text or a dict.

    Gzipped input is detected by its magic number.  Raises ValueError
    with a pointed message on any schema violation.
    """
    if isinstance(data, (bytes, bytearray)):
        data = bytes(data)
        if data[:2] == b"\x1f\x8b":
            data = _gzip.decompress(data)
        data = data.decode("utf-8")
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise _fail(f"not valid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise _fail("top level must be an object")
    if data.get("version") != EXCHANGE_VERSION:
        raise _fail(f"unsupported version {data.get('version')!r}")
    for key in ("d0", "bbox", "psls"):
        if key not in data:
            raise _fail(f"missing key {key!r}")
    d0 = data["d0"]
    if not isinstance(d0, (int, float)) or not d0 > 0:
        raise _fail("d0 must be a positive number")
    bbox = _float_array(data["bbox"], (2, 3), "bbox")
    if not isinstance(data["psls"], list):
        raise _fail("psls must be a list")
    psls = []
    for k, raw in enumerate(data["psls"]):
        if not isinstance(raw, dict):
            raise _fail(f"psls[{k}] is not an object")
        for key in ("id", "type", "level", "seed_index", "points", "attrs"):
            if key not in raw:
                raise _fail(f"psls[{k}] missing key {key!r}")
        if raw["type"] not in PSL_TYPES:
            raise _fail(f"psls[{k}] has unknown type {raw['type']!r}")
        try:
            points = np.asarray(raw["points"], dtype=float)
        except (TypeError, ValueError):
            raise _fail(f"psls[{k}].points is not numeric") from None
        if points.ndim != 2 or points.shape[1] != 3 or len(points) == 0:
            raise _fail(f"psls[{k}].points must be a non-empty list of xyz rows")
        if not np.all(np.isfinite(points)):
            raise _fail(f"psls[{k}].points contains non-finite values")
        n = len(points)
        if not isinstance(raw["attrs"], dict):
            raise _fail(f"psls[{k}].attrs must be an object")
        attrs = {}
        for name in _ATTR_KEYS:
            if name not in raw["attrs"]:
                raise _fail(f"psls[{k}].attrs missing {name!r}")
            attrs[name] = _float_array(raw["attrs"][name], (n,),
                                       f"psls[{k}].attrs.{name}")
        frames = None
        if "frames" in raw:
            frames = _float_array(raw["frames"], (n, 6), f"psls[{k}].frames")
        psls.append(ParsedPSL(
            id=int(raw["id"]),
            psl_type=raw["type"],
            level=int(raw["level"]),
            seed_index=int(raw["seed_index"]),
            points=points,
            attrs=attrs,
            frames=frames,
        ))
    return ParsedDocument(version=EXCHANGE_VERSION, d0=float(d0),
                          bbox=bbox, psls=psls)
