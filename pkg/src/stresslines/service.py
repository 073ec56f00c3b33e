"""Request-reply extraction service over framed TCP and WebSocket.

Wire format on the TCP port: a 4-byte big-endian unsigned length
followed by that many bytes of UTF-8 JSON, both directions.  The
WebSocket port speaks standard RFC 6455 text messages whose payloads
are byte-identical to the TCP JSON bodies, so browsers get exactly what
native clients get.

Requests are objects with an "op" key:

    {"op": "extract", "mesh": <name or path>, "eps": 0.2, "levels": 1,
     "types": ["major","medium","minor"], "strategy": "volume",
     "scheme": "rk2", "step_rel": 0.5, "seed": [x,y,z],
     "level": <slice>, "scalar": "von_mises", "gzip": false}
    {"op": "info", "mesh": <name or path>}
    {"op": "list"}

"eps" and "step_rel" are relative to the mesh's smallest bounding-box
extent and its shortest edge respectively.  Error replies carry
status "error" and a code: "bad_frame" for anything that fails at the
framing or JSON layer, "not_found" for unknown meshes and "bad_params"
(plus "field") for invalid request values.  Connections always survive
errors; a partial frame that stalls longer than ``RESYNC_GAP`` seconds
is junked with a "bad_frame" reply so a client that lost framing can
recover by pausing briefly.  With "gzip": true the TCP reply body is
gzip-compressed (detectable by its magic bytes); the WebSocket path
ignores the flag since its messages are self-delimiting anyway.

Extractions run strictly one at a time in arrival order, whatever the
number of connections.  Replies embed monotonic job ids plus a global
sequence counter sampled at start and end of the work, so clients can
verify that no two extractions ever interleaved.  A single-entry cache
answers a repeat of the previous request without recomputing; payloads
are deterministic either way.
"""

from __future__ import annotations

import base64
import gzip as _gzip
import hashlib
import json
import logging
import os
import socket
import threading
import time

from .exchange import build_document
from .mesh import CellLocator, HexMesh, MeshError, build_locator, load_mesh_path
from .seeding import STRATEGIES, SeedingConfig, run_seeding
from .tensor import canonical_scalar
from .tracer import PSL_TYPES, TraceConfig

logger = logging.getLogger("stresslines")

MAX_FRAME = 64 * 1024 * 1024
RESYNC_GAP = 0.25
_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_SCHEMES = ("euler", "rk2", "rk4")


def pack_frame(body: bytes) -> bytes:
    if len(body) > MAX_FRAME:
        raise ValueError("frame body exceeds the frame limit")
    return len(body).to_bytes(4, "big") + body


def _dumps(obj: dict) -> bytes:
    return json.dumps(obj, separators=(",", ":")).encode("utf-8")


class ServiceError(Exception):
    def __init__(self, code: str, message: str, field: str | None = None):
        super().__init__(message)
        self.code = code
        self.field = field

    def reply(self) -> dict:
        out = {"status": "error", "code": self.code, "message": str(self)}
        if self.field is not None:
            out["field"] = self.field
        return out


def _bad_params(field: str, message: str) -> ServiceError:
    return ServiceError("bad_params", message, field=field)


def _as_number(value, field: str, positive: bool = True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _bad_params(field, f"{field} must be a number")
    v = float(value)
    if positive and not v > 0:
        raise _bad_params(field, f"{field} must be positive")
    return v


class ExtractionService:
    """Serves extraction requests over TCP frames and WebSocket messages.

    ``preload`` maps mesh names to HexMesh instances clients can address
    without touching the filesystem; requests may also name a mesh file
    path, which is loaded once and kept.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 ws_port: int | None = 0, preload: dict[str, HexMesh] | None = None):
        self._host = host
        self._want_port = port
        self._want_ws_port = ws_port
        self._meshes: dict[str, tuple[HexMesh, CellLocator]] = {}
        self._mesh_lock = threading.Lock()
        self._work_lock = threading.Lock()
        self._id_lock = threading.Lock()
        self._next_job = 0
        self._seq = 0
        self._cache: tuple[str, dict, dict] | None = None
        self._stopping = threading.Event()
        self._threads: list[threading.Thread] = []
        self._conns: set[socket.socket] = set()
        self._conn_lock = threading.Lock()
        self._tcp_sock: socket.socket | None = None
        self._ws_sock: socket.socket | None = None
        for name, mesh in (preload or {}).items():
            self.preload(name, mesh)

    def preload(self, name: str, mesh: HexMesh) -> None:
        pair = (mesh, build_locator(mesh))
        with self._mesh_lock:
            self._meshes[name] = pair

    # ------------------------------------------------------------ lifecycle

    @property
    def port(self) -> int:
        return self._tcp_sock.getsockname()[1]

    @property
    def ws_port(self) -> int | None:
        return None if self._ws_sock is None else self._ws_sock.getsockname()[1]

    def start(self) -> None:
        self._tcp_sock = self._listen(self._want_port)
        self._spawn(self._accept_loop, self._tcp_sock, self._tcp_conn)
        if self._want_ws_port is not None:
            self._ws_sock = self._listen(self._want_ws_port)
            self._spawn(self._accept_loop, self._ws_sock, self._ws_conn)
        logger.info("service listening on tcp %d ws %s", self.port, self.ws_port)

    def stop(self) -> None:
        self._stopping.set()
        for s in (self._tcp_sock, self._ws_sock):
            if s is not None:
                try:
                    s.close()
                except OSError:
                    pass
        with self._conn_lock:
            conns = list(self._conns)
        for c in conns:
            try:
                c.close()
            except OSError:
                pass
        for t in self._threads:
            t.join(timeout=2.0)

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self._stopping.wait(0.5):
                pass
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def _listen(self, port: int) -> socket.socket:
        s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        s.bind((self._host, port))
        s.listen(16)
        return s

    def _spawn(self, fn, *args) -> None:
        t = threading.Thread(target=fn, args=args, daemon=True)
        t.start()
        self._threads.append(t)

    def _accept_loop(self, listener: socket.socket, handler) -> None:
        while not self._stopping.is_set():
            try:
                conn, _addr = listener.accept()
            except OSError:
                return
            with self._conn_lock:
                self._conns.add(conn)
            threading.Thread(target=self._run_conn, args=(conn, handler),
                             daemon=True).start()

    def _run_conn(self, conn: socket.socket, handler) -> None:
        try:
            handler(conn)
        except (OSError, ValueError):
            pass
        finally:
            with self._conn_lock:
                self._conns.discard(conn)
            try:
                conn.close()
            except OSError:
                pass

    # ------------------------------------------------------------ TCP path

    def _tcp_conn(self, conn: socket.socket) -> None:
        conn.settimeout(RESYNC_GAP)
        buf = b""
        while not self._stopping.is_set():
            progressed = True
            while progressed and buf:
                progressed = False
                if len(buf) < 4:
                    break
                length = int.from_bytes(buf[:4], "big")
                if length == 0 or length > MAX_FRAME:
                    # framing is beyond repair; junk everything buffered
                    buf = b""
                    conn.sendall(pack_frame(_dumps(ServiceError(
                        "bad_frame", "unreasonable frame length").reply())))
                    break
                if len(buf) < 4 + length:
                    break
                body, buf = buf[4:4 + length], buf[4 + length:]
                conn.sendall(pack_frame(self._dispatch(body)))
                progressed = True
            try:
                chunk = conn.recv(65536)
            except socket.timeout:
                if buf:
                    # stalled partial frame: drop it so the client can resync
                    buf = b""
                    conn.sendall(pack_frame(_dumps(ServiceError(
                        "bad_frame", "incomplete frame abandoned").reply())))
                continue
            except OSError:
                return
            if not chunk:
                return
            buf += chunk

    def _dispatch(self, body: bytes) -> bytes:
        try:
            obj = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return _dumps(ServiceError("bad_frame", "frame body is not JSON").reply())
        if not isinstance(obj, dict):
            return _dumps(ServiceError("bad_frame", "request must be an object").reply())
        wants_gzip = obj.get("gzip", False)
        reply = self.handle_request(obj)
        raw = _dumps(reply)
        if wants_gzip is True and reply.get("status") == "ok":
            raw = _gzip.compress(raw, mtime=0)
        return raw

    # ------------------------------------------------------------ WS path

    def _ws_conn(self, conn: socket.socket) -> None:
        conn.settimeout(30.0)
        reader = conn.makefile("rb")
        try:
            if not self._ws_handshake(conn, reader):
                return
            while not self._stopping.is_set():
                msg = self._ws_read_message(conn, reader)
                if msg is None:
                    return
                try:
                    obj = json.loads(msg.decode("utf-8"))
                    if not isinstance(obj, dict):
                        raise ValueError
                except (UnicodeDecodeError, json.JSONDecodeError, ValueError):
                    self._ws_send(conn, _dumps(ServiceError(
                        "bad_frame", "message is not a JSON object").reply()))
                    continue
                self._ws_send(conn, _dumps(self.handle_request(obj)))
        finally:
            reader.close()

    def _ws_handshake(self, conn: socket.socket, reader) -> bool:
        lines = []
        while True:
            line = reader.readline(16384)
            if not line or not line.endswith(b"\n"):
                return False
            line = line.rstrip(b"\r\n")
            if not line:
                break
            lines.append(line.decode("latin-1"))
        headers = {}
        for line in lines[1:]:
            if ":" in line:
                k, v = line.split(":", 1)
                headers[k.strip().lower()] = v.strip()
        key = headers.get("sec-websocket-key")
        if not lines or not lines[0].startswith("GET") or key is None:
            conn.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
            return False
        accept = base64.b64encode(
            hashlib.sha1((key + _WS_GUID).encode("latin-1")).digest()
        ).decode("ascii")
        conn.sendall(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\n"
            b"Connection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: " + accept.encode("ascii") + b"\r\n\r\n"
        )
        return True

    @staticmethod
    def _read_exact(reader, n: int) -> bytes | None:
        data = reader.read(n)
        return data if data is not None and len(data) == n else None

    def _ws_read_message(self, conn: socket.socket, reader) -> bytes | None:
        """One complete text/binary message, handling control frames inline."""
        assembled = bytearray()
        while True:
            head = self._read_exact(reader, 2)
            if head is None:
                return None
            fin = bool(head[0] & 0x80)
            opcode = head[0] & 0x0F
            masked = bool(head[1] & 0x80)
            length = head[1] & 0x7F
            if length == 126:
                ext = self._read_exact(reader, 2)
                if ext is None:
                    return None
                length = int.from_bytes(ext, "big")
            elif length == 127:
                ext = self._read_exact(reader, 8)
                if ext is None:
                    return None
                length = int.from_bytes(ext, "big")
            if length > MAX_FRAME:
                return None
            mask = b"\x00" * 4
            if masked:
                got = self._read_exact(reader, 4)
                if got is None:
                    return None
                mask = got
            payload = self._read_exact(reader, length) if length else b""
            if payload is None:
                return None
            if masked:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:                      # close
                try:
                    conn.sendall(self._ws_frame(0x8, payload[:2]))
                except OSError:
                    pass
                return None
            if opcode == 0x9:                      # ping
                conn.sendall(self._ws_frame(0xA, payload))
                continue
            if opcode == 0xA:                      # pong
                continue
            if opcode in (0x0, 0x1, 0x2):
                assembled.extend(payload)
                if fin:
                    return bytes(assembled)
                continue
            return None                            # unknown opcode

    @staticmethod
    def _ws_frame(opcode: int, payload: bytes) -> bytes:
        head = bytearray([0x80 | opcode])
        n = len(payload)
        if n < 126:
            head.append(n)
        elif n < 65536:
            head.append(126)
            head += n.to_bytes(2, "big")
        else:
            head.append(127)
            head += n.to_bytes(8, "big")
        return bytes(head) + payload

    def _ws_send(self, conn: socket.socket, payload: bytes) -> None:
        conn.sendall(self._ws_frame(0x1, payload))

    # ------------------------------------------------------------ requests

    def handle_request(self, obj: dict) -> dict:
        try:
            op = obj.get("op")
            if op == "extract":
                return self._op_extract(obj)
            if op == "info":
                return self._op_info(obj)
            if op == "list":
                with self._mesh_lock:
                    names = sorted(self._meshes)
                return {"status": "ok", "op": "list", "meshes": names}
            raise _bad_params("op", f"unknown op {op!r}")
        except ServiceError as err:
            return err.reply()
        except (ValueError, MeshError) as exc:
            # anything the engine itself rejects (e.g. a strategy with no
            # usable candidates on this mesh) is still the caller's fault
            return ServiceError("bad_params", str(exc)).reply()

    def _get_mesh(self, obj: dict) -> tuple[str, HexMesh, CellLocator]:
        ref = obj.get("mesh")
        if not isinstance(ref, str) or not ref:
            raise _bad_params("mesh", "mesh must be a non-empty string")
        with self._mesh_lock:
            if ref in self._meshes:
                mesh, loc = self._meshes[ref]
                return ref, mesh, loc
            if not os.path.isfile(ref):
                raise ServiceError("not_found", f"no mesh named {ref!r}")
            try:
                mesh = load_mesh_path(ref)
            except MeshError as exc:
                raise _bad_params("mesh", f"mesh file rejected: {exc}") from None
            loc = build_locator(mesh)
            self._meshes[ref] = (mesh, loc)
            return ref, mesh, loc

    def _op_info(self, obj: dict) -> dict:
        ref, mesh, _loc = self._get_mesh(obj)
        return {
            "status": "ok",
            "op": "info",
            "mesh": ref,
            "info": {
                "cells": int(len(mesh.cells)),
                "vertices": int(len(mesh.vertices)),
                "d0": float(mesh.d0),
                "min_edge": float(mesh.min_edge),
                "bbox": [mesh.bbox_min.tolist(), mesh.bbox_max.tolist()],
                "cartesian": mesh.cartesian is not None,
            },
        }

    def _extract_params(self, obj: dict, mesh: HexMesh):
        eps_req = obj.get("eps", 0.2)
        if isinstance(eps_req, dict):
            eps = {}
            for t, v in eps_req.items():
                if t not in PSL_TYPES:
                    raise _bad_params("eps", f"unknown PSL type {t!r}")
                eps[t] = _as_number(v, "eps") * mesh.d0
        else:
            eps = _as_number(eps_req, "eps") * mesh.d0

        levels = obj.get("levels", 1)
        if isinstance(levels, bool) or not isinstance(levels, int) or levels < 1:
            raise _bad_params("levels", "levels must be a positive integer")

        types = obj.get("types", list(PSL_TYPES))
        if not isinstance(types, list) or not types \
                or any(t not in PSL_TYPES for t in types):
            raise _bad_params("types", "types must be a non-empty list of PSL types")

        strategy = obj.get("strategy", "volume")
        if strategy not in STRATEGIES:
            raise _bad_params("strategy", f"strategy must be one of {STRATEGIES}")

        scheme = obj.get("scheme", "rk2")
        if scheme not in _SCHEMES:
            raise _bad_params("scheme", f"scheme must be one of {_SCHEMES}")

        step_rel = _as_number(obj.get("step_rel", 0.5), "step_rel")

        seed = obj.get("seed")
        if seed is not None:
            if (not isinstance(seed, list) or len(seed) != 3
                    or any(isinstance(v, bool) or not isinstance(v, (int, float))
                           for v in seed)):
                raise _bad_params("seed", "seed must be [x, y, z]")
            seed = [float(v) for v in seed]

        level = obj.get("level", levels)
        if isinstance(level, bool) or not isinstance(level, int) \
                or not 1 <= level <= levels:
            raise _bad_params("level", f"level must be in 1..{levels}")

        try:
            scalar = canonical_scalar(obj.get("scalar", "von_mises"))
        except (ValueError, TypeError) as exc:
            raise _bad_params("scalar", str(exc)) from None

        if not isinstance(obj.get("gzip", False), bool):
            raise _bad_params("gzip", "gzip must be a boolean")

        try:
            config = SeedingConfig(
                eps=eps, levels=levels, types=tuple(types), strategy=strategy,
                initial_pos=seed,
                trace=TraceConfig.for_mesh(mesh, step_rel=step_rel, scheme=scheme),
            )
            config.per_type_eps()
        except ValueError as exc:
            raise _bad_params("eps", str(exc)) from None
        return config, level, scalar

    def _op_extract(self, obj: dict) -> dict:
        ref, mesh, loc = self._get_mesh(obj)
        config, level, scalar = self._extract_params(obj, mesh)
        key = json.dumps({
            "mesh": ref, "eps": config.per_type_eps(), "levels": config.levels,
            "types": config.types, "strategy": config.strategy,
            "seed": config.initial_pos, "scheme": config.trace.scheme,
            "delta": config.trace.delta, "level": level, "scalar": scalar,
        }, sort_keys=True)
        with self._work_lock:
            with self._id_lock:
                job = self._next_job
                self._next_job += 1
                seq_start = self._seq
                self._seq += 1
            started = time.perf_counter()
            if self._cache is not None and self._cache[0] == key:
                _, payload, base = self._cache
                stats = dict(base, cached=True)
            else:
                result = run_seeding(mesh, config, loc)
                payload = build_document(mesh, result, level=level, scalar=scalar)
                by_type = {t: 0 for t in config.types}
                by_level = {str(k): 0 for k in range(1, config.levels + 1)}
                for p in payload["psls"]:
                    by_type[p["type"]] += 1
                    by_level[str(p["level"])] += 1
                base = {
                    "psls": len(payload["psls"]),
                    "by_type": by_type,
                    "by_level": by_level,
                    "seeds": int(len(result.candidates_home)),
                }
                self._cache = (key, payload, base)
                stats = dict(base, cached=False)
            stats["wall_time"] = time.perf_counter() - started
            with self._id_lock:
                seq_end = self._seq
                self._seq += 1
        stats["job"] = job
        stats["job_seq_start"] = seq_start
        stats["job_seq_end"] = seq_end
        logger.info("job %d: extract %s -> %d psls%s", job, ref,
                    stats["psls"], " (cached)" if stats["cached"] else "")
        return {"status": "ok", "op": "extract", "job": job,
                "stats": stats, "payload": payload}
