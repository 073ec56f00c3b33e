"""Command line front end.

Four subcommands: ``extract`` runs one extraction and writes an
exchange document, ``serve`` starts the request-reply service,
``info`` prints mesh statistics and ``validate`` runs sanity checks on
a mesh file.  Exit codes: 0 success, 1 usage error, 2 data error.
The TSV_LOG environment variable (error, info or debug) sets log
verbosity; default is error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .exchange import build_document, to_bytes
from .mesh import MeshError, build_locator, interpolate_tensor, load_mesh_path
from .seeding import STRATEGIES, SeedingConfig, run_seeding
from .service import ExtractionService
from .tensor import SCALAR_SELECTORS, decompose
from .tracer import PSL_TYPES, TraceConfig

logger = logging.getLogger("stresslines")

DEFAULT_PORT = 7444
DEFAULT_WS_PORT = 7445


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    try:
        x, y, z = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected x,y,z with three numbers, got {text!r}") from None
    return (x, y, z)


def _types(text: str) -> tuple[str, ...]:
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [t for t in names if t not in PSL_TYPES]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"types must be from {'/'.join(PSL_TYPES)}, got {text!r}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stresslines",
                     description="Principal stress line extraction")
    sub = parser.add_subparsers(dest="command", required=True)

    def mesh_arg(p, **kw):
        p.add_argument("--mesh", metavar="PATH", **kw)

    p = sub.add_parser("extract", help="run one extraction, write the result")
    mesh_arg(p, required=True)
    p.add_argument("--eps", type=float, default=0.2, metavar="F",
                   help="line spacing relative to the smallest box extent"
                        " (default 0.2)")
    for t in PSL_TYPES:
        p.add_argument(f"--eps-{t}", type=float, metavar="F",
                       help=f"spacing override for {t} lines")
    p.add_argument("--levels", type=int, default=1, metavar="M",
                   help="multi-resolution depth (default 1)")
    p.add_argument("--strategy", choices=STRATEGIES, default="volume")
    p.add_argument("--scheme", choices=("euler", "rk2", "rk4"), default="rk2")
    p.add_argument("--step-rel", type=float, default=0.5, metavar="F",
                   help="integration step relative to the shortest edge")
    p.add_argument("--seed", type=_seed, metavar="x,y,z",
                   help="start extraction near this point")
    p.add_argument("--types", type=_types, default=PSL_TYPES, metavar="LIST",
                   help="comma-separated subset of major,medium,minor")
    p.add_argument("--scalar", default="von_mises", metavar="NAME",
                   help=f"color attribute, one of {', '.join(SCALAR_SELECTORS)}")
    p.add_argument("--out", metavar="PATH",
                   help="output file (.gz compresses); default stdout")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("serve", help="start the extraction service")
    mesh_arg(p, action="append", default=[],
             help="preload a mesh (repeatable, addressed by file stem)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT, metavar="N")
    p.add_argument("--ws-port", type=int, default=DEFAULT_WS_PORT, metavar="N",
                   help="browser socket port; -1 disables it")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("info", help="print mesh statistics")
    mesh_arg(p, required=True)
    p.set_defaults(func=_cmd_info)

    p = sub.add_parser("validate", help="run sanity checks on a mesh")
    mesh_arg(p, required=True)
    p.add_argument("--samples", type=int, default=256, metavar="N",
                   help="number of spot-check points (default 256)")
    p.set_defaults(func=_cmd_validate)
    return parser


def _per_type_eps(args) -> float | dict[str, float]:
    overrides = {t: getattr(args, f"eps_{t}") for t in PSL_TYPES
                 if getattr(args, f"eps_{t}") is not None}
    if not overrides:
        return args.eps
    return {t: overrides.get(t, args.eps) for t in args.types}


def _cmd_extract(args) -> int:
    mesh = load_mesh_path(args.mesh)
    eps = _per_type_eps(args)
    if isinstance(eps, dict):
        eps = {t: v * mesh.d0 for t, v in eps.items()}
    else:
        eps = eps * mesh.d0
    config = SeedingConfig(
        eps=eps, levels=args.levels, types=args.types, strategy=args.strategy,
        initial_pos=args.seed,
        trace=TraceConfig.for_mesh(mesh, step_rel=args.step_rel,
                                   scheme=args.scheme),
    )
    result = run_seeding(mesh, config)
    doc = build_document(mesh, result, scalar=args.scalar)
    if args.out:
        data = to_bytes(doc, gzip=args.out.endswith(".gz"))
        with open(args.out, "wb") as fh:
            fh.write(data)
        logger.info("wrote %d lines to %s", len(doc["psls"]), args.out)
    else:
        sys.stdout.write(to_bytes(doc).decode("utf-8") + "\n")
    return 0


def _cmd_serve(args) -> int:
    preload = {}
    for path in args.mesh:
        name = os.path.splitext(os.path.basename(path))[0]
        preload[name] = load_mesh_path(path)
    ws_port = None if args.ws_port < 0 else args.ws_port
    service = ExtractionService(host=args.host, port=args.port,
                                ws_port=ws_port, preload=preload)
    service.serve_forever()
    return 0


def _cmd_info(args) -> int:
    mesh = load_mesh_path(args.mesh)
    lo, hi = mesh.bbox_min, mesh.bbox_max
    print(f"cells: {len(mesh.cells)}")
    print(f"vertices: {len(mesh.vertices)}")
    print(f"d0: {mesh.d0:.9g}")
    print(f"min edge: {mesh.min_edge:.9g}")
    print(f"bbox: [{lo[0]:.9g}, {lo[1]:.9g}, {lo[2]:.9g}]"
          f" .. [{hi[0]:.9g}, {hi[1]:.9g}, {hi[2]:.9g}]")
    print(f"layout: {'cartesian' if mesh.cartesian is not None else 'unstructured'}")
    return 0


def _cmd_validate(args) -> int:
    mesh = load_mesh_path(args.mesh)
    locator = build_locator(mesh)
    rng = np.random.default_rng(0)
    failures = 0

    def report(name: str, ok: bool) -> None:
        nonlocal failures
        print(f"{name}: {'ok' if ok else 'FAIL'}")
        failures += 0 if ok else 1

    report("tensor components finite", bool(np.isfinite(mesh.tensors).all()))
    report("positive extents", mesh.d0 > 0 and mesh.min_edge > 0)
    report("boundary present", len(mesh.boundary_vertex_ids()) > 0)

    n = min(args.samples, len(mesh.vertices))
    picks = rng.choice(len(mesh.vertices), size=n, replace=False)
    ortho = order = recon = True
    for t in mesh.tensors[picks]:
        dec = decompose(t)
        order &= dec.sigma[0] >= dec.sigma[1] >= dec.sigma[2]
        ortho &= bool(np.allclose(dec.e @ dec.e.T, np.eye(3), atol=1e-8))
        m = np.array([[t[0], t[3], t[5]], [t[3], t[1], t[4]], [t[5], t[4], t[2]]])
        back = dec.e.T @ np.diag(dec.sigma) @ dec.e
        recon &= bool(np.allclose(back, m, atol=1e-7 * max(1.0, np.abs(m).max())))
    report("principal values ordered", order)
    report("principal frames orthonormal", ortho)
    report("decomposition reconstructs", recon)

    span = mesh.bbox_max - mesh.bbox_min
    pts = mesh.bbox_min + rng.random((args.samples, 3)) * span
    hits = interp_ok = 0
    for p in pts:
        cell = locator.locate(p)
        if cell is None:
            continue
        hits += 1
        interp_ok += int(np.isfinite(interpolate_tensor(mesh, cell, p)).all())
    report("interior points locatable", hits > 0)
    report("interpolation finite", interp_ok == hits)

    vert_hits = sum(locator.locate(v) is not None
                    for v in mesh.vertices[picks])
    report("vertices locatable", vert_hits == n)
    return 0 if failures == 0 else 2


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("TSV_LOG", "error"))
    if level is None:
        level = logging.ERROR
    for h in list(logger.handlers):
        if getattr(h, "_from_cli", False):
            logger.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    handler._from_cli = True
    logger.addHandler(handler)
    logger.setLevel(level)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (MeshError, ValueError, OSError) as exc:
        print(f"stresslines: error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
