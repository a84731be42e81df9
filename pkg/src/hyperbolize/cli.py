"""Command-line pipeline: solve, verify, render, modulus.

Exit codes: 0 success, 2 bad usage or malformed input file, 3 invalid
signature/target, 4 not converged (or refusing an unconverged map),
5 verification failed, 6 modulus search failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import geometry, mapfile, renderer, solver, symmetry, verifier
from .geometry import GeometryError
from .mapfile import MapFileError
from .renderer import RenderConfig, RenderError
from .solver import GridError, SolveError
from .symmetry import SignatureError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID_TARGET = 3
EXIT_NOT_CONVERGED = 4
EXIT_VERIFY_FAILED = 5
EXIT_SEARCH_FAILED = 6


def _parse_orders(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(","))
    except ValueError:
        raise SignatureError(f"cannot parse corner orders: {text!r}") from None


def _parse_color(text: str) -> tuple[float, float, float]:
    names = {
        "white": (1.0, 1.0, 1.0),
        "black": (0.0, 0.0, 0.0),
        "gray": (0.5, 0.5, 0.5),
        "grey": (0.5, 0.5, 0.5),
    }
    if text.lower() in names:
        return names[text.lower()]
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ValueError("color must be a name or r,g,b")
    return tuple(parts)  # type: ignore[return-value]


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def _merge(args: argparse.Namespace, config: dict, key: str, default=None):
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    if key in config:
        return config[key]
    return default


def _build_cells(source: str, orders, aspect: float, modulus_t: float | None,
                 rectangular: bool):
    sig = symmetry.parse_signature(source)
    red = symmetry.supergroup_reduction(sig, rectangular_cell=rectangular)
    symmetry.validate_target(sig, orders, rectangular_cell=rectangular)
    cell_e = symmetry.euclidean_cell_for(red.supergroup_signature, aspect)
    if len(orders) == 3:
        cell_h = geometry.hyperbolic_triangle(*orders)
    else:
        if modulus_t is None:
            raise SolveError(
                "quadrilateral target needs --modulus T (or use the modulus command)"
            )
        cell_h = geometry.hyperbolic_quadrilateral(orders, modulus_t)
    return sig, red, cell_h, cell_e


def cmd_solve(args) -> int:
    config = _load_config(args.config)
    source = _merge(args, config, "from", None) or _merge(args, config, "source", None)
    if source is None:
        print("solve: --from SIGNATURE is required", file=sys.stderr)
        return EXIT_USAGE
    orders = _parse_orders(_merge(args, config, "to", ""))
    delta = float(_merge(args, config, "delta", 0.01))
    tol = float(_merge(args, config, "tol", 1e-8))
    max_sweeps = int(_merge(args, config, "max-sweeps", 500_000))
    relax = float(_merge(args, config, "relax", 1.0))
    aspect = float(_merge(args, config, "aspect", 1.0))
    modulus = _merge(args, config, "modulus", None)
    rectangular = bool(_merge(args, config, "rectangular-cell", False))
    out = _merge(args, config, "out", "map.hyp")

    modulus_t = None
    if modulus is not None and modulus != "search":
        modulus_t = float(modulus)
    sig, red, cell_h, cell_e = _build_cells(source, orders, aspect, modulus_t, rectangular)
    state, report = solver.solve(cell_h, cell_e, delta, tol=tol,
                                 max_sweeps=max_sweeps, relaxation=relax)
    mapfile.save_map(
        out, state, report.converged,
        source_signature=sig.name,
        supergroup_signature=red.supergroup_signature.name,
        target_orders=orders,
    )
    print(f"source signature: {sig.name} ({sig.crystallographic_alias})")
    print(f"supergroup:       {red.supergroup_signature.name} (index {red.index})")
    print(f"target orders:    {','.join(str(o) for o in orders)}")
    print(f"active points:    {state.size}")
    print(f"iterations:       {report.iterations}")
    print(f"final residual:   {report.final_residual:.3e}")
    print(f"conformality med: {math.degrees(report.conformality_median):.4f} deg")
    print(f"wall time:        {report.wall_time:.2f} s")
    print(f"converged:        {report.converged}")
    print(f"map file:         {out}")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_verify(args) -> int:
    try:
        state, meta = mapfile.load_map(args.mapfile)
    except FileNotFoundError:
        print(f"verify: no such file: {args.mapfile}", file=sys.stderr)
        return EXIT_USAGE
    except MapFileError as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if state.size > args.cap:
        print("instance too large for direct verification "
              f"(m={state.size}, cap={args.cap})", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    report = verifier.verification_report(state, dense_cap=args.dense_cap)
    checks = {
        "row sums": report["row_sum_max_deviation"] < 1e-12,
        "sweep equivalence": report["sweep_equivalence_error"] < 1e-12,
        "rho < 1": report["rho_estimate"] < 1.0 - 1e-6 and report["rho_converged"],
        "direct fixed point": report.get("direct_vs_iterative", math.inf) < 1e-5,
        "conjugate halves": report.get("conjugate_consistency", math.inf) < 1e-10,
    }
    for key, value in report.items():
        print(f"{key}: {value}")
    ok = all(checks.values())
    for name, passed in checks.items():
        print(f"{name}: {'PASS' if passed else 'FAIL'}")
    print(f"verification: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def cmd_render(args) -> int:
    try:
        state, meta = mapfile.load_map(args.mapfile)
    except FileNotFoundError:
        print(f"render: no such file: {args.mapfile}", file=sys.stderr)
        return EXIT_USAGE
    except MapFileError as exc:
        print(f"render: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not meta.converged and not args.force:
        print("render: map is not converged (use --force to render anyway)",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    group_h = symmetry.reflection_group(state.cell_hyp)
    group_e = symmetry.reflection_group(state.cell_euc)
    kind = args.ornament
    if kind in renderer._KIND_ALIASES:
        sampler = renderer.synthesize_test_ornament(kind, group_e)
    else:
        image = renderer.read_png(kind)
        h, w = image.shape[:2]
        if args.image_scale is not None:
            scale = args.image_scale
            origin = complex(*(float(v) for v in args.image_origin.split(",")))
        else:
            # fit the raster over the target cell's bounding box
            xs = [v.real for v in state.cell_euc.vertices]
            ys = [v.imag for v in state.cell_euc.vertices]
            scale = max((max(xs) - min(xs)) / w, (max(ys) - min(ys)) / h)
            origin = complex(min(xs), min(ys))
        placement = geometry.Motion.from_coefficients(scale, origin, 0.0, 1.0)
        sampler = renderer.RasterOrnamentSampler(
            image, placement, wrap=args.wrap,
            group=group_e if args.wrap == "fold" else None,
        )
    cfg = RenderConfig(
        resolution=args.resolution,
        supersampling=args.supersample,
        max_word_length=args.word_cap,
        background=_parse_color(args.background),
        disk_margin=args.margin,
    )
    image = renderer.render(state, group_h, group_e, sampler, cfg,
                            converged=meta.converged, force=args.force)
    metadata = {
        "source_signature": meta.source_signature,
        "supergroup_signature": meta.supergroup_signature,
        "target_orders": ",".join(str(o) for o in meta.target_orders),
        "delta": meta.delta,
        "residual": meta.residual,
        "word_cap": cfg.max_word_length,
    }
    renderer.write_png(args.out, image, metadata)
    detail = renderer.symmetry_check_detail(image, group_h.generators,
                                            samples=args.check_samples)
    print(f"wrote {args.out} ({cfg.resolution}x{cfg.resolution})")
    print(f"symmetry check: max={detail['max']:.4f} median={detail['median']:.2e} "
          f"p99={detail['p99']:.4f} over {detail['pairs']} pairs")
    return EXIT_OK


def cmd_modulus(args) -> int:
    config = _load_config(args.config)
    source = _merge(args, config, "from", None) or _merge(args, config, "source", None)
    if source is None:
        print("modulus: --from SIGNATURE is required", file=sys.stderr)
        return EXIT_USAGE
    orders = _parse_orders(_merge(args, config, "to", ""))
    if len(orders) != 4:
        print("modulus: --to must give four corner orders", file=sys.stderr)
        return EXIT_USAGE
    delta = float(_merge(args, config, "delta", 0.02))
    tol = float(_merge(args, config, "tol", 1e-3))
    aspect = float(_merge(args, config, "aspect", 1.0))
    rectangular = bool(_merge(args, config, "rectangular-cell", False))
    out = _merge(args, config, "out", "map.hyp")

    sig = symmetry.parse_signature(source)
    red = symmetry.supergroup_reduction(sig, rectangular_cell=rectangular)
    if red.supergroup_signature.name != "*2222":
        print("modulus: source must reduce to the rectangle reflection group",
              file=sys.stderr)
        return EXIT_INVALID_TARGET
    symmetry.validate_target(sig, orders, rectangular_cell=rectangular)
    cell_e = symmetry.euclidean_cell_for(red.supergroup_signature, aspect)
    t_star, state = solver.modulus_search(orders, cell_e, delta, tol=tol)
    energy = solver.conformal_energy(state)
    mapfile.save_map(
        out, state, True,
        source_signature=sig.name,
        supergroup_signature=red.supergroup_signature.name,
        target_orders=orders,
    )
    print(f"t_star: {t_star:.6f}")
    print(f"energy: {energy:.6e}")
    print(f"active points: {state.size}")
    print(f"map file: {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperbolize",
        description="Transform Euclidean wallpaper ornaments into Poincare-disk images",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute a cell map")
    p_solve.add_argument("--from", dest="source", help="source wallpaper signature")
    p_solve.add_argument("--to", help="target corner orders, e.g. 4,3,3")
    p_solve.add_argument("--delta", type=float, help="grid spacing")
    p_solve.add_argument("--tol", type=float, help="residual tolerance")
    p_solve.add_argument("--max-sweeps", type=int, dest="max_sweeps")
    p_solve.add_argument("--relax", type=float, help="over-relaxation in [1, 1.95)")
    p_solve.add_argument("--aspect", type=float, help="rectangle aspect for *2222")
    p_solve.add_argument("--modulus", help="family parameter t for quad targets")
    p_solve.add_argument("--rectangular-cell", action="store_true", dest="rectangular_cell",
                         help="assert a rectangular cell for 2222 / o sources")
    p_solve.add_argument("--workers", type=int, default=0,
                         help="worker count (vectorized execution; reserved)")
    p_solve.add_argument("--config", help="JSON config file (flags override)")
    p_solve.add_argument("--out", help="output map file")
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="check a solved map")
    p_verify.add_argument("mapfile")
    p_verify.add_argument("--cap", type=int, default=4000,
                          help="max point count for direct verification")
    p_verify.add_argument("--dense-cap", type=int, default=300, dest="dense_cap",
                          help="max point count for the dense eigensolve")
    p_verify.set_defaults(func=cmd_verify)

    p_render = sub.add_parser("render", help="render the disk image")
    p_render.add_argument("mapfile")
    p_render.add_argument("--ornament", default="checkerboard",
                          help="checkerboard | grid | corners | path to a PNG")
    p_render.add_argument("--out", default="disk.png")
    p_render.add_argument("--resolution", type=int, default=1024)
    p_render.add_argument("--supersample", type=int, default=2, choices=(1, 2, 4))
    p_render.add_argument("--word-cap", type=int, default=200, dest="word_cap")
    p_render.add_argument("--background", default="white")
    p_render.add_argument("--margin", type=float, default=0.0)
    p_render.add_argument("--wrap", default="fold", choices=("fold", "tile"))
    p_render.add_argument("--image-scale", type=float, dest="image_scale",
                          help="plane units per source pixel")
    p_render.add_argument("--image-origin", default="0,0", dest="image_origin")
    p_render.add_argument("--check-samples", type=int, default=2000, dest="check_samples")
    p_render.add_argument("--force", action="store_true")
    p_render.add_argument("--workers", type=int, default=0)
    p_render.set_defaults(func=cmd_render)

    p_mod = sub.add_parser("modulus", help="search the quadrilateral family parameter")
    p_mod.add_argument("--from", dest="source")
    p_mod.add_argument("--to", help="four corner orders, e.g. 3,2,3,2")
    p_mod.add_argument("--aspect", type=float)
    p_mod.add_argument("--delta", type=float)
    p_mod.add_argument("--tol", type=float, help="bracket tolerance on t")
    p_mod.add_argument("--rectangular-cell", action="store_true", dest="rectangular_cell")
    p_mod.add_argument("--config")
    p_mod.add_argument("--out")
    p_mod.add_argument("--workers", type=int, default=0)
    p_mod.set_defaults(func=cmd_modulus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SignatureError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_TARGET
    except (GridError, RenderError, MapFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolveError as exc:
        msg = str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_SEARCH_FAILED if "modulus search" in msg else EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
