"""Command line: render, puzzle, tableau, moduli, area and renorm.

Every run writes its outputs plus a manifest.json (settings, version, wall time
and SHA-256 digests of the outputs) into --out-dir. Exit codes: 0 success,
2 usage or precondition error, 3 numerical failure, 1 I/O failure.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (DEFAULT_BUDGET, FIXED_POINT_TOL, LANDING_TOL, Q_MAX, RAY_TOL, escape_counts,
                       fixed_points)
from .errors import NumericalError, PreconditionError
from .mask import PixelGrid

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


# -- serialization ------------------------------------------------------------

def _num(x: float) -> str:
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"Infinite"' if x > 0 else '"-Infinite"'
    s = format(x, ".17g")
    if not any(ch in s for ch in ".eE"):
        s += ".0"
    return s


def dumps(obj, indent: int = 1, _level: int = 0) -> str:
    """JSON with floats written to 17 significant digits (inf as "Infinite")."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, str, bool, np.integer, np.floating)) or v is None for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_schema(name: str) -> dict:
    return json.loads(resources.files("yoccoz").joinpath("schemas", f"{name}.schema.json").read_text())


class Run:
    """Collects outputs of one command and writes the manifest last."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out_dir)
        self.files = {}
        self.t0 = time.perf_counter()

    def write(self, name: str, data) -> Path:
        if isinstance(data, str):
            data = data.encode()
        path = self.out / name
        _atomic_write(path, data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.write(name, dumps(obj) + "\n")

    def finish(self) -> None:
        a = self.args
        settings = {k: v for k, v in sorted(vars(a).items()) if k not in ("func", "out_dir")}
        if "c" in settings:
            settings["c"] = [a.c.real, a.c.imag]
        manifest = {
            "command": self.argv,
            "subcommand": a.command,
            "version": __version__,
            "settings": settings,
            "tolerances": {"fixed_point": FIXED_POINT_TOL, "landing": LANDING_TOL, "ray": RAY_TOL,
                           "q_max": Q_MAX, "budget": DEFAULT_BUDGET},
            "wall_time": time.perf_counter() - self.t0,
            "outputs": dict(sorted(self.files.items())),
        }
        _atomic_write(self.out / "manifest.json", (dumps(manifest) + "\n").encode())


# -- argument types -----------------------------------------------------------

def parse_c(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")
    try:
        re_, im = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two decimals, got {text!r}") from None
    if not (math.isfinite(re_) and math.isfinite(im)):
        raise argparse.ArgumentTypeError("c must be finite")
    return complex(re_, im)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


# -- commands -----------------------------------------------------------------

def _puzzle(args, depth=None):
    from .puzzle import build_puzzle

    return build_puzzle(fixed_points(args.c), args.depth if depth is None else depth,
                        h0=args.h0, resolution=args.res)


def cmd_render(args, run: Run) -> None:
    from PIL import Image

    grid = PixelGrid.square(args.half_width, args.res)
    n = escape_counts(args.c, grid.centers(), args.budget)
    bounded = n >= args.budget
    shade = (255 - (np.minimum(n, 63) * 4)).astype(np.uint8)
    shade[bounded] = 0
    img = Image.fromarray(shade[::-1])  # image row 0 is the top edge
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False, compress_level=6)
    run.write("render.png", buf.getvalue())
    run.write_json("render.json", {"c": [args.c.real, args.c.imag], "resolution": args.res,
                                   "half_width": args.half_width, "budget": args.budget,
                                   "bounded_pixels": int(bounded.sum())})


def puzzle_document(P) -> dict:
    from .measure import boundary_area

    levels = []
    for n in range(P.depth + 1):
        diam = P.piece_diameters(n)
        pieces = [{"id": p.id, "parent": p.parent_id, "children": sorted(p.children_ids),
                   "critical": p.is_critical, "pixels": p.count, "area": p.area,
                   "diameter": float(diam[p.id])} for p in P.levels[n]]
        levels.append({"level": n, "boundary_area": boundary_area(P, n), "pieces": pieces})
    g = P.grid
    return {"c": [P.c.real, P.c.imag], "alpha": [P.param.alpha.real, P.param.alpha.imag],
            "depth": P.depth, "h0": P.h0, "resolution": [g.nx, g.ny],
            "bbox": [g.xmin, g.xmax, g.ymin, g.ymax],
            "ray_cycle": [f"{a.numerator}/{a.denominator}" for a in P.ray_cycle], "levels": levels}


def puzzle_svg(P, max_level=None) -> str:
    from skimage import measure

    g = P.grid
    top = P.depth if max_level is None else min(max_level, P.depth)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{g.xmin:.6f} {-g.ymax:.6f} '
           f'{g.xmax - g.xmin:.6f} {g.ymax - g.ymin:.6f}" width="1024" height="1024">',
           "<style>path{fill:none;stroke-linejoin:round}"]
    for n in range(top + 1):
        w = 0.012 / (1 + n)
        out.append(f".L{n}{{stroke:hsl({(n * 37) % 360},70%,40%);stroke-width:{w:.5f}}}")
    out.append("</style>")
    for n in range(top + 1):
        out.append(f'<g class="L{n}">')
        for p in P.levels[n]:
            m = P.piece_mask(n, p.id, pad=2)
            d = []
            for contour in measure.find_contours(m.bitmap.astype(float), 0.5):
                z = m.grid.center(contour[:, 0], contour[:, 1])
                pts = " L".join(f"{x:.5f},{-y:.5f}" for x, y in zip(z.real, z.imag))
                d.append(f"M{pts}Z")
            out.append(f'<path class="L{n}" data-piece="{n}:{p.id}" d="{" ".join(d)}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_puzzle(args, run: Run) -> None:
    P = _puzzle(args)
    run.write_json("puzzle.json", puzzle_document(P))
    run.write("puzzle.svg", puzzle_svg(P, args.svg_levels))
    if args.masks:
        for n in range(P.depth + 1):
            run.write(f"masks/critical_{n:02d}.mask",
                      P.piece_mask(n, P.critical_ids[n], window="full").to_bytes())


def cmd_tableau(args, run: Run) -> None:
    from .tableau import longest_univalent_pullback, marked_grid, recurrence_verdict, tau_values

    from .dynamics import critical_orbit
    from .errors import CriticalOrbitEscaped

    width = 2 * args.depth if args.width is None else args.width
    orb = critical_orbit(args.c, width + 1)
    if orb.escaped_at is not None and orb.escaped_at <= width:
        raise CriticalOrbitEscaped(f"critical orbit escapes at step {orb.escaped_at}")
    P = _puzzle(args)
    grid = marked_grid(P, args.depth, width)
    verdict = recurrence_verdict(grid)
    run.write_json("tableau.json", {
        "c": [args.c.real, args.c.imag], "depth": grid.depth, "width": grid.width,
        "marks": grid.rows(), "tau": tau_values(grid), "verdict": verdict.kind.value,
        "period": verdict.period, "n0": verdict.n0,
        "longest_univalent_pullback": longest_univalent_pullback(grid)})


def cmd_moduli(args, run: Run) -> None:
    from .moduli import weighted_tree

    P = _puzzle(args)
    T = weighted_tree(P)
    pieces = [{"piece_id": v[1], "level": v[0], "mu": mu,
               "method": "degenerate" if T.degenerate.get(v) else "solved"}
              for v, mu in sorted(T.mu.items())]
    run.write_json("moduli.json", {"c": [args.c.real, args.c.imag], "depth": P.depth,
                                   "pieces": pieces, "M_n": T.branch_minima()})


def cmd_area(args, run: Run) -> None:
    from .measure import area_report, julia_area_upper_bound
    from .moduli import weighted_tree

    P = _puzzle(args)
    tree = weighted_tree(P) if P.depth >= 1 else None
    rep = area_report(P, tree)
    run.write("area.csv", rep.to_csv())
    bound, slack = julia_area_upper_bound(P)
    print(f"julia area upper bound at depth {P.depth}: {bound:.6g} (boundary slack {slack:.3g})")


def cmd_renorm(args, run: Run) -> None:
    from .renorm import build_first_return_plm, cantor_diagnostics, check_plm, plm_orbit_check

    P = _puzzle(args)
    g = build_first_return_plm(P, args.level, args.budget)
    names = {v.name for v in check_plm(g)}
    doc = {"c": [args.c.real, args.c.imag], "level": g.level, "returns": list(g.returns),
           "pieces": [{"id": p.id, "level": p.level, "degree": p.degree, "l": p.l} for p in g.pieces],
           "checks": {"disjoint": "disjointness" not in names, "contained": "containment" not in names,
                      "unique_critical": "unique_critical" not in names,
                      "orbit_ok": "orbit" not in names and plm_orbit_check(g, args.iterations)}}
    if args.cantor:
        cd = cantor_diagnostics(g, args.cantor)
        doc["cantor"] = {"max_diameter": list(cd.max_diameter), "area": list(cd.area)}
    run.write_json("plm.json", doc)


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--c", type=parse_c, required=True, help="parameter as 're,im'")
    common.add_argument("--depth", type=_nonneg_int, default=6)
    common.add_argument("--res", type=_positive_int, default=2048, help="pixels per side")
    common.add_argument("--h0", type=_positive_float, default=1.0, help="outer equipotential")
    common.add_argument("--out-dir", default=".", help="directory for outputs")
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="accepted for compatibility; computations are single-threaded")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized generators")

    p = argparse.ArgumentParser(prog="yoccoz", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", parents=[common], help="escape-time raster (PNG)")
    r.add_argument("--half-width", type=_positive_float, default=2.0)
    r.add_argument("--budget", type=_positive_int, default=256)
    r.set_defaults(func=cmd_render, depth=0)

    s = sub.add_parser("puzzle", parents=[common], help="puzzle pieces (JSON, SVG, masks)")
    s.add_argument("--svg-levels", type=_nonneg_int, default=None, help="deepest level drawn")
    s.add_argument("--masks", action="store_true", help="write critical-piece masks")
    s.set_defaults(func=cmd_puzzle)

    s = sub.add_parser("tableau", parents=[common], help="marked grid, tau and verdict (JSON)")
    s.add_argument("--width", type=_nonneg_int, default=None, help="orbit columns (default 2*depth)")
    s.set_defaults(func=cmd_tableau)

    s = sub.add_parser("moduli", parents=[common], help="annulus moduli and M_n (JSON)")
    s.set_defaults(func=cmd_moduli)

    s = sub.add_parser("area", parents=[common], help="areas per level and decay (CSV)")
    s.set_defaults(func=cmd_area)

    s = sub.add_parser("renorm", parents=[common], help="first-return map (JSON)")
    s.add_argument("--level", type=_positive_int, default=None)
    s.add_argument("--budget", type=_positive_int, default=None)
    s.add_argument("--iterations", type=_positive_int, default=100)
    s.add_argument("--cantor", type=_nonneg_int, default=0, help="preimage depth for diagnostics")
    s.set_defaults(func=cmd_renorm)
    return p


def _fix_negative_values(argv):
    # "--c -2,0" would otherwise be read as an unknown option
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--c" and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"--c={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_fix_negative_values(argv))
    except SystemExit as e:
        return int(e.code or 0)
    run = Run(args, argv)
    try:
        args.func(args, run)
    except PreconditionError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"I/O error: {e.filename or ''}: {e.strerror or e}", file=sys.stderr)
        return EXIT_IO
    run.finish()
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
