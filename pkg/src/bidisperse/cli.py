"""Command-line interface.

Exit codes: 0 success, 2 invalid parameters or arguments, 3 state outside the
phase space (or not on the requested locus), 4 unresolved Riemann structure,
5 simulation abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import fd
from . import hugoniot as hg
from . import io
from . import model as mc
from . import riemann as rm
from . import spectral as sp
from .model import ModelParams, State

EXIT_PARAMS = 2
EXIT_STATE = 3
EXIT_UNRESOLVED = 4
EXIT_SIMULATION = 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _pair(text: str) -> State:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'phi1,phi2', got {text!r}") from None
    return State(a, b)


def _window(text: str) -> tuple[float, float, float, float]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        vals = ()
    if len(vals) != 4:
        raise argparse.ArgumentTypeError(f"expected 'x0,x1,y0,y1', got {text!r}")
    return vals


def _params(args) -> ModelParams:
    try:
        p = ModelParams.from_file(args.params) if args.params else mc.preset(args.preset)
        report = mc.validate_params(p)
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_PARAMS, str(exc)) from exc
    if not report.valid:
        raise CliError(EXIT_PARAMS, "; ".join(report.violations))
    return p


def _check_state(p: ModelParams, s: State, what: str) -> State:
    if not mc.in_phase_space(p, s):
        raise CliError(EXIT_STATE, f"{what} {tuple(s)} is outside the phase space")
    return s


def derived_constants(p: ModelParams) -> dict:
    a1, a2 = sp.inflection_points_axes(p)
    rep = sp.coincidence_points(p)
    return {
        "phi_star": hg.phi_star(p),
        "phi_sigma": hg.phi_sigma(p),
        "contact_speed": hg.contact_speed(p),
        "inflection_points": [list(a1), list(a2)],
        "coincidence": rep.to_dict(),
    }


class Run:
    """Collects written files and the manifest of one command."""

    def __init__(self, args, p: ModelParams, command: str, options: dict):
        self.args = args
        self.out = Path(args.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = io.RunManifest(command, p, options, derived=derived_constants(p))

    def path(self, name: str) -> Path:
        self.manifest.outputs.append(name)
        return self.out / name

    def svg(self, name: str, plot: io.PhasePlot):
        if not self.args.no_svg:
            plot.write(self.path(name))

    def finish(self, results: dict | None = None) -> dict:
        if results:
            self.manifest.results.update(results)
        self.manifest.outputs.append("manifest.json")
        self.manifest.write(self.out / "manifest.json")
        return self.manifest.to_dict()


# ------------------------------------------------------------------- commands

def cmd_eigen(args) -> dict:
    p = _params(args)
    run = Run(args, p, "eigen", {"state": args.state and list(args.state), "grid": args.grid})
    if args.grid:
        t = np.linspace(0.0, p.phi_max, args.grid)
        X, Y = np.meshgrid(t, t, indexing="ij")
        X, Y = X.ravel(), Y.ravel()
        lam1, lam2 = sp.eigenvalues(p, (X, Y), extended=True)
        disc = sp.discriminant(p, (X, Y), extended=True)
        inside = np.asarray(mc.in_phase_space(p, (X, Y)))
        rows = [(x, y, a, b, d, bool(k)) for x, y, a, b, d, k in zip(X, Y, lam1, lam2, disc, inside)]
        io.write_csv(run.path("eigen.csv"),
                     ["phi1", "phi2", "lambda1", "lambda2", "discriminant", "inside"], rows)
        return run.finish({"rows": len(rows)})
    s = _check_state(p, args.state, "state")
    data = sp.spectral_data(p, s).to_dict()
    io.write_json(run.path("eigen.json"), data)
    return run.finish({"eigen": data})


def _locus_branches(p: ModelParams, base: State, window, resolution: int) -> list[hg.LocusBranch]:
    if max(abs(base[0]), abs(base[1])) == 0.0 and window == (0.0, 1.0, 0.0, 1.0):
        return hg.origin_locus(p, resolution)
    return hg.generic_locus(p, base, window, resolution)


def cmd_locus(args) -> dict:
    p = _params(args)
    base = _check_state(p, args.base, "base state")
    run = Run(args, p, "locus", {"base": list(base), "window": list(args.window),
                                 "resolution": args.resolution})
    branches = _locus_branches(p, base, tuple(args.window), args.resolution)
    rows = [(b.kind, *row) for b in branches for row in b.rows()]
    io.write_csv(run.path("locus.csv"), ["branch", "phi1", "phi2", "sigma", "class", "char_flags"], rows)
    plot = io.PhasePlot(title=f"Hugoniot locus of {tuple(base)}")
    for b in branches:
        plot.shock_segments(b.points, [c.kind for c in b.classes])
    plot.point(base, label="base")
    run.svg("locus.svg", plot)
    return run.finish({"branches": [{"kind": b.kind, "points": len(b)} for b in branches]})


def cmd_classify(args) -> dict:
    p = _params(args)
    left = _check_state(p, args.left, "left state")
    right = _check_state(p, args.right, "right state")
    run = Run(args, p, "classify", {"left": list(left), "right": list(right), "tol": args.tol})
    try:
        sigma = hg.shock_speed(p, left, right)
    except ValueError as exc:
        raise CliError(EXIT_STATE, str(exc)) from exc
    if sigma is None:
        raise CliError(EXIT_STATE, f"{tuple(right)} is not on the Hugoniot locus of {tuple(left)}")
    cls = hg.classify_shock(p, left, right, sigma, rtol=args.tol)
    data = {"sigma": sigma, **cls.to_dict(), "flags": cls.flags}
    io.write_json(run.path("classify.json"), data)
    return run.finish({"classification": data})


def _solution_plot(sol: rm.WaveCurveSolution, title: str) -> io.PhasePlot:
    plot = io.PhasePlot(title=title)
    for seg in sol.segments:
        if seg.kind == "rarefaction" and seg.path is not None:
            plot.polyline(seg.path, "#000000")
        elif seg.path is not None:
            plot.polyline(seg.path, io.CLASS_COLOR["Lax1"], io.CLASS_STYLE["Lax1"])
        else:
            plot.polyline([seg.left, seg.right], io.CLASS_COLOR.get(seg.shock_class.kind, "#000000"),
                          io.CLASS_STYLE.get(seg.shock_class.kind, ""))
    plot.point(sol.left_datum, label="L")
    plot.point(sol.right_datum, label="R")
    for m in sol.middle_states:
        plot.point(m, "#555555", 2.5)
    return plot


def cmd_riemann(args) -> dict:
    p = _params(args)
    left = _check_state(p, args.left, "left state")
    opts = {"left": list(left), "to_max": args.to_max, "samples": args.samples}
    try:
        if args.to_max:
            target = _check_state(p, args.right, "target") if args.right else None
            opts["right"] = list(target) if target else None
            run = Run(args, p, "riemann", opts)
            sol = rm.solve_rp_to_max(p, left, target)
        else:
            if args.right is None:
                raise CliError(EXIT_PARAMS, "--right is required unless --to-max is given")
            right = _check_state(p, args.right, "right state")
            if max(abs(left[0]), abs(left[1])) != 0.0:
                raise CliError(EXIT_PARAMS, "only clear liquid (0,0) is supported as left state")
            opts["right"] = list(right)
            run = Run(args, p, "riemann", opts)
            sol = rm.solve_rp_origin(p, right)
    except (rm.UnresolvedStructure, rm.MiddleStateError) as exc:
        raise CliError(EXIT_UNRESOLVED, str(exc)) from exc
    io.write_json(run.path("solution.json"), sol.to_dict())
    speeds = [v for seg in sol.segments for v in (seg.speed_lo, seg.speed_hi)] or [0.0]
    lo, hi = min(speeds), max(speeds)
    pad = max(0.1 * (hi - lo), 1e-3)
    xi = np.linspace(lo - pad, hi + pad, args.samples)
    prof = rm.sample_profile(sol, xi)
    io.write_csv(run.path("profile.csv"), ["xi", "phi1", "phi2"],
                 [(z, a, b) for z, (a, b) in zip(xi, prof)])
    run.svg("solution.svg", _solution_plot(sol, f"wave curve from {tuple(left)}"))
    return run.finish({"structure": sol.structure, "pattern": sol.pattern,
                       "middle_states": [list(m) for m in sol.middle_states],
                       "crossings": sol.crossings})


def cmd_simulate(args) -> dict:
    p = _params(args)
    x0, x1 = args.domain
    try:
        grid = fd.Grid1D(x0, x1, args.cells)
        config = fd.SimConfig(args.cfl, args.t_end, args.scheme)
    except ValueError as exc:
        raise CliError(EXIT_PARAMS, str(exc)) from exc
    opts = {"grid": grid.to_dict(), "config": config.to_dict()}
    if args.batch is not None:
        phi0 = _check_state(p, args.batch, "initial state")
        opts.update(batch=list(phi0), length=args.length)
        try:
            cells = fd.init_batch(p, grid, phi0, args.length)
        except ValueError as exc:
            raise CliError(EXIT_PARAMS, str(exc)) from exc
    else:
        left = _check_state(p, args.left, "left state")
        right = _check_state(p, args.right, "right state")
        opts.update(left=list(left), right=list(right))
        cells = fd.init_riemann(grid, left, right)
    run = Run(args, p, "simulate", opts)
    times = sorted(set(args.snapshot) | {config.t_end})
    try:
        res = fd.run(p, cells, grid, config, snapshots=times)
    except fd.SimulationError as exc:
        raise CliError(EXIT_SIMULATION, str(exc)) from exc
    x = grid.centers
    for t in times:
        field = res.snapshots[t]
        io.write_csv(run.path(f"snapshot_t{t!r}.csv"), ["x", "phi1", "phi2"],
                     [(a, b, c) for a, (b, c) in zip(x, field)])
    results = {"steps": res.steps, "t": res.t, "clamped": res.clamped,
               "mass": list(res.mass(grid))}
    if args.compare:
        if args.batch is not None or max(abs(args.left[0]), abs(args.left[1])) != 0.0:
            raise CliError(EXIT_PARAMS, "--compare needs a Riemann problem with left state (0,0)")
        try:
            sol = rm.solve_rp_origin(p, args.right)
        except rm.MiddleStateError as exc:
            raise CliError(EXIT_UNRESOLVED, str(exc)) from exc
        if res.t > 0:
            err = fd.compare_profile(grid, res.cells, res.t, sol)
            results["l1_error"] = list(err)
            results["wave_speeds"] = [seg.speed_lo for seg in sol.segments]
    return run.finish(results)


def cmd_map(args) -> dict:
    p = _params(args)
    run = Run(args, p, "map", {"kind": args.kind, "resolution": args.resolution,
                               "extended": args.extended})
    plot = io.PhasePlot(title=f"{args.kind} map")
    results: dict = {}
    if args.kind == "discriminant":
        if args.extended:
            dmap = sp.extended_discriminant_map(p, resolution=args.resolution)
            X, Y = np.meshgrid(dmap.xs, dmap.ys, indexing="ij")
            rows = zip(X.ravel(), Y.ravel(), dmap.values.ravel())
            plot = io.PhasePlot(title="discriminant sign (extended flux)", window=(-0.2, 1.2, -0.2, 1.2))
            neg = np.column_stack([X.ravel(), Y.ravel()])[dmap.values.ravel() < 0.0]
            dx = dmap.xs[1] - dmap.xs[0]
            dy = dmap.ys[1] - dmap.ys[0]
            plot.cells(neg, dx, dy)
            results["elliptic_inside_triangle"] = dmap.elliptic_inside_triangle(p.phi_max)
            results["boundary_adjacent"] = [{"state": list(c.state), "adjacent": adj}
                                            for c, adj in dmap.boundary_adjacent]
        else:
            t = (np.arange(args.resolution) + 0.5) / args.resolution
            X, Y = np.meshgrid(t, t, indexing="ij")
            keep = mc.free_volume(p, (X, Y)) > 0.0
            X, Y = X[keep], Y[keep]
            values = sp.discriminant(p, (X, Y))
            rows = zip(X, Y, values)
            results["min_inside"] = float(np.min(values))
        io.write_csv(run.path("discriminant.csv"), ["phi1", "phi2", "value"], rows)
        for q in sp.coincidence_points(p).points:
            plot.point(q.state, "#d00000", label="Q")
    elif args.kind == "inflection":
        rows = []
        names = rm.named_inflection_branches(p)
        for name, pts in names.items():
            rows.extend((name, a, b) for a, b in pts)
            plot.polyline(pts, "#000000", "8,3,2,3")
        io.write_csv(run.path("inflection.csv"), ["branch", "phi1", "phi2"], rows)
        results["branches"] = {k: len(v) for k, v in names.items()}
    elif args.kind == "double_contact":
        curves = rm.double_contact_locus(p, seeds=args.seeds)
        rows = [(k, *row) for k, c in enumerate(curves) for row in c.rows()]
        io.write_csv(run.path("double_contact.csv"),
                     ["curve", "b_phi1", "b_phi2", "c_phi1", "c_phi2", "sigma"], rows)
        for c in curves:
            plot.polyline(c.b_points, "#000000")
            plot.polyline(c.c_points, "#000000", "4,2")
        for pts in rm.named_inflection_branches(p).values():
            plot.polyline(pts, "#888888", "8,3,2,3", 1.0)
        results["curves"] = [{"pairs": len(c), "stop_reasons": list(c.stop_reasons)} for c in curves]
    else:
        branches = hg.origin_locus(p, args.resolution)
        rows = [(b.kind, *row) for b in branches for row in b.rows()]
        io.write_csv(run.path("classification.csv"),
                     ["branch", "phi1", "phi2", "sigma", "class", "char_flags"], rows)
        for b in branches:
            plot.shock_segments(b.points, [c.kind for c in b.classes])
    run.svg(f"{args.kind}.svg", plot)
    return run.finish(results)


def cmd_report(args) -> dict:
    p = _params(args)
    run = Run(args, p, "report", {"seed": args.seed, "samples": args.samples})
    rng = np.random.default_rng(args.seed)
    pts = rng.random((args.samples, 2))
    pts = pts[pts.sum(axis=1) < 1.0]
    closed = np.array(sp.eigenvalues(p, pts.T))
    worst = 0.0
    for s, lam in zip(pts, closed.T):
        num = sp.matrix_eigenvalues(sp.numeric_jacobian(p, s))
        worst = max(worst, float(np.max(np.abs(np.sort(np.real(num)) - lam))))
    data = {"validation": mc.validate_params(p).to_dict(), "derived": run.manifest.derived,
            "eigen_oracle_max_error": worst, "eigen_oracle_samples": int(len(pts))}
    io.write_json(run.path("report.json"), data)
    return run.finish(data)


COMMANDS = {
    "eigen": cmd_eigen,
    "locus": cmd_locus,
    "classify": cmd_classify,
    "riemann": cmd_riemann,
    "simulate": cmd_simulate,
    "map": cmd_map,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", default="example1", choices=sorted(mc.PRESETS))
    common.add_argument("--params", help="JSON file {\"v_inf\": [a, b], \"n\": [c, d]}")
    common.add_argument("--out-dir", default="out")
    common.add_argument("--tol", type=float, default=hg.CHAR_RTOL,
                        help="relative tolerance for characteristic equalities")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--no-svg", action="store_true")

    ap = argparse.ArgumentParser(prog="bidisperse", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eigen", parents=[common], help="eigenvalues at a state or on a grid")
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--state", type=_pair)
    g.add_argument("--grid", type=int)

    lo = sub.add_parser("locus", parents=[common], help="Hugoniot locus of a base state")
    lo.add_argument("--base", type=_pair, required=True)
    lo.add_argument("--window", type=_window, default=(0.0, 1.0, 0.0, 1.0))
    lo.add_argument("--resolution", type=int, default=200)

    c = sub.add_parser("classify", parents=[common], help="classify a discontinuity")
    c.add_argument("--left", type=_pair, required=True)
    c.add_argument("--right", type=_pair, required=True)

    r = sub.add_parser("riemann", parents=[common], help="semi-analytical Riemann solution")
    r.add_argument("--left", type=_pair, required=True)
    r.add_argument("--right", type=_pair)
    r.add_argument("--to-max", action="store_true", help="wave curve from --left to the packing line")
    r.add_argument("--samples", type=int, default=401)

    s = sub.add_parser("simulate", parents=[common], help="finite-volume run")
    s.add_argument("--left", type=_pair, default=State(0.0, 0.0))
    s.add_argument("--right", type=_pair, default=State(0.2, 0.25))
    s.add_argument("--batch", type=_pair, help="settling column with this initial state")
    s.add_argument("--length", type=float, default=1.0)
    s.add_argument("--domain", type=lambda t: tuple(float(v) for v in t.split(",")), default=(-1.0, 1.0))
    s.add_argument("--cells", type=int, default=800)
    s.add_argument("--cfl", type=float, default=0.45)
    s.add_argument("--t-end", type=float, default=0.5)
    s.add_argument("--scheme", choices=fd.SCHEMES, default="rusanov")
    s.add_argument("--snapshot", type=float, action="append", default=[])
    s.add_argument("--compare", action="store_true")

    m = sub.add_parser("map", parents=[common], help="fields and loci over the phase triangle")
    m.add_argument("--kind", required=True, choices=["discriminant", "inflection", "double_contact",
                                                     "classification"])
    m.add_argument("--resolution", type=int, default=200)
    m.add_argument("--extended", action="store_true")
    m.add_argument("--seeds", type=int, default=64)

    rp = sub.add_parser("report", parents=[common], help="parameter check and derived constants")
    rp.add_argument("--samples", type=int, default=1000)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    print(json.dumps(io._plain(out.get("results", {})), sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
