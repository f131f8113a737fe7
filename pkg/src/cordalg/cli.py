"""Command line entry point.

Subcommands: compute | analyze | sets | trace | check.  All file output is
UTF-8 JSON; exit status 0 on success, 1 on genericity exhaustion, 2 on spec
errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .energy import diagonal_data, energy, find_critical_points
from .errors import CordAlgError, GenericityExhausted, SpecError
from .flow import DEFAULT_CONVENTIONS, FlowContext, _Tracer, dhat_of_trace, \
    terminal_generator_values
from .incidence import chord_knot_intersections, f_start_value, framing_event
from .knots import build_curve, build_framing, linking_number
from .pipeline import compute_cord_algebra, genericity_check
from .ring import serialize
from .tolerances import DEFAULT_TOL


def _load_spec(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read knot spec {path}: {exc}") from exc


def _emit(data, args):
    text = json.dumps(data, indent=2, sort_keys=True, default=_jsonable)
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _tol(args):
    tol = DEFAULT_TOL
    if args.tol_scale != 1.0:
        tol = tol.scaled(args.tol_scale)
    if getattr(args, "max_perturb", None) is not None:
        from dataclasses import replace
        tol = replace(tol, max_perturb=args.max_perturb)
    return tol


def _curve_and_framing(spec, tol):
    rotation = float(spec.get("framing_rotation", 0.0))
    curve = build_curve(spec, tol=tol)
    if curve.metadata.get("layout") == "braid" and rotation == 0.0:
        rotation = 0.15
    framing_spec = spec.get("framing", {})
    frame = build_framing(
        curve,
        kind=framing_spec.get("kind", "blackboard"),
        table=framing_spec.get("table"),
        rotation=framing_spec.get("rotation", rotation),
    )
    return curve, frame


def cmd_compute(args):
    spec = _load_spec(args.spec)
    result = compute_cord_algebra(
        spec, framing=args.framing, seed=args.seed, tol=_tol(args))
    doc = result.presentation.to_dict()
    doc["metadata"].update({
        "lk": result.linking,
        "census": list(result.census),
        "D_M": serialize(result.D_M),
    })
    if args.format == "text":
        lines = [f"ring: {doc['ring']}",
                 f"generators: {', '.join(doc['generators']) or '(none)'}",
                 "relations:"]
        lines += [f"  {r}" for r in doc["relations"]]
        text = "\n".join(lines)
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    else:
        _emit(doc, args)
    return 0


def cmd_analyze(args):
    spec = _load_spec(args.spec)
    tol = _tol(args)
    curve, frame = _curve_and_framing(spec, tol)
    points = find_critical_points(curve, tol)
    rows = [{
        "label": p.label, "index": p.index, "s": p.s, "t": p.t,
        "energy": p.energy, "grad_norm": p.grad_norm,
        "eigvals": list(p.eigvals),
    } for p in points]
    diag = diagonal_data()
    doc = {
        "critical_points": rows,
        "diagonal": {"m": {"index": 0, "value": serialize(diag["m"]["value"])},
                     "M": {"index": 1, "D": serialize(diag["M"]["boundary"])}},
        "linking": linking_number(curve, frame),
    }
    if args.format == "tsv":
        lines = ["label\tindex\ts\tt\tenergy"]
        lines += [f"{r['label']}\t{r['index']}\t{r['s']:.9f}\t{r['t']:.9f}"
                  f"\t{r['energy']:.9f}" for r in rows]
        text = "\n".join(lines)
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    else:
        _emit(doc, args)
    return 0


def cmd_sets(args):
    spec = _load_spec(args.spec)
    tol = _tol(args)
    curve, frame = _curve_and_framing(spec, tol)
    n = args.resolution
    axis = np.arange(n) * (curve.L / n)
    doc = {"L": curve.L, "B": [[0.0, "full-s-line"], [0.0, "full-t-line"]]}
    for name, endpoint in (("F_s", "start"), ("F_e", "end")):
        pts = []
        for s in axis:
            for t in axis:
                if curve.circ_dist(s, t) < tol.diag_tube * curve.L:
                    continue
                try:
                    ev = framing_event(curve, frame, s, t, endpoint)
                except CordAlgError:
                    continue
                if ev.positive and abs(ev.value) < 2.5 / n:
                    pts.append([float(s), float(t)])
        doc[name] = pts
    s_pts = []
    from .incidence import ChordScreen
    screen = ChordScreen(curve)
    for s in axis:
        for t in axis:
            if curve.circ_dist(s, t) < tol.diag_tube * curve.L:
                continue
            try:
                if chord_knot_intersections(curve, s, t, tol, screen=screen,
                                            radius=2.0 * curve.L / n):
                    s_pts.append([float(s), float(t)])
            except CordAlgError:
                continue
    doc["S"] = s_pts
    _emit(doc, args)
    return 0


def cmd_trace(args):
    spec = _load_spec(args.spec)
    tol = _tol(args)
    curve, frame = _curve_and_framing(spec, tol)
    s, t = (float(x) for x in args.cord.split(","))
    points = find_critical_points(curve, tol)
    ctx = FlowContext(curve, frame, points, tol, DEFAULT_CONVENTIONS)
    trace = _Tracer(ctx).run(s, t)
    value = dhat_of_trace(trace, terminal_generator_values(ctx))

    def trace_doc(tr):
        return {
            "initial": list(tr.initial),
            "terminal": tr.terminal,
            "events": [{
                "time": e.time, "kind": e.kind, "direction": e.sigma,
                "exponent": e.exponent, "state": list(e.state),
            } for e in tr.events],
            "left": list(tr.left),
            "right": list(tr.right),
            "splits": [{
                "time": sp["time"], "sign": sp["sign"], "hit": list(sp["hit"]),
                "children": [trace_doc(c) for c in sp["children"]],
            } for sp in tr.splits],
        }

    doc = {"trace": trace_doc(trace), "value": serialize(value)}
    if args.format == "text":
        print(f"cord ({s}, {t}) -> {trace.terminal}")
        for e in trace.events:
            print(f"  t={e.time:10.4f}  {e.kind:8s} dir={e.sigma:+d} exp={e.exponent:+d}")
        print(f"value: {serialize(value)}")
    else:
        _emit(doc, args)
    return 0


def cmd_check(args):
    spec = _load_spec(args.spec)
    tol = _tol(args)
    curve, frame = _curve_and_framing(spec, tol)
    checks = []

    def record(name, fn):
        try:
            ok, detail = fn()
        except CordAlgError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        checks.append((name, ok, detail))
        print(f"[{'pass' if ok else 'FAIL'}] {name}{': ' + detail if detail else ''}")

    def arclength():
        probe = np.linspace(0, curve.L, 2000)
        worst = float(np.max(np.abs(
            np.linalg.norm(curve.tangent(probe), axis=1) - 1.0)))
        return worst < tol.tol_arc, f"max |gamma'|-1 = {worst:.2e}"

    def embedded():
        return curve.clearance > tol.embedding_floor * curve.L, \
            f"clearance {curve.clearance:.4f}"

    def frenet():
        probe = np.linspace(0, curve.L, 777)
        t = curve.tangent(probe)
        a = curve.second(probe)
        mask = np.linalg.norm(a, axis=1) > tol.curvature_floor
        worst = float(np.max(np.abs(np.einsum("ij,ij->i", t, a))[mask]))
        return worst < 10 * tol.tol_arc, f"max <gamma',gamma''> = {worst:.2e}"

    def linking_stable():
        lk1 = linking_number(curve, frame)
        lk2 = linking_number(curve, frame, eps=frame.eps / 2)
        return lk1 == lk2, f"lk = {lk1}"

    def census():
        points = find_critical_points(curve, tol)
        counts = [sum(1 for p in points if p.index == i) for i in range(3)]
        ok = counts[0] - counts[1] + counts[2] == 0
        return ok, f"census {counts}"

    def genericity():
        points = find_critical_points(curve, tol)
        report = genericity_check(curve, frame, points, tol)
        return not report, "; ".join(f"{a}:{b}" for a, b, _ in report)

    record("arclength parametrization", arclength)
    record("embeddedness clearance", embedded)
    record("frenet consistency", frenet)
    record("linking number stability", linking_stable)
    record("euler census", census)
    record("critical genericity", genericity)
    failed = [c for c in checks if not c[1]]
    print(f"{len(checks) - len(failed)}/{len(checks)} invariants hold")
    return 0 if not failed else 1


def build_parser():
    ap = argparse.ArgumentParser(
        prog="cordalg",
        description="Cord algebra of knots via Morse theory on linear cords")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("spec", help="knot spec JSON file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol-scale", dest="tol_scale", type=float, default=1.0)
        p.add_argument("--format", choices=("json", "text", "tsv"), default="json")
        p.add_argument("-o", "--output", default=None)

    p = sub.add_parser("compute", help="full cord algebra presentation")
    common(p)
    p.add_argument("--framing", choices=("blackboard", "seifert"),
                   default="seifert")
    p.add_argument("--max-perturb", dest="max_perturb", type=int, default=None)
    p.set_defaults(fn=cmd_compute)

    p = sub.add_parser("analyze", help="critical point table")
    common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("sets", help="export B/F/S polylines on the torus")
    common(p)
    p.add_argument("--resolution", type=int, default=128)
    p.set_defaults(fn=cmd_sets)

    p = sub.add_parser("trace", help="event log of one cord's flow")
    common(p)
    p.add_argument("--cord", required=True, help="s,t parameters")
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("check", help="invariant suite with pass/fail summary")
    common(p)
    p.set_defaults(fn=cmd_check)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except GenericityExhausted as exc:
        print(f"genericity exhausted: {exc}", file=sys.stderr)
        return 1
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    except CordAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
