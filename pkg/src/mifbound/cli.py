"""Command-line interface.

    mifbound generate --family power --k 2 --window -3:3
    mifbound build seq.json --strategy gap -o model.json
    mifbound eval --model model.json --grid -10:10:0.01 > theta.csv
    mifbound counterexample --N 8,16,32 --D 1 --strategy unit

Exit codes: 0 ok, 1 usage or invalid input, 2 numeric certification failure,
3 I/O error.  ``MIFBOUND_REL_TOLERANCE`` sets the default evaluation tolerance.
"""

import argparse
import csv
import json
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import clark, mif, sequences, zeros
from .errors import CertificationError, MIFError, NumericBranchError
from .transform import EvaluationConfig, evaluate

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_IO = 0, 1, 2, 3

_NEG = re.compile(r"^-(\d|\.\d)")


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Usage(f"{self.prog}: error: {message}")


def _normalize(argv):
    """Glue option values that start with a minus sign (``--window -3:3``)."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEG.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _range(text, n):
    parts = text.split(":")
    if len(parts) != n:
        raise argparse.ArgumentTypeError(f"expected {n} colon-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not numeric: {text!r}") from None


def _grid(text):
    lo, hi, step = _range(text, 3)
    if not (hi >= lo and step > 0):
        raise argparse.ArgumentTypeError("grid needs lo <= hi and step > 0")
    return lo, hi, step


def _window(text):
    lo, hi = _range(text, 2)
    if not hi > lo:
        raise argparse.ArgumentTypeError("window needs lo < hi")
    return lo, hi


def _int_window(text):
    lo, hi = _range(text, 2)
    if lo != int(lo) or hi != int(hi):
        raise argparse.ArgumentTypeError("index windows are integers")
    return int(lo), int(hi)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def grid_points(lo, hi, step):
    """Closed grid lo, lo+step, ... <= hi."""
    if not step > 0 or hi < lo:
        raise argparse.ArgumentTypeError("grid needs lo <= hi and step > 0")
    n = int(np.floor((hi - lo) / step * (1 + 1e-12))) + 1
    return lo + step * np.arange(n)


def _cfg(args):
    cfg = EvaluationConfig.from_env()
    if getattr(args, "tolerance", None) is not None:
        cfg = replace(cfg, rel_tolerance=args.tolerance)
    if getattr(args, "exclusion_radius", None) is not None:
        cfg = replace(cfg, atom_exclusion_radius=args.exclusion_radius)
    return cfg


def _read_json(path):
    return json.loads(Path(path).read_text())


def _emit_json(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_model(path, cfg):
    data = _read_json(path)
    if "kind" in data:
        model = mif.InnerFunctionModel.from_dict(data)
        return replace(model, cfg=cfg)
    if "atoms" in data:
        return mif.clark_model(clark.ClarkMeasure.from_dict(data), 0.0, cfg)
    raise MIFError(f"{path} is neither a model nor a measure")


def _load_measure(path):
    data = _read_json(path)
    return clark.ClarkMeasure.from_dict(data["measure"] if "measure" in data else data)


def _load_sequence(path):
    if str(path).endswith(".csv"):
        return sequences.load_csv(path)
    return sequences.load_json(path)


# ---------------------------------------------------------------- commands


def cmd_generate(args):
    fam = {"family": args.family}
    for key in ("k", "r", "c", "a1", "t1", "D"):
        val = getattr(args, key)
        if val is not None:
            fam[key] = val
    if args.N is not None:
        fam["N"] = args.N
    if args.growth is not None:
        fam["growth"] = args.growth
    seq = sequences.generate(fam, args.window)
    _emit_json(seq.to_dict(), args.output)
    return EXIT_OK


def cmd_classify(args):
    seq = _load_sequence(args.sequence)
    cfg = sequences.ClassifyConfig(
        min_points=args.min_points,
        ratio_bound=args.ratio_bound,
        pattern_D=args.D,
        pattern_N=args.pattern_N,
    )
    _emit_json(sequences.classify(seq, cfg).to_dict(), args.output)
    return EXIT_OK


def cmd_build(args):
    seq = _load_sequence(args.sequence)
    cfg = _cfg(args)
    if args.krein:
        model = mif.krein_build(seq, args.window, args.c, args.exp_factor, cfg)
    else:
        weights = None
        if args.strategy == "custom":
            if not args.weights:
                raise MIFError("--strategy custom needs --weights FILE")
            weights = np.loadtxt(args.weights, dtype=float, ndmin=1)
        if args.window is not None:
            keep = (seq.indices >= args.window[0]) & (seq.indices <= args.window[1])
            if not keep.any():
                raise MIFError("window selects no points")
            seq = sequences.SeparatedSequence(
                seq.points[keep], int(seq.indices[keep][0]), seq.separation, dict(seq.provenance)
            )
            if weights is not None:
                weights = weights[keep]
        measure = clark.build_measure(seq, args.strategy, weights)
        model = mif.clark_model(measure, args.exp_factor, cfg)
    _emit_json(model.to_dict(), args.output)
    return EXIT_OK


def cmd_eval(args):
    model = _load_model(args.model, _cfg(args))
    xs = grid_points(*args.grid)
    rows = mif.eval_rows(model, xs)
    code = EXIT_OK
    if args.certify_tail:
        for x in (xs[0], xs[-1]):
            st = evaluate(model.measure, complex(x, 1.0), model.cfg).status
            if st != "ok":
                print(f"tail check at x={x:g}: {st}", file=sys.stderr)
                code = EXIT_CERT
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "theta_re", "theta_im", "phase_derivative", "phase", "branch"])
        for x, re_, im_, d, p, b in rows:
            wr.writerow([f"{x:.16e}", f"{re_:.16e}", f"{im_:.16e}", f"{d:.16e}", f"{p:.16e}", b])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return code


def cmd_sup(args):
    model = _load_model(args.model, _cfg(args))
    res = mif.sup_derivative(model, args.window)
    _emit_json(
        {
            "sup_phase_derivative": res.value,
            "argmax": res.argmax,
            "at_atom": res.at_atom,
            "samples": res.samples,
            "window": list(args.window),
        },
        args.output,
    )
    return EXIT_OK


def cmd_zeros(args):
    model = _load_model(args.model, _cfg(args))
    zs = zeros.find_zeros(model, args.method, args.region)
    _emit_json(zs.to_dict(), args.output)
    if not zs.certified:
        print("zero set is not certified", file=sys.stderr)
        return EXIT_CERT
    return EXIT_OK


def cmd_counterexample(args):
    reports = zeros.counterexample_sweep(args.N, args.D, args.t1, args.strategy, not args.no_sup)
    if args.output:
        zeros.write_sweep_csv(reports, args.output)
    else:
        zeros.write_sweep_csv(reports, sys.stdout)
    return EXIT_OK if all(r.certified for r in reports) else EXIT_CERT


def cmd_regularity(args):
    seq = _load_sequence(args.sequence)
    rep = sequences.regularity_functional(seq, args.a, args.window, args.levels)
    _emit_json(rep.to_dict(), args.output)
    return EXIT_OK


def cmd_discrepancy(args):
    measure = _load_measure(args.measure)
    _emit_json(clark.discrepancy_report(measure, args.workers).to_dict(), args.output)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser():
    p = _Parser(prog="mifbound", description="Meromorphic inner functions with prescribed spectrum.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out(sp):
        sp.add_argument("-o", "--output", help="write here instead of stdout")

    def tol(sp):
        sp.add_argument("--tolerance", type=float, help="relative tolerance override")
        sp.add_argument("--exclusion-radius", type=float, help="atom snapping radius")

    g = sub.add_parser("generate", help="generate a sequence window")
    g.add_argument("--family", required=True, choices=sequences.FAMILIES)
    g.add_argument("--window", type=_int_window, help="index range lo:hi")
    for key in ("k", "r", "c", "a1", "t1", "D"):
        g.add_argument(f"--{key}", type=float)
    g.add_argument("--N", type=int)
    g.add_argument("--growth", type=int)
    out(g)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("classify", help="assign a gap regime")
    c.add_argument("sequence")
    c.add_argument("--D", type=float, help="pattern gap scale (enables the pattern scan)")
    c.add_argument("--pattern-N", type=int, default=3)
    c.add_argument("--min-points", type=int, default=16)
    c.add_argument("--ratio-bound", type=float, default=8.0)
    out(c)
    c.set_defaults(func=cmd_classify)

    b = sub.add_parser("build", help="build an inner-function model")
    b.add_argument("sequence")
    b.add_argument("--strategy", default="unit", choices=("unit", "gap", "custom"))
    b.add_argument("--weights", help="text file of custom weights")
    b.add_argument("--krein", action="store_true", help="Krein-shift construction")
    b.add_argument("--c", type=float, default=0.0, help="Krein constant")
    b.add_argument("--exp-factor", type=float, default=0.0)
    b.add_argument("--window", type=_int_window)
    tol(b)
    out(b)
    b.set_defaults(func=cmd_build)

    e = sub.add_parser("eval", help="boundary values on a grid (CSV)")
    e.add_argument("--model", required=True)
    e.add_argument("--grid", required=True, type=_grid, help="lo:hi:step")
    e.add_argument("--certify-tail", action="store_true", help="exit 2 unless the family tail meets tolerance")
    tol(e)
    out(e)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sup", help="sup of |Θ'| over a window")
    s.add_argument("--model", required=True)
    s.add_argument("--window", required=True, type=_window)
    tol(s)
    out(s)
    s.set_defaults(func=cmd_sup)

    z = sub.add_parser("zeros", help="zeros of Θ in the upper half-plane")
    z.add_argument("--model", required=True)
    z.add_argument("--method", default="polynomial", choices=("polynomial", "contour"))
    z.add_argument("--region", type=lambda t: _range(t, 4), help="x0:x1:y0:y1")
    tol(z)
    out(z)
    z.set_defaults(func=cmd_zeros)

    x = sub.add_parser("counterexample", help="cluster-then-gap sweep (CSV)")
    x.add_argument("--N", required=True, type=_int_list, help="comma-separated cluster sizes")
    x.add_argument("--D", type=float, default=1.0)
    x.add_argument("--t1", type=float, default=0.0)
    x.add_argument("--strategy", default="unit", choices=("unit", "gap"))
    x.add_argument("--no-sup", action="store_true", help="skip the derivative sup")
    out(x)
    x.set_defaults(func=cmd_counterexample)

    r = sub.add_parser("regularity", help="a-regularity integral over a window")
    r.add_argument("sequence")
    r.add_argument("--a", type=float, default=1.0)
    r.add_argument("--window", required=True, type=_window)
    r.add_argument("--levels", type=int, default=5)
    out(r)
    r.set_defaults(func=cmd_regularity)

    d = sub.add_parser("discrepancy", help="discrepancy sums of a measure")
    d.add_argument("measure", help="measure or model JSON")
    d.add_argument("--workers", type=int, default=1)
    out(d)
    d.set_defaults(func=cmd_discrepancy)
    return p


def run(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_normalize(argv))
    except _Usage as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except (CertificationError, NumericBranchError) as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MIFError, ValueError, argparse.ArgumentTypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
