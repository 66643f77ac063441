"""Command-line interface: system loading, experiment pipelines, CSV/JSON output.

Outputs are deterministic for a fixed (config, seed, precision): every CSV
starts with a versioned header line, floats are printed at a fixed digit
count, JSON is key-sorted, and random tuples come from a seeded generator.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction

import mpmath

from . import asymptotics, equilibrium, hessenberg, kernel, measures, mop, paths
from .errors import MopkitError, ValidationError
from .scalars import EXACT, FLOAT, default_precision, workprec

CSV_VERSION = "mopkit-csv v1"


def _fmt(value, digits):
    if isinstance(value, (int, Fraction)):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return mpmath.nstr(mpmath.mpmathify(value), digits, strip_zeros=False)


def _write_csv(path, subcommand, header, rows, digits):
    with open(path, "w") as fh:
        fh.write(f"# {CSV_VERSION} {subcommand}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v, digits) for v in row) + "\n")


def _emit_json(obj, out=None):
    text = json.dumps(obj, sort_keys=True, indent=2, default=str)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_system(args):
    if args.system is None:
        raise ValidationError("--system FILE is required", code="E_CONFIG")
    with open(args.system) as fh:
        cfg = json.load(fh)
    if args.precision is None and "precision" in cfg:
        args.precision = int(cfg["precision"])
    return measures.from_config(cfg)


def _precision(args) -> int:
    return args.precision if args.precision is not None else default_precision()


def _make_path(args, system, length):
    if args.path == "stepline":
        return paths.stepline(system.r, length)
    if args.path == "direction":
        if not args.direction:
            raise ValidationError("--direction is required with --path direction", code="E_CONFIG")
        s = [Fraction(v) for v in args.direction.split(",")]
        return paths.direction_path(s, length)
    raise ValidationError(f"unknown path kind {args.path!r}", code="E_CONFIG")


def _family(args, system, length):
    return mop.BiorthogonalFamily(system, _make_path(args, system, length),
                                  mode=args.mode, precision=_precision(args))


# ---------------------------------------------------------------------------
# subcommands

def cmd_poly(args):
    system = _load_system(args)
    family = _family(args, system, args.size + 1)
    digits = args.digits
    out = {"size": args.size, "kind": args.kind, "mode": args.mode, "index": list(family.index(args.size))}
    if args.kind == "type2":
        poly = family.p(args.size)
        out["coefficients"] = [_fmt(c, digits) for c in poly.coeffs]
    else:
        vec = family.type1_at(family.index(args.size))
        out["components"] = [[_fmt(c, digits) for c in poly.coeffs] for poly in vec.polys]
    _emit_json(out, args.out)
    return 0


def cmd_jmatrix(args):
    system = _load_system(args)
    family = _family(args, system, args.size)
    J = hessenberg.build_J(family, args.size, verify=args.verify)
    rows = J.triplets()
    if args.out:
        _write_csv(args.out, "jmatrix", ["row", "col", "value"], rows, args.digits)
    else:
        for row in rows:
            print(",".join(_fmt(v, args.digits) for v in row))
    return 0


def cmd_gaps(args):
    system = _load_system(args)
    family = _family(args, system, args.nmax + args.lmax)
    J = hessenberg.build_J(family, args.nmax + args.lmax)
    n_list = sorted({int(v) for v in args.n.split(",")}) if args.n else \
        [n for n in (4, 8, 16, 32, 64, 128) if n <= args.nmax] or [args.nmax]
    table = asymptotics.moment_gap_experiment(J, n_list, args.lmax)
    if args.out:
        _write_csv(args.out, "gaps", ["n", "ell", "nu", "eta", "gap"], table.rows, args.digits)
    summary = {"slopes": {str(ell): (float(s) if s is not None else None)
                          for ell, s in sorted(table.slopes.items())}}
    _emit_json(summary)
    return 0


def _kernel_diag_rows(family, n, points):
    K = kernel.CDKernel(family, n)
    return [(n, x, K.diagonal(x)) for x in points]


def cmd_kernel(args):
    system = _load_system(args)
    lo, hi = system.hull()
    if args.kernel_cmd == "diag":
        family = _family(args, system, args.n)
        pts = [lo + (hi - lo) * Fraction(2 * i + 1, 2 * args.grid_points)
               for i in range(args.grid_points)]
        if args.mode == FLOAT:
            with workprec(_precision(args)):
                pts = [mpmath.mpmathify(p) for p in pts]
        if args.jobs > 1:
            rows = _parallel_diag(args, pts)
        else:
            rows = _kernel_diag_rows(family, args.n, pts)
        if args.out:
            _write_csv(args.out, "kernel-diag", ["n", "x", "value"], rows, args.digits)
        values = [r[2] for r in rows]
        _emit_json({"n": args.n, "count": len(values),
                    "min": _fmt(min(values), args.digits),
                    "negatives": sum(1 for v in values if v < 0)})
        return 0
    # detpos
    family = _family(args, system, args.n)
    K = kernel.CDKernel(family, args.n)
    rng = random.Random(args.seed)
    rows = []
    worst = None
    for t in range(args.tuples):
        pts = sorted(lo + (hi - lo) * Fraction(rng.randrange(1, 2**40), 2**40) for _ in range(args.n))
        while any(a == b for a, b in zip(pts, pts[1:])):
            pts = sorted(lo + (hi - lo) * Fraction(rng.randrange(1, 2**40), 2**40) for _ in range(args.n))
        if args.mode == FLOAT:
            with workprec(_precision(args)):
                pts = [mpmath.mpmathify(p) for p in pts]
        report = kernel.detpos_check(K, pts)
        det = report.full_determinant
        rows.append((t, args.n, det))
        if worst is None or det < worst:
            worst = det
    if args.out:
        _write_csv(args.out, "kernel-detpos", ["tuple", "m", "det"], rows, args.digits)
    _emit_json({"n": args.n, "tuples": args.tuples, "min_det": _fmt(worst, args.digits),
                "negatives": sum(1 for r in rows if r[2] < 0)})
    return 0


def _parallel_diag(args, pts):
    """Grid scans parallelise over points; results merge in input order."""
    from concurrent.futures import ProcessPoolExecutor

    chunks = [pts[i :: args.jobs] for i in range(args.jobs)]
    payloads = [(args.system, args.mode, args.precision, args.n, [str(p) for p in chunk])
                for chunk in chunks if chunk]
    with ProcessPoolExecutor(max_workers=args.jobs) as ex:
        results = list(ex.map(_diag_worker, payloads))
    ordered = []
    for i in range(len(pts)):
        chunk_id, offset = i % args.jobs, i // args.jobs
        ordered.append(results[chunk_id][offset])
    return ordered


def _diag_worker(payload):
    sys_path, mode, precision, n, points = payload
    with open(sys_path) as fh:
        system = measures.from_config(json.load(fh))
    prec = precision if precision is not None else default_precision()
    family = mop.BiorthogonalFamily(system, paths.stepline(system.r, n), mode=mode, precision=prec)
    K = kernel.CDKernel(family, n)
    out = []
    with workprec(prec):
        for p in points:
            x = mpmath.mpmathify(p) if mode == FLOAT else Fraction(p)
            out.append((n, x, K.diagonal(x)))
    return out


def cmd_nevai(args):
    system = _load_system(args)
    n_list = sorted({int(v) for v in args.n.split(",")})
    k_list = sorted({int(v) for v in args.k.split(",")})
    xs = [Fraction(v) for v in args.x.split(",")]
    top = n_list[-1] + max(k_list) + args.window + 1
    family = _family(args, system, top)
    J = hessenberg.build_J(family, top)
    rows = []
    with workprec(_precision(args)):
        for n in n_list:
            K = kernel.CDKernel(family, n)
            for x in xs:
                xv = mpmath.mpmathify(x) if args.mode == FLOAT else x
                for k in k_list:
                    rows.append((n, x, k, kernel.nevai_G(J, K, xv, k)))
    if args.out:
        _write_csv(args.out, "nevai", ["n", "x", "k", "G"], rows, args.digits)
    summary = {}
    for x in xs:
        table = kernel.nevai_hypothesis_c(family, mpmath.mpmathify(x) if args.mode == FLOAT else x,
                                          n_list, args.window)
        summary[str(x)] = {str(n): _fmt(v, 8) for n, v in table.max_ratio_by_n}
    _emit_json({"hypothesis_c_max_ratio": summary})
    return 0


def cmd_equilibrium(args):
    intervals = []
    for part in args.intervals.split(";"):
        a, b = part.split(",")
        intervals.append((float(Fraction(a)), float(Fraction(b))))
    s = [float(Fraction(v)) for v in args.s.split(",")]
    if abs(sum(s) - 1.0) > 1e-12 or any(v <= 0 for v in s):
        raise ValidationError("direction masses must be positive and sum to 1", code="E_DIRECTION")
    if args.preset == "angelesco":
        spec = equilibrium.InteractionSpec.angelesco(s)
    elif args.preset == "nikishin":
        spec = equilibrium.InteractionSpec.nikishin(s)
    else:
        raise ValidationError(f"unknown preset {args.preset!r}", code="E_CONFIG")
    result = equilibrium.minimize(spec, intervals, args.grid, tol=args.tol,
                                  max_iter=args.max_iter, polish=not args.no_polish)
    rows = []
    for j, m in enumerate(result.measures, start=1):
        for x, w in zip(m.grid, m.weights):
            rows.append((j, float(x), float(w)))
    if args.out:
        _write_csv(args.out, "equilibrium", ["component", "grid_point", "weight"], rows, args.digits)
    moments = equilibrium.limit_measure(result.measures, spec, args.lmax)
    _emit_json({
        "energy": result.energy,
        "fw_gap": result.fw_gap,
        "frostman_residual": result.frostman_residual,
        "iterations": result.iterations,
        "converged": result.converged,
        "polished": result.polished,
        "limit_moments": moments,
    })
    return 0


def cmd_diagnose(args):
    system = _load_system(args)
    prec = _precision(args)
    report = {}
    ok = True

    exact_n = min(args.nmax, 10)
    if system.exact_moments():
        fam = mop.BiorthogonalFamily(system, paths.stepline(system.r, exact_n + 1), mode=EXACT)
        hull = system.hull()
        inter_ok = True
        for n in range(1, exact_n):
            rep = asymptotics.interlacing_check(fam.p(n), fam.p(n + 1), hull=hull)
            inter_ok = inter_ok and rep.interlacing and rep.contained
        report["interlacing"] = {"upto": exact_n, "pass": inter_ok}
        ok = ok and inter_ok

    length = args.nmax + 1
    famf = mop.BiorthogonalFamily(system, paths.stepline(system.r, length), mode=FLOAT, precision=prec)
    J = hessenberg.build_J(famf, args.nmax)
    profile = hessenberg.ndb_profile(J, min(4, args.nmax - 1))
    half = max(2, args.nmax // 2)
    stable = True
    offsets = {}
    for d, sup in sorted(profile.offsets.items()):
        sup_half = profile.supremum_upto(d, half)
        full = float(sup)
        change = abs(full - float(sup_half)) / full if full else 0.0
        offsets[str(d)] = {"sup": full, "rel_change_from_half": change}
        if d >= 0 and change > args.ndb_threshold:
            stable = False
    report["ndb"] = {"offsets": offsets, "pass": stable}
    ok = ok and stable

    lo, hi = system.hull()
    pts = [lo + (hi - lo) * Fraction(2 * i + 1, 2 * args.grid_points) for i in range(args.grid_points)]
    with workprec(prec):
        K = kernel.CDKernel(famf, args.nmax)
        scan = kernel.positivity_scan(K, [mpmath.mpmathify(p) for p in pts])
    report["positivity"] = {
        "n": args.nmax,
        "min": _fmt(scan.min_value, args.digits),
        "negatives": len(scan.negatives),
        "pass": scan.all_nonnegative,
    }
    ok = ok and scan.all_nonnegative
    report["pass"] = ok
    _emit_json(report, args.out)
    return 0 if ok else 1


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="mopkit",
                                     description="multiple orthogonality experiments")
    parser.add_argument("--precision", type=int, default=None,
                        help="working precision in bits (default 256 or MOPKIT_PRECISION_BITS)")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p, mode_default=EXACT):
        p.add_argument("--system", help="JSON system config file")
        p.add_argument("--path", default="stepline", choices=["stepline", "direction"])
        p.add_argument("--direction", help="comma-separated rationals summing to 1")
        p.add_argument("--mode", default=mode_default, choices=[EXACT, FLOAT])
        p.add_argument("--digits", type=int, default=20)
        p.add_argument("--out")

    p = sub.add_parser("poly", help="export one polynomial")
    common(p)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--kind", default="type2", choices=["type2", "type1"])
    p.set_defaults(func=cmd_poly)

    p = sub.add_parser("jmatrix", help="export the multiplication matrix as triplets")
    common(p)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--verify", action="store_true", help="cross-check entries against moment pairings")
    p.set_defaults(func=cmd_jmatrix)

    p = sub.add_parser("gaps", help="zero-counting vs kernel-diagonal moment gaps")
    common(p, mode_default=FLOAT)
    p.add_argument("--nmax", type=int, default=60)
    p.add_argument("--lmax", type=int, default=4)
    p.add_argument("--n", help="explicit comma-separated n list")
    p.set_defaults(func=cmd_gaps)

    p = sub.add_parser("kernel", help="kernel diagnostics")
    ksub = p.add_subparsers(dest="kernel_cmd", required=True)
    for name in ("diag", "detpos"):
        kp = ksub.add_parser(name)
        common(kp, mode_default=FLOAT)
        kp.add_argument("--n", type=int, required=True)
        kp.add_argument("--grid-points", type=int, default=200)
        kp.add_argument("--tuples", type=int, default=50)
        kp.add_argument("--seed", type=int, default=0)
        kp.add_argument("--jobs", type=int, default=max(1, os.cpu_count() or 1))
        kp.set_defaults(func=cmd_kernel)

    p = sub.add_parser("nevai", help="kernel-average operator experiments")
    nsub = p.add_subparsers(dest="nevai_cmd", required=True)
    np_ = nsub.add_parser("run")
    common(np_, mode_default=FLOAT)
    np_.add_argument("--x", default="0")
    np_.add_argument("--k", default="1,2")
    np_.add_argument("--n", default="15,30")
    np_.add_argument("--window", type=int, default=2)
    np_.set_defaults(func=cmd_nevai)

    p = sub.add_parser("equilibrium", help="vector equilibrium solver")
    esub = p.add_subparsers(dest="equilibrium_cmd", required=True)
    ep = esub.add_parser("solve")
    ep.add_argument("--preset", default="angelesco", choices=["angelesco", "nikishin"])
    ep.add_argument("--intervals", required=True, help='semicolon-separated pairs, e.g. "-1,0;0,1"')
    ep.add_argument("--s", required=True, help="comma-separated direction masses")
    ep.add_argument("--grid", type=int, default=400)
    ep.add_argument("--tol", type=float, default=1e-10)
    ep.add_argument("--max-iter", type=int, default=100_000)
    ep.add_argument("--lmax", type=int, default=4)
    ep.add_argument("--no-polish", action="store_true")
    ep.add_argument("--digits", type=int, default=17)
    ep.add_argument("--out")
    ep.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("diagnose", help="band stability + interlacing + positivity bundle")
    common(p, mode_default=FLOAT)
    p.add_argument("--nmax", type=int, default=20)
    p.add_argument("--grid-points", type=int, default=100)
    p.add_argument("--ndb-threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_diagnose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 2
    except MopkitError as exc:
        print(json.dumps({"error": "E_RUNTIME", "message": str(exc)}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
