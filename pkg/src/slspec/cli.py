"""Command-line entry point ``slspec``.

Subcommands::

    forward            eigenvalues of a potential file plus tail regularity
    determinant-trace  CSV of Delta(mu) along a line
    inverse            potential from a target determinant (model or GLData file)
    roundtrip          inverse, then forward checks of the reconstruction
    examples           multiplicity tables for the two explicit examples

Each run ends with a single ``key=value`` summary line.  Exit codes: 0 on
success, 2 for schema or parameter errors, 3 for computation errors.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import gl_inverse as gl
from . import io as sio
from .errors import InvalidInputError, SpectralError
from .models import Example1, Example2, OdeDeterminant, example1_f
from .spectral import BoundaryParams, count_zeros_disk, determinant, find_eigenvalues, tail_regularity

GRID_RANGE = (9, 2**20)
TOL_RANGE = (1e-14, 1e-2)


class UsageError(InvalidInputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _summary(fields):
    parts = []
    for k, v in fields.items():
        if isinstance(v, float):
            v = f"{v:.6g}"
        v = str(v)
        if not v or any(ch.isspace() for ch in v) or '"' in v:
            v = json.dumps(v)
        parts.append(f"{k}={v}")
    return " ".join(parts)


def _check_grid(value, name):
    lo, hi = GRID_RANGE
    if value is not None and not lo <= value <= hi:
        raise UsageError(f"--{name} must lie in [{lo}, {hi}], got {value}")


def _check_tol(value, name="tol"):
    lo, hi = TOL_RANGE
    if value is not None and not lo <= value <= hi:
        raise UsageError(f"--{name} must lie in [{lo:g}, {hi:g}], got {value:g}")


def _boundary(text, default=None):
    if text is None:
        if default is None:
            raise UsageError("--boundary is required")
        return default
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise sio.SchemaError("--boundary", f"malformed JSON ({exc.msg})") from None
    return sio.boundary_from_json(doc, "--boundary")


def _require_path(value, flag):
    if not value:
        raise UsageError(f"{flag} is required")
    return value


def _emit(path, text):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(obj):
    return sio.dumps(obj) + "\n"


def cmd_forward(args):
    q = sio.load_potential(_require_path(args.potential, "--potential"))
    bc = _boundary(args.boundary)
    n_max = 10 if args.n_max is None else args.n_max
    if n_max < 1:
        raise UsageError("--n-max must be >= 1")
    spec = find_eigenvalues(OdeDeterminant(q, bc), n_max, bc=bc)
    tail = tail_regularity(spec)
    doc = sio.spectrum_to_json(spec)
    doc["meta"] = {
        "subcommand": "forward",
        "n_max": n_max,
        "boundary": sio.boundary_to_json(bc),
        "point_count": q.point_count,
        "version": __version__,
        "tail_regularity": {
            "r_n_re": tail.r_n.real,
            "r_n_im": tail.r_n.imag,
            "partial_l2_sums": tail.partial_l2_sums,
            "last_quarter_fraction": tail.last_quarter_fraction,
            "decay_exponent": tail.decay_exponent,
            "verdict": tail.verdict,
        },
        "search": spec.meta,
    }
    _emit(args.out, _json_text(doc))
    return {
        "subcommand": "forward",
        "status": "ok",
        "zeros": len(spec),
        "count": int(spec.multiplicities.sum()),
        "max_mult": int(spec.multiplicities.max()),
        "tail": tail.verdict,
    }


def cmd_trace(args):
    q = sio.load_potential(_require_path(args.potential, "--potential"))
    bc = _boundary(args.boundary)
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    mus = np.linspace(args.mu_min, args.mu_max, args.samples) + 1j * args.im
    deltas = determinant(q, bc, mus)
    _emit(args.out, sio.trace_to_csv(mus, deltas))
    return {"subcommand": "determinant-trace", "status": "ok", "rows": mus.size}


def _load_target(path, bc):
    doc = sio.read_json(path)
    if isinstance(doc, dict) and "nodes" in doc and "N" in doc:
        return None, sio.gldata_from_json(doc, str(path))
    return sio.model_from_json(doc, str(path)), None


def _inverse_common(args):
    _check_grid(args.grid, "grid")
    _check_tol(args.tol)
    grid = gl.DEFAULT_GL_POINTS if args.grid is None else args.grid
    n_tail = gl.DEFAULT_N_TAIL if args.n_tail is None else args.n_tail
    tol = 1e-4 if args.tol is None else args.tol
    if n_tail < 1:
        raise UsageError("--n-tail must be >= 1")
    bc = _boundary(args.boundary, BoundaryParams(0.0, 0))
    model, data = _load_target(_require_path(args.target, "--target"), bc)
    offsets = None
    if args.offsets is not None:
        try:
            offsets = [float(v) for v in args.offsets.split(",") if v.strip()]
        except ValueError:
            raise UsageError("--offsets must be a comma-separated list of numbers") from None
    if data is None:
        data = gl.build_gl_data(model, bc, args.N, offsets, n_tail)
    kernel = gl.assemble_F(data, grid)
    kernel = gl.solve_gl(kernel)
    qhat = gl.extract_potential(kernel)
    report = gl.verify_reconstruction(qhat, kernel.data, tol=tol)
    meta = {
        "grid": grid,
        "n_tail_requested": n_tail,
        "n_tail_used": kernel.n_tail,
        "N": kernel.data.N,
        "head_nodes": kernel.data.head,
        "tol": tol,
        "det_tol": report["det_tol"],
        "tail_correction": True,
        "assembly_tol": gl.ASSEMBLY_TOL,
        "max_condition": float(np.max(kernel.conds)),
        "max_gl_residual": float(np.max(kernel.residuals)),
        "version": __version__,
    }
    report["gl_residuals"] = kernel.residuals
    report["conditions"] = kernel.conds
    return kernel, qhat, report, meta


def _report_path(args):
    if args.report:
        return args.report
    if args.out:
        stem = args.out[:-5] if args.out.endswith(".json") else args.out
        return stem + ".report.json"
    return None


def cmd_inverse(args):
    kernel, qhat, report, meta = _inverse_common(args)
    doc = sio.potential_to_json(qhat)
    doc["meta"] = dict(meta, subcommand="inverse")
    report["meta"] = doc["meta"]
    _emit(args.out, _json_text(doc))
    rpath = _report_path(args)
    if rpath:
        sio.write_json(rpath, report)
    return {
        "subcommand": "inverse",
        "status": "ok",
        "verdict": report["verdict"],
        "N": meta["N"],
        "max_c_err": report["max_c_err"],
        "max_det_err": report["max_determinant_err"],
        "qhat_sup": qhat.sup_norm,
    }


def cmd_roundtrip(args):
    kernel, qhat, report, meta = _inverse_common(args)
    cap = min(8, kernel.data.n_tail)
    nodes = kernel.data.mu_seq[:cap]
    roots, ok = gl.dirichlet_nodes(qhat, nodes)
    node_err = np.abs(roots - nodes)
    passed = report["verdict"] == "PASS" and bool(np.all(ok)) and float(np.max(node_err)) <= meta["tol"]
    doc = {
        "potential": sio.potential_to_json(qhat),
        "reconstruction": report,
        "dirichlet": {
            "nodes": nodes,
            "found_re": roots.real,
            "found_im": roots.imag,
            "converged": ok,
            "error": node_err,
        },
        "verdict": "PASS" if passed else "FAIL",
        "meta": dict(meta, subcommand="roundtrip"),
    }
    _emit(args.out, _json_text(doc))
    return {
        "subcommand": "roundtrip",
        "status": "ok",
        "verdict": doc["verdict"],
        "max_node_err": float(np.max(node_err)),
        "max_c_err": report["max_c_err"],
        "max_det_err": report["max_determinant_err"],
    }


def _multiplicity_rows(model, centers, radius):
    rows = []
    for label, mu in centers:
        rows.append({"label": label, "mu": float(mu), "radius": radius,
                     "count": int(count_zeros_disk(model, complex(mu), radius))})
    return rows


def cmd_examples(args):
    if args.example is None:
        raise UsageError("--example is required")
    out_dir = args.out
    if args.example == 1:
        k = 2 if args.k is None else args.k
        alpha = 1.0 / math.sqrt(2.0) if args.alpha is None else args.alpha
        model = Example1(k, alpha)
        fam_a = [m * k / alpha for m in range(1, 4)]
        fam_b = [m * k / (1.0 - alpha) for m in range(1, 4)]
        pts = sorted(fam_a + fam_b)
        gap = min(np.diff(pts)) if len(pts) > 1 else 1.0
        radius = float(min(0.3, 0.25 * gap)) if gap > 1e-9 else 0.3
        centers = [(f"m*k/alpha m={m}", c) for m, c in enumerate(fam_a, 1)]
        centers += [(f"m*k/(1-alpha) m={m}", c) for m, c in enumerate(fam_b, 1)]
        rows = _multiplicity_rows(model, centers, radius)
        probe = np.linspace(0.1, 20.0, 200) + 0.3j
        f = example1_f(k, alpha, probe)
        odd = float(np.max(np.abs(example1_f(k, alpha, -probe) + f)) / np.max(np.abs(f)))
        trace_mu = np.linspace(0.0, 20.0, 401)
        trace = model(trace_mu)
        table = {"example": 1, "k": k, "alpha": alpha, "expected_order": k, "rows": rows,
                 "oddness_defect_rel": odd}
        summary = {"min_count": min(r["count"] for r in rows[:3]), "oddness": odd}
    else:
        p0 = 10 if args.p0 is None else args.p0
        p_max = 12 if args.p_max is None else args.p_max
        model = Example2(p0, p_max)
        special = [(f"2^{p + 1}", 2.0 ** (p + 1)) for p in range(p0, p_max + 1)]
        generic_n = [2**p0 + int(math.floor(math.log(p0))) + 3, 3 * 2 ** (p0 - 1) + 1]
        generic = [(f"generic 2*{n}", 2.0 * n) for n in generic_n]
        rows = _multiplicity_rows(model, special + generic, 0.5)
        trace_mu = np.linspace(2.0 ** (p0 + 1) - 8.0, 2.0 ** (p0 + 1) + 8.0, 401)
        trace = model(trace_mu)
        table = {"example": 2, "p0": p0, "p_max": p_max,
                 "expected_at_first": 2 * int(math.floor(math.log(p0))) + 2, "rows": rows}
        summary = {"count_first": rows[0]["count"], "count_generic": max(r["count"] for r in rows[-2:])}
    text = _json_text(table)
    csv_text = sio.trace_to_csv(trace_mu, trace)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        base = os.path.join(out_dir, f"example{args.example}")
        _emit(base + "_multiplicities.json", text)
        _emit(base + "_trace.csv", csv_text)
    else:
        sys.stdout.write(text)
    return dict({"subcommand": "examples", "status": "ok", "example": args.example}, **summary)


def build_parser():
    p = _Parser(prog="slspec", description="Spectral analysis and reconstruction for u'' - q u + lam u = 0 on (0, pi).")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", help="output file (directory for 'examples'); stdout if omitted")

    f = sub.add_parser("forward", help="eigenvalues of a potential file")
    f.add_argument("--potential")
    f.add_argument("--boundary", help='JSON {"b_re":..,"b_im":..,"theta":0|1}')
    f.add_argument("--n-max", type=int)
    common(f)
    f.set_defaults(func=cmd_forward)

    t = sub.add_parser("determinant-trace", help="CSV of the determinant along a line")
    t.add_argument("--potential")
    t.add_argument("--boundary")
    t.add_argument("--mu-min", type=float, default=0.0)
    t.add_argument("--mu-max", type=float, default=10.0)
    t.add_argument("--im", type=float, default=0.0, help="imaginary part of the line")
    t.add_argument("--samples", type=int, default=201)
    common(t)
    t.set_defaults(func=cmd_trace)

    inverse_help = {
        "inverse": "reconstruct a potential from a target determinant",
        "roundtrip": "reconstruct, then check the Dirichlet nodes and the determinant",
    }
    for name, func in (("inverse", cmd_inverse), ("roundtrip", cmd_roundtrip)):
        s = sub.add_parser(name, help=inverse_help[name])
        s.add_argument("--target", help="model descriptor or GLData JSON")
        s.add_argument("--boundary")
        s.add_argument("--grid", type=int)
        s.add_argument("--n-tail", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--N", type=int, help="number of perturbed nodes (default: automatic)")
        s.add_argument("--offsets", help="comma-separated node offsets, one per perturbed node")
        if name == "inverse":
            s.add_argument("--report", help="report path (default: <out>.report.json)")
        common(s)
        s.set_defaults(func=func)

    e = sub.add_parser("examples", help="multiplicity tables for the explicit examples")
    e.add_argument("--example", type=int, choices=(1, 2))
    e.add_argument("--k", type=int)
    e.add_argument("--alpha", type=float)
    e.add_argument("--p0", type=int)
    e.add_argument("--p-max", type=int)
    common(e)
    e.set_defaults(func=cmd_examples)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError("a subcommand is required")
        fields = args.func(args)
    except InvalidInputError as exc:
        loc = getattr(exc, "location", None)
        fields = {"status": "error", "code": 2, "error": type(exc).__name__}
        if loc:
            fields["location"] = loc
        fields["message"] = str(exc)
        print(_summary(fields), file=sys.stderr)
        return 2
    except SpectralError as exc:
        fields = {"status": "error", "code": 3, "error": type(exc).__name__}
        if getattr(exc, "index", None) is not None:
            fields["index"] = exc.index
        fields["message"] = str(exc)
        print(_summary(fields), file=sys.stderr)
        return 3
    stream = sys.stderr if getattr(args, "out", None) is None else sys.stdout
    print(_summary(fields), file=stream)
    return 0


if __name__ == "__main__":
    sys.exit(main())
