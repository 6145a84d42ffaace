"""Command-line front end: file ingestion, pipeline orchestration, reports.

Subcommands: factor | compensate | check | interconnect | opamp-demo |
perturb.  Network inputs are NetworkSpecFile JSON documents::

    {"kind": "ratmat" | "statespace" | "opamp2stage",
     "payload": <kind-specific body>,
     "metadata": {"name": ..., "description": ...}}

All numeric output is serialized with 17 significant digits so reports are
diff-stable.  Exit codes: 0 success / stable verdict, 1 computed but
unstable verdict, 2 load failure, 3 improper input, 4 pole-placement
failure, 5 inadmissible parameter Q.  The PORTSTAB_GRID environment
variable ("lo,hi[,n]") overrides verification-grid bounds.
"""

import argparse
import json
import sys

import numpy as np

from . import opamp
from .coprime import Dcf, dcf_from_ss, dcf_verify
from .ratmat import (
    RationalMatrix,
    StateSpace,
    rm_from_ss,
    rm_to_ss,
)
from .stabilize import (
    check_single_port,
    hybrid_compensator,
    interconnect,
    robustness_sample,
)

EXIT_OK = 0
EXIT_UNSTABLE = 1
EXIT_LOAD = 2
EXIT_IMPROPER = 3
EXIT_PLACEMENT = 4
EXIT_INADMISSIBLE = 5


class LoadError(Exception):
    """Input file missing, malformed, or failing its type invariants."""


# ---------------------------------------------------------------------------
# diff-stable JSON emission (17 significant digits)
# ---------------------------------------------------------------------------

def dumps17(obj, indent: int = 0) -> str:
    """JSON text with every float rendered at 17 significant digits.

    17 significant digits round-trip IEEE doubles exactly, and a fixed
    digit count keeps reports byte-identical across platforms whose
    shortest-repr algorithms could differ.
    """
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {dumps17(v, indent + 2)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{dumps17(v, indent + 2)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if x != x:
            return "NaN"
        if x == float("inf"):
            return "Infinity"
        if x == float("-inf"):
            return "-Infinity"
        return format(x, ".17g")
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(obj, path=None):
    text = dumps17(obj) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# input loading
# ---------------------------------------------------------------------------

def _read_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(f"cannot read {path}: {exc}") from exc


def load_network(path) -> tuple:
    """NetworkSpecFile -> (RationalMatrix, metadata dict)."""
    obj = _read_json(path)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise LoadError(f"{path}: not a network spec file (missing 'kind')")
    kind = obj["kind"]
    payload = obj.get("payload")
    meta = obj.get("metadata", {})
    try:
        if kind == "ratmat":
            return RationalMatrix.from_json_obj(payload), meta
        if kind == "statespace":
            return rm_from_ss(StateSpace.from_json_obj(payload)), meta
        if kind == "opamp2stage":
            body = payload if isinstance(payload, dict) else {}
            params_obj = body.get("params", body)
            params = opamp.OpAmpParams.from_json_obj(params_obj)
            regularized = bool(body.get("regularized", True))
            return opamp.build_T(params, regularized=regularized), meta
    except LoadError:
        raise
    except Exception as exc:
        raise LoadError(f"{path}: invalid {kind} payload: {exc}") from exc
    raise LoadError(f"{path}: unknown kind {kind!r}")


def load_ratmat(path) -> RationalMatrix:
    """A ratmat either as a NetworkSpecFile or as a bare RationalMatrix."""
    obj = _read_json(path)
    try:
        if isinstance(obj, dict) and "kind" in obj:
            kind = obj["kind"]
            if kind == "ratmat":
                return RationalMatrix.from_json_obj(obj["payload"])
            if kind == "statespace":
                return rm_from_ss(StateSpace.from_json_obj(obj["payload"]))
            raise LoadError(f"{path}: kind {kind!r} not usable here")
        return RationalMatrix.from_json_obj(obj)
    except LoadError:
        raise
    except Exception as exc:
        raise LoadError(f"{path}: invalid rational matrix: {exc}") from exc


def load_dcf(path) -> Dcf:
    obj = _read_json(path)
    body = obj.get("dcf", obj) if isinstance(obj, dict) else obj
    try:
        return Dcf.from_json_obj(body)
    except Exception as exc:
        raise LoadError(f"{path}: invalid factorization bundle: {exc}") from exc


def _parse_poles(raw):
    """Comma-separated complex literals, e.g. "-1e6+2e7j,-1e6-2e7j,-3e8"."""
    if raw is None:
        return None
    try:
        return [complex(tok.strip().replace(" ", "")) for tok in raw.split(",")]
    except ValueError as exc:
        raise LoadError(f"bad pole list {raw!r}: {exc}") from exc


def _improper_entries(T: RationalMatrix):
    return [
        (i + 1, j + 1)
        for i, row in enumerate(T.entries)
        for j, e in enumerate(row)
        if not e.is_proper
    ]


def _network_from_dcf(f: Dcf) -> RationalMatrix:
    """Reconstruct the plant: from the stored realization when present."""
    if f.realization is not None:
        r = f.realization
        return rm_from_ss(StateSpace(r["A"], r["B"], r["C"], r["D"]))
    from .ratmat import rm_inv

    return f.Nr @ rm_inv(f.Dr)


def _load_q(args, size):
    if getattr(args, "q_zero", False) or args.q is None:
        return None
    Q = load_ratmat(args.q)
    if Q.rows != size or Q.cols != size:
        raise LoadError(
            f"Q must be {size}x{size}, got {Q.rows}x{Q.cols}")
    return Q


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_factor(args) -> int:
    T, meta = load_network(args.infile)
    bad = _improper_entries(T)
    if bad:
        names = ", ".join(f"T{i}{j}" for i, j in bad)
        print(
            f"error: improper entries ({names}); add small series port "
            "resistances to regularize before factoring",
            file=sys.stderr,
        )
        return EXIT_IMPROPER
    try:
        f = dcf_from_ss(
            T,
            f_poles=_parse_poles(args.f_poles),
            l_poles=_parse_poles(args.l_poles),
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: pole placement failed: {exc}", file=sys.stderr)
        return EXIT_PLACEMENT
    rep = dcf_verify(f, T)
    _emit(
        {"dcf": f.to_json_obj(), "verification": rep.to_json_obj(),
         "metadata": meta},
        args.out,
    )
    return EXIT_OK if rep.is_stable else EXIT_UNSTABLE


def cmd_compensate(args) -> int:
    f = load_dcf(args.dcf)
    Q = _load_q(args, f.size)
    try:
        T_c = hybrid_compensator(f, Q)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    T = _network_from_dcf(f)
    res = interconnect(T, T_c, dcf=f, Q=Q)
    _emit(
        {"T_c": T_c.to_json_obj(), "interconnection": res.to_json_obj()},
        args.out,
    )
    return EXIT_OK if res.report.is_stable else EXIT_UNSTABLE


def cmd_check(args) -> int:
    G = load_ratmat(args.network)
    G_c = load_ratmat(args.compensator)
    if G.rows != 1 or G.cols != 1 or G_c.rows != 1 or G_c.cols != 1:
        raise LoadError("check handles single-port (1x1) networks")
    try:
        rep = check_single_port(G.entries[0][0], G_c.entries[0][0])
    except ValueError as exc:
        raise LoadError(str(exc)) from exc
    _emit(rep.to_json_obj(), args.out)
    return EXIT_OK if rep.is_stable else EXIT_UNSTABLE


def cmd_interconnect(args) -> int:
    T = load_ratmat(args.network)
    T_c = load_ratmat(args.compensator)
    f = load_dcf(args.dcf) if args.dcf else None
    Q = _load_q(args, T.rows) if f is not None else None
    res = interconnect(T, T_c, dcf=f, Q=Q)
    _emit(res.to_json_obj(), args.out)
    return EXIT_OK if res.report.is_stable else EXIT_UNSTABLE


def cmd_perturb(args) -> int:
    T = load_ratmat(args.network)
    T_c = load_ratmat(args.compensator)
    if T.rows != T_c.rows or T.cols != T_c.cols:
        raise LoadError(
            f"dimension mismatch: network is {T.rows}x{T.cols}, "
            f"compensator is {T_c.rows}x{T_c.cols}")
    f = load_dcf(args.dcf) if args.dcf else None
    Q = _load_q(args, T.rows) if f is not None else None
    rb = robustness_sample(
        T, T_c, rel_eps=args.eps, trials=args.trials, seed=args.seed,
        dcf=f, Q=Q)
    _emit(rb.to_json_obj(), args.out)
    return EXIT_OK if bool(rb) else EXIT_UNSTABLE


def _entrywise_reference_errors(T: RationalMatrix, ref: RationalMatrix, grid):
    """Worst magnitude (relative) and phase (degrees) mismatch on the grid."""
    VT = T.eval_grid(grid)
    VR = ref.eval_grid(grid)
    mag = np.max(np.abs(np.abs(VT) - np.abs(VR)) / np.abs(VR))
    ph = np.angle(VT / VR)
    return float(mag), float(np.max(np.abs(np.degrees(ph))))


def cmd_opamp_demo(args) -> int:
    rows = []

    def row(name, ok, detail):
        rows.append((name, bool(ok), detail))

    c_x = args.cx if args.cx is not None else opamp.recover_cx()
    params = opamp.default_params(c_x)
    T = opamp.build_T(params, regularized=True)
    grid = opamp.reference_grid()
    mag_err, ph_err = _entrywise_reference_errors(
        T, opamp.published_reference_T(), grid)
    row(
        "reference match",
        mag_err < 0.02 and ph_err < 2.0,
        f"magnitude {mag_err:.3%} (< 2%), phase {ph_err:.3f} deg (< 2)",
    )

    eigs = rm_to_ss(T).eig()
    unstable = eigs[eigs.real > 0.0]
    re = float(unstable.real.max()) if unstable.size else float("nan")
    row(
        "unstable resonance",
        unstable.size == 2 and abs(re - 6.69e3) / 6.69e3 < 0.01,
        f"Re = {re:.6g} (expected +6.69e3 within 1%)",
    )

    targets = opamp.demo_pole_targets(T)
    f = dcf_from_ss(T, f_poles=targets, l_poles=targets)
    ver = dcf_verify(f, T)
    row(
        "coprime factorization",
        ver.is_stable and ver.residuals["block_identity"] < 1e-6,
        f"block identity {ver.residuals['block_identity']:.3e} (< 1e-6), "
        f"fractions {max(ver.residuals['right_fraction'], ver.residuals['left_fraction']):.3e}",
    )

    T_c = hybrid_compensator(f, None)
    res = interconnect(T, T_c, dcf=f, Q=None)
    dmax = max(
        res.report.residuals.get("delta_r_identity", np.inf),
        res.report.residuals.get("delta_l_identity", np.inf),
    )
    row(
        "closed interconnection",
        res.report.is_stable and dmax < 1e-6,
        f"stable={res.report.is_stable}, return-difference identity "
        f"{dmax:.3e} (< 1e-6)",
    )

    rb = robustness_sample(
        T, T_c, rel_eps=args.eps, trials=args.trials, seed=args.seed,
        dcf=f, Q=None)
    row(
        "perturbation survival",
        bool(rb),
        f"{rb.stable}/{rb.trials} stable at rel_eps={args.eps:g} "
        f"(seed {args.seed}), worst margin {rb.worst_margin:.3e}",
    )

    width = max(len(name) for name, _, _ in rows)
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    all_ok = all(ok for _, ok, _ in rows)
    print(f"{'OK' if all_ok else 'FAILED'}: {sum(ok for _, ok, _ in rows)}"
          f"/{len(rows)} stages (C_x = {c_x:.6e} F)")
    if args.out:
        _emit(
            {
                "c_x": c_x,
                "stages": [
                    {"name": n, "pass": ok, "detail": d} for n, ok, d in rows
                ],
                "T": T.to_json_obj(),
                "dcf": f.to_json_obj(),
                "T_c": T_c.to_json_obj(),
                "interconnection": res.to_json_obj(),
                "robustness": rb.to_json_obj(),
            },
            args.out,
        )
    return EXIT_OK if all_ok else EXIT_UNSTABLE


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="portstab",
        description="Stabilizing port compensation for active multi-port "
        "networks via stable coprime factorization.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "factor", help="doubly coprime factorization of a network matrix")
    p.add_argument("--in", dest="infile", required=True,
                   help="network spec file (or - for stdin)")
    p.add_argument("--f-poles", help="comma-separated right-fraction pole "
                   "targets, complex literals")
    p.add_argument("--l-poles", help="comma-separated left-fraction pole "
                   "targets")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser(
        "compensate",
        help="stabilizing compensator from a factorization bundle")
    p.add_argument("--dcf", required=True, help="factorization bundle JSON")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--q", help="stable parameter matrix Q (ratmat JSON)")
    g.add_argument("--q-zero", action="store_true", help="use Q = 0")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_compensate)

    p = sub.add_parser(
        "check", help="single-port stabilization verdict")
    p.add_argument("--network", required=True, help="1x1 network file")
    p.add_argument("--compensator", required=True, help="1x1 compensator file")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser(
        "interconnect", help="closed interconnection of network and "
        "compensator with stability report")
    p.add_argument("--network", required=True)
    p.add_argument("--compensator", required=True)
    p.add_argument("--dcf", help="optional factorization bundle for the "
                   "fraction-based route")
    p.add_argument("--q", help="parameter matrix used with --dcf")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_interconnect)

    p = sub.add_parser(
        "perturb", help="stability survival under realization perturbations")
    p.add_argument("--network", required=True)
    p.add_argument("--compensator", required=True)
    p.add_argument("--dcf", help="optional factorization bundle; enables the "
                   "artifact-free fraction route")
    p.add_argument("--q", help="parameter matrix used with --dcf")
    p.add_argument("--eps", type=float, default=1e-3,
                   help="relative perturbation size (default 1e-3)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser(
        "opamp-demo",
        help="end-to-end two-stage op-amp pipeline with acceptance table")
    p.add_argument("--cx", type=float, help="bridge capacitance in F "
                   "(default: recovered by fitting the reference data)")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="also write the full JSON artifact bundle")
    p.set_defaults(func=cmd_opamp_demo)

    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD
    except ValueError as exc:
        # grid override misconfiguration and similar input-domain problems
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD


if __name__ == "__main__":
    sys.exit(main())
