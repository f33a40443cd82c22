"""Command-line interface: ``polymm <command> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .cases import build_case1, build_ladder, ladder_generator
from .errors import PolyMMError, SchemaError
from .linear import compare_methods, order_bound, parse_eigs
from .moments import moment_recursion
from .nonlinear import MODES, SOLVERS, ReduceConfig, reduce
from .simulate import export_csv, simulate, steady_state_error
from .systems import PolySystem, SignalGenerator


def _emit(doc: dict, out: str | None) -> None:
    if out:
        io.write_json(out, doc)
    else:
        print(json.dumps(doc, indent=1, sort_keys=True))


def _matrix_arg(text: str | None):
    """``"1,0;0,1"`` -> 2x2 array."""
    if text is None:
        return None
    return np.array([[float(x) for x in row.split(",")] for row in text.split(";")])


def _vector_arg(text: str) -> np.ndarray:
    return np.array([float(x) for x in text.split(",")])


def _load(path, cls):
    obj = io.load_model(path)
    if not isinstance(obj, cls):
        raise SchemaError(f"{path} does not hold a {cls.__name__}")
    return obj


def cmd_case1(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    system, gen = build_case1()
    io.save_model(out / "case1_model.json", system)
    io.save_model(out / "case1_gen.json", gen)
    _emit({"model": str(out / "case1_model.json"), "generator": str(out / "case1_gen.json")}, None)
    return 0


def cmd_ladder(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    system, gen = build_ladder(args.sections), ladder_generator(args.omega_scale)
    mpath, gpath = out / f"ladder{args.sections}_model.json", out / "ladder_gen.json"
    io.save_model(mpath, system)
    io.save_model(gpath, gen)
    _emit({"model": str(mpath), "generator": str(gpath)}, None)
    return 0


def cmd_moments(args) -> int:
    system, gen = _load(args.model, PolySystem), _load(args.gen, SignalGenerator)
    series = moment_recursion(system, gen, args.kappa, keep_intermediates=False)
    _emit(io.moments_to_dict(series, include_states=args.states), args.out)
    return 0


def cmd_reduce(args) -> int:
    gen = _load(args.gen, SignalGenerator)
    if (args.model is None) == (args.moments is None):
        raise SchemaError("give exactly one of --model or --moments")
    original = _load(args.model, PolySystem) if args.model else io.moments_from_dict(io.read_json(args.moments))
    order = args.order if args.order == "auto" else int(args.order)
    cfg = ReduceConfig(method=args.method, kappa=args.kappa, order=order, mode=args.mode,
                       eigenvalues=parse_eigs(args.eigs) if args.eigs else None,
                       force_D_zero=True if args.d_zero else None, solver=args.solver, seed=args.seed,
                       A=_matrix_arg(args.preset_a), B=_matrix_arg(args.preset_b),
                       C=_matrix_arg(args.preset_c))
    report = reduce(original, gen, cfg)
    if args.out_model:
        io.save_model(args.out_model, report.system)
    doc = report.to_dict()
    doc["reduced_model"] = io.system_to_dict(report.system)
    _emit(doc, args.out_report)
    return 0


def cmd_validate(args) -> int:
    full, red = _load(args.full, PolySystem), _load(args.reduced, PolySystem)
    gen = _load(args.gen, SignalGenerator)
    v0 = _vector_arg(args.v0)
    tf = simulate(full, gen, v0, args.horizon, args.step, record_every=args.record_every)
    tr = simulate(red, gen, v0, args.horizon, args.step, record_every=args.record_every)
    metrics = steady_state_error(tf, tr, args.settle)
    metrics |= {"v0": v0.tolist(), "horizon": args.horizon, "step": args.step, "settle": args.settle}
    if args.csv:
        export_csv(args.csv, tf, tr)
        metrics["csv"] = args.csv
    _emit(metrics, args.out)
    return 0


def bounds_table(max_mp: int = 4, max_sigma: int = 20) -> dict:
    rows = [compare_methods(s, m, p, dz)
            for dz in (False, True)
            for m in range(1, max_mp + 1) for p in range(1, max_mp + 1)
            for s in range(m + 1, max_sigma + 1)]
    failures = [r for r in rows if not r["table_holds"]]
    case1 = {"method_I": order_bound(5, 2, 1, "I", False, 4).n,
             "method_II": order_bound(5, 2, 1, "II", False, 2).n}
    return {"checked": len(rows), "failures": failures, "all_hold": not failures, "case1": case1}


def cmd_bounds(args) -> int:
    if args.sigma is None:
        doc = bounds_table()
        _emit(doc, args.out)
        return 0 if doc["all_hold"] else 1
    rep = order_bound(args.sigma, args.m, args.p, args.method, args.d_zero, args.kappa)
    doc = {"bound": rep.to_dict()}
    if args.m < args.sigma:
        doc["comparison"] = compare_methods(args.sigma, args.m, args.p, args.d_zero)
    _emit(doc, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polymm", description="Moment matching for polynomial systems.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("case1", help="write the six-state benchmark fixtures")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_case1)

    p = sub.add_parser("ladder", help="write RL ladder fixtures")
    p.add_argument("--sections", type=int, required=True)
    p.add_argument("--omega-scale", type=float, default=1.0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_ladder)

    p = sub.add_parser("moments", help="compute Y_1..Y_kappa")
    p.add_argument("--model", required=True)
    p.add_argument("--gen", required=True)
    p.add_argument("--kappa", type=int, required=True)
    p.add_argument("--states", action="store_true", help="also write X_l")
    p.add_argument("--out")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("reduce", help="fit a reduced model")
    p.add_argument("--model")
    p.add_argument("--moments")
    p.add_argument("--gen", required=True)
    p.add_argument("--method", choices=["1", "2"], required=True)
    p.add_argument("--kappa", type=int, required=True)
    p.add_argument("--order", default="auto")
    p.add_argument("--mode", choices=list(MODES))
    p.add_argument("--eigs", help="comma-separated eigenvalues of A, e.g. '-1+0.2j,-1-0.2j'")
    p.add_argument("--d-zero", action="store_true")
    p.add_argument("--solver", choices=list(SOLVERS), default="basic")
    p.add_argument("--preset-a")
    p.add_argument("--preset-b")
    p.add_argument("--preset-c")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-model")
    p.add_argument("--out-report")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("validate", help="simulate full and reduced models")
    p.add_argument("--full", required=True)
    p.add_argument("--reduced", required=True)
    p.add_argument("--gen", required=True)
    p.add_argument("--v0", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--settle", type=float, default=0.5)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bounds", help="order bounds and the method comparison")
    p.add_argument("--sigma", type=int)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--kappa", type=int, default=1)
    p.add_argument("--method", choices=["1", "2"], default="1")
    p.add_argument("--d-zero", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PolyMMError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": "invalid_input", "type": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
