"""JSON persistence for models, generators, moment series and reports.

Every file carries the multiset-ordering tag; files written under another
ordering are rejected because their coefficient columns would be permuted.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConventionMismatch, SchemaError
from .kron import CONVENTION
from .moments import MomentSeries
from .systems import PolySystem, SignalGenerator

SCHEMA_VERSION = 1


def _arr(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def system_to_dict(system: PolySystem) -> dict:
    blocks = {}
    for name, store in (("F", system.F), ("H", system.H)):
        for (i, r), blk in sorted(store.items()):
            blocks[f"{name}_{i}_{r}"] = _arr(blk)
    return {"schema_version": SCHEMA_VERSION, "kind": "system", "convention": CONVENTION,
            "dims": {"n": system.n, "m": system.m, "p": system.p, "L": system.L}, "blocks": blocks}


def generator_to_dict(gen: SignalGenerator) -> dict:
    blocks = {f"S_{l}": _arr(b) for l, b in sorted(gen.S.items())}
    blocks |= {f"U_{l}": _arr(b) for l, b in sorted(gen.U.items())}
    return {"schema_version": SCHEMA_VERSION, "kind": "generator", "convention": CONVENTION,
            "dims": {"sigma": gen.sigma, "m": gen.m, "L": gen.L}, "blocks": blocks}


def moments_to_dict(series: MomentSeries, include_states: bool = False) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "kind": "moments", "convention": CONVENTION,
           "kappa": series.kappa, "Y": {str(l): _arr(y) for l, y in sorted(series.Y.items())}}
    if include_states and series.X:
        out["X"] = {str(l): _arr(x) for l, x in sorted(series.X.items())}
    return out


def _check_header(doc: dict, kind: str | None = None) -> None:
    if not isinstance(doc, dict):
        raise SchemaError("top-level JSON value must be an object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {doc.get('schema_version')!r}")
    if doc.get("convention") != CONVENTION:
        raise ConventionMismatch(f"file uses ordering {doc.get('convention')!r}, expected {CONVENTION!r}")
    if kind is not None and doc.get("kind") != kind:
        raise SchemaError(f"expected a {kind} file, got {doc.get('kind')!r}")


def _parse_key(key: str, prefix: str, parts: int) -> tuple:
    bits = key.split("_")
    if bits[0] != prefix or len(bits) != parts + 1:
        raise SchemaError(f"bad block key {key!r}")
    try:
        return tuple(int(b) for b in bits[1:])
    except ValueError as exc:
        raise SchemaError(f"bad block key {key!r}") from exc


def _matrix(key, value) -> np.ndarray:
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"block {key} is not a numeric array") from exc
    if a.ndim != 2:
        raise SchemaError(f"block {key} must be two-dimensional")
    return a


def system_from_dict(doc: dict) -> PolySystem:
    _check_header(doc, "system")
    try:
        d = doc["dims"]
        n, m, p, L = int(d["n"]), int(d["m"]), int(d["p"]), d.get("L")
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError("dims must give n, m, p") from exc
    F, H = {}, {}
    for key, val in doc.get("blocks", {}).items():
        target = F if key.startswith("F_") else H if key.startswith("H_") else None
        if target is None:
            raise SchemaError(f"unknown block {key!r}")
        target[_parse_key(key, key[0], 2)] = _matrix(key, val)
    return PolySystem(n, m, p, F=F, H=H, L=None if L is None else int(L))


def generator_from_dict(doc: dict) -> SignalGenerator:
    _check_header(doc, "generator")
    try:
        sigma, m = int(doc["dims"]["sigma"]), int(doc["dims"]["m"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError("dims must give sigma, m") from exc
    S, U = {}, {}
    for key, val in doc.get("blocks", {}).items():
        target = S if key.startswith("S_") else U if key.startswith("U_") else None
        if target is None:
            raise SchemaError(f"unknown block {key!r}")
        target[_parse_key(key, key[0], 1)[0]] = _matrix(key, val)
    if 1 not in S:
        raise SchemaError("generator needs S_1")
    return SignalGenerator(sigma, m, S=S, U=U)


def moments_from_dict(doc: dict) -> MomentSeries:
    _check_header(doc, "moments")
    Y = {int(k): _matrix(f"Y_{k}", v) for k, v in doc.get("Y", {}).items()}
    X = {int(k): _matrix(f"X_{k}", v) for k, v in doc.get("X", {}).items()}
    if 1 not in Y:
        raise SchemaError("moment file needs Y_1")
    return MomentSeries(int(doc.get("kappa", max(Y))), Y=Y, X=X)


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc.msg})") from exc


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path):
    """Load a system or generator file according to its ``kind``."""
    doc = read_json(path)
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "system":
        return system_from_dict(doc)
    if kind == "generator":
        return generator_from_dict(doc)
    if kind == "moments":
        return moments_from_dict(doc)
    _check_header(doc)
    raise SchemaError(f"unknown kind {kind!r}")


def save_model(path, obj) -> None:
    if isinstance(obj, PolySystem):
        write_json(path, system_to_dict(obj))
    elif isinstance(obj, SignalGenerator):
        write_json(path, generator_to_dict(obj))
    elif isinstance(obj, MomentSeries):
        write_json(path, moments_to_dict(obj))
    else:
        raise TypeError(f"cannot save {type(obj).__name__}")
