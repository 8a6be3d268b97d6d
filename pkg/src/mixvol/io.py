"""JSON formats for body tuples, matrix tuples and reports."""

from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import geometry as geo
from .discriminant import MatrixTuple
from .geometry import BodyTuple


class InputError(ValueError):
    pass


def content_hash(data: bytes) -> str:
    """Git blob hash of ``data``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _number(v, where: str, exact: bool):
    if isinstance(v, bool):
        raise InputError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, str):
        if not exact:
            raise InputError(f"{where}: rational strings need exact mode, got {v!r}")
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise InputError(f"{where}: malformed rational {v!r}") from None
    if isinstance(v, int):
        return Fraction(v) if exact else float(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise InputError(f"{where}: non-finite number")
        return Fraction(v) if exact else v
    raise InputError(f"{where}: expected a number, got {type(v).__name__}")


def _vector(v, where: str, exact: bool, dim: int | None = None) -> list:
    if not isinstance(v, list):
        raise InputError(f"{where}: expected a list")
    out = [_number(x, f"{where}[{k}]", exact) for k, x in enumerate(v)]
    if dim is not None and len(out) != dim:
        raise InputError(f"{where}: expected {dim} entries, got {len(out)}")
    return out


def _matrix(v, where: str, exact: bool, dim: int) -> list:
    if not isinstance(v, list):
        raise InputError(f"{where}: expected a list of rows")
    return [_vector(row, f"{where}[{k}]", exact, dim) for k, row in enumerate(v)]


def _has_strings(obj) -> bool:
    if isinstance(obj, str):
        return True
    if isinstance(obj, list):
        return any(_has_strings(x) for x in obj)
    if isinstance(obj, dict):
        return any(_has_strings(x) for k, x in obj.items() if k not in ("type", "labels"))
    return False


def bodies_from_dict(doc: dict, exact: bool | None = None) -> BodyTuple:
    """``{"dim": n, "bodies": [...], "labels": [...]}``.

    Exact rational arithmetic is used when any number is given as a ``"p/q"``
    string, unless ``exact`` says otherwise.
    """
    if not isinstance(doc, dict) or "bodies" not in doc:
        raise InputError("body file: expected an object with a 'bodies' list")
    if exact is None:
        exact = _has_strings(doc.get("bodies"))
    dim = doc.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise InputError("body file: 'dim' must be a positive integer")
    raw = doc["bodies"]
    if not isinstance(raw, list) or len(raw) != dim:
        raise InputError(f"body file: 'bodies' must list exactly dim = {dim} bodies")
    bodies = []
    for k, b in enumerate(raw):
        where = f"bodies[{k}]"
        if not isinstance(b, dict):
            raise InputError(f"{where}: expected an object")
        kind = b.get("type")
        try:
            if kind == "box":
                bodies.append(geo.Box(_vector(b.get("lower"), f"{where}.lower", exact, dim),
                                      _vector(b.get("upper"), f"{where}.upper", exact, dim)))
            elif kind == "zonotope":
                gens = b.get("generators", [])
                bodies.append(geo.Zonotope(_vector(b.get("center"), f"{where}.center", exact, dim),
                                           _matrix(gens, f"{where}.generators", exact, dim) or None))
            elif kind == "vpolytope":
                # hulls are computed in floating point; rationals are rounded here
                verts = _matrix(b.get("vertices"), f"{where}.vertices", exact, dim)
                bodies.append(geo.VPolytope([[float(x) for x in row] for row in verts]))
            else:
                raise InputError(f"{where}.type: expected box, zonotope or vpolytope, got {kind!r}")
        except geo.GeometryError as exc:
            raise InputError(f"{where}: {exc}") from None
    labels = doc.get("labels") or ()
    if labels and (not isinstance(labels, list) or len(labels) != dim):
        raise InputError("body file: 'labels' must list one name per body")
    try:
        return BodyTuple(tuple(bodies), tuple(str(x) for x in labels))
    except geo.GeometryError as exc:
        raise InputError(f"body file: {exc}") from None


def matrices_from_dict(doc: dict) -> MatrixTuple:
    if not isinstance(doc, dict) or "matrices" not in doc:
        raise InputError("matrix file: expected an object with a 'matrices' list")
    n = doc.get("n")
    if not isinstance(n, int) or n < 1:
        raise InputError("matrix file: 'n' must be a positive integer")
    mats = doc["matrices"]
    if not isinstance(mats, list) or len(mats) != n:
        raise InputError(f"matrix file: 'matrices' must list exactly n = {n} matrices")
    rows = [_matrix(M, f"matrices[{k}]", False, n) for k, M in enumerate(mats)]
    for k, M in enumerate(rows):
        if len(M) != n:
            raise InputError(f"matrices[{k}]: expected {n} rows")
    try:
        return MatrixTuple(tuple(np.array(M) for M in rows))
    except ValueError as exc:
        raise InputError(f"matrix file: {exc}") from None


def read_input(path) -> tuple[BodyTuple | MatrixTuple, str]:
    """Parse a body or matrix file; returns the tuple and the input's content hash."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if isinstance(doc, dict) and "matrices" in doc:
        return matrices_from_dict(doc), content_hash(data)
    return bodies_from_dict(doc), content_hash(data)


def body_to_dict(body) -> dict:
    def enc(a):
        arr = np.asarray(a)
        if arr.dtype == object:
            return [enc(x) for x in arr] if arr.ndim else str(arr.item())
        return arr.tolist()

    if isinstance(body, geo.Box):
        return {"type": "box", "lower": enc(body.lower), "upper": enc(body.upper)}
    if isinstance(body, geo.Zonotope):
        return {"type": "zonotope", "center": enc(body.center), "generators": enc(body.generators)}
    return {"type": "vpolytope", "vertices": enc(body.vertices)}


def tuple_to_dict(tup: BodyTuple) -> dict:
    return {"dim": tup.n, "bodies": [body_to_dict(b) for b in tup], "labels": list(tup.labels)}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def dumps_report(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
