"""JSON geometry files: schema validation with line numbers, load and dump."""

from __future__ import annotations

import json

import jsonschema
import numpy as np

from .bspline import KnotVector, TensorSpace
from .errors import DGIGAError, GeometryError
from .geometry import FaceId, InterfacePair, MultiPatch, Patch

_FACE = {
    "type": "object",
    "required": ["patch", "dir", "side"],
    "additionalProperties": False,
    "properties": {
        "patch": {"type": "integer", "minimum": 0},
        "dir": {"type": "integer", "minimum": 0, "maximum": 2},
        "side": {"enum": ["lo", "hi"]},
    },
}

SCHEMA = {
    "type": "object",
    "required": ["dim", "patches", "interfaces", "dirichlet"],
    "additionalProperties": False,
    "properties": {
        "dim": {"enum": [2, 3]},
        "patches": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["degree", "knots", "control_points"],
                "additionalProperties": False,
                "properties": {
                    "degree": {"type": "array", "minItems": 2, "maxItems": 3,
                               "items": {"type": "integer", "minimum": 0}},
                    "knots": {"type": "array", "minItems": 2, "maxItems": 3,
                              "items": {"type": "array", "minItems": 2,
                                        "items": {"type": "number"}}},
                    "control_points": {"type": "array", "minItems": 1,
                                       "items": {"type": "array", "minItems": 2, "maxItems": 3,
                                                 "items": {"type": "number"}}},
                },
            },
        },
        "interfaces": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["a", "b", "flip", "perm"],
                "additionalProperties": False,
                "properties": {
                    "a": _FACE,
                    "b": _FACE,
                    "flip": {"type": "array", "maxItems": 2, "items": {"type": "boolean"}},
                    "perm": {"type": "array", "maxItems": 2,
                             "items": {"type": "integer", "minimum": 0}},
                    "kind": {"enum": ["matching", "overlap"]},
                    "width": {"type": "number", "minimum": 0},
                },
            },
        },
        "dirichlet": {"type": "array", "items": _FACE},
    },
}


class GeometryFileError(DGIGAError, ValueError):
    """Malformed geometry file; ``line`` is 1-based (0 if unknown)."""

    def __init__(self, message, line=0, path=()):
        super().__init__("line %d: %s" % (line, message) if line else message)
        self.line = line
        self.path = tuple(path)


def _value_lines(text):
    """Map every JSON path (tuple of keys/indices) to the line its value starts on."""
    decoder = json.JSONDecoder()
    lines = {}
    n = len(text)

    def skip(i):
        while i < n and text[i] in " \t\r\n":
            i += 1
        return i

    def line_of(i):
        return text.count("\n", 0, i) + 1

    def value(i, path):
        i = skip(i)
        lines[path] = line_of(i)
        if i < n and text[i] == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = decoder.raw_decode(text, skip(i))
                i = skip(i) + 1  # colon
                i = skip(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1  # comma
        if i < n and text[i] == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = skip(value(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = decoder.raw_decode(text, i)
        return end

    value(0, ())
    return lines


def validate_text(text):
    """Parse and schema-check ``text``; returns the decoded document.

    Raises:
        GeometryFileError: with the 1-based line of the offending value.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeometryFileError("invalid JSON: %s" % exc.msg, exc.lineno) from None
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(doc),
                    key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        path = tuple(err.absolute_path)
        lines = _value_lines(text)
        where = "/".join(str(p) for p in path) or "<root>"
        raise GeometryFileError("%s: %s" % (where, err.message), lines.get(path, 0), path)
    return doc


def _face(d):
    return FaceId(int(d["patch"]), int(d["dir"]), d["side"])


def multipatch_from_dict(doc):
    """Build a :class:`MultiPatch` from a validated document."""
    dim = doc["dim"]
    patches = []
    for i, pd in enumerate(doc["patches"]):
        if len(pd["degree"]) != dim or len(pd["knots"]) != dim:
            raise GeometryError("patch %d: need %d degrees and knot vectors" % (i, dim))
        cp = np.asarray(pd["control_points"], dtype=float)
        if cp.ndim != 2 or cp.shape[1] != dim:
            raise GeometryError("patch %d: control points must have %d coordinates" % (i, dim))
        space = TensorSpace([KnotVector(k, p) for k, p in zip(pd["knots"], pd["degree"])])
        patches.append(Patch(space, cp))
    pairs = [InterfacePair(_face(it["a"]), _face(it["b"]), tuple(it["flip"]), tuple(it["perm"]),
                           it.get("kind", "matching"), float(it.get("width", 0.0)))
             for it in doc["interfaces"]]
    return MultiPatch(patches, pairs, [_face(f) for f in doc["dirichlet"]])


def loads(text):
    return multipatch_from_dict(validate_text(text))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def _face_dict(f):
    return {"patch": f.patch, "dir": f.dir, "side": f.side}


def to_dict(mp):
    return {
        "dim": mp.dim,
        "patches": [{"degree": [kv.degree for kv in p.space.kvs],
                     "knots": [kv.knots.tolist() for kv in p.space.kvs],
                     "control_points": p.control_points.tolist()} for p in mp.patches],
        "interfaces": [{"a": _face_dict(q.a), "b": _face_dict(q.b), "flip": list(q.flip),
                        "perm": list(q.perm), "kind": q.kind, "width": q.width}
                       for q in mp.interfaces],
        "dirichlet": [_face_dict(f) for f in mp.dirichlet],
    }


def dumps(mp, indent=1):
    return json.dumps(to_dict(mp), indent=indent)


def dump(mp, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(mp) + "\n")
