"""JSON readers and writers; every validation failure names the offending field.

Field paths use dotted keys and ``[i]`` indices, e.g. ``sets.K.per_atom[2]``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .builtins import make_function, make_map
from .errors import ParseError, ValidationError
from .measure import MeasureAlgebra, Partition
from .modules import ModuleMap
from .scalars import L0Scalar, StepNatural
from .sets import L0Vector, Points, Polytope, StableSet
from .topology import ConditionalLp, Concat, Pairing, SupHull, WeightedNorm


def load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}", str(path)) from None
    return parse_json(text, str(path))


def parse_json(text, source="<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", source) from None


def _join(path, key):
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _rethrow(path, fn, *args):
    """Run ``fn`` and prefix any validation error with ``path``."""
    try:
        return fn(*args)
    except ValidationError as exc:
        inner = exc.path
        if inner is None or not path:
            full = inner or path or None
        elif inner == path or inner.startswith(path + ".") or inner.startswith(path + "["):
            full = inner
        else:
            full = _join(path, inner)
        raise type(exc)(exc.message, full) from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc), path or None) from None


def _require(obj, key, path):
    if not isinstance(obj, dict):
        raise ValidationError("expected an object", path or None)
    if key not in obj:
        raise ValidationError(f"missing field {key!r}", path or None)
    return obj[key]


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


def algebra_from_json(obj, path="algebra"):
    n = _require(obj, "atoms", path)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError("atoms must be a positive integer", _join(path, "atoms"))
    probs = obj.get("probs")
    if probs is None:
        return MeasureAlgebra.uniform(n)
    if len(probs) != n:
        raise ValidationError(f"{len(probs)} probabilities for {n} atoms", _join(path, "probs"))
    return _rethrow(_join(path, "probs"), MeasureAlgebra, probs)


def algebra_to_json(alg):
    return {"atoms": alg.atom_count, "probs": alg.probs.tolist()}


def scalar_from_json(obj, alg, path="scalar", extended=False):
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        obj = [obj] * alg.atom_count
    return _rethrow(path, L0Scalar, alg, obj, extended)


def step_natural_from_json(obj, alg, path="n"):
    if isinstance(obj, int) and not isinstance(obj, bool):
        obj = [obj] * alg.atom_count
    return _rethrow(path, StepNatural, alg, obj)


def vector_from_json(obj, alg, dim=None, path="vector"):
    arr = _rethrow(path, np.asarray, obj, float)
    if dim is not None and arr.shape == (dim,):
        arr = np.tile(arr, (alg.atom_count, 1))
    return _rethrow(path, L0Vector, alg, arr)


def partition_from_json(obj, alg, path="partition"):
    """A partition is a list of per-atom block labels."""
    labels = _rethrow(path, np.asarray, obj)
    if labels.shape != (alg.atom_count,) or labels.dtype.kind not in "iu":
        raise ValidationError("expected one integer label per atom", path)
    return _rethrow(path, Partition.from_labels, alg, labels)


def stableset_from_json(obj, alg, path="set"):
    dim = _require(obj, "dim", path)
    per_atom = _require(obj, "per_atom", path)
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ValidationError("dim must be a positive integer", _join(path, "dim"))
    if not isinstance(per_atom, list) or len(per_atom) != alg.atom_count:
        raise ValidationError(f"expected a list of {alg.atom_count} per-atom sets", _join(path, "per_atom"))
    reps = []
    for i, item in enumerate(per_atom):
        p = _join(_join(path, "per_atom"), i)
        if not isinstance(item, dict) or len(item) != 1 or next(iter(item)) not in ("points", "polytope"):
            raise ValidationError("expected {\"points\": [...]} or {\"polytope\": [...]}", p)
        key, pts = next(iter(item.items()))
        arr = _rethrow(_join(p, key), np.asarray, pts, float)
        if arr.ndim != 2 or arr.shape[1] != dim or len(arr) == 0:
            raise ValidationError(f"expected a non-empty list of {dim}-dimensional points", _join(p, key))
        reps.append(_rethrow(_join(p, key), Points if key == "points" else Polytope, arr))
    return _rethrow(path, StableSet, alg, dim, reps)


def stableset_to_json(K):
    return {"dim": K.dim, "per_atom": [{rep.kind: rep.points.tolist()} for rep in K.per_atom]}


def modulemap_from_json(obj, alg, path="map"):
    return _rethrow(path, ModuleMap, alg, obj)


def modulemap_to_json(m):
    return m.tolist()


def seminorm_from_json(obj, alg, named=None, path="seminorm"):
    """Tagged union on ``kind``; a bare string refers to ``named``."""
    named = named or {}
    if isinstance(obj, str):
        if obj not in named:
            raise ValidationError(f"unknown seminorm {obj!r}", path)
        return named[obj]
    kind = _require(obj, "kind", path)
    if kind == "weighted_norm":
        return _rethrow(path, WeightedNorm, alg, _require(obj, "weights", path), obj.get("exponent", 2))
    if kind == "pairing":
        return Pairing(vector_from_json(_require(obj, "y", path), alg, path=_join(path, "y")))
    if kind == "conditional_lp":
        sub = partition_from_json(_require(obj, "sub", path), alg, _join(path, "sub"))
        return _rethrow(path, ConditionalLp, alg, sub, obj.get("p", 2.0))
    if kind in ("sup", "concat"):
        members = _require(obj, "members", path)
        if not isinstance(members, list):
            raise ValidationError("members must be a list", _join(path, "members"))
        ms = [seminorm_from_json(m, alg, named, _join(_join(path, "members"), i)) for i, m in enumerate(members)]
        if kind == "sup":
            return _rethrow(path, SupHull, ms)
        part = partition_from_json(_require(obj, "partition", path), alg, _join(path, "partition"))
        return _rethrow(path, Concat, part, ms)
    raise ValidationError(f"unknown seminorm kind {kind!r}", _join(path, "kind"))


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


class Scenario:
    """Algebra plus named sets, seminorms, functions and maps, and a payload.

    Names are resolved lazily so that a command only validates what it uses.
    """

    def __init__(self, obj, source="<scenario>"):
        if not isinstance(obj, dict):
            raise ValidationError("scenario must be a JSON object", source)
        self.raw = obj
        self.algebra = algebra_from_json(_require(obj, "algebra", ""), "algebra")
        self.payload = obj.get("command", {})
        if not isinstance(self.payload, dict):
            raise ValidationError("expected an object", "command")
        self._sets = {}
        self._seminorms = {}

    @classmethod
    def load(cls, path):
        return cls(load_json(path), str(path))

    def _section(self, name):
        sec = self.raw.get(name, {})
        if not isinstance(sec, dict):
            raise ValidationError("expected an object of named entries", name)
        return sec

    def set(self, ref, path):
        if isinstance(ref, dict):
            return stableset_from_json(ref, self.algebra, path)
        sec = self._section("sets")
        if ref not in sec:
            raise ValidationError(f"unknown set {ref!r}", path)
        if ref not in self._sets:
            self._sets[ref] = stableset_from_json(sec[ref], self.algebra, f"sets.{ref}")
        return self._sets[ref]

    def seminorms(self):
        if not self._seminorms:
            for name, obj in self._section("seminorms").items():
                self._seminorms[name] = seminorm_from_json(obj, self.algebra, self._seminorms, f"seminorms.{name}")
        return self._seminorms

    def seminorm(self, ref, path):
        return seminorm_from_json(ref, self.algebra, self.seminorms(), path)

    def _named(self, section, ref, path):
        if isinstance(ref, str):
            sec = self._section(section)
            if ref in sec:
                return sec[ref], f"{section}.{ref}"
        return ref, path

    def function(self, ref, dim, path):
        spec, p = self._named("functions", ref, path)
        return _rethrow(p, make_function, spec, self.algebra, dim)

    def map(self, ref, dim, path):
        spec, p = self._named("maps", ref, path)
        return _rethrow(p, make_map, spec, self.algebra, dim)

    def get(self, key, default=None):
        return self.payload.get(key, default)

    def require(self, key):
        return _require(self.payload, key, "command")
