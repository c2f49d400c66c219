"""Named functions and maps so scenarios can be described entirely in files.

Parameters may be given once (shared by every atom) or as a list with one
entry per atom.  Every evaluator is row-local: the value on an atom is
computed from that atom's row alone.
"""
from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .optimization import StableFunction, StableMap
from .scalars import L0Scalar
from .sets import L0Vector


def per_atom(value, atoms, shape, name):
    """Broadcast a shared or per-atom parameter to ``(atoms, *shape)``."""
    arr = np.asarray(value, dtype=float)
    if arr.shape == tuple(shape):
        return np.broadcast_to(arr, (atoms,) + tuple(shape)).copy()
    if arr.shape == (atoms,) + tuple(shape):
        return arr.copy()
    if arr.ndim == 0:
        return np.full((atoms,) + tuple(shape), float(arr))
    raise ValidationError(f"expected shape {tuple(shape)} or {(atoms,) + tuple(shape)}, got {arr.shape}", name)


def _rowsum(a):
    return a.sum(axis=1)


def sq_norm(algebra, dim, center=0.0, scale=1.0):
    c = per_atom(center, algebra.atom_count, (dim,), "center")
    s = per_atom(scale, algebra.atom_count, (), "scale")

    def ev(x):
        d = x.points - c
        return L0Scalar(x.algebra, s * _rowsum(d * d))

    return StableFunction(ev, convex=bool(np.all(s >= 0)), name="sq_norm")


def quadratic(algebra, dim, Q=None, b=0.0, c=0.0):
    """``1/2 x^T Q x + <b, x> + c``."""
    n = algebra.atom_count
    Q = per_atom(np.eye(dim) if Q is None else Q, n, (dim, dim), "Q")
    b = per_atom(b, n, (dim,), "b")
    c = per_atom(c, n, (), "c")

    def ev(x):
        qx = np.einsum("aij,aj->ai", Q, x.points)
        return L0Scalar(x.algebra, 0.5 * _rowsum(x.points * qx) + _rowsum(b * x.points) + c)

    sym = 0.5 * (Q + np.swapaxes(Q, 1, 2))
    convex = bool(np.all(np.linalg.eigvalsh(sym) >= -1e-12))
    return StableFunction(ev, convex=convex, name="quadratic")


def norm(algebra, dim, center=0.0, weights=1.0, exponent=2):
    c = per_atom(center, algebra.atom_count, (dim,), "center")
    w = per_atom(weights, algebra.atom_count, (dim,), "weights")
    q = np.inf if exponent in ("inf", float("inf")) else exponent
    if q not in (1, 2, np.inf):
        raise ValidationError("exponent must be 1, 2 or inf", "exponent")

    def ev(x):
        return L0Scalar(x.algebra, np.linalg.norm((x.points - c) * w, ord=q, axis=1))

    return StableFunction(ev, convex=True, name="norm")


def linear(algebra, dim, y=0.0, c=0.0):
    y = per_atom(y, algebra.atom_count, (dim,), "y")
    c = per_atom(c, algebra.atom_count, (), "c")

    def ev(x):
        return L0Scalar(x.algebra, _rowsum(x.points * y) + c)

    return StableFunction(ev, convex=True, name="linear")


def constant(algebra, dim, value=0.0):
    v = per_atom(value, algebra.atom_count, (), "value")
    return StableFunction(lambda x: L0Scalar(x.algebra, v.copy()), convex=True, name="constant")


FUNCTIONS = {
    "sq_norm": sq_norm,
    "quadratic": quadratic,
    "norm": norm,
    "linear": linear,
    "constant": constant,
}


def affine(algebra, dim, a, b=0.0):
    """``T(x) = A x + b``; ``a`` is a scalar or a ``d x d`` matrix, per atom or shared.

    Returns ``(map, rate)`` where ``rate`` is the per-atom Lipschitz constant.
    """
    n = algebra.atom_count
    arr = np.asarray(a, dtype=float)
    b = per_atom(b, n, (dim,), "b")
    if arr.ndim >= 2 and arr.shape[-2:] == (dim, dim):
        A = per_atom(arr, n, (dim, dim), "a")
        rate = np.linalg.norm(A, ord=2, axis=(1, 2))

        def ev(x):
            return L0Vector(x.algebra, np.einsum("aij,aj->ai", A, x.points) + b)
    else:
        s = per_atom(arr, n, (), "a")
        rate = np.abs(s)

        def ev(x):
            return L0Vector(x.algebra, s[:, None] * x.points + b)

    return StableMap(ev, name="affine"), L0Scalar(algebra, rate)


def identity(algebra, dim):
    return StableMap(lambda x: x, name="identity"), L0Scalar(algebra, np.zeros(algebra.atom_count))


MAPS = {"affine": affine, "identity": identity}


def _lookup(registry, spec, kind):
    if isinstance(spec, str):
        name, params = spec, {}
    elif isinstance(spec, dict) and "name" in spec:
        name, params = spec["name"], dict(spec.get("params", {}))
    else:
        raise ValidationError(f"{kind} must be a name or {{'name': ..., 'params': {{...}}}}")
    if name not in registry:
        raise ValidationError(f"unknown {kind} {name!r}; known: {sorted(registry)}", "name")
    return registry[name], params


def make_function(spec, algebra, dim):
    factory, params = _lookup(FUNCTIONS, spec, "function")
    try:
        return factory(algebra, dim, **params)
    except TypeError as exc:
        raise ValidationError(str(exc), "params") from None


def make_map(spec, algebra, dim):
    factory, params = _lookup(MAPS, spec, "map")
    try:
        return factory(algebra, dim, **params)
    except TypeError as exc:
        raise ValidationError(str(exc), "params") from None
