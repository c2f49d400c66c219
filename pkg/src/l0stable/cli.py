"""Command-line frontend: one scenario file in, one JSON report out.

Exit codes: 0 success, 2 invalid input, 3 a mathematical hypothesis failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from . import _accel
from .compactness import (
    EuclideanL0,
    SeminormInduced,
    audit_net,
    cluster_lemma_construct,
    is_stably_compact,
    stable_eps_net,
)
from .errors import L0Error, MathError, ValidationError
from .io import (
    Scenario,
    algebra_from_json,
    load_json,
    parse_json,
    scalar_from_json,
    stableset_from_json,
    stableset_to_json,
    vector_from_json,
)
from .measure import MeasureAlgebra, Partition
from .modules import coordinates, extract_stable_basis, stable_lincomb
from .optimization import (
    ContractionSpec,
    audit_separation,
    banach_fixpoint,
    conditional_argmin,
    polar_and_bipolar,
    strong_separation,
)
from .scalars import L0Scalar
from .sets import L0Vector, selector_count, selectors
from .topology import (
    EpsLambda,
    SeminormFamily,
    audit_inclusion,
    audit_points,
    chain_neighborhoods,
    epslambda_witness,
    topology_refinement_witness,
)

log = logging.getLogger("l0stable")

BRUTE_FORCE_LIMIT = 625


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------


def _set_file(path, alg=None):
    """A StableSet file, optionally carrying its own ``algebra``."""
    obj = load_json(path)
    if not isinstance(obj, dict):
        raise ValidationError("expected an object", str(path))
    if "algebra" in obj:
        own = algebra_from_json(obj["algebra"])
        if alg is not None and own != alg:
            raise ValidationError("algebra differs from the other input", f"{path}:algebra")
        alg = own
    elif alg is None:
        per_atom = obj.get("per_atom")
        if not isinstance(per_atom, list) or not per_atom:
            raise ValidationError("missing field 'per_atom'", str(path))
        alg = MeasureAlgebra.uniform(len(per_atom))
    return alg, stableset_from_json(obj, alg, str(path))


def _scenario(args):
    path = args.scenario or getattr(args, "spec", None)
    return Scenario.load(path) if path else None


def _need(value, flag):
    if value is None:
        raise ValidationError(f"provide {flag} or a --scenario with this field", flag)
    return value


def _runs(values):
    """Run-length encode a per-atom array as ``[start, stop, value]`` triples."""
    values = np.asarray(values)
    cuts = np.flatnonzero(np.diff(values) != 0) + 1
    starts = np.concatenate([[0], cuts])
    stops = np.concatenate([cuts, [len(values)]])
    return [[int(a), int(b), values[a].item()] for a, b in zip(starts, stops)]


def _event_json(event):
    return {"prob": event.prob(), "atoms": [[a, b] for a, b, v in _runs(event.mask) if v]}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_check_compact(args):
    sc = _scenario(args)
    if sc is not None:
        K = sc.set(sc.require("set"), "command.set")
    else:
        _, K = _set_file(_need(args.set, "--set"))
    cert = is_stably_compact(K)
    out = {"compact": cert.compact, "radius": cert.radius.tolist() if cert.radius is not None else None}
    if cert.bad_atom is not None:
        out["bad_atom"] = cert.bad_atom
    return {"inputs": {"set": stableset_to_json(K)}, "outputs": out}


def cmd_argmin(args):
    sc = _scenario(args)
    if sc is not None:
        K = sc.set(sc.require("set"), "command.set")
        f = sc.function(sc.require("function"), K.dim, "command.function")
        fn_spec = sc.require("function")
    else:
        alg, K = _set_file(_need(args.set, "--set"))
        fn_spec = _need(args.fn, "--fn")
        fn_spec = parse_json(fn_spec, "--fn") if fn_spec.lstrip().startswith("{") else fn_spec
        sc = Scenario({"algebra": {"atoms": alg.atom_count, "probs": alg.probs.tolist()}})
        f = sc.function(fn_spec, K.dim, "--fn")
    x0, value = conditional_argmin(f, K)
    audit = {"stability_violations": f.check_stability(K.algebra, K.dim, seed=args.seed)}
    n = selector_count(K)
    if n <= BRUTE_FORCE_LIMIT:
        best = np.min([f(s).values for s in selectors(K)], axis=0)
        audit["selectors_checked"] = n
        audit["matches_brute_force"] = bool(np.array_equal(best, value.values))
    return {
        "inputs": {"set": stableset_to_json(K), "function": fn_spec},
        "outputs": {"x0": x0.points.tolist(), "value": value.tolist()},
        "audit": audit,
    }


def cmd_fixpoint(args):
    sc = _need(_scenario(args), "--spec")
    alg = sc.algebra
    x1 = vector_from_json(sc.require("x1"), alg, path="command.x1")
    T, rate = sc.map(sc.require("map"), x1.dim, "command.map")
    if sc.get("rate") is not None:
        rate = scalar_from_json(sc.get("rate"), alg, "command.rate")
    tol = scalar_from_json(sc.get("tol", 1e-9), alg, "command.tol")
    max_iter = sc.get("max_iter", 100_000)
    domain = sc.set(sc.get("domain"), "command.domain") if sc.get("domain") is not None else None
    spec = ContractionSpec(T, rate, tol, domain)
    spec.validate(x1.dim, seed=args.seed)
    res = banach_fixpoint(spec, x1, max_iter=max_iter, check=False)
    tz = T(res.z).points
    return {
        "inputs": {"x1": x1.points.tolist(), "map": sc.require("map"), "rate": rate.tolist(), "tol": tol.tolist()},
        "outputs": {"z": res.z.points.tolist(), "iters": res.iters.values.tolist()},
        "certificates": {"residual": res.residual.tolist(), "d_z_Tz": np.linalg.norm(res.z.points - tz, axis=1).tolist()},
    }


def cmd_separate(args):
    sc = _scenario(args)
    if sc is not None:
        S1 = sc.set(sc.require("a"), "command.a")
        S2 = sc.set(sc.require("b"), "command.b")
    else:
        alg, S1 = _set_file(_need(args.a, "--a"))
        _, S2 = _set_file(_need(args.b, "--b"), alg)
    cert = strong_separation(S1, S2)
    return {
        "inputs": {"a": stableset_to_json(S1), "b": stableset_to_json(S2)},
        "outputs": {"y": cert.y.points.tolist(), "r": cert.r.tolist()},
        "certificates": {"support_gap": cert.gap.tolist()},
        "audit": {"failed_atoms": audit_separation(cert, S1, S2)},
    }


def cmd_bipolar(args):
    sc = _scenario(args)
    if sc is not None:
        S = sc.set(sc.require("set"), "command.set")
    else:
        _, S = _set_file(_need(args.set, "--set"))
    res = polar_and_bipolar(S)
    out = {
        "bounded": res.bounded.tolist(),
        "polar": stableset_to_json(res.polar) if res.polar is not None else None,
        "bipolar": stableset_to_json(res.bipolar),
    }
    if res.polar is None:
        out["unbounded"] = True
        out["halfspaces"] = [{"A": a.tolist(), "b": b.tolist()} for a, b in res.halfspaces]
    return {"inputs": {"set": stableset_to_json(S)}, "outputs": out}


def cmd_basis(args):
    sc = _need(_scenario(args), "--scenario")
    alg = sc.algebra
    gens = sc.require("generators")
    if not isinstance(gens, list) or not gens:
        raise ValidationError("expected a non-empty list of vectors", "command.generators")
    vecs = [vector_from_json(g, alg, path=f"command.generators[{i}]") for i, g in enumerate(gens)]
    basis = extract_stable_basis(vecs)
    blocks = []
    for k, block in enumerate(basis.profile.blocks):
        blocks.append(
            {
                "atoms": block.atoms().tolist(),
                "rank": basis.ranks[k],
                "pivots": list(basis.pivots[k]),
                "vectors": [v.points.tolist() for v in basis.vectors.entries[k]],
            }
        )
    out = {"dimension": basis.dimension.tolist(), "blocks": blocks}
    express = sc.get("express", [])
    if express:
        coords, errs = [], []
        for i, e in enumerate(express):
            x = vector_from_json(e, alg, path=f"command.express[{i}]")
            c = coordinates(basis, x)
            back = stable_lincomb(c, basis.vectors)
            coords.append([[r.values[b.atoms()[0]] for r in entries] for b, entries in zip(c.blocks, c.entries)])
            errs.append(float(np.abs(back.points - x.points).max()))
        out["coordinates"] = coords
        out["round_trip_error"] = errs
    return {"inputs": {"generators": [v.points.tolist() for v in vecs]}, "outputs": out}


def cmd_net(args):
    sc = _need(_scenario(args), "--scenario")
    K = sc.set(sc.require("set"), "command.set")
    r = scalar_from_json(sc.require("radius"), sc.algebra, "command.radius")
    metric_ref = sc.get("metric", "euclidean")
    metric = EuclideanL0() if metric_ref == "euclidean" else SeminormInduced(sc.seminorm(metric_ref, "command.metric"))
    net = stable_eps_net(K, metric, r)
    centers = [[v.points[a].tolist() for v in net.centers.on_atom(a)] for a in range(sc.algebra.atom_count)]
    return {
        "inputs": {"set": stableset_to_json(K), "radius": r.tolist(), "metric": metric_ref},
        "outputs": {"count": net.count.values.tolist(), "centers": centers, "owners": [o.tolist() for o in net.owners]},
        "audit": {"uncovered_points": audit_net(K, metric, net)},
    }


def dyadic_block(size, n):
    """Indicator of the n-th dyadic block ``[1 - 2^(1-n), 1 - 2^-n)`` of ``size`` atoms."""
    v = np.zeros(size)
    v[size - (size >> (n - 1)) : size - (size >> n)] = 1.0
    return v


def cmd_cluster(args):
    if args.depth < 1 or args.n < 1:
        raise ValidationError("depth and n must be positive", "--depth/--n")
    alg = MeasureAlgebra.dyadic(args.depth)
    size = alg.atom_count
    if args.n > args.depth:
        raise ValidationError("need n <= depth so that every dyadic block is non-empty", "--n")
    rs = [L0Scalar(alg, dyadic_block(size, k)) for k in range(1, args.n + 1)]
    cert = cluster_lemma_construct(rs)
    hits = [float(alg.probs[x.values >= cert.r.values].sum()) for x in rs]
    disjoint = not np.any(np.sum([c.mask for c in cert.C], axis=0) > 1)
    return {
        "inputs": {"depth": args.depth, "n": args.n, "r_n": "indicator of the atoms in [1 - 2^(1-n), 1 - 2^-n)"},
        "outputs": {"C": [_event_json(c) for c in cert.C], "r": _runs(cert.r.values)},
        "certificates": {
            "prob_C": [c.prob() for c in cert.C],
            "C_disjoint": disjoint,
            "prob_r_n_ge_r": hits,
        },
    }


def cmd_audit_topology(args):
    sc = _need(_scenario(args), "--scenario")
    named = sc.seminorms()
    names = sc.require("family")
    if not isinstance(names, list) or not names:
        raise ValidationError("expected a non-empty list of seminorm names", "command.family")
    family = SeminormFamily([sc.seminorm(n, f"command.family[{i}]") for i, n in enumerate(names)])
    alg = sc.algebra
    dim = sc.require("dim")
    eps, lam = float(sc.require("eps")), float(sc.require("lam"))
    samples = int(sc.get("samples", 10_000))
    part = Partition.from_labels(alg, np.asarray(sc.get("partition", [0] * alg.atom_count)))
    pieces = sc.get("pieces", [list(range(len(names)))] * part.num_blocks)
    q = family.concat_sup(part, pieces)
    w = epslambda_witness(q, eps, lam)
    index = {id(p): i for i, p in enumerate(family.members)}
    rng = np.random.default_rng(args.seed)
    zero = L0Vector.zeros(alg, dim)
    pts = audit_points(zero, dim, samples, rng, spread=(-3.0, 2.0))
    witness_bad = audit_inclusion(EpsLambda(zero, w.seminorms, w.eps, w.lam), EpsLambda(zero, [q], eps, lam), pts)
    r = L0Scalar(alg, np.full(alg.atom_count, eps))
    sb, lb, el = chain_neighborhoods(zero, family.members, (alg.trivial_partition(), [[]]), r, lam)
    chain_bad = audit_inclusion(sb, lb, pts) + audit_inclusion(lb, el, pts)
    refine = topology_refinement_witness(
        family.members, eps, lam, lambda N, e: (N, L0Scalar(alg, np.full(alg.atom_count, e))), dim, samples, args.seed
    )
    refine_bad = audit_inclusion(
        EpsLambda(zero, refine.seminorms, refine.eps, refine.lam), EpsLambda(zero, family.members, eps, lam), pts
    )
    return {
        "inputs": {"family": names, "eps": eps, "lam": lam, "partition": part.labels.tolist(), "pieces": pieces},
        "outputs": {
            "epslambda_witness": {
                "N": [names[index[id(p)]] for p in w.seminorms],
                "eps": w.eps,
                "lam": w.lam,
                "m": w.m,
            },
            "refinement_witness": {"eps": refine.eps, "lam": refine.lam, "m": refine.m},
        },
        "audit": {
            "samples": samples,
            "witness_violations": witness_bad,
            "chain_violations": chain_bad,
            "refinement_violations": refine_bad,
            "seminorms_defined": sorted(named),
        },
    }


COMMANDS = {
    "check-compact": cmd_check_compact,
    "argmin": cmd_argmin,
    "fixpoint": cmd_fixpoint,
    "separate": cmd_separate,
    "bipolar": cmd_bipolar,
    "basis": cmd_basis,
    "net": cmd_net,
    "demo-cluster-lemma": cmd_cluster,
    "audit-topology": cmd_audit_topology,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file")
    common.add_argument("--seed", type=int, default=0, help="seed for every sampling audit")
    common.add_argument("--threads", type=int, default=None, help="kernel threads (also STABLE_THREADS)")
    common.add_argument("--timing", action="store_true", help="add wall time to the report")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="l0stable", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("check-compact", "argmin", "bipolar"):
            p.add_argument("--set", help="StableSet JSON file")
        if name == "argmin":
            p.add_argument("--fn", help="builtin name or JSON {\"name\": ..., \"params\": {...}}")
        if name == "fixpoint":
            p.add_argument("--spec", help="fixed-point scenario file (same as --scenario)")
        if name == "separate":
            p.add_argument("--a", help="first StableSet JSON file")
            p.add_argument("--b", help="second StableSet JSON file")
        if name == "demo-cluster-lemma":
            p.add_argument("--depth", type=int, default=16)
            p.add_argument("--n", type=int, default=8)
    return parser


def _emit(report, stream):
    json.dump(report, stream, allow_nan=True)
    stream.write("\n")


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    _accel.set_threads(args.threads or _accel.threads_from_env())
    start = time.perf_counter()
    try:
        report = {"command": args.command, "status": "ok", "seed": args.seed}
        report.update(COMMANDS[args.command](args))
        code = 0
    except ValidationError as exc:
        log.error("invalid input: %s", exc)
        report, code = {"command": args.command, "status": "invalid", **exc.reason()}, 2
    except MathError as exc:
        log.error("hypothesis failed: %s", exc)
        report, code = {"command": args.command, "status": "failed", **exc.reason()}, 3
    except L0Error as exc:  # pragma: no cover - every library error is one of the two
        report, code = {"command": args.command, "status": "failed", **exc.reason()}, 3
    if args.timing:
        report["wall_time_s"] = time.perf_counter() - start
    _emit(report, stdout)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
