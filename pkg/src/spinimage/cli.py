"""Command-line entry point.

JSON results go to standard output (or ``--out``); one-line human summaries
go to standard error. Exit codes: 0 success, 1 a mathematical check failed,
2 usage or validation error, 3 resource limit.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import antiferro, counterexample, image, influence, signature, weitz
from .bp import DEFAULT_BUDGET, bp, check_vertex_recursion, gibbs, unnormalized_message
from .core import (
    CheckFailure,
    ExternalField,
    Graph,
    InfeasibleError,
    InteractionMatrix,
    JointDistribution,
    Pinning,
    ResourceLimitError,
    SpinImageError,
    ValidationError,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class CommandResult:
    def __init__(self, payload: Any, passed: bool = True, summary: str = ""):
        self.payload = payload
        self.passed = passed
        self.summary = summary


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def render(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, default=_default) + "\n"


def _read_json(path: str, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {what} file: {exc.strerror}", path) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc.msg} at line {exc.lineno} column {exc.colno}", path) from None


def _load(path: str, cls, what: str):
    obj = _read_json(path, what)
    try:
        return cls.from_json(obj)
    except ValidationError as exc:
        raise ValidationError(f"in {what} {path}: {exc}") from None


def _load_vector(path: str, key: str, what: str) -> np.ndarray:
    obj = _read_json(path, what)
    if isinstance(obj, dict):
        if key not in obj:
            raise ValidationError(f"missing field for {what}", key)
        obj = obj[key]
    if not isinstance(obj, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj):
        raise ValidationError(f"{what} must be a list of numbers", key)
    return np.asarray(obj, dtype=float)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _tol(args, default: float) -> float:
    return default if args.tol is None else args.tol


def cmd_bp_eval(args):
    A = _load(args.matrix, InteractionMatrix, "matrix")
    mu = _load(args.dist, JointDistribution, "distribution")
    F = bp(A, mu)
    return CommandResult({"F": F, "G": unnormalized_message(A, mu)}, summary=f"F = {np.round(F, 6).tolist()}")


def _fields(args):
    return None if args.fields is None else _load(args.fields, ExternalField, "fields").weights


def cmd_bp_gibbs(args):
    g = _load(args.graph, Graph, "graph")
    A = _load(args.matrix, InteractionMatrix, "matrix")
    res = gibbs(g, A, _fields(args), args.budget)
    return CommandResult({"marginals": res.marginals(), "Z": res.Z, "log_Z": res.log_Z}, summary=f"log Z = {res.log_Z:.12g}")


def cmd_bp_check(args):
    g = _load(args.graph, Graph, "graph")
    A = _load(args.matrix, InteractionMatrix, "matrix")
    tol = _tol(args, 1e-12)
    r = check_vertex_recursion(g, A, args.vertex, _fields(args), args.budget)
    ok = r <= tol
    return CommandResult({"vertex": args.vertex, "residual": r, "tol": tol, "pass": ok}, ok, f"residual {r:.3e} ({'pass' if ok else 'FAIL'})")


def cmd_weitz_check(args):
    A = _load(args.matrix, InteractionMatrix, "matrix")
    mu = _load(args.dist, JointDistribution, "distribution")
    rep = weitz.weitz_report(A, mu, _tol(args, weitz.DEFAULT_TOL))
    rep["tilted_marginals"] = weitz.weitz_marginals(A, mu).marginals
    return CommandResult(rep, rep["pass"], f"residual {rep['residual']:.3e}")


def cmd_image_vertices(args):
    A = _load(args.matrix, InteractionMatrix, "matrix")
    v = image.vertex_images(A, args.d, args.budget)
    return CommandResult(
        {"q": v.q, "d": v.d, "indices": v.indices, "images": v.images, "infeasible": v.infeasible},
        summary=f"{len(v)} feasible vertex images, {len(v.infeasible)} infeasible",
    )


def cmd_image_member(args):
    A = _load(args.matrix, InteractionMatrix, "matrix")
    p = _load_vector(args.point, "point", "point")
    rep = image.hull_membership(p, A, args.d, _tol(args, image.MEMBER_TOL), args.budget)
    return CommandResult(rep.to_json(), summary=f"member = {rep.is_member} (violation {rep.max_violation:.3e})")


def cmd_image_extremize(args):
    A = _load(args.matrix, InteractionMatrix, "matrix")
    w = _load_vector(args.objective, "objective", "objective")
    res = image.product_image_extremum(A, args.d, w, args.restarts, args.iterations, args.maximize, args.seed)
    return CommandResult(res.to_json(), summary=f"{res.sense} = {res.value:.12g}")


def cmd_ce_certify(args):
    A = _load(args.matrix, InteractionMatrix, "matrix")
    w = counterexample.certify_nonconvexity(args.beta, A, args.d, budget=args.restarts, seed=args.seed)
    return CommandResult(w.to_json(), summary=f"witness emitted, extremal value {w.extremal_value:.12g}")


def cmd_ce_verify(args):
    obj = _read_json(args.witness, "witness")
    rep = counterexample.verify_witness(obj)
    failed = [k for k, v in rep["checks"].items() if not v]
    return CommandResult(rep, rep["pass"], "verified" if rep["pass"] else f"FAILED: {', '.join(failed)}")


def cmd_sig_scan(args):
    rep = signature.scan(args.q, args.d, args.beta, args.gamma, _tol(args, signature.SIGN_TOL))
    return CommandResult(rep, rep["pass"], f"{sum(r['pass'] for r in rep['instances'])}/{args.q} instances pass")


def cmd_sig_build(args):
    A, t, gamma = signature.construct_signature_instance(args.q, args.d, args.beta, args.k, args.gamma)
    out = A.to_json()
    out.update({"t": t, "gamma": gamma, "k": args.k, "d": args.d, "beta": args.beta})
    return CommandResult(out, summary=f"t = {t:.12g}, gamma = {gamma}")


def _decomposition(args, A):
    if args.v is None and args.D is None:
        return antiferro.decompose(A)
    if args.v is None or args.D is None:
        raise ValidationError("give both --v and --D", "v")
    return antiferro.decompose(A, v=_load_vector(args.v, "v", "v"), D=_load_vector(args.D, "D", "D"))


def cmd_potts_solve(args):
    A = _load(args.matrix, InteractionMatrix, "matrix")
    mu = _load(args.dist, JointDistribution, "distribution")
    sol = antiferro.solve_product(A, mu)
    return CommandResult(sol.to_json(), summary="product measure found" if sol.found else "no product measure")


def cmd_potts_criterion(args):
    A = _load(args.matrix, InteractionMatrix, "matrix")
    mu = _load(args.dist, JointDistribution, "distribution")
    dec = _decomposition(args, A)
    res = antiferro.iid_criterion(dec, mu)
    out = res.to_json()
    out["decomposition"] = dec.to_json()
    return CommandResult(out, summary=f"criterion {'holds' if res.holds else 'fails'} (slack {res.slack:.3e})")


def cmd_potts_bulk(args):
    rep = antiferro.bulk_experiment(
        args.q, args.d, args.beta, args.eps, args.n, args.seed, args.budget, allow_out_of_range=args.allow_out_of_range
    )
    return CommandResult(rep.to_json(), rep.passed, f"{rep.successes} solved, {rep.failures} failed, {rep.excluded} excluded")


def cmd_inequalities(args):
    if args.claim == "weird":
        rep = antiferro.check_claim_weird()
    else:
        rep = antiferro.check_claim_insane(args.d, args.q, args.eps)
    return CommandResult(rep, rep["pass"], f"claim {args.claim}: {'pass' if rep['pass'] else 'FAIL'}")


def cmd_influence_compute(args):
    g = _load(args.graph, Graph, "graph")
    A = _load(args.matrix, InteractionMatrix, "matrix")
    pin = None if args.pinning is None else _load(args.pinning, Pinning, "pinning")
    rep = influence.influence_matrix(g, A, pin, budget=args.budget)
    return CommandResult(rep.to_json(), rep.real_spectrum, f"lambda_max = {rep.lambda_max:.12g}")


def cmd_influence_contraction(args):
    A = _load(args.matrix, InteractionMatrix, "matrix")
    pot = influence.Potential(args.potential, args.floor)
    rep = influence.contraction_estimate(A, args.delta, pot, args.norm, args.n, args.seed)
    return CommandResult(rep.to_json(), summary=f"sampled sup of induced norm = {rep.estimate:.6g}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="master random seed (default: 0)")
    g.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximum number of enumerated states")
    g.add_argument("--tol", type=float, default=None, help="override the check tolerance")
    g.add_argument("--out", default=None, help="write JSON here instead of standard output")
    g.add_argument("--verbose", action="store_true", help="print tracebacks on error")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="spinimage", description="Belief-propagation images of spin systems.")
    groups = parser.add_subparsers(dest="group", metavar="GROUP", required=True)

    def leaf(sub, name: str, func: Callable, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help, description=help)
        p.set_defaults(func=func)
        return p

    def group(name: str, help: str):
        g = groups.add_parser(name, help=help, description=help)
        return g.add_subparsers(dest="command", metavar="COMMAND", required=True)

    s = group("bp", "BP functional and exact Gibbs enumeration")
    p = leaf(s, "eval", cmd_bp_eval, "evaluate F_A on a joint distribution")
    p.add_argument("--matrix", required=True)
    p.add_argument("--dist", required=True)
    p = leaf(s, "gibbs", cmd_bp_gibbs, "exact marginals and log Z by enumeration")
    p.add_argument("--graph", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--fields")
    p = leaf(s, "check-recursion", cmd_bp_check, "check the vertex recursion at one vertex")
    p.add_argument("--graph", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--vertex", type=int, required=True)
    p.add_argument("--fields")

    s = group("weitz", "universal fields for two-spin systems")
    p = leaf(s, "check", cmd_weitz_check, "compare F(mu) with F of the tilted product")
    p.add_argument("--matrix", required=True)
    p.add_argument("--dist", required=True)

    s = group("image", "geometry of the BP image")
    p = leaf(s, "vertices", cmd_image_vertices, "images of all point masses")
    p.add_argument("--matrix", required=True)
    p.add_argument("--d", type=int, required=True)
    p = leaf(s, "member", cmd_image_member, "convex hull membership of a point")
    p.add_argument("--matrix", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--point", required=True)
    p = leaf(s, "extremize", cmd_image_extremize, "optimize a linear objective over product measures")
    p.add_argument("--matrix", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--objective", required=True)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--maximize", action="store_true")

    s = group("counterexample", "nonconvexity witnesses for B(beta, A)")
    p = leaf(s, "certify", cmd_ce_certify, "build and check a nonconvexity witness")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--restarts", type=int, default=64)
    p = leaf(s, "verify", cmd_ce_verify, "recompute every claim of a witness")
    p.add_argument("--witness", required=True)

    s = group("signature", "matrices with prescribed eigenvalue signature")
    p = leaf(s, "scan", cmd_sig_scan, "verify the signature for every k")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, default=signature.DEFAULT_GAMMA)
    p = leaf(s, "build", cmd_sig_build, "write one constructed interaction matrix")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma", type=float, default=signature.DEFAULT_GAMMA)

    s = group("potts", "product-measure solvability for rank-one-minus-diagonal models")
    p = leaf(s, "solve-product", cmd_potts_solve, "find an i.i.d. product with the same BP image")
    p.add_argument("--matrix", required=True)
    p.add_argument("--dist", required=True)
    p = leaf(s, "criterion", cmd_potts_criterion, "evaluate the solvability criterion")
    p.add_argument("--matrix", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--v", help="JSON list; required with --D when q = 2")
    p.add_argument("--D", help="JSON list; required with --v when q = 2")
    p = leaf(s, "bulk", cmd_potts_bulk, "sampled confirmation for antiferromagnetic Potts")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--allow-out-of-range", action="store_true", help="run outside the proven parameter range (no guarantee)")

    s = group("inequalities", "scalar inequalities used by the tail argument")
    p = leaf(s, "check", cmd_inequalities, "evaluate one claim on a grid")
    p.add_argument("--claim", choices=["weird", "insane"], required=True)
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--eps", type=float, default=0.2)

    s = group("influence", "influence matrices and contraction estimates")
    p = leaf(s, "compute", cmd_influence_compute, "influence matrix of a pinned Gibbs distribution")
    p.add_argument("--graph", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--pinning")
    p = leaf(s, "contraction", cmd_influence_contraction, "sampled Jacobian norm of the transformed BP map")
    p.add_argument("--matrix", required=True)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--potential", choices=sorted(influence._FORWARD), default="identity")
    p.add_argument("--floor", type=float, default=influence.DEFAULT_FLOOR)
    p.add_argument("--norm", choices=influence.NORMS, default="linf")
    p.add_argument("--n", type=int, default=1000)
    return parser


def _check_globals(args) -> None:
    if args.budget < 1:
        raise ValidationError("budget must be at least 1", "budget")
    if args.tol is not None and not args.tol > 0:
        raise ValidationError("tolerance must be positive", "tol")


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _check_globals(args)
        result = args.func(args)
    except ResourceLimitError as exc:
        return _error(args, exc, EXIT_RESOURCE)
    except CheckFailure as exc:
        return _error(args, exc, EXIT_CHECK)
    except (ValidationError, InfeasibleError) as exc:
        return _error(args, exc, EXIT_USAGE)
    except SpinImageError as exc:
        return _error(args, exc, EXIT_CHECK)
    text = render(result.payload)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if result.summary:
        print(result.summary, file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_CHECK


def _error(args, exc: Exception, code: int) -> int:
    if getattr(args, "verbose", False):
        import traceback

        traceback.print_exc()
    kind = {EXIT_RESOURCE: "resource limit", EXIT_CHECK: "check failed", EXIT_USAGE: "error"}[code]
    print(f"spinimage: {kind}: {exc}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
