"""Command-line entry point: ``sharpcone <command> <scenario.json> [flags]``.

Exit codes: 0 when every check passes, 1 on a failed check, 2 on bad input.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .cone import (
    ConeContext,
    classify,
    cone_status,
    jordan_decompose,
    leq,
    sharp_norm,
    sharp_norm_order,
    square,
    square_oracle,
)
from .embeddings import (
    compute_alpha,
    cyclic_case_verify,
    split_homo_antihomo,
    splitting_checks,
    theorem_gen_evaluate,
    check_jordan,
)
from .errors import NotCentral, PreconditionFailed, ReconstructionFailed, ScenarioError, SharpConeError
from .linalg import make_rng
from .modular import fixed_point_algebra
from .recovery import central_detect, corollary_deduce, recover_conditions, recover_projection
from .report import Report, check, flag, round_sig
from .scenario import PROFILES, Scenario, generate, resolve_operator, resolve_vector
from .suites import SUITES, modular_checks, run_suite, verify_all

SCENARIO_COMMANDS = ("modular", "cone", "alpha", "gen-theorem", "cyclic-theorem", "central", "recover", "verify-all")
CONE_QUERIES = ("member", "classify", "norm", "decompose", "square", "leq")


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


def _rounded(values) -> list:
    return [round_sig(v, 6) for v in values]


def _error_record(name: str, exc: Exception):
    return flag(f"{name}.error", type(exc).__name__, False, note=str(exc))


def _require_N(sc: Scenario):
    if sc.N is None:
        raise InputError("scenario has no second algebra N")
    return sc.N_space()


# commands


def cmd_modular(sc: Scenario, args) -> Report:
    md = sc.modular()
    checks = modular_checks(sc, md, make_rng(sc.seed, 0x40))
    spectrum = np.sort(md.delta_spectrum)
    data = {
        "dim_H": md.dim,
        "dim_M": md.space.dim,
        "delta_spectrum": _rounded(spectrum),
        "fixed_point_dim": fixed_point_algebra(md).dim,
    }
    return Report("modular", checks, data)


def cmd_cone(sc: Scenario, args) -> Report:
    md = sc.modular()
    ctx = ConeContext(md)
    zeta = resolve_vector(sc, args.vector or "xi0")
    query = args.query
    checks, data = [], {"query": query}
    if query == "member":
        status = cone_status(ctx, zeta)
        data["status"] = status
        checks.append(flag("cone.member", "vector lies in the cone", status != "outside", note=status))
    elif query == "classify":
        c = classify(ctx, zeta)
        data.update(contractive=c.contractive, projective=c.projective,
                    orthogonality_residual=round_sig(c.orthogonality_residual),
                    idempotence_residual=round_sig(c.idempotence_residual))
        checks.append(flag("cone.classify_agree", "order and operator classifications agree", c.agree))
    elif query == "norm":
        spectral = sharp_norm(ctx, zeta)
        ordered = sharp_norm_order(ctx, zeta)
        data.update(spectral=round_sig(spectral, 8), bisection=round_sig(ordered, 8))
        checks.append(check("cone.norm_agree", "bisection norm equals spectral radius",
                            abs(spectral - ordered) / max(1.0, spectral), 1e-6))
    elif query == "decompose":
        plus, minus = jordan_decompose(ctx, zeta)
        residual = float(np.linalg.norm(plus - minus - zeta))
        data.update(plus_norm=round_sig(sharp_norm(ctx, plus)), minus_norm=round_sig(sharp_norm(ctx, minus)))
        checks.append(check("cone.decompose", "zeta = zeta_plus - zeta_minus", residual, 1e-8))
    elif query == "square":
        got = square(ctx, zeta)
        want = square_oracle(ctx, zeta)
        residual = float(np.linalg.norm(got - want)) / max(1.0, float(np.linalg.norm(want)))
        data["square"] = sc.algebra.vector_to_json(got)
        checks.append(check("cone.square_oracle", "order square equals operator square", residual, 1e-8))
    elif query == "leq":
        eta = resolve_vector(sc, args.other or "xi0")
        ok = leq(ctx, zeta, eta)
        data["leq"] = bool(ok)
        checks.append(flag("cone.leq", "zeta <= eta", ok))
    return Report("cone", checks, data)


def cmd_alpha(sc: Scenario, args) -> Report:
    N = _require_N(sc)
    md = sc.modular()
    an = compute_alpha(N, md)
    check_jordan(an, seed=sc.seed)
    split_homo_antihomo(an, sc.seed)
    checks = splitting_checks(an)
    d = md.dim
    data = {
        "dim_N": N.dim,
        "rank_g": int(round(np.trace(an.g).real)),
        "rank_e": int(round(np.trace(an.e).real)),
        "rank_f": int(round(np.trace(an.f).real)),
        "g_is_identity": bool(np.linalg.norm(an.g - np.eye(d)) <= 1e-8),
    }
    return Report("alpha", checks, data)


def cmd_gen_theorem(sc: Scenario, args) -> Report:
    N = _require_N(sc)
    md = sc.modular()
    an = compute_alpha(N, md)
    split_homo_antihomo(an, sc.seed)
    rep = theorem_gen_evaluate(an, n_samples=args.samples, seed=sc.seed)
    return Report("gen-theorem", list(rep.checks), {"case": rep.case})


def cmd_cyclic_theorem(sc: Scenario, args) -> Report:
    N = _require_N(sc)
    md = sc.modular()
    try:
        _, checks = cyclic_case_verify(N, md, strict=False, seed=sc.seed)
    except PreconditionFailed as exc:
        return Report("cyclic-theorem", [flag("cyclic.precondition", "xi0 cyclic for N", False, note=str(exc))])
    return Report("cyclic-theorem", checks)


def _projection(sc: Scenario, args, md):
    spec = args.projection or ("p" if "p" in sc.operators else None)
    if spec is None:
        raise InputError("no projection given (use --projection)")
    return resolve_operator(sc, spec, md)


def cmd_central(sc: Scenario, args) -> Report:
    md = sc.modular()
    p = _projection(sc, args, md)
    ctx = ConeContext(md)
    try:
        e = central_detect(ctx, p, seed=sc.seed)
    except NotCentral as exc:
        data = {"central": False}
        if exc.witness is not None:
            data["witness_violation"] = round_sig(exc.witness["violation"])
        return Report("central", [flag("central.detect", "p is a central projection", False, note=str(exc))], data)
    residual = float(np.linalg.norm(e - p, 2))
    comm = max(float(np.linalg.norm(e @ b - b @ e)) for b in md.space.basis)
    checks = [
        flag("central.detect", "p is a central projection", True),
        check("central.e_equals_p", "p equals the detected central projection", residual, 1e-8),
        check("central.e_commutes", "detected e commutes with M", comm, 1e-8),
    ]
    return Report("central", checks, {"central": True, "rank_e": int(round(np.trace(e).real))})


def cmd_recover(sc: Scenario, args) -> Report:
    md = sc.modular()
    p = _projection(sc, args, md)
    ctx = ConeContext(md)
    rep = recover_conditions(ctx, p)
    checks = list(rep.checks)
    data: dict = {"failed": rep.failed()}
    if rep.passed:
        try:
            e, q, residual = recover_projection(ctx, p, rep)
            checks.append(check("recover.reconstruction", "p = q e + J q-perp e J", residual, 10 * ctx.tol.eq_rel))
            data["rank_e"] = int(round(np.trace(e).real))
            data["rank_q"] = int(round(np.trace(q).real))
            data["corollary"] = {k: v for k, v in corollary_deduce(ctx, p, e, q).items() if k != "residual"}
        except ReconstructionFailed as exc:
            checks.append(_error_record("recover.reconstruction", exc))
    return Report("recover", checks, data)


def cmd_verify_all(sc: Scenario, args) -> Report:
    return verify_all(sc, samples=args.samples)


COMMANDS = {
    "modular": cmd_modular,
    "cone": cmd_cone,
    "alpha": cmd_alpha,
    "gen-theorem": cmd_gen_theorem,
    "cyclic-theorem": cmd_cyclic_theorem,
    "central": cmd_central,
    "recover": cmd_recover,
    "verify-all": cmd_verify_all,
}


# plumbing


def _parse_tolerances(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            key, value = "eq_rel", item
        try:
            out[key] = float(value)
        except ValueError as exc:
            raise InputError(f"bad tolerance {item!r}") from exc
    return out


def _seed_override(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SHARPCONE_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"SHARPCONE_SEED must be an integer, got {env!r}") from exc
    return None


def load_scenario(path: str, args) -> Scenario:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    sc = Scenario.loads(text, validate=False)
    seed = _seed_override(args)
    if seed is not None:
        sc.seed = seed
    sc.tolerances.update(_parse_tolerances(args.tol))
    sc.validate()
    return sc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sharpcone", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in SCENARIO_COMMANDS:
        p = sub.add_parser(name, parents=[common])
        p.add_argument("scenario", help="scenario JSON file, or - for stdin")
        p.add_argument("--tol", action="append", metavar="[KEY=]VALUE",
                       help="tolerance override; a bare number sets eq_rel")
        p.add_argument("--samples", type=int, default=6)
        if name == "cone":
            p.add_argument("--query", choices=CONE_QUERIES, default="member")
            p.add_argument("--vector", help="vector name, 'xi0', or JSON blocks")
            p.add_argument("--other", help="second vector for leq")
        if name in ("central", "recover"):
            p.add_argument("--projection", help="operator name, JSON matrix, or constructor tag")

    g = sub.add_parser("generate", help="write a seeded scenario to stdout")
    g.add_argument("profile", choices=PROFILES)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("-o", "--output")

    s = sub.add_parser("suite", parents=[common], help="run a seeded invariant suite")
    s.add_argument("name", choices=sorted(SUITES))
    s.add_argument("--count", type=int, default=None)
    return parser


def _emit(report: Report, fmt: str):
    sys.stdout.write(report.to_json() if fmt == "json" else report.to_text())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            seed = _seed_override(args)
            text = generate(args.profile, 0 if seed is None else seed).dumps()
            if args.output:
                with open(args.output, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0
        start = time.perf_counter()
        if args.command == "suite":
            seed = _seed_override(args)
            report = run_suite(args.name, args.count, 0 if seed is None else seed)
        else:
            sc = load_scenario(args.scenario, args)
            try:
                report = COMMANDS[args.command](sc, args)
            except SharpConeError as exc:
                report = Report(args.command, [_error_record(args.command, exc)])
        if args.timings:
            report.timings = {"total": time.perf_counter() - start}
    except (InputError, ScenarioError) as exc:
        print(f"sharpcone: error: {exc}", file=sys.stderr)
        return 2
    _emit(report, args.format)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
