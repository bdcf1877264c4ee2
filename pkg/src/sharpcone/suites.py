"""Seeded verification suites.

Each ``*_checks`` function verifies one scenario and returns check records; a suite
runs one of them over many seeded scenarios and folds the records by name (worst
residual, all verdicts).  ``verify-all`` on the command line reuses the same functions.
"""

from __future__ import annotations

import numpy as np

from .algebra import Algebra, OperatorSubspace, is_member, is_projection
from .cone import (
    ConeContext,
    classify,
    cone_member,
    corner,
    jordan_decompose,
    offdiag,
    offdiag_oracle,
    op_orthogonal,
    sharp_norm,
    sharp_norm_order,
    square,
    square_oracle,
    support_vector,
    triple_product_oracle,
)
from .embeddings import (
    check_jordan,
    compute_alpha,
    cyclic_case_verify,
    fin_coinc_check,
    split_homo_antihomo,
    splitting_checks,
    theorem_gen_evaluate,
    verify_cone_inclusion,
)
from .errors import LemmaViolated, NotCentral, PreconditionFailed, ReconstructionFailed, SharpConeError
from .linalg import DEFAULT_TOL, make_rng, psd_sqrt, rand_hermitian, rand_unitary, spectral_projections
from .modular import ModularData, modular_flow
from .recovery import central_detect, recover_conditions, recover_projection
from .report import Check, Report, check, flag
from .scenario import Scenario, generate, random_density

FLOW_TIMES = (0.3, 1.0, float(np.pi))
LOOSE = DEFAULT_TOL.with_overrides(eq_rel=1e-6)


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b)) / max(1.0, float(np.linalg.norm(b)))


# modular data


def modular_checks(sc: Scenario, md: ModularData, rng) -> list:
    A = sc.algebra
    tol = 1e-8
    xi0 = md.xi0
    basis = md.space.basis
    s_res = max(_rel(md.S(b @ xi0), b.conj().T @ xi0) for b in basis)
    half = md.delta_power(0.5)
    polar = _rel(md.J.mat @ np.conj(half), md.S.mat)
    jj = _rel(md.J.compose(md.J), np.eye(md.dim))
    comm = A.commutant_space
    jmj = max(is_member(md.conjugate(b), comm)[1] / max(1.0, np.linalg.norm(b)) for b in basis)
    out = [
        check("modular.S_on_basis", "S x xi0 = x* xi0", s_res, tol),
        check("modular.polar", "S = J Delta^(1/2)", polar, tol),
        check("modular.J_involution", "J^2 = I", jj, tol),
        check("modular.JMJ_commutant", "J M J = M'", jmj, tol),
        flag("modular.JMJ_dimension", "J M J spans M'", comm.dim == md.space.dim),
    ]
    flow = 0.0
    for t in FLOW_TIMES:
        U = md.delta_power(1j * t)
        for b in basis:
            y = U @ b @ U.conj().T
            flow = max(flow, is_member(y, md.space)[1] / max(1.0, np.linalg.norm(b)))
    out.append(check("modular.flow_invariance", "Delta^it M Delta^-it = M", flow, tol))
    # block oracle: Delta zeta = rho zeta sigma^-1 with rho = xi xi*, sigma = xi* xi
    xi_blocks = A.vector_blocks(xi0)
    worst = 0.0
    for _ in range(3):
        zb = [rng.complex_normal((n, m)) for n, m in A.blocks]
        zeta = A.vector(zb)
        expect = A.vector([
            (x @ x.conj().T) @ z @ np.linalg.inv(x.conj().T @ x) for x, z in zip(xi_blocks, zb)
        ])
        worst = max(worst, _rel(md.Delta @ zeta, expect))
    positive = bool(sc.truth("positive_blocks"))
    name = "modular.delta_oracle_positive" if positive else "modular.delta_oracle_general"
    out.append(check(name, "Delta zeta = rho zeta rho^-1 blockwise", worst, tol))
    # modular_flow raises if the flow leaves M; exercise it once
    try:
        modular_flow(md, FLOW_TIMES[0], basis[0])
        out.append(flag("modular.flow_api", "modular flow stays in M", True))
    except SharpConeError:
        out.append(flag("modular.flow_api", "modular flow stays in M", False))
    return out


# cone order


def _random_projection(space: OperatorSubspace, rng) -> np.ndarray:
    """Sum of a random subset of the spectral projections of a random element."""
    h = space.random_element(rng, hermitian=True)
    out = np.zeros_like(h)
    for _, P in spectral_projections(h, LOOSE):
        if rng.integers(0, 2):
            out = out + P
    return out


def _random_psd(space, rng, norm):
    h = space.random_element(rng, hermitian=True)
    x = h @ h
    return norm * x / np.linalg.norm(x, 2)


def cone_checks(md: ModularData, rng, samples: int = 8) -> list:
    ctx = ConeContext(md)
    xi0 = md.xi0
    space = md.space
    contractive_ok = projective_ok = agree_ok = pointed_ok = True
    split_res = orth_ok = 0.0
    norm_res = 0.0
    support_ok = True
    for s in range(samples):
        kind = s % 3
        if kind == 0:
            x = _random_psd(space, rng, 0.5 if rng.integers(0, 2) else 1.7)
        elif kind == 1:
            x = _random_projection(space, rng)
        else:
            x = space.random_element(rng, hermitian=True)
        zeta = x @ xi0
        w = np.linalg.eigvalsh(x)
        if kind != 2:
            c = classify(ctx, zeta)
            contractive_ok &= c.contractive == bool(w[-1] <= 1 + 1e-9)
            projective_ok &= c.projective == is_projection(x)
            agree_ok &= c.agree
            if np.linalg.norm(x) > 0:
                pointed_ok &= not cone_member(ctx, -zeta)
            sv = support_vector(ctx, zeta)
            support_ok &= bool(classify(ctx, sv.vec).projective) and cone_member(ctx, sv.vec - zeta / max(w[-1], 1e-300))
        else:
            zp, zm = jordan_decompose(ctx, zeta)
            wv, vv = np.linalg.eigh(x)
            plus = (vv * np.clip(wv, 0, None)) @ vv.conj().T
            minus = (vv * np.clip(-wv, 0, None)) @ vv.conj().T
            split_res = max(split_res, _rel(zp, plus @ xi0), _rel(zm, minus @ xi0), _rel(zp - zm, zeta))
            ep, em = support_vector(ctx, zp), support_vector(ctx, zm)
            if np.linalg.norm(ep.rep) > 0 and np.linalg.norm(em.rep) > 0:
                orth_ok = max(orth_ok, 0.0 if op_orthogonal(ctx, ep.vec, em.vec) else 1.0)
        radius = sharp_norm(ctx, zeta)
        if radius > 0:
            norm_res = max(norm_res, abs(sharp_norm_order(ctx, zeta) - radius) / radius)
    return [
        flag("cone.contractive_iff_rep_le_I", "zeta <= xi0 iff rep <= I", contractive_ok),
        flag("cone.projective_iff_idempotent", "projective iff rep^2 = rep", projective_ok),
        flag("cone.projective_two_tests_agree", "order and operator projectivity agree", agree_ok),
        flag("cone.pointed", "-zeta outside the cone", pointed_ok),
        flag("cone.support_vector", "support is projective and dominates", support_ok),
        check("cone.jordan_split", "zeta = zeta+ - zeta- matches the spectral split", split_res, 1e-8),
        check("cone.jordan_split_orthogonal", "supports of zeta+ and zeta- are orthogonal", orth_ok, 0.0),
        check("cone.sharp_norm_bisection", "order norm equals spectral radius", norm_res, 1e-6),
    ]


# Jordan structure


def jordan_checks(md: ModularData, rng, samples: int = 8) -> list:
    ctx = ConeContext(md)
    xi0 = md.xi0
    space = md.space
    sq = cor = od = 0.0
    for _ in range(samples):
        x = space.random_element(rng)
        y = space.random_element(rng)
        zeta, eta = x @ xi0, y @ xi0
        sq = max(sq, _rel(square(ctx, zeta), square_oracle(ctx, zeta)))
        e = _random_projection(space, rng)
        pv = e @ xi0
        cor = max(cor, _rel(corner(ctx, pv, eta), triple_product_oracle(ctx, pv, eta)))
        od = max(od, _rel(offdiag(ctx, pv, eta), offdiag_oracle(ctx, pv, eta)))
    return [
        check("jordan.square", "order-theoretic square equals rep^2 xi0", sq, 1e-8),
        check("jordan.corner", "corner equals e y e xi0", cor, 1e-8),
        check("jordan.offdiag", "off-diagonal part equals (e y e-perp + e-perp y e) xi0", od, 1e-8),
    ]


# embeddings


def embedding_checks(sc: Scenario, md: ModularData, seed: int = 0) -> list:
    N = sc.N_space()
    out = []
    holds, _ = verify_cone_inclusion(N, md, seed=seed)
    out.append(flag("embed.inclusion_sampled", "N_+ xi0 inside the cone (sampled)", holds))
    an = compute_alpha(N, md)
    check_jordan(an, seed=seed)
    split_homo_antihomo(an, seed)
    out.extend(splitting_checks(an))
    for key in ("g", "e", "f"):
        truth = sc.truth(key)
        if truth is not None:
            out.append(check(f"truth.{key}", f"recovered {key} equals ground truth",
                             float(np.linalg.norm(getattr(an, key) - truth, 2)), 1e-6))
    rep = theorem_gen_evaluate(an, seed=seed)
    out.extend(rep.checks)
    if sc.truth("case") is not None:
        out.append(flag("truth.case", "case classification matches ground truth", rep.case == sc.truth("case"),
                        note=f"case {rep.case}"))
    if sc.truth("cyclic"):
        _, cyc = cyclic_case_verify(N, md, strict=False, seed=seed)
        out.extend(c for c in cyc if c.name.startswith("cyclic."))
    elif sc.truth("cyclic") is False:
        try:
            cyclic_case_verify(N, md, strict=False, seed=seed)
            ok = False
        except PreconditionFailed:
            ok = True
        out.append(flag("cyclic.precondition_detected", "non-cyclic N is refused", ok))
    return out


# central projections


def random_central(A: Algebra, rng) -> np.ndarray:
    return A.embed([np.eye(n) * float(rng.integers(0, 2)) for n, _ in A.blocks])


def random_noncentral(A: Algebra, rng) -> np.ndarray:
    r = rng.integers(1, A.dim)
    V = rand_unitary(A.dim, rng)
    return V[:, :r] @ V[:, :r].conj().T


def central_checks(sc: Scenario, md: ModularData, rng) -> list:
    ctx = ConeContext(md)
    A = sc.algebra
    p = random_central(A, rng)
    basis = md.space.basis
    try:
        e = central_detect(ctx, p)
        exact = max(float(np.linalg.norm(p @ b @ md.xi0 - e @ b @ md.xi0)) for b in basis)
        accepted = float(np.linalg.norm(e - p, 2))
    except NotCentral:
        exact = accepted = 1.0
    out = [
        check("central.accepts_central", "central projection detected with e = p", accepted, 1e-8),
        check("central.basis_certificate", "p x xi0 = e x xi0 on the basis", exact, 1e-8),
    ]
    q = random_noncentral(A, rng)
    rejected, witnessed = False, False
    try:
        central_detect(ctx, q)
    except NotCentral as exc:
        rejected, witnessed = True, exc.witness is not None
    out.append(flag("central.rejects_noncentral", "non-central projection refused", rejected,
                    note="witness found" if witnessed else "basis check only"))
    return out


# recovery


def _nontrivial_blocks(A: Algebra, e):
    for k, z in enumerate(A.central_projections()):
        ez = e @ z
        if np.linalg.norm(ez) > 1e-6 and np.linalg.norm(ez - z) > 1e-6:
            yield z


def recovery_checks(sc: Scenario, md: ModularData) -> list:
    ctx = ConeContext(md)
    p = sc.operators["p"]
    rep = recover_conditions(ctx, p)
    out = [flag("recover.valid_passes_all", "ground-truth projection satisfies every condition", rep.passed,
                note=",".join(rep.failed()))]
    try:
        e, q, residual = recover_projection(ctx, p, rep)
        e_res = float(np.linalg.norm(e - sc.truth("e"), 2))
        q_res = max((float(np.linalg.norm((q - sc.truth("q")) @ z, 2)) for z in _nontrivial_blocks(sc.algebra, e)), default=0.0)
    except ReconstructionFailed:
        residual = e_res = q_res = 1.0
    out.append(check("recover.reconstruction", "p = q e + J q-perp e J", residual, 1e-7))
    out.append(check("recover.e_matches", "recovered e equals ground truth", e_res, 1e-7))
    out.append(check("recover.q_matches", "recovered q equals ground truth where e is nontrivial", q_res, 1e-7))
    return out


def invalid_projection(sc: Scenario, kind: int) -> tuple:
    if kind == 0:
        return "perturbed", sc.operators["p_perturbed"]
    if kind == 1:
        v = sc.xi0 / np.linalg.norm(sc.xi0)
        return "rank_one_xi0", np.outer(v, v.conj())
    rng = make_rng(sc.seed, 0x1B)
    return "haar", random_noncentral(sc.algebra, rng)


def invalid_recovery_checks(sc: Scenario, md: ModularData, kind: int) -> list:
    label, p = invalid_projection(sc, kind)
    rep = recover_conditions(ConeContext(md), p)
    failed = rep.failed()
    return [flag("recover.invalid_rejected", "invalid projection fails an identified condition", bool(failed),
                 note=f"{label}: {failed[0] if failed else 'none'}")]


# nested algebras


def fin_coinc_attempt(seed: int) -> dict:
    """Try to build ``A`` properly inside ``B`` with a shared cyclic separating vector."""
    rng = make_rng(seed, 0xF1)
    sizes = [int(rng.choice([1, 2, 3])) for _ in range(rng.integers(1, 3))]
    if all(n == 1 for n in sizes):
        sizes[0] = 2
    B = Algebra(tuple((n, n) for n in sizes))
    xi0 = B.vector([psd_sqrt(random_density(n, rng)) for n in sizes])
    if seed % 2 == 0:
        # a maximal abelian subalgebra of B: rank-one spectral projections inside each block
        mats = []
        for kk, n in enumerate(sizes):
            _, v = np.linalg.eigh(rand_hermitian(n, rng))
            for i in range(n):
                x = B.zero()
                x[kk] = v[:, [i]] @ v[:, [i]].conj().T
                mats.append(B.embed(x))
        A = OperatorSubspace.span(mats, B.dim, is_algebra=True, is_selfadjoint=True)
    else:
        k = next(k for k, n in enumerate(sizes) if n > 1)
        mats = []
        for kk, (n, _) in enumerate(B.blocks):
            for i in range(n):
                for j in range(n):
                    if kk == k and i != j:
                        continue
                    x = B.zero()
                    x[kk][i, j] = 1.0
                    mats.append(B.embed(x))
        A = OperatorSubspace.span(mats, B.dim, is_algebra=True, is_selfadjoint=True)
    proper = A.dim < B.space.dim
    try:
        out = fin_coinc_check(A, B, xi0)
        out["violated"] = False
    except LemmaViolated as exc:
        out = {"precondition": True, "reason": str(exc), "violated": True}
    out["proper"] = proper
    return out


# suites


def fold(name: str, runs: list) -> list:
    """Merge per-scenario records with equal names: worst residual, all verdicts."""
    merged: dict = {}
    counts: dict = {}
    for records in runs:
        for c in records:
            prev = merged.get(c.name)
            counts.setdefault(c.name, [0, 0])
            counts[c.name][0] += 1
            counts[c.name][1] += 0 if c.verdict else 1
            if prev is None:
                merged[c.name] = c
            else:
                merged[c.name] = Check(c.name, c.anchor, max(prev.residual, c.residual), c.tolerance,
                                       prev.verdict and c.verdict)
    out = []
    for key, c in merged.items():
        total, failed = counts[key]
        out.append(Check(c.name, c.anchor, c.residual, c.tolerance, c.verdict, note=f"{total - failed}/{total} pass"))
    return out


MODULAR_PROFILES = ("abelian", "single-factor", "multi-block")
CONE_PROFILES = ("single-factor", "multi-block")


def suite_modular(count: int = 200, seed: int = 0) -> Report:
    runs = []
    for i in range(count):
        sc = generate(MODULAR_PROFILES[i % 3], seed + i)
        runs.append(modular_checks(sc, sc.modular(), make_rng(seed + i, 0x30)))
    return Report("suite:modular", fold("modular", runs), data={"scenarios": count, "seed": seed})


def suite_cone(count: int = 200, seed: int = 0) -> Report:
    """``count`` cone elements, eight per scenario."""
    runs = []
    per = 8
    for i in range((count + per - 1) // per):
        sc = generate(CONE_PROFILES[i % 2], seed + i)
        n = min(per, count - i * per)
        runs.append(cone_checks(sc.modular(), make_rng(seed + i, 0x31), n))
    return Report("suite:cone", fold("cone", runs), data={"elements": count, "seed": seed})


def suite_jordan(count: int = 200, seed: int = 0) -> Report:
    runs = []
    per = 8
    for i in range((count + per - 1) // per):
        sc = generate(CONE_PROFILES[i % 2], seed + i)
        n = min(per, count - i * per)
        runs.append(jordan_checks(sc.modular(), make_rng(seed + i, 0x32), n))
    return Report("suite:jordan", fold("jordan", runs), data={"elements": count, "seed": seed})


def suite_embedding(count: int = 100, seed: int = 0) -> Report:
    runs = []
    cases = {1: 0, 2: 0}
    false_case2 = 0
    for i in range(count):
        sc = generate("embedding-suite", seed + i)
        records = embedding_checks(sc, sc.modular(), seed + i)
        runs.append(records)
        case = next(int(c.note.split()[-1]) for c in records if c.name == "truth.case")
        cases[case] += 1
        false_case2 += int(case == 2 and sc.truth("case") != 2)
    checks = fold("embed", runs)
    checks.append(check("truth.false_case2", "no Case-2 verdict on a Case-1 scenario", false_case2, 0))
    return Report("suite:embedding", checks, data={"scenarios": count, "seed": seed, "case1": cases[1], "case2": cases[2]})


def suite_central(count: int = 100, seed: int = 0) -> Report:
    runs = []
    for i in range(count):
        sc = generate(("multi-block", "recovery-suite", "abelian", "single-factor")[i % 4], seed + i)
        runs.append(central_checks(sc, sc.modular(), make_rng(seed + i, 0x33)))
    return Report("suite:central", fold("central", runs), data={"central": count, "noncentral": count, "seed": seed})


def suite_recovery(count: int = 100, seed: int = 0) -> Report:
    runs = []
    for i in range(count):
        sc = generate("recovery-suite", seed + i)
        md = sc.modular()
        runs.append(recovery_checks(sc, md) + invalid_recovery_checks(sc, md, i % 3))
    return Report("suite:recovery", fold("recovery", runs), data={"valid": count, "invalid": count, "seed": seed})


def suite_fin_coinc(count: int = 100, seed: int = 0) -> Report:
    results = [fin_coinc_attempt(seed + i) for i in range(count)]
    violated = sum(r["violated"] for r in results)
    proper = sum(r["proper"] for r in results)
    failed_pre = sum(not r["precondition"] for r in results if r["proper"])
    reasons: dict = {}
    for r in results:
        reasons[r["reason"]] = reasons.get(r["reason"], 0) + 1
    checks = [
        check("fin_coinc.counterexamples", "no proper inclusion with a common cyclic separating vector", violated, 0),
        flag("fin_coinc.all_proper_fail_preconditions", "every proper attempt fails a precondition", failed_pre == proper),
        flag("fin_coinc.attempts_proper", "every attempt is a proper inclusion", proper == count),
    ]
    return Report("suite:fin_coinc", checks, data={"attempts": count, "seed": seed, "reasons": reasons})


SUITES = {
    "modular": (suite_modular, 200),
    "cone": (suite_cone, 200),
    "jordan": (suite_jordan, 200),
    "embedding": (suite_embedding, 100),
    "central": (suite_central, 100),
    "recovery": (suite_recovery, 100),
    "fin_coinc": (suite_fin_coinc, 100),
}


def run_suite(name: str, count: int | None = None, seed: int = 0) -> Report:
    fn, default = SUITES[name]
    return fn(default if count is None else count, seed)


def verify_all(sc: Scenario, samples: int = 6) -> Report:
    """Every check that applies to one scenario."""
    md = sc.modular()
    seed = sc.seed
    checks = modular_checks(sc, md, make_rng(seed, 0x40))
    checks += cone_checks(md, make_rng(seed, 0x41), samples)
    checks += jordan_checks(md, make_rng(seed, 0x42), samples)
    if sc.N is not None:
        checks += embedding_checks(sc, md, seed)
    if sc.algebra.dim > 1:
        checks += central_checks(sc, md, make_rng(seed, 0x43))
    if "p" in sc.operators and sc.truth("e") is not None:
        checks += recovery_checks(sc, md)
        checks += invalid_recovery_checks(sc, md, seed % 3)
    return Report("verify-all", checks, data={"profile": sc.profile, "seed": sc.seed})
