"""Detecting central projections and recovering projections of ``M`` from cone data.

For a projection ``p`` on ``H`` the map ``T(x) = rep(p x xi0)`` lands in ``M``; ``p``
and ``1 - p`` preserve the cone exactly when ``p`` is central.  More generally a set of
order and Jordan conditions characterises projections of the form
``p = q e + J (1 - q) e J`` with ``q`` central and ``(1 - q) e`` fixed by the modular flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .algebra import Algebra, as_space, is_member, is_projection, minimal_central_projections
from .cone import ConeContext, classify, corner, leq, offdiag, square, vector_to_operator
from .errors import LemmaViolated, NotCentral, NotInCone, PreconditionFailed, ReconstructionFailed
from .linalg import make_rng
from .modular import fixed_point_algebra
from .report import check


def _central_parts(ctx: ConeContext) -> list:
    A = ctx.md.algebra
    if isinstance(A, Algebra):
        return A.central_projections()
    return minimal_central_projections(A, ctx.tol)


def _basis(ctx: ConeContext):
    return as_space(ctx.md.algebra).basis


def transfer(ctx: ConeContext, p, x) -> np.ndarray:
    """``T(x) = rep(p x xi0)``."""
    return vector_to_operator(ctx, p @ x @ ctx.xi0)


def _violation(x) -> float:
    sc = max(1.0, float(np.linalg.norm(x, 2)))
    herm = float(np.linalg.norm(x - x.conj().T, 2))
    lam = float(np.linalg.eigvalsh((x + x.conj().T) / 2)[0])
    return (herm + max(0.0, -lam)) / sc


def _block_rank_ones(A: Algebra, v, k):
    x = A.zero()
    x[k] = np.outer(v, v.conj())
    return A.embed(x)


def _probe_vectors(n, rng, n_samples):
    eye = np.eye(n, dtype=complex)
    vs = [eye[i] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            vs.append((eye[i] + eye[j]) / np.sqrt(2))
            vs.append((eye[i] + 1j * eye[j]) / np.sqrt(2))
    for _ in range(n_samples):
        v = rng.complex_normal(n)
        vs.append(v / np.linalg.norm(v))
    return vs


def preserves_cone(ctx: ConeContext, p, n_samples: int = 8, seed: int = 0, starts: int = 3):
    """Sampled test of ``p P in P`` on extreme rays, then a local witness search.

    Returns ``(preserved_up_to_sampling, witness)``; the witness is a dict with the
    positive element ``x`` (an embedded rank-one) and its violation size.
    """
    A = ctx.md.algebra
    if not isinstance(A, Algebra):
        raise TypeError("preserves_cone needs a block algebra")
    p = np.asarray(p, dtype=complex)
    rng = make_rng(seed, 0x9C)
    thr = ctx.tol.psd_rel + ctx.tol.eq_rel
    best = (0.0, None)
    for k, (n, _) in enumerate(A.blocks):
        for v in _probe_vectors(n, rng, n_samples):
            x = _block_rank_ones(A, v, k)
            val = _violation(transfer(ctx, p, x))
            if val > best[0]:
                best = (val, x)
    if best[0] <= thr:
        for k, (n, _) in enumerate(A.blocks):
            if n == 1:
                continue

            def neg(r, k=k, n=n):
                v = r[:n] + 1j * r[n:]
                nv = np.linalg.norm(v)
                if nv == 0:
                    return 0.0
                return -_violation(transfer(ctx, p, _block_rank_ones(A, v / nv, k)))

            for _ in range(starts):
                res = minimize(neg, rng.normal(2 * n), method="Nelder-Mead",
                               options={"maxiter": 200 * n, "xatol": 1e-8, "fatol": 1e-12})
                if -res.fun > best[0]:
                    v = res.x[:n] + 1j * res.x[n:]
                    best = (-res.fun, _block_rank_ones(A, v / np.linalg.norm(v), k))
    if best[0] > thr:
        return False, {"element": best[1], "violation": best[0]}
    return True, None


def idempotence_residual(ctx: ConeContext, p) -> float:
    """``max ||T(T(x)) - T(x)||`` over the basis of ``M``."""
    worst = 0.0
    for b in _basis(ctx):
        t = transfer(ctx, p, b)
        worst = max(worst, float(np.linalg.norm(transfer(ctx, p, t) - t)))
    return worst


def central_detect(ctx: ConeContext, p, seed: int = 0) -> np.ndarray:
    """Return the central ``e`` with ``p = e`` on ``M xi0``; raise NotCentral otherwise.

    Acceptance rests only on the exact identity ``p x xi0 = e x xi0`` over a basis of
    ``M``; sampling is used solely to produce a witness for the rejection.
    """
    p = np.asarray(p, dtype=complex)
    xi0 = ctx.xi0
    d = xi0.shape[0]
    if not is_projection(p, ctx.tol):
        raise NotCentral("operator is not a projection")
    bound = ctx.tol.eq_rel
    e = np.zeros((d, d), dtype=complex)
    for z in _central_parts(ctx):
        if np.linalg.norm(transfer(ctx, p, z)) > bound:
            e = e + z
    worst = max(float(np.linalg.norm(p @ b @ xi0 - e @ b @ xi0)) for b in _basis(ctx))
    scale = max(1.0, float(np.linalg.norm(xi0)))
    if worst <= bound * scale:
        return e
    ok, witness = preserves_cone(ctx, p, seed=seed)
    if ok:
        ok, witness = preserves_cone(ctx, np.eye(d) - p, seed=seed)
    raise NotCentral(f"p x xi0 differs from e x xi0 on a basis element (residual {worst:.3e})", witness=witness)


def intertwiner(ctx: ConeContext, e) -> np.ndarray:
    """The unique linear map ``P`` with ``P x xi0 = x e xi0`` for every ``x`` in ``M``."""
    md = ctx.md
    C = np.einsum("kij,j->ik", _basis(ctx), np.asarray(e) @ ctx.xi0)
    return C @ md.orbit_inv


def fixed_lemma_check(ctx: ConeContext, e, p) -> dict:
    """Given ``p x xi0 = x e xi0`` on a basis, assert ``e`` is modular-fixed and ``p = J e J``."""
    md = ctx.md
    e = np.asarray(e, dtype=complex)
    p = np.asarray(p, dtype=complex)
    pre = max(float(np.linalg.norm(p @ b @ ctx.xi0 - b @ e @ ctx.xi0)) for b in _basis(ctx))
    if pre > ctx.tol.eq_rel * max(1.0, float(np.linalg.norm(ctx.xi0))):
        raise PreconditionFailed(f"p x xi0 != x e xi0 (residual {pre:.3e})")
    fixed = float(np.linalg.norm(e @ md.Delta - md.Delta @ e))
    conj = float(np.linalg.norm(p - md.conjugate(e), 2))
    bound = ctx.tol.eq_rel * max(1.0, float(np.linalg.norm(md.Delta, 2)))
    if fixed > bound or conj > ctx.tol.eq_rel:
        raise LemmaViolated(f"e not fixed ({fixed:.3e}) or p != JeJ ({conj:.3e})")
    return {"precondition": pre, "fixed_residual": fixed, "conjugation_residual": conj}


@dataclass(eq=False)
class ConditionReport:
    checks: list = field(default_factory=list)
    e: np.ndarray | None = None
    q: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return all(c.verdict for c in self.checks)

    def failed(self) -> list:
        return [c.name for c in self.checks if not c.verdict]


ANCHORS = {
    "p_projection": "p is an orthogonal projection",
    "pxi0_in_K": "p xi0 has a self-adjoint representative",
    "pxi0_in_cone": "p xi0 lies in the cone",
    "cond1": "p xi0 <= xi0",
    "cond2": "zeta <= p xi0 implies p zeta = zeta",
    "cond3": "zeta <= p-perp xi0 implies p-perp zeta = zeta",
    "cond4_range": "p maps K + iK into itself",
    "cond4a": "corner of p xi0 kills p od(xi)",
    "cond4b": "corner of p-perp xi0 kills p od(xi)",
    "cond4c": "(p od(xi))^2 = 0",
    "cond4d": "(p-perp od(xi))^2 = 0",
    "cond4e": "S p od(xi) = p-perp S od(xi)",
}


def _rec(name, residual, tolerance, verdict=None, note=""):
    return check(f"recover.{name}", ANCHORS[name], residual, tolerance, verdict, note)


def _support(x, tol):
    w, v = np.linalg.eigh((x + x.conj().T) / 2)
    keep = w > tol.psd_rel * max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    return v[:, keep] @ v[:, keep].conj().T


def recover_conditions(ctx: ConeContext, p) -> ConditionReport:
    """Evaluate every recovery condition; the report records all residuals."""
    tol = ctx.tol
    xi0 = ctx.xi0
    d = xi0.shape[0]
    p = np.asarray(p, dtype=complex)
    pp = np.eye(d) - p
    vscale = max(1.0, float(np.linalg.norm(xi0)))
    rep = ctx.md.operator
    out = ConditionReport()
    add = out.checks.append

    proj_res = max(float(np.linalg.norm(p - p.conj().T, 2)), float(np.linalg.norm(p @ p - p, 2)))
    add(_rec("p_projection", proj_res, tol.eq_rel))
    a = rep(p @ xi0)
    ascale = max(1.0, float(np.linalg.norm(a, 2)))
    herm = float(np.linalg.norm(a - a.conj().T, 2))
    in_k = herm <= tol.eq_rel * ascale
    add(_rec("pxi0_in_K", herm, tol.eq_rel * ascale))
    lam = float(np.linalg.eigvalsh((a + a.conj().T) / 2)[0])
    floor = tol.psd_rel * ascale
    add(_rec("pxi0_in_cone", max(0.0, -lam), floor, verdict=in_k and lam >= -floor))
    add(_rec("cond1", 0.0 if leq(ctx, p @ xi0, xi0) else 1.0, 0.0))

    basis = _basis(ctx)
    for name, proj, face in (("cond2", p, a), ("cond3", pp, np.eye(d) - a)):
        s = _support(face, tol)
        worst = max(float(np.linalg.norm(proj @ (s @ b @ s) @ xi0 - (s @ b @ s) @ xi0)) for b in basis)
        add(_rec(name, worst, tol.eq_rel * vscale))

    orbit = ctx.md.orbit  # columns x_i xi0 span K + iK
    rng_res = 0.0
    for col in orbit.T:
        y = rep(p @ col)
        rng_res = max(rng_res, float(np.linalg.norm(y @ xi0 - p @ col)))
    add(_rec("cond4_range", rng_res, tol.eq_rel * vscale))

    zeta = p @ xi0
    try:
        projective = classify(ctx, zeta).projective
    except NotInCone:
        projective = False
    if not projective:
        for name in ("cond4a", "cond4b", "cond4c", "cond4d", "cond4e"):
            add(_rec(name, 1.0, 0.0, verdict=False, note="p xi0 is not projective; od undefined"))
        return out

    zeta_perp = xi0 - zeta
    ods = [offdiag(ctx, zeta, col, check=False) for col in orbit.T]
    bound = tol.eq_rel * vscale
    ra = rb = re_ = 0.0
    for od in ods:
        pod = p @ od
        ra = max(ra, float(np.linalg.norm(corner(ctx, zeta, pod, check=False))))
        rb = max(rb, float(np.linalg.norm(corner(ctx, zeta_perp, pod, check=False))))
        re_ = max(re_, float(np.linalg.norm(ctx.md.S(pod) - pp @ ctx.md.S(od))))
    rc = rd = 0.0
    for i in range(len(ods)):
        for j in range(i, len(ods)):
            v = ods[i] if i == j else ods[i] + ods[j]
            rc = max(rc, float(np.linalg.norm(square(ctx, p @ v))))
            rd = max(rd, float(np.linalg.norm(square(ctx, pp @ v))))
    add(_rec("cond4a", ra, bound))
    add(_rec("cond4b", rb, bound))
    add(_rec("cond4c", rc, bound))
    add(_rec("cond4d", rd, bound))
    add(_rec("cond4e", re_, bound))
    return out


def recover_projection(ctx: ConeContext, p, report: ConditionReport | None = None):
    """Reconstruct ``(e, q)`` with ``p = q e + J (1 - q) e J``."""
    md = ctx.md
    tol = ctx.tol
    xi0 = ctx.xi0
    d = xi0.shape[0]
    p = np.asarray(p, dtype=complex)
    if report is not None and not report.passed:
        raise ReconstructionFailed(f"conditions failed: {', '.join(report.failed())}")
    e = md.operator(p @ xi0)
    e = (e + e.conj().T) / 2
    if np.linalg.norm(e @ e - e, 2) > tol.eq_rel:
        raise ReconstructionFailed("rep(p xi0) is not a projection")
    jej = md.conjugate(e)
    basis = _basis(ctx)
    bound = tol.eq_rel * max(1.0, float(np.linalg.norm(xi0)))
    q = np.zeros((d, d), dtype=complex)
    for z in _central_parts(ctx):
        left = max(float(np.linalg.norm(p @ z @ b @ xi0 - e @ z @ b @ xi0)) for b in basis)
        right = max(float(np.linalg.norm(p @ z @ b @ xi0 - z @ b @ jej @ xi0)) for b in basis)
        if left <= bound:
            q = q + z
        elif right > bound:
            raise ReconstructionFailed(f"central summand fits neither side ({left:.2e}, {right:.2e})")
    qp = np.eye(d) - q
    assembled = q @ e + md.conjugate(qp @ e)
    residual = float(np.linalg.norm(p - assembled, 2))
    fixed = float(np.linalg.norm((qp @ e) @ md.Delta - md.Delta @ (qp @ e), 2))
    if residual > 10 * tol.eq_rel or fixed > 10 * tol.eq_rel * max(1.0, float(np.linalg.norm(md.Delta, 2))):
        raise ReconstructionFailed(f"assembly residual {residual:.3e}, modular residual {fixed:.3e}")
    if report is not None:
        report.e, report.q = e, q
    return e, q, residual


def corollary_deduce(ctx: ConeContext, p, e, q) -> dict:
    """Deduce ``p in M`` when the modular flow has only scalar fixed points."""
    md = ctx.md
    d = ctx.xi0.shape[0]
    fixed_dim = fixed_point_algebra(md).dim
    member, residual = is_member(np.asarray(p, dtype=complex), md.space, ctx.tol)
    if fixed_dim == 1:
        return {"hypothesis": True, "p_in_M": bool(member), "residual": residual, "fixed_dim": 1}
    if np.linalg.norm(q - np.eye(d)) <= ctx.tol.eq_rel:
        return {"hypothesis": False, "p_in_M": bool(member), "residual": residual, "fixed_dim": fixed_dim,
                "note": "q = I gives p = e directly"}
    return {"hypothesis": False, "p_in_M": None, "residual": residual, "fixed_dim": fixed_dim,
            "note": "fixed-point algebra is not trivial"}


__all__ = [
    "ConditionReport",
    "central_detect",
    "corollary_deduce",
    "fixed_lemma_check",
    "idempotence_residual",
    "intertwiner",
    "preserves_cone",
    "recover_conditions",
    "recover_projection",
    "transfer",
]
