"""The cone ``P = closure(M_+ xi0)``: order, distinguished vectors, and Jordan structure.

Every vector of ``H`` is ``x xi0`` for a unique ``x`` in ``M`` (the *rep* of the
vector), so cone questions reduce to spectral questions about reps.  The square on
``K + iK`` is computed order-theoretically: real parts are split with ``S`` and each
real part is written as a combination of operationally orthogonal projective vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .algebra import as_space, orthonormal_range
from .errors import Inconclusive, NotHermitianRep, NotInCone, NotProjective, NotRepresentable
from .linalg import DEFAULT_TOL, DEGENERACY_GAP, TolerancePolicy, make_rng, null_space, spectral_projections
from .modular import ModularData


@dataclass(frozen=True, eq=False)
class ConeContext:
    md: ModularData

    @property
    def tol(self) -> TolerancePolicy:
        return self.md.tol

    @property
    def xi0(self) -> np.ndarray:
        return self.md.xi0


@dataclass(frozen=True, eq=False)
class ConeElement:
    vec: np.ndarray
    rep: np.ndarray
    psd_floor: float


@dataclass(frozen=True)
class Classification:
    contractive: bool
    projective: bool
    orthogonality_residual: float  # |<zeta, xi0 - zeta>|
    idempotence_residual: float  # ||rep^2 - rep||
    agree: bool  # order-theoretic and operator verdicts coincide


def _opnorm(x) -> float:
    return float(np.linalg.norm(x, 2)) if x.size else 0.0


def _scale(x) -> float:
    return max(1.0, _opnorm(x))


def vector_to_operator(ctx: ConeContext, zeta) -> np.ndarray:
    return ctx.md.operator(zeta)


def hermitian_residual(x) -> float:
    return float(np.linalg.norm(x - x.conj().T, 2))


def psd_margin(ctx: ConeContext, x):
    """``(hermitian?, lambda_min, floor)`` for a rep ``x``."""
    sc = _scale(x)
    herm = hermitian_residual(x) <= ctx.tol.eq_rel * sc
    lam = float(np.linalg.eigvalsh((x + x.conj().T) / 2)[0])
    return herm, lam, -ctx.tol.psd_rel * sc


def cone_status(ctx: ConeContext, zeta) -> str:
    """``"member"``, ``"boundary"`` (inside the tolerance band) or ``"outside"``."""
    herm, lam, floor = psd_margin(ctx, vector_to_operator(ctx, zeta))
    if not herm or lam < floor:
        return "outside"
    return "boundary" if lam < -floor else "member"


def cone_member(ctx: ConeContext, zeta) -> bool:
    return cone_status(ctx, zeta) != "outside"


def leq(ctx: ConeContext, zeta, eta) -> bool:
    return cone_member(ctx, np.asarray(eta) - np.asarray(zeta))


def _require_cone(ctx, zeta):
    x = vector_to_operator(ctx, zeta)
    herm, lam, floor = psd_margin(ctx, x)
    if not herm or lam < floor:
        raise NotInCone("vector is not in the cone")
    return (x + x.conj().T) / 2


def _require_hermitian(ctx, zeta):
    x = vector_to_operator(ctx, zeta)
    if hermitian_residual(x) > ctx.tol.eq_rel * _scale(x):
        raise NotHermitianRep("vector is not in K (rep is not self-adjoint)")
    return (x + x.conj().T) / 2


def classify(ctx: ConeContext, zeta) -> Classification:
    """Contractive means ``zeta <= xi0``; projective adds ``zeta _|_ (xi0 - zeta)``."""
    x = _require_cone(ctx, zeta)
    xi0 = ctx.xi0
    contractive = leq(ctx, zeta, xi0)
    orth = abs(np.vdot(xi0 - zeta, zeta))
    idem = float(np.linalg.norm(x @ x - x, 2))
    projective = bool(contractive and orth <= ctx.tol.eq_rel * float(np.vdot(xi0, xi0).real))
    operator_projective = bool(contractive and idem <= ctx.tol.eq_rel * _scale(x))
    return Classification(contractive, projective, float(orth), idem, projective == operator_projective)


def _require_projective(ctx, zeta):
    try:
        c = classify(ctx, zeta)
    except NotInCone as exc:
        raise NotProjective(str(exc)) from exc
    if not c.projective:
        raise NotProjective("vector is not projective")


def op_orthogonal(ctx: ConeContext, eta, zeta) -> bool:
    """Projective ``eta, zeta`` with ``zeta <= xi0 - eta``; cross-checked on reps."""
    _require_projective(ctx, eta)
    _require_projective(ctx, zeta)
    order = leq(ctx, zeta, ctx.xi0 - np.asarray(eta))
    e, f = vector_to_operator(ctx, eta), vector_to_operator(ctx, zeta)
    operator = bool(np.linalg.norm(e @ f, 2) <= ctx.tol.eq_rel * max(_scale(e), _scale(f)))
    if order != operator:
        raise NotProjective("order and operator orthogonality disagree; tolerance pathology")
    return order


def support_vector(ctx: ConeContext, zeta) -> ConeElement:
    """Least projective vector dominating a positive multiple of ``zeta``."""
    x = _require_cone(ctx, zeta)
    w, v = np.linalg.eigh(x)
    keep = w > ctx.tol.psd_rel * _scale(x)
    e = v[:, keep] @ v[:, keep].conj().T
    return ConeElement(e @ ctx.xi0, e, float(w[0]) if w.size else 0.0)


def jordan_decompose(ctx: ConeContext, zeta):
    """``zeta = zeta_plus - zeta_minus`` with operationally orthogonal supports."""
    x = _require_hermitian(ctx, zeta)
    w, v = np.linalg.eigh(x)
    cut = ctx.tol.psd_rel * _scale(x)
    pos = w > cut
    plus = (v[:, pos] * w[pos]) @ v[:, pos].conj().T
    zp = plus @ ctx.xi0
    return zp, zp - np.asarray(zeta, dtype=complex)


def sharp_norm(ctx: ConeContext, zeta) -> float:
    x = _require_hermitian(ctx, zeta)
    return float(np.max(np.abs(np.linalg.eigvalsh(x)))) if x.size else 0.0


def _order_norm_positive(ctx, zeta, iterations):
    if not np.any(np.abs(zeta) > 0):
        return 0.0
    hi = 1.0
    while not leq(ctx, zeta, hi * ctx.xi0):
        hi *= 2.0
    while hi > 1e-300 and leq(ctx, zeta, 0.5 * hi * ctx.xi0):
        hi *= 0.5
    lo = 0.5 * hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if leq(ctx, zeta, mid * ctx.xi0):
            hi = mid
        else:
            lo = mid
    return hi


def sharp_norm_order(ctx: ConeContext, zeta, iterations: int = 20) -> float:
    """``inf{c > 0 : zeta <= c xi0}`` by bisection, extended to K via the Jordan split."""
    zp, zm = jordan_decompose(ctx, zeta)
    return max(_order_norm_positive(ctx, zp, iterations), _order_norm_positive(ctx, zm, iterations))


def real_imag_parts(ctx: ConeContext, zeta):
    """Split ``zeta = zeta1 + i zeta2`` with both parts in K, using only ``S``."""
    zeta = np.asarray(zeta, dtype=complex)
    s = ctx.md.S(zeta)
    return (zeta + s) / 2, (zeta - s) / 2j


def _square_real(ctx, zeta):
    x = vector_to_operator(ctx, zeta)
    if hermitian_residual(x) > ctx.tol.eq_rel * _scale(x):
        raise NotRepresentable("real square needs a vector of K")
    out = np.zeros_like(ctx.xi0)
    for c, P in spectral_projections((x + x.conj().T) / 2, ctx.tol, DEGENERACY_GAP):
        out = out + c * c * (P @ ctx.xi0)
    return out


def square(ctx: ConeContext, zeta) -> np.ndarray:
    """Square on ``K + iK`` from projective decompositions and polarization."""
    z1, z2 = real_imag_parts(ctx, zeta)
    a = _square_real(ctx, z1)
    b = _square_real(ctx, z2)
    cross = _square_real(ctx, z1 + z2) - a - b
    return a + 1j * cross - b


def jordan_product(ctx: ConeContext, eta, zeta) -> np.ndarray:
    eta, zeta = np.asarray(eta, dtype=complex), np.asarray(zeta, dtype=complex)
    return square(ctx, eta + zeta) - square(ctx, eta) - square(ctx, zeta)


def triple_product(ctx: ConeContext, zeta, eta) -> np.ndarray:
    """``zeta eta zeta`` written with Jordan products only."""
    jp = jordan_product(ctx, zeta, eta)
    return 0.5 * jordan_product(ctx, jp, zeta) - 0.5 * jordan_product(ctx, square(ctx, zeta), eta)


def corner(ctx: ConeContext, zeta, eta, check: bool = True) -> np.ndarray:
    if check:
        _require_projective(ctx, zeta)
    return triple_product(ctx, zeta, eta)


def offdiag(ctx: ConeContext, zeta, eta, check: bool = True) -> np.ndarray:
    if check:
        _require_projective(ctx, zeta)
    eta = np.asarray(eta, dtype=complex)
    perp = ctx.xi0 - np.asarray(zeta)
    return eta - triple_product(ctx, zeta, eta) - triple_product(ctx, perp, eta)


# operator-side counterparts, used as independent oracles

def square_oracle(ctx: ConeContext, zeta) -> np.ndarray:
    z = vector_to_operator(ctx, zeta)
    return z @ z @ ctx.xi0


def jordan_product_oracle(ctx: ConeContext, eta, zeta) -> np.ndarray:
    y, z = vector_to_operator(ctx, eta), vector_to_operator(ctx, zeta)
    return (y @ z + z @ y) @ ctx.xi0


def triple_product_oracle(ctx: ConeContext, zeta, eta) -> np.ndarray:
    z, y = vector_to_operator(ctx, zeta), vector_to_operator(ctx, eta)
    return z @ y @ z @ ctx.xi0


def offdiag_oracle(ctx: ConeContext, zeta, eta) -> np.ndarray:
    e, y = vector_to_operator(ctx, zeta), vector_to_operator(ctx, eta)
    ep = np.eye(e.shape[0]) - e
    return (e @ y @ ep + ep @ y @ e) @ ctx.xi0


def cone_member_general(A, xi, zeta, tol: TolerancePolicy = DEFAULT_TOL, seed: int = 0, max_iter: int = 300):
    """Decide ``zeta in A_+ xi`` for a self-adjoint algebra ``A`` on H.

    The affine slice ``{a = a* in A : a xi = zeta}`` is found by least squares; on it
    the concave function ``lambda_min(a)`` (taken on the range of the unit of ``A``) is
    maximised by Kelley's cutting-plane method from several starting points.

    Returns ``(verdict, certificate)``.  The certificate is the maximising element, the
    infeasibility residual, or an upper bound with the cutting vectors that separate.
    """
    S = as_space(A)
    xi = np.asarray(xi, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    H = S.hermitian_basis
    r = H.shape[0]
    zscale = max(float(np.linalg.norm(zeta)), float(np.linalg.norm(xi)), np.finfo(float).tiny)
    if r == 0:
        res = float(np.linalg.norm(zeta))
        return res <= tol.eq_rel * zscale, {"kind": "infeasible" if res > tol.eq_rel * zscale else "element", "residual": res}
    cols = np.einsum("kij,j->ik", H, xi)
    real_sys = np.concatenate([cols.real, cols.imag])
    rhs = np.concatenate([zeta.real, zeta.imag])
    t0, *_ = np.linalg.lstsq(real_sys, rhs, rcond=None)
    residual = float(np.linalg.norm(real_sys @ t0 - rhs))
    if residual > tol.eq_rel * zscale:
        return False, {"kind": "infeasible", "residual": residual}

    W = orthonormal_range(S.unit, 1e-10)
    Hc = np.einsum("ia,kij,jb->kab", W.conj(), H, W)
    base = np.einsum("k,kab->ab", t0, Hc)
    kern = null_space(real_sys, 1e-10)
    dirs = np.einsum("ks,kab->sab", kern, Hc)
    s_dim = dirs.shape[0]
    floor = -tol.psd_rel * _scale(base)

    def at(u):
        return base + np.einsum("s,sab->ab", u, dirs)

    def lowest(u):
        w, v = np.linalg.eigh(at(u))
        return w, v

    w0, v0 = lowest(np.zeros(s_dim))
    if s_dim == 0:
        return bool(w0[0] >= floor), {"kind": "element", "element": W @ base @ W.conj().T, "lambda_min": float(w0[0])}

    # cuts t <= v^H a(u) v, i.e.  t - sum_l u_l (v^H D_l v) <= v^H base v
    rows, rhs_cuts, cut_vecs = [], [], []

    def add_cuts(v, count=3):
        for j in range(min(count, v.shape[1])):
            vj = v[:, j]
            grad = np.einsum("a,sab,b->s", vj.conj(), dirs, vj).real
            rows.append(np.concatenate([-grad, [1.0]]))
            rhs_cuts.append(float(np.vdot(vj, base @ vj).real))
            cut_vecs.append(vj)

    radius = 1e3 * (1.0 + float(np.linalg.norm(base)))
    rng = make_rng(seed, 0x5C)
    best_lam, best_u = float(w0[0]), np.zeros(s_dim)
    add_cuts(v0)
    for _ in range(4):
        u = rng.normal(s_dim) * (1.0 + float(np.linalg.norm(base)))
        w, v = lowest(u)
        add_cuts(v)
        if w[0] > best_lam:
            best_lam, best_u = float(w[0]), u

    c = np.zeros(s_dim + 1)
    c[-1] = -1.0
    bounds = [(-radius, radius)] * s_dim + [(None, None)]
    upper = np.inf
    marginals = None
    for _ in range(max_iter):
        if best_lam >= floor:
            return True, {"kind": "element", "element": W @ at(best_u) @ W.conj().T, "lambda_min": best_lam}
        res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs_cuts), bounds=bounds, method="highs")
        if res.status != 0:
            break
        u, upper = res.x[:-1], float(res.x[-1])
        marginals = res.ineqlin.marginals
        if upper < floor:
            weights = -np.asarray(marginals)
            return False, {
                "kind": "separating",
                "upper_bound": upper,
                "weights": weights,
                "vectors": [W @ v for v in cut_vecs],
            }
        w, v = lowest(u)
        if w[0] > best_lam:
            best_lam, best_u = float(w[0]), u
        if upper - best_lam <= 1e-3 * tol.psd_rel * _scale(base):
            break
        add_cuts(v)
    if best_lam >= floor:
        return True, {"kind": "element", "element": W @ at(best_u) @ W.conj().T, "lambda_min": best_lam}
    if best_lam < 10 * floor and upper < 10 * floor:
        return False, {"kind": "separating", "upper_bound": upper, "weights": None, "vectors": []}
    raise Inconclusive("cutting-plane iteration stalled near the cone boundary", lower=best_lam, upper=upper)
