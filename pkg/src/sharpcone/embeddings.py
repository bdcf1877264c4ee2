"""The positive map induced by a cone inclusion ``N_+ xi0 in P`` and its splitting.

``alpha(a)`` is the unique element of ``M`` with ``alpha(a) xi0 = a xi0``.  When the
inclusion holds, ``alpha`` is a Jordan map; a central projection ``g`` of the von
Neumann algebra generated by its range separates a homomorphic part ``beta = alpha g``
from an antihomomorphic part ``gamma = alpha (1 - g)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    OperatorSubspace,
    as_space,
    check_cyclic,
    check_separating,
    compress_space,
    double_commutant,
    is_member,
    minimal_central_projections,
    reduce,
)
from .cone import cone_member_general
from .errors import HypothesisFailed, LemmaViolated, PreconditionFailed, UnclassifiableBlock
from .linalg import DEFAULT_TOL, TolerancePolicy, make_rng, spectral_projections
from .modular import ModularData, is_tracial, standard_form
from .report import check, flag


@dataclass(eq=False)
class EmbeddingAnalysis:
    basis: np.ndarray  # HS-orthonormal basis of N
    images: np.ndarray  # alpha of each basis element
    tol: TolerancePolicy = DEFAULT_TOL
    N: OperatorSubspace | None = None
    md: ModularData | None = None
    g: np.ndarray | None = None
    e: np.ndarray | None = None
    f: np.ndarray | None = None
    summands: list = field(default_factory=list)  # (projection, "homo" | "anti")
    verdicts: dict = field(default_factory=dict)

    @classmethod
    def from_map(cls, mats, fn, tol: TolerancePolicy = DEFAULT_TOL) -> "EmbeddingAnalysis":
        """Analysis of an arbitrary linear map given on a spanning set of a *-algebra."""
        N = OperatorSubspace.span(mats, is_algebra=True, is_selfadjoint=True)
        images = np.stack([np.asarray(fn(b), dtype=complex) for b in N.basis])
        return cls(N.basis, images, tol, N=N)

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @property
    def target_dim(self) -> int:
        return self.images.shape[1]

    def coords(self, a) -> np.ndarray:
        return np.einsum("kij,ij->k", self.basis.conj(), np.asarray(a, dtype=complex))

    def alpha(self, a) -> np.ndarray:
        return np.einsum("k,kij->ij", self.coords(a), self.images)

    def beta(self, a) -> np.ndarray:
        return self.alpha(a) @ self.g

    def gamma(self, a) -> np.ndarray:
        return self.alpha(a) @ (np.eye(self.target_dim) - self.g)

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.linalg.norm(self.images, axis=(1, 2))))) ** 2

    def product_images(self) -> np.ndarray:
        """``alpha(x_i x_j)`` for all basis pairs, shape ``(k, k, d, d)``."""
        B = self.basis
        out = np.empty((self.k, self.k) + self.images.shape[1:], dtype=complex)
        for i in range(self.k):
            prods = B[i] @ B
            c = np.einsum("cil,bil->bc", B.conj(), prods)
            out[i] = np.einsum("bc,cij->bij", c, self.images)
        return out

    def image_products(self) -> np.ndarray:
        """``alpha(x_i) alpha(x_j)``, shape ``(k, k, d, d)``."""
        return np.einsum("aij,bjl->abil", self.images, self.images)


def compute_alpha(N, md: ModularData) -> EmbeddingAnalysis:
    N = as_space(N)
    images = np.stack([md.operator(b @ md.xi0) for b in N.basis])
    return EmbeddingAnalysis(N.basis, images, md.tol, N=N, md=md)


def _sample_projections(N: OperatorSubspace, n_samples, seed):
    """Projections of ``N``: spectral projections of random and basis self-adjoint elements."""
    herms = list(N.hermitian_basis)
    rng = make_rng(seed, 0xE1)
    herms += [N.random_element(rng, hermitian=True) for _ in range(n_samples)]
    loose = DEFAULT_TOL.with_overrides(eq_rel=1e-6, psd_rel=1e-9)
    for h in herms:
        for _, P in spectral_projections(h, loose):
            yield P


def verify_cone_inclusion(N, md: ModularData, n_samples: int = 20, seed: int = 0):
    """Sampled check that ``rep(P xi0)`` is positive for projections ``P`` of ``N``.

    Returns ``(holds_up_to_sampling, witness_projection_or_None)``.
    """
    N = as_space(N)
    tol = md.tol
    for P in _sample_projections(N, n_samples, seed):
        x = md.operator(P @ md.xi0)
        sc = max(1.0, float(np.linalg.norm(x, 2)))
        if np.linalg.norm(x - x.conj().T, 2) > tol.eq_rel * sc:
            return False, P
        if np.linalg.eigvalsh((x + x.conj().T) / 2)[0] < -tol.psd_rel * sc:
            return False, P
    return True, None


def check_jordan(an: EmbeddingAnalysis, n_samples: int = 5, seed: int = 0) -> dict:
    prod = an.product_images()
    sym = prod + prod.transpose(1, 0, 2, 3)
    ii = an.image_products()
    jordan = float(np.max(np.linalg.norm(sym - ii - ii.transpose(1, 0, 2, 3), axis=(2, 3))))
    proj = 0.0
    if an.N is not None:
        rng = make_rng(seed, 0xE2)
        loose = DEFAULT_TOL.with_overrides(eq_rel=1e-6)
        for _ in range(n_samples):
            h = an.N.random_element(rng, hermitian=True)
            for _, P in spectral_projections(h, loose):
                q = an.alpha(P)
                proj = max(proj, float(np.linalg.norm(q @ q - q)), float(np.linalg.norm(q - q.conj().T)))
    bound = an.tol.eq_rel * an.scale
    out = {"jordan_residual": jordan, "projection_residual": proj, "bound": bound, "ok": jordan <= bound and proj <= bound}
    an.verdicts.update(out)
    return out


def split_homo_antihomo(an: EmbeddingAnalysis, seed: int = 0) -> EmbeddingAnalysis:
    """Fill in ``g``, ``e``, ``f`` and the per-summand classification."""
    tol = an.tol
    d = an.target_dim
    bound = tol.eq_rel * an.scale
    prod = an.product_images()
    ii = an.image_products()
    d_mult = prod - ii
    d_anti = prod - ii.transpose(1, 0, 2, 3)
    A = double_commutant(list(an.images), tol, seed)
    g = np.zeros((d, d), dtype=complex)
    summands = []
    for z in minimal_central_projections(A, tol, seed):
        rm = float(np.max(np.linalg.norm(d_mult @ z, axis=(2, 3))))
        ra = float(np.max(np.linalg.norm(d_anti @ z, axis=(2, 3))))
        if rm <= bound:
            g = g + z
            summands.append((z, "homo", rm, ra))
        elif ra <= bound:
            summands.append((z, "anti", rm, ra))
        else:
            raise UnclassifiableBlock(
                f"summand of rank {int(round(np.trace(z).real))} is neither multiplicative ({rm:.2e}) "
                f"nor antimultiplicative ({ra:.2e})"
            )
    an.g = g
    an.summands = summands
    gp = np.eye(d) - g

    if an.N is not None:
        n = an.N.ambient_dim
        e = np.zeros((n, n), dtype=complex)
        f = np.zeros((n, n), dtype=complex)
        for c in minimal_central_projections(an.N, tol, seed):
            a = an.alpha(c)
            if np.linalg.norm(a @ g) > bound:
                e = e + c
            if np.linalg.norm(a @ gp) > bound:
                f = f + c
        an.e, an.f = e, f

    beta = an.images @ g
    gamma = an.images @ gp
    an.verdicts.update(
        beta_multiplicative=float(np.max(np.linalg.norm(d_mult @ g, axis=(2, 3)))),
        gamma_antimultiplicative=float(np.max(np.linalg.norm(d_anti @ gp, axis=(2, 3)))),
        ranges_orthogonal=float(np.max(np.linalg.norm(np.einsum("aij,bjl->abil", beta, gamma), axis=(2, 3)))),
    )
    return an


def defining_relation_residual(an: EmbeddingAnalysis) -> float:
    xi0 = an.md.xi0
    return float(max(np.linalg.norm(a @ xi0 - b @ xi0) for a, b in zip(an.images, an.basis)))


def splitting_checks(an: EmbeddingAnalysis) -> list:
    tol = an.tol
    bound = tol.eq_rel * an.scale
    out = [
        check("alpha.jordan", "alpha is a Jordan map", an.verdicts["jordan_residual"], bound),
        check("alpha.projections", "alpha maps projections to projections", an.verdicts["projection_residual"], bound),
        check("split.beta_multiplicative", "beta is a homomorphism", an.verdicts["beta_multiplicative"], bound),
        check("split.gamma_antimultiplicative", "gamma is an antihomomorphism", an.verdicts["gamma_antimultiplicative"], bound),
        check("split.ranges_orthogonal", "beta(x) gamma(y) = 0", an.verdicts["ranges_orthogonal"], bound),
    ]
    if an.md is not None:
        out.append(check("alpha.defining_relation", "alpha(a) xi0 = a xi0", defining_relation_residual(an),
                         tol.eq_rel * max(1.0, float(np.linalg.norm(an.md.xi0)))))
    if an.N is not None and an.e is not None:
        for name, p in (("e", an.e), ("f", an.f)):
            comm = max((np.linalg.norm(p @ b - b @ p) for b in an.N.basis), default=0.0)
            out.append(check(f"split.{name}_central", f"{name} is a central projection of N", comm, tol.eq_rel * max(1.0, float(np.linalg.norm(p)))))
    return out


@dataclass(eq=False)
class CaseReport:
    case: int
    checks: list
    m1: OperatorSubspace | None = None
    witness: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return all(c.verdict for c in self.checks)


def _positive_samples(S: OperatorSubspace, n, rng):
    for _ in range(n):
        h = S.random_element(rng, hermitian=True)
        yield h @ h


def _is_subalgebra(images) -> float:
    S = OperatorSubspace.span(list(images))
    worst = 0.0
    for a in S.basis:
        for b in S.basis:
            worst = max(worst, S.residual(a @ b))
    return worst


def theorem_gen_evaluate(an: EmbeddingAnalysis, n_samples: int = 6, seed: int = 0) -> CaseReport:
    """Decide which of the two alternatives holds and certify it."""
    tol, md = an.tol, an.md
    xi0 = md.xi0
    d = an.target_dim
    bound = tol.eq_rel * an.scale
    ef = an.e @ an.f
    rng = make_rng(seed, 0xE3)
    if np.linalg.norm(ef) <= bound:
        M1 = OperatorSubspace.span(list(an.images), d, is_algebra=True, is_selfadjoint=True)
        checks = [
            check("gen.case1.subalgebra", "alpha(N) is a subalgebra", _is_subalgebra(an.images), bound),
            check("gen.case1.inside_M", "alpha(N) lies in M",
                  max(is_member(b, md.space, tol)[1] for b in M1.basis), tol.eq_rel * np.sqrt(d)),
        ]
        fwd = all(cone_member_general(M1, xi0, a @ xi0, tol, seed)[0] for a in _positive_samples(an.N, n_samples, rng))
        bwd = all(cone_member_general(an.N, xi0, b @ xi0, tol, seed)[0] for b in _positive_samples(M1, n_samples, rng))
        checks.append(flag("gen.case1.cone_N_in_M1", "N_+ xi0 inside alpha(N)_+ xi0 (sampled)", fwd))
        checks.append(flag("gen.case1.cone_M1_in_N", "alpha(N)_+ xi0 inside N_+ xi0 (sampled)", bwd))
        return CaseReport(1, checks, m1=M1)

    u = an.alpha(ef)
    Nef = compress_space(an.N, ef).with_flags(is_algebra=True, is_selfadjoint=True)
    imgs = np.stack([an.alpha(b) for b in Nef.basis])
    beta = OperatorSubspace.span(list(imgs @ an.g), d)
    gamma = OperatorSubspace.span(list(imgs @ (np.eye(d) - an.g)), d)
    gen = compress_space(double_commutant(list(imgs), tol, seed), u)
    checks = [
        check("gen.case2.unit_projection", "alpha(ef) is a projection", float(np.linalg.norm(u @ u - u)), bound),
        check("gen.case2.beta_faithful", "beta is injective on Nef", abs(beta.dim - Nef.dim), 0.0),
        check("gen.case2.gamma_faithful", "gamma is injective on Nef", abs(gamma.dim - Nef.dim), 0.0),
        check("gen.case2.direct_sum", "alpha(Nef)'' splits as homomorphic plus opposite part",
              abs(gen.dim - beta.dim - gamma.dim), 0.0),
    ]
    witness = None
    for a in _positive_samples(Nef, n_samples, rng):
        v = an.g @ an.alpha(a) @ xi0
        inside, _ = cone_member_general(Nef, xi0, v, tol, seed)
        if not inside:
            witness = v
            break
    checks.append(flag("gen.case2.witness", "g a xi0 outside the cone of Nef", witness is not None))
    return CaseReport(2, checks, witness=witness)


def _reduced_conjugation(N, p, xi0, tol):
    """Standard form of ``N p`` on ``pH``; returns (reduction, modular data) or None when ``p = 0``."""
    if np.linalg.norm(p) <= tol.eq_rel:
        return None
    red = reduce(N, p, xi0, tol)
    return red, standard_form(red.space.with_flags(is_algebra=True, is_selfadjoint=True), red.vector, tol)


def cyclic_case_verify(N, md: ModularData, strict: bool = True, seed: int = 0):
    """Statements of the cyclic case; returns ``(analysis, checks)``.

    With ``strict`` the first failing statement raises :class:`HypothesisFailed`.
    """
    N = as_space(N)
    tol = md.tol
    xi0 = md.xi0
    if not check_cyclic(N, xi0, tol):
        raise PreconditionFailed("xi0 is not cyclic for N")
    an = compute_alpha(N, md)
    check_jordan(an, seed=seed)
    split_homo_antihomo(an, seed)
    d = md.dim
    e = an.e
    ep = np.eye(d) - e
    bound = tol.eq_rel * an.scale
    mtol = tol.eq_rel * np.sqrt(d)
    checks = [flag("cyclic.1_separating", "xi0 separating for N", check_separating(N, xi0, tol))]

    comm = max(np.linalg.norm(e @ b - b @ e) for b in N.basis)
    inside = max((is_member(b @ e, md.space, tol)[1] for b in N.basis), default=0.0)
    checks.append(check("cyclic.2_e_central", "e central in N", comm, bound))
    checks.append(check("cyclic.2_Ne_in_M", "N e inside M", inside, mtol))

    red = _reduced_conjugation(N, ep, xi0, tol)
    if red is None:
        checks.append(flag("cyclic.3_tracial", "xi0 tracial on N e-perp (vacuous)", True))
        checks.append(flag("cyclic.4_conjugate_in_M", "J N e-perp J inside M (vacuous)", True))
    else:
        r, rmd = red
        checks.append(flag("cyclic.3_tracial", "xi0 tracial on N e-perp", is_tracial(r.vector, r.space, tol)))
        worst = max(is_member(r.lift(rmd.conjugate(b)), md.space, tol)[1] for b in r.space.basis)
        checks.append(check("cyclic.4_conjugate_in_M", "J N e-perp J inside M", worst, mtol))

    # alpha(x) = g x + J g-perp x* J, with J taken on g-perp H
    g = an.g
    gp = np.eye(d) - g
    redg = _reduced_conjugation(N, gp, xi0, tol)
    worst = 0.0
    for b, img in zip(N.basis, an.images):
        rhs = g @ b
        if redg is not None:
            r, rmd = redg
            xr = r.isometry.conj().T @ b @ r.isometry
            rhs = rhs + r.lift(rmd.conjugate(xr.conj().T))
        worst = max(worst, float(np.linalg.norm(img - rhs)))
    checks.append(check("cyclic.alpha_formula", "alpha(x) = g x + J g-perp x* J", worst, bound))
    checks.append(check("cyclic.g_equals_e", "g = e", float(np.linalg.norm(g - e)), bound))
    checks.extend(splitting_checks(an))

    if strict:
        for c in checks:
            if not c.verdict:
                raise HypothesisFailed(c.name, f"residual {c.residual:.3e} exceeds {c.tolerance:.1e}")
    return an, checks


def fin_coinc_check(A, B, xi0, tol: TolerancePolicy = DEFAULT_TOL) -> dict:
    """Nested algebras sharing a cyclic separating vector must coincide.

    Returns a record with ``precondition`` (bool) and ``reason``; raises
    :class:`LemmaViolated` if the preconditions hold for a proper inclusion.
    """
    SA, SB = as_space(A), as_space(B)
    nested = all(is_member(b, SB, tol)[0] for b in SA.basis)
    if not nested:
        return {"precondition": False, "reason": "A is not contained in B"}
    for name, S in (("A", A), ("B", B)):
        if not check_cyclic(S, xi0, tol):
            return {"precondition": False, "reason": f"xi0 not cyclic for {name}"}
        if not check_separating(S, xi0, tol):
            return {"precondition": False, "reason": f"xi0 not separating for {name}"}
    if SA.dim != SB.dim:
        raise LemmaViolated(f"proper inclusion dim {SA.dim} < {SB.dim} with common cyclic separating vector")
    return {"precondition": True, "reason": "A = B"}
