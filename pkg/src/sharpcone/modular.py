"""Tomita-Takesaki data of a cyclic separating vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import OperatorSubspace, as_space, check_cyclic, check_separating, is_member, orbit_matrix
from .errors import NotCyclicSeparating, NotInvariant
from .linalg import DEFAULT_TOL, DEGENERACY_GAP, AntilinearOp, TolerancePolicy, antilinear_polar, lin_solve, null_space, spectral_projections


@dataclass(frozen=True, eq=False)
class ModularData:
    algebra: object  # Algebra or OperatorSubspace
    xi0: np.ndarray
    S: AntilinearOp
    J: AntilinearOp
    Delta: np.ndarray
    delta_eig: list  # [(eigenvalue, spectral projection), ...] ascending
    orbit: np.ndarray  # columns x_i xi0 for the basis x_i of the algebra
    orbit_inv: np.ndarray
    tol: TolerancePolicy = DEFAULT_TOL

    @property
    def space(self) -> OperatorSubspace:
        return as_space(self.algebra)

    @property
    def dim(self) -> int:
        return self.xi0.shape[0]

    def delta_power(self, z) -> np.ndarray:
        """``Delta**z`` for complex ``z`` by spectral calculus."""
        out = np.zeros_like(self.Delta)
        for lam, P in self.delta_eig:
            out = out + lam ** z * P
        return out

    @property
    def delta_spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.Delta)

    def operator(self, zeta) -> np.ndarray:
        """The unique ``x`` in the algebra with ``x xi0 = zeta``."""
        return self.space.element(self.orbit_inv @ np.asarray(zeta, dtype=complex))

    def conjugate(self, x) -> np.ndarray:
        """Linear matrix of ``J x J``."""
        return self.J.conjugate_linear(x)


def standard_form(A, xi0, tol: TolerancePolicy = DEFAULT_TOL) -> ModularData:
    """Build ``S`` from ``S(x xi0) = x* xi0`` on a basis and polar-decompose it."""
    xi0 = np.asarray(xi0, dtype=complex)
    S_space = as_space(A)
    if xi0.shape != (S_space.ambient_dim,):
        raise NotCyclicSeparating("vector does not live on the algebra's Hilbert space")
    if not (check_cyclic(A, xi0, tol) and check_separating(A, xi0, tol)):
        raise NotCyclicSeparating("vector is not cyclic and separating")
    B = orbit_matrix(S_space, xi0)
    s = np.linalg.svd(B, compute_uv=False)
    if (s[0] / s[-1]) ** 2 > tol.cond_max:
        raise NotCyclicSeparating("Gram matrix of the orbit basis is too ill-conditioned")
    adj = S_space.basis.conj().transpose(0, 2, 1)
    C = np.einsum("kij,j->ik", adj, xi0)
    # K conj(B) = C  <=>  conj(B)^T K^T = C^T
    Kt, _ = lin_solve(np.conj(B).T, C.T, tol)
    S = AntilinearOp(Kt.T)
    J, Delta = antilinear_polar(S, tol)
    return ModularData(
        algebra=A,
        xi0=xi0,
        S=S,
        J=J,
        Delta=Delta,
        delta_eig=spectral_projections(Delta, tol, DEGENERACY_GAP),
        orbit=B,
        orbit_inv=np.linalg.inv(B),
        tol=tol,
    )


def modular_flow(md: ModularData, t: float, x) -> np.ndarray:
    """``Delta^{it} x Delta^{-it}``; raises NotInvariant if it leaves the algebra."""
    U = md.delta_power(1j * t)
    y = U @ np.asarray(x, dtype=complex) @ U.conj().T
    ok, r = is_member(y, md.space, md.tol)
    if not ok:
        raise NotInvariant(f"modular flow left the algebra (residual {r:.3e})")
    return y


def fixed_point_algebra(md: ModularData) -> OperatorSubspace:
    """Elements of the algebra commuting with ``Delta``."""
    basis = md.space.basis
    comm = basis @ md.Delta - md.Delta @ basis
    kern = null_space(comm.reshape(basis.shape[0], -1).T, md.tol.eq_rel)
    mats = np.einsum("kc,kij->cij", kern, basis)
    return OperatorSubspace.span(list(mats), md.dim, is_algebra=True, is_selfadjoint=True)


def is_tracial(xi, A, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """``<xy xi, xi> == <yx xi, xi>`` on all basis pairs."""
    S = as_space(A)
    xi = np.asarray(xi, dtype=complex)
    if S.dim == 0:
        return True
    P = orbit_matrix(S, xi)
    Q = np.einsum("kji,j->ik", S.basis.conj(), xi)  # x_i^* xi
    F = Q.conj().T @ P
    scale = max(float(np.vdot(xi, xi).real), np.finfo(float).tiny)
    return float(np.max(np.abs(F - F.T))) <= tol.eq_rel * scale


def s_apply(md: ModularData, zeta) -> np.ndarray:
    return md.S(np.asarray(zeta, dtype=complex))


__all__ = [
    "ModularData",
    "standard_form",
    "modular_flow",
    "fixed_point_algebra",
    "is_tracial",
    "s_apply",
]
