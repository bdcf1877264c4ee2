"""Finite-dimensional von Neumann algebras and the subspace calculus around them.

A block algebra ``M = (+)_k M_{n_k} (x) 1_{m_k}`` acts on ``H = (+)_k C^{n_k x m_k}``:
each block of a vector is an ``n_k x m_k`` matrix stored row-major, ``M`` acts by
left multiplication and ``M'`` by right multiplication.  Everything else (images of
maps, reduced algebras, generated algebras) is an :class:`OperatorSubspace` -- a
Hilbert-Schmidt orthonormal basis of matrices on ``H``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateCenter, NotCommuting, ShapeMismatch
from .linalg import (
    DEFAULT_TOL,
    TolerancePolicy,
    cluster_values,
    make_rng,
    matrix_from_json,
    matrix_to_json,
    null_space,
    orthonormal_range,
)

DIM_CAP = 32


class OperatorSubspace:
    """Span of ``dim x dim`` matrices, kept as a Hilbert-Schmidt orthonormal basis."""

    def __init__(self, basis, ambient_dim=None, *, is_algebra=False, is_selfadjoint=False):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 3:
            if ambient_dim is None:
                raise ShapeMismatch("empty basis needs ambient_dim")
            basis = np.zeros((0, ambient_dim, ambient_dim), dtype=complex)
        self.basis = basis
        self.ambient_dim = basis.shape[1] if ambient_dim is None else int(ambient_dim)
        self.is_algebra = is_algebra
        self.is_selfadjoint = is_selfadjoint

    @classmethod
    def span(cls, mats, ambient_dim=None, rel=1e-10, **flags) -> "OperatorSubspace":
        mats = [np.asarray(m, dtype=complex) for m in mats]
        d = ambient_dim if ambient_dim is not None else (mats[0].shape[0] if mats else 0)
        if not mats or d == 0:
            return cls(np.zeros((0, d, d)), d, **flags)
        cols = np.stack([m.reshape(-1) for m in mats], axis=1)
        q = orthonormal_range(cols, rel)
        return cls(q.T.reshape(-1, d, d), d, **flags)

    def __repr__(self):
        return f"OperatorSubspace(dim={self.dim}, ambient_dim={self.ambient_dim})"

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def coords(self, T) -> np.ndarray:
        return np.einsum("kij,ij->k", self.basis.conj(), np.asarray(T, dtype=complex))

    def element(self, coeffs) -> np.ndarray:
        return np.einsum("k,kij->ij", np.asarray(coeffs, dtype=complex), self.basis)

    def project(self, T) -> np.ndarray:
        return self.element(self.coords(T))

    def residual(self, T) -> float:
        return float(np.linalg.norm(np.asarray(T) - self.project(T)))

    def contains(self, T, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        return is_member(T, self, tol)[0]

    @cached_property
    def unit(self) -> np.ndarray:
        """Projection onto the joint range of the basis (the unit of a *-algebra)."""
        d = self.ambient_dim
        if self.dim == 0:
            return np.zeros((d, d), dtype=complex)
        g = np.einsum("kij,klj->il", self.basis, self.basis.conj())
        w, v = np.linalg.eigh((g + g.conj().T) / 2)
        keep = w > 1e-10 * w[-1]
        return v[:, keep] @ v[:, keep].conj().T

    @cached_property
    def hermitian_basis(self) -> np.ndarray:
        """Real-orthonormal basis of the self-adjoint part (for *-closed spaces)."""
        d = self.ambient_dim
        if self.dim == 0:
            return np.zeros((0, d, d), dtype=complex)
        herm = np.concatenate(
            [(self.basis + self.basis.conj().transpose(0, 2, 1)) / 2,
             (self.basis - self.basis.conj().transpose(0, 2, 1)) / 2j]
        )
        flat = herm.reshape(herm.shape[0], -1)
        real = np.concatenate([flat.real, flat.imag], axis=1).T
        q = orthonormal_range(real, 1e-10)
        n = d * d
        out = (q[:n] + 1j * q[n:]).T.reshape(-1, d, d)
        return (out + out.conj().transpose(0, 2, 1)) / 2

    def random_element(self, rng, hermitian=False) -> np.ndarray:
        if hermitian:
            hb = self.hermitian_basis
            return np.einsum("k,kij->ij", rng.normal(hb.shape[0]), hb)
        return self.element(rng.complex_normal(self.dim))

    def with_flags(self, **flags) -> "OperatorSubspace":
        merged = {"is_algebra": self.is_algebra, "is_selfadjoint": self.is_selfadjoint}
        merged.update(flags)
        return OperatorSubspace(self.basis, self.ambient_dim, **merged)


@dataclass(frozen=True)
class Algebra:
    """Direct sum of full matrix blocks ``M_{n_k}`` with multiplicities ``m_k``."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple((int(n), int(m)) for n, m in self.blocks)
        if not blocks or any(n < 1 or m < 1 for n, m in blocks):
            raise ShapeMismatch("blocks need n_k >= 1 and m_k >= 1")
        object.__setattr__(self, "blocks", blocks)
        if self.dim > DIM_CAP:
            raise ShapeMismatch(f"dim H = {self.dim} exceeds cap {DIM_CAP}")

    @property
    def dim(self) -> int:
        return sum(n * m for n, m in self.blocks)

    @property
    def algebra_dim(self) -> int:
        return sum(n * n for n, _ in self.blocks)

    @cached_property
    def offsets(self) -> list:
        out, pos = [], 0
        for n, m in self.blocks:
            out.append(pos)
            pos += n * m
        return out

    def _slice(self, k) -> slice:
        n, m = self.blocks[k]
        return slice(self.offsets[k], self.offsets[k] + n * m)

    def embed(self, x) -> np.ndarray:
        """Operator on H of a block element (left multiplication)."""
        if len(x) != len(self.blocks):
            raise ShapeMismatch("wrong number of blocks")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for k, ((n, m), xk) in enumerate(zip(self.blocks, x)):
            xk = np.asarray(xk, dtype=complex)
            if xk.shape != (n, n):
                raise ShapeMismatch(f"block {k} must be {n}x{n}")
            s = self._slice(k)
            out[s, s] = np.kron(xk, np.eye(m))
        return out

    def embed_right(self, y) -> np.ndarray:
        """Operator on H of right multiplication by ``m_k x m_k`` blocks (an element of M')."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for k, ((n, m), yk) in enumerate(zip(self.blocks, y)):
            yk = np.asarray(yk, dtype=complex)
            if yk.shape != (m, m):
                raise ShapeMismatch(f"block {k} must be {m}x{m}")
            s = self._slice(k)
            out[s, s] = np.kron(np.eye(n), yk.T)
        return out

    def element_blocks(self, T) -> list:
        """Inverse of :meth:`embed` (reads the ``(i,0),(j,0)`` entries of each block)."""
        T = np.asarray(T)
        out = []
        for k, (n, m) in enumerate(self.blocks):
            s = self._slice(k)
            out.append(T[s, s].reshape(n, m, n, m)[:, 0, :, 0].copy())
        return out

    def vector(self, blocks) -> np.ndarray:
        parts = []
        for k, ((n, m), b) in enumerate(zip(self.blocks, blocks)):
            b = np.asarray(b, dtype=complex)
            if b.shape != (n, m):
                raise ShapeMismatch(f"vector block {k} must be {n}x{m}")
            parts.append(b.reshape(-1))
        if len(parts) != len(self.blocks):
            raise ShapeMismatch("wrong number of vector blocks")
        return np.concatenate(parts)

    def vector_blocks(self, v) -> list:
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise ShapeMismatch(f"vector must have length {self.dim}")
        return [v[self._slice(k)].reshape(n, m) for k, (n, m) in enumerate(self.blocks)]

    def identity(self) -> list:
        return [np.eye(n, dtype=complex) for n, _ in self.blocks]

    def zero(self) -> list:
        return [np.zeros((n, n), dtype=complex) for n, _ in self.blocks]

    def block_identity(self, k) -> list:
        x = self.zero()
        x[k] = np.eye(self.blocks[k][0], dtype=complex)
        return x

    def matrix_units(self):
        """Yield ``(k, i, j, embedded e_ij of block k)``."""
        for k, (n, _) in enumerate(self.blocks):
            for i in range(n):
                for j in range(n):
                    x = self.zero()
                    x[k][i, j] = 1.0
                    yield k, i, j, self.embed(x)

    @cached_property
    def space(self) -> OperatorSubspace:
        mats = [u / np.sqrt(self.blocks[k][1]) for k, _, _, u in self.matrix_units()]
        return OperatorSubspace(np.stack(mats), self.dim, is_algebra=True, is_selfadjoint=True)

    @cached_property
    def commutant_space(self) -> OperatorSubspace:
        mats = []
        for k, (n, m) in enumerate(self.blocks):
            for i in range(m):
                for j in range(m):
                    y = [np.zeros((mm, mm), dtype=complex) for _, mm in self.blocks]
                    y[k][i, j] = 1.0
                    mats.append(self.embed_right(y) / np.sqrt(n))
        return OperatorSubspace(np.stack(mats), self.dim, is_algebra=True, is_selfadjoint=True)

    def central_projections(self) -> list:
        return [self.embed(self.block_identity(k)) for k in range(len(self.blocks))]

    def to_json(self) -> dict:
        return {"blocks": [{"n": n, "m": m} for n, m in self.blocks]}

    @classmethod
    def from_json(cls, data) -> "Algebra":
        return cls(tuple((b["n"], b["m"]) for b in data["blocks"]))

    def vector_to_json(self, v) -> list:
        return [matrix_to_json(b) for b in self.vector_blocks(v)]

    def vector_from_json(self, data) -> np.ndarray:
        return self.vector([matrix_from_json(b) for b in data])

    def element_to_json(self, T) -> list:
        return [matrix_to_json(b) for b in self.element_blocks(T)]

    def element_from_json(self, data) -> np.ndarray:
        return self.embed([matrix_from_json(b) for b in data])


def as_space(A) -> OperatorSubspace:
    return A.space if isinstance(A, Algebra) else A


def embed(A: Algebra, x) -> np.ndarray:
    return A.embed(x)


def is_member(T, S, tol: TolerancePolicy = DEFAULT_TOL):
    """Orthogonal projection test under the trace inner product: ``(member, residual)``."""
    S = as_space(S)
    T = np.asarray(T, dtype=complex)
    if T.shape != (S.ambient_dim, S.ambient_dim):
        raise ShapeMismatch("operator and subspace live on different spaces")
    r = S.residual(T)
    return r <= tol.eq_rel * np.linalg.norm(T), r


def same_subspace(S1, S2, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    S1, S2 = as_space(S1), as_space(S2)
    if S1.dim != S2.dim:
        return False
    return all(is_member(b, S2, tol)[0] for b in S1.basis) and all(
        is_member(b, S1, tol)[0] for b in S2.basis
    )


def _operator_list(ops):
    if isinstance(ops, (Algebra, OperatorSubspace)):
        return list(as_space(ops).basis)
    ops = [np.asarray(o, dtype=complex) for o in ops]
    if not ops:
        raise ShapeMismatch("need at least one operator")
    return ops


def _generators(ops, rng, count=3):
    """Operators whose commutant equals that of ``ops`` (and their adjoints)."""
    if len(ops) <= count:
        gens = list(ops)
    else:
        stack = np.stack(ops)
        gens = [np.einsum("k,kij->ij", rng.complex_normal(len(ops)), stack) for _ in range(count)]
    return gens + [g.conj().T for g in gens]


def _commuting_kernel(candidates, gens, rel):
    """Coefficient vectors ``c`` with ``[sum c_i B_i, g] = 0`` for every generator."""
    blocks = []
    for g in gens:
        comm = candidates @ g - g @ candidates
        blocks.append(comm.reshape(candidates.shape[0], -1).T)
    scale = max(float(np.max(np.linalg.norm(candidates, axis=(1, 2)))), 1e-300)
    scale *= max(float(np.linalg.norm(g)) for g in gens)
    return null_space(np.concatenate(blocks, axis=0), rel, atol=rel * scale)


def _solve_commuting(candidates, ops, tol, seed):
    rng = make_rng(seed, 0xC0)
    gens = _generators(ops, rng)
    kern = _commuting_kernel(candidates, gens, tol.eq_rel)
    if len(ops) > 3 and kern.shape[1]:
        # fresh random members catch a generator set that was not generic enough
        check = _generators(ops, make_rng(seed, 0xC1), count=2)
        sols = np.einsum("kc,kij->cij", kern, candidates)
        bad = max(
            np.linalg.norm(s @ g - g @ s) / max(np.linalg.norm(g), 1e-300)
            for s in sols for g in check
        )
        if bad > tol.eq_rel:
            kern = _commuting_kernel(candidates, ops + [o.conj().T for o in ops], tol.eq_rel)
    return kern


def commutant(ops, tol: TolerancePolicy = DEFAULT_TOL, seed: int = 0) -> OperatorSubspace:
    """``{T : T x = x T for every x in ops}`` (adjoints adjoined automatically)."""
    ops = _operator_list(ops)
    d = ops[0].shape[0]
    units = np.eye(d * d, dtype=complex).reshape(d * d, d, d)
    kern = _solve_commuting(units, ops, tol, seed)
    basis = kern.T.reshape(-1, d, d)
    return OperatorSubspace(basis, d, is_algebra=True, is_selfadjoint=True)


def double_commutant(ops, tol: TolerancePolicy = DEFAULT_TOL, seed: int = 0) -> OperatorSubspace:
    return commutant(commutant(ops, tol, seed), tol, seed)


def center(S, tol: TolerancePolicy = DEFAULT_TOL, seed: int = 0) -> OperatorSubspace:
    """``S`` intersected with its commutant."""
    S = as_space(S)
    if S.dim == 0:
        return S
    kern = _solve_commuting(S.basis, list(S.basis), tol, seed)
    mats = np.einsum("kc,kij->cij", kern, S.basis)
    return OperatorSubspace.span(list(mats), S.ambient_dim, is_algebra=True, is_selfadjoint=True)


def minimal_central_projections(S, tol: TolerancePolicy = DEFAULT_TOL, seed: int = 0) -> list:
    """Minimal projections of the center, summing to the unit of ``S``.

    A random self-adjoint central element is diagonalised on the range of the unit;
    its eigenvalue clusters are the minimal central projections when their number
    matches the dimension of the center.  Up to eight fresh draws are tried.
    """
    S = as_space(S)
    if S.dim == 0:
        return []
    Z = center(S, tol, seed)
    w_unit = orthonormal_range(S.unit, 1e-10)
    for attempt in range(8):
        rng = make_rng(seed, 0xCE, attempt)
        z = Z.random_element(rng, hermitian=True)
        zr = w_unit.conj().T @ z @ w_unit
        w, v = np.linalg.eigh((zr + zr.conj().T) / 2)
        scale = max(1.0, float(np.max(np.abs(w))))
        groups = cluster_values(w, tol.cluster_abs * scale)
        if len(groups) != Z.dim:
            continue
        projs = []
        for idx in groups:
            vv = w_unit @ v[:, idx]
            projs.append(vv @ vv.conj().T)
        if all(is_member(p, Z, tol)[0] for p in projs):
            return projs
    raise DegenerateCenter("could not separate the center into minimal projections")


def _rank(mat, tol: TolerancePolicy) -> int:
    s = np.linalg.svd(np.asarray(mat), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > s[0] / tol.cond_max))


def orbit_matrix(A, xi) -> np.ndarray:
    """Columns ``x_i xi`` for the basis ``x_i`` of ``A``."""
    S = as_space(A)
    return np.einsum("kij,j->ik", S.basis, np.asarray(xi, dtype=complex))


def check_cyclic(A, xi, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    xi = np.asarray(xi, dtype=complex)
    if not np.any(xi):
        return False
    if isinstance(A, Algebra):
        return all(_rank(b, tol) == b.shape[1] for b in A.vector_blocks(xi))
    return _rank(orbit_matrix(A, xi), tol) == A.ambient_dim


def check_separating(A, xi, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    xi = np.asarray(xi, dtype=complex)
    if not np.any(xi):
        return False
    if isinstance(A, Algebra):
        return all(_rank(b, tol) == b.shape[0] for b in A.vector_blocks(xi))
    return _rank(orbit_matrix(A, xi), tol) == A.dim


@dataclass(frozen=True, eq=False)
class Reduction:
    """Compression of an algebra and a vector to the range of a commuting projection."""

    space: OperatorSubspace
    vector: np.ndarray
    isometry: np.ndarray  # columns: orthonormal basis of range(p)

    def lift(self, x) -> np.ndarray:
        W = self.isometry
        return W @ x @ W.conj().T


def reduce(A, p, xi, tol: TolerancePolicy = DEFAULT_TOL) -> Reduction:
    S = as_space(A)
    p = np.asarray(p, dtype=complex)
    scale = max(1.0, np.linalg.norm(p))
    for b in S.basis:
        if np.linalg.norm(p @ b - b @ p) > tol.eq_rel * scale * max(1.0, np.linalg.norm(b)):
            raise NotCommuting("projection does not commute with the algebra")
    W = orthonormal_range(p, 1e-10)
    r = W.shape[1]
    mats = [W.conj().T @ b @ W for b in S.basis]
    space = OperatorSubspace.span(mats, r, is_algebra=S.is_algebra, is_selfadjoint=S.is_selfadjoint)
    if r == 0:
        space = OperatorSubspace(np.zeros((0, 0, 0)), 0, is_algebra=True, is_selfadjoint=True)
    return Reduction(space, W.conj().T @ np.asarray(xi, dtype=complex), W)


def compress_space(S, p) -> OperatorSubspace:
    """``p S p`` as a subspace on H (used for corners such as ``N e f``)."""
    S = as_space(S)
    return OperatorSubspace.span(
        [p @ b @ p for b in S.basis], S.ambient_dim,
        is_algebra=S.is_algebra, is_selfadjoint=S.is_selfadjoint,
    )


def is_projection(p, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    p = np.asarray(p)
    scale = max(1.0, np.linalg.norm(p))
    return (
        np.linalg.norm(p - p.conj().T) <= tol.eq_rel * scale
        and np.linalg.norm(p @ p - p) <= tol.eq_rel * scale
    )
