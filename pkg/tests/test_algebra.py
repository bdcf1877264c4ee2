from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from sharpcone.algebra import (
    Algebra,
    OperatorSubspace,
    center,
    check_cyclic,
    check_separating,
    commutant,
    double_commutant,
    is_member,
    is_projection,
    minimal_central_projections,
    reduce,
    same_subspace,
)
from sharpcone.errors import ShapeMismatch
from sharpcone.linalg import make_rng, psd_sqrt


def brute_commutant_dim(ops):
    """Dimension of the commutant from the vectorised system x T - T x = 0."""
    d = ops[0].shape[0]
    eye = np.eye(d)
    rows = [np.kron(eye, x) - np.kron(x.T, eye) for x in ops]
    return scipy.linalg.null_space(np.concatenate(rows)).shape[1]


def test_embed_identity_and_scalar():
    A = Algebra(((2, 3), (1, 2)))
    assert np.allclose(A.embed(A.identity()), np.eye(A.dim))
    B = Algebra(((1, 1),))
    assert B.embed([np.array([[2.5]])]).shape == (1, 1)


def test_embed_fix_a_projection():
    A = Algebra(((2, 2),))
    P = A.embed([np.diag([1.0, 0.0])])
    assert P.shape == (4, 4)
    assert np.allclose(P @ P, P) and np.linalg.matrix_rank(P) == 2


def test_embed_shape_errors():
    A = Algebra(((2, 2),))
    with pytest.raises(ShapeMismatch):
        A.embed([np.eye(3)])
    with pytest.raises(ShapeMismatch):
        Algebra(((0, 1),))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_embed_is_star_homomorphism_commuting_with_right_action(seed):
    rng = make_rng(seed)
    A = Algebra(((2, 3), (1, 2), (3, 1)))
    x = [rng.complex_normal((n, n)) for n, _ in A.blocks]
    y = [rng.complex_normal((n, n)) for n, _ in A.blocks]
    r = [rng.complex_normal((m, m)) for _, m in A.blocks]
    X, Y, R = A.embed(x), A.embed(y), A.embed_right(r)
    assert np.allclose(A.embed([a @ b for a, b in zip(x, y)]), X @ Y)
    assert np.allclose(A.embed([a.conj().T for a in x]), X.conj().T)
    assert np.allclose(X @ R, R @ X)
    # left multiplication acts on the block matrices
    zeta = rng.complex_normal(A.dim)
    blocks = A.vector_blocks(zeta)
    assert np.allclose(A.vector_blocks(X @ zeta)[1], x[1] @ blocks[1])
    assert np.allclose(A.vector_blocks(R @ zeta)[0], blocks[0] @ r[0])


def test_commutant_examples():
    assert commutant([np.eye(2)]).dim == 4
    units = [np.outer(np.eye(2)[i], np.eye(2)[j]) for i in range(2) for j in range(2)]
    assert commutant(units).dim == 1
    A = Algebra(((2, 2),))
    C = commutant(A)
    assert C.dim == 4 == brute_commutant_dim(list(A.space.basis))
    assert same_subspace(C, A.commutant_space)


def test_double_commutant_examples():
    assert double_commutant([np.eye(3)]).dim == 1
    dc = double_commutant([np.diag([1.0, 2.0, 3.0])])
    assert dc.dim == 3
    A = Algebra(((2, 2),))
    assert same_subspace(double_commutant(A), A.space)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_commutant_matches_brute_force(seed):
    rng = make_rng(seed)
    A = Algebra(((int(rng.integers(1, 3)), int(rng.integers(1, 3))), (1, int(rng.integers(1, 3)))))
    ops = [A.embed([rng.complex_normal((n, n)) for n, _ in A.blocks]) for _ in range(2)]
    ops += [o.conj().T for o in ops]
    assert commutant(ops).dim == brute_commutant_dim(ops)


def test_center_examples():
    A = Algebra(((3, 1),))
    assert center(A).dim == 1
    D = Algebra(((1, 1), (1, 1), (1, 1)))
    assert center(D).dim == 3
    C = Algebra(((2, 2), (1, 1)))
    Z = center(C)
    assert Z.dim == 2
    for z in C.central_projections():
        assert is_member(z, Z)[0]


def test_minimal_central_projections_examples():
    A = Algebra(((2, 1),))
    (p,) = minimal_central_projections(A)
    assert np.allclose(p, np.eye(2))
    C = Algebra(((2, 2), (1, 1)))
    projs = minimal_central_projections(C)
    expected = C.central_projections()
    assert len(projs) == 2
    assert all(min(np.linalg.norm(p - q) for q in expected) < 1e-8 for p in projs)
    D = Algebra(((1, 1),) * 3)
    projs = minimal_central_projections(D)
    assert sorted(int(np.argmax(np.diag(p).real)) for p in projs) == [0, 1, 2]


def test_is_member_examples():
    A = Algebra(((2, 2),))
    S = A.space
    ok, res = is_member(S.basis[0], S)
    assert ok and res < 1e-14
    T = np.zeros((4, 4), dtype=complex)
    T[0, 1] = 1.0  # moves column 2 of the block into column 1: orthogonal to every left multiplication
    ok, res = is_member(T, S)
    assert not ok and res == pytest.approx(np.linalg.norm(T))
    R = A.embed_right([np.diag([1.0, 0.0])])
    assert not is_member(R, S)[0]


def test_is_member_orthogonal_complement():
    S = OperatorSubspace.span([np.diag([1.0, 0.0])])
    T = np.diag([0.0, 3.0])
    ok, res = is_member(T, S)
    assert not ok and res == pytest.approx(3.0)


def test_cyclic_separating_examples():
    A = Algebra(((2, 2),))
    xi0 = A.vector([psd_sqrt(np.diag([2 / 3, 1 / 3]))])
    assert check_cyclic(A, xi0) and check_separating(A, xi0)
    assert not check_cyclic(A, np.zeros(4)) and not check_separating(A, np.zeros(4))
    B = Algebra(((2, 1),))
    xi = B.vector([np.array([[1.0], [0.5]])])
    assert check_cyclic(B, xi) and not check_separating(B, xi)
    # the same answers through the generic subspace path
    assert check_cyclic(A.space, xi0) and check_separating(A.space, xi0)
    assert not check_separating(B.space, xi)


def test_reduce_examples():
    C = Algebra(((2, 2), (1, 1)))
    xi = C.vector([np.eye(2) / 2, np.array([[0.5]])])
    full = reduce(C, np.eye(C.dim), xi)
    assert full.space.dim == C.space.dim
    zero = reduce(C, np.zeros((C.dim, C.dim)), xi)
    assert zero.space.dim == 0 and zero.vector.shape == (0,)
    second = reduce(C, C.central_projections()[1], xi)
    assert second.space.dim == 1 and second.space.ambient_dim == 1
    assert np.allclose(np.abs(second.vector), [0.5])


def test_is_projection():
    assert is_projection(np.diag([1.0, 0.0]))
    assert not is_projection(np.diag([1.0, 0.5]))
    assert not is_projection(np.array([[1.0, 1.0], [0.0, 0.0]]))
