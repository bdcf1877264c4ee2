from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import vec_of
from sharpcone.algebra import Algebra, OperatorSubspace
from sharpcone.cone import (
    ConeContext,
    classify,
    cone_member,
    cone_member_general,
    cone_status,
    corner,
    jordan_decompose,
    jordan_product,
    jordan_product_oracle,
    leq,
    offdiag,
    offdiag_oracle,
    op_orthogonal,
    sharp_norm,
    sharp_norm_order,
    square,
    square_oracle,
    support_vector,
    triple_product,
    triple_product_oracle,
    vector_to_operator,
)
from sharpcone.errors import Inconclusive, NotHermitianRep, NotInCone, NotProjective
from sharpcone.linalg import make_rng
from sharpcone.modular import standard_form
from sharpcone.scenario import generate

E11 = np.diag([1.0, 0.0])
E22 = np.diag([0.0, 1.0])
E12 = np.array([[0.0, 1.0], [0.0, 0.0]])
SX = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_vector_to_operator_examples(fix_a_ctx):
    ctx = fix_a_ctx
    A = ctx.md.algebra
    assert np.allclose(vector_to_operator(ctx, ctx.xi0), np.eye(4))
    sigma = np.diag([1.0, -1.0])
    assert np.allclose(vector_to_operator(ctx, vec_of(ctx.md, sigma)), A.embed([sigma]), atol=1e-12)
    x = A.embed([make_rng(3).complex_normal((2, 2))])
    assert np.allclose(vector_to_operator(ctx, x @ ctx.xi0), x, atol=1e-12)


def test_cone_member_examples(fix_a_ctx):
    ctx = fix_a_ctx
    assert cone_member(ctx, ctx.xi0)
    assert not cone_member(ctx, -ctx.xi0)
    assert not cone_member(ctx, vec_of(ctx.md, np.diag([1.0, -0.01])))
    assert cone_status(ctx, vec_of(ctx.md, E11)) == "boundary"
    assert cone_status(ctx, vec_of(ctx.md, np.eye(2))) == "member"
    assert not cone_member(ctx, vec_of(ctx.md, 1j * np.eye(2)))


def test_classify_examples(fix_a_ctx):
    ctx = fix_a_ctx
    c = classify(ctx, ctx.xi0)
    assert c.contractive and c.projective and c.agree
    c = classify(ctx, ctx.xi0 / 2)
    assert c.contractive and not c.projective and c.agree
    c = classify(ctx, vec_of(ctx.md, E11))
    assert c.projective and c.agree
    c = classify(ctx, 2 * ctx.xi0)
    assert not c.contractive and not c.projective
    with pytest.raises(NotInCone):
        classify(ctx, -ctx.xi0)


def test_op_orthogonal_examples(fix_a_ctx):
    ctx = fix_a_ctx
    assert op_orthogonal(ctx, ctx.xi0, np.zeros(4))
    assert not op_orthogonal(ctx, ctx.xi0, ctx.xi0)
    assert op_orthogonal(ctx, vec_of(ctx.md, E11), vec_of(ctx.md, E22))
    with pytest.raises(NotProjective):
        op_orthogonal(ctx, ctx.xi0 / 2, ctx.xi0 / 2)


def test_support_vector_examples(fix_a_ctx):
    ctx = fix_a_ctx
    assert np.allclose(support_vector(ctx, ctx.xi0).vec, ctx.xi0)
    assert np.allclose(support_vector(ctx, np.zeros(4)).vec, 0)
    s = support_vector(ctx, vec_of(ctx.md, np.diag([0.5, 0.0])))
    assert np.allclose(s.rep, ctx.md.algebra.embed([E11]), atol=1e-10)


def test_jordan_decompose_examples(fix_a_ctx):
    ctx = fix_a_ctx
    zeta = vec_of(ctx.md, np.diag([0.3, 0.9]))
    plus, minus = jordan_decompose(ctx, zeta)
    assert np.allclose(plus, zeta) and np.allclose(minus, 0)
    plus, minus = jordan_decompose(ctx, -zeta)
    assert np.allclose(plus, 0) and np.allclose(minus, zeta)
    plus, minus = jordan_decompose(ctx, vec_of(ctx.md, np.diag([1.0, -2.0])))
    assert np.allclose(plus, vec_of(ctx.md, E11), atol=1e-12)
    assert np.allclose(minus, vec_of(ctx.md, np.diag([0.0, 2.0])), atol=1e-12)
    with pytest.raises(NotHermitianRep):
        jordan_decompose(ctx, vec_of(ctx.md, E12))


def test_sharp_norm_examples(fix_a_ctx):
    ctx = fix_a_ctx
    assert sharp_norm(ctx, ctx.xi0) == pytest.approx(1.0)
    assert sharp_norm(ctx, 2 * ctx.xi0) == pytest.approx(2.0)
    zeta = vec_of(ctx.md, np.diag([1.0, -3.0]))
    assert sharp_norm(ctx, zeta) == pytest.approx(3.0)
    assert sharp_norm_order(ctx, zeta) == pytest.approx(3.0, rel=1e-6)


def test_square_examples(fix_a_ctx):
    ctx = fix_a_ctx
    assert np.allclose(square(ctx, ctx.xi0), ctx.xi0, atol=1e-12)
    p = vec_of(ctx.md, E11)
    assert np.allclose(square(ctx, 3 * p), 9 * p, atol=1e-12)
    assert np.allclose(square(ctx, vec_of(ctx.md, SX)), ctx.xi0, atol=1e-12)


def test_jordan_and_triple_product_examples(fix_a_ctx):
    ctx = fix_a_ctx
    zeta = vec_of(ctx.md, np.array([[0.2, 1 - 1j], [0.5j, -1.0]]))
    assert np.allclose(jordan_product(ctx, ctx.xi0, zeta), 2 * zeta, atol=1e-12)
    assert np.allclose(triple_product(ctx, ctx.xi0, zeta), zeta, atol=1e-12)
    y, z = vec_of(ctx.md, E11), vec_of(ctx.md, SX)
    got = jordan_product(ctx, y, z)
    assert np.allclose(got, jordan_product_oracle(ctx, y, z), atol=1e-12)
    assert np.allclose(got, vec_of(ctx.md, SX), atol=1e-12)  # e11 sx + sx e11 = sx


def test_corner_and_offdiag_examples(fix_a_ctx):
    ctx = fix_a_ctx
    eta = vec_of(ctx.md, np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert np.allclose(corner(ctx, ctx.xi0, eta), eta, atol=1e-12)
    assert np.allclose(offdiag(ctx, ctx.xi0, eta), 0, atol=1e-12)
    zero = np.zeros(4)
    assert np.allclose(corner(ctx, zero, eta), 0, atol=1e-12)
    e, y = vec_of(ctx.md, E11), vec_of(ctx.md, E12)
    assert np.allclose(corner(ctx, e, y), 0, atol=1e-12)
    assert np.allclose(offdiag(ctx, e, y), y, atol=1e-12)
    with pytest.raises(NotProjective):
        corner(ctx, ctx.xi0 / 2, eta)


def random_context(seed):
    rng = make_rng(seed)
    sizes = [int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 3)))]
    A = Algebra(tuple((n, n) for n in sizes))
    xi0 = A.vector([rng.complex_normal((n, n)) + 2 * np.eye(n) for n in sizes])
    return ConeContext(standard_form(A, xi0 / np.linalg.norm(xi0))), rng


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_order_square_matches_operator_square(seed):
    ctx, rng = random_context(seed)
    space = ctx.md.space
    zeta = space.random_element(rng) @ ctx.xi0
    eta = space.random_element(rng) @ ctx.xi0
    for got, want in (
        (square(ctx, zeta), square_oracle(ctx, zeta)),
        (jordan_product(ctx, eta, zeta), jordan_product_oracle(ctx, eta, zeta)),
        (triple_product(ctx, zeta, eta), triple_product_oracle(ctx, zeta, eta)),
    ):
        assert np.linalg.norm(got - want) <= 1e-8 * max(1.0, np.linalg.norm(want))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cone_order_properties(seed):
    ctx, rng = random_context(seed)
    space = ctx.md.space
    h = space.random_element(rng, hermitian=True)
    zeta = h @ ctx.xi0
    w = np.linalg.eigvalsh(h)
    # sharp norm: spectral radius, and the order-theoretic bisection agrees
    radius = float(np.max(np.abs(w)))
    assert sharp_norm(ctx, zeta) == pytest.approx(radius, rel=1e-10)
    assert abs(sharp_norm_order(ctx, zeta) - radius) <= 1e-6 * radius
    # Jordan split: difference of cone elements with orthogonal supports
    plus, minus = jordan_decompose(ctx, zeta)
    assert np.allclose(plus - minus, zeta, atol=1e-10)
    assert cone_member(ctx, plus) and cone_member(ctx, minus)
    p, m = vector_to_operator(ctx, plus), vector_to_operator(ctx, minus)
    assert np.linalg.norm(p @ m) <= 1e-8 * max(1.0, radius**2)
    # contractive iff rep <= I
    pos = h @ h
    pos = pos / np.linalg.norm(pos, 2) * rng.uniform(None, 0.2, 1.8)
    c = classify(ctx, pos @ ctx.xi0)
    assert c.contractive == bool(np.linalg.eigvalsh(np.eye(ctx.md.dim) - pos)[0] >= -1e-9)
    assert c.agree


def test_offdiag_matches_oracle_on_random_projection():
    ctx, rng = random_context(17)
    h = ctx.md.space.random_element(rng, hermitian=True)
    w, v = np.linalg.eigh(h)
    # spectral projection of h for its positive part lies in M
    e = v[:, w > 0] @ v[:, w > 0].conj().T
    eta = ctx.md.space.random_element(rng) @ ctx.xi0
    zeta = e @ ctx.xi0
    got = offdiag(ctx, zeta, eta)
    assert np.linalg.norm(got - offdiag_oracle(ctx, zeta, eta)) <= 1e-8 * max(1.0, np.linalg.norm(eta))


def test_leq_is_transitive_on_scalars(fix_a_ctx):
    ctx = fix_a_ctx
    assert leq(ctx, 0.5 * ctx.xi0, ctx.xi0)
    assert not leq(ctx, ctx.xi0, 0.5 * ctx.xi0)


# general cone membership


def rank_one_pair():
    """``A = C c + C c-perp`` on C^2 with ``xi`` inside ``range(c)``: the slice is one-dimensional."""
    c = np.array([1.0, 1.0j]) / np.sqrt(2)
    P = np.outer(c, c.conj())
    A = OperatorSubspace.span([P, np.eye(2) - P], is_algebra=True, is_selfadjoint=True)
    return A, 0.7 * c


def slice_lambda_max(xi, sign):
    """Scalar search over the free coefficient beta of (sign P + beta Q)."""
    c = xi / np.linalg.norm(xi)
    P = np.outer(c, c.conj())
    best = -np.inf
    for beta in np.linspace(-5, 5, 2001):
        best = max(best, np.linalg.eigvalsh(sign * P + beta * (np.eye(2) - P))[0])
    return best


def test_cone_member_general_unit_and_infeasible():
    A, xi = rank_one_pair()
    ok, cert = cone_member_general(A, xi, xi)
    assert ok and cert["kind"] == "element"
    ok, cert = cone_member_general(A, xi, np.array([1.0, 0.0]))
    assert not ok and cert["kind"] == "infeasible" and cert["residual"] > 0.1


def test_cone_member_general_one_dimensional_slice():
    A, xi = rank_one_pair()
    ok, cert = cone_member_general(A, xi, -xi)
    assert not ok and cert["kind"] == "separating"
    # independent scalar search over the slice gives the same sign
    assert slice_lambda_max(xi, -1.0) == pytest.approx(-1.0)
    assert cert["upper_bound"] < 0
    ok, cert = cone_member_general(A, xi, 2 * xi)
    assert ok and np.linalg.eigvalsh(cert["element"])[0] >= -1e-9
    assert slice_lambda_max(xi, 1.0) > 0


def test_cone_member_general_inconclusive_without_iterations():
    A, xi = rank_one_pair()
    with pytest.raises(Inconclusive):
        cone_member_general(A, xi, -xi, max_iter=0)


def test_cone_member_general_agrees_with_cone_member(fix_a_ctx):
    ctx = fix_a_ctx
    S = ctx.md.space
    for rep in (np.diag([1.0, 0.5]), np.diag([1.0, -0.01]), SX):
        zeta = vec_of(ctx.md, rep)
        assert cone_member_general(S, ctx.xi0, zeta)[0] == cone_member(ctx, zeta)


def test_cone_member_general_twisted_witness_is_outside():
    """The twisted algebra of the second alternative: g a xi0 is not even in N xi0."""
    sc = generate("embedding-suite", 1)
    assert sc.truth("variant") == "twin"
    N = sc.N_space()
    md = sc.modular()
    g = sc.truth("g")
    rng = make_rng(5)
    h = N.random_element(rng, hermitian=True)
    zeta = g @ (h @ h) @ md.xi0
    ok, cert = cone_member_general(N, md.xi0, zeta)
    assert not ok and cert["kind"] == "infeasible"
    # oracle: complex least squares over all of N already leaves a residual
    cols = np.einsum("kij,j->ik", N.basis, md.xi0)
    coef, *_ = np.linalg.lstsq(cols, zeta, rcond=None)
    assert np.linalg.norm(cols @ coef - zeta) > 1e-3
    # while a xi0 itself is inside
    assert cone_member_general(N, md.xi0, (h @ h) @ md.xi0)[0]


def test_cone_member_general_kernel_slice():
    """N kills part of H at xi0; elements supported there form the free directions."""
    sc = generate("embedding-suite", 2)
    assert sc.truth("variant") == "kernel"
    N = sc.N_space()
    md = sc.modular()
    n = sc.algebra.blocks[0][0]
    ok, _ = cone_member_general(N, md.xi0, md.xi0)
    assert ok
    d = sc.algebra.embed([np.diag([1.0] + [-0.5] * (n - 1))])
    ok, _ = cone_member_general(N, md.xi0, d @ md.xi0)
    assert not ok
