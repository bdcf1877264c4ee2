from __future__ import annotations

import numpy as np
import pytest

from sharpcone.algebra import Algebra, OperatorSubspace, is_member, same_subspace
from sharpcone.embeddings import (
    EmbeddingAnalysis,
    check_jordan,
    compute_alpha,
    cyclic_case_verify,
    fin_coinc_check,
    split_homo_antihomo,
    splitting_checks,
    theorem_gen_evaluate,
    verify_cone_inclusion,
)
from sharpcone.errors import PreconditionFailed, UnclassifiableBlock
from sharpcone.scenario import generate

M2_UNITS = [np.outer(np.eye(2)[i], np.eye(2)[j]).astype(complex) for i in range(2) for j in range(2)]


def analysed(N, md, seed=0):
    an = compute_alpha(N, md)
    check_jordan(an, seed=seed)
    split_homo_antihomo(an, seed)
    return an


def test_inclusion_holds_for_subalgebra(fix_a):
    diag = OperatorSubspace.span([fix_a.algebra.embed([np.diag(d)]) for d in ([1.0, 0.0], [0.0, 1.0])],
                                 is_algebra=True, is_selfadjoint=True)
    assert verify_cone_inclusion(diag, fix_a)[0]
    assert verify_cone_inclusion(fix_a.algebra.space, fix_a)[0]


def test_inclusion_of_commutant_depends_on_traciality(fix_a, fix_t):
    assert verify_cone_inclusion(fix_t.algebra.commutant_space, fix_t)[0]
    holds, witness = verify_cone_inclusion(fix_a.algebra.commutant_space, fix_a)
    assert not holds
    # the witness is a projection of M' whose image under xi0 leaves the cone
    assert np.allclose(witness @ witness, witness, atol=1e-8)
    x = fix_a.operator(witness @ fix_a.xi0)
    hx = (x + x.conj().T) / 2
    assert np.linalg.norm(x - x.conj().T) > 1e-8 or np.linalg.eigvalsh(hx)[0] < -1e-8


def test_alpha_identity_and_scalars(fix_a):
    an = compute_alpha(fix_a.algebra.space, fix_a)
    assert np.allclose(an.images, an.basis, atol=1e-12)
    scalars = OperatorSubspace.span([np.eye(4)], is_algebra=True, is_selfadjoint=True)
    an = compute_alpha(scalars, fix_a)
    assert np.allclose(an.alpha(3 * np.eye(4)), 3 * np.eye(4), atol=1e-12)


def test_alpha_on_commutant_is_conjugated_adjoint(fix_t):
    Mp = fix_t.algebra.commutant_space
    an = compute_alpha(Mp, fix_t)
    for b, img in zip(an.basis, an.images):
        assert np.allclose(img, fix_t.conjugate(b.conj().T), atol=1e-12)


def test_check_jordan_identity_and_transpose():
    an = EmbeddingAnalysis.from_map(M2_UNITS, lambda b: b)
    assert check_jordan(an)["jordan_residual"] < 1e-14
    an = EmbeddingAnalysis.from_map(M2_UNITS, lambda b: b.T)
    out = check_jordan(an)
    assert out["jordan_residual"] < 1e-14 and out["ok"]


def test_check_jordan_flags_trace_map():
    def trace_map(b):
        return np.trace(b) / 2 * np.eye(2)

    an = EmbeddingAnalysis.from_map(M2_UNITS, trace_map)
    out = check_jordan(an)
    # oracle on x = y = e11: phi(2 e11) - 2 phi(e11)^2 = I - I/2
    e11 = M2_UNITS[0]
    gap = trace_map(2 * e11) - 2 * trace_map(e11) @ trace_map(e11)
    assert np.linalg.norm(gap) == pytest.approx(np.sqrt(2) / 2)
    assert out["jordan_residual"] >= np.linalg.norm(gap) - 1e-12
    assert out["jordan_residual"] > 0.1 and not out["ok"]
    with pytest.raises(UnclassifiableBlock):
        split_homo_antihomo(an)


def test_split_identity(fix_a):
    an = analysed(fix_a.algebra.space, fix_a)
    assert np.allclose(an.g, np.eye(4)) and np.allclose(an.e, np.eye(4)) and np.allclose(an.f, 0)
    assert all(c.verdict for c in splitting_checks(an))


def test_split_tracial_commutant(fix_t):
    an = analysed(fix_t.algebra.commutant_space, fix_t)
    assert np.allclose(an.g, 0) and np.allclose(an.e, 0) and np.allclose(an.f, np.eye(4))
    assert an.verdicts["gamma_antimultiplicative"] < 1e-12


def test_split_abelian_goes_to_homomorphic_side(fix_a):
    diag = OperatorSubspace.span([fix_a.algebra.embed([np.diag(d)]) for d in ([1.0, 0.0], [0.0, 1.0])],
                                 is_algebra=True, is_selfadjoint=True)
    an = analysed(diag, fix_a)
    assert np.allclose(an.g, an.g @ an.g)
    assert all(kind == "homo" for _, kind, _, _ in an.summands)
    assert np.allclose(an.f, 0)


def test_gen_theorem_subalgebra_is_first_case(fix_a):
    an = analysed(fix_a.algebra.space, fix_a)
    rep = theorem_gen_evaluate(an)
    assert rep.case == 1 and rep.passed
    assert same_subspace(rep.m1, fix_a.algebra.space)


def test_gen_theorem_tracial_commutant(fix_t):
    an = analysed(fix_t.algebra.commutant_space, fix_t)
    rep = theorem_gen_evaluate(an)
    assert rep.case == 1 and rep.passed
    assert same_subspace(rep.m1, fix_t.algebra.space)


def test_gen_theorem_second_case_on_twin():
    sc = generate("embedding-suite", 1)
    md = sc.modular()
    an = analysed(sc.N_space(), md, sc.seed)
    rep = theorem_gen_evaluate(an, seed=sc.seed)
    assert rep.case == 2 and rep.passed and rep.witness is not None
    assert np.allclose(an.g, sc.truth("g"), atol=1e-6)


@pytest.mark.parametrize("seed", [0, 3, 6])
def test_ground_truth_mixture(seed):
    sc = generate("embedding-suite", seed)
    assert sc.truth("variant") == "mixture"
    md = sc.modular()
    an, checks = cyclic_case_verify(sc.N_space(), md, seed=seed)
    assert all(c.verdict for c in checks)
    for key in ("g", "e", "f"):
        assert np.linalg.norm(getattr(an, key) - sc.truth(key), 2) <= 1e-6


def test_cyclic_case_identity(fix_a):
    an, checks = cyclic_case_verify(fix_a.algebra.space, fix_a)
    assert all(c.verdict for c in checks)
    assert np.allclose(an.e, np.eye(4))


def test_cyclic_case_tracial_commutant(fix_t):
    an, checks = cyclic_case_verify(fix_t.algebra.commutant_space, fix_t)
    assert np.allclose(an.e, 0)
    names = {c.name: c.verdict for c in checks}
    assert names["cyclic.3_tracial"] and names["cyclic.4_conjugate_in_M"]
    # J N J = M inside M
    for b in fix_t.algebra.commutant_space.basis:
        assert is_member(fix_t.conjugate(b), fix_t.algebra.space)[0]


def test_cyclic_case_refuses_non_cyclic():
    sc = generate("embedding-suite", 2)
    with pytest.raises(PreconditionFailed):
        cyclic_case_verify(sc.N_space(), sc.modular())


def test_fin_coinc_examples(fix_a):
    S = fix_a.algebra.space
    assert fin_coinc_check(S, S, fix_a.xi0) == {"precondition": True, "reason": "A = B"}
    diag = OperatorSubspace.span([fix_a.algebra.embed([np.diag(d)]) for d in ([1.0, 0.0], [0.0, 1.0])],
                                 is_algebra=True, is_selfadjoint=True)
    out = fin_coinc_check(diag, S, fix_a.xi0)
    assert not out["precondition"] and out["reason"] == "xi0 not cyclic for A"
    # the orbit of the diagonal algebra is two-dimensional in C^4
    assert np.linalg.matrix_rank(np.einsum("kij,j->ik", diag.basis, fix_a.xi0)) == 2


def test_fin_coinc_rejects_non_nested(fix_a):
    B = Algebra(((2, 2),))
    out = fin_coinc_check(B.commutant_space, B.space, fix_a.xi0)
    assert out["reason"] == "A is not contained in B"
