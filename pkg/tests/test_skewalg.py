import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ricci_forge.errors import DomainError, DomainMismatch, EllTooSmall, ParityBoundViolation
from ricci_forge.skewalg import (
    BoundaryType,
    ExtendedQuadraticForm,
    SkewIntMatrix,
    SkewNormalForm,
    UnimodularWitness,
    anl_reduction_trace,
    block_diagonal,
    build_A,
    build_B,
    build_v,
    canonical_blocks,
    check_parity_bound,
    classify_boundary,
    congruent,
    determinant,
    direct_sum,
    eqf_change_basis,
    expected_A_form,
    expected_B_form,
    minimal_ell,
    pfaffian,
    pfaffian_abs_product,
    random_skew,
    random_unimodular,
    skew_normal_form,
)


@st.composite
def skew_matrices(draw, max_n=8, bound=9):
    n = draw(st.integers(1, max_n))
    upper = {(i, j): draw(st.integers(-bound, bound)) for i in range(n) for j in range(i + 1, n)}
    return SkewIntMatrix.from_upper(n, upper)


def test_rejects_non_skew():
    with pytest.raises(DomainError):
        SkewIntMatrix([[0, 1], [1, 0]])
    with pytest.raises(DomainError):
        UnimodularWitness([[2, 0], [0, 1]])
    with pytest.raises(DomainMismatch):
        SkewNormalForm((2, 3), 0)


def test_zero_and_already_normal():
    _, nf = skew_normal_form(SkewIntMatrix.zeros(3))
    assert nf.blocks == () and nf.zero_count == 3
    T, nf = skew_normal_form(SkewIntMatrix([[0, 5], [-5, 0]]))
    assert nf.blocks == (5,)
    assert [[abs(x) for x in r] for r in T.to_list()] == [[1, 0], [0, 1]]


@given(skew_matrices())
def test_witness_identity(A):
    T, nf = skew_normal_form(A)
    assert T.apply(A) == nf.matrix()
    assert abs(determinant(T.T)) == 1
    for a, b in zip(nf.blocks, nf.blocks[1:]):
        assert b % a == 0


def test_seeded_pfaffian_and_witness():
    rng = random.Random(8)
    A = random_skew(8, rng, 9)
    T, nf = skew_normal_form(A)
    assert T.apply(A) == nf.matrix()
    assert abs(pfaffian(A)) == pfaffian_abs_product(nf)


def test_pfaffian_small_cases():
    assert pfaffian(SkewIntMatrix([[0, 3], [-3, 0]])) == 3
    assert pfaffian(SkewIntMatrix.zeros(3)) == 0
    A = SkewIntMatrix.from_upper(4, {(0, 1): 1, (0, 2): 2, (0, 3): 3, (1, 2): 4, (1, 3): 5, (2, 3): 6})
    assert pfaffian(A) == 1 * 6 - 2 * 5 + 3 * 4
    assert pfaffian(A) ** 2 == determinant(A.entries)


@given(st.integers(0, 10_000), st.integers(1, 5).map(lambda k: 2 * k))
def test_pfaffian_invariance(seed, n):
    rng = random.Random(seed)
    A = random_skew(n, rng, 5)
    T = random_unimodular(n, rng)
    assert abs(pfaffian(T.apply(A))) == abs(pfaffian(A))
    assert congruent(A, T.apply(A))


def test_witness_inverse():
    rng = random.Random(3)
    T = random_unimodular(5, rng)
    A = random_skew(5, rng)
    assert T.inverse().apply(T.apply(A)) == A


def test_congruent_examples():
    assert not congruent(block_diagonal([2]), block_diagonal([3]))
    for k, ell in [(2, 1), (3, 2), (2, 3)]:
        assert congruent(build_B([1] * k, ell), block_diagonal([1] * (k * ell)))


def test_canonical_blocks():
    assert canonical_blocks([1, 1, 2, 3]) == (1, 1, 1, 6)
    assert canonical_blocks([4, 6]) == (2, 12)
    assert canonical_blocks([]) == ()


def test_direct_sum():
    D = direct_sum(block_diagonal([2]), SkewIntMatrix.zeros(1), block_diagonal([3]))
    assert D.n == 5 and D[0, 1] == 2 and D[3, 4] == 3 and D[2, 3] == 0


# -- A and B families -------------------------------------------------------


def test_build_a_and_v_examples():
    assert build_A(1, 1).to_list() == [[0, 1], [-1, 0]]
    assert build_v(2, 2) == (1, -1, 0)
    assert build_v(3, 2) == (1, -1, 1)
    with pytest.raises(ParityBoundViolation):
        build_A(4, 2)
    check_parity_bound(3, 2)
    with pytest.raises(ParityBoundViolation):
        check_parity_bound(3, 1)


def test_anl_traces():
    assert anl_reduction_trace(build_A(1, 1)) == 1
    assert anl_reduction_trace(build_A(3, 2)) == 3
    assert anl_reduction_trace(build_A(2, 3)) == 2


def _admissible():
    for ell in range(1, 7):
        for n in range(1, 10):
            try:
                check_parity_bound(n, ell)
            except ParityBoundViolation:
                continue
            yield n, ell


@pytest.mark.parametrize("n,ell", list(_admissible()))
def test_anl_table(n, ell):
    A = build_A(n, ell)
    assert congruent(A, expected_A_form(n, ell))
    assert anl_reduction_trace(A) == n


def test_build_b_structure():
    assert build_B([3], 2) == build_A(3, 2)
    B = build_B([2, 3], 2)
    A22, A32 = build_A(2, 2), build_A(3, 2)
    for i in range(4):
        for j in range(4):
            assert B[i, j] == A22[i, j]
            assert B[4 + i, 4 + j] == A32[i, j]
        for j in range(4, 8):
            assert B[i, j] == A22[i, 0]
    T, nf = skew_normal_form(B)
    assert nf.blocks == (1, 1, 1, 6) and pfaffian(B) in (6, -6)


def test_build_b_ell_too_small():
    assert minimal_ell((2, 3)) == 2
    with pytest.raises(EllTooSmall):
        build_B([2], 1)


def _nus(max_len=4, max_entry=5):
    for k in range(1, max_len + 1):
        yield from itertools.product(range(1, max_entry + 1), repeat=k)


@pytest.mark.slow
def test_b_normal_form_table():
    for nu in _nus():
        ell = minimal_ell(nu)
        assert congruent(build_B(nu, ell), expected_B_form(nu, ell)), nu


# -- extended quadratic forms -----------------------------------------------


def test_eqf_relation_example():
    form = ExtendedQuadraticForm(block_diagonal([1]), (2,), (1,), ((0,), (0,)))
    new = eqf_change_basis(form, UnimodularWitness([[1, 0], [1, 1]]))
    assert new.mu == ((0,), (1,))
    assert eqf_change_basis(form, UnimodularWitness.identity(2)) == form


def test_eqf_domain_check():
    with pytest.raises(DomainMismatch):
        ExtendedQuadraticForm(block_diagonal([1]), (24,), (1,))
    ExtendedQuadraticForm(block_diagonal([1]), (24,), (12,))


def _forms(seed):
    rng = random.Random(seed)
    out = []
    for group, p in (((2,), (1,)), ((24,), (12,))):
        n = rng.choice([2, 3, 4, 5])
        lam = random_skew(n, rng, 4)
        mu = tuple((rng.randrange(group[0]),) for _ in range(n))
        out.append(ExtendedQuadraticForm(lam, group, p, mu))
    return out


@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_eqf_round_trip_and_relation(form_seed, t_seed):
    rng = random.Random(t_seed)
    for form in _forms(form_seed):
        T = random_unimodular(form.rank, rng, steps=10)
        new = eqf_change_basis(form, T)
        assert eqf_change_basis(new, T.inverse()) == form
        x = [rng.randint(-3, 3) for _ in range(form.rank)]
        y = [rng.randint(-3, 3) for _ in range(form.rank)]
        xy = [a + b for a, b in zip(x, y)]
        lhs = new.mu_of(xy)
        rhs = new.add(new.add(new.mu_of(x), new.mu_of(y)), new.p(new.pairing(x, y)))
        assert lhs == rhs
        assert new.mu_of([-v for v in x]) == new.neg(new.mu_of(x))


def test_eqf_mu_order_independent():
    form = _forms(5)[1]
    x = [2, -1, 3, 1, -2][: form.rank]
    orders = list(itertools.permutations(range(form.rank)))[:10]
    assert len({form.mu_of(x, o) for o in orders}) == 1


def test_classify_boundary():
    assert classify_boundary(ExtendedQuadraticForm(SkewIntMatrix.zeros(1))) == BoundaryType.SPHERE_BUNDLE
    assert classify_boundary(ExtendedQuadraticForm(block_diagonal([1]))) == BoundaryType.HOMOTOPY_SPHERE
    assert classify_boundary(ExtendedQuadraticForm(block_diagonal([2]))) == BoundaryType.UNCLASSIFIED
    assert BoundaryType.HOMOTOPY_SPHERE.value == "HomotopySphere"


def test_no_floats_in_normal_form():
    T, nf = skew_normal_form(build_B([2, 3], 2))
    assert all(isinstance(x, int) for row in T.T for x in row)
    assert all(isinstance(x, int) for x in nf.blocks)
