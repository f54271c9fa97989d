import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tnle.tensor import (
    Tensor3,
    bdiag,
    circ,
    fold,
    frontal_slice,
    identity_slice_tensor,
    mat_vec,
    t_product,
    unfold,
)


def rand_tensor(rng, n1, n2, n3):
    return Tensor3(rng.normal(size=(n3, n1, n2)))


def brute_t_product(a, b):
    return fold(circ(a) @ mat_vec(b), a.n3)


dims = st.integers(1, 5)


@st.composite
def tensor_pairs(draw):
    n1, n2, n4 = draw(dims), draw(dims), draw(dims)
    n3 = draw(st.integers(1, 4))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return rand_tensor(rng, n1, n2, n3), rand_tensor(rng, n2, n4, n3)


def test_frontal_slice_examples():
    assert np.array_equal(frontal_slice(Tensor3.zeros(2, 2, 3), 2), np.zeros((2, 2)))
    assert np.array_equal(frontal_slice(identity_slice_tensor(2, 3, 1), 1), np.eye(2))
    blocks = [np.arange(6.0).reshape(3, 2) + 10 * k for k in range(3)]
    t = Tensor3.from_slices(blocks)
    assert t.shape == (3, 2, 3)
    assert np.array_equal(frontal_slice(t, 3), blocks[2])


@pytest.mark.parametrize("i", [0, 4, -1])
def test_frontal_slice_out_of_range(i):
    with pytest.raises(IndexError, match="slice index"):
        frontal_slice(Tensor3.zeros(2, 2, 3), i)


def test_slices_reassemble_exactly():
    t = rand_tensor(np.random.default_rng(1), 4, 3, 3)
    again = Tensor3.from_slices([frontal_slice(t, i) for i in range(1, 4)])
    assert again == t


def test_tensor_is_immutable():
    t = Tensor3.zeros(2, 2, 2)
    with pytest.raises(ValueError):
        t.data[0, 0, 0] = 1.0


def test_circ_scalar_slices_matches_displayed_circulant():
    v = np.array([1.0, 2.0, 3.0, 4.0])  # v0..v3
    t = Tensor3(v.reshape(4, 1, 1))
    expected = np.array([
        [1, 4, 3, 2],
        [2, 1, 4, 3],
        [3, 2, 1, 4],
        [4, 3, 2, 1],
    ], dtype=float)
    assert np.array_equal(circ(t), expected)


def test_circ_degenerate_and_two_slices():
    rng = np.random.default_rng(2)
    single = rand_tensor(rng, 3, 2, 1)
    assert np.array_equal(circ(single), single.data[0])
    t = rand_tensor(rng, 2, 2, 2)
    a1, a2 = t.data
    assert np.array_equal(circ(t), np.block([[a1, a2], [a2, a1]]))


@given(n3=st.integers(1, 5), seed=st.integers(0, 1000))
def test_circ_block_shift_structure(n3, seed):
    t = rand_tensor(np.random.default_rng(seed), 2, 3, n3)
    c = circ(t)
    blk = lambda p, q: c[2 * p:2 * p + 2, 3 * q:3 * q + 3]
    for p in range(n3):
        for q in range(n3):
            assert np.array_equal(blk(p, q), blk((p + 1) % n3, (q + 1) % n3))


def test_mat_vec_examples():
    rng = np.random.default_rng(3)
    single = rand_tensor(rng, 3, 2, 1)
    assert np.array_equal(mat_vec(single), single.data[0])
    expected = np.zeros((6, 2))
    expected[2:4] = np.eye(2)
    assert np.array_equal(mat_vec(identity_slice_tensor(2, 3, 2)), expected)
    blocks = [rng.normal(size=(3, 2)) for _ in range(3)]
    assert np.array_equal(mat_vec(Tensor3.from_slices(blocks)), np.vstack(blocks))


def test_fold_inverts_mat_vec():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n1, n2, n3 = rng.integers(1, 6, size=3)
        t = rand_tensor(rng, n1, n2, n3)
        assert fold(mat_vec(t), n3) == t
    assert fold(np.zeros((6, 2)), 3) == Tensor3.zeros(2, 2, 3)
    i1 = identity_slice_tensor(4, 3, 1)
    assert fold(mat_vec(i1), 3) == i1


def test_fold_rejects_bad_shape():
    with pytest.raises(ValueError, match="fold shape"):
        fold(np.zeros((5, 2)), 3)


@settings(max_examples=50, deadline=None)
@given(tensor_pairs())
def test_t_product_matches_definition(pair):
    a, b = pair
    got = t_product(a, b)
    assert got.shape == (a.n1, b.n2, a.n3)
    assert np.max(np.abs(got.data - brute_t_product(a, b).data)) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(tensor_pairs())
def test_t_product_identity_law(pair):
    a, _ = pair
    ident = identity_slice_tensor(a.n2, a.n3, 1)
    assert np.max(np.abs(t_product(a, ident).data - a.data)) <= 1e-15


def test_t_product_shape_mismatch():
    rng = np.random.default_rng(5)
    with pytest.raises(ValueError, match="t-product shape"):
        t_product(rand_tensor(rng, 2, 3, 3), rand_tensor(rng, 2, 2, 3))
    with pytest.raises(ValueError, match="t-product shape"):
        t_product(rand_tensor(rng, 2, 3, 3), rand_tensor(rng, 3, 2, 2))


def test_unfold_with_second_identity_cycles_slices():
    rng = np.random.default_rng(6)
    s1, s2, s3 = (rng.normal(size=(4, 4)) for _ in range(3))
    b = Tensor3.from_slices([s1, s2, s3])
    stacked = unfold(t_product(b, identity_slice_tensor(4, 3, 2)))
    assert np.array_equal(stacked, np.vstack([s3, s1, s2]))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_slice_shift_law_follows_circ_column(k):
    rng = np.random.default_rng(10 + k)
    b = rand_tensor(rng, 3, 3, 3)
    stacked = unfold(t_product(b, identity_slice_tensor(3, 3, k)))
    # block column k of circ(B)
    assert np.array_equal(stacked, circ(b)[:, 3 * (k - 1):3 * k])


def test_identity_slice_tensor():
    t = identity_slice_tensor(2, 3, 1)
    assert np.array_equal(t.data[0], np.eye(2))
    assert not t.data[1:].any()
    t2 = identity_slice_tensor(2, 3, 2)
    assert np.array_equal(t2.data[1], np.eye(2))
    with pytest.raises(IndexError):
        identity_slice_tensor(2, 3, 4)


def test_bdiag_examples():
    d = bdiag([[[2.0]], [[3.0]], [[5.0]]])
    assert d.r == 3
    assert np.allclose(d.eigenvalues(), [2, 3, 5])
    a = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert np.allclose(bdiag([a]).eigenvalues(), [1, 3])
    dense = bdiag([a, np.eye(1) * 7]).dense()
    assert dense.shape == (3, 3)
    assert dense[0, 2] == 0 and dense[2, 2] == 7


def test_bdiag_rejects_non_square():
    with pytest.raises(ValueError, match="square"):
        bdiag([np.zeros((2, 3))])
