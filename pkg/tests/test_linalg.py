import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdchash.errors import DegenerateInputError, ShapeError
from sdchash.linalg import AdamState, adam_update, cosine_matrix, matmul, row_l2_normalize


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestMatmul:
    def test_identity(self, rng):
        a = rng.standard_normal((2, 3))
        np.testing.assert_array_equal(matmul(np.eye(2), a), a)

    def test_hand_case(self):
        np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[0], [1]]), [[2], [4]])

    def test_matches_triple_loop(self, rng):
        a = rng.standard_normal((5, 7))
        b = rng.standard_normal((7, 3))
        assert np.max(np.abs(matmul(a, b) - naive_matmul(a, b))) <= 1e-12

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_associative(self, seed):
        r = np.random.default_rng(seed)
        a, b, c = r.standard_normal((3, 4)), r.standard_normal((4, 5)), r.standard_normal((5, 2))
        np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), atol=1e-9)


class TestNormalize:
    def test_three_four_five(self):
        np.testing.assert_allclose(row_l2_normalize([[3.0, 4.0]]), [[0.6, 0.8]], atol=1e-15)

    def test_idempotent_on_unit_rows(self):
        u = np.array([[1.0, 0.0], [0.6, 0.8]])
        np.testing.assert_allclose(row_l2_normalize(u), u, atol=1e-15)

    def test_random_norms(self, rng):
        out = row_l2_normalize(rng.standard_normal((50, 9)))
        assert np.all(np.abs(np.linalg.norm(out, axis=1) - 1) <= 1e-12)

    def test_zero_row_named(self):
        with pytest.raises(DegenerateInputError, match="row 1"):
            row_l2_normalize([[1.0, 2.0], [0.0, 0.0]])


class TestCosine:
    def test_trivial_cases(self):
        a = np.array([[1.0, 2.0], [-2.0, 1.0], [-1.0, -2.0]])
        c = cosine_matrix(a, a)
        assert c[0, 0] == pytest.approx(1.0)
        assert c[0, 1] == pytest.approx(0.0, abs=1e-15)
        assert c[0, 2] == pytest.approx(-1.0)

    def test_symmetric_unit_diagonal_and_clamped(self, rng):
        a = rng.standard_normal((20, 6))
        c = cosine_matrix(a, a)
        np.testing.assert_allclose(np.diag(c), 1.0, atol=1e-12)
        np.testing.assert_allclose(c, c.T, atol=1e-12)
        assert np.all(np.abs(c) <= 1.0)

    def test_zero_row(self):
        with pytest.raises(DegenerateInputError):
            cosine_matrix([[0.0, 0.0]], [[1.0, 0.0]])


class TestAdam:
    def test_zero_gradient_is_identity(self, rng):
        p = rng.standard_normal((3, 2))
        state = AdamState.for_param(p, lr=0.1)
        q = p
        for _ in range(25):
            q = adam_update(q, np.zeros_like(p), state)
        np.testing.assert_array_equal(q, p)
        assert state.step == 25

    def test_first_step_moves_by_lr(self):
        # m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        for g in (0.3, -2.0):
            state = AdamState.for_param(np.zeros(1), lr=1e-3)
            out = adam_update(np.array([1.0]), np.array([g]), state)
            expected = 1.0 - 1e-3 * g / (abs(g) + 1e-8)
            assert out[0] == pytest.approx(expected, abs=1e-15)
            assert abs(out[0] - (1.0 - 1e-3 * np.sign(g))) < 1e-10

    def test_quadratic_converges(self):
        w = np.array([1.0])
        state = AdamState.for_param(w, lr=0.1)
        for _ in range(100):
            w = adam_update(w, 2 * w, state)
        assert abs(w[0]) < 0.2

    def test_step_counter_and_shape_check(self):
        state = AdamState.for_param(np.zeros((2, 2)))
        adam_update(np.zeros((2, 2)), np.ones((2, 2)), state)
        assert state.step == 1
        with pytest.raises(ShapeError):
            adam_update(np.zeros((2, 2)), np.ones((2, 3)), state)
