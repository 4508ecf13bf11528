import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdchash.errors import DomainError, EncodingError, ShapeError
from sdchash.hashing import HashModel, PackedCodes, encode, forward, init_model, pack, sign_codes, unpack


class TestForward:
    def test_identity_model(self, rng):
        x = rng.standard_normal((4, 3))
        np.testing.assert_array_equal(forward(HashModel(np.eye(3), np.zeros(3)), x), x)

    def test_zero_input_gives_bias(self):
        m = HashModel(np.ones((3, 2)), [0.5, -1.0])
        np.testing.assert_array_equal(forward(m, np.zeros((2, 3))), [[0.5, -1.0]] * 2)

    def test_matches_naive(self, rng):
        m = init_model(6, 4, seed=3)
        x = rng.standard_normal((5, 6))
        want = np.array([[sum(x[i, k] * m.weights[k, j] for k in range(6)) + m.bias[j]
                          for j in range(4)] for i in range(5)])
        assert np.max(np.abs(forward(m, x) - want)) <= 1e-12

    def test_linear(self, rng):
        m = HashModel(rng.standard_normal((5, 3)), rng.standard_normal(3))
        a, b = rng.standard_normal((2, 4, 5))
        lhs = forward(m, a + b)
        rhs = forward(m, a) + forward(m, b) - m.bias
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            forward(init_model(4, 2), np.ones((1, 3)))


class TestSign:
    def test_zero_maps_to_plus(self):
        np.testing.assert_array_equal(sign_codes([0.3, -2.0, 0.0]), [1, -1, 1])

    def test_idempotent(self, rng):
        f = rng.standard_normal((10, 8))
        s = sign_codes(f)
        np.testing.assert_array_equal(sign_codes(s), s)
        assert set(np.unique(s)) <= {-1.0, 1.0}


class TestInitModel:
    def test_deterministic(self):
        a, b, c = init_model(8, 4, 1), init_model(8, 4, 1), init_model(8, 4, 2)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert not np.array_equal(a.weights, c.weights)
        np.testing.assert_array_equal(a.bias, 0.0)

    def test_column_variance(self):
        m = init_model(512, 16, seed=0)
        var = m.weights.var(axis=0)
        assert np.all(np.abs(var * 512 - 1) < 0.2)

    def test_zero_dims(self):
        with pytest.raises(DomainError):
            init_model(0, 3)


class TestPacking:
    def test_saturated_byte(self):
        p = pack(np.ones((1, 8)))
        assert p.words[0, 0] == 0xFF
        assert p.words.astype("<u8").tobytes()[0] == 0xFF

    def test_all_minus_is_zero(self):
        assert not pack(-np.ones((3, 70))).words.any()

    def test_unpack_zero_words(self):
        np.testing.assert_array_equal(unpack(PackedCodes(np.zeros((1, 1), np.uint64), 16)), -np.ones((1, 16)))

    def test_unpack_single_bit(self):
        np.testing.assert_array_equal(unpack(PackedCodes(np.array([[1]], np.uint64), 1)), [[1.0]])

    def test_bit_positions(self):
        codes = -np.ones((1, 130))
        codes[0, [0, 63, 64, 129]] = 1
        w = pack(codes).words[0]
        assert w[0] == (1 | (1 << 63))
        assert w[1] == 1
        assert w[2] == 2

    def test_random_roundtrip(self, rng):
        codes = np.where(rng.random((1000, 48)) < 0.5, 1.0, -1.0)
        np.testing.assert_array_equal(unpack(pack(codes)), codes)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 128), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_bijection(self, k, n, seed):
        codes = np.where(np.random.default_rng(seed).random((n, k)) < 0.5, 1.0, -1.0)
        packed = pack(codes)
        np.testing.assert_array_equal(unpack(packed), codes)
        if k % 64:
            assert not np.any(packed.words[:, -1] >> np.uint64(k % 64))

    def test_rejects_non_sign(self):
        with pytest.raises(EncodingError, match=r"\(1, 2\)"):
            pack([[1, 1, 1], [1, -1, 0.5]])


class TestEncode:
    def test_identity_model_on_sign_features(self, rng):
        x = np.where(rng.random((20, 10)) < 0.5, 1.0, -1.0)
        codes = encode(HashModel(np.eye(10), np.zeros(10)), x)
        np.testing.assert_array_equal(unpack(codes), x)

    def test_batched_equals_rowwise(self, rng):
        m = init_model(7, 33, seed=5)
        x = rng.standard_normal((50, 7))
        full = encode(m, x, batch_size=8)
        for i in range(50):
            assert encode(m, x[i : i + 1]) == full[i]
        assert encode(m, x) == full
