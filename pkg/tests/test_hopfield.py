import numpy as np
import pytest

from infohop.errors import DimensionError, ParameterError
from infohop.hopfield import (check_weights, hebbian_train, load_weights,
                              load_weights_text, recall, recall_batch,
                              recurrent_drive, save_weights, save_weights_text,
                              step_sync)
from infohop.patterns import gen_iid_patterns


def naive_matvec(w, y):
    n = len(y)
    out = np.zeros(n)
    for i in range(n):
        for j in range(n):
            out[i] += w[i][j] * y[j]
    return out


class TestRecurrentDrive:
    def test_zero_weights(self):
        assert np.array_equal(recurrent_drive(np.zeros((4, 4)), np.ones(4)), np.zeros(4))

    def test_single_pattern_drive(self):
        xi = gen_iid_patterns(1, 6, 0)[0]
        w = hebbian_train(xi[None, :])
        # Zero diagonal removes the self term, leaving (N-1) * xi.
        assert np.allclose(recurrent_drive(w, xi), 5.0 * xi)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(5)
        w = rng.normal(size=(3, 3))
        np.fill_diagonal(w, 0.0)
        y = gen_iid_patterns(1, 3, 1)[0]
        assert np.allclose(recurrent_drive(w, y), naive_matvec(w, y), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            recurrent_drive(np.zeros((3, 3)), np.ones(4))


class TestStepSync:
    def test_stored_pattern_is_fixed(self):
        xi = gen_iid_patterns(1, 8, 2)[0]
        w = hebbian_train(xi[None, :])
        assert np.array_equal(step_sync(w, xi), xi)

    def test_tie_rule_all_plus_one(self):
        state = gen_iid_patterns(1, 5, 3)[0]
        assert np.array_equal(step_sync(np.zeros((5, 5)), state), np.ones(5))

    def test_matches_sign_of_oracle(self):
        rng = np.random.default_rng(7)
        w = rng.normal(size=(3, 3))
        np.fill_diagonal(w, 0.0)
        y = gen_iid_patterns(1, 3, 9)[0]
        drive = naive_matvec(w, y)
        expected = np.where(drive >= 0, 1.0, -1.0)
        assert np.array_equal(step_sync(w, y), expected)

    def test_sign_flip_equivariance(self):
        # Holds whenever no drive is exactly zero.
        rng = np.random.default_rng(11)
        w = rng.normal(size=(6, 6))
        np.fill_diagonal(w, 0.0)
        y = gen_iid_patterns(1, 6, 12)[0]
        if np.all(np.abs(recurrent_drive(w, y)) > 1e-12):
            assert np.array_equal(step_sync(w, -y), -step_sync(w, y))


class TestRecall:
    def test_fixed_point_in_one_step(self):
        xi = gen_iid_patterns(1, 10, 4)[0]
        w = hebbian_train(xi[None, :])
        result = recall(w, xi)
        assert result.termination == "fixed_point"
        assert result.steps == 1
        assert np.array_equal(result.final_state, xi)

    def test_two_cycle_detected(self):
        # Mutual inhibition flips the all-ones state to all-minus and back.
        w = np.array([[0.0, -1.0], [-1.0, 0.0]])
        init = np.array([1.0, 1.0])
        assert np.array_equal(step_sync(w, init), -init)
        result = recall(w, init)
        assert result.termination == "limit_cycle"
        assert result.steps == 2

    def test_zero_matrix_converges_to_plus(self):
        init = np.array([1.0, -1.0, -1.0])
        result = recall(np.zeros((3, 3)), init)
        assert result.termination == "fixed_point"
        assert np.array_equal(result.final_state, np.ones(3))

    def test_max_iterations(self):
        w = np.array([[0.0, -1.0], [-1.0, 0.0]])
        init = np.array([1.0, 1.0])
        result = recall(w, init, max_iter=1)
        assert result.termination == "max_iterations"
        assert result.steps == 1

    def test_deterministic(self):
        pats = gen_iid_patterns(3, 12, 5)
        w = hebbian_train(pats)
        init = gen_iid_patterns(1, 12, 6)[0]
        a = recall(w, init)
        b = recall(w, init)
        assert np.array_equal(a.final_state, b.final_state)
        assert a.steps == b.steps and a.termination == b.termination

    def test_bad_max_iter(self):
        with pytest.raises(ParameterError):
            recall(np.zeros((2, 2)), np.ones(2), max_iter=0)


class TestRecallBatch:
    def test_matches_single_recall(self):
        rng = np.random.default_rng(13)
        for trial in range(20):
            n = int(rng.integers(3, 9))
            w = rng.normal(size=(n, n))
            np.fill_diagonal(w, 0.0)
            if trial % 2:
                w = w + w.T  # symmetric cases converge or 2-cycle
            inits = gen_iid_patterns(5, n, int(rng.integers(1e6)))
            batch = recall_batch(w, inits, max_iter=30)
            for p in range(5):
                single = recall(w, inits[p], max_iter=30)
                assert np.array_equal(batch[p], single.final_state)


class TestHebbian:
    def test_single_pattern_outer_product(self):
        xi = gen_iid_patterns(1, 5, 8)[0]
        w = hebbian_train(xi[None, :])
        expected = np.outer(xi, xi)
        np.fill_diagonal(expected, 0.0)
        assert np.array_equal(w, expected)

    def test_two_orthogonal_patterns_sum(self):
        pats = np.array([[1.0, 1.0, -1.0, -1.0], [1.0, -1.0, 1.0, -1.0]])
        w = hebbian_train(pats)
        expected = np.zeros((4, 4))
        for p in range(2):  # brute-force sum oracle
            for i in range(4):
                for j in range(4):
                    if i != j:
                        expected[i, j] += pats[p, i] * pats[p, j]
        assert np.array_equal(w, expected)

    def test_symmetric_zero_diagonal(self):
        pats = gen_iid_patterns(7, 9, 10)
        w = hebbian_train(pats)
        assert np.array_equal(w, w.T)
        assert np.all(np.diagonal(w) == 0.0)

    def test_stored_pattern_and_flip_are_fixed_points(self):
        xi = gen_iid_patterns(1, 7, 14)[0]
        w = hebbian_train(xi[None, :])
        assert np.array_equal(step_sync(w, xi), xi)
        assert np.array_equal(step_sync(w, -xi), -xi)


class TestWeightPersistence:
    def test_binary_round_trip(self, tmp_path):
        w = hebbian_train(gen_iid_patterns(4, 6, 1))
        path = tmp_path / "w.amw"
        save_weights(path, w)
        assert np.array_equal(load_weights(path), w)

    def test_binary_header(self, tmp_path):
        w = hebbian_train(gen_iid_patterns(2, 3, 2))
        path = tmp_path / "w.amw"
        save_weights(path, w)
        blob = path.read_bytes()
        assert blob[:4] == b"AMW1"
        assert int.from_bytes(blob[4:12], "little") == 3
        assert len(blob) == 12 + 9 * 8

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "w.amw"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ParameterError):
            load_weights(path)

    def test_text_round_trip_lossless(self, tmp_path):
        rng = np.random.default_rng(3)
        w = rng.normal(size=(5, 5)) * 1e-7
        np.fill_diagonal(w, 0.0)
        path = tmp_path / "w.txt"
        save_weights_text(path, w)
        assert np.array_equal(load_weights_text(path), w)

    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(ParameterError):
            check_weights(np.ones((3, 3)))
