"""Low-rank PMF model: queries, normalization, serialization."""

import numpy as np
import pytest

from beamsel.pmf import (CpdPmfModel, ZeroEvidenceError, beam_pair_marginal,
                         evaluate_joint, load_model, materialize_full_tensor,
                         posterior_over_beams, sample_indices, save_model)


def random_model(rng, dims=(3, 3, 4, 4), rank=3):
    return CpdPmfModel.random(dims, rank, rng)


def uniform_model(dims, rank):
    lam = np.full(rank, 1.0 / rank)
    factors = [np.full((i, rank), 1.0 / i) for i in dims]
    return CpdPmfModel(lam, *factors)


class TestEvaluateJoint:
    def test_rank_one_factorizes(self, rng):
        model = random_model(rng, rank=1)
        for idx in [(0, 1, 2, 3), (2, 2, 0, 1)]:
            want = (model.factor_x[idx[0], 0] * model.factor_y[idx[1], 0]
                    * model.factor_f[idx[2], 0] * model.factor_w[idx[3], 0])
            assert abs(evaluate_joint(model, *idx) - want) < 1e-15

    def test_uniform_model(self):
        model = uniform_model((3, 3, 4, 4), 2)
        assert abs(evaluate_joint(model, 0, 0, 0, 0) - 1.0 / 144) < 1e-12

    def test_full_enumeration_sums_to_one(self, rng):
        model = random_model(rng)
        total = sum(evaluate_joint(model, a, b, c, d)
                    for a in range(3) for b in range(3)
                    for c in range(4) for d in range(4))
        assert abs(total - 1.0) < 1e-10

    def test_out_of_range_raises(self, rng):
        model = random_model(rng)
        with pytest.raises(IndexError):
            evaluate_joint(model, 3, 0, 0, 0)


class TestPosteriorOverBeams:
    def test_rank_one_is_position_independent_outer_product(self, rng):
        model = random_model(rng, rank=1)
        want = np.outer(model.factor_f[:, 0], model.factor_w[:, 0])
        for i_x, i_y in [(0, 0), (2, 1)]:
            got = posterior_over_beams(model, i_x, i_y)
            np.testing.assert_allclose(got, want / want.sum(), atol=1e-12)

    def test_normalization(self, rng):
        for _ in range(10):
            model = random_model(rng, dims=(4, 5, 6, 3), rank=4)
            got = posterior_over_beams(model, 1, 2)
            assert abs(got.sum() - 1.0) < 1e-10

    def test_matches_dense_conditional(self, rng):
        model = random_model(rng, dims=(4, 4, 4, 4), rank=3)
        dense = materialize_full_tensor(model)
        for i_x, i_y in [(0, 0), (3, 2), (1, 3)]:
            slice_ = dense[i_x, i_y]
            want = slice_ / slice_.sum()
            np.testing.assert_allclose(posterior_over_beams(model, i_x, i_y),
                                       want, atol=1e-8)

    def test_zero_evidence_raises(self):
        lam = np.array([1.0])
        factor_x = np.array([[0.0], [1.0]])
        others = [np.full((3, 1), 1 / 3)] * 3
        model = CpdPmfModel(lam, factor_x, *others)
        with pytest.raises(ZeroEvidenceError):
            posterior_over_beams(model, 0, 0)


class TestMaterialize:
    def test_uniform_rank_one(self):
        model = uniform_model((2, 2, 2, 2), 1)
        np.testing.assert_allclose(materialize_full_tensor(model),
                                   np.full((2, 2, 2, 2), 1 / 16), atol=1e-15)

    def test_nonnegative_and_normalized(self, rng):
        for _ in range(5):
            model = random_model(rng, dims=(5, 4, 6, 3), rank=4)
            dense = materialize_full_tensor(model)
            assert np.all(dense >= 0)
            assert abs(dense.sum() - 1.0) < 1e-8

    def test_reconstructs_known_rank_two_pmf(self, rng):
        model = random_model(rng, dims=(4, 3, 5, 2), rank=2)
        dense = np.zeros(model.dims)
        for r in range(2):
            dense += model.loading[r] * np.einsum(
                "a,b,c,d->abcd", model.factor_x[:, r], model.factor_y[:, r],
                model.factor_f[:, r], model.factor_w[:, r])
        np.testing.assert_allclose(materialize_full_tensor(model), dense, atol=1e-10)

    def test_size_guard(self):
        model = uniform_model((100, 100, 100, 10), 1)
        with pytest.raises(ValueError):
            materialize_full_tensor(model)

    def test_entrywise_equals_evaluate_joint(self, rng):
        model = random_model(rng, dims=(3, 2, 4, 3), rank=3)
        dense = materialize_full_tensor(model)
        for a in range(3):
            for b in range(2):
                for c in range(4):
                    for d in range(3):
                        assert abs(dense[a, b, c, d]
                                   - evaluate_joint(model, a, b, c, d)) < 1e-14


class TestModelInvariants:
    def test_component_permutation_invariance(self, rng):
        model = random_model(rng, dims=(4, 4, 5, 3), rank=4)
        perm = np.array([2, 0, 3, 1])
        permuted = CpdPmfModel(model.loading[perm], model.factor_x[:, perm],
                               model.factor_y[:, perm], model.factor_f[:, perm],
                               model.factor_w[:, perm])
        np.testing.assert_allclose(materialize_full_tensor(model),
                                   materialize_full_tensor(permuted), atol=1e-12)

    def test_conditioning_consistency_small_dims(self, rng):
        model = random_model(rng, dims=(6, 6, 6, 6), rank=5)
        dense = materialize_full_tensor(model)
        for i_x in range(6):
            for i_y in range(6):
                want = dense[i_x, i_y] / dense[i_x, i_y].sum()
                np.testing.assert_allclose(posterior_over_beams(model, i_x, i_y),
                                           want, atol=1e-8)

    def test_marginal_consistency(self, rng):
        # mixing conditionals with the position marginal recovers the
        # beam-pair marginal
        model = random_model(rng, dims=(4, 3, 5, 2), rank=3)
        dense = materialize_full_tensor(model)
        position_marginal = dense.sum(axis=(2, 3))
        mixed = np.zeros((5, 2))
        for i_x in range(4):
            for i_y in range(3):
                mixed += position_marginal[i_x, i_y] * posterior_over_beams(model, i_x, i_y)
        np.testing.assert_allclose(mixed, beam_pair_marginal(model), atol=1e-8)

    def test_free_parameter_count(self, rng):
        model = random_model(rng, dims=(10, 9, 8, 4), rank=5)
        want = (5 - 1) + 5 * ((10 - 1) + (9 - 1) + (8 - 1) + (4 - 1))
        assert model.n_free_parameters == want

    def test_constructor_rejects_bad_simplex(self):
        with pytest.raises(ValueError):
            CpdPmfModel(np.array([0.6, 0.5]), *[np.full((3, 2), 1 / 3)] * 4)
        with pytest.raises(ValueError):
            CpdPmfModel(np.array([0.5, 0.5]),
                        np.array([[0.9, 0.5], [0.2, 0.5]]),
                        *[np.full((3, 2), 1 / 3)] * 3)


class TestSampling:
    def test_sample_distribution_converges(self, rng):
        model = random_model(rng, dims=(3, 3, 3, 3), rank=2)
        draws = sample_indices(model, 200_000, rng)
        dense = materialize_full_tensor(model)
        hist = np.zeros(model.dims)
        np.add.at(hist, tuple(draws.T), 1.0)
        hist /= hist.sum()
        assert 0.5 * np.abs(hist - dense).sum() < 0.02


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        model = random_model(rng, dims=(6, 5, 8, 4), rank=4)
        path = tmp_path / "model.bsel"
        save_model(model, path, meta={"grid": [0.0, 0.0, 5.0, 6, 5]})
        loaded, meta = load_model(path)
        np.testing.assert_array_equal(loaded.loading, model.loading)
        np.testing.assert_array_equal(loaded.factor_x, model.factor_x)
        np.testing.assert_array_equal(loaded.factor_w, model.factor_w)
        assert meta["grid"] == [0.0, 0.0, 5.0, 6, 5]
        # saving again reproduces the identical file
        path2 = tmp_path / "model2.bsel"
        save_model(loaded, path2, meta={"grid": [0.0, 0.0, 5.0, 6, 5]})
        assert path.read_bytes() == path2.read_bytes()
