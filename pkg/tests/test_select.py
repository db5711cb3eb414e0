"""MAP selection, top-N lists, and RSS refinement."""

import logging

import numpy as np
import pytest

from beamsel.codebook import BeamPair, exhaustive_search, rss_table
from beamsel.dataset import Grid
from beamsel.pmf import CpdPmfModel, ZeroEvidenceError, materialize_full_tensor
from beamsel.select import (CandidateList, bin_for_position, refine_by_rss,
                            refine_from_table, select_map, top_n)
from conftest import random_channel


def random_model(rng, dims=(4, 4, 4, 4), rank=3):
    return CpdPmfModel.random(dims, rank, rng)


def zero_evidence_model():
    lam = np.array([1.0])
    factor_x = np.array([[0.0], [1.0]])
    others = [np.full((3, 1), 1 / 3)] * 3
    return CpdPmfModel(lam, factor_x, *others)


class TestSelectMap:
    def test_rank_one_is_position_independent(self, rng):
        model = random_model(rng, rank=1)
        want_flat = int(np.argmax(np.outer(model.factor_f[:, 0],
                                           model.factor_w[:, 0]).ravel()))
        for i_x in range(4):
            for i_y in range(4):
                assert select_map(model, i_x, i_y).flat(4) == want_flat

    def test_matches_materialized_conditional(self, rng):
        for _ in range(10):
            model = random_model(rng)
            dense = materialize_full_tensor(model)
            for i_x, i_y in [(0, 0), (2, 3)]:
                want = int(np.argmax(dense[i_x, i_y].ravel()))
                assert select_map(model, i_x, i_y).flat(4) == want

    def test_trained_on_deterministic_mapping(self, rng):
        # every bin maps to exactly one pair through a low-rank block
        # pattern, each bin observed 25 times
        from beamsel.vb import VbHyperparams, fit_indices

        n_x = n_y = 6
        i_f, i_w = 8, 4
        rows = []
        for i_x in range(n_x):
            for i_y in range(n_y):
                f = (2 * (i_x // 2) + (i_y // 2)) % i_f
                w = ((i_x // 2) + (i_y // 2)) % i_w
                rows += [[i_x, i_y, f, w]] * 25
        data = np.array(rows, dtype=np.int64)
        result = fit_indices(data, (n_x, n_y, i_f, i_w),
                             VbHyperparams(r_init=15, rng_seed=0))
        hits = 0
        for i_x in range(n_x):
            for i_y in range(n_y):
                f = (2 * (i_x // 2) + (i_y // 2)) % i_f
                w = ((i_x // 2) + (i_y // 2)) % i_w
                pair = select_map(result.model, i_x, i_y)
                hits += (pair.f_index - 1 == f and pair.w_index - 1 == w)
        assert hits >= 0.99 * n_x * n_y

    def test_zero_evidence_behavior(self):
        model = zero_evidence_model()
        with pytest.raises(ZeroEvidenceError):
            select_map(model, 0, 0)
        pair = select_map(model, 0, 0, fallback_to_marginal=True)
        assert isinstance(pair, BeamPair)


class TestTopN:
    def test_full_list_scores_sum_to_one(self, rng):
        model = random_model(rng)
        full = top_n(model, 1, 2, 16)
        assert len(full) == 16
        assert abs(full.scores.sum() - 1.0) < 1e-8

    def test_singleton_equals_select_map(self, rng):
        for _ in range(5):
            model = random_model(rng)
            assert top_n(model, 0, 3, 1).pairs[0] == select_map(model, 0, 3)

    def test_matches_enumeration_with_tie_break(self, rng):
        for _ in range(10):
            model = random_model(rng)
            dense = materialize_full_tensor(model)
            flat = dense[2, 1].ravel()
            order = sorted(range(16), key=lambda k: (-flat[k], k))[:5]
            got = [p.flat(4) for p in top_n(model, 2, 1, 5).pairs]
            assert got == order

    def test_prefix_property(self, rng):
        model = random_model(rng)
        for n in range(1, 16):
            shorter = top_n(model, 3, 0, n).pairs
            longer = top_n(model, 3, 0, n + 1).pairs
            assert longer[:n] == shorter

    def test_ranking_invariant_to_positive_scaling(self, rng):
        scores = rng.random(16)
        scores[3] = scores[7]  # force one tie
        for c in (1e-7, 1.0, 3.14, 1e9):
            np.testing.assert_array_equal(
                np.argsort(-scores, kind="stable"),
                np.argsort(-(c * scores), kind="stable"))

    def test_bounds_checked(self, rng):
        model = random_model(rng)
        with pytest.raises(ValueError):
            top_n(model, 0, 0, 0)
        with pytest.raises(ValueError):
            top_n(model, 0, 0, 17)


class TestRefineByRss:
    def test_superset_containing_optimum_returns_it(self, cb_tx, cb_rx, radio, rng):
        h = random_channel(rng)
        best, table = exhaustive_search(h, cb_tx, cb_rx, radio)
        others = [BeamPair.from_flat(k, 4) for k in (0, 17, 200)
                  if k != best.flat(4)]
        candidates = CandidateList(pairs=tuple([best] + others),
                                   scores=np.array([0.4, 0.3, 0.2, 0.1])[: 1 + len(others)])
        assert refine_by_rss(candidates, h, cb_tx, cb_rx, radio) == best

    def test_single_candidate_unchanged(self, cb_tx, cb_rx, radio, rng):
        h = random_channel(rng)
        only = BeamPair(5, 2)
        candidates = CandidateList(pairs=(only,), scores=np.array([1.0]))
        assert refine_by_rss(candidates, h, cb_tx, cb_rx, radio) == only

    def test_equals_restricted_brute_force(self, cb_tx, cb_rx, radio, rng):
        for _ in range(5):
            h = random_channel(rng)
            table = rss_table(h, cb_tx, cb_rx, radio)
            flats = rng.choice(256, size=8, replace=False)
            pairs = tuple(BeamPair.from_flat(int(k), 4) for k in flats)
            candidates = CandidateList(pairs=pairs, scores=np.linspace(1, 0.1, 8))
            got = refine_by_rss(candidates, h, cb_tx, cb_rx, radio)
            want_flat = max(flats, key=lambda k: table.ravel()[k])
            assert got.flat(4) == int(want_flat)
            assert refine_from_table(np.asarray(flats), table) == int(want_flat)

    def test_refined_rss_monotone_in_list_length(self, cb_tx, cb_rx, radio, rng):
        model = random_model(rng, dims=(4, 4, 64, 4), rank=3)
        h = random_channel(rng)
        table = rss_table(h, cb_tx, cb_rx, radio)
        previous = -1.0
        for n in (1, 2, 4, 8, 16, 64, 256):
            candidates = top_n(model, 1, 1, n)
            chosen = refine_by_rss(candidates, h, cb_tx, cb_rx, radio)
            value = table[chosen.f_index - 1, chosen.w_index - 1]
            assert value >= previous
            previous = value


class TestCandidateList:
    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            CandidateList(pairs=(BeamPair(1, 1), BeamPair(1, 1)),
                          scores=np.array([0.5, 0.5]))

    def test_rejects_increasing_scores(self):
        with pytest.raises(ValueError):
            CandidateList(pairs=(BeamPair(1, 1), BeamPair(1, 2)),
                          scores=np.array([0.1, 0.5]))


def test_bin_for_position_clamps_and_warns(caplog):
    grid = Grid(0.0, 0.0, 5.0, 4, 4)
    with caplog.at_level(logging.WARNING, logger="beamsel.select"):
        assert bin_for_position(grid, -3.0, 999.0) == (0, 3)
    assert "clamping" in caplog.text
    caplog.clear()
    with caplog.at_level(logging.WARNING, logger="beamsel.select"):
        assert bin_for_position(grid, 7.5, 2.5) == (1, 0)
    assert caplog.text == ""
