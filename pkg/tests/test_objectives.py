import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    naive_clustering_loss,
    naive_contrastive,
    naive_pair_sim,
    naive_skill_loss,
    naive_structural_loss,
)
from subteam.encoder import row_softmax
from subteam.errors import ValidationError
from subteam.graph import Team
from subteam.objectives import (
    LossWeights,
    clustering_loss,
    contrastive_loss,
    cosine,
    pair_sim,
    skill_loss,
    structural_loss,
    team_embedding,
    total_loss,
)


class TestTeamEmbedding:
    def test_single_member(self):
        z = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(team_embedding((1,), z), [3.0, 4.0])

    def test_mean_of_two(self):
        z = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert np.array_equal(team_embedding((0, 1), z), [0.5, 0.5])

    def test_identical_rows_idempotent(self):
        z = np.tile([2.0, 5.0], (4, 1))
        assert np.array_equal(team_embedding(Team((0, 1, 2, 3)), z), [2.0, 5.0])

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            team_embedding((), np.eye(2))


class TestCosine:
    def test_self_similarity(self):
        v = np.array([1.0, 2.0, -3.0])
        assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_analytic_value(self):
        assert cosine(np.array([1.0, 1.0]), np.array([1.0, 0.0])) == pytest.approx(
            0.70710678, abs=1e-8
        )

    def test_zero_vector_convention(self):
        assert cosine(np.zeros(3), np.array([1.0, 0.0, 0.0])) == 0.0

    @given(
        st.lists(st.floats(-10, 10), min_size=2, max_size=6),
        st.floats(0.01, 100),
        st.floats(0.01, 100),
    )
    @settings(max_examples=100)
    def test_scale_invariance(self, vals, alpha, beta):
        u = np.array(vals)
        v = np.roll(u, 1) + 1.0
        assert cosine(alpha * u, beta * v) == pytest.approx(cosine(u, v), abs=1e-12)


class TestContrastiveLoss:
    def test_identical_embeddings_give_minus_one(self):
        z = np.tile([1.0, 1.0], (4, 1))
        batch = [(Team((0, 1, 2, 3)), (0, 1))]
        assert contrastive_loss(batch, z) == pytest.approx(-1.0)

    def test_orthogonal_gives_zero(self):
        z = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert contrastive_loss([((0, 1), (0,))], z) == pytest.approx(0.0)

    def test_mean_of_two_pairs(self):
        # pair 1 similarity 1, pair 2 similarity 0 -> loss -0.5
        z = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        batch = [((0, 1), (0,)), ((2, 3), (2,))]
        assert contrastive_loss(batch, z) == pytest.approx(-0.5)

    def test_subteam_equal_team_rejected(self):
        with pytest.raises(ValidationError):
            contrastive_loss([((0, 1), (0, 1))], np.eye(2))

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(0)
        z = rng.normal(size=(8, 5))
        batch = [((0, 1, 2), (1,)), ((3, 4, 5, 6), (3, 6)), ((2, 7), (7,))]
        assert contrastive_loss(batch, z) == pytest.approx(naive_contrastive(batch, z), abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50)
    def test_bounded_by_one(self, seed):
        rng = np.random.default_rng(seed)
        z = rng.normal(size=(6, 4))
        batch = [((0, 1, 2), (0,)), ((3, 4, 5), (3, 4))]
        assert -1 - 1e-12 <= contrastive_loss(batch, z) <= 1 + 1e-12


class TestPairSim:
    def test_identity_rows(self):
        assert np.array_equal(pair_sim(np.eye(2), np.eye(2)), np.eye(2))

    def test_self_diagonal_is_one(self):
        rng = np.random.default_rng(1)
        p = rng.normal(size=(5, 3))
        sim = pair_sim(p, p)
        assert np.allclose(np.diag(sim), 1.0)
        assert np.allclose(sim, sim.T)

    def test_zero_row_stays_zero(self):
        p = np.array([[0.0, 0.0], [1.0, 2.0]])
        sim = pair_sim(p, p)
        assert np.array_equal(sim[0], [0.0, 0.0])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            pair_sim(np.eye(2), np.eye(3))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50)
    def test_entries_bounded_and_match_naive(self, seed):
        rng = np.random.default_rng(seed)
        p = rng.normal(size=(4, 3))
        q = rng.normal(size=(4, 3))
        sim = pair_sim(p, q)
        assert np.all(sim <= 1 + 1e-12) and np.all(sim >= -1 - 1e-12)
        assert np.allclose(sim, naive_pair_sim(p, q), atol=1e-12)


class TestSkillLoss:
    def test_matching_similarity_patterns_give_minus_n(self):
        # C = X makes Y1 == Y2, so every diagonal entry of Y3 is 1
        x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        assert skill_loss(x, x.copy()) == pytest.approx(-3.0)

    def test_single_node(self):
        assert skill_loss(np.array([[2.0, 1.0]]), np.array([[1.0]])) == pytest.approx(-1.0)

    def test_matches_naive_oracle_on_random_instance(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 2, size=(4, 6))
        c = row_softmax(rng.normal(size=(4, 3)))
        assert skill_loss(x, c) == pytest.approx(naive_skill_loss(x, c), abs=1e-10)

    def test_bounds(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(1, 6))
            x = rng.uniform(0, 1, size=(n, 4))
            c = row_softmax(rng.normal(size=(n, 3)))
            val = skill_loss(x, c)
            assert -n <= val <= n


class TestStructuralLoss:
    def test_identity_matching_one_hot(self):
        assert structural_loss(np.eye(3), np.eye(3)) == 0.0

    def test_all_ones_single_cluster(self):
        assert structural_loss(np.ones((2, 2)), np.array([[1.0], [1.0]])) == 0.0

    def test_hand_computed_residual(self):
        c = np.array([[0.5, 0.5], [0.5, 0.5]])
        assert structural_loss(np.zeros((2, 2)), c) == pytest.approx(1.0)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(6)
        upper = np.triu(rng.integers(0, 2, (5, 5)).astype(float), 1)
        a = upper + upper.T
        c = row_softmax(rng.normal(size=(5, 3)))
        assert structural_loss(a, c) == pytest.approx(naive_structural_loss(a, c), abs=1e-10)

    def test_non_negative(self):
        rng = np.random.default_rng(7)
        a = np.zeros((4, 4))
        c = row_softmax(rng.normal(size=(4, 2)))
        assert structural_loss(a, c) >= 0


class TestClusteringLoss:
    def test_one_hot_rows_give_zero(self):
        c = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        assert clustering_loss(c) == 0.0

    def test_uniform_rows_give_log_c(self):
        c = np.full((3, 2), 0.5)
        assert clustering_loss(c) == pytest.approx(math.log(2), abs=1e-12)

    def test_mixed_rows(self):
        c = np.array([[1.0, 0.0], [0.5, 0.5]])
        assert clustering_loss(c) == pytest.approx(math.log(2) / 2, abs=1e-12)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(8)
        c = row_softmax(rng.normal(size=(6, 4)))
        assert clustering_loss(c) == pytest.approx(naive_clustering_loss(c), abs=1e-12)

    @given(st.integers(0, 2**32 - 1), st.integers(2, 5))
    @settings(max_examples=50)
    def test_bounds(self, seed, c_count):
        rng = np.random.default_rng(seed)
        c = row_softmax(rng.normal(size=(5, c_count)))
        val = clustering_loss(c)
        assert -1e-12 <= val <= math.log(c_count) + 1e-12


class TestTotalLoss:
    def test_weighted_sum_with_standard_weights(self):
        report = total_loss(-0.9, -3.0, 0.5, 0.1, LossWeights(1, 100, 1))
        assert report.total == pytest.approx(-0.9 + 1 * -3.0 + 100 * 0.5 + 1 * 0.1)
        assert report.contra == -0.9 and report.skill == -3.0

    def test_all_zero(self):
        assert total_loss(0, 0, 0, 0, LossWeights(1, 1, 1)).total == 0.0

    def test_alternate_weight_preset(self):
        report = total_loss(1.0, 1.0, 1.0, 1.0, LossWeights(100, 100, 10))
        assert report.total == pytest.approx(1 + 100 + 100 + 10)

    def test_report_identity(self):
        w = LossWeights(2, 3, 4)
        report = total_loss(0.5, -1.0, 2.0, 0.25, w)
        recomputed = (
            report.contra
            + w.skill * report.skill
            + w.structural * report.structural
            + w.clustering * report.clustering
        )
        assert report.total == pytest.approx(recomputed, abs=1e-9)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValidationError):
            LossWeights(-1, 0, 0)
