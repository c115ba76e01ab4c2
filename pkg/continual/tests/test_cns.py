import math

import numpy as np
from django.test import SimpleTestCase

from continual.cns import (
    LARGEST, CandidatePool, SelectionReservoir, SelectionSet, boundary_update, candidate_configs, cns_score,
    rank_candidates, select_representative,
)
from continual.exceptions import ParameterError, StateError
from continual.network import IDENTITY, DenseLayer, Network, build_network, forward
from continual.subnet import ArchConfig
from continual.verification import brute_force_representative


def hand_net():
    w1 = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])
    w2 = np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]])
    return Network([DenseLayer(w1, np.zeros(4)), DenseLayer(w2, np.zeros(2), IDENTITY)], 2, 4)


class ScoreTests(SimpleTestCase):
    def test_full_arch_scores_zero(self):
        net = build_network(4, (8,), 2, 4)
        sel = SelectionSet(np.ones((3, 4)))
        self.assertEqual(cns_score(net, ArchConfig.full(net), sel), 0.0)

    def test_hand_arithmetic(self):
        net = hand_net()
        x = np.array([[1.0, 2.0, 3.0]])
        # hidden relu = [1, 2, 3, 6]; full logits = [1 + 3, 2 + 6] = [4, 8]
        # arch (2): hidden [1, 2]; logits = [1, 2]; gap^2 = 9 + 36
        # |psi| = 2*3 + 2 + 2*2 + 2 = 14, |theta| = 4*3 + 4 + 2*4 + 2 = 26
        expected = math.exp(14 / 26) * 45.0
        self.assertAlmostEqual(cns_score(net, ArchConfig((2,)), SelectionSet(x)), expected, places=12)

    def test_empty_selection_rejected(self):
        net = build_network(4, (8,), 2, 4)
        with self.assertRaises(ParameterError):
            cns_score(net, ArchConfig((1,)), SelectionSet(np.empty((0, 4))))


class CandidateTests(SimpleTestCase):
    def test_single_layer_two_groups_exact_set(self):
        net = build_network(4, (8,), 2, 4)
        candidates = candidate_configs(net, 2, 1, np.random.default_rng(0))
        self.assertEqual(candidates, [ArchConfig((1,)), ArchConfig((2,))])

    def test_identity_excluded_when_space_is_full(self):
        net = build_network(4, (8,), 2, 4)
        candidates = candidate_configs(net, 4, 64, np.random.default_rng(0))
        self.assertNotIn(ArchConfig.full(net), candidates)
        self.assertEqual(len(candidates), 3)

    def test_budget_below_space_keeps_uniform_configs(self):
        net = build_network(4, (8, 8, 8), 2, 8)
        candidates = candidate_configs(net, 8, 4, np.random.default_rng(1))
        for g in range(1, 8):
            self.assertIn(ArchConfig.uniform(net, g), candidates)
        self.assertLessEqual(len(candidates), 7 + 4)

    def test_single_group_falls_back_to_identity(self):
        net = build_network(4, (8,), 2, 1)
        self.assertEqual(candidate_configs(net, 1, 8, np.random.default_rng(0)), [ArchConfig((1,))])

    def test_invalid_search_space(self):
        net = build_network(4, (8,), 2, 4)
        with self.assertRaises(ParameterError):
            candidate_configs(net, 0, 8, np.random.default_rng(0))


class SelectionTests(SimpleTestCase):
    def test_zero_weighted_tail_makes_smallest_arch_win(self):
        net = build_network(4, (8, 8), 2, 4, seed=1)
        for layer in net.layers[:-1]:
            layer.weights[2:] = 0.0
            layer.bias[2:] = 0.0
        sel = SelectionSet(np.random.default_rng(0).standard_normal((16, 4)))
        self.assertEqual(select_representative(net, 4, sel, 64, np.random.default_rng(0)), ArchConfig((1, 1)))

    def test_singleton_space(self):
        net = build_network(4, (8, 8), 2, 4, seed=1)
        sel = SelectionSet(np.ones((4, 4)))
        self.assertEqual(select_representative(net, 1, sel, 64, np.random.default_rng(0)), ArchConfig((1, 1)))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for seed in range(5):
            net = build_network(6, (8, 12), 3, 4, seed=seed)
            sel = SelectionSet(rng.standard_normal((20, 6)))
            with self.subTest(seed=seed):
                self.assertEqual(
                    select_representative(net, 4, sel, 64, np.random.default_rng(seed)),
                    brute_force_representative(net, 4, sel.inputs),
                )

    def test_scaling_inputs_keeps_the_winner_on_linear_nets(self):
        for seed in range(3):
            net = build_network(6, (8, 12), 3, 4, seed=seed)
            for layer in net.layers:
                layer.activation = IDENTITY
            inputs = np.random.default_rng(seed).standard_normal((20, 6))
            base = rank_candidates(net, candidate_configs(net, 4, 64, np.random.default_rng(0)), SelectionSet(inputs))
            scaled = rank_candidates(
                net, candidate_configs(net, 4, 64, np.random.default_rng(0)), SelectionSet(3.0 * inputs),
            )
            with self.subTest(seed=seed):
                self.assertEqual(scaled[0][0], base[0][0])
                self.assertAlmostEqual(scaled[0][1], 9.0 * base[0][1], delta=1e-9 * scaled[0][1])

    def test_ranking_breaks_ties_on_size(self):
        net = build_network(4, (8, 8), 2, 4, seed=1)
        for layer in net.layers[:-1]:
            layer.weights[:] = 0.0
            layer.bias[:] = 0.0
        sel = SelectionSet(np.ones((2, 4)))
        ranked = rank_candidates(net, [ArchConfig((2, 2)), ArchConfig((1, 1)), ArchConfig((1, 2))], sel)
        self.assertEqual(ranked[0][0], ArchConfig((1, 1)))

    def test_largest_strategy(self):
        net = build_network(4, (8, 8), 2, 4, seed=1)
        sel = SelectionSet(np.ones((2, 4)))
        arch = select_representative(net, 3, sel, 64, np.random.default_rng(0), strategy=LARGEST)
        self.assertEqual(arch, ArchConfig((3, 3)))


class BoundaryUpdateTests(SimpleTestCase):
    def setUp(self):
        self.net = build_network(4, (8, 8), 2, 4, seed=2)
        self.sel = SelectionSet(np.random.default_rng(2).standard_normal((8, 4)))
        self.rng = np.random.default_rng(2)

    def test_first_boundary(self):
        pool = CandidatePool()
        boundary_update(pool, self.net, 2, self.sel, 64, self.rng, boundary=1)
        self.assertEqual(len(pool.archs), 1)
        self.assertTrue(pool.teacher.equals(self.net))
        self.assertIsNot(pool.teacher, self.net)

    def test_teacher_tracks_latest_boundary_only(self):
        pool = CandidatePool()
        for boundary in range(1, 6):
            self.net.layers[0].weights += 0.01
            boundary_update(pool, self.net, 2, self.sel, 64, self.rng, boundary=boundary)
        self.assertEqual(len(pool.archs), 5)
        self.assertTrue(pool.teacher.equals(self.net))

    def test_repeated_boundary_rejected(self):
        pool = CandidatePool()
        boundary_update(pool, self.net, 2, self.sel, 64, self.rng, boundary=1)
        with self.assertRaises(StateError):
            boundary_update(pool, self.net, 2, self.sel, 64, self.rng, boundary=1)


class SelectionReservoirTests(SimpleTestCase):
    def test_fills_then_samples(self):
        reservoir = SelectionReservoir(4, 2)
        rng = np.random.default_rng(0)
        reservoir.add_batch(np.arange(20, dtype=np.float64).reshape(10, 2), rng)
        self.assertEqual(len(reservoir), 4)
        self.assertEqual(reservoir.seen, 10)
        self.assertEqual(reservoir.selection_set().inputs.shape, (4, 2))

    def test_reset(self):
        reservoir = SelectionReservoir(4, 2)
        reservoir.add_batch(np.ones((3, 2)), np.random.default_rng(0))
        reservoir.reset()
        self.assertEqual(len(reservoir.selection_set()), 0)
