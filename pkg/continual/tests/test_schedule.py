import math

from django.test import SimpleTestCase

from continual.exceptions import ParameterError
from continual.schedule import build_schedule, expansion_constant, expansion_size


def linear_schedule(num_tasks, groups):
    """Equal growth per boundary; kept only as a comparison fixture."""
    return [min(groups, max(1, round(groups * t / num_tasks))) for t in range(1, num_tasks + 1)]


def all_at_once_schedule(num_tasks, groups):
    return [groups] * num_tasks


class ExpansionConstantTests(SimpleTestCase):
    def test_single_task_uses_whole_space(self):
        self.assertEqual(expansion_constant(1, 8), 8.0)

    def test_two_tasks(self):
        self.assertAlmostEqual(expansion_constant(2, 8), 16.0 / 3.0, places=12)

    def test_five_tasks_ten_groups(self):
        self.assertAlmostEqual(expansion_constant(5, 10), 10.0 / 3.0, places=6)

    def test_zero_tasks_rejected(self):
        with self.assertRaises(ParameterError):
            expansion_constant(0, 8)


class ExpansionSizeTests(SimpleTestCase):
    def test_first_boundary_equals_r(self):
        self.assertEqual(expansion_size(1, 2.5, 4), 2.5)

    def test_five_task_raw_sizes(self):
        r = expansion_constant(5, 10)
        sizes = [expansion_size(t, r, 5) for t in range(1, 6)]
        for got, expected in zip(sizes, (3.3333, 3.0150, 2.1817, 1.1516, 0.3183)):
            self.assertAlmostEqual(got, expected, places=4)

    def test_index_out_of_range(self):
        with self.assertRaises(ParameterError):
            expansion_size(6, 1.0, 5)


class BuildScheduleTests(SimpleTestCase):
    def test_five_tasks_ten_groups(self):
        self.assertEqual(build_schedule(5, 10).g_groups, (3, 6, 9, 10, 10))

    def test_terminal_exactness_and_monotonicity(self):
        for num_tasks, groups in ((1, 8), (2, 8), (5, 10), (10, 64), (20, 64), (10, 8)):
            with self.subTest(num_tasks=num_tasks, groups=groups):
                state = build_schedule(num_tasks, groups)
                self.assertEqual(state.g_groups[-1], groups)
                self.assertTrue(all(a <= b for a, b in zip(state.g_groups, state.g_groups[1:])))
                self.assertTrue(all(1 <= g <= groups for g in state.g_groups))
                self.assertAlmostEqual(math.fsum(state.s_raw), groups, delta=1e-9)

    def test_raw_sizes_non_increasing(self):
        s = build_schedule(8, 16).s_raw
        self.assertTrue(all(a >= b for a, b in zip(s, s[1:])))

    def test_more_tasks_than_groups_warns(self):
        with self.assertLogs('continual.schedule', level='WARNING'):
            state = build_schedule(10, 8)
        self.assertEqual(state.g_groups[-1], 8)

    def test_table_rows(self):
        table = build_schedule(2, 8).table()
        self.assertEqual([row['t'] for row in table], [1, 2])
        self.assertEqual(table[-1]['g_groups'], 8)

    def test_groups_for_task(self):
        state = build_schedule(5, 10)
        self.assertEqual(state.groups_for_task(1), 3)
        with self.assertRaises(ParameterError):
            state.groups_for_task(0)

    def test_cosine_front_loads_growth_compared_with_linear(self):
        cosine = build_schedule(5, 10).g_groups
        linear = linear_schedule(5, 10)
        self.assertGreaterEqual(cosine[0], linear[0])
        self.assertEqual(cosine[-1], linear[-1])
        self.assertEqual(all_at_once_schedule(5, 10)[0], 10)
