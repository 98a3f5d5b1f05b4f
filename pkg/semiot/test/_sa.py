# -*- coding: utf-8 -*-
################################################################################
# semiot/test/_sa.py
# Tests of the known-cost stochastic approximation.

import os
from unittest import (TestCase, skipUnless)

import numpy as np

from .._model import (LinearCostModel, DualWeights, TransportInstance)
from .._sa import (SAConfig, sa_step, sa_iterate, run_known_costs, run_sa)
from ._model import small_instance

slow = skipUnless(os.environ.get('SEMIOT_SLOW_TESTS'),
                  'set SEMIOT_SLOW_TESTS=1 to run the slow sweeps')

class TestKnownCostSA(TestCase):
    """Tests of `sa_step`, `run_known_costs`, and `run_sa`."""
    def test_step(self):
        """Tests a single SA update."""
        m = LinearCostModel([[0.0, 0.0], [1.0, 1.0]])
        x = np.array([1.0, 1.0])
        g = sa_step([0.0, 0.0], x, m, [0.3, 0.7], 1.0)
        self.assertIsInstance(g, DualWeights)
        self.assertTrue(np.allclose(g.g, [-0.7, 0.7]))
        # A zero step leaves the weights alone.
        self.assertEqual(sa_step(g, x, m, [0.3, 0.7], 0.0), g)
        with self.assertRaises(ValueError):
            sa_step(g, x, m, [0.3, 0.7], -1.0)
        # The in-place recursion agrees with the persistent step.
        C = m.costs_many(np.ones((1, 2)))
        self.assertTrue(np.allclose(
            sa_iterate(C, [0.3, 0.7], 1.0, np.zeros(2)), [-0.7, 0.7]))
    def test_conservation(self):
        """Tests that the sum of the weights never changes."""
        inst = TransportInstance.seeded([0.2, 0.3, 0.5],
                                        [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]],
                                        'sphere', 0.0, 3)
        g0 = [0.5, -1.0, 2.0]
        (g, _) = run_known_costs(inst, 50.0, 5000, g0=g0, trace_every=5000)
        self.assertAlmostEqual(float(np.sum(g)), 1.5, delta=1e-9)
    def test_single_alternative(self):
        """Tests that a one-alternative problem never moves."""
        inst = TransportInstance.seeded([1.0], [[1.0, 2.0]], 'box', 0.0, 0)
        (g, _) = run_known_costs(inst, 50.0, 100, g0=[0.25])
        self.assertAlmostEqual(g[0], 0.25, delta=1e-9)
    def test_convergence(self):
        """Tests convergence to the median bonus on a symmetric problem."""
        # Costs (x1, x2) with box contexts: g2 - g1 converges to the median
        # of x2 - x1, which is 0.
        inst = small_instance()
        (g, trace) = run_sa(inst, SAConfig(alpha=50.0, n_iters=20_000),
                            trace_every=1000, g_star=[0.0, 0.0])
        self.assertLess(abs(g.g[1] - g.g[0]), 0.1)
        self.assertEqual(len(trace.ns), 20)
        self.assertEqual(trace.kind, 'sa')
        # The trace points record the error norm.
        self.assertAlmostEqual(trace.point(20_000).delta_norm,
                               abs(g.g[1] - g.g[0]))
        with self.assertRaises(ValueError):
            SAConfig(alpha=0.0)
        with self.assertRaises(ValueError):
            SAConfig(g0=[0.0]).initial(2)
    def test_determinism(self):
        """Tests that repeated runs are bit-identical."""
        inst = small_instance(seed=9)
        (g1, t1) = run_known_costs(inst, 50.0, 3000, steps=True)
        (g2, t2) = run_known_costs(inst, 50.0, 3000, steps=True)
        self.assertTrue(np.array_equal(g1, g2))
        self.assertEqual(t1, t2)
        self.assertEqual(len(t1), 3000)
        # Steps are scored when a truth is given.
        (_, t3) = run_known_costs(inst, 50.0, 3000, steps=True,
                                  truth=(inst.costs, np.zeros(2)))
        self.assertTrue(t3.has_truth)
        self.assertTrue(np.array_equal(t3.pi, t1.pi))
        with self.assertRaises(ValueError):
            run_known_costs(inst, 50.0, 0)
    def test_step_bound(self):
        """Tests that the iterates stay within `sqrt(2) alpha (1 + log n)`."""
        inst = TransportInstance.seeded([0.1, 0.2, 0.3, 0.4],
                                        np.eye(4)[:, :3] * 5.0,
                                        'sphere', 0.0, 11)
        g0 = np.array([1.0, -2.0, 0.5, 0.0])
        for alpha in (0.5, 50.0):
            (_, trace) = run_known_costs(inst, alpha, 20_000, g0=g0,
                                         trace_every=100)
            self.assertEqual(len(trace.ns), 200)
            for pt in trace.points():
                bound = np.sqrt(2.0) * alpha * (1.0 + np.log(pt.n))
                self.assertLessEqual(np.linalg.norm(pt.g - g0), bound)
    @slow
    def test_long_conservation(self):
        """Tests that the sum of the weights holds over a million steps."""
        inst = TransportInstance.seeded([0.2, 0.3, 0.5],
                                        [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]],
                                        'sphere', 0.0, 5)
        g0 = [0.5, -1.0, 2.0]
        (g, trace) = run_known_costs(inst, 50.0, 1_000_000, g0=g0,
                                     trace_every=100_000)
        self.assertAlmostEqual(float(np.sum(g)), 1.5, delta=1e-9)
        for pt in trace.points():
            self.assertAlmostEqual(float(np.sum(pt.g)), 1.5, delta=1e-9)
