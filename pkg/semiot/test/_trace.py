# -*- coding: utf-8 -*-
################################################################################
# semiot/test/_trace.py
# Tests of trace schedules and the run trace types.

import math
import os
import tempfile
from unittest import TestCase

import numpy as np

from .._model import ContextSampler
from .._trace import (TracePoint, RunTrace, TransientTrace, trace_schedule)

class TestTrace(TestCase):
    """Tests of `trace_schedule`, `RunTrace`, and `TransientTrace`."""
    def test_schedule(self):
        """Tests the iterations chosen for trace points."""
        self.assertEqual(trace_schedule(95, 10),
                         frozenset(list(range(10, 100, 10)) + [95]))
        self.assertEqual(trace_schedule(100), frozenset(range(1, 101)))
        ns = trace_schedule(100_000)
        self.assertIn(10_000, ns)
        self.assertIn(100_000, ns)
        self.assertGreater(len(ns), 10_000)
        self.assertLess(len(ns), 10_050)
        self.assertEqual(trace_schedule(50, 50, extra=(7, 80)),
                         frozenset([7, 50]))
        with self.assertRaises(ValueError):
            trace_schedule(10, 0)
    def test_build(self):
        """Tests building a trace and reading it back."""
        s = ContextSampler.box(2, 1)
        t = TransientTrace('sa', 3, np.zeros(3), s, capacity=2, truth=True)
        for n in range(1, 6):
            t.record_step(n % 3, (n + 1) % 3, n == 4, 1, 0)
            t.record_point(TracePoint(n, [n, 0.0, 0.0]))
        t.record_block([0, 1], [0, 1], [0, 0], [1, 1], [1, 1])
        tr = t.persistent()
        self.assertIsInstance(tr, RunTrace)
        self.assertEqual(len(tr), 7)
        self.assertEqual(tr.horizon, 7)
        self.assertTrue(tr.has_truth)
        self.assertTrue(np.array_equal(tr.pi, [1, 2, 0, 1, 2, 0, 1]))
        self.assertEqual(int(np.sum(tr.explored)), 1)
        self.assertTrue(np.array_equal(tr.ns, [1, 2, 3, 4, 5]))
        self.assertEqual(tr.point(3).g[0], 3.0)
        self.assertTrue(math.isnan(tr.point(3).delta_norm))
        with self.assertRaises(KeyError):
            tr.point(6)
        # delta norms are computed from normalized weights.
        self.assertTrue(np.allclose(tr.delta_norms([1.0, 1.0, 1.0]),
                                    np.sqrt(2) * np.arange(1, 6)))
        # Contexts are replayed from the sampler.
        self.assertTrue(np.array_equal(tr.contexts(), s.sample(7)))
        # Traces are values; the transient copy rebuilds the same trace.
        self.assertEqual(tr, tr.transient().persistent())
        self.assertEqual(hash(tr), hash(tr.transient().persistent()))
        with self.assertRaises(TypeError):
            tr.K = 4
    def test_csv(self):
        """Tests the CSV writers."""
        s = ContextSampler.box(2, 1)
        t = TransientTrace('learner', 2, np.zeros(2), s)
        t.record_step(0, 1, 1)
        t.record_step(1, 1, 0)
        t.record_point(TracePoint(2, [0.0, 0.5]))
        tr = t.persistent()
        with tempfile.TemporaryDirectory() as d:
            tr.write_steps_csv(os.path.join(d, 'steps.csv'))
            tr.write_points_csv(os.path.join(d, 'points.csv'), [0.0, 0.25])
            with open(os.path.join(d, 'steps.csv'), newline='') as fl:
                lines = fl.read().split('\r\n')
            self.assertEqual(lines[0], 'n,x_hash,pi,pi_hat,explored,correct,'
                                       'delta_norm,Delta_max')
            self.assertTrue(lines[1].startswith('1,'))
            self.assertTrue(lines[1].endswith(',1,2,1,,,'))
            with open(os.path.join(d, 'points.csv'), newline='') as fl:
                lines = fl.read().split('\r\n')
            self.assertEqual(lines[0], 'n,g_1,g_2,delta_norm')
            self.assertEqual(lines[1], '2,0.0,0.5,0.25')
