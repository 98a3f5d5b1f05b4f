# -*- coding: utf-8 -*-
################################################################################
# semiot/test/_learner.py
# Tests of the online learner and its checkpoints.

import math
from unittest import TestCase

import numpy as np

from .._model import TransportInstance
from .._regression import RidgePolicy, RLSState, RidgeAccumulator
from .._policy import ExplorationSchedule
from .._learner import (
    LearnerConfig, LearnerState, Learner, learner_step, run_learner,
    checkpoint, restore, CheckpointError, CheckpointVersionError,
    CorruptCheckpointError)
from .._oracle import Truth

def three_way(sigma=0.1, seed=0):
    beta = [[1.0, 0.0], [0.0, 1.0], [-0.5, -0.5]]
    return TransportInstance.seeded([0.3, 0.3, 0.4], beta, 'sphere', sigma,
                                    seed)

class NaNInstance(TransportInstance):
    """An instance whose observations are all lost."""
    __slots__ = ()
    def observe(self, k, x, eps):
        return math.nan

class TestLearner(TestCase):
    """Tests of `Learner` and its functional interface."""
    def test_run(self):
        """Tests the bookkeeping of a plain run."""
        inst = three_way()
        learner = Learner(inst)
        trace = learner.run(500, trace_every=100)
        self.assertEqual(learner.n, 500)
        self.assertEqual(len(trace), 500)
        state = learner.persistent()
        self.assertIsInstance(state, LearnerState)
        self.assertEqual(int(np.sum(state.counts)), 500)
        self.assertTrue(all(isinstance(e, RLSState) for e in state.estimators))
        self.assertTrue(np.all(state.rho_used == 0.001))
        self.assertTrue(np.allclose(state.rederive(), state.beta_hat))
        # The dual update conserves the sum of the weights.
        self.assertAlmostEqual(float(np.sum(state.g)), 0.0, delta=1e-9)
        self.assertTrue(np.array_equal(trace.ns, [100, 200, 300, 400, 500]))
        self.assertEqual(trace.point(500).beta_hat.shape, (3, 2))
        # Runs are reproducible.
        again = run_learner(inst, horizon=500, trace_every=100)
        self.assertTrue(np.array_equal(again.pi, trace.pi))
        self.assertTrue(np.array_equal(again.point(500).g, state.g))
    def test_initial_estimates(self):
        """Tests that `beta0` is kept until an alternative is observed."""
        inst = three_way(0.0)
        cfg = LearnerConfig(beta0=np.ones((3, 2)), g0=[0.0, 0.0, 0.0])
        learner = Learner(inst, cfg)
        rec = learner.step()
        self.assertEqual(rec.n, 1)
        for k in range(3):
            if k == rec.pi:
                self.assertFalse(np.array_equal(learner.beta_hat[k], [1, 1]))
            else:
                self.assertTrue(np.array_equal(learner.beta_hat[k], [1, 1]))
        with self.assertRaises(ValueError):
            Learner(inst, LearnerConfig(g0=[0.0]))
        with self.assertRaises(ValueError):
            LearnerConfig(sa_alpha=-1.0)
    def test_plugin_update(self):
        """Tests that the dual update uses the plug-in choice."""
        inst = three_way(0.0, 2)
        # Exploring from the third step on separates selections from plug-in
        # choices.
        cfg = LearnerConfig(schedule=ExplorationSchedule.probabilistic(0.01))
        learner = Learner(inst, cfg)
        g = np.zeros(3)
        p = np.asarray(inst.p)
        for n in range(1, 200):
            rec = learner.step()
            a = cfg.sa_alpha / n
            g = g + a * p
            g[rec.pi_hat] -= a
            if n > 2:
                self.assertTrue(rec.explored)
        self.assertTrue(np.allclose(learner.g, g, atol=1e-9))
    def test_growing_ridge(self):
        """Tests the growing regularization schedule."""
        inst = three_way()
        cfg = LearnerConfig(ridge=RidgePolicy.paper())
        learner = Learner(inst, cfg)
        learner.run(300, trace_every=300)
        state = learner.persistent()
        self.assertTrue(all(isinstance(e, RidgeAccumulator)
                            for e in state.estimators))
        # The last observed alternative was solved with rho at n = 300.
        last = int(learner.run(1, trace_every=1).pi[0])
        self.assertAlmostEqual(learner.rho_used[last], 1.0 + math.log(301)**3)
        self.assertTrue(np.allclose(learner.persistent().rederive(),
                                    learner.beta_hat))
    def test_functional_step(self):
        """Tests `learner_step` against `Learner.step`."""
        inst = three_way()
        state = Learner(inst).persistent()
        (s1, r1) = learner_step(state, inst)
        learner = Learner(inst)
        r2 = learner.step()
        self.assertEqual((r1.pi, r1.pi_hat, r1.explored), (r2.pi, r2.pi_hat,
                                                          r2.explored))
        self.assertEqual(s1, learner.persistent())
        # The input state is unchanged.
        self.assertEqual(state.n, 0)
    def test_lost_observations(self):
        """Tests that non-finite observations are dropped with a warning."""
        base = three_way()
        inst = NaNInstance(base.p, base.costs, base.sampler, base.noise,
                           base.seed)
        learner = Learner(inst)
        with self.assertLogs('semiot._learner', level='WARNING'):
            learner.run(5, trace_every=5)
        self.assertEqual(learner.n, 5)
        self.assertTrue(np.array_equal(learner.persistent().counts, [0, 0, 0]))
        self.assertTrue(np.array_equal(learner.beta_hat, np.zeros((3, 2))))
    def test_truth(self):
        """Tests the correct-selection columns of a scored run."""
        inst = three_way(0.0)
        truth = Truth(inst.costs, np.zeros(3), inst.costs.beta)
        learner = Learner(inst)
        trace = learner.run(200, truth=truth, trace_every=50)
        self.assertTrue(trace.has_truth)
        star = np.argmin(inst.costs.costs_many(trace.contexts()), axis=1)
        self.assertTrue(np.array_equal(trace.correct, trace.pi == star))
        self.assertTrue(np.array_equal(trace.correct_hat, trace.pi_hat == star))
        self.assertAlmostEqual(
            trace.point(200).Delta_max,
            float(np.max(np.linalg.norm(learner.beta_hat - inst.costs.beta,
                                        axis=1))))

class TestCheckpoint(TestCase):
    """Tests of `checkpoint` and `restore`."""
    def _resume_matches(self, cfg):
        inst = three_way(0.2, 5)
        full = Learner(inst, cfg)
        full.run(1500, trace_every=1500)
        part = Learner(inst, cfg)
        part.run(700, trace_every=700)
        blob = checkpoint(part.persistent())
        self.assertIsInstance(blob, bytes)
        state = restore(blob, cfg.ridge)
        self.assertEqual(state, part.persistent())
        resumed = Learner.from_state(inst, state)
        trace = resumed.run(800, trace_every=800)
        self.assertEqual(trace.n0, 700)
        self.assertTrue(np.array_equal(resumed.g, full.g))
        self.assertTrue(np.array_equal(resumed.beta_hat, full.beta_hat))
        self.assertEqual(resumed.persistent(), full.persistent())
    def test_resume_constant(self):
        """Tests bit-identical continuation under constant rho."""
        self._resume_matches(LearnerConfig())
    def test_resume_growing_ridge(self):
        """Tests bit-identical continuation under the growing schedule."""
        self._resume_matches(LearnerConfig(
            ridge=RidgePolicy.paper(),
            schedule=ExplorationSchedule.deterministic(3.0)))
    def test_errors(self):
        """Tests the checkpoint error classes."""
        inst = three_way()
        learner = Learner(inst)
        learner.run(10, trace_every=10)
        blob = checkpoint(learner.persistent())
        with self.assertRaises(CorruptCheckpointError):
            restore(blob[:len(blob) // 2])
        with self.assertRaises(CorruptCheckpointError):
            restore(b'[1, 2, 3]')
        with self.assertRaises(CheckpointVersionError):
            restore(blob, RidgePolicy.paper())
        with self.assertRaises(CheckpointVersionError):
            restore(blob.replace(b'semiot-checkpoint-v1', b'semiot-checkpoint-v0'))
        with self.assertRaises(CorruptCheckpointError):
            restore(blob.replace(b'"policy"', b'"polcy"'))
        self.assertTrue(issubclass(CorruptCheckpointError, CheckpointError))
        self.assertEqual(restore(blob, 'constant'), learner.persistent())
        # A state does not fit an instance of another shape.
        other = TransportInstance.seeded([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]])
        with self.assertRaises(ValueError):
            Learner.from_state(other, restore(blob))
