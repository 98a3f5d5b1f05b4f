# -*- coding: utf-8 -*-
################################################################################
# semiot/test/_oracle.py
# Tests of the oracles, target verification, scoring, and the lazy cache.

import os
import pickle
import tempfile
from concurrent.futures import ThreadPoolExecutor
from unittest import (TestCase, skipUnless)

import numpy as np
from phamt import PHAMT

from .._model import (TransportInstance, ContextSampler, dual_objective,
                      estimate_assignment_probs)
from .._regression import UnsupportedModeError
from .._sa import (SAConfig, run_known_costs, run_sa)
from .._experiments import (SyntheticSpec, generate_instance)
from .._learner import Learner
from .._lazy import (lazy, unlazy, LazyError, LazyCache)
from .._oracle import (
    OracleError, OracleResult, Truth, check_sampler, verify_targets,
    solve_gstar_long_sa, solve_gstar_quantile_k2, cached_oracle,
    save_oracle, load_oracle, windowed_mean, score_run)

slow = skipUnless(os.environ.get('SEMIOT_SLOW_TESTS'),
                  'set SEMIOT_SLOW_TESTS=1 to run the slow sweeps')

def uniform_pair(c=2.0, p2=0.7, seed=1):
    """Costs `(0, c x)` with `x` uniform on `[0, 1]`; the optimal bonus of
    the second alternative is `c p2`."""
    return TransportInstance.seeded([1.0 - p2, p2], [[0.0], [c]], 'box', 0.0,
                                    seed)

class TestOracle(TestCase):
    """Tests of the oracles and of target verification."""
    def test_quantile(self):
        """Tests the two-alternative quantile oracle."""
        inst = uniform_pair()
        res = solve_gstar_quantile_k2(inst, 200_000, tol=0.01)
        self.assertEqual(res.method, 'quantile-k2')
        self.assertEqual(res.g_star.g[0], 0.0)
        self.assertAlmostEqual(res.g_star.g[1], 1.4, delta=0.02)
        self.assertLess(res.max_residual, 0.01)
        with self.assertRaises(UnsupportedModeError):
            solve_gstar_quantile_k2(TransportInstance.seeded(
                [0.2, 0.3, 0.5], np.eye(3)))
    def test_long_sa(self):
        """Tests the tail-averaged SA oracle against the quantile."""
        inst = uniform_pair()
        res = solve_gstar_long_sa(inst, 200_000, tol=0.02, n_check=200_000)
        self.assertEqual(res.method, 'long-sa')
        self.assertEqual(res.n, 200_000)
        self.assertAlmostEqual(res.g_star.g[1], 1.4, delta=0.05)
        self.assertEqual(res.seed, inst.seed)
        # A single alternative needs no solving.
        one = TransportInstance.seeded([1.0], [[1.0, 0.0]])
        self.assertTrue(np.array_equal(solve_gstar_long_sa(one).g_star.g, [0.0]))
        with self.assertRaises(ValueError):
            solve_gstar_long_sa(inst, 0)
    def test_failure(self):
        """Tests that an unconverged oracle is refused."""
        inst = uniform_pair()
        with self.assertRaises(OracleError) as cm:
            solve_gstar_long_sa(inst, 10, tol=1e-6, n_check=10_000)
        e = cm.exception
        self.assertEqual(e.residual.shape, (2,))
        self.assertGreater(float(np.max(e.residual)), 1e-6)
        # Oracle errors survive pickling (they cross process pools).
        e.instance_index = 3
        e2 = pickle.loads(pickle.dumps(e))
        self.assertEqual(e2.instance_index, 3)
        self.assertTrue(str(e2).startswith('instance 3: '))
    def test_verify(self):
        """Tests `verify_targets` and the independent check sampler."""
        inst = uniform_pair()
        chk = verify_targets(inst.costs, [0.0, 1.4], inst.sampler, inst.p,
                             100_000, 0.01)
        self.assertTrue(chk.passed)
        self.assertTrue(np.allclose(chk.probs, inst.p, atol=0.01))
        chk = verify_targets(inst.costs, [0.0, 0.2], inst.sampler, inst.p,
                             100_000, 0.01)
        self.assertFalse(chk.passed)
        self.assertNotEqual(check_sampler(inst.sampler).seed, inst.sampler.seed)
        arr = ContextSampler.from_array(np.zeros((3, 1)))
        self.assertIs(check_sampler(arr), arr)
    def test_storage(self):
        """Tests the oracle file format and the file cache."""
        res = OracleResult([1.0, 2.5, 0.5], 'long-sa', 100, [0.01, 0.0, 0.02], 7)
        self.assertTrue(np.array_equal(res.g_star.g, [0.0, 1.5, -0.5]))
        self.assertEqual(OracleResult.from_json(res.to_json()), res)
        with self.assertRaises(ValueError):
            OracleResult.from_json(dict(res.to_json(), version='x'))
        with self.assertRaises(ValueError):
            OracleResult([0.0], 'guess', 1, [0.0])
        calls = []
        def solve(instance, **kw):
            calls.append(kw)
            return res
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'oracle.json')
            self.assertEqual(cached_oracle(path, solve, None, tol=0.1), res)
            self.assertEqual(cached_oracle(path, solve, None, tol=0.1), res)
            self.assertEqual(calls, [{'tol': 0.1}])
            save_oracle(res, path)
            self.assertEqual(load_oracle(path), res)
    def test_stale_file(self):
        """Tests that a stored oracle of another problem is solved again."""
        old = OracleResult([0.0, 1.0], 'long-sa', 100, [0.0, 0.0], 1)
        new = OracleResult([0.0, 2.0, 3.0], 'long-sa', 100, [0.0] * 3, 1)
        calls = []
        def solve(instance, **kw):
            calls.append(instance)
            return new
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'oracle.json')
            save_oracle(old, path, 11)
            with self.assertLogs('semiot', level='WARNING'):
                self.assertEqual(cached_oracle(path, solve, 'b', ident=22), new)
            self.assertEqual(calls, ['b'])
            # The file now holds the new oracle under its own identity.
            self.assertEqual(cached_oracle(path, solve, 'b', ident=22), new)
            self.assertEqual(calls, ['b'])
            self.assertEqual(load_oracle(path), new)
    def test_sa_matches_quantile(self):
        """Tests that plain SA and the quantile oracle agree on two
        alternatives."""
        inst = uniform_pair(seed=5)
        quant = solve_gstar_quantile_k2(inst, 500_000, tol=0.01)
        (g, _) = run_sa(inst, SAConfig(alpha=50.0, n_iters=200_000))
        self.assertAlmostEqual(g.g[1] - g.g[0], quant.g_star.g[1], delta=0.02)
        chk = verify_targets(inst.costs, g.g, check_sampler(inst.sampler),
                             inst.p, 200_000, 0.01)
        self.assertTrue(chk.passed)
    def test_assignment_at_optimum(self):
        """Tests that the oracle weights assign each alternative its
        target share."""
        inst = uniform_pair(seed=6)
        res = solve_gstar_long_sa(inst, 200_000, tol=0.02, n_check=200_000)
        probs = estimate_assignment_probs(inst.costs, res.g_star.g,
                                          inst.sampler, 1_000_000)
        self.assertLessEqual(float(np.max(np.abs(probs - inst.p))), 0.01)
    def test_dual_maximum(self):
        """Tests that no nearby weights raise the dual objective."""
        inst = uniform_pair(seed=7)
        gstar = np.array([0.0, 1.4])
        X = inst.sampler.sample(100_000)
        top = dual_objective(inst.costs, gstar, inst.p, X)
        rng = np.random.default_rng(8)
        for _ in range(50):
            u = rng.standard_normal(2)
            u *= 0.25 / np.linalg.norm(u)
            # The error of the sample objective grows with the shift.
            err = 3.0 * np.sqrt(0.21 / 100_000) * abs(u[1] - u[0])
            self.assertGreaterEqual(
                top, dual_objective(inst.costs, gstar + u, inst.p, X) - err)
    @slow
    def test_random_pairs(self):
        """Tests long SA against the quantile oracle on random
        two-alternative instances."""
        spec = SyntheticSpec(d=10, K=2, n_instances=20, master_seed=3)
        for ii in range(spec.n_instances):
            inst = generate_instance(spec, ii)
            sa = solve_gstar_long_sa(inst, 2_000_000, tol=0.03,
                                     n_check=200_000)
            quant = solve_gstar_quantile_k2(inst, 1_000_000, tol=0.03)
            self.assertAlmostEqual(sa.g_star.g[1], quant.g_star.g[1],
                                   delta=0.02, msg=f"instance {ii}")

class TestScoring(TestCase):
    """Tests of `score_run` and its reports."""
    def test_windowed_mean(self):
        """Tests the trailing window average."""
        self.assertTrue(np.allclose(windowed_mean([1, 0, 1, 1], 2),
                                    [1.0, 0.5, 0.5, 1.0]))
        self.assertTrue(np.allclose(windowed_mean([0, 1, 1], 10),
                                    [0.0, 0.5, 2.0 / 3.0]))
    def test_score(self):
        """Tests scoring benchmark and learner traces."""
        inst = uniform_pair(seed=4)
        truth = Truth(inst.costs, [0.0, 1.4], inst.costs.beta)
        (_, bench) = run_known_costs(inst, 50.0, 2000, steps=True,
                                     trace_every=500)
        rep = score_run(bench, truth, window=100)
        self.assertEqual(len(rep), 2000)
        self.assertTrue(np.array_equal(rep.correct, rep.correct_hat))
        star = (2.0 * bench.contexts()[:, 0] < 1.4).astype(int)
        self.assertTrue(np.array_equal(rep.correct, bench.pi == star))
        self.assertEqual(rep.incorrect[-1], int(np.sum(bench.pi != star)))
        self.assertGreater(rep.terminal_pcs(), 0.8)
        self.assertTrue(np.array_equal(rep.ns, [500, 1000, 1500, 2000]))
        self.assertTrue(np.all(np.isnan(rep.Delta_max)))
        # Learner traces scored afterwards match those scored during the run.
        learner = Learner(inst.with_noise(0.1))
        live = learner.run(1000, truth=truth, trace_every=250)
        rep = score_run(live, truth)
        self.assertTrue(np.array_equal(rep.correct, live.correct))
        self.assertTrue(np.array_equal(rep.correct_hat, live.correct_hat))
        self.assertTrue(np.allclose(rep.delta_norm,
                                    [pt.delta_norm for pt in live.points()]))
        self.assertTrue(np.allclose(rep.Delta_max,
                                    [pt.Delta_max for pt in live.points()]))
        with self.assertRaises(ValueError):
            score_run(live, None)
        (_, sparse) = run_known_costs(inst, 50.0, 100)
        with self.assertRaises(ValueError):
            score_run(sparse, truth)

class TestLazy(TestCase):
    """Tests of `lazy` and `LazyCache`."""
    def test_lazy(self):
        """Tests deferred evaluation."""
        calls = []
        lz = lazy(lambda a, b=1: calls.append(a) or a + b, 2, b=3)
        self.assertFalse(lz.is_ready())
        self.assertEqual(lz(), 5)
        self.assertEqual(lz(), 5)
        self.assertTrue(lz.is_ready())
        self.assertEqual(calls, [2])
        self.assertEqual(unlazy(lz), 5)
        self.assertEqual(unlazy(4), 4)
        with self.assertRaises(TypeError):
            lazy(5)
        with self.assertRaises(TypeError):
            lz.value = 1
        bad = lazy(int, 'x')
        with self.assertRaises(LazyError) as cm:
            bad()
        self.assertIsInstance(cm.exception.__cause__, ValueError)
    def test_cache(self):
        """Tests the integer-keyed lazy cache."""
        cache = LazyCache()
        calls = []
        def square(x):
            calls.append(x)
            return x * x
        first = cache.put(7, square, 3)
        self.assertIs(cache.put(7, square, 4), first)
        self.assertIn(7, cache)
        self.assertNotIn(8, cache)
        self.assertFalse(cache.is_ready(7))
        self.assertEqual(cache[7], 9)
        self.assertEqual(cache[7], 9)
        self.assertTrue(cache.is_ready(7))
        self.assertEqual(calls, [3])
        # Errors propagate unwrapped.
        cache.put(3, int, 'x')
        with self.assertRaises(ValueError):
            cache[3]
        with self.assertRaises(KeyError):
            cache[9]
        snap = cache.snapshot()
        self.assertIsInstance(snap, PHAMT)
        self.assertEqual(len(snap), 2)
        self.assertEqual(len(cache), 2)
        # Concurrent readers compute a value once.
        cache.put(1, square, 5)
        with ThreadPoolExecutor(8) as pool:
            vals = list(pool.map(lambda _: cache[1], range(32)))
        self.assertEqual(vals, [25] * 32)
        self.assertEqual(calls, [3, 5])
    def test_bounded_cache(self):
        """Tests eviction and clearing of a bounded cache."""
        cache = LazyCache(maxsize=2)
        for k in (1, 2, 3):
            cache.put(k, abs, -k)
        self.assertEqual(len(cache), 2)
        self.assertNotIn(1, cache)
        self.assertEqual(cache[3], 3)
        # A key already present is not re-inserted.
        cache.put(2, abs, -5)
        self.assertEqual(cache[2], 2)
        cache.clear()
        self.assertEqual(len(cache), 0)
        self.assertNotIn(3, cache)
        with self.assertRaises(ValueError):
            LazyCache(maxsize=0)
