# -*- coding: utf-8 -*-
################################################################################
# semiot/test/_cli.py
# Tests of configuration handling and the command-line interface.

import json
import os
import tempfile
from unittest import TestCase

from .._model import (InstanceFormatError, save_instance)
from .._regression import RidgePolicy
from .._config import (
    DEFAULTS, effective_config, load_config, config_document, learner_config,
    synthetic_spec, voronoi_config)
from .._cli import (main, RunManifest, EXIT_OK, EXIT_INPUT, EXIT_ORACLE,
                    EXIT_USAGE)
from ._model import small_instance

class TestConfig(TestCase):
    """Tests of configuration files, profiles, and precedence."""
    def test_precedence(self):
        """Tests that flags beat files, which beat profile defaults."""
        opts = effective_config('learn')
        self.assertEqual(opts['horizon'], DEFAULTS['learn']['horizon'])
        self.assertEqual(opts['profile'], 'desk')
        opts = effective_config('learn', 'paper')
        self.assertEqual(opts['oracle_iters'], 10_000_000)
        opts = effective_config('learn', 'paper', {'oracle_iters': 5},
                                {'oracle_iters': None, 'horizon': 7})
        self.assertEqual((opts['oracle_iters'], opts['horizon']), (5, 7))
        opts = effective_config('learn', 'desk', {'horizon': 5}, {'horizon': 9})
        self.assertEqual(opts['horizon'], 9)
        with self.assertRaises(InstanceFormatError):
            effective_config('learn', 'desk', {'horizn': 5})
        with self.assertRaises(ValueError):
            effective_config('plot')
        with self.assertRaises(ValueError):
            effective_config('learn', 'cluster')
    def test_files(self):
        """Tests reading configuration documents and manifests."""
        opts = effective_config('bench', 'desk', None, {'K': 3})
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'cfg.json')
            with open(path, 'w') as fl:
                json.dump(config_document(opts), fl)
            self.assertEqual(effective_config('bench', 'desk', load_config(path)),
                             opts)
            # Manifests embed their configuration.
            with open(path, 'w') as fl:
                json.dump({"command": "bench", "config": config_document(opts)},
                          fl)
            self.assertEqual(load_config(path)['K'], 3)
            with open(path, 'w') as fl:
                json.dump({"version": "semiot-config-v0"}, fl)
            with self.assertRaises(InstanceFormatError):
                load_config(path)
            with open(path, 'w') as fl:
                fl.write('{"version": ')
            with self.assertRaises(InstanceFormatError):
                load_config(path)
    def test_builders(self):
        """Tests turning options into configuration objects."""
        cfg = learner_config(effective_config('learn', 'desk', None,
                                              {'rho_mode': 'paper',
                                               'explore_mode': 'deterministic',
                                               'explore_a': 5.0}))
        self.assertEqual(cfg.ridge, RidgePolicy.paper())
        self.assertEqual(cfg.schedule.mode, 'deterministic')
        spec = synthetic_spec(effective_config('bench', 'paper', None,
                                               {'seed': 4}))
        self.assertEqual((spec.n_instances, spec.master_seed), (1000, 4))
        self.assertEqual(spec.profile, 'paper')
        vc = voronoi_config(effective_config('voronoi'))
        self.assertEqual(vc.checkpoints, (10_000, 100_000))

class TestCommandLine(TestCase):
    """Tests of `semiot` commands run through `main`."""
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name
        self.instance = save_instance(small_instance(0.1, 2),
                                      os.path.join(self.dir, 'inst.json'))
    def tearDown(self):
        self.tmp.cleanup()
    def out(self, name):
        return os.path.join(self.dir, name)
    def test_usage(self):
        """Tests usage errors and missing inputs."""
        self.assertEqual(main(['-q']), EXIT_USAGE)
        self.assertEqual(main(['solve', self.instance, '--out', self.out('a'),
                               '--iters', '0', '-q']), EXIT_USAGE)
        self.assertEqual(main(['frobnicate', '--out', self.out('a')]),
                         EXIT_USAGE)
        self.assertEqual(main(['solve', self.out('missing.json'),
                               '--out', self.out('a'), '-q']), EXIT_INPUT)
        with open(self.out('bad.json'), 'w') as fl:
            fl.write('{"version": "semiot-instance-v1"}')
        self.assertEqual(main(['solve', self.out('bad.json'),
                               '--out', self.out('a'), '-q']), EXIT_INPUT)
    def test_solve(self):
        """Tests the solve command and its manifest."""
        out = self.out('solve')
        rc = main(['solve', self.instance, '--out', out, '--iters', '5000',
                   '--check-samples', '20000', '--check-tol', '0.5',
                   '--trace-every', '1000', '-q'])
        self.assertEqual(rc, EXIT_OK)
        with open(os.path.join(out, 'g.json')) as fl:
            doc = json.load(fl)
        self.assertEqual(len(doc['g']), 2)
        self.assertEqual(doc['g_normalized'][0], 0.0)
        man = RunManifest.load(os.path.join(out, 'manifest.json'))
        self.assertEqual(man.command, 'solve')
        self.assertEqual(set(man.outputs), {'g.json', 'trace.csv'})
        self.assertEqual(man.config['iters'], 5000)
        self.assertEqual(man.config['version'], 'semiot-config-v1')
        # The run is reproduced exactly.
        rc = main(['rerun', os.path.join(out, 'manifest.json'),
                   '--out', self.out('again'), '-q'])
        self.assertEqual(rc, EXIT_OK)
        # An unmet target check is an oracle failure.
        rc = main(['solve', self.instance, '--out', self.out('bad'),
                   '--iters', '3', '--check-samples', '20000',
                   '--check-tol', '1e-9', '-q'])
        self.assertEqual(rc, EXIT_ORACLE)
    def test_learn(self):
        """Tests the learn command, its scoring, and resuming."""
        out = self.out('learn')
        rc = main(['learn', self.instance, '--out', out, '--horizon', '500',
                   '--trace-every', '100', '--oracle', 'quantile',
                   '--oracle-iters', '100000', '--oracle-tol', '0.05', '-q'])
        self.assertEqual(rc, EXIT_OK)
        for f in ('trace.csv', 'points.csv', 'score.csv', 'checkpoint.json',
                  'oracle.json', 'manifest.json'):
            self.assertTrue(os.path.isfile(os.path.join(out, f)), f)
        with open(os.path.join(out, 'trace.csv')) as fl:
            self.assertEqual(len(fl.read().splitlines()), 501)
        ckpt = os.path.join(out, 'checkpoint.json')
        out2 = self.out('resumed')
        rc = main(['learn', self.instance, '--out', out2, '--horizon', '100',
                   '--oracle', 'none', '--resume', ckpt, '-q'])
        self.assertEqual(rc, EXIT_OK)
        with open(os.path.join(out2, 'trace.csv')) as fl:
            lines = fl.read().splitlines()
        self.assertEqual(len(lines), 101)
        self.assertTrue(lines[1].startswith('501,'))
        # A checkpoint cannot be resumed under another ridge mode.
        rc = main(['learn', self.instance, '--out', self.out('x'),
                   '--horizon', '10', '--oracle', 'none', '--rho-mode',
                   'paper', '--resume', ckpt, '-q'])
        self.assertEqual(rc, EXIT_INPUT)
        # Learner flags that disagree with the checkpoint are refused.
        rc = main(['learn', self.instance, '--out', self.out('y'),
                   '--horizon', '10', '--oracle', 'none', '--alpha', '10',
                   '--resume', ckpt, '-q'])
        self.assertEqual(rc, EXIT_INPUT)
        self.assertFalse(os.path.isfile(os.path.join(self.out('y'),
                                                     'checkpoint.json')))
        rc = main(['learn', self.instance, '--out', self.out('z'),
                   '--horizon', '10', '--oracle', 'none', '--alpha', '50',
                   '--resume', ckpt, '-q'])
        self.assertEqual(rc, EXIT_OK)
    def test_explore_modes(self):
        """Tests the short names of the exploration modes."""
        for mode in ('det', 'prob'):
            out = self.out(mode)
            rc = main(['learn', self.instance, '--out', out, '--horizon',
                       '300', '--oracle', 'none', '--explore-mode', mode, '-q'])
            self.assertEqual(rc, EXIT_OK, mode)
            man = RunManifest.load(os.path.join(out, 'manifest.json'))
            self.assertIn(man.config['explore_mode'], (mode, {
                'det': 'deterministic', 'prob': 'probabilistic'}[mode]))
        self.assertEqual(main(['learn', self.instance, '--out', self.out('g'),
                               '--explore-mode', 'greedy', '-q']), EXIT_USAGE)
